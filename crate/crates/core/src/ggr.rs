//! Building representations from pairwise data, and classifying them by a
//! reduced graph together with a character on its first homology.
//!
//! A datum consists of one catalogue parameter per unordered generator pair
//! (rank-two type of the restriction) and one nonzero scalar `a(r, t)` per
//! ordered pair (basis normalisation).  Generator `r` then acts on the basis
//! `(alpha_s)` by
//!
//! ```text
//! r . alpha_r = -alpha_r
//! r . alpha_t = alpha_t + c * a(r,t)/a(t,r) * alpha_r      (t != r)
//! ```
//!
//! where `c` is the coupling of the pair's parameter.  Two data over the
//! same Coxeter matrix give isomorphic representations exactly when their
//! parameters agree and the scalar ratios define the same character on the
//! circuits of the reduced graph.

use crate::coxeter::{coxeter_graph, BondOrder, CoxeterError, CoxeterMatrix, LabeledGraph};
use crate::dihedral::{cos_k_pi_m, DihedralParam, PairSide};
use crate::homology::{
    connected_components, evaluate_on_path, spanning_forest, CircuitBasis, EdgeCharacter,
};
use crate::linalg::{approx_eq_c, re64, CMat, CVec, C_ONE, C_ZERO};
use crate::Settings;
use num_complex::Complex64;
use num_integer::gcd;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GgrError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("data are defined over different Coxeter systems")]
    DifferentGroups,
    #[error("character basis does not match the canonical circuit basis")]
    BasisMismatch,
    #[error("data are not isomorphic")]
    NotIsomorphic,
}

/// Pairwise datum defining a representation spanned by reflection
/// eigenvectors `alpha_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct GgrDatum {
    coxeter: CoxeterMatrix,
    /// One parameter per unordered pair, keyed `(i, j)` with `i < j`;
    /// `PairSide::First` refers to `i`.
    params: BTreeMap<(usize, usize), DihedralParam>,
    /// Stored scalars on ordered pairs; absent means 1.
    scalars: BTreeMap<(usize, usize), Complex64>,
}

impl GgrDatum {
    /// Validating constructor.  Missing pair parameters default to the
    /// geometric choice (`k = 1` on finite bonds, `z = 4` on infinite ones);
    /// missing scalars default to 1.
    pub fn new(
        coxeter: CoxeterMatrix,
        params: BTreeMap<(usize, usize), DihedralParam>,
        scalars: BTreeMap<(usize, usize), Complex64>,
    ) -> Result<Self, GgrError> {
        let n = coxeter.rank();
        for &(i, j) in params.keys() {
            if i >= j || j >= n {
                return Err(GgrError::InvalidDatum(format!(
                    "parameter key ({i}, {j}) is not an ordered pair of generators"
                )));
            }
        }
        let mut full = BTreeMap::new();
        for (i, j) in coxeter.pairs() {
            let order = coxeter.order(i, j);
            let param = match params.get(&(i, j)) {
                Some(p) => *p,
                None => match order {
                    BondOrder::Finite(m) => DihedralParam::RhoK { m, k: 1 },
                    BondOrder::Infinite => DihedralParam::VarrhoZ { z: re64(4.0) },
                },
            };
            match (order, &param) {
                (BondOrder::Finite(m), DihedralParam::RhoK { m: pm, k }) => {
                    if *pm != m {
                        return Err(GgrError::InvalidDatum(format!(
                            "pair ({i}, {j}) has bond order {m} but parameter order {pm}"
                        )));
                    }
                    if *k < 1 || 2 * k > m {
                        return Err(GgrError::InvalidDatum(format!(
                            "pair ({i}, {j}): k = {k} out of range for order {m}"
                        )));
                    }
                }
                (BondOrder::Finite(_), _) => {
                    return Err(GgrError::InvalidDatum(format!(
                        "pair ({i}, {j}) has a finite bond and needs a rho-type parameter"
                    )));
                }
                (BondOrder::Infinite, DihedralParam::RhoK { .. }) => {
                    return Err(GgrError::InvalidDatum(format!(
                        "pair ({i}, {j}) has an infinite bond and cannot carry rho_k"
                    )));
                }
                (BondOrder::Infinite, _) => {}
            }
            full.insert((i, j), param);
        }
        for (&(i, j), a) in &scalars {
            if i == j || i >= n || j >= n {
                return Err(GgrError::InvalidDatum(format!(
                    "scalar key ({i}, {j}) is not an ordered pair of generators"
                )));
            }
            if a.norm() == 0.0 {
                return Err(GgrError::InvalidDatum(format!(
                    "scalar on ({i}, {j}) must be nonzero"
                )));
            }
        }
        Ok(GgrDatum { coxeter, params: full, scalars })
    }

    /// The datum of the classical geometric representation: `k = 1` on
    /// finite bonds, `z = 4` on infinite ones, all scalars 1.
    pub fn geometric(coxeter: CoxeterMatrix) -> Self {
        GgrDatum::new(coxeter, BTreeMap::new(), BTreeMap::new())
            .expect("geometric defaults are always valid")
    }

    pub fn coxeter(&self) -> &CoxeterMatrix {
        &self.coxeter
    }

    pub fn rank(&self) -> usize {
        self.coxeter.rank()
    }

    /// Parameter of the unordered pair `{i, j}`.
    pub fn param(&self, i: usize, j: usize) -> &DihedralParam {
        let key = if i < j { (i, j) } else { (j, i) };
        &self.params[&key]
    }

    pub fn params(&self) -> &BTreeMap<(usize, usize), DihedralParam> {
        &self.params
    }

    /// The scalar `a(i, j)` attached to generator `i` within the pair
    /// `{i, j}`; unset scalars are 1.
    pub fn scalar(&self, i: usize, j: usize) -> Complex64 {
        self.scalars.get(&(i, j)).copied().unwrap_or(C_ONE)
    }

    pub fn scalars(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.scalars
    }

    /// `a(i, j) / a(j, i)`.
    pub fn ratio(&self, i: usize, j: usize) -> Complex64 {
        self.scalar(i, j) / self.scalar(j, i)
    }

    /// Coefficient of `alpha_r` in `r . alpha_t`, i.e. the parameter's
    /// coupling times the scalar ratio.
    pub fn coupling(&self, r: usize, t: usize) -> Complex64 {
        assert_ne!(r, t);
        let actor = if r < t { PairSide::First } else { PairSide::Second };
        self.param(r, t).coupling_of_actor(actor) * self.ratio(r, t)
    }

    /// Whether any pair carries a directed (`varrho_dir`) parameter.
    pub fn has_directed_param(&self) -> bool {
        self.params
            .values()
            .any(|p| matches!(p, DihedralParam::VarrhoDir { .. }))
    }

    /// The reduced bond order of a pair: the order of the image of the
    /// corresponding dihedral subgroup in the pair's representation.
    fn reduced_order(&self, i: usize, j: usize, settings: &Settings) -> BondOrder {
        match (self.coxeter.order(i, j), self.param(i, j)) {
            (BondOrder::Finite(m), DihedralParam::RhoK { k, .. }) => {
                BondOrder::Finite(m / gcd(m, *k))
            }
            (BondOrder::Infinite, DihedralParam::VarrhoZ { z }) => {
                if z.norm() <= settings.tol {
                    BondOrder::Finite(2)
                } else if let Some(m) = rational_angle_order(*z, settings) {
                    BondOrder::Finite(m)
                } else {
                    BondOrder::Infinite
                }
            }
            (BondOrder::Infinite, DihedralParam::VarrhoDir { .. }) => BondOrder::Infinite,
            _ => unreachable!("datum validated at construction"),
        }
    }

    /// The reduced Coxeter matrix and its Coxeter graph.  Vertices are the
    /// generators; a pair is an edge exactly when its reduced order is at
    /// least 3 (equivalently: the pair's parameter does not split).
    pub fn associated_graph(&self, settings: &Settings) -> AssociatedGraph {
        let names = self.coxeter.generators().to_vec();
        let n = names.len();
        let mut orders = vec![vec![BondOrder::Finite(1); n]; n];
        for (i, j) in self.coxeter.pairs() {
            let m = self.reduced_order(i, j, settings);
            orders[i][j] = m;
            orders[j][i] = m;
        }
        let reduced = CoxeterMatrix::new(names, orders).expect("reduced orders are >= 2");
        let graph = coxeter_graph(&reduced);
        AssociatedGraph { reduced_coxeter: reduced, graph }
    }

    /// The classifying character: scalar ratios read as an edge character on
    /// the associated graph, evaluated on the canonical circuit basis.
    pub fn associated_character(&self, settings: &Settings) -> Character {
        let ag = self.associated_graph(settings);
        let basis = spanning_forest(&ag.graph);
        let chi = self.edge_character(&ag);
        let values = basis
            .circuits
            .iter()
            .map(|c| evaluate_on_path(&chi, &c.circuit).expect("values on all edges"))
            .collect();
        Character { basis, values }
    }

    /// Edge character on the associated graph: `(r, t) -> a(t,r) / a(r,t)`.
    pub fn edge_character(&self, ag: &AssociatedGraph) -> EdgeCharacter {
        let mut chi = EdgeCharacter::new();
        for e in ag.graph.edges() {
            chi.insert(e.a, e.b, self.ratio(e.b, e.a))
                .expect("scalars are nonzero");
        }
        chi
    }

    /// Explicit generator matrices in the basis `(alpha_s)`.
    pub fn build_representation(&self) -> Representation {
        let n = self.rank();
        let mut matrices = Vec::with_capacity(n);
        for r in 0..n {
            let mut m = CMat::identity(n);
            m[(r, r)] = -C_ONE;
            for t in 0..n {
                if t != r {
                    m[(r, t)] = self.coupling(r, t);
                }
            }
            matrices.push(m);
        }
        let reflection_vectors = (0..n)
            .map(|s| {
                let mut v = vec![C_ZERO; n];
                v[s] = C_ONE;
                v
            })
            .collect();
        Representation {
            generators: self.coxeter.generators().to_vec(),
            matrices,
            reflection_vectors,
        }
    }

    /// The datum realising a prescribed character: all scalars 1 except on
    /// each non-forest edge `(i, j)`, where `a(j, i)` is set to the
    /// character's value on that circuit.
    pub fn canonical_datum(
        coxeter: CoxeterMatrix,
        params: BTreeMap<(usize, usize), DihedralParam>,
        chi: &Character,
        settings: &Settings,
    ) -> Result<GgrDatum, GgrError> {
        let base = GgrDatum::new(coxeter, params, BTreeMap::new())?;
        let ag = base.associated_graph(settings);
        let basis = spanning_forest(&ag.graph);
        if chi.basis != basis {
            return Err(GgrError::BasisMismatch);
        }
        if chi.values.len() != basis.circuits.len() {
            return Err(GgrError::BasisMismatch);
        }
        let mut scalars = BTreeMap::new();
        for (c, v) in basis.circuits.iter().zip(&chi.values) {
            if v.norm() == 0.0 {
                return Err(GgrError::InvalidDatum(
                    "character values must be nonzero".into(),
                ));
            }
            scalars.insert((c.chord.head, c.chord.tail), *v);
        }
        GgrDatum::new(base.coxeter, base.params, scalars)
    }

    fn params_agree(&self, other: &GgrDatum, tol: f64) -> bool {
        self.params.iter().all(|(key, p)| match (p, &other.params[key]) {
            (DihedralParam::RhoK { k: k1, .. }, DihedralParam::RhoK { k: k2, .. }) => k1 == k2,
            (DihedralParam::VarrhoZ { z: z1 }, DihedralParam::VarrhoZ { z: z2 }) => {
                approx_eq_c(*z1, *z2, tol)
            }
            (DihedralParam::VarrhoDir { sub: s1 }, DihedralParam::VarrhoDir { sub: s2 }) => {
                s1 == s2
            }
            _ => false,
        })
    }

    /// Isomorphism test: same Coxeter matrix (else an error), same pair
    /// parameters, same character on the canonical circuit basis.
    pub fn isomorphic(&self, other: &GgrDatum, settings: &Settings) -> Result<bool, GgrError> {
        if self.coxeter != other.coxeter {
            return Err(GgrError::DifferentGroups);
        }
        if !self.params_agree(other, settings.tol) {
            return Ok(false);
        }
        let c1 = self.associated_character(settings);
        let c2 = other.associated_character(settings);
        Ok(c1
            .values
            .iter()
            .zip(&c2.values)
            .all(|(a, b)| approx_eq_c(*a, *b, settings.tol)))
    }

    /// The diagonal intertwiner from this datum's representation to an
    /// isomorphic one, normalised to 1 at the smallest vertex of each
    /// component of the associated graph.
    pub fn intertwiner(&self, other: &GgrDatum, settings: &Settings) -> Result<CMat, GgrError> {
        if !self.isomorphic(other, settings)? {
            return Err(GgrError::NotIsomorphic);
        }
        let n = self.rank();
        let ag = self.associated_graph(settings);
        let adj = ag.graph.adjacency();
        let mut diag = vec![C_ZERO; n];
        for comp in connected_components(&ag.graph) {
            let base = comp[0];
            diag[base] = C_ONE;
            let mut queue = std::collections::VecDeque::from([base]);
            let mut seen = vec![false; n];
            seen[base] = true;
            while let Some(s) = queue.pop_front() {
                for &t in &adj[s] {
                    if seen[t] {
                        continue;
                    }
                    seen[t] = true;
                    // phi(alpha_t) = phi(alpha_s) * (a(s,t) b(t,s)) / (a(t,s) b(s,t))
                    let f = (self.scalar(s, t) * other.scalar(t, s))
                        / (self.scalar(t, s) * other.scalar(s, t));
                    diag[t] = diag[s] * f;
                    queue.push_back(t);
                }
            }
        }
        let phi = CMat::from_fn(n, n, |i, j| if i == j { diag[i] } else { C_ZERO });
        debug_assert!({
            let r1 = self.build_representation();
            let r2 = other.build_representation();
            intertwining_residual(&phi, &r1, &r2) <= 1e-6
        });
        Ok(phi)
    }

    pub fn parse(text: &str) -> Result<Self, GgrError> {
        let doc: DatumDoc =
            serde_json::from_str(text).map_err(|e| GgrError::Malformed(e.to_string()))?;
        let coxeter = CoxeterMatrix::new(doc.coxeter.generators, doc.coxeter.orders)?;
        let lookup = |name: &str| {
            coxeter
                .generator_index(name)
                .ok_or_else(|| GgrError::InvalidDatum(format!("unknown generator {name:?}")))
        };
        let mut params = BTreeMap::new();
        for p in doc.params {
            let (pair, param) = match p {
                ParamDoc::Rho { pair, k } => {
                    let i = lookup(&pair[0])?;
                    let j = lookup(&pair[1])?;
                    let order = coxeter.order(i, j);
                    let m = order.finite().ok_or_else(|| {
                        GgrError::InvalidDatum(format!(
                            "pair [{}, {}] has an infinite bond and cannot carry rho_k",
                            pair[0], pair[1]
                        ))
                    })?;
                    ((i, j), DihedralParam::RhoK { m, k })
                }
                ParamDoc::VarrhoZ { pair, z } => {
                    let i = lookup(&pair[0])?;
                    let j = lookup(&pair[1])?;
                    ((i, j), DihedralParam::VarrhoZ { z: Complex64::new(z[0], z[1]) })
                }
                ParamDoc::VarrhoDir { pair, sub } => {
                    let i = lookup(&pair[0])?;
                    let j = lookup(&pair[1])?;
                    let s = lookup(&sub)?;
                    let side = if s == i.min(j) {
                        PairSide::First
                    } else if s == i.max(j) {
                        PairSide::Second
                    } else {
                        return Err(GgrError::InvalidDatum(format!(
                            "sub generator {sub:?} is not an endpoint of the pair"
                        )));
                    };
                    ((i, j), DihedralParam::VarrhoDir { sub: side })
                }
            };
            let key = (pair.0.min(pair.1), pair.0.max(pair.1));
            if pair.0 == pair.1 {
                return Err(GgrError::InvalidDatum("parameter pair repeats a generator".into()));
            }
            if params.insert(key, param).is_some() {
                return Err(GgrError::InvalidDatum(format!(
                    "duplicate parameter for pair ({}, {})",
                    key.0, key.1
                )));
            }
        }
        let mut scalars = BTreeMap::new();
        for s in doc.scalars {
            let i = lookup(&s.from)?;
            let j = lookup(&s.to)?;
            if scalars
                .insert((i, j), Complex64::new(s.a[0], s.a[1]))
                .is_some()
            {
                return Err(GgrError::InvalidDatum(format!(
                    "duplicate scalar for ({}, {})",
                    s.from, s.to
                )));
            }
        }
        GgrDatum::new(coxeter, params, scalars)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let name = |i: usize| self.coxeter.generator_name(i).to_string();
        let params: Vec<ParamDoc> = self
            .params
            .iter()
            .map(|(&(i, j), p)| match p {
                DihedralParam::RhoK { k, .. } => {
                    ParamDoc::Rho { pair: [name(i), name(j)], k: *k }
                }
                DihedralParam::VarrhoZ { z } => {
                    ParamDoc::VarrhoZ { pair: [name(i), name(j)], z: [z.re, z.im] }
                }
                DihedralParam::VarrhoDir { sub } => {
                    let s = match sub {
                        PairSide::First => i,
                        PairSide::Second => j,
                    };
                    ParamDoc::VarrhoDir { pair: [name(i), name(j)], sub: name(s) }
                }
            })
            .collect();
        let scalars: Vec<ScalarDoc> = self
            .scalars
            .iter()
            .map(|(&(i, j), a)| ScalarDoc { from: name(i), to: name(j), a: [a.re, a.im] })
            .collect();
        serde_json::json!({
            "coxeter": self.coxeter.to_json_value(),
            "params": params,
            "scalars": scalars,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("serializable")
    }
}

/// Recognise `z = 4 cos^2(k pi / m)` for coprime `1 <= k < m/2`, `m` up to
/// the configured bound; returns the order `m` of the smallest match.
pub fn rational_angle_order(z: Complex64, settings: &Settings) -> Option<u32> {
    if z.im.abs() > settings.tol {
        return None;
    }
    for m in 3..=settings.angle_max_m {
        for k in 1..m {
            if 2 * k >= m {
                break;
            }
            if gcd(k, m) != 1 {
                continue;
            }
            let val = 4.0 * cos_k_pi_m(k, m).powi(2);
            if (z - re64(val)).norm() <= settings.tol {
                return Some(m);
            }
        }
    }
    None
}

/// The reduced Coxeter matrix of a datum together with its Coxeter graph.
#[derive(Clone, Debug)]
pub struct AssociatedGraph {
    pub reduced_coxeter: CoxeterMatrix,
    pub graph: LabeledGraph,
}

/// A character presented by its values on the canonical circuit basis.
#[derive(Clone, Debug)]
pub struct Character {
    pub basis: CircuitBasis,
    pub values: Vec<Complex64>,
}

impl Character {
    pub fn agrees_with(&self, other: &Character, tol: f64) -> bool {
        self.basis == other.basis
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| approx_eq_c(*a, *b, tol))
    }
}

/// A representation given by one matrix per generator, together with a
/// reflection eigenvector per generator (`M_s v_s = -v_s`).
#[derive(Clone, Debug)]
pub struct Representation {
    pub generators: Vec<String>,
    pub matrices: Vec<CMat>,
    pub reflection_vectors: Vec<CVec>,
}

impl Representation {
    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.rows())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut matrices = serde_json::Map::new();
        for (name, m) in self.generators.iter().zip(&self.matrices) {
            matrices.insert(
                name.clone(),
                serde_json::to_value(cmat_to_pairs(m)).expect("serializable"),
            );
        }
        serde_json::json!({
            "basis": self.generators,
            "matrices": matrices,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("serializable")
    }
}

/// Complex matrix as rows of `[re, im]` pairs.
pub fn cmat_to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn cmat_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat, GgrError> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != rows[0].len()) {
        return Err(GgrError::Malformed("matrix rows are empty or ragged".into()));
    }
    Ok(CMat::from_fn(r, rows[0].len(), |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Parse a representation document `{"basis": [names], "matrices": {...}}`;
/// returns the generator names in basis order with their matrices.
pub fn parse_representation_matrices(text: &str) -> Result<(Vec<String>, Vec<CMat>), GgrError> {
    #[derive(Deserialize)]
    struct RepDoc {
        basis: Vec<String>,
        matrices: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    }
    let doc: RepDoc =
        serde_json::from_str(text).map_err(|e| GgrError::Malformed(e.to_string()))?;
    if doc.basis.len() != doc.matrices.len() {
        return Err(GgrError::Malformed(
            "basis and matrices must list the same generators".into(),
        ));
    }
    let mut out = Vec::new();
    let mut dim = None;
    for name in &doc.basis {
        let rows = doc
            .matrices
            .get(name)
            .ok_or_else(|| GgrError::Malformed(format!("no matrix for generator {name:?}")))?;
        let m = cmat_from_pairs(rows)?;
        if !m.is_square() {
            return Err(GgrError::Malformed(format!("matrix for {name:?} is not square")));
        }
        match dim {
            None => dim = Some(m.rows()),
            Some(d) if d == m.rows() => {}
            Some(d) => {
                return Err(GgrError::Malformed(format!(
                    "matrix for {name:?} has side {} but expected {d}",
                    m.rows()
                )))
            }
        }
        out.push(m);
    }
    Ok((doc.basis, out))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ParamDoc {
    Rho { pair: [String; 2], k: u32 },
    VarrhoZ { pair: [String; 2], z: [f64; 2] },
    VarrhoDir { pair: [String; 2], sub: String },
}

#[derive(Serialize, Deserialize)]
struct ScalarDoc {
    from: String,
    to: String,
    a: [f64; 2],
}

#[derive(Deserialize)]
struct DatumDoc {
    coxeter: CoxeterDocInner,
    #[serde(default)]
    params: Vec<ParamDoc>,
    #[serde(default)]
    scalars: Vec<ScalarDoc>,
}

#[derive(Deserialize)]
struct CoxeterDocInner {
    generators: Vec<String>,
    orders: Vec<Vec<BondOrder>>,
}

/// One verification entry: a defining relation or a reflection-shape check.
#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub label: String,
    pub kind: CheckKind,
    pub deviation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// `M_s^2 = I`.
    Involution,
    /// `(M_r M_t)^{m_rt} = I` for finite bonds.
    Braid,
    /// Eigenvalues `{-1, 1, ..., 1}`: an involution with trace `n - 2`.
    Reflection,
}

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn max_relation_deviation(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.kind != CheckKind::Reflection)
            .map(|c| c.deviation)
            .fold(0.0, f64::max)
    }

    pub fn relations_hold(&self, tol: f64) -> bool {
        self.max_relation_deviation() <= tol
    }

    pub fn all_reflections(&self, tol: f64) -> bool {
        self.checks
            .iter()
            .filter(|c| c.kind == CheckKind::Reflection)
            .all(|c| c.deviation <= tol)
    }

    pub fn ok(&self, tol: f64) -> bool {
        self.relations_hold(tol) && self.all_reflections(tol)
    }
}

/// Check every defining relation of the Coxeter system against the matrices,
/// and additionally that each generator acts as a reflection.
pub fn verify_relations(rep: &Representation, m: &CoxeterMatrix, _tol: f64) -> RelationReport {
    let n = rep.dim();
    let mut checks = Vec::new();
    for (i, name) in m.generators().iter().enumerate() {
        let sq = rep.matrices[i].pow(2);
        let inv_dev = sq.deviation_from_identity();
        checks.push(RelationCheck {
            label: format!("{name}^2"),
            kind: CheckKind::Involution,
            deviation: inv_dev,
        });
        let trace_dev = (rep.matrices[i].trace() - re64(n as f64 - 2.0)).norm();
        checks.push(RelationCheck {
            label: format!("{name} reflection"),
            kind: CheckKind::Reflection,
            deviation: inv_dev.max(trace_dev),
        });
    }
    for (i, j) in m.pairs() {
        if let BondOrder::Finite(ord) = m.order(i, j) {
            let prod = rep.matrices[i].mul(&rep.matrices[j]);
            let dev = prod.pow(ord).deviation_from_identity();
            checks.push(RelationCheck {
                label: format!(
                    "({} {})^{ord}",
                    m.generator_name(i),
                    m.generator_name(j)
                ),
                kind: CheckKind::Braid,
                deviation: dev,
            });
        }
    }
    RelationReport { checks }
}

/// Max-abs residual of `phi M1_s - M2_s phi` over all generators.
pub fn intertwining_residual(phi: &CMat, from: &Representation, to: &Representation) -> f64 {
    from.matrices
        .iter()
        .zip(&to.matrices)
        .map(|(m1, m2)| phi.mul(m1).max_abs_diff(&m2.mul(phi)))
        .fold(0.0, f64::max)
}

/// The classical geometric representation, built directly from the bond
/// orders: `s . alpha_t = alpha_t + 2 cos(pi / m_st) alpha_s` with the
/// convention `cos(pi / infinity) = 1`.
pub fn geometric_representation(m: &CoxeterMatrix) -> Representation {
    let n = m.rank();
    let coupling = |i: usize, j: usize| match m.order(i, j) {
        BondOrder::Finite(ord) => re64(2.0 * cos_k_pi_m(1, ord)),
        BondOrder::Infinite => re64(2.0),
    };
    let mut matrices = Vec::with_capacity(n);
    for r in 0..n {
        let mut mat = CMat::identity(n);
        mat[(r, r)] = -C_ONE;
        for t in 0..n {
            if t != r {
                mat[(r, t)] = coupling(r, t);
            }
        }
        matrices.push(mat);
    }
    let reflection_vectors = (0..n)
        .map(|s| {
            let mut v = vec![C_ZERO; n];
            v[s] = C_ONE;
            v
        })
        .collect();
    Representation {
        generators: m.generators().to_vec(),
        matrices,
        reflection_vectors,
    }
}

/// The canonical invariant symmetric form of the geometric representation:
/// `(alpha_r | alpha_t) = -cos(pi / m_rt)`, with `-cos(pi/1) = 1` on the
/// diagonal and value `-1` on infinite bonds.
pub fn geometric_gram(m: &CoxeterMatrix) -> CMat {
    let n = m.rank();
    CMat::from_fn(n, n, |i, j| match m.order(i, j) {
        BondOrder::Finite(ord) => re64(-cos_k_pi_m(1, ord)),
        BondOrder::Infinite => re64(-1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use rand::{Rng, SeedableRng};

    fn fin(m: u32) -> BondOrder {
        BondOrder::Finite(m)
    }

    fn a_tilde(n: usize) -> CoxeterMatrix {
        // Cycle of n+1 generators, consecutive bonds 3, everything else 2.
        let rank = n + 1;
        let names: Vec<String> = (0..rank).map(|i| format!("s{i}")).collect();
        let mut orders = vec![vec![fin(1); rank]; rank];
        for i in 0..rank {
            for j in i + 1..rank {
                let adjacent = j == i + 1 || (i == 0 && j == rank - 1);
                let m = if adjacent { fin(3) } else { fin(2) };
                orders[i][j] = m;
                orders[j][i] = m;
            }
        }
        CoxeterMatrix::new(names, orders).unwrap()
    }

    /// Four generators s,t,r,u with bonds st=3, sr=5, su=3, tr=6, tu=4, ru=2
    /// and the parameter choice k_st = k_su = 1, k_sr = k_tr = k_tu = 2.
    fn worked_example() -> GgrDatum {
        let m = CoxeterMatrix::from_upper(
            &["s", "t", "r", "u"],
            &[fin(3), fin(5), fin(3), fin(6), fin(4), fin(2)],
        )
        .unwrap();
        let mut params = BTreeMap::new();
        params.insert((0, 2), DihedralParam::RhoK { m: 5, k: 2 });
        params.insert((1, 2), DihedralParam::RhoK { m: 6, k: 2 });
        params.insert((1, 3), DihedralParam::RhoK { m: 4, k: 2 });
        GgrDatum::new(m, params, BTreeMap::new()).unwrap()
    }

    #[test]
    fn build_matches_geometric_construction() {
        let m = CoxeterMatrix::from_upper(
            &["a", "b", "c"],
            &[fin(3), BondOrder::Infinite, fin(4)],
        )
        .unwrap();
        let d = GgrDatum::geometric(m.clone());
        let built = d.build_representation();
        let geo = geometric_representation(&m);
        for (x, y) in built.matrices.iter().zip(&geo.matrices) {
            assert!(x.max_abs_diff(y) < 1e-14);
        }
    }

    #[test]
    fn rank_one_build() {
        let m = CoxeterMatrix::from_upper(&["s"], &[]).unwrap();
        let rep = GgrDatum::geometric(m).build_representation();
        assert_eq!(rep.dim(), 1);
        assert!((rep.matrices[0][(0, 0)] + C_ONE).norm() == 0.0);
    }

    #[test]
    fn pair_datum_is_a_conjugated_catalogue_representation() {
        // Scalars p, q turn rho_k into D rho_k D^{-1} with D = diag(p, q).
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[fin(5)]).unwrap();
        let mut params = BTreeMap::new();
        params.insert((0, 1), DihedralParam::RhoK { m: 5, k: 2 });
        let mut scalars = BTreeMap::new();
        let p = c64(2.0, 1.0);
        let q = c64(0.5, -0.3);
        scalars.insert((0, 1), p);
        scalars.insert((1, 0), q);
        let d = GgrDatum::new(m, params, scalars).unwrap();
        let rep = d.build_representation();
        let cat = crate::dihedral::rho_k_matrices(5, 2).unwrap();
        let diag = CMat::from_rows(&[vec![p, C_ZERO], vec![C_ZERO, q]]);
        let dinv = diag.inverse().unwrap();
        for (mine, theirs) in rep.matrices.iter().zip([&cat.first, &cat.second]) {
            let conj = diag.mul(theirs).mul(&dinv);
            assert!(mine.max_abs_diff(&conj) < 1e-12);
        }
    }

    #[test]
    fn relations_hold_on_random_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = crate::random::coxeter(&mut rng, 2..=5, 8, 0.3);
            let d = crate::random::datum(&mut rng, &m, &crate::random::DatumOptions::default());
            let rep = d.build_representation();
            let report = verify_relations(&rep, &m, 1e-9);
            assert!(
                report.relations_hold(1e-9),
                "max deviation {}",
                report.max_relation_deviation()
            );
            assert!(report.all_reflections(1e-8));
        }
    }

    #[test]
    fn identity_matrices_pass_relations_but_fail_reflection_shape() {
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[fin(3)]).unwrap();
        let rep = Representation {
            generators: m.generators().to_vec(),
            matrices: vec![CMat::identity(2), CMat::identity(2)],
            reflection_vectors: vec![vec![C_ONE, C_ZERO], vec![C_ZERO, C_ONE]],
        };
        let report = verify_relations(&rep, &m, 1e-9);
        assert!(report.relations_hold(1e-12));
        assert!(!report.all_reflections(1e-8));
    }

    #[test]
    fn associated_graph_of_worked_example() {
        let d = worked_example();
        let ag = d.associated_graph(&Settings::default());
        // k_tu = 2 on bond 4 halves the order to 2: the edge {t, u} is gone.
        assert!(!ag.graph.has_edge(1, 3));
        assert_eq!(ag.graph.edge_label(1, 2), Some(fin(3)));
        assert_eq!(ag.graph.edge_label(0, 2), Some(fin(5)));
        assert_eq!(ag.graph.edge_count(), 4);
        assert_eq!(ag.reduced_coxeter.order(1, 3), fin(2));
    }

    #[test]
    fn character_of_worked_example() {
        // One circuit; with a(t, r) = x the value on the path (s,r,t,s) is x
        // and the canonical circuit (t,r,s,t) carries 1/x.
        let base = worked_example();
        let x = c64(2.0, 0.5);
        let mut scalars = BTreeMap::new();
        scalars.insert((1, 2), x);
        let d = GgrDatum::new(base.coxeter.clone(), base.params.clone(), scalars).unwrap();
        let settings = Settings::default();
        let chi = d.associated_character(&settings);
        assert_eq!(chi.basis.circuits.len(), 1);
        assert_eq!(chi.basis.circuits[0].circuit, vec![1, 2, 0, 1]);
        assert!(approx_eq_c(chi.values[0], x.inv(), 1e-12));
        let ag = d.associated_graph(&settings);
        let edge_chi = d.edge_character(&ag);
        let reversed_walk = [0, 2, 1, 0];
        let v = evaluate_on_path(&edge_chi, &reversed_walk).unwrap();
        assert!(approx_eq_c(v, x, 1e-12));
    }

    #[test]
    fn cycle_datum_character_value() {
        // Closing scalar a(0, n) = x gives character value x on the canonical circuit.
        for n in [2usize, 3] {
            let m = a_tilde(n);
            let x = c64(1.5, -0.25);
            let mut scalars = BTreeMap::new();
            scalars.insert((0, n), x);
            let d = GgrDatum::new(m, BTreeMap::new(), scalars).unwrap();
            let chi = d.associated_character(&Settings::default());
            assert_eq!(chi.values.len(), 1);
            assert!(approx_eq_c(chi.values[0], x, 1e-12));
        }
    }

    #[test]
    fn canonical_datum_round_trip() {
        let settings = Settings::default();
        let m = a_tilde(3);
        let x = c64(0.5, 2.0);
        let mut scalars = BTreeMap::new();
        scalars.insert((0, 3), x);
        let d = GgrDatum::new(m.clone(), BTreeMap::new(), scalars).unwrap();
        let chi = d.associated_character(&settings);
        let canon =
            GgrDatum::canonical_datum(m.clone(), BTreeMap::new(), &chi, &settings).unwrap();
        // The canonical datum concentrates the value on the chord, oriented
        // head over tail.
        let chord = chi.basis.circuits[0].chord;
        assert!(approx_eq_c(canon.scalar(chord.head, chord.tail), x, 1e-12));
        let round = canon.associated_character(&settings);
        assert!(chi.agrees_with(&round, 1e-9));
        assert!(d.isomorphic(&canon, &settings).unwrap());
    }

    #[test]
    fn canonical_datum_rejects_wrong_basis() {
        let settings = Settings::default();
        let m = a_tilde(2);
        let d = GgrDatum::geometric(a_tilde(3));
        let chi = d.associated_character(&settings);
        let err = GgrDatum::canonical_datum(m, BTreeMap::new(), &chi, &settings).unwrap_err();
        assert!(matches!(err, GgrError::BasisMismatch));
    }

    #[test]
    fn isomorphism_depends_only_on_character() {
        let settings = Settings::default();
        let m = a_tilde(2);
        let mk = |x: Complex64| {
            let mut scalars = BTreeMap::new();
            scalars.insert((0, 2), x);
            GgrDatum::new(m.clone(), BTreeMap::new(), scalars).unwrap()
        };
        let d1 = mk(re64(2.0));
        let d2 = mk(re64(3.0));
        assert!(!d1.isomorphic(&d2, &settings).unwrap());
        assert!(d1.isomorphic(&d1.clone(), &settings).unwrap());

        // Rescaling every scalar at one vertex leaves the character alone.
        let mut scalars = d1.scalars.clone();
        let lambda = c64(0.0, 2.0);
        for t in [1usize, 2] {
            let cur = scalars.get(&(0, t)).copied().unwrap_or(C_ONE);
            scalars.insert((0, t), cur * lambda);
        }
        let d3 = GgrDatum::new(m.clone(), BTreeMap::new(), scalars).unwrap();
        assert!(d1.isomorphic(&d3, &settings).unwrap());
        let phi = d1.intertwiner(&d3, &settings).unwrap();
        let res = intertwining_residual(&phi, &d1.build_representation(), &d3.build_representation());
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn different_parameters_are_not_isomorphic() {
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[fin(5)]).unwrap();
        let mut p1 = BTreeMap::new();
        p1.insert((0, 1), DihedralParam::RhoK { m: 5, k: 1 });
        let mut p2 = BTreeMap::new();
        p2.insert((0, 1), DihedralParam::RhoK { m: 5, k: 2 });
        let d1 = GgrDatum::new(m.clone(), p1, BTreeMap::new()).unwrap();
        let d2 = GgrDatum::new(m.clone(), p2, BTreeMap::new()).unwrap();
        assert!(!d1.isomorphic(&d2, &settings).unwrap());
        assert!(matches!(
            d1.intertwiner(&d2, &settings),
            Err(GgrError::NotIsomorphic)
        ));
        let other = CoxeterMatrix::from_upper(&["x", "y"], &[fin(5)]).unwrap();
        let d3 = GgrDatum::geometric(other);
        assert!(matches!(d1.isomorphic(&d3, &settings), Err(GgrError::DifferentGroups)));
    }

    #[test]
    fn global_rescaling_gives_identity_intertwiner() {
        let settings = Settings::default();
        let m = a_tilde(2);
        let mut scalars = BTreeMap::new();
        scalars.insert((0, 2), c64(2.0, 1.0));
        let d1 = GgrDatum::new(m.clone(), BTreeMap::new(), scalars.clone()).unwrap();
        let lambda = c64(0.7, -0.2);
        let mut rescaled = BTreeMap::new();
        for (i, j) in m.pairs() {
            let a_ij = scalars.get(&(i, j)).copied().unwrap_or(C_ONE);
            let a_ji = scalars.get(&(j, i)).copied().unwrap_or(C_ONE);
            rescaled.insert((i, j), a_ij * lambda);
            rescaled.insert((j, i), a_ji * lambda);
        }
        let d2 = GgrDatum::new(m.clone(), BTreeMap::new(), rescaled).unwrap();
        let phi = d1.intertwiner(&d2, &settings).unwrap();
        assert!(phi.deviation_from_identity() < 1e-12);
    }

    #[test]
    fn rational_angle_search_recognises_orders() {
        let settings = Settings::default();
        assert_eq!(rational_angle_order(re64(1.0), &settings), Some(3));
        assert_eq!(rational_angle_order(re64(2.0), &settings), Some(4));
        assert_eq!(rational_angle_order(re64(3.0), &settings), Some(6));
        let z5 = re64(4.0 * cos_k_pi_m(2, 5).powi(2));
        assert_eq!(rational_angle_order(z5, &settings), Some(5));
        assert_eq!(rational_angle_order(re64(4.0), &settings), None);
        assert_eq!(rational_angle_order(re64(3.5), &settings), None);
        assert_eq!(rational_angle_order(c64(1.0, 0.5), &settings), None);
    }

    #[test]
    fn infinite_bond_labels() {
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[BondOrder::Infinite]).unwrap();
        let mk = |p: DihedralParam| {
            let mut params = BTreeMap::new();
            params.insert((0, 1), p);
            GgrDatum::new(m.clone(), params, BTreeMap::new()).unwrap()
        };
        let z_angle = mk(DihedralParam::varrho_z(re64(1.0)));
        assert_eq!(
            z_angle.associated_graph(&settings).reduced_coxeter.order(0, 1),
            fin(3)
        );
        let zero = mk(DihedralParam::varrho_z(C_ZERO));
        let ag = zero.associated_graph(&settings);
        assert_eq!(ag.reduced_coxeter.order(0, 1), fin(2));
        assert_eq!(ag.graph.edge_count(), 0);
        let dir = mk(DihedralParam::VarrhoDir { sub: PairSide::First });
        assert_eq!(
            dir.associated_graph(&settings).reduced_coxeter.order(0, 1),
            BondOrder::Infinite
        );
        let generic = mk(DihedralParam::varrho_z(c64(2.0, 2.0)));
        assert_eq!(
            generic.associated_graph(&settings).reduced_coxeter.order(0, 1),
            BondOrder::Infinite
        );
    }

    #[test]
    fn datum_parsing_round_trip_and_validation() {
        let text = r#"{
            "coxeter": {"generators": ["r", "t", "u"],
                        "orders": [[1, 5, "inf"], [5, 1, 3], ["inf", 3, 1]]},
            "params": [
                {"pair": ["r", "t"], "kind": "rho", "k": 2},
                {"pair": ["r", "u"], "kind": "varrho_dir", "sub": "u"}
            ],
            "scalars": [{"from": "r", "to": "t", "a": [2.0, -1.0]}]
        }"#;
        let d = GgrDatum::parse(text).unwrap();
        assert_eq!(d.param(0, 1), &DihedralParam::RhoK { m: 5, k: 2 });
        assert_eq!(
            d.param(0, 2),
            &DihedralParam::VarrhoDir { sub: PairSide::Second }
        );
        // The pair (1, 2) fell back to the geometric default.
        assert_eq!(d.param(1, 2), &DihedralParam::RhoK { m: 3, k: 1 });
        assert!(approx_eq_c(d.scalar(0, 1), c64(2.0, -1.0), 1e-15));
        assert_eq!(d.scalar(1, 0), C_ONE);
        let round = GgrDatum::parse(&d.to_json()).unwrap();
        assert_eq!(d, round);

        let bad = r#"{
            "coxeter": {"generators": ["r", "t"], "orders": [[1, 4], [4, 1]]},
            "params": [{"pair": ["r", "t"], "kind": "rho", "k": 3}]
        }"#;
        assert!(matches!(GgrDatum::parse(bad), Err(GgrError::InvalidDatum(_))));
        let zero_scalar = r#"{
            "coxeter": {"generators": ["r", "t"], "orders": [[1, 4], [4, 1]]},
            "scalars": [{"from": "r", "to": "t", "a": [0.0, 0.0]}]
        }"#;
        assert!(matches!(GgrDatum::parse(zero_scalar), Err(GgrError::InvalidDatum(_))));
    }

    #[test]
    fn geometric_form_is_invariant_under_random_words() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = CoxeterMatrix::from_upper(
            &["a", "b", "c"],
            &[fin(4), BondOrder::Infinite, fin(3)],
        )
        .unwrap();
        let rep = geometric_representation(&m);
        let b = geometric_gram(&m);
        for _ in 0..50 {
            let len = rng.gen_range(1..12);
            let mut w = CMat::identity(3);
            for _ in 0..len {
                let g = rng.gen_range(0..3);
                w = w.mul(&rep.matrices[g]);
            }
            let pulled = w.transpose().mul(&b).mul(&w);
            assert!(pulled.max_abs_diff(&b) < 1e-9);
        }
    }

    #[test]
    fn data_factor_through_reduced_systems() {
        // A datum with non-primitive k gives, entry for entry, the matrices
        // of the reduced datum over the reduced Coxeter matrix.
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(&["a", "b", "c"], &[fin(6), fin(4), fin(10)]).unwrap();
        let mut params = BTreeMap::new();
        params.insert((0, 1), DihedralParam::RhoK { m: 6, k: 2 });
        params.insert((0, 2), DihedralParam::RhoK { m: 4, k: 2 });
        params.insert((1, 2), DihedralParam::RhoK { m: 10, k: 4 });
        let mut scalars = BTreeMap::new();
        scalars.insert((0, 1), c64(2.0, 0.5));
        scalars.insert((2, 1), c64(-1.0, 1.0));
        let d = GgrDatum::new(m, params, scalars.clone()).unwrap();
        let reduced_m = d.associated_graph(&settings).reduced_coxeter.clone();
        assert_eq!(reduced_m.order(0, 1), fin(3));
        assert_eq!(reduced_m.order(0, 2), fin(2));
        assert_eq!(reduced_m.order(1, 2), fin(5));
        let mut reduced_params = BTreeMap::new();
        reduced_params.insert((0, 1), DihedralParam::RhoK { m: 3, k: 1 });
        reduced_params.insert((0, 2), DihedralParam::RhoK { m: 2, k: 1 });
        reduced_params.insert((1, 2), DihedralParam::RhoK { m: 5, k: 2 });
        let reduced = GgrDatum::new(reduced_m, reduced_params, scalars).unwrap();
        let r1 = d.build_representation();
        let r2 = reduced.build_representation();
        for (x, y) in r1.matrices.iter().zip(&r2.matrices) {
            assert!(x.max_abs_diff(y) < 1e-14);
        }
    }
}
