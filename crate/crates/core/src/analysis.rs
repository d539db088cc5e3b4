//! Structural analysis of built representations: the coefficient matrix `A`,
//! fixed vectors and quotients, commutants, invariant bilinear and
//! sesquilinear forms, dual representations, and the direction pre-order
//! induced by degenerate infinite-bond parameters.

use crate::dihedral::{DihedralParam, PairSide};
use crate::ggr::{Character, GgrDatum, GgrError, Representation};
use crate::homology::{connected_components, spanning_forest};
use crate::linalg::{
    in_span, nullspace, orthonormalize, re64, rref, vdot, vnorm, vscale, CMat, CVec, C_ONE,
    C_ZERO,
};
use crate::Settings;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("the given subspace is not inside the fixed subspace")]
    NotInsideFixedSpace,
    #[error("no invariant form: {0}")]
    NoForm(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Ggr(#[from] GgrError),
}

/// The coefficient matrix of the fixed-vector equations: `A v = 0` holds
/// exactly for the vectors fixed by the whole group.  Diagonal entries are 1;
/// the entry at `(i, j)` is minus half the coupling of `i` acting on `j`, so
/// every bond type (finite, recognised or generic infinite, directed, and
/// non-bonds) is covered by one rule.
pub fn matrix_a(d: &GgrDatum) -> CMat {
    let n = d.rank();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C_ONE
        } else {
            -d.coupling(i, j) * re64(0.5)
        }
    })
}

/// Rank and nullspace of `A` at the given tolerance; the nullspace vectors
/// are the fixed vectors of the representation the datum builds.
pub fn rank_and_nullspace(a: &CMat, tol: f64) -> (usize, Vec<CVec>) {
    (a.rank(tol), nullspace(a, tol))
}

/// The subspace fixed by every generator matrix, computed directly from the
/// matrices by stacking `M_s - I`.
pub fn fixed_subspace(rep: &Representation, tol: f64) -> Vec<CVec> {
    let n = rep.dim();
    let blocks: Vec<CMat> = rep
        .matrices
        .iter()
        .map(|m| m.sub(&CMat::identity(n)))
        .collect();
    let refs: Vec<&CMat> = blocks.iter().collect();
    nullspace(&CMat::vstack(&refs), tol)
}

fn require_connected(d: &GgrDatum, settings: &Settings) -> Result<(), StructureError> {
    let ag = d.associated_graph(settings);
    if connected_components(&ag.graph).len() != 1 {
        return Err(StructureError::PreconditionViolated(
            "the associated graph is disconnected; analyse the components separately".into(),
        ));
    }
    Ok(())
}

fn require_no_directed(d: &GgrDatum) -> Result<(), StructureError> {
    if d.has_directed_param() {
        return Err(StructureError::PreconditionViolated(
            "directed infinite-bond parameters are outside this criterion; \
             use the direction pre-order instead"
                .into(),
        ));
    }
    Ok(())
}

/// Irreducibility criterion: valid for connected associated graphs without
/// directed parameters, where it reduces to invertibility of `A`.
pub fn is_irreducible_ggr(d: &GgrDatum, settings: &Settings) -> Result<bool, StructureError> {
    require_connected(d, settings)?;
    require_no_directed(d)?;
    Ok(matrix_a(d).rank(settings.tol) == d.rank())
}

/// A quotient of a built representation by an invariant subspace, together
/// with the projection onto the chosen quotient coordinates.
#[derive(Clone, Debug)]
pub struct QuotientRep {
    pub rep: Representation,
    /// `(n - k) x n` matrix sending a vector to the coordinates of its class.
    pub projection: CMat,
    /// Standard coordinates kept as quotient basis, in selection order.
    pub kept_coordinates: Vec<usize>,
}

/// Quotient by a subspace of the fixed subspace spanned by `k_basis`.
/// With an empty `k_basis` this returns the representation itself.
pub fn r_representation_quotient(
    d: &GgrDatum,
    k_basis: &[CVec],
    settings: &Settings,
) -> Result<QuotientRep, StructureError> {
    let rep = d.build_representation();
    let v0 = orthonormalize(&fixed_subspace(&rep, settings.tol), settings.tol);
    for v in k_basis {
        if !in_span(&v0, v, settings.tol.max(1e-9)) {
            return Err(StructureError::NotInsideFixedSpace);
        }
    }
    quotient_by(&rep, k_basis, settings.tol)
}

/// Quotient by the full fixed subspace.  The result has dimension equal to
/// the rank of `A` and no nonzero fixed vectors of its own.
pub fn semisimple_quotient(d: &GgrDatum, settings: &Settings) -> QuotientRep {
    let rep = d.build_representation();
    let v0 = fixed_subspace(&rep, settings.tol);
    quotient_by(&rep, &v0, settings.tol).expect("fixed subspace is invariant")
}

/// Quotient `V / span(k)` in a basis extending `k` by standard coordinates,
/// chosen greedily by largest residual for numerical stability.
fn quotient_by(rep: &Representation, k: &[CVec], tol: f64) -> Result<QuotientRep, StructureError> {
    let n = rep.dim();
    let kb = orthonormalize(k, tol);
    let dk = kb.len();
    let mut onb = kb.clone();
    let mut chosen: Vec<usize> = Vec::new();
    while onb.len() < n {
        let mut best: Option<(usize, f64, CVec)> = None;
        for i in 0..n {
            if chosen.contains(&i) {
                continue;
            }
            let mut w = vec![C_ZERO; n];
            w[i] = C_ONE;
            for q in &onb {
                let f = vdot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= f * qi;
                }
            }
            let r = vnorm(&w);
            if best.as_ref().map_or(true, |(_, b, _)| r > b + 1e-12) {
                best = Some((i, r, w));
            }
        }
        let (i, r, w) = best.expect("fewer basis vectors than dimensions");
        if r <= tol {
            return Err(StructureError::Numerical(
                "could not extend the subspace basis to a full basis".into(),
            ));
        }
        onb.push(vscale(&w, re64(1.0 / r)));
        chosen.push(i);
    }
    // Change of basis: first the subspace, then the chosen coordinates.
    let p = CMat::from_fn(n, n, |i, j| {
        if j < dk {
            kb[j][i]
        } else if i == chosen[j - dk] {
            C_ONE
        } else {
            C_ZERO
        }
    });
    let pinv = p
        .inverse()
        .ok_or_else(|| StructureError::Numerical("change of basis is singular".into()))?;
    let q = n - dk;
    let mut matrices = Vec::with_capacity(rep.matrices.len());
    for m in &rep.matrices {
        let t = pinv.mul(m).mul(&p);
        // The subspace is invariant, so the lower-left block must vanish.
        let mut leak = 0.0f64;
        for i in dk..n {
            for j in 0..dk {
                leak = leak.max(t[(i, j)].norm());
            }
        }
        if leak > 1e-7 * t.max_abs().max(1.0) {
            return Err(StructureError::Numerical(format!(
                "subspace is not invariant (leak {leak:.2e})"
            )));
        }
        matrices.push(CMat::from_fn(q, q, |i, j| t[(i + dk, j + dk)]));
    }
    let projection = CMat::from_fn(q, n, |i, j| pinv[(i + dk, j)]);
    let reflection_vectors = (0..n)
        .take(rep.matrices.len())
        .map(|s| projection.col(s))
        .collect();
    Ok(QuotientRep {
        rep: Representation {
            generators: rep.generators.clone(),
            matrices,
            reflection_vectors,
        },
        projection,
        kept_coordinates: chosen,
    })
}

/// Canonical representative of a span: the nonzero rows of the reduced row
/// echelon form of the matrix with the given rows.
pub fn canonical_subspace(vectors: &[CVec], tol: f64) -> Vec<CVec> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let rr = rref(&CMat::from_rows(vectors), tol);
    (0..rr.rank)
        .map(|i| (0..rr.matrix.cols()).map(|j| rr.matrix[(i, j)]).collect())
        .collect()
}

/// Equality of kernels (as subspaces): for connected associated graphs two
/// quotients by fixed subspaces are isomorphic exactly when this holds.
pub fn same_kernel(k1: &[CVec], k2: &[CVec], tol: f64) -> bool {
    crate::linalg::subspaces_equal(k1, k2, tol)
}

/// Basis of the space of intertwiners `X` with `X M_s = N_s X` for all `s`.
pub fn hom_space(from: &Representation, to: &Representation, tol: f64) -> Vec<CMat> {
    assert_eq!(from.matrices.len(), to.matrices.len());
    let d1 = from.dim();
    let d2 = to.dim();
    let mut rows: Vec<CVec> = Vec::new();
    for (m1, m2) in from.matrices.iter().zip(&to.matrices) {
        for i in 0..d2 {
            for j in 0..d1 {
                let mut row = vec![C_ZERO; d2 * d1];
                for k in 0..d1 {
                    row[i * d1 + k] += m1[(k, j)];
                }
                for k in 0..d2 {
                    row[k * d1 + j] -= m2[(i, k)];
                }
                rows.push(row);
            }
        }
    }
    nullspace(&CMat::from_rows(&rows), tol)
        .into_iter()
        .map(|v| CMat::from_fn(d2, d1, |i, j| v[i * d1 + j]))
        .collect()
}

/// Dimension of the commutant `{X : X M_s = M_s X}`.
pub fn endomorphism_dimension(rep: &Representation, tol: f64) -> usize {
    hom_space(rep, rep, tol).len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormKind {
    Bilinear,
    Sesquilinear,
}

/// Character-based existence criterion for invariant forms on a connected
/// associated graph: bilinear forms exist when the character takes values in
/// `{1, -1}`, sesquilinear ones when all values have modulus 1.
pub fn invariant_form_exists_theorem(
    d: &GgrDatum,
    kind: FormKind,
    settings: &Settings,
) -> Result<bool, StructureError> {
    require_connected(d, settings)?;
    require_no_directed(d)?;
    let chi = d.associated_character(settings);
    let tol = settings.tol;
    Ok(match kind {
        FormKind::Bilinear => chi
            .values
            .iter()
            .all(|v| (v - C_ONE).norm() <= tol || (v + C_ONE).norm() <= tol),
        FormKind::Sesquilinear => chi.values.iter().all(|v| (v.norm() - 1.0).abs() <= tol),
    })
}

/// Residual of the invariance equations for a candidate form.
pub fn form_invariance_residual(rep: &Representation, b: &CMat, kind: FormKind) -> f64 {
    rep.matrices
        .iter()
        .map(|m| {
            let moved = match kind {
                FormKind::Bilinear => m.transpose().mul(b).mul(m),
                FormKind::Sesquilinear => m.transpose().mul(b).mul(&m.conj()),
            };
            moved.max_abs_diff(b)
        })
        .fold(0.0, f64::max)
}

/// Construct an invariant form by path transport when the existence
/// criterion holds: value 1 on the first basis vector, diagonal values moved
/// along a spanning tree by (squared) scalar ratios, off-diagonal entries
/// from the coupling rule.  The result is verified against the invariance
/// equations before being returned.
pub fn invariant_form_construct(
    d: &GgrDatum,
    kind: FormKind,
    settings: &Settings,
) -> Result<CMat, StructureError> {
    if !invariant_form_exists_theorem(d, kind, settings)? {
        return Err(StructureError::NoForm(
            "the character criterion rules out a form of this kind".into(),
        ));
    }
    let n = d.rank();
    let ag = d.associated_graph(settings);
    let forest = spanning_forest(&ag.graph);
    let mut diag = vec![C_ZERO; n];
    diag[0] = C_ONE;
    // Transport the diagonal along tree edges from the base vertex.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(tail, head) in &forest.forest_edges {
        adj[tail].push(head);
        adj[head].push(tail);
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        for &t in &adj[s] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            let ratio = d.ratio(s, t);
            diag[t] = diag[s]
                * match kind {
                    FormKind::Bilinear => ratio * ratio,
                    FormKind::Sesquilinear => re64(ratio.norm_sqr()),
                };
            queue.push_back(t);
        }
    }
    let mut b = CMat::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = diag[i];
    }
    for e in ag.graph.edges() {
        let (r, t) = (e.a, e.b);
        let c = d.coupling(r, t);
        match kind {
            FormKind::Bilinear => {
                let v = -c * re64(0.5) * diag[r];
                b[(r, t)] = v;
                b[(t, r)] = v;
            }
            FormKind::Sesquilinear => {
                b[(r, t)] = -c.conj() * re64(0.5) * diag[r];
                b[(t, r)] = -c * re64(0.5) * diag[r];
            }
        }
    }
    let rep = d.build_representation();
    let res = form_invariance_residual(&rep, &b, kind);
    if res > settings.tol * b.max_abs().max(1.0) {
        return Err(StructureError::NoForm(format!(
            "transport produced no invariant form (residual {res:.2e}); \
             the existence criterion does not apply to this datum"
        )));
    }
    Ok(b)
}

/// Ground truth: the full solution space of the invariance equations,
/// independent of any existence criterion.
pub fn invariant_form_oracle(rep: &Representation, kind: FormKind, tol: f64) -> Vec<CMat> {
    let n = rep.dim();
    let mut rows: Vec<CVec> = Vec::new();
    for m in &rep.matrices {
        let right = match kind {
            FormKind::Bilinear => m.clone(),
            FormKind::Sesquilinear => m.conj(),
        };
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![C_ZERO; n * n];
                // (M^T B R)_ij = sum_{k,l} M_ki B_kl R_lj
                for k in 0..n {
                    for l in 0..n {
                        row[k * n + l] += m[(k, i)] * right[(l, j)];
                    }
                }
                row[i * n + j] -= C_ONE;
                rows.push(row);
            }
        }
    }
    nullspace(&CMat::from_rows(&rows), tol)
        .into_iter()
        .map(|v| CMat::from_fn(n, n, |i, j| v[i * n + j]))
        .collect()
}

/// The dual action on `V*` in the dual basis, together with the reflection
/// vectors `gamma_s` of the dual generators; their coordinate matrix (column
/// `s` is `gamma_s`) is the transpose of `A`.
#[derive(Clone, Debug)]
pub struct DualRepresentation {
    pub rep: Representation,
    pub gamma: CMat,
}

pub fn dual_representation(d: &GgrDatum) -> DualRepresentation {
    let rep = d.build_representation();
    let gamma = matrix_a(d).transpose();
    let matrices: Vec<CMat> = rep.matrices.iter().map(|m| m.transpose()).collect();
    let reflection_vectors = (0..d.rank()).map(|s| gamma.col(s)).collect();
    DualRepresentation {
        rep: Representation {
            generators: rep.generators,
            matrices,
            reflection_vectors,
        },
        gamma,
    }
}

/// The character of the dual representation, extracted numerically: the dual
/// matrices are rewritten in the `gamma` basis, where they take the standard
/// pairwise-datum shape, and the scalar ratios are read off the couplings.
/// Requires an invertible `A` (otherwise the `gamma_s` do not form a basis)
/// and no directed parameters (dualising flips their direction).
pub fn dual_character(d: &GgrDatum, settings: &Settings) -> Result<Character, StructureError> {
    require_no_directed(d)?;
    let dual = dual_representation(d);
    let gamma_inv = dual.gamma.inverse().ok_or_else(|| {
        StructureError::PreconditionViolated(
            "the dual reflection vectors are dependent (A is singular); \
             the dual is not itself a pairwise-datum representation"
                .into(),
        )
    })?;
    let n = d.rank();
    let in_gamma: Vec<CMat> = dual
        .rep
        .matrices
        .iter()
        .map(|m| gamma_inv.mul(m).mul(&dual.gamma))
        .collect();
    for (s, m) in in_gamma.iter().enumerate() {
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j {
                    if i == s {
                        -C_ONE
                    } else {
                        C_ONE
                    }
                } else if i == s {
                    continue;
                } else {
                    C_ZERO
                };
                dev = dev.max((m[(i, j)] - expect).norm());
            }
        }
        if dev > 1e-7 * m.max_abs().max(1.0) {
            return Err(StructureError::Numerical(format!(
                "dual matrices are not in reflection shape (deviation {dev:.2e})"
            )));
        }
    }
    let ag = d.associated_graph(settings);
    let basis = spanning_forest(&ag.graph);
    let mut chi = crate::homology::EdgeCharacter::new();
    for e in ag.graph.edges() {
        // Read the coupling of the larger endpoint acting on the smaller.
        let actor = e.b;
        let kappa = d.param(e.a, e.b).coupling_of_actor(PairSide::Second);
        let coupling = in_gamma[actor][(actor, e.a)];
        if coupling.norm() == 0.0 {
            return Err(StructureError::Numerical(
                "dual coupling vanished on an edge of the associated graph".into(),
            ));
        }
        // value on the oriented edge (a -> b) is ratio(b, a) = coupling / kappa
        chi.insert(e.a, e.b, coupling / kappa)
            .map_err(|e| StructureError::Numerical(e.to_string()))?;
    }
    let values = basis
        .circuits
        .iter()
        .map(|c| {
            crate::homology::evaluate_on_path(&chi, &c.circuit)
                .map_err(|e| StructureError::Numerical(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Character { basis, values })
}

/// The datum whose representation is the dual: same pair parameters,
/// character values inverted.
pub fn dual_datum(d: &GgrDatum, settings: &Settings) -> Result<GgrDatum, StructureError> {
    require_no_directed(d)?;
    let chi = d.associated_character(settings);
    let dual_chi = Character {
        basis: chi.basis,
        values: chi.values.iter().map(|v| v.inv()).collect(),
    };
    Ok(GgrDatum::canonical_datum(
        d.coxeter().clone(),
        d.params().clone(),
        &dual_chi,
        settings,
    )?)
}

/// Directions on the edges of the associated graph: ordinary edges point
/// both ways, an edge carrying a directed parameter points from the
/// non-degenerate generator to the one whose line is invariant.  Reachability
/// downsets of the mutual-reachability classes span subrepresentations.
#[derive(Clone, Debug)]
pub struct DirectionPreorder {
    /// Directed edges `(from, to)`.
    pub arrows: Vec<(usize, usize)>,
    /// Mutual-reachability classes, each sorted, ordered by least element.
    pub classes: Vec<Vec<usize>>,
    /// For each class, every generator reachable from it (the class included).
    pub downsets: Vec<Vec<usize>>,
    /// Proper nonempty invariant coordinate spans: each downset distinct from
    /// the full generator set, and each downset minus its class.
    pub invariant_spans: Vec<Vec<usize>>,
    /// Verification residual of the spans under all generator matrices.
    pub max_invariance_residual: f64,
}

pub fn direction_preorder(d: &GgrDatum, settings: &Settings) -> DirectionPreorder {
    let n = d.rank();
    let ag = d.associated_graph(settings);
    let mut arrows: Vec<(usize, usize)> = Vec::new();
    for e in ag.graph.edges() {
        match d.param(e.a, e.b) {
            DihedralParam::VarrhoDir { sub } => {
                let (inv_line, other) = match sub {
                    PairSide::First => (e.a, e.b),
                    PairSide::Second => (e.b, e.a),
                };
                arrows.push((other, inv_line));
            }
            _ => {
                arrows.push((e.a, e.b));
                arrows.push((e.b, e.a));
            }
        }
    }
    arrows.sort_unstable();
    // Reachability closure (reach[i][j]: j reachable from i; reflexive).
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &arrows {
        out[a].push(b);
    }
    for i in 0..n {
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for &w in &out[v] {
                if !reach[i][w] {
                    reach[i][w] = true;
                    stack.push(w);
                }
            }
        }
    }
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if class_of[i] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = Vec::new();
        for j in i..n {
            if reach[i][j] && reach[j][i] {
                class_of[j] = id;
                members.push(j);
            }
        }
        classes.push(members);
    }
    let downsets: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..n).filter(|&j| reach[c[0]][j]).collect())
        .collect();
    let mut invariant_spans: Vec<Vec<usize>> = Vec::new();
    for (class, down) in classes.iter().zip(&downsets) {
        let strict: Vec<usize> = down.iter().copied().filter(|j| !class.contains(j)).collect();
        for cand in [down.clone(), strict] {
            if !cand.is_empty() && cand.len() < n && !invariant_spans.contains(&cand) {
                invariant_spans.push(cand);
            }
        }
    }
    invariant_spans.sort();
    let rep = d.build_representation();
    let mut residual = 0.0f64;
    for span in &invariant_spans {
        let inside = |j: usize| span.contains(&j);
        for m in &rep.matrices {
            for &t in span {
                let image = m.col(t);
                for (u, z) in image.iter().enumerate() {
                    if !inside(u) {
                        residual = residual.max(z.norm());
                    }
                }
            }
        }
    }
    DirectionPreorder {
        arrows,
        classes,
        downsets,
        invariant_spans,
        max_invariance_residual: residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coxeter::{BondOrder, CoxeterMatrix};
    use crate::ggr::{geometric_gram, verify_relations};
    use crate::linalg::{approx_eq_c, c64, subspaces_equal, vnorm_inf};
    use crate::Settings;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use std::collections::BTreeMap;

    fn fin(m: u32) -> BondOrder {
        BondOrder::Finite(m)
    }

    fn cycle_coxeter(rank: usize) -> CoxeterMatrix {
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

    /// Cycle datum with closing scalar `x` on the pair `(0, n)`.
    fn cycle_datum(n: usize, x: Complex64) -> GgrDatum {
        let m = cycle_coxeter(n + 1);
        let mut scalars = BTreeMap::new();
        scalars.insert((0, n), x);
        GgrDatum::new(m, BTreeMap::new(), scalars).unwrap()
    }

    #[test]
    fn matrix_a_of_cycle_has_corner_ratio_entries() {
        let x = c64(2.0, 1.0);
        let a = matrix_a(&cycle_datum(2, x));
        assert!(approx_eq_c(a[(0, 2)], -x * re64(0.5), 1e-12));
        assert!(approx_eq_c(a[(2, 0)], -x.inv() * re64(0.5), 1e-12));
        assert!(approx_eq_c(a[(0, 1)], re64(-0.5), 1e-12));
        for i in 0..3 {
            assert!(approx_eq_c(a[(i, i)], C_ONE, 1e-15));
        }
    }

    #[test]
    fn matrix_a_of_right_angled_group_is_identity() {
        let m = CoxeterMatrix::from_upper(&["a", "b", "c"], &[fin(2), fin(2), fin(2)]).unwrap();
        let a = matrix_a(&GgrDatum::geometric(m));
        assert!(a.deviation_from_identity() == 0.0);
    }

    #[test]
    fn matrix_a_of_generic_infinite_pair() {
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[BondOrder::Infinite]).unwrap();
        let mut params = BTreeMap::new();
        let z = c64(3.0, 1.0);
        params.insert((0, 1), DihedralParam::varrho_z(z));
        let d = GgrDatum::new(m, params, BTreeMap::new()).unwrap();
        let a = matrix_a(&d);
        let u = crate::dihedral::principal_sqrt(z);
        assert!(approx_eq_c(a[(0, 1)], -u * re64(0.5), 1e-12));
        assert!(approx_eq_c(a[(1, 0)], -u * re64(0.5), 1e-12));
    }

    #[test]
    fn determinant_of_cycle_matrix_matches_closed_form() {
        for n in [2usize, 3] {
            for x in [re64(2.0), re64(0.5), c64(1.0, 1.0)] {
                let det = matrix_a(&cycle_datum(n, x)).det();
                let expect = (re64(2.0) - x - x.inv()) / re64(2.0f64.powi(n as i32 + 1));
                assert!(
                    approx_eq_c(det, expect, 1e-10),
                    "n={n} x={x} det={det} expect={expect}"
                );
            }
        }
        let det = matrix_a(&cycle_datum(2, re64(2.0))).det();
        assert!((det - re64(-0.0625)).norm() < 1e-12);
    }

    #[test]
    fn rank_and_nullspace_of_singular_cycle() {
        let d = cycle_datum(3, re64(1.0));
        let a = matrix_a(&d);
        let (rank, null) = rank_and_nullspace(&a, 1e-9);
        assert_eq!(rank, 3);
        assert_eq!(null.len(), 1);
        let ones = vec![C_ONE; 4];
        let onb = orthonormalize(&null, 1e-9);
        assert!(in_span(&onb, &ones, 1e-9));
        let (rank2, null2) = rank_and_nullspace(&matrix_a(&cycle_datum(3, re64(2.0))), 1e-9);
        assert_eq!(rank2, 4);
        assert!(null2.is_empty());
    }

    #[test]
    fn fixed_subspace_matches_nullspace_of_a() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let m = crate::random::coxeter(&mut rng, 2..=5, 8, 0.3);
            let d = crate::random::datum(&mut rng, &m, &crate::random::DatumOptions::default());
            let rep = d.build_representation();
            let v0 = fixed_subspace(&rep, 1e-9);
            let a = matrix_a(&d);
            let (rank, null) = rank_and_nullspace(&a, 1e-9);
            assert_eq!(v0.len() + rank, d.rank());
            assert!(subspaces_equal(&v0, &null, 1e-8));
        }
    }

    #[test]
    fn irreducibility_of_cycle_data() {
        let settings = Settings::default();
        assert!(is_irreducible_ggr(&cycle_datum(2, re64(2.0)), &settings).unwrap());
        assert!(!is_irreducible_ggr(&cycle_datum(2, re64(1.0)), &settings).unwrap());
        let a2 = CoxeterMatrix::from_upper(&["s", "t"], &[fin(3)]).unwrap();
        assert!(is_irreducible_ggr(&GgrDatum::geometric(a2), &settings).unwrap());
    }

    #[test]
    fn irreducibility_rejects_out_of_scope_data() {
        let settings = Settings::default();
        let split = CoxeterMatrix::from_upper(&["a", "b"], &[fin(2)]).unwrap();
        assert!(matches!(
            is_irreducible_ggr(&GgrDatum::geometric(split), &settings),
            Err(StructureError::PreconditionViolated(_))
        ));
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[BondOrder::Infinite]).unwrap();
        let mut params = BTreeMap::new();
        params.insert((0, 1), DihedralParam::VarrhoDir { sub: PairSide::First });
        let d = GgrDatum::new(m, params, BTreeMap::new()).unwrap();
        assert!(matches!(
            is_irreducible_ggr(&d, &settings),
            Err(StructureError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn irreducibility_is_invariant_under_global_rescaling() {
        let settings = Settings::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let m = crate::random::coxeter(&mut rng, 2..=4, 8, 0.0);
            let opts = crate::random::DatumOptions { allow_directed: false, ..Default::default() };
            let d = crate::random::datum(&mut rng, &m, &opts);
            let lambda = crate::random::nonzero_scalar(&mut rng);
            let mut scalars = BTreeMap::new();
            for i in 0..d.rank() {
                for j in 0..d.rank() {
                    if i != j {
                        scalars.insert((i, j), d.scalar(i, j) * lambda);
                    }
                }
            }
            let rescaled =
                GgrDatum::new(d.coxeter().clone(), d.params().clone(), scalars).unwrap();
            match (
                is_irreducible_ggr(&d, &settings),
                is_irreducible_ggr(&rescaled, &settings),
            ) {
                (Ok(x), Ok(y)) => assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                other => panic!("mismatched verdicts {other:?}"),
            }
        }
    }

    #[test]
    fn semisimple_quotient_of_singular_cycle() {
        let settings = Settings::default();
        let d = cycle_datum(2, re64(1.0));
        let q = semisimple_quotient(&d, &settings);
        assert_eq!(q.rep.dim(), 2);
        let report = verify_relations(&q.rep, d.coxeter(), 1e-9);
        assert!(report.relations_hold(1e-9));
        assert!(report.all_reflections(1e-8));
        // No fixed vectors remain, and the quotient is irreducible: the
        // commutant is one-dimensional.
        assert!(fixed_subspace(&q.rep, 1e-9).is_empty());
        assert_eq!(endomorphism_dimension(&q.rep, 1e-9), 1);
        // Images of the reflection vectors are nonzero.
        for v in &q.rep.reflection_vectors {
            assert!(vnorm(v) > 1e-9);
        }
    }

    #[test]
    fn semisimple_quotient_of_irreducible_datum_is_identical() {
        let settings = Settings::default();
        let d = cycle_datum(2, re64(2.0));
        let q = semisimple_quotient(&d, &settings);
        let rep = d.build_representation();
        assert_eq!(q.rep.dim(), 3);
        for (a, b) in q.rep.matrices.iter().zip(&rep.matrices) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    /// Two disjoint cycles: generators 0..3 and 3..6 in one rank-6 system
    /// with bond 2 across.  The fixed subspace is two-dimensional.
    fn double_cycle() -> GgrDatum {
        let names: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let mut orders = vec![vec![fin(1); 6]; 6];
        let mut set = |i: usize, j: usize, m: u32| {
            orders[i][j] = fin(m);
            orders[j][i] = fin(m);
        };
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            set(i, j, 3);
        }
        for i in 0..3 {
            for j in 3..6 {
                set(i, j, 2);
            }
        }
        let m = CoxeterMatrix::new(names, orders).unwrap();
        GgrDatum::geometric(m)
    }

    #[test]
    fn quotients_of_a_product_datum() {
        let settings = Settings::default();
        let d = double_cycle();
        let rep = d.build_representation();
        let v0 = fixed_subspace(&rep, 1e-9);
        assert_eq!(v0.len(), 2);
        let full = semisimple_quotient(&d, &settings);
        assert_eq!(full.rep.dim(), 4);
        assert_eq!(endomorphism_dimension(&full.rep, 1e-9), 2);

        // K = 0 gives back the representation itself.
        let zero = r_representation_quotient(&d, &[], &settings).unwrap();
        for (a, b) in zero.rep.matrices.iter().zip(&rep.matrices) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }

        // Quotients by two different lines inside the fixed subspace are
        // isomorphic via an invertible intertwiner, though the kernels differ.
        let v1 = &v0[0];
        let v2 = &v0[1];
        let k1: Vec<CVec> = vec![v1.iter().zip(v2).map(|(a, b)| a + b).collect()];
        let k2: Vec<CVec> = vec![v1.iter().zip(v2).map(|(a, b)| a + re64(2.0) * b).collect()];
        assert!(!same_kernel(&k1, &k2, 1e-9));
        assert!(same_kernel(&k1, &k1.clone(), 1e-9));
        let q1 = r_representation_quotient(&d, &k1, &settings).unwrap();
        let q2 = r_representation_quotient(&d, &k2, &settings).unwrap();
        assert_eq!(q1.rep.dim(), 5);
        let homs = hom_space(&q1.rep, &q2.rep, 1e-9);
        assert!(!homs.is_empty());
        assert!(
            homs.iter().any(|x| x.rank(1e-7) == 5),
            "no invertible intertwiner found"
        );

        // A vector outside the fixed subspace is rejected.
        let mut bad = vec![C_ZERO; 6];
        bad[0] = C_ONE;
        assert!(matches!(
            r_representation_quotient(&d, &[bad], &settings),
            Err(StructureError::NotInsideFixedSpace)
        ));
    }

    #[test]
    fn endomorphisms_count_components() {
        let settings = Settings::default();
        // Irreducible: scalars only.
        let a3 = CoxeterMatrix::from_upper(&["s1", "s2", "s3"], &[fin(3), fin(2), fin(3)]).unwrap();
        let rep = GgrDatum::geometric(a3).build_representation();
        assert_eq!(endomorphism_dimension(&rep, 1e-9), 1);
        // Two components in the associated graph.
        let d = double_cycle();
        assert_eq!(
            connected_components(&d.associated_graph(&settings).graph).len(),
            2
        );
        assert_eq!(endomorphism_dimension(&d.build_representation(), 1e-9), 2);
        // Doubling a representation squares the scalar blocks.
        let small = GgrDatum::geometric(
            CoxeterMatrix::from_upper(&["s", "t"], &[fin(3)]).unwrap(),
        )
        .build_representation();
        let doubled: Vec<CMat> = small
            .matrices
            .iter()
            .map(|m| {
                CMat::from_fn(4, 4, |i, j| {
                    if (i < 2) == (j < 2) {
                        m[(i % 2, j % 2)]
                    } else {
                        C_ZERO
                    }
                })
            })
            .collect();
        let sum = Representation {
            generators: small.generators.clone(),
            matrices: doubled,
            reflection_vectors: vec![vec![C_ZERO; 4]; 2],
        };
        assert_eq!(endomorphism_dimension(&sum, 1e-9), 4);
    }

    #[test]
    fn form_existence_follows_the_character() {
        let settings = Settings::default();
        let geo = cycle_datum(2, re64(1.0));
        assert!(invariant_form_exists_theorem(&geo, FormKind::Bilinear, &settings).unwrap());
        assert!(invariant_form_exists_theorem(&geo, FormKind::Sesquilinear, &settings).unwrap());
        let minus = cycle_datum(2, re64(-1.0));
        assert!(invariant_form_exists_theorem(&minus, FormKind::Bilinear, &settings).unwrap());
        let two = cycle_datum(2, re64(2.0));
        assert!(!invariant_form_exists_theorem(&two, FormKind::Bilinear, &settings).unwrap());
        assert!(!invariant_form_exists_theorem(&two, FormKind::Sesquilinear, &settings).unwrap());
        let phase = cycle_datum(2, c64(0.0, 1.0));
        assert!(!invariant_form_exists_theorem(&phase, FormKind::Bilinear, &settings).unwrap());
        assert!(invariant_form_exists_theorem(&phase, FormKind::Sesquilinear, &settings).unwrap());
        // Disconnected associated graph: out of scope.
        let split = CoxeterMatrix::from_upper(&["a", "b"], &[fin(2)]).unwrap();
        assert!(matches!(
            invariant_form_exists_theorem(&GgrDatum::geometric(split), FormKind::Bilinear, &settings),
            Err(StructureError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn constructed_form_of_geometric_datum_is_the_classical_gram_matrix() {
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(
            &["a", "b", "c"],
            &[fin(4), BondOrder::Infinite, fin(3)],
        )
        .unwrap();
        let d = GgrDatum::geometric(m.clone());
        let b = invariant_form_construct(&d, FormKind::Bilinear, &settings).unwrap();
        assert!(b.max_abs_diff(&geometric_gram(&m)) < 1e-12);
    }

    #[test]
    fn constructed_form_matches_hand_computation_on_a_pair() {
        // Bond 3, a(r,t) = 2, a(t,r) = 1: diagonal (1, 4), off-diagonal -1.
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(&["r", "t"], &[fin(3)]).unwrap();
        let mut scalars = BTreeMap::new();
        scalars.insert((0, 1), re64(2.0));
        let d = GgrDatum::new(m, BTreeMap::new(), scalars).unwrap();
        let b = invariant_form_construct(&d, FormKind::Bilinear, &settings).unwrap();
        assert!(approx_eq_c(b[(0, 0)], C_ONE, 1e-12));
        assert!(approx_eq_c(b[(1, 1)], re64(4.0), 1e-12));
        assert!(approx_eq_c(b[(0, 1)], re64(-1.0), 1e-12));
        assert!(approx_eq_c(b[(1, 0)], re64(-1.0), 1e-12));
    }

    #[test]
    fn constructed_form_of_rank_one_group() {
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(&["s"], &[]).unwrap();
        let d = GgrDatum::geometric(m);
        let b = invariant_form_construct(&d, FormKind::Bilinear, &settings).unwrap();
        assert_eq!(b.rows(), 1);
        assert!(approx_eq_c(b[(0, 0)], C_ONE, 1e-15));
    }

    #[test]
    fn constructed_forms_are_invariant_and_annihilate_fixed_vectors() {
        let settings = Settings::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut built = 0;
        for _ in 0..60 {
            let m = crate::random::coxeter(&mut rng, 2..=5, 6, 0.2);
            let opts = crate::random::DatumOptions {
                allow_directed: false,
                unimodular_scalars: true,
                real_z: true,
                ..Default::default()
            };
            let d = crate::random::datum(&mut rng, &m, &opts);
            let ag = d.associated_graph(&settings);
            if connected_components(&ag.graph).len() != 1 {
                continue;
            }
            for kind in [FormKind::Bilinear, FormKind::Sesquilinear] {
                let exists = invariant_form_exists_theorem(&d, kind, &settings).unwrap();
                if !exists {
                    continue;
                }
                let b = invariant_form_construct(&d, kind, &settings).unwrap();
                built += 1;
                let rep = d.build_representation();
                assert!(form_invariance_residual(&rep, &b, kind) < 1e-9);
                if kind == FormKind::Bilinear {
                    assert!(b.max_abs_diff(&b.transpose()) == 0.0);
                }
                for v in fixed_subspace(&rep, 1e-9) {
                    assert!(vnorm_inf(&b.mul_vec(&v)) < 1e-9);
                }
            }
        }
        assert!(built > 10, "generator produced too few in-scope data ({built})");
    }

    #[test]
    fn oracle_agrees_with_criterion_and_handles_out_of_scope_data() {
        let settings = Settings::default();
        // Unique form on an irreducible geometric representation.
        let a2 = GgrDatum::geometric(
            CoxeterMatrix::from_upper(&["s", "t"], &[fin(3)]).unwrap(),
        );
        let rep = a2.build_representation();
        assert_eq!(invariant_form_oracle(&rep, FormKind::Bilinear, 1e-9).len(), 1);
        assert_eq!(invariant_form_oracle(&rep, FormKind::Sesquilinear, 1e-9).len(), 1);
        // Character value 2 kills both kinds.
        let two = cycle_datum(2, re64(2.0)).build_representation();
        assert!(invariant_form_oracle(&two, FormKind::Bilinear, 1e-9).is_empty());
        assert!(invariant_form_oracle(&two, FormKind::Sesquilinear, 1e-9).is_empty());
        // A directed parameter in a circuit of finite bonds: the criterion
        // refuses, and the solution space is indeed zero.
        let m = CoxeterMatrix::from_upper(
            &["s", "t", "r"],
            &[BondOrder::Infinite, fin(3), fin(3)],
        )
        .unwrap();
        let mut params = BTreeMap::new();
        params.insert((0, 1), DihedralParam::VarrhoDir { sub: PairSide::First });
        let d = GgrDatum::new(m, params, BTreeMap::new()).unwrap();
        assert!(matches!(
            invariant_form_exists_theorem(&d, FormKind::Bilinear, &settings),
            Err(StructureError::PreconditionViolated(_))
        ));
        let rep = d.build_representation();
        assert!(invariant_form_oracle(&rep, FormKind::Bilinear, 1e-9).is_empty());
    }

    #[test]
    fn dual_of_self_dual_datum_and_inversion_of_character() {
        let settings = Settings::default();
        // Trivial character: self-dual.
        let a2 = GgrDatum::geometric(
            CoxeterMatrix::from_upper(&["s", "t"], &[fin(3)]).unwrap(),
        );
        let chi = dual_character(&a2, &settings).unwrap();
        assert!(chi.values.is_empty());
        let dd = dual_datum(&a2, &settings).unwrap();
        assert!(a2.isomorphic(&dd, &settings).unwrap());

        // Cycle with x = 2: the dual carries 1/2, and dualising twice
        // returns to the original.
        let d = cycle_datum(2, re64(2.0));
        let chi = dual_character(&d, &settings).unwrap();
        assert_eq!(chi.values.len(), 1);
        assert!(approx_eq_c(chi.values[0], re64(0.5), 1e-9));
        let dd = dual_datum(&d, &settings).unwrap();
        assert!(dd.isomorphic(&GgrDatum::canonical_datum(
            d.coxeter().clone(),
            d.params().clone(),
            &chi,
            &settings
        ).unwrap(), &settings).unwrap());
        let back = dual_datum(&dd, &settings).unwrap();
        assert!(d.isomorphic(&back, &settings).unwrap());
    }

    #[test]
    fn dual_reflection_vectors_are_rows_of_a() {
        let d = cycle_datum(2, c64(1.0, 2.0));
        let dual = dual_representation(&d);
        let a = matrix_a(&d);
        assert!(dual.gamma.max_abs_diff(&a.transpose()) == 0.0);
        for (s, m) in dual.rep.matrices.iter().enumerate() {
            let gamma_s = dual.gamma.col(s);
            let image = m.mul_vec(&gamma_s);
            let back: CVec = image.iter().zip(&gamma_s).map(|(x, y)| x + y).collect();
            assert!(vnorm_inf(&back) < 1e-12, "gamma_{s} is not flipped");
        }
    }

    #[test]
    fn dual_of_non_semisimple_datum_has_invariant_gamma_span() {
        let settings = Settings::default();
        let d = cycle_datum(2, re64(1.0));
        assert!(matches!(
            dual_character(&d, &settings),
            Err(StructureError::PreconditionViolated(_))
        ));
        let dual = dual_representation(&d);
        let cols: Vec<CVec> = (0..3).map(|j| dual.gamma.col(j)).collect();
        let span = orthonormalize(&cols, 1e-9);
        assert_eq!(span.len(), 2);
        for m in &dual.rep.matrices {
            // span invariant, and the quotient action trivial: (M - I) maps
            // everything into the span.
            for j in 0..3 {
                assert!(in_span(&span, &m.mul_vec(&cols[j]), 1e-9));
                let col: CVec = (0..3).map(|i| m[(i, j)] - CMat::identity(3)[(i, j)]).collect();
                assert!(in_span(&span, &col, 1e-9));
            }
        }
    }

    #[test]
    fn preorder_of_finite_bonds_is_symmetric() {
        let settings = Settings::default();
        let a2 = GgrDatum::geometric(
            CoxeterMatrix::from_upper(&["s", "t"], &[fin(3)]).unwrap(),
        );
        let p = direction_preorder(&a2, &settings);
        assert_eq!(p.arrows, vec![(0, 1), (1, 0)]);
        assert_eq!(p.classes, vec![vec![0, 1]]);
        assert_eq!(p.downsets, vec![vec![0, 1]]);
        assert!(p.invariant_spans.is_empty());
    }

    #[test]
    fn preorder_of_square_with_two_directed_bonds() {
        // Vertices s, t, u, r; bonds st = 3, ur = 3; tu and sr infinite with
        // the lines of u and r invariant.  The span of alpha_u, alpha_r is a
        // subrepresentation.
        let settings = Settings::default();
        let names = ["s", "t", "u", "r"];
        let mut orders = vec![vec![fin(1); 4]; 4];
        let mut set = |i: usize, j: usize, m: BondOrder| {
            orders[i][j] = m;
            orders[j][i] = m;
        };
        set(0, 1, fin(3));
        set(2, 3, fin(3));
        set(1, 2, BondOrder::Infinite);
        set(0, 3, BondOrder::Infinite);
        set(0, 2, fin(2));
        set(1, 3, fin(2));
        let m = CoxeterMatrix::new(
            names.iter().map(|s| s.to_string()).collect(),
            orders,
        )
        .unwrap();
        let mut params = BTreeMap::new();
        // Pair (t, u) = (1, 2): invariant line at u = Second.
        params.insert((1, 2), DihedralParam::VarrhoDir { sub: PairSide::Second });
        // Pair (s, r) = (0, 3): invariant line at r = Second.
        params.insert((0, 3), DihedralParam::VarrhoDir { sub: PairSide::Second });
        let d = GgrDatum::new(m, params, BTreeMap::new()).unwrap();
        let p = direction_preorder(&d, &settings);
        assert_eq!(p.classes, vec![vec![0, 1], vec![2, 3]]);
        assert!(p.arrows.contains(&(1, 2)));
        assert!(!p.arrows.contains(&(2, 1)));
        assert!(p.arrows.contains(&(0, 3)));
        assert_eq!(p.invariant_spans, vec![vec![2, 3]]);
        assert!(p.max_invariance_residual < 1e-12);
    }

    #[test]
    fn preorder_of_directed_chain_gives_a_filtration() {
        let settings = Settings::default();
        let m = CoxeterMatrix::from_upper(
            &["a", "b", "c"],
            &[BondOrder::Infinite, fin(2), BondOrder::Infinite],
        )
        .unwrap();
        let mut params = BTreeMap::new();
        // a -> b (line of b invariant), b -> c (line of c invariant).
        params.insert((0, 1), DihedralParam::VarrhoDir { sub: PairSide::Second });
        params.insert((1, 2), DihedralParam::VarrhoDir { sub: PairSide::Second });
        let d = GgrDatum::new(m, params, BTreeMap::new()).unwrap();
        let p = direction_preorder(&d, &settings);
        assert_eq!(p.classes, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(p.downsets, vec![vec![0, 1, 2], vec![1, 2], vec![2]]);
        assert_eq!(p.invariant_spans, vec![vec![1, 2], vec![2]]);
        assert!(p.max_invariance_residual < 1e-12);
    }
}
