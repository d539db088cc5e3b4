//! Factoring reflection representations through quotient Coxeter groups.
//!
//! A family of reflections satisfying the defining relations may have
//! proportional reflection vectors across generators joined by finite bonds;
//! such generators are forced to act identically.  Merging them yields a
//! partition of the generator set, a quotient Coxeter group on the blocks
//! (bond orders are gcds of the finite cross-block orders), and an induced
//! representation of the quotient in which reflection vectors of generators
//! with finite bonds are independent.  Conversely, representations of the
//! quotient pull back along the projection.

use crate::coxeter::{BondOrder, CoxeterMatrix};
use crate::ggr::{verify_relations, Representation};
use crate::linalg::{re64, vdot, vnorm, vscale, vsub, CMat, CVec};
use crate::Settings;
use num_integer::gcd;
use thiserror::Error;

/// Partition enumeration is exponential; ranks above this are refused.
pub const MAX_ENUMERATION_RANK: usize = 12;

/// Matrices further than this from reflection shape are rejected, and
/// same-class matrices further apart than this are reported as inconsistent.
const REFLECTION_TOL: f64 = 1e-8;
/// Tolerance for proportionality of normalized reflection vectors.
const PROPORTIONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("rank {0} exceeds the enumeration bound {MAX_ENUMERATION_RANK}")]
    TooLarge(usize),
    #[error("not a partition of the generator set: {0}")]
    NotAPartition(String),
    #[error("the partition is not admissible")]
    NotAdmissible,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("matrix {index} is not a reflection (deviation {deviation:.2e})")]
    NotAReflection { index: usize, deviation: f64 },
    #[error(
        "reflection vectors span only {spanned} of {needed} dimensions; \
         restrict to their span first"
    )]
    SpanDeficient { spanned: usize, needed: usize },
    #[error("defining relations violated: {0}")]
    RelationsViolated(String),
    #[error(
        "generators {a} and {b} have proportional reflection vectors on a \
         finite bond but act by different matrices"
    )]
    ClassMatrixMismatch { a: usize, b: usize },
}

/// A set partition of the generators, blocks and elements sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorPartition {
    blocks: Vec<Vec<usize>>,
}

impl GeneratorPartition {
    pub fn new(blocks: Vec<Vec<usize>>, rank: usize) -> Result<Self, FactorError> {
        let mut seen = vec![false; rank];
        for b in &blocks {
            if b.is_empty() {
                return Err(FactorError::NotAPartition("empty block".into()));
            }
            for &s in b {
                if s >= rank {
                    return Err(FactorError::NotAPartition(format!(
                        "generator index {s} out of range for rank {rank}"
                    )));
                }
                if seen[s] {
                    return Err(FactorError::NotAPartition(format!(
                        "generator {s} appears in two blocks"
                    )));
                }
                seen[s] = true;
            }
        }
        if let Some(miss) = seen.iter().position(|x| !x) {
            return Err(FactorError::NotAPartition(format!(
                "generator {miss} is not covered"
            )));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort();
        Ok(GeneratorPartition { blocks })
    }

    pub fn trivial(rank: usize) -> Self {
        GeneratorPartition { blocks: vec![(0..rank).collect()] }
    }

    pub fn discrete(rank: usize) -> Self {
        GeneratorPartition { blocks: (0..rank).map(|s| vec![s]).collect() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, s: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&s))
            .expect("generator in some block")
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }
}

/// Gcd of the finite bond orders between two blocks (`Infinite` when none).
pub fn cross_bond_gcd(m: &CoxeterMatrix, bi: &[usize], bj: &[usize]) -> BondOrder {
    let mut g: Option<u32> = None;
    for &r in bi {
        for &t in bj {
            if let BondOrder::Finite(ord) = m.order(r, t) {
                g = Some(match g {
                    None => ord,
                    Some(x) => gcd(x, ord),
                });
            }
        }
    }
    match g {
        None => BondOrder::Infinite,
        Some(x) => BondOrder::Finite(x),
    }
}

fn block_finite_bond_connected(m: &CoxeterMatrix, block: &[usize]) -> bool {
    let mut seen = vec![false; block.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..block.len() {
            if !seen[j] && m.order(block[i], block[j]).is_finite() {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Both admissibility conditions: every cross-block gcd exceeds 1, and each
/// block is connected in the graph of finite bonds.
pub fn is_admissible(p: &GeneratorPartition, m: &CoxeterMatrix) -> bool {
    if p.rank() != m.rank() {
        return false;
    }
    let blocks = p.blocks();
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            if cross_bond_gcd(m, &blocks[i], &blocks[j]) == BondOrder::Finite(1) {
                return false;
            }
        }
    }
    blocks.iter().all(|b| block_finite_bond_connected(m, b))
}

/// All admissible partitions, in restricted-growth order (the trivial
/// partition first, the discrete one last).
pub fn enumerate_admissible(m: &CoxeterMatrix) -> Result<Vec<GeneratorPartition>, FactorError> {
    let n = m.rank();
    if n > MAX_ENUMERATION_RANK {
        return Err(FactorError::TooLarge(n));
    }
    let mut out = Vec::new();
    let mut assign = vec![0usize; n];
    fn rec(
        i: usize,
        used: usize,
        assign: &mut Vec<usize>,
        m: &CoxeterMatrix,
        out: &mut Vec<GeneratorPartition>,
    ) {
        let n = assign.len();
        if i == n {
            let mut blocks = vec![Vec::new(); used];
            for (s, &b) in assign.iter().enumerate() {
                blocks[b].push(s);
            }
            let p = GeneratorPartition::new(blocks, n).expect("growth string is a partition");
            if is_admissible(&p, m) {
                out.push(p);
            }
            return;
        }
        for b in 0..=used {
            assign[i] = b;
            rec(i + 1, used.max(b + 1), assign, m, out);
        }
    }
    rec(0, 0, &mut assign, m, &mut out);
    Ok(out)
}

/// The Coxeter system on the blocks of an admissible partition, with the
/// projection from source generators to block indices.  Block generators are
/// named after their smallest member.
#[derive(Clone, Debug)]
pub struct QuotientCoxeter {
    pub partition: GeneratorPartition,
    pub quotient: CoxeterMatrix,
    /// Source generator index -> block index.
    pub projection: Vec<usize>,
}

pub fn quotient_group(
    p: &GeneratorPartition,
    m: &CoxeterMatrix,
) -> Result<QuotientCoxeter, FactorError> {
    if !is_admissible(p, m) {
        return Err(FactorError::NotAdmissible);
    }
    let blocks = p.blocks();
    let k = blocks.len();
    let names: Vec<String> = blocks
        .iter()
        .map(|b| m.generator_name(b[0]).to_string())
        .collect();
    let mut orders = vec![vec![BondOrder::Finite(1); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = cross_bond_gcd(m, &blocks[i], &blocks[j]);
            orders[i][j] = d;
            orders[j][i] = d;
        }
    }
    let quotient = CoxeterMatrix::new(names, orders)
        .map_err(|_| FactorError::NotAdmissible)?;
    let projection = (0..m.rank()).map(|s| p.block_of(s)).collect();
    Ok(QuotientCoxeter { partition: p.clone(), quotient, projection })
}

/// Pull a representation of the quotient back to the source group: each
/// generator acts by the matrix of its block.  The source relations are
/// verified before the result is returned.
pub fn pullback(
    rep_q: &Representation,
    q: &QuotientCoxeter,
    m: &CoxeterMatrix,
    settings: &Settings,
) -> Result<Representation, FactorError> {
    if rep_q.generators != q.quotient.generators() {
        return Err(FactorError::BadInput(
            "representation generators do not match the quotient system".into(),
        ));
    }
    let matrices = (0..m.rank())
        .map(|s| rep_q.matrices[q.projection[s]].clone())
        .collect();
    let reflection_vectors = (0..m.rank())
        .map(|s| rep_q.reflection_vectors[q.projection[s]].clone())
        .collect();
    let rep = Representation {
        generators: m.generators().to_vec(),
        matrices,
        reflection_vectors,
    };
    let report = verify_relations(&rep, m, settings.tol);
    if !report.relations_hold(settings.tol.max(REFLECTION_TOL)) {
        return Err(FactorError::RelationsViolated(format!(
            "pullback deviates by {:.2e}",
            report.max_relation_deviation()
        )));
    }
    Ok(rep)
}

/// Result of factoring a reflection representation: the proportionality
/// partition, the quotient system, and the induced representation of the
/// quotient (one matrix per block, reflection vectors pairwise independent
/// across finitely-bonded blocks).
#[derive(Clone, Debug)]
pub struct Factorization {
    pub partition: GeneratorPartition,
    pub quotient: QuotientCoxeter,
    pub representation: Representation,
    /// Unit reflection vector of each source generator.
    pub source_vectors: Vec<CVec>,
}

fn proportional_up_to_phase(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> bool {
    let f = vdot(a, b);
    if f.norm() <= PROPORTIONALITY_TOL {
        return false;
    }
    let aligned = vscale(b, f / re64(f.norm()));
    vnorm(&vsub(a, &aligned)) <= PROPORTIONALITY_TOL
}

fn find(parent: &mut Vec<usize>, x: usize) -> usize {
    if parent[x] != x {
        let root = find(parent, parent[x]);
        parent[x] = root;
    }
    parent[x]
}

/// Factor a family of reflection matrices (one per generator of `m`) through
/// the quotient determined by proportional reflection vectors.
pub fn factor_reflection_rep(
    matrices: &[CMat],
    m: &CoxeterMatrix,
    settings: &Settings,
) -> Result<Factorization, FactorError> {
    let n = m.rank();
    if matrices.len() != n {
        return Err(FactorError::BadInput(format!(
            "{} matrices for {} generators",
            matrices.len(),
            n
        )));
    }
    let d = matrices
        .first()
        .map(CMat::rows)
        .ok_or_else(|| FactorError::BadInput("no matrices".into()))?;
    for (i, mat) in matrices.iter().enumerate() {
        if !mat.is_square() || mat.rows() != d {
            return Err(FactorError::BadInput(format!(
                "matrix {i} is not square of the common size"
            )));
        }
    }
    // Reflection shape: an involution with eigenvalues {-1, 1, ..., 1},
    // detected by the involution residual and the trace.
    let mut alphas: Vec<CVec> = Vec::with_capacity(n);
    for (i, mat) in matrices.iter().enumerate() {
        let inv_dev = mat.pow(2).deviation_from_identity();
        let tr_dev = (mat.trace() - re64(d as f64 - 2.0)).norm();
        let deviation = inv_dev.max(tr_dev);
        if deviation > REFLECTION_TOL {
            return Err(FactorError::NotAReflection { index: i, deviation });
        }
        // (I - M)/2 has rank one; its largest column is the reflection vector.
        let p = CMat::identity(d).sub(mat).scale(re64(0.5));
        let col = (0..d)
            .map(|j| p.col(j))
            .max_by(|a, b| vnorm(a).total_cmp(&vnorm(b)))
            .expect("at least one column");
        let norm = vnorm(&col);
        if norm <= REFLECTION_TOL {
            return Err(FactorError::NotAReflection { index: i, deviation: norm });
        }
        alphas.push(vscale(&col, re64(1.0 / norm)));
    }
    let alpha_matrix = CMat::from_fn(d, n, |r, c| alphas[c][r]);
    let spanned = alpha_matrix.rank(settings.tol);
    if spanned < d {
        return Err(FactorError::SpanDeficient { spanned, needed: d });
    }
    // Merge generators with proportional vectors across finite bonds.
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if m.order(i, j).is_finite() && proportional_up_to_phase(&alphas[i], &alphas[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks_map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for s in 0..n {
        let root = find(&mut parent, s);
        blocks_map.entry(root).or_default().push(s);
    }
    let partition = GeneratorPartition::new(blocks_map.into_values().collect(), n)?;
    // Same-class generators must act identically.
    for block in partition.blocks() {
        let rep_idx = block[0];
        for &s in &block[1..] {
            if matrices[rep_idx].max_abs_diff(&matrices[s]) > REFLECTION_TOL {
                return Err(FactorError::ClassMatrixMismatch { a: rep_idx, b: s });
            }
        }
    }
    // Defining relations of the source system.
    let source_rep = Representation {
        generators: m.generators().to_vec(),
        matrices: matrices.to_vec(),
        reflection_vectors: alphas.clone(),
    };
    let rel_tol = settings.tol.max(REFLECTION_TOL);
    let report = verify_relations(&source_rep, m, settings.tol);
    if !report.relations_hold(rel_tol) {
        return Err(FactorError::RelationsViolated(format!(
            "input deviates by {:.2e}",
            report.max_relation_deviation()
        )));
    }
    let quotient = quotient_group(&partition, m)?;
    let rep_matrices: Vec<CMat> = partition
        .blocks()
        .iter()
        .map(|b| matrices[b[0]].clone())
        .collect();
    let rep_vectors: Vec<CVec> = partition.blocks().iter().map(|b| alphas[b[0]].clone()).collect();
    let representation = Representation {
        generators: quotient.quotient.generators().to_vec(),
        matrices: rep_matrices,
        reflection_vectors: rep_vectors,
    };
    let induced_report = verify_relations(&representation, &quotient.quotient, settings.tol);
    if !induced_report.relations_hold(rel_tol) {
        return Err(FactorError::RelationsViolated(format!(
            "induced quotient representation deviates by {:.2e}",
            induced_report.max_relation_deviation()
        )));
    }
    // Cross-block reflection vectors on finite quotient bonds must be
    // independent; by construction proportional pairs were merged.
    let k = partition.block_count();
    for i in 0..k {
        for j in i + 1..k {
            if quotient.quotient.order(i, j).is_finite()
                && proportional_up_to_phase(
                    &representation.reflection_vectors[i],
                    &representation.reflection_vectors[j],
                )
            {
                return Err(FactorError::BadInput(
                    "blocks with a finite quotient bond share a reflection line".into(),
                ));
            }
        }
    }
    Ok(Factorization {
        partition,
        quotient,
        representation,
        source_vectors: alphas,
    })
}
