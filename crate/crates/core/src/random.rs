//! Seeded random generators for Coxeter systems, representation data, and
//! graphs.  Used by the test suites and by the command-line demo; all
//! sampling is deterministic for a fixed RNG state.

use crate::coxeter::{BondOrder, CoxeterMatrix, LabeledGraph};
use crate::dihedral::{DihedralParam, PairSide};
use crate::ggr::GgrDatum;
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use std::ops::RangeInclusive;

/// A random Coxeter matrix.  Each bond is infinite with probability
/// `infinite_prob`, otherwise finite with order between 2 and `max_m`
/// (small orders are favoured so that commuting pairs stay common).
pub fn coxeter(
    rng: &mut impl Rng,
    rank_range: RangeInclusive<usize>,
    max_m: u32,
    infinite_prob: f64,
) -> CoxeterMatrix {
    assert!(max_m >= 2);
    let n = rng.gen_range(rank_range);
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut orders = vec![vec![BondOrder::Finite(1); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let order = if rng.gen_bool(infinite_prob) {
                BondOrder::Infinite
            } else {
                let roll: f64 = rng.gen();
                let m = if roll < 0.35 {
                    2
                } else if roll < 0.60 {
                    3.min(max_m)
                } else {
                    rng.gen_range(2..=max_m)
                };
                BondOrder::Finite(m)
            };
            orders[i][j] = order;
            orders[j][i] = order;
        }
    }
    CoxeterMatrix::new(names, orders).expect("randomly sampled matrix is well-formed")
}

/// Knobs for random representation data.
#[derive(Clone, Debug)]
pub struct DatumOptions {
    /// Allow directed (`varrho_dir`) parameters on infinite bonds.
    pub allow_directed: bool,
    /// Probability that each eligible ordered pair receives an explicit
    /// scalar (the rest stay at the default 1).
    pub scalar_prob: f64,
    /// Draw scalars from the unit circle instead of a general annulus.
    pub unimodular_scalars: bool,
    /// Restrict `varrho_z` parameters to real positive `z`.
    pub real_z: bool,
}

impl Default for DatumOptions {
    fn default() -> Self {
        DatumOptions {
            allow_directed: true,
            scalar_prob: 0.7,
            unimodular_scalars: false,
            real_z: false,
        }
    }
}

/// A nonzero complex scalar with modulus in [0.4, 2] and arbitrary phase.
pub fn nonzero_scalar(rng: &mut impl Rng) -> Complex64 {
    let modulus = rng.gen_range(0.4..=2.0);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(modulus, phase)
}

fn unit_scalar(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// A random representation datum over the given Coxeter system: random
/// dihedral parameters on every bond of order at least 3, and random scalars
/// on a subset of the non-commuting ordered pairs.
pub fn datum(rng: &mut impl Rng, m: &CoxeterMatrix, opts: &DatumOptions) -> GgrDatum {
    let mut params: BTreeMap<(usize, usize), DihedralParam> = BTreeMap::new();
    let mut scalars: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (i, j) in m.pairs() {
        match m.order(i, j) {
            BondOrder::Finite(ord) if ord >= 3 => {
                let k = rng.gen_range(1..=ord / 2);
                params.insert((i, j), DihedralParam::RhoK { m: ord, k });
            }
            BondOrder::Finite(_) => continue,
            BondOrder::Infinite => {
                let param = if opts.allow_directed && rng.gen_bool(0.3) {
                    let sub = if rng.gen_bool(0.5) { PairSide::First } else { PairSide::Second };
                    DihedralParam::VarrhoDir { sub }
                } else if opts.real_z {
                    DihedralParam::VarrhoZ { z: Complex64::new(rng.gen_range(0.5..=6.0), 0.0) }
                } else {
                    let mut z = Complex64::new(rng.gen_range(-3.0..=3.0), rng.gen_range(-2.0..=2.0));
                    if z.norm() < 0.2 {
                        z += Complex64::new(1.0, 0.0);
                    }
                    DihedralParam::VarrhoZ { z }
                };
                params.insert((i, j), param);
            }
        }
        for (r, t) in [(i, j), (j, i)] {
            if rng.gen_bool(opts.scalar_prob) {
                let a = if opts.unimodular_scalars { unit_scalar(rng) } else { nonzero_scalar(rng) };
                scalars.insert((r, t), a);
            }
        }
    }
    GgrDatum::new(m.clone(), params, scalars).expect("randomly sampled datum is valid")
}

/// A random undirected graph with no parallel edges or loops.
pub fn labeled_graph(
    rng: &mut impl Rng,
    vertex_range: RangeInclusive<usize>,
    edge_prob: f64,
) -> LabeledGraph {
    let n = rng.gen_range(vertex_range);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((i, j, None));
            }
        }
    }
    LabeledGraph::new(names, edges).expect("sampled edges are distinct")
}

/// A random closed walk in the graph: start anywhere, walk along edges, and
/// stop on the first return to the start (bounded by `max_len` steps).
/// Returns `None` when the walk fails to close up.
pub fn closed_path(
    rng: &mut impl Rng,
    g: &LabeledGraph,
    max_len: usize,
) -> Option<Vec<usize>> {
    let n = g.vertex_count();
    if n == 0 {
        return None;
    }
    let adj = g.adjacency();
    let candidates: Vec<usize> = (0..n).filter(|&v| !adj[v].is_empty()).collect();
    if candidates.is_empty() {
        return None;
    }
    let start = candidates[rng.gen_range(0..candidates.len())];
    let mut path = vec![start];
    let mut here = start;
    for _ in 0..max_len {
        let next = adj[here][rng.gen_range(0..adj[here].len())];
        path.push(next);
        here = next;
        if here == start && path.len() > 1 {
            return Some(path);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_systems_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = coxeter(&mut rng, 2..=6, 8, 0.25);
            assert!((2..=6).contains(&m.rank()));
            for (i, j) in m.pairs() {
                if let BondOrder::Finite(o) = m.order(i, j) {
                    assert!((2..=8).contains(&o));
                }
            }
        }
    }

    #[test]
    fn sampled_data_are_deterministic_per_seed() {
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let m = coxeter(&mut rng, 3..=5, 6, 0.3);
            let d = datum(&mut rng, &m, &DatumOptions::default());
            d.to_json()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn directed_parameters_respect_the_option() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let m = coxeter(&mut rng, 2..=4, 5, 0.8);
            let opts = DatumOptions { allow_directed: false, ..Default::default() };
            let d = datum(&mut rng, &m, &opts);
            assert!(!d.has_directed_param());
        }
    }

    #[test]
    fn closed_paths_are_closed_walks_along_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut produced = 0;
        for _ in 0..50 {
            let g = labeled_graph(&mut rng, 2..=8, 0.5);
            if let Some(p) = closed_path(&mut rng, &g, 60) {
                produced += 1;
                assert_eq!(p.first(), p.last());
                assert!(p.len() >= 3);
                for w in p.windows(2) {
                    assert!(g.has_edge(w[0], w[1]));
                }
            }
        }
        assert!(produced > 20);
    }
}
