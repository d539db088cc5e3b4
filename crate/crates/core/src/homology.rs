//! Circuit bases for the first homology of a graph, and characters on
//! closed paths.
//!
//! Conventions, fixed once so every downstream computation is reproducible:
//! * the spanning forest grows from the smallest-index vertex of each
//!   component, always taking the frontier edge with the smallest
//!   `(tail, head)` pair;
//! * a non-forest edge is oriented from its smaller endpoint;
//! * the basis circuit of a non-forest edge runs through that edge first and
//!   returns to the tail through the forest;
//! * an oriented edge traversed backwards counts with coefficient -1, and a
//!   character value on the reversed edge is the reciprocal.

use crate::coxeter::LabeledGraph;
use crate::linalg::approx_eq_c;
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("path is not closed (first and last vertex differ)")]
    NotClosed,
    #[error("path step ({0}, {1}) is not an edge of the graph")]
    NotAPath(usize, usize),
    #[error("no character value on edge ({0}, {1})")]
    MissingEdgeValue(usize, usize),
    #[error("character values must be nonzero")]
    ZeroValue,
}

/// An edge together with a direction of traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedEdge {
    pub tail: usize,
    pub head: usize,
}

/// The basis circuit attached to one non-forest edge: a closed vertex
/// sequence starting and ending at the edge's tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisCircuit {
    pub chord: OrientedEdge,
    pub circuit: Vec<usize>,
}

/// A spanning forest plus one basis circuit per non-forest edge.  The
/// circuits form a basis of the first homology of the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitBasis {
    pub forest_edges: Vec<(usize, usize)>,
    pub circuits: Vec<BasisCircuit>,
    pub vertex_count: usize,
}

impl CircuitBasis {
    /// Rank of the first homology group.
    pub fn rank(&self) -> usize {
        self.circuits.len()
    }
}

/// Integer coordinates of a closed path with respect to a circuit basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleVector(pub Vec<i64>);

/// A character on oriented edges: the value on `(t, r)` is the reciprocal of
/// the value on `(r, t)`.  Values are stored on the `(min, max)` orientation.
#[derive(Clone, Debug, Default)]
pub struct EdgeCharacter {
    values: BTreeMap<(usize, usize), Complex64>,
}

impl EdgeCharacter {
    pub fn new() -> Self {
        EdgeCharacter { values: BTreeMap::new() }
    }

    /// Record the value on the oriented edge `(tail, head)`.
    pub fn insert(
        &mut self,
        tail: usize,
        head: usize,
        value: Complex64,
    ) -> Result<(), HomologyError> {
        if value.norm() == 0.0 {
            return Err(HomologyError::ZeroValue);
        }
        if tail < head {
            self.values.insert((tail, head), value);
        } else {
            self.values.insert((head, tail), value.inv());
        }
        Ok(())
    }

    pub fn value(&self, tail: usize, head: usize) -> Option<Complex64> {
        if tail < head {
            self.values.get(&(tail, head)).copied()
        } else {
            self.values.get(&(head, tail)).map(|v| v.inv())
        }
    }
}

/// Connected components, ordered by smallest vertex, vertices ascending.
pub fn connected_components(g: &LabeledGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let adj = g.adjacency();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Deterministic spanning forest and its circuit basis.
pub fn spanning_forest(g: &LabeledGraph) -> CircuitBasis {
    let n = g.vertex_count();
    let adj = g.adjacency();
    let mut in_tree = vec![false; n];
    let mut forest: Vec<(usize, usize)> = Vec::new();

    for comp in connected_components(g) {
        in_tree[comp[0]] = true;
        loop {
            // Smallest (tail, head) frontier edge from the tree into new territory.
            let mut best: Option<(usize, usize)> = None;
            for t in 0..n {
                if !in_tree[t] {
                    continue;
                }
                for &h in &adj[t] {
                    if in_tree[h] {
                        continue;
                    }
                    if best.map_or(true, |b| (t, h) < b) {
                        best = Some((t, h));
                    }
                }
            }
            match best {
                Some((t, h)) => {
                    forest.push(if t < h { (t, h) } else { (h, t) });
                    in_tree[h] = true;
                }
                None => break,
            }
        }
    }
    forest.sort_unstable();

    // Forest adjacency for the return paths of the circuits.
    let mut fadj = vec![Vec::new(); n];
    for &(a, b) in &forest {
        fadj[a].push(b);
        fadj[b].push(a);
    }
    for list in &mut fadj {
        list.sort_unstable();
    }

    let mut circuits = Vec::new();
    for e in g.edges() {
        if forest.binary_search(&(e.a, e.b)).is_ok() {
            continue;
        }
        let chord = OrientedEdge { tail: e.a, head: e.b };
        let path = forest_path(&fadj, chord.head, chord.tail);
        let mut circuit = vec![chord.tail];
        circuit.extend(path);
        circuits.push(BasisCircuit { chord, circuit });
    }
    circuits.sort_by_key(|c| (c.chord.tail, c.chord.head));

    CircuitBasis { forest_edges: forest, circuits, vertex_count: n }
}

/// Unique path between two vertices of the same forest component.
fn forest_path(fadj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let n = fadj.len();
    let mut prev = vec![usize::MAX; n];
    prev[from] = from;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &w in &fadj[v] {
            if prev[w] == usize::MAX {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    assert!(prev[to] != usize::MAX, "vertices in different forest components");
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = prev[v];
        path.push(v);
    }
    path.reverse();
    path
}

/// Coordinates of a closed path in the circuit basis: the signed number of
/// traversals of each non-forest edge.
pub fn cycle_coordinates(
    g: &LabeledGraph,
    path: &[usize],
    basis: &CircuitBasis,
) -> Result<CycleVector, HomologyError> {
    if path.is_empty() || path.first() != path.last() {
        return Err(HomologyError::NotClosed);
    }
    for w in path.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            return Err(HomologyError::NotAPath(w[0], w[1]));
        }
    }
    let mut coeffs = vec![0i64; basis.circuits.len()];
    for w in path.windows(2) {
        for (k, c) in basis.circuits.iter().enumerate() {
            if (w[0], w[1]) == (c.chord.tail, c.chord.head) {
                coeffs[k] += 1;
            } else if (w[1], w[0]) == (c.chord.tail, c.chord.head) {
                coeffs[k] -= 1;
            }
        }
    }
    // The difference path - sum(coeff * circuit) must be the zero chain: it
    // is supported on the forest and has zero boundary.
    debug_assert!({
        let mut chain: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut add = |a: usize, b: usize, s: i64| {
            let (key, sign) = if a < b { ((a, b), s) } else { ((b, a), -s) };
            *chain.entry(key).or_insert(0) += sign;
        };
        for w in path.windows(2) {
            add(w[0], w[1], 1);
        }
        for (k, c) in basis.circuits.iter().enumerate() {
            for w in c.circuit.windows(2) {
                add(w[0], w[1], -coeffs[k]);
            }
        }
        chain.values().all(|&v| v == 0)
    });
    Ok(CycleVector(coeffs))
}

/// Character value on a closed path: the product of edge values in order.
pub fn evaluate_on_path(
    chi: &EdgeCharacter,
    path: &[usize],
) -> Result<Complex64, HomologyError> {
    if path.is_empty() || path.first() != path.last() {
        return Err(HomologyError::NotClosed);
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for w in path.windows(2) {
        let v = chi
            .value(w[0], w[1])
            .ok_or(HomologyError::MissingEdgeValue(w[0], w[1]))?;
        acc *= v;
    }
    Ok(acc)
}

/// Character value on a cycle vector: the product of basis-circuit values
/// raised to the integer coefficients.
pub fn evaluate_on_cycle(
    chi: &EdgeCharacter,
    v: &CycleVector,
    basis: &CircuitBasis,
) -> Result<Complex64, HomologyError> {
    assert_eq!(v.0.len(), basis.circuits.len(), "coordinate length mismatch");
    let mut acc = Complex64::new(1.0, 0.0);
    for (coeff, c) in v.0.iter().zip(&basis.circuits) {
        if *coeff == 0 {
            continue;
        }
        let base = evaluate_on_path(chi, &c.circuit)?;
        acc *= base.powi(*coeff as i32);
    }
    Ok(acc)
}

/// Convenience check used by tests: two characters agree on a basis.
pub fn values_agree(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| approx_eq_c(*x, *y, tol))
}
