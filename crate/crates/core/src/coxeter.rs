//! Coxeter matrices and labelled Coxeter graphs.
//!
//! A Coxeter system is recorded by its matrix of bond orders `m_rt` with
//! `m_ss = 1` and `m_rt = m_tr` either an integer `>= 2` or infinity.  The
//! file format is JSON: `{"generators": [names], "orders": [[entries]]}`
//! where an entry is a positive integer or the string `"inf"`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Order of the product of two generators: finite `m >= 1` or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Finite(u32),
    Infinite,
}

impl BondOrder {
    pub fn is_finite(self) -> bool {
        matches!(self, BondOrder::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            BondOrder::Finite(m) => Some(m),
            BondOrder::Infinite => None,
        }
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BondOrder::Finite(m) => write!(f, "{m}"),
            BondOrder::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for BondOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BondOrder::Finite(m) => s.serialize_u32(*m),
            BondOrder::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BondOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = BondOrder;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a positive integer or the string \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BondOrder, E> {
                if v == 0 || v > u32::MAX as u64 {
                    return Err(E::custom(format!("order {v} out of range")));
                }
                Ok(BondOrder::Finite(v as u32))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BondOrder, E> {
                if v <= 0 {
                    return Err(E::custom(format!("order {v} must be positive")));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BondOrder, E> {
                if v == "inf" {
                    Ok(BondOrder::Infinite)
                } else {
                    Err(E::custom(format!("unknown order string {v:?}")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Error)]
pub enum CoxeterError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("orders are not symmetric at ({r}, {t})")]
    AsymmetricOrders { r: String, t: String },
    #[error("diagonal order for {s} must be 1")]
    BadDiagonal { s: String },
    #[error("order for ({r}, {t}) must be at least 2 or \"inf\"")]
    OrderBelowTwo { r: String, t: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

#[derive(Serialize, Deserialize)]
struct CoxeterDoc {
    generators: Vec<String>,
    orders: Vec<Vec<BondOrder>>,
}

/// A Coxeter matrix over an ordered list of named generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoxeterMatrix {
    generators: Vec<String>,
    orders: Vec<BondOrder>, // n*n, row major
}

impl CoxeterMatrix {
    pub fn new(
        generators: Vec<String>,
        orders: Vec<Vec<BondOrder>>,
    ) -> Result<Self, CoxeterError> {
        let n = generators.len();
        if n == 0 {
            return Err(CoxeterError::MalformedDocument("no generators".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(CoxeterError::MalformedDocument(format!(
                    "duplicate generator name {g:?}"
                )));
            }
        }
        if orders.len() != n || orders.iter().any(|row| row.len() != n) {
            return Err(CoxeterError::MalformedDocument(format!(
                "orders must form a {n}x{n} matrix"
            )));
        }
        for i in 0..n {
            if orders[i][i] != BondOrder::Finite(1) {
                return Err(CoxeterError::BadDiagonal { s: generators[i].clone() });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if orders[i][j] != orders[j][i] {
                    return Err(CoxeterError::AsymmetricOrders {
                        r: generators[i].clone(),
                        t: generators[j].clone(),
                    });
                }
                if let BondOrder::Finite(m) = orders[i][j] {
                    if m < 2 {
                        return Err(CoxeterError::OrderBelowTwo {
                            r: generators[i].clone(),
                            t: generators[j].clone(),
                        });
                    }
                }
            }
        }
        let flat = orders.into_iter().flatten().collect();
        Ok(CoxeterMatrix { generators, orders: flat })
    }

    /// Convenience constructor from generator names and the strict upper
    /// triangle of orders, row by row.
    pub fn from_upper(names: &[&str], upper: &[BondOrder]) -> Result<Self, CoxeterError> {
        let n = names.len();
        assert_eq!(upper.len(), n * (n - 1) / 2, "wrong number of upper entries");
        let mut orders = vec![vec![BondOrder::Finite(1); n]; n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let m = *it.next().unwrap();
                orders[i][j] = m;
                orders[j][i] = m;
            }
        }
        CoxeterMatrix::new(names.iter().map(|s| s.to_string()).collect(), orders)
    }

    pub fn parse(text: &str) -> Result<Self, CoxeterError> {
        let doc: CoxeterDoc = serde_json::from_str(text)
            .map_err(|e| CoxeterError::MalformedDocument(e.to_string()))?;
        CoxeterMatrix::new(doc.generators, doc.orders)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("serializable")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("serializable")
    }

    fn to_doc(&self) -> CoxeterDoc {
        let n = self.rank();
        CoxeterDoc {
            generators: self.generators.clone(),
            orders: (0..n)
                .map(|i| (0..n).map(|j| self.order(i, j)).collect())
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn generator_name(&self, i: usize) -> &str {
        &self.generators[i]
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g == name)
    }

    pub fn order(&self, i: usize, j: usize) -> BondOrder {
        self.orders[i * self.rank() + j]
    }

    /// Unordered generator pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.rank();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}

/// An undirected graph on named vertices with optional order labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub label: Option<BondOrder>,
}

impl LabeledGraph {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(usize, usize, Option<BondOrder>)>,
    ) -> Result<Self, CoxeterError> {
        let n = vertices.len();
        let mut seen = std::collections::BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b, label) in edges {
            if a >= n || b >= n {
                return Err(CoxeterError::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range"
                )));
            }
            if a == b {
                return Err(CoxeterError::InvalidGraph(format!("loop at vertex {a}")));
            }
            let (x, y) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((x, y)) {
                return Err(CoxeterError::InvalidGraph(format!(
                    "duplicate edge ({x}, {y})"
                )));
            }
            normalized.push(Edge { a: x, b: y, label });
        }
        normalized.sort_by_key(|e| (e.a, e.b));
        Ok(LabeledGraph { vertices, edges: normalized })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges.iter().any(|e| (e.a, e.b) == (x, y))
    }

    pub fn edge_label(&self, a: usize, b: usize) -> Option<BondOrder> {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .iter()
            .find(|e| (e.a, e.b) == (x, y))
            .and_then(|e| e.label)
    }

    /// Neighbour lists in ascending vertex order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// The Coxeter graph: vertices are the generators, with an edge labelled
/// `m_rt` whenever `m_rt >= 3` (or infinite).
pub fn coxeter_graph(m: &CoxeterMatrix) -> LabeledGraph {
    let mut edges = Vec::new();
    for (i, j) in m.pairs() {
        let keep = match m.order(i, j) {
            BondOrder::Finite(k) => k >= 3,
            BondOrder::Infinite => true,
        };
        if keep {
            edges.push((i, j, Some(m.order(i, j))));
        }
    }
    LabeledGraph::new(m.generators().to_vec(), edges).expect("valid by construction")
}

/// A Coxeter system is irreducible when its Coxeter graph is connected.
pub fn is_irreducible(m: &CoxeterMatrix) -> bool {
    crate::homology::connected_components(&coxeter_graph(m)).len() <= 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inf() -> BondOrder {
        BondOrder::Infinite
    }

    fn fin(m: u32) -> BondOrder {
        BondOrder::Finite(m)
    }

    #[test]
    fn parses_rank_one() {
        let m = CoxeterMatrix::parse(r#"{"generators":["s"],"orders":[[1]]}"#).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.order(0, 0), fin(1));
    }

    #[test]
    fn parses_infinite_dihedral() {
        let m = CoxeterMatrix::parse(
            r#"{"generators":["r","t"],"orders":[[1,"inf"],["inf",1]]}"#,
        )
        .unwrap();
        assert_eq!(m.order(0, 1), inf());
        assert_eq!(m.order(1, 0), inf());
    }

    #[test]
    fn rejects_asymmetric() {
        let err = CoxeterMatrix::parse(
            r#"{"generators":["r","t"],"orders":[[1,2],[3,1]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoxeterError::AsymmetricOrders { .. }));
    }

    #[test]
    fn rejects_bad_diagonal_and_low_order() {
        let err = CoxeterMatrix::parse(
            r#"{"generators":["r","t"],"orders":[[2,3],[3,1]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoxeterError::BadDiagonal { .. }));
        let err = CoxeterMatrix::parse(
            r#"{"generators":["r","t"],"orders":[[1,1],[1,1]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoxeterError::OrderBelowTwo { .. }));
    }

    #[test]
    fn rejects_malformed_shape_and_duplicates() {
        let err =
            CoxeterMatrix::parse(r#"{"generators":["r","t"],"orders":[[1,3]]}"#).unwrap_err();
        assert!(matches!(err, CoxeterError::MalformedDocument(_)));
        let err = CoxeterMatrix::parse(
            r#"{"generators":["r","r"],"orders":[[1,3],[3,1]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoxeterError::MalformedDocument(_)));
    }

    #[test]
    fn graph_of_right_angled_matrix_has_no_edges() {
        let m = CoxeterMatrix::from_upper(&["a", "b", "c"], &[fin(2), fin(2), fin(2)]).unwrap();
        let g = coxeter_graph(&m);
        assert_eq!(g.edge_count(), 0);
        assert!(!is_irreducible(&m));
    }

    #[test]
    fn graph_of_cycle_matrix() {
        // affine triangle: all bonds 3
        let m = CoxeterMatrix::from_upper(&["s0", "s1", "s2"], &[fin(3), fin(3), fin(3)]).unwrap();
        let g = coxeter_graph(&m);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edge_label(0, 2), Some(fin(3)));
        assert!(is_irreducible(&m));
    }

    #[test]
    fn rank_one_is_irreducible() {
        let m = CoxeterMatrix::from_upper(&["s"], &[]).unwrap();
        assert!(is_irreducible(&m));
    }

    proptest! {
        #[test]
        fn json_round_trip(n in 1usize..6, seeds in proptest::collection::vec(0u8..10, 0..15)) {
            let names: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
            let mut orders = vec![vec![fin(1); n]; n];
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let pick = seeds.get(k).copied().unwrap_or(0);
                    k += 1;
                    let m = if pick == 9 { inf() } else { fin(2 + pick as u32) };
                    orders[i][j] = m;
                    orders[j][i] = m;
                }
            }
            let m = CoxeterMatrix::new(names, orders).unwrap();
            let round = CoxeterMatrix::parse(&m.to_json()).unwrap();
            prop_assert_eq!(m, round);
        }
    }
}
