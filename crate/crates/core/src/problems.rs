//! Problem instances and the built-in objective functions.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;

use crate::basis::Bitstring;
use crate::error::{domain, format_err, Result};

/// Simple undirected graph on vertices `0..n_vertices`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: u32,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Edges are normalized to `(min, max)`; self-loops, duplicates and
    /// out-of-range endpoints are rejected.
    pub fn new(n_vertices: u32, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (u, v) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(domain(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            if u == v {
                return Err(domain(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(domain(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            out.push(e);
        }
        Ok(Self { n_vertices, edges: out })
    }

    pub fn complete(n: u32) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).unwrap()
    }

    /// G(n, p): each of the n(n-1)/2 pairs is an edge independently with probability `p`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: u32, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self { n_vertices: n, edges }
    }

    /// Parses a text edge list: one `u v` pair per line, `#` starts a comment.
    ///
    /// The vertex count is `max(max endpoint + 1, min_vertices)`.
    pub fn parse_edge_list(text: &str, min_vertices: u32, path: &Path) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = min_vertices;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || format_err(path, format!("line {}: expected `u v`, got {raw:?}", lineno + 1));
            if fields.len() != 2 {
                return Err(bad());
            }
            let u: u32 = fields[0].parse().map_err(|_| bad())?;
            let v: u32 = fields[1].parse().map_err(|_| bad())?;
            n = n.max(u.max(v) + 1);
            edges.push((u, v));
        }
        Self::new(n, edges).map_err(|e| format_err(path, e.to_string()))
    }

    pub fn load(path: &Path, min_vertices: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text, min_vertices, path)
    }

    pub fn n_vertices(&self) -> u32 {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Number of edges whose endpoints lie on different sides of `x`.
    pub fn cut_size(&self, x: u64) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v)| ((x >> u) ^ (x >> v)) & 1 == 1)
            .count() as f64
    }

    /// Number of edges with both endpoints selected.
    pub fn induced_edges(&self, x: u64) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v)| (x >> u) & (x >> v) & 1 == 1)
            .count() as f64
    }

    /// Number of edges with at least one selected endpoint.
    pub fn covered_edges(&self, x: u64) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v)| ((x >> u) | (x >> v)) & 1 == 1)
            .count() as f64
    }

    fn check_len(&self, x: &Bitstring) -> Result<()> {
        if x.n != self.n_vertices {
            return Err(domain(format!(
                "bitstring has {} bits, graph has {} vertices",
                x.n, self.n_vertices
            )));
        }
        Ok(())
    }
}

/// A CNF formula over variables `1..=n_vars`. Variable `v` is qubit `v - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    n_vars: u32,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(n_vars: u32, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for (ci, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(domain(format!("clause {ci} is empty")));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() > n_vars {
                    return Err(domain(format!("clause {ci}: literal {lit} out of range")));
                }
                if clause.contains(&-lit) {
                    return Err(domain(format!("clause {ci} contains both {lit} and {}", -lit)));
                }
            }
        }
        Ok(Self { n_vars, clauses })
    }

    /// Random k-SAT: each clause picks `k` distinct variables uniformly and
    /// negates each with probability 1/2. Duplicate clauses are allowed.
    pub fn random<R: Rng + ?Sized>(n_vars: u32, k: u32, n_clauses: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || k > n_vars {
            return Err(domain(format!("clause width {k} invalid for {n_vars} variables")));
        }
        let clauses = (0..n_clauses)
            .map(|_| {
                let vars = rand::seq::index::sample(rng, n_vars as usize, k as usize);
                let mut clause: Vec<i32> = vars
                    .into_iter()
                    .map(|v| {
                        let lit = v as i32 + 1;
                        if rng.random_bool(0.5) {
                            -lit
                        } else {
                            lit
                        }
                    })
                    .collect();
                clause.sort_by_key(|l| l.abs());
                clause
            })
            .collect();
        Self::new(n_vars, clauses)
    }

    /// Parses DIMACS CNF (`c` comments, one `p cnf <vars> <clauses>` header,
    /// clauses terminated by `0`).
    pub fn parse_dimacs(text: &str, path: &Path) -> Result<Self> {
        let mut header: Option<(u32, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let f: Vec<&str> = line.split_whitespace().collect();
                if header.is_some() || f.len() != 4 || f[1] != "cnf" {
                    return Err(format_err(path, format!("line {}: bad header {raw:?}", lineno + 1)));
                }
                let vars = f[2].parse().map_err(|_| format_err(path, "bad variable count"))?;
                let ncl = f[3].parse().map_err(|_| format_err(path, "bad clause count"))?;
                header = Some((vars, ncl));
                continue;
            }
            if header.is_none() {
                return Err(format_err(path, "clause before `p cnf` header"));
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| format_err(path, format!("line {}: bad literal {tok:?}", lineno + 1)))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        let (n_vars, n_clauses) = header.ok_or_else(|| format_err(path, "missing `p cnf` header"))?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != n_clauses {
            return Err(format_err(
                path,
                format!("header declares {n_clauses} clauses, found {}", clauses.len()),
            ));
        }
        Self::new(n_vars, clauses).map_err(|e| format_err(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_dimacs(&text, path)
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Number of clauses with at least one true literal under assignment `x`.
    pub fn satisfied(&self, x: u64) -> f64 {
        self.clauses
            .iter()
            .filter(|clause| {
                clause.iter().any(|&lit| {
                    let bit = (x >> (lit.unsigned_abs() - 1)) & 1 == 1;
                    bit == (lit > 0)
                })
            })
            .count() as f64
    }
}

/// Cut size of `x` on `graph`.
pub fn maxcut(graph: &Graph, x: Bitstring) -> Result<f64> {
    graph.check_len(&x)?;
    Ok(graph.cut_size(x.value))
}

/// Satisfied-clause count of `x`.
pub fn ksat(formula: &CnfFormula, x: Bitstring) -> Result<f64> {
    if x.n != formula.n_vars {
        return Err(domain(format!(
            "bitstring has {} bits, formula has {} variables",
            x.n, formula.n_vars
        )));
    }
    Ok(formula.satisfied(x.value))
}

/// Edges inside the selected vertex set.
pub fn densest_subgraph(graph: &Graph, x: Bitstring) -> Result<f64> {
    graph.check_len(&x)?;
    Ok(graph.induced_edges(x.value))
}

/// Edges touched by the selected vertex set.
pub fn k_vertex_cover(graph: &Graph, x: Bitstring) -> Result<f64> {
    graph.check_len(&x)?;
    Ok(graph.covered_edges(x.value))
}
