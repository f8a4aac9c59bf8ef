//! Precomputed objective tables.

use rayon::prelude::*;

use crate::basis::{BasisSet, Bitstring};
use crate::error::{domain, QaoaError, Result};

/// Whether larger or smaller objective values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Maximize,
    Minimize,
}

/// Objective values `C(x)` for every state of a basis, in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    basis: BasisSet,
    values: Vec<f64>,
    best: f64,
    orientation: Orientation,
}

const CHUNK: usize = 1 << 12;

impl CostTable {
    pub fn from_values(basis: BasisSet, values: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(domain(format!(
                "{} cost values for a basis of {} states",
                values.len(),
                basis.dim()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let state = Bitstring::new(basis.state(i), basis.n());
            return Err(QaoaError::Data(format!(
                "non-finite cost {} at state {state} (index {i})",
                values[i]
            )));
        }
        let best = match orientation {
            Orientation::Maximize => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Orientation::Minimize => values.iter().copied().fold(f64::INFINITY, f64::min),
        };
        Ok(Self {
            basis,
            values,
            best,
            orientation,
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best_value(&self) -> f64 {
        self.best
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// True when no two values have strictly opposite signs.
    pub fn is_single_signed(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0) || self.values.iter().all(|&v| v <= 0.0)
    }

    /// `expectation / best_value`, defined only for single-signed tables
    /// with a nonzero optimum.
    pub fn approx_ratio(&self, expectation: f64) -> Option<f64> {
        (self.is_single_signed() && self.best != 0.0).then(|| expectation / self.best)
    }
}

/// Evaluates `f` on every state of `basis`.
///
/// Work is split into fixed index chunks, so the table does not depend on
/// the number of threads in the rayon pool.
pub fn build_cost_table<F>(f: F, basis: &BasisSet, orientation: Orientation) -> Result<CostTable>
where
    F: Fn(u64) -> f64 + Sync,
{
    let mut values = vec![0.0; basis.dim()];
    values.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let start = c * CHUNK;
        for (slot, x) in chunk.iter_mut().zip(basis.range(start, start + CHUNK)) {
            *slot = f(x);
        }
    });
    CostTable::from_values(basis.clone(), values, orientation)
}

/// 0/1 table marking states above a threshold (`> t` when `strict`, else `>= t`).
pub fn threshold_transform(table: &CostTable, t: f64, strict: bool) -> CostTable {
    let values = table
        .values
        .iter()
        .map(|&v| if (strict && v > t) || (!strict && v >= t) { 1.0 } else { 0.0 })
        .collect();
    CostTable::from_values(table.basis.clone(), values, Orientation::Maximize)
        .expect("0/1 values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Graph;

    fn k3_table() -> CostTable {
        let g = Graph::complete(3);
        let basis = BasisSet::unconstrained(3).unwrap();
        build_cost_table(|x| g.cut_size(x), &basis, Orientation::Maximize).unwrap()
    }

    #[test]
    fn maxcut_k3_table() {
        // exhaustive: the two constant assignments cut nothing, every other cuts 2
        let t = k3_table();
        assert_eq!(t.values(), &[0., 2., 2., 2., 2., 2., 2., 0.]);
        assert_eq!(t.best_value(), 2.0);
    }

    #[test]
    fn densest_on_dicke() {
        let g = Graph::complete(3);
        let basis = BasisSet::dicke(3, 2).unwrap();
        let t = build_cost_table(|x| g.induced_edges(x), &basis, Orientation::Maximize).unwrap();
        assert_eq!(t.values(), &[1., 1., 1.]);
    }

    #[test]
    fn constant_table_and_minimize() {
        let basis = BasisSet::unconstrained(4).unwrap();
        let t = build_cost_table(|_| 5.0, &basis, Orientation::Maximize).unwrap();
        assert!(t.values().iter().all(|&v| v == 5.0));
        assert_eq!(t.best_value(), 5.0);
        let t = build_cost_table(|x| x as f64, &basis, Orientation::Minimize).unwrap();
        assert_eq!(t.best_value(), 0.0);
    }

    #[test]
    fn non_finite_names_the_state() {
        let basis = BasisSet::unconstrained(3).unwrap();
        let err = build_cost_table(|x| if x == 5 { f64::NAN } else { 0.0 }, &basis, Orientation::Maximize)
            .unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, QaoaError::Data(_)));
        assert!(msg.contains("101"), "{msg}");
    }

    #[test]
    fn length_mismatch() {
        let basis = BasisSet::unconstrained(2).unwrap();
        assert!(CostTable::from_values(basis, vec![1.0; 3], Orientation::Maximize).is_err());
    }

    #[test]
    fn thread_count_independent() {
        let basis = BasisSet::dicke(16, 8).unwrap();
        let f = |x: u64| ((x.wrapping_mul(0x9E3779B97F4A7C15)) >> 40) as f64;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
        let a = one.install(|| build_cost_table(f, &basis, Orientation::Maximize).unwrap());
        let b = many.install(|| build_cost_table(f, &basis, Orientation::Maximize).unwrap());
        assert_eq!(a, b);
        // and aligned with unrank
        for i in [0, 17, 5000, basis.dim() - 1] {
            assert_eq!(a.values()[i], f(basis.state(i)));
        }
    }

    #[test]
    fn threshold_examples() {
        let t = k3_table();
        assert_eq!(threshold_transform(&t, 1.0, true).values(), &[0., 1., 1., 1., 1., 1., 1., 0.]);
        assert!(threshold_transform(&t, f64::INFINITY, false).values().iter().all(|&v| v == 0.0));
        assert!(threshold_transform(&t, -1.0, false).values().iter().all(|&v| v == 1.0));
        assert_eq!(threshold_transform(&t, 2.0, true).values(), &[0.; 8]);
        assert_eq!(threshold_transform(&t, 2.0, false).values()[1], 1.0);
    }

    #[test]
    fn approx_ratio_sign_rules() {
        let t = k3_table();
        assert_eq!(t.approx_ratio(1.5), Some(0.75));
        let basis = BasisSet::unconstrained(1).unwrap();
        let mixed = CostTable::from_values(basis, vec![-1.0, 1.0], Orientation::Maximize).unwrap();
        assert_eq!(mixed.approx_ratio(0.0), None);
    }
}
