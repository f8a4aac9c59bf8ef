//! Compressed simulation for the Grover mixer.
//!
//! Starting from the uniform state, the phase separator and the Grover mixer
//! both act identically on every state with the same objective value, so the
//! state is fully described by one amplitude per distinct value. Only the
//! value histogram is needed, and counting it parallelizes over contiguous
//! index ranges (Gosper-chain segments for Dicke bases).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::basis::{BasisSet, Constraint};
use crate::cost::{CostTable, Orientation};
use crate::error::{domain, format_err, QaoaError, Result};
use crate::mixer::write_atomic;
use crate::sim::AngleSchedule;

/// Values closer than this to the smallest value of their group are merged.
pub const VALUE_TOLERANCE: f64 = 1e-12;

/// Distinct objective values with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedCost {
    n: u32,
    weight: Option<u32>,
    values: Vec<f64>,
    degeneracies: Vec<u64>,
    total: u64,
    orientation: Orientation,
}

/// Key whose integer order matches the float order.
fn order_key(v: f64) -> i64 {
    let v = if v == 0.0 { 0.0 } else { v };
    let bits = v.to_bits() as i64;
    if bits < 0 {
        bits ^ i64::MAX
    } else {
        bits
    }
}

fn from_key(k: i64) -> f64 {
    let bits = if k < 0 { k ^ i64::MAX } else { k };
    f64::from_bits(bits as u64)
}

impl CompressedCost {
    fn from_histogram(basis: &BasisSet, hist: BTreeMap<i64, u64>, orientation: Orientation) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let mut degeneracies: Vec<u64> = Vec::new();
        let mut anchor = f64::NAN;
        for (k, count) in hist {
            let v = from_key(k);
            if !values.is_empty() && v - anchor <= VALUE_TOLERANCE {
                *degeneracies.last_mut().unwrap() += count;
            } else {
                anchor = v;
                values.push(v);
                degeneracies.push(count);
            }
        }
        Self {
            n: basis.n(),
            weight: basis.weight(),
            total: degeneracies.iter().sum(),
            values,
            degeneracies,
            orientation,
        }
    }

    /// Histogram of an existing table.
    pub fn from_table(table: &CostTable) -> Self {
        let mut hist = BTreeMap::new();
        for &v in table.values() {
            *hist.entry(order_key(v)).or_insert(0) += 1;
        }
        Self::from_histogram(table.basis(), hist, table.orientation())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Hamming weight for Dicke problems, `None` for the full space.
    pub fn weight(&self) -> Option<u32> {
        self.weight
    }

    /// Distinct values, strictly increasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degeneracies(&self) -> &[u64] {
        &self.degeneracies
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Index of the optimal value class.
    pub fn best_index(&self) -> usize {
        match self.orientation {
            Orientation::Maximize => self.values.len() - 1,
            Orientation::Minimize => 0,
        }
    }

    pub fn best_value(&self) -> f64 {
        self.values[self.best_index()]
    }

    /// Text cache: a `# n=.. k=.. total=..` header, then `value<TAB>count` lines.
    pub fn to_text(&self) -> String {
        let k = self.weight.map_or("full".to_string(), |k| k.to_string());
        let mut s = format!("# n={} k={} total={}\n", self.n, k, self.total);
        for (v, g) in self.values.iter().zip(&self.degeneracies) {
            writeln!(s, "{v}\t{g}").unwrap();
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| format_err(path, msg);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty histogram file".into()))?;
        let mut n = None;
        let mut weight = None;
        let mut total = None;
        for tok in header.strip_prefix('#').ok_or_else(|| bad("missing header".into()))?.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| bad(format!("bad header token {tok:?}")))?;
            match key {
                "n" => n = val.parse::<u32>().ok(),
                "k" if val == "full" => weight = Some(None),
                "k" => weight = val.parse::<u32>().ok().map(Some),
                "total" => total = val.parse::<u64>().ok(),
                _ => return Err(bad(format!("unknown header key {key:?}"))),
            }
        }
        let (n, weight, total) = match (n, weight, total) {
            (Some(n), Some(w), Some(t)) => (n, w, t),
            _ => return Err(bad("header needs n, k and total".into())),
        };
        let mut values = Vec::new();
        let mut degeneracies = Vec::new();
        for (i, line) in lines.enumerate() {
            let (v, g) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}: expected value<TAB>count", i + 2)))?;
            let v: f64 = v.parse().map_err(|_| bad(format!("line {}: bad value", i + 2)))?;
            let g: u64 = g.parse().map_err(|_| bad(format!("line {}: bad count", i + 2)))?;
            if !v.is_finite() || g == 0 || values.last().is_some_and(|&last| v <= last) {
                return Err(bad(format!("line {}: values must be finite, increasing, with positive counts", i + 2)));
            }
            values.push(v);
            degeneracies.push(g);
        }
        if values.is_empty() || degeneracies.iter().sum::<u64>() != total {
            return Err(bad("counts do not add up to the declared total".into()));
        }
        Ok(Self {
            n,
            weight,
            values,
            degeneracies,
            total,
            orientation: Orientation::Maximize,
        })
    }
}

/// Exact histogram of `f` over `basis`, counted on `workers` threads.
///
/// The index range is split into `workers` contiguous segments; Dicke
/// segments resume the Gosper chain at the unranked segment start. Per-worker
/// histograms are merged in worker order, and the result does not depend on
/// the worker count.
pub fn compress_cost<F>(f: F, basis: &BasisSet, workers: usize, orientation: Orientation) -> Result<CompressedCost>
where
    F: Fn(u64) -> f64 + Sync,
{
    if workers == 0 {
        return Err(domain("need at least one worker"));
    }
    if matches!(basis.constraint(), Constraint::Explicit(_)) {
        return Err(domain("compressed counting supports full and Dicke bases"));
    }
    let dim = basis.dim();
    let workers = workers.min(dim);
    let bounds: Vec<(usize, usize)> = (0..workers)
        .map(|w| (dim * w / workers, dim * (w + 1) / workers))
        .collect();
    let partials: Vec<Result<BTreeMap<i64, u64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bounds
            .iter()
            .map(|&(start, end)| {
                let f = &f;
                scope.spawn(move || {
                    let mut hist = BTreeMap::new();
                    for x in basis.range(start, end) {
                        let v = f(x);
                        if !v.is_finite() {
                            return Err(QaoaError::Data(format!("non-finite cost {v} at state {x:#b}")));
                        }
                        *hist.entry(order_key(v)).or_insert(0u64) += 1;
                    }
                    Ok(hist)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("counting worker panicked")).collect()
    });
    let mut merged = BTreeMap::new();
    for part in partials {
        for (k, c) in part? {
            *merged.entry(k).or_insert(0) += c;
        }
    }
    Ok(CompressedCost::from_histogram(basis, merged, orientation))
}

/// One amplitude per distinct-value class.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedState<'a> {
    amps: Vec<Complex64>,
    cost: &'a CompressedCost,
}

impl<'a> CompressedState<'a> {
    /// Common amplitude of every state in each value class.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn cost(&self) -> &'a CompressedCost {
        self.cost
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps
            .iter()
            .zip(&self.cost.degeneracies)
            .map(|(a, &g)| g as f64 * a.norm_sqr())
            .sum()
    }

    pub fn exp_value(&self) -> f64 {
        self.amps
            .iter()
            .zip(&self.cost.degeneracies)
            .zip(&self.cost.values)
            .map(|((a, &g), &c)| g as f64 * a.norm_sqr() * c)
            .sum()
    }

    pub fn ground_state_probability(&self) -> f64 {
        let j = self.cost.best_index();
        self.cost.degeneracies[j] as f64 * self.amps[j].norm_sqr()
    }
}

/// Grover-mixer QAOA on the compressed representation.
///
/// Every β of the schedule is applied as a Grover mixer (multi-angle rounds
/// apply several in sequence).
pub fn simulate_compressed<'a>(angles: &AngleSchedule, cost: &'a CompressedCost) -> CompressedState<'a> {
    let total = cost.total as f64;
    let mut amps = vec![Complex64::new(1.0 / total.sqrt(), 0.0); cost.values.len()];
    for r in 0..angles.p() {
        let gamma = angles.gammas()[r];
        for (a, &c) in amps.iter_mut().zip(&cost.values) {
            *a *= Complex64::from_polar(1.0, -gamma * c);
        }
        for &beta in angles.round_betas(r) {
            let overlap: Complex64 = amps
                .iter()
                .zip(&cost.degeneracies)
                .map(|(a, &g)| a * g as f64)
                .sum::<Complex64>()
                / total;
            let shift = (Complex64::from_polar(1.0, -beta) - 1.0) * overlap;
            amps.iter_mut().for_each(|a| *a += shift);
        }
    }
    CompressedState { amps, cost }
}

pub fn exp_value_compressed(st: &CompressedState<'_>) -> f64 {
    st.exp_value()
}

pub fn ground_state_probability_compressed(st: &CompressedState<'_>) -> f64 {
    st.ground_state_probability()
}
