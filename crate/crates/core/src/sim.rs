//! Statevector simulation of the alternating-operator ansatz.
//!
//! A `p`-round run applies, for `r = 1..=p`, the phase separator
//! `e^{-iγ_r H_C}` followed by the round's mixer(s) `e^{-iβ H_M}` to the
//! initial state. `H_C` is diagonal with entries from a [`CostTable`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::BasisSet;
use crate::cost::CostTable;
use crate::error::{domain, Result};
use crate::mixer::{Mixer, MixerOp};

const NORM_TOL: f64 = 1e-10;
const PAR_LEN: usize = 1 << 16;
const SUM_CHUNK: usize = 1 << 14;

/// Complex amplitudes over a feasible basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: BasisSet,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Checks length and unit norm.
    pub fn new(basis: BasisSet, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(domain(format!(
                "{} amplitudes for a basis of {} states",
                amps.len(),
                basis.dim()
            )));
        }
        let norm = norm_sqr(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Uniform superposition over every state of `basis`.
pub fn initial_state(basis: &BasisSet) -> StateVector {
    let a = Complex64::new(1.0 / (basis.dim() as f64).sqrt(), 0.0);
    StateVector {
        basis: basis.clone(),
        amps: vec![a; basis.dim()],
    }
}

/// Ordered sum in fixed chunks, so results do not depend on thread count.
pub(crate) fn chunked_sum<T, F>(len: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    if len < PAR_LEN {
        return (0..len).map(f).sum();
    }
    let partial: Vec<T> = (0..len.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| (c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(len)).map(&f).sum())
        .collect();
    partial.into_iter().sum()
}

pub(crate) fn norm_sqr(amps: &[Complex64]) -> f64 {
    chunked_sum(amps.len(), |i| amps[i].norm_sqr())
}

pub(crate) fn expectation(amps: &[Complex64], values: &[f64]) -> f64 {
    chunked_sum(amps.len(), |i| amps[i].norm_sqr() * values[i])
}

/// `Σ conj(a_i) w_i b_i`.
pub(crate) fn weighted_inner(a: &[Complex64], w: &[f64], b: &[Complex64]) -> Complex64 {
    chunked_sum(a.len(), |i| a[i].conj() * b[i] * w[i])
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    chunked_sum(a.len(), |i| a[i].conj() * b[i])
}

fn for_each_indexed<F>(amps: &mut [Complex64], f: F)
where
    F: Fn(usize, &mut Complex64) + Sync,
{
    if amps.len() >= PAR_LEN {
        amps.par_iter_mut().enumerate().for_each(|(i, a)| f(i, a));
    } else {
        amps.iter_mut().enumerate().for_each(|(i, a)| f(i, a));
    }
}

/// `a_i ← a_i · e^{-i·angle·w_i} · scale`.
pub(crate) fn apply_diagonal_phase(amps: &mut [Complex64], weights: &[f64], angle: f64, scale: f64) {
    if angle == 0.0 && scale == 1.0 {
        return;
    }
    for_each_indexed(amps, |i, a| *a *= Complex64::from_polar(scale, -angle * weights[i]));
}

/// Unnormalized in-place Walsh-Hadamard butterflies; length must be a power of two.
pub(crate) fn fwht(amps: &mut [Complex64]) {
    let len = amps.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        let block = 2 * half;
        let butterfly = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        };
        if len >= PAR_LEN {
            if len / block >= 16 {
                amps.par_chunks_mut(block).for_each(butterfly);
            } else {
                for chunk in amps.chunks_mut(block) {
                    let (lo, hi) = chunk.split_at_mut(half);
                    lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a, b)| {
                        let (x, y) = (*a, *b);
                        *a = x + y;
                        *b = x - y;
                    });
                }
            }
        } else {
            amps.chunks_mut(block).for_each(butterfly);
        }
        half = block;
    }
}

/// Applies the normalized transform `H^{⊗n}` in place.
pub fn walsh_hadamard(state: &mut StateVector) -> Result<()> {
    if !state.basis.is_unconstrained() {
        return Err(domain("Walsh-Hadamard transform needs the full 2^n basis"));
    }
    fwht(&mut state.amps);
    let scale = 1.0 / (state.amps.len() as f64).sqrt();
    for_each_indexed(&mut state.amps, |_, a| *a *= scale);
    Ok(())
}

/// `|ψ⟩ ← e^{-iγ H_C}|ψ⟩`.
pub fn apply_phase_separator(state: &mut StateVector, gamma: f64, cost: &CostTable) -> Result<()> {
    if state.basis != *cost.basis() {
        return Err(domain("state and cost table live on different bases"));
    }
    apply_diagonal_phase(&mut state.amps, cost.values(), gamma, 1.0);
    Ok(())
}

/// `|ψ⟩ ← e^{-iβ H_M}|ψ⟩`.
pub fn apply_mixer(state: &mut StateVector, beta: f64, mixer: &Mixer) -> Result<()> {
    if state.basis != *mixer.basis() {
        return Err(domain("state and mixer live on different bases"));
    }
    let mut scratch = match mixer.op {
        MixerOp::Eigen(_) => vec![Complex64::new(0.0, 0.0); state.amps.len()],
        _ => Vec::new(),
    };
    mix(&mut state.amps, &mut scratch, beta, mixer);
    Ok(())
}

/// Mixer evolution on raw amplitudes; `scratch` is used only by eigen mixers.
pub(crate) fn mix(amps: &mut [Complex64], scratch: &mut [Complex64], beta: f64, mixer: &Mixer) {
    if beta == 0.0 {
        return;
    }
    match &mixer.op {
        MixerOp::XDiagonal(z) => {
            fwht(amps);
            // both transforms are unnormalized; fold 1/dim into the phase
            apply_diagonal_phase(amps, z, beta, 1.0 / amps.len() as f64);
            fwht(amps);
        }
        MixerOp::Eigen(e) => {
            e.to_eigenbasis(amps, scratch);
            apply_diagonal_phase(scratch, e.values(), beta, 1.0);
            e.from_eigenbasis(scratch, amps);
        }
        MixerOp::Grover => grover_mix(amps, beta),
    }
}

/// `a ← a + (e^{-iβ} - 1)⟨ψ₀|a⟩ψ₀` with `ψ₀` uniform.
pub(crate) fn grover_mix(amps: &mut [Complex64], beta: f64) {
    let total: Complex64 = chunked_sum(amps.len(), |i| amps[i]);
    let shift = (Complex64::from_polar(1.0, -beta) - 1.0) * total / amps.len() as f64;
    for_each_indexed(amps, |_, a| *a += shift);
}

/// Per-round mixing angles and phase-separator angles.
///
/// Each round has one `γ` and one `β` per mixer applied in that round.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    betas: Vec<Vec<f64>>,
    gammas: Vec<f64>,
}

impl AngleSchedule {
    /// One β per round.
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        Self::nested(betas.into_iter().map(|b| vec![b]).collect(), gammas)
    }

    /// Several β per round (multi-angle layers).
    pub fn nested(betas: Vec<Vec<f64>>, gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(domain("angle schedule needs at least one round"));
        }
        if betas.len() != gammas.len() {
            return Err(domain(format!(
                "{} beta rounds but {} gammas",
                betas.len(),
                gammas.len()
            )));
        }
        if betas.iter().any(Vec::is_empty) {
            return Err(domain("every round needs at least one beta"));
        }
        if betas.iter().flatten().chain(&gammas).any(|a| !a.is_finite()) {
            return Err(domain("angles must be finite"));
        }
        Ok(Self { betas, gammas })
    }

    /// Flat layout: all p betas, then all p gammas.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(domain("flat angle vector must have even length"));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }

    /// Rebuilds a schedule with this one's shape from a flat vector.
    pub fn with_flat(&self, x: &[f64]) -> Result<Self> {
        let nb: usize = self.betas.iter().map(Vec::len).sum();
        if x.len() != nb + self.gammas.len() {
            return Err(domain("flat angle vector does not match schedule shape"));
        }
        let mut it = x[..nb].iter().copied();
        let betas = self
            .betas
            .iter()
            .map(|r| it.by_ref().take(r.len()).collect())
            .collect();
        Self::nested(betas, x[nb..].to_vec())
    }

    /// All betas round by round, followed by the gammas.
    pub fn to_flat(&self) -> Vec<f64> {
        self.betas.iter().flatten().chain(&self.gammas).copied().collect()
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn round_betas(&self, r: usize) -> &[f64] {
        &self.betas[r]
    }

    pub fn nested_betas(&self) -> &[Vec<f64>] {
        &self.betas
    }

    /// Betas when every round has exactly one.
    pub fn betas(&self) -> Option<Vec<f64>> {
        self.betas
            .iter()
            .map(|r| (r.len() == 1).then(|| r[0]))
            .collect()
    }
}

/// Which mixer(s) each round applies.
#[derive(Debug, Clone)]
pub enum Mixers<'a> {
    /// The same mixer every round.
    Single(&'a Mixer),
    /// One mixer per round.
    PerRound(Vec<&'a Mixer>),
    /// A list of mixers per round, applied left to right.
    Nested(Vec<Vec<&'a Mixer>>),
}

impl<'a> Mixers<'a> {
    pub(crate) fn round(&self, r: usize) -> &[&'a Mixer] {
        match self {
            Mixers::Single(m) => std::slice::from_ref(m),
            Mixers::PerRound(v) => std::slice::from_ref(&v[r]),
            Mixers::Nested(v) => &v[r],
        }
    }

    fn all(&self) -> Vec<&'a Mixer> {
        match self {
            Mixers::Single(m) => vec![*m],
            Mixers::PerRound(v) => v.clone(),
            Mixers::Nested(v) => v.iter().flatten().copied().collect(),
        }
    }

    pub(crate) fn check_shape(&self, angles: &AngleSchedule) -> Result<()> {
        let p = angles.p();
        let rounds = match self {
            Mixers::Single(_) => p,
            Mixers::PerRound(v) => v.len(),
            Mixers::Nested(v) => v.len(),
        };
        if rounds != p {
            return Err(domain(format!("{rounds} mixer rounds for a {p}-round schedule")));
        }
        for r in 0..p {
            let (nm, nb) = (self.round(r).len(), angles.round_betas(r).len());
            if nm != nb {
                return Err(domain(format!("round {}: {nm} mixers but {nb} betas", r + 1)));
            }
        }
        Ok(())
    }

    fn needs_scratch(&self) -> bool {
        self.all().iter().any(|m| matches!(m.op, MixerOp::Eigen(_)))
    }
}

/// A finished run: the final state and the table it was evaluated against.
#[derive(Debug, Clone)]
pub struct SimResult<'a> {
    state: StateVector,
    cost: &'a CostTable,
}

impl<'a> SimResult<'a> {
    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn cost(&self) -> &'a CostTable {
        self.cost
    }

    /// `⟨ψ|H_C|ψ⟩`.
    pub fn exp_value(&self) -> f64 {
        expectation(&self.state.amps, self.cost.values())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.state.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.state.probabilities()
    }

    /// Total probability of every state attaining the optimum.
    pub fn ground_state_probability(&self) -> f64 {
        ground_state_probability(&self.state.amps, self.cost)
    }

    pub fn approx_ratio(&self) -> Option<f64> {
        self.cost.approx_ratio(self.exp_value())
    }

    pub fn into_state(self) -> StateVector {
        self.state
    }
}

pub(crate) fn ground_state_probability(amps: &[Complex64], cost: &CostTable) -> f64 {
    let best = cost.best_value();
    let values = cost.values();
    chunked_sum(amps.len(), |i| if values[i] == best { amps[i].norm_sqr() } else { 0.0 })
}

/// Reusable simulation context with preallocated buffers.
///
/// Holds one working vector and one scratch vector;
/// [`Evaluator::value_and_gradient`] adds the adjoint state and a second
/// scratch vector.
#[derive(Debug)]
pub struct Evaluator<'a> {
    pub(crate) cost: &'a CostTable,
    pub(crate) mixers: Mixers<'a>,
    pub(crate) initial: Option<&'a StateVector>,
    pub(crate) psi: Vec<Complex64>,
    pub(crate) scratch: Vec<Complex64>,
    pub(crate) lambda: Vec<Complex64>,
    pub(crate) aux: Vec<Complex64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(cost: &'a CostTable, mixers: Mixers<'a>, initial: Option<&'a StateVector>) -> Result<Self> {
        let basis = cost.basis();
        for m in mixers.all() {
            if m.basis() != basis {
                return Err(domain("mixer and cost table live on different bases"));
            }
        }
        if let Some(init) = initial {
            if init.basis() != basis {
                return Err(domain("initial state and cost table live on different bases"));
            }
            let norm = init.norm_sqr();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(domain(format!("initial state norm² is {norm}, expected 1")));
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        let scratch = if mixers.needs_scratch() {
            vec![zero; basis.dim()]
        } else {
            Vec::new()
        };
        Ok(Self {
            cost,
            mixers,
            initial,
            psi: vec![zero; basis.dim()],
            scratch,
            lambda: Vec::new(),
            aux: Vec::new(),
        })
    }

    pub fn cost(&self) -> &'a CostTable {
        self.cost
    }

    pub(crate) fn reset(&mut self) {
        match self.initial {
            Some(init) => self.psi.copy_from_slice(init.amplitudes()),
            None => {
                let a = Complex64::new(1.0 / (self.psi.len() as f64).sqrt(), 0.0);
                self.psi.fill(a);
            }
        }
    }

    /// Runs the circuit, leaving the final state in the working buffer.
    pub fn run(&mut self, angles: &AngleSchedule) -> Result<()> {
        self.mixers.check_shape(angles)?;
        self.reset();
        for r in 0..angles.p() {
            apply_diagonal_phase(&mut self.psi, self.cost.values(), angles.gammas()[r], 1.0);
            for (m, &beta) in self.mixers.round(r).iter().zip(angles.round_betas(r)) {
                mix(&mut self.psi, &mut self.scratch, beta, m);
            }
        }
        Ok(())
    }

    /// `⟨C⟩` for the given angles.
    pub fn expectation(&mut self, angles: &AngleSchedule) -> Result<f64> {
        self.run(angles)?;
        Ok(expectation(&self.psi, self.cost.values()))
    }

    /// Final state of the last [`Evaluator::run`].
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn ground_state_probability(&self) -> f64 {
        ground_state_probability(&self.psi, self.cost)
    }
}

/// Simulates the ansatz from `initial` (uniform superposition when `None`).
pub fn simulate<'a>(
    angles: &AngleSchedule,
    mixers: &Mixers<'_>,
    cost: &'a CostTable,
    initial: Option<&StateVector>,
) -> Result<SimResult<'a>> {
    let mut ev = Evaluator::new(cost, mixers.clone(), initial)?;
    ev.run(angles)?;
    Ok(SimResult {
        state: StateVector {
            basis: cost.basis().clone(),
            amps: ev.psi,
        },
        cost,
    })
}

/// Expectation value of a finished run.
pub fn exp_value(r: &SimResult<'_>) -> f64 {
    r.exp_value()
}
