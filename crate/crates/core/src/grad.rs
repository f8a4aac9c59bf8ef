//! Exact angle gradients of `⟨C⟩` by a reverse (adjoint) sweep.
//!
//! With `|ψ⟩` the state right after `U(θ) = e^{-iθH}` and `⟨λ|` the cost
//! observable pulled back through every later unitary,
//! `∂⟨C⟩/∂θ = 2 Im⟨λ|H|ψ⟩`. The backward pass starts from the final state
//! and `C|ψ⟩`, reads off each derivative, then un-applies the unitary to both
//! vectors. Intermediate states are recomputed, not stored, so memory is
//! four vectors for any `p` and the cost is a small constant times one
//! forward simulation.

use num_complex::Complex64;

use crate::cost::CostTable;
use crate::error::{domain, Result};
use crate::mixer::MixerOp;
use crate::sim::{
    apply_diagonal_phase, expectation, fwht, grover_mix, inner, weighted_inner, AngleSchedule, Evaluator,
    Mixers, StateVector,
};

/// Partial derivatives of `⟨C⟩`, shaped like the [`AngleSchedule`] they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGradient {
    pub betas: Vec<Vec<f64>>,
    pub gammas: Vec<f64>,
}

impl AngleGradient {
    /// Same layout as [`AngleSchedule::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.betas.iter().flatten().chain(&self.gammas).copied().collect()
    }

    pub fn max_abs_diff(&self, other: &AngleGradient) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Evaluator<'_> {
    /// `⟨C⟩` and its gradient with respect to every angle.
    pub fn value_and_gradient(&mut self, angles: &AngleSchedule) -> Result<(f64, AngleGradient)> {
        self.run(angles)?;
        let values = self.cost.values();
        let value = expectation(&self.psi, values);
        let dim = self.psi.len();

        self.lambda.resize(dim, Complex64::new(0.0, 0.0));
        for ((l, p), &c) in self.lambda.iter_mut().zip(&self.psi).zip(values) {
            *l = p * c;
        }

        let p = angles.p();
        let mut d_betas: Vec<Vec<f64>> = (0..p).map(|r| vec![0.0; angles.round_betas(r).len()]).collect();
        let mut d_gammas = vec![0.0; p];
        let inv_dim = 1.0 / dim as f64;

        for r in (0..p).rev() {
            let mixers = self.mixers.round(r);
            for (j, (m, &beta)) in mixers.iter().zip(angles.round_betas(r)).enumerate().rev() {
                let (psi, lam) = (&mut self.psi, &mut self.lambda);
                d_betas[r][j] = match &m.op {
                    MixerOp::XDiagonal(z) => {
                        fwht(psi);
                        fwht(lam);
                        let g = 2.0 * weighted_inner(lam, z, psi).im * inv_dim;
                        apply_diagonal_phase(psi, z, -beta, inv_dim);
                        apply_diagonal_phase(lam, z, -beta, inv_dim);
                        fwht(psi);
                        fwht(lam);
                        g
                    }
                    MixerOp::Eigen(e) => {
                        let (scratch, aux) = (&mut self.scratch, &mut self.aux);
                        aux.resize(dim, Complex64::new(0.0, 0.0));
                        e.pair_to_eigenbasis([psi, lam], [scratch, aux]);
                        let g = 2.0 * weighted_inner(aux, e.values(), scratch).im;
                        apply_diagonal_phase(scratch, e.values(), -beta, 1.0);
                        apply_diagonal_phase(aux, e.values(), -beta, 1.0);
                        e.pair_from_eigenbasis([scratch, aux], [psi, lam]);
                        g
                    }
                    MixerOp::Grover => {
                        let s_psi: Complex64 = psi.iter().sum();
                        let s_lam: Complex64 = lam.iter().sum();
                        let g = 2.0 * (s_lam.conj() * s_psi).im * inv_dim;
                        grover_mix(psi, -beta);
                        grover_mix(lam, -beta);
                        g
                    }
                };
            }
            let gamma = angles.gammas()[r];
            d_gammas[r] = 2.0 * weighted_inner(&self.lambda, values, &self.psi).im;
            apply_diagonal_phase(&mut self.psi, values, -gamma, 1.0);
            apply_diagonal_phase(&mut self.lambda, values, -gamma, 1.0);
        }
        debug_assert!({
            // the sweep must land back on the initial state
            let back = inner(&self.psi, &self.psi).re;
            (back - 1.0).abs() < 1e-8
        });
        Ok((
            value,
            AngleGradient {
                betas: d_betas,
                gammas: d_gammas,
            },
        ))
    }
}

/// Exact gradient of `⟨C⟩` by the adjoint method.
pub fn gradient(
    angles: &AngleSchedule,
    mixers: &Mixers<'_>,
    cost: &CostTable,
    initial: Option<&StateVector>,
) -> Result<AngleGradient> {
    let mut ev = Evaluator::new(cost, mixers.clone(), initial)?;
    Ok(ev.value_and_gradient(angles)?.1)
}

/// Central differences with step `h`: two simulations per angle.
pub fn finite_difference_gradient(
    angles: &AngleSchedule,
    mixers: &Mixers<'_>,
    cost: &CostTable,
    initial: Option<&StateVector>,
    h: f64,
) -> Result<AngleGradient> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("finite-difference step must be positive, got {h}")));
    }
    let mut ev = Evaluator::new(cost, mixers.clone(), initial)?;
    mixers.check_shape(angles)?;
    let x = angles.to_flat();
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = ev.expectation(&angles.with_flat(&probe)?)?;
        probe[i] = x[i] - h;
        let down = ev.expectation(&angles.with_flat(&probe)?)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    let shaped = angles.with_flat(&grad)?;
    Ok(AngleGradient {
        betas: shaped.nested_betas().to_vec(),
        gammas: shaped.gammas().to_vec(),
    })
}
