//! Dense reference simulator: explicit Hamiltonians on the full 2^n space
//! built from Kronecker products of Pauli matrices, evolved with a
//! scaling-and-squaring Taylor matrix exponential.

#![allow(dead_code)]

use num_complex::Complex64 as C;

/// Square matrix, row-major.
#[derive(Clone, Debug)]
pub struct Dense {
    pub dim: usize,
    pub a: Vec<C>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, a: vec![C::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[i * d.len() + i] = C::new(v, 0.0);
        }
        m
    }

    pub fn from_2x2(e: [[C; 2]; 2]) -> Self {
        Self { dim: 2, a: vec![e[0][0], e[0][1], e[1][0], e[1][1]] }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (self.dim, other.dim);
        let mut m = Self::zeros(p * q);
        for i in 0..p {
            for j in 0..p {
                let s = self.a[i * p + j];
                for k in 0..q {
                    for l in 0..q {
                        m.a[(i * q + k) * p * q + j * q + l] = s * other.a[k * q + l];
                    }
                }
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let s = self.a[i * d + k];
                if s == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    m.a[i * d + j] += s * other.a[k * d + j];
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect() }
    }

    pub fn scale(&self, s: C) -> Self {
        Self { dim: self.dim, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.a[i * d + j] * v[j]).sum()).collect()
    }

    fn one_norm(&self) -> f64 {
        let d = self.dim;
        (0..d).map(|j| (0..d).map(|i| self.a[i * d + j].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `e^{A}` by scaling and squaring with a truncated Taylor series.
    pub fn expm(&self) -> Self {
        let norm = self.one_norm();
        let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
        let a = self.scale(C::new(0.5f64.powi(squarings as i32), 0.0));
        let mut term = Self::identity(self.dim);
        let mut sum = Self::identity(self.dim);
        for k in 1..=30 {
            term = term.matmul(&a).scale(C::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    /// `e^{-i t H}`.
    pub fn evolve(&self, t: f64) -> Self {
        self.scale(C::new(0.0, -t)).expm()
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn pauli_x() -> Dense {
    Dense::from_2x2([[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]])
}

pub fn pauli_y() -> Dense {
    Dense::from_2x2([[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]])
}

/// Product of single-qubit operators; qubit `i` is bit `i` of the state
/// index, so qubit `n - 1` is the leftmost Kronecker factor.
pub fn pauli_string(ops: &[(u32, &Dense)], n: u32) -> Dense {
    let mut m = Dense::identity(1);
    for q in (0..n).rev() {
        let factor = ops.iter().find(|(i, _)| *i == q).map_or_else(|| Dense::identity(2), |(_, op)| (*op).clone());
        m = m.kron(&factor);
    }
    m
}

pub fn transverse_field(n: u32) -> Dense {
    let x = pauli_x();
    (0..n).fold(Dense::zeros(1 << n), |acc, i| acc.add(&pauli_string(&[(i, &x)], n)))
}

/// `Σ X_i X_j + Y_i Y_j` over the given pairs.
pub fn xy_model(n: u32, pairs: &[(u32, u32)]) -> Dense {
    let (x, y) = (pauli_x(), pauli_y());
    pairs.iter().fold(Dense::zeros(1 << n), |acc, &(i, j)| {
        acc.add(&pauli_string(&[(i, &x), (j, &x)], n)).add(&pauli_string(&[(i, &y), (j, &y)], n))
    })
}

pub fn all_pairs(n: u32) -> Vec<(u32, u32)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Cycle over the qubits; two qubits share a single coupling.
pub fn cycle_pairs(n: u32) -> Vec<(u32, u32)> {
    match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

/// Uniform superposition over the states with the given Hamming weight, or
/// over all states.
pub fn uniform_state(n: u32, weight: Option<u32>) -> Vec<C> {
    let members: Vec<bool> = (0..1u64 << n).map(|x| weight.is_none_or(|k| x.count_ones() == k)).collect();
    let count = members.iter().filter(|&&m| m).count() as f64;
    members.iter().map(|&m| if m { c(1.0 / count.sqrt(), 0.0) } else { c(0.0, 0.0) }).collect()
}

pub fn projector(v: &[C]) -> Dense {
    let d = v.len();
    let mut m = Dense::zeros(d);
    for i in 0..d {
        for j in 0..d {
            m.a[i * d + j] = v[i] * v[j].conj();
        }
    }
    m
}

/// Alternating evolution: `e^{-iγ_r C}` then `e^{-iβ_r H_M}` for each round.
pub fn evolve_ansatz(psi0: &[C], cost_diag: &[f64], mixer: &Dense, betas: &[f64], gammas: &[f64]) -> Vec<C> {
    let mut psi = psi0.to_vec();
    for (&b, &g) in betas.iter().zip(gammas) {
        psi = psi.iter().zip(cost_diag).map(|(a, &cv)| a * C::from_polar(1.0, -g * cv)).collect();
        psi = mixer.evolve(b).apply(&psi);
    }
    psi
}

pub fn expectation(psi: &[C], cost_diag: &[f64]) -> f64 {
    psi.iter().zip(cost_diag).map(|(a, &cv)| a.norm_sqr() * cv).sum()
}

/// Largest entrywise distance after removing the best-fit global phase.
pub fn phase_aligned_distance(a: &[C], b: &[C]) -> f64 {
    let overlap: C = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x * phase - y).norm()).fold(0.0, f64::max)
}
