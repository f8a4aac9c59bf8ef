//! Mixer Hamiltonians in the forms the simulator consumes.
//!
//! Sums of Pauli-X products are stored as their Z-basis diagonal: conjugating
//! by `H^{⊗n}` turns every `X_i` into `Z_i`, so the evolution is two
//! Walsh-Hadamard transforms around a diagonal phase. Mixers that do not
//! factor this way (Clique, Ring, user matrices) are diagonalized once and
//! applied as `V e^{-iβD} V†` on the feasible subspace.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{binomial, BasisSet, Constraint};
use crate::error::{domain, format_err, QaoaError, Result};

/// Largest subspace dimension for which a dense eigendecomposition is attempted.
pub const MAX_EIGEN_DIM: usize = 8192;

const HERMITIAN_TOL: f64 = 1e-10;
const PAR_ROWS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixerKind {
    XDiagonal,
    Eigen,
    Grover,
    CustomEigen,
}

impl MixerKind {
    fn code(self) -> u8 {
        match self {
            MixerKind::XDiagonal => 0,
            MixerKind::Eigen => 1,
            MixerKind::Grover => 2,
            MixerKind::CustomEigen => 3,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => MixerKind::XDiagonal,
            1 => MixerKind::Eigen,
            2 => MixerKind::Grover,
            3 => MixerKind::CustomEigen,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Vectors {
    /// `v` and its transpose, both row-major.
    Real { v: Vec<f64>, vt: Vec<f64> },
    /// `v` and its conjugate transpose, both row-major.
    Complex { v: Vec<Complex64>, vh: Vec<Complex64> },
}

/// `H = V diag(D) V†` with `V` unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    dim: usize,
    values: Vec<f64>,
    vectors: Vectors,
}

impl Eigensystem {
    fn from_real_symmetric(dim: usize, h: Vec<f64>) -> Self {
        let eig = DMatrix::from_row_slice(dim, dim, &h).symmetric_eigen();
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let mut v = vec![0.0; dim * dim];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..dim {
                v[row * dim + col] = eig.eigenvectors[(row, src)];
            }
        }
        Self::with_real(dim, values, v)
    }

    fn from_hermitian(dim: usize, h: &[Complex64]) -> Self {
        if h.iter().all(|z| z.im == 0.0) {
            return Self::from_real_symmetric(dim, h.iter().map(|z| z.re).collect());
        }
        let eig = DMatrix::from_row_slice(dim, dim, h).symmetric_eigen();
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let mut v = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..dim {
                v[row * dim + col] = eig.eigenvectors[(row, src)];
            }
        }
        Self::with_complex(dim, values, v)
    }

    fn with_real(dim: usize, values: Vec<f64>, v: Vec<f64>) -> Self {
        let mut vt = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                vt[c * dim + r] = v[r * dim + c];
            }
        }
        Self {
            dim,
            values,
            vectors: Vectors::Real { v, vt },
        }
    }

    fn with_complex(dim: usize, values: Vec<f64>, v: Vec<Complex64>) -> Self {
        let mut vh = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                vh[c * dim + r] = v[r * dim + c].conj();
            }
        }
        Self {
            dim,
            values,
            vectors: Vectors::Complex { v, vh },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `(row, col)` of `V`; column `col` is the eigenvector of `values()[col]`.
    pub fn vector_entry(&self, row: usize, col: usize) -> Complex64 {
        match &self.vectors {
            Vectors::Real { v, .. } => Complex64::new(v[row * self.dim + col], 0.0),
            Vectors::Complex { v, .. } => v[row * self.dim + col],
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.vectors, Vectors::Real { .. })
    }

    /// `dst = V† src`.
    pub fn to_eigenbasis(&self, src: &[Complex64], dst: &mut [Complex64]) {
        match &self.vectors {
            Vectors::Real { vt, .. } => gemv_real(vt, src, dst),
            Vectors::Complex { vh, .. } => gemv_complex(vh, src, dst),
        }
    }

    /// `dst = V src`.
    pub fn from_eigenbasis(&self, src: &[Complex64], dst: &mut [Complex64]) {
        match &self.vectors {
            Vectors::Real { v, .. } => gemv_real(v, src, dst),
            Vectors::Complex { v, .. } => gemv_complex(v, src, dst),
        }
    }

    /// `V†` applied to two vectors in one pass over the matrix.
    pub(crate) fn pair_to_eigenbasis(&self, src: [&[Complex64]; 2], dst: [&mut [Complex64]; 2]) {
        match &self.vectors {
            Vectors::Real { vt, .. } => gemv_real_pair(vt, src, dst),
            Vectors::Complex { vh, .. } => gemv_complex_pair(vh, src, dst),
        }
    }

    /// `V` applied to two vectors in one pass over the matrix.
    pub(crate) fn pair_from_eigenbasis(&self, src: [&[Complex64]; 2], dst: [&mut [Complex64]; 2]) {
        match &self.vectors {
            Vectors::Real { v, .. } => gemv_real_pair(v, src, dst),
            Vectors::Complex { v, .. } => gemv_complex_pair(v, src, dst),
        }
    }

    /// Dense `V diag(D) V†`, row-major.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] = (0..d)
                    .map(|j| self.vector_entry(r, j) * self.values[j] * self.vector_entry(c, j).conj())
                    .sum();
            }
        }
        out
    }
}

fn ascending(vals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    order
}

/// Dot product over eight independent lanes so the additions pipeline and
/// vectorize; the summation order is fixed.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ac, at) = a.split_at(a.len() / 8 * 8);
    let (bc, bt) = b.split_at(ac.len());
    for (x, y) in ac.chunks_exact(8).zip(bc.chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    for (x, y) in at.iter().zip(bt) {
        acc[0] += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

fn dot_complex(r: &[Complex64], src: &[Complex64]) -> Complex64 {
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    let (rc, rt) = r.split_at(r.len() / 4 * 4);
    let (sc, st) = src.split_at(rc.len());
    for (a, z) in rc.chunks_exact(4).zip(sc.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += a[l] * z[l];
        }
    }
    for (a, z) in rt.iter().zip(st) {
        acc[0] += a * z;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn split(src: &[Complex64]) -> [Vec<f64>; 2] {
    [src.iter().map(|z| z.re).collect(), src.iter().map(|z| z.im).collect()]
}

fn gemv_real(m: &[f64], src: &[Complex64], dst: &mut [Complex64]) {
    let d = src.len();
    let [re, im] = split(src);
    let row = |(i, out): (usize, &mut Complex64)| {
        let r = &m[i * d..(i + 1) * d];
        *out = Complex64::new(dot(r, &re), dot(r, &im));
    };
    if d >= PAR_ROWS {
        dst.par_iter_mut().enumerate().for_each(row);
    } else {
        dst.iter_mut().enumerate().for_each(row);
    }
}

fn gemv_real_pair(m: &[f64], src: [&[Complex64]; 2], dst: [&mut [Complex64]; 2]) {
    let d = src[0].len();
    let ([re0, im0], [re1, im1]) = (split(src[0]), split(src[1]));
    let [d0, d1] = dst;
    let row = |(i, (o0, o1)): (usize, (&mut Complex64, &mut Complex64))| {
        let r = &m[i * d..(i + 1) * d];
        *o0 = Complex64::new(dot(r, &re0), dot(r, &im0));
        *o1 = Complex64::new(dot(r, &re1), dot(r, &im1));
    };
    if d >= PAR_ROWS {
        d0.par_iter_mut().zip(d1.par_iter_mut()).enumerate().for_each(row);
    } else {
        d0.iter_mut().zip(d1.iter_mut()).enumerate().for_each(row);
    }
}

fn gemv_complex(m: &[Complex64], src: &[Complex64], dst: &mut [Complex64]) {
    let d = src.len();
    let row = |(i, out): (usize, &mut Complex64)| *out = dot_complex(&m[i * d..(i + 1) * d], src);
    if d >= PAR_ROWS {
        dst.par_iter_mut().enumerate().for_each(row);
    } else {
        dst.iter_mut().enumerate().for_each(row);
    }
}

fn gemv_complex_pair(m: &[Complex64], src: [&[Complex64]; 2], dst: [&mut [Complex64]; 2]) {
    let d = src[0].len();
    let [d0, d1] = dst;
    let row = |(i, (o0, o1)): (usize, (&mut Complex64, &mut Complex64))| {
        let r = &m[i * d..(i + 1) * d];
        *o0 = dot_complex(r, src[0]);
        *o1 = dot_complex(r, src[1]);
    };
    if d >= PAR_ROWS {
        d0.par_iter_mut().zip(d1.par_iter_mut()).enumerate().for_each(row);
    } else {
        d0.iter_mut().zip(d1.iter_mut()).enumerate().for_each(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum MixerOp {
    /// Eigenvalue of `f(Z)` on each computational basis state.
    XDiagonal(Vec<f64>),
    Eigen(Eigensystem),
    Grover,
}

/// A mixer Hamiltonian restricted to a feasible basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixer {
    kind: MixerKind,
    basis: BasisSet,
    pub(crate) op: MixerOp,
}

impl Mixer {
    pub fn kind(&self) -> MixerKind {
        self.kind
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    /// Z-basis diagonal of an X-type mixer.
    pub fn zdiag(&self) -> Option<&[f64]> {
        match &self.op {
            MixerOp::XDiagonal(z) => Some(z),
            _ => None,
        }
    }

    pub fn eigensystem(&self) -> Option<&Eigensystem> {
        match &self.op {
            MixerOp::Eigen(e) => Some(e),
            _ => None,
        }
    }
}

/// `Σ_r Σ_{|S|=r} Π_{i∈S} X_i` over the given term orders.
///
/// On a basis state each `Z_i` contributes ±1, so the diagonal depends only
/// on the popcount: the value for weight `w` is the sum of elementary
/// symmetric polynomials `e_r` of `n - w` copies of `+1` and `w` copies of `-1`.
pub fn mixer_x(term_orders: &[u32], n: u32) -> Result<Mixer> {
    let basis = BasisSet::unconstrained(n)?;
    if term_orders.is_empty() {
        return Err(domain("mixer_x needs at least one term order"));
    }
    if let Some(&r) = term_orders.iter().find(|&&r| r == 0 || r > n) {
        return Err(domain(format!("term order {r} outside 1..={n}")));
    }
    let nu = n as usize;
    let by_weight: Vec<f64> = (0..=nu)
        .map(|w| {
            // e[r] after folding in each qubit's eigenvalue
            let mut e = vec![0.0f64; nu + 1];
            e[0] = 1.0;
            for q in 0..nu {
                let z = if q < w { -1.0 } else { 1.0 };
                for r in (1..=q + 1).rev() {
                    e[r] += z * e[r - 1];
                }
            }
            term_orders.iter().map(|&r| e[r as usize]).sum()
        })
        .collect();
    let zdiag = (0..basis.dim())
        .into_par_iter()
        .map(|x| by_weight[(x as u64).count_ones() as usize])
        .collect();
    Ok(Mixer {
        kind: MixerKind::XDiagonal,
        basis,
        op: MixerOp::XDiagonal(zdiag),
    })
}

/// `Σ_t c_t Π_{i∈S_t} X_i` for explicit qubit subsets `S_t`.
pub fn mixer_x_terms(terms: &[(Vec<u32>, f64)], n: u32) -> Result<Mixer> {
    let basis = BasisSet::unconstrained(n)?;
    let mut masks = Vec::with_capacity(terms.len());
    for (qubits, coeff) in terms {
        if qubits.is_empty() {
            return Err(domain("mixer term with no qubits"));
        }
        let mut mask = 0u64;
        for &q in qubits {
            if q >= n {
                return Err(domain(format!("qubit {q} out of range for {n} qubits")));
            }
            mask |= 1 << q;
        }
        masks.push((mask, *coeff));
    }
    let zdiag = (0..basis.dim() as u64)
        .into_par_iter()
        .map(|x| {
            masks
                .iter()
                .map(|&(m, c)| if (x & m).count_ones() % 2 == 0 { c } else { -c })
                .sum()
        })
        .collect();
    Ok(Mixer {
        kind: MixerKind::XDiagonal,
        basis,
        op: MixerOp::XDiagonal(zdiag),
    })
}

fn check_xy_args(n: u32, k: u32) -> Result<BasisSet> {
    if k == 0 || k >= n {
        return Err(domain(format!("Hamming weight {k} must lie in 1..={}", n.saturating_sub(1))));
    }
    let dim = binomial(n as u64, k as u64).unwrap_or(u64::MAX);
    if dim > MAX_EIGEN_DIM as u64 {
        return Err(QaoaError::Capacity(format!(
            "C({n},{k}) = {dim} exceeds the dense eigendecomposition limit {MAX_EIGEN_DIM}"
        )));
    }
    BasisSet::dicke(n, k)
}

/// Dense matrix of `Σ_{(a,b)} X_a X_b + Y_a Y_b` on the weight-`k` subspace.
///
/// `XX + YY` maps `|01⟩ ↔ 2|10⟩` and annihilates `|00⟩`, `|11⟩`, so entry
/// `(x, y)` is 2 when `y` is `x` with one listed pair's differing bits swapped.
pub fn xy_hamiltonian(basis: &BasisSet, pairs: &[(u32, u32)]) -> Vec<f64> {
    let d = basis.dim();
    let mut h = vec![0.0; d * d];
    h.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        let x = basis.state(i);
        for &(a, b) in pairs {
            if ((x >> a) ^ (x >> b)) & 1 == 1 {
                let y = x ^ (1 << a) ^ (1 << b);
                let j = basis.index_of(y).expect("swap preserves weight");
                row[j] = 2.0;
            }
        }
    });
    h
}

pub fn clique_pairs(n: u32) -> Vec<(u32, u32)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Adjacent pairs `(i, i+1)`, plus `(n-1, 0)` when `closed`.
pub fn ring_pairs(n: u32, closed: bool) -> Vec<(u32, u32)> {
    let mut pairs: Vec<(u32, u32)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if closed && n > 2 {
        pairs.push((0, n - 1));
    }
    pairs
}

fn xy_mixer(n: u32, k: u32, pairs: &[(u32, u32)]) -> Result<Mixer> {
    let basis = check_xy_args(n, k)?;
    let h = xy_hamiltonian(&basis, pairs);
    let eig = Eigensystem::from_real_symmetric(basis.dim(), h);
    Ok(Mixer {
        kind: MixerKind::Eigen,
        basis,
        op: MixerOp::Eigen(eig),
    })
}

/// Clique mixer `Σ_{i<j} X_i X_j + Y_i Y_j` on Dicke(n, k).
pub fn mixer_clique(n: u32, k: u32) -> Result<Mixer> {
    xy_mixer(n, k, &clique_pairs(n))
}

/// Ring mixer on Dicke(n, k), including the wrap-around pair.
pub fn mixer_ring(n: u32, k: u32) -> Result<Mixer> {
    xy_mixer(n, k, &ring_pairs(n, true))
}

/// Ring mixer without the `(n-1, 0)` pair.
pub fn mixer_open_ring(n: u32, k: u32) -> Result<Mixer> {
    xy_mixer(n, k, &ring_pairs(n, false))
}

/// Grover mixer: the projector onto the uniform superposition of `basis`.
pub fn mixer_grover(basis: &BasisSet) -> Mixer {
    Mixer {
        kind: MixerKind::Grover,
        basis: basis.clone(),
        op: MixerOp::Grover,
    }
}

/// Diagonalizes a user-supplied Hermitian matrix (row-major, `dim × dim`).
pub fn mixer_custom(h: &[Complex64], basis: &BasisSet) -> Result<Mixer> {
    let d = basis.dim();
    if d > MAX_EIGEN_DIM {
        return Err(QaoaError::Capacity(format!(
            "dimension {d} exceeds the dense eigendecomposition limit {MAX_EIGEN_DIM}"
        )));
    }
    if h.len() != d * d {
        return Err(domain(format!("matrix has {} entries, expected {d}x{d}", h.len())));
    }
    if let Some(z) = h.iter().find(|z| !z.is_finite()) {
        return Err(QaoaError::Data(format!("non-finite matrix entry {z}")));
    }
    for r in 0..d {
        for c in r..d {
            let dev = (h[r * d + c] - h[c * d + r].conj()).norm();
            if dev > HERMITIAN_TOL {
                return Err(domain(format!(
                    "matrix is not Hermitian: |H[{r},{c}] - conj(H[{c},{r}])| = {dev:e}"
                )));
            }
        }
    }
    // symmetrize so the eigensolver sees an exactly Hermitian matrix
    let mut sym = h.to_vec();
    for r in 0..d {
        for c in r..d {
            let z = (h[r * d + c] + h[c * d + r].conj()) * 0.5;
            sym[r * d + c] = z;
            sym[c * d + r] = z.conj();
        }
    }
    Ok(Mixer {
        kind: MixerKind::CustomEigen,
        basis: basis.clone(),
        op: MixerOp::Eigen(Eigensystem::from_hermitian(d, &sym)),
    })
}

const MAGIC: &[u8; 4] = b"QMIX";
const VERSION: u16 = 1;
const UNCONSTRAINED_K: u32 = u32::MAX;
const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 4 + 8;

/// Writes an eigendecomposed mixer in the little-endian `QMIX` format.
///
/// Layout: magic, u16 version, u8 kind, u32 n, u32 k (`u32::MAX` when
/// unconstrained), u64 dim, `dim` f64 eigenvalues, `dim²` complex entries of
/// `V` (row-major, real then imaginary), then a CRC32 of every preceding byte.
/// The file is written to a sibling temp path and renamed into place.
pub fn save_mixer(m: &Mixer, path: &Path) -> Result<()> {
    let eig = match &m.op {
        MixerOp::Eigen(e) => e,
        _ => return Err(domain("only eigendecomposed mixers can be saved")),
    };
    let k = match m.basis.constraint() {
        Constraint::Unconstrained => UNCONSTRAINED_K,
        Constraint::HammingWeight(k) => *k,
        Constraint::Explicit(_) => {
            return Err(QaoaError::Compatibility(
                "mixers on explicit state lists cannot be cached".into(),
            ))
        }
    };
    let d = eig.dim;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * d + 16 * d * d + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(m.kind.code());
    buf.extend_from_slice(&m.basis.n().to_le_bytes());
    buf.extend_from_slice(&k.to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    for v in &eig.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for r in 0..d {
        for c in 0..d {
            let z = eig.vector_entry(r, c);
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    write_atomic(path, &buf)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a mixer written by [`save_mixer`], verifying magic, version and CRC.
pub fn load_mixer(path: &Path) -> Result<Mixer> {
    let buf = fs::read(path)?;
    let bad = |msg: &str| format_err(path, msg);
    if buf.len() < HEADER_LEN + 4 {
        return Err(bad("file too short"));
    }
    if &buf[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let (body, tail) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(bad("CRC mismatch"));
    }
    let u16_at = |o: usize| u16::from_le_bytes(body[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    if u16_at(4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let kind = MixerKind::from_code(body[6]).ok_or_else(|| bad("unknown mixer kind"))?;
    if !matches!(kind, MixerKind::Eigen | MixerKind::CustomEigen) {
        return Err(bad("file does not hold an eigendecomposed mixer"));
    }
    let n = u32_at(7);
    let k = u32_at(11);
    let dim = u64_at(15);
    if dim > MAX_EIGEN_DIM as u64 {
        return Err(bad("dimension exceeds the dense limit"));
    }
    let d = dim as usize;
    if body.len() != HEADER_LEN + 8 * d + 16 * d * d {
        return Err(bad("payload length does not match dimension"));
    }
    let basis = if k == UNCONSTRAINED_K {
        BasisSet::unconstrained(n)
    } else {
        BasisSet::dicke(n, k)
    }
    .map_err(|e| bad(&e.to_string()))?;
    if basis.dim() != d {
        return Err(bad("dimension does not match n and k"));
    }
    let mut off = HEADER_LEN;
    let values: Vec<f64> = (0..d).map(|i| f64_at(off + 8 * i)).collect();
    off += 8 * d;
    let v: Vec<Complex64> = (0..d * d)
        .map(|i| Complex64::new(f64_at(off + 16 * i), f64_at(off + 16 * i + 8)))
        .collect();
    let eig = if v.iter().all(|z| z.im.to_bits() == 0) {
        Eigensystem::with_real(d, values, v.iter().map(|z| z.re).collect())
    } else {
        Eigensystem::with_complex(d, values, v)
    };
    Ok(Mixer {
        kind,
        basis,
        op: MixerOp::Eigen(eig),
    })
}

/// Loads a cached mixer and checks that it lives on `basis`.
pub fn load_mixer_for(path: &Path, basis: &BasisSet) -> Result<Mixer> {
    let m = load_mixer(path)?;
    if m.basis != *basis {
        return Err(QaoaError::Compatibility(format!(
            "{} holds a mixer for n={} {:?}, requested n={} {:?}",
            path.display(),
            m.basis.n(),
            m.basis.constraint(),
            basis.n(),
            basis.constraint()
        )));
    }
    Ok(m)
}

/// Loads the mixer at `path` if it exists, otherwise builds it and saves it there.
pub fn cached_mixer(path: &Path, basis: &BasisSet, build: impl FnOnce() -> Result<Mixer>) -> Result<Mixer> {
    if path.exists() {
        return load_mixer_for(path, basis);
    }
    let m = build()?;
    save_mixer(&m, path)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn unitarity_dev(e: &Eigensystem) -> f64 {
        let d = e.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let dot: Complex64 = (0..d).map(|r| e.vector_entry(r, a).conj() * e.vector_entry(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    #[test]
    fn mixer_x_examples() {
        assert_eq!(mixer_x(&[1], 2).unwrap().zdiag().unwrap(), &[2., 0., 0., -2.]);
        assert_eq!(mixer_x(&[2], 2).unwrap().zdiag().unwrap(), &[1., -1., -1., 1.]);
        assert_eq!(mixer_x(&[1], 3).unwrap().zdiag().unwrap()[0b101], -1.0);
        assert!(mixer_x(&[3], 2).is_err());
        assert!(mixer_x(&[0], 2).is_err());
    }

    #[test]
    fn mixer_x_matches_subset_enumeration() {
        for n in 1..=6u32 {
            for orders in [vec![1], vec![2], vec![1, 3], vec![n]] {
                if orders.iter().any(|&r| r > n) {
                    continue;
                }
                let m = mixer_x(&orders, n).unwrap();
                for x in 0..1u64 << n {
                    let mut want = 0.0;
                    for s in 1..1u64 << n {
                        if orders.contains(&s.count_ones()) {
                            want += if (x & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        }
                    }
                    assert_eq!(m.zdiag().unwrap()[x as usize], want, "n={n} orders={orders:?} x={x}");
                }
            }
        }
    }

    #[test]
    fn mixer_x_terms_examples() {
        assert_eq!(mixer_x_terms(&[(vec![0], 1.0)], 1).unwrap().zdiag().unwrap(), &[1., -1.]);
        let single = mixer_x_terms(&[(vec![0], 1.0), (vec![1], 1.0)], 2).unwrap();
        assert_eq!(single.zdiag(), mixer_x(&[1], 2).unwrap().zdiag());
        let pair = mixer_x_terms(&[(vec![0, 1], 2.0)], 2).unwrap();
        assert_eq!(pair.zdiag().unwrap(), &[2., -2., -2., 2.]);
        assert!(mixer_x_terms(&[(vec![2], 1.0)], 2).is_err());
        assert!(mixer_x_terms(&[(vec![], 1.0)], 2).is_err());
    }

    #[test]
    fn clique_two_qubits() {
        let m = mixer_clique(2, 1).unwrap();
        let basis = m.basis().clone();
        assert_eq!(xy_hamiltonian(&basis, &clique_pairs(2)), [0., 2., 2., 0.]);
        let e = m.eigensystem().unwrap();
        assert!((e.values()[0] + 2.0).abs() < 1e-12 && (e.values()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clique_three_one_is_all_twos() {
        let basis = BasisSet::dicke(3, 1).unwrap();
        let h = xy_hamiltonian(&basis, &clique_pairs(3));
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(h[r * 3 + c], if r == c { 0.0 } else { 2.0 });
            }
        }
        assert_eq!(h, xy_hamiltonian(&basis, &ring_pairs(3, true)));
    }

    #[test]
    fn ring_adjacency() {
        let basis = BasisSet::dicke(4, 1).unwrap();
        let h = xy_hamiltonian(&basis, &ring_pairs(4, true));
        // basis order: 0001, 0010, 0100, 1000
        assert_eq!(&h[0..4], &[0., 2., 0., 2.]);
        let open = xy_hamiltonian(&basis, &ring_pairs(4, false));
        assert_eq!(&open[0..4], &[0., 2., 0., 0.]);
    }

    #[test]
    fn ring_row_sums_count_boundaries() {
        for (n, k) in [(5, 2), (6, 3), (7, 3)] {
            let basis = BasisSet::dicke(n, k).unwrap();
            let d = basis.dim();
            let h = xy_hamiltonian(&basis, &ring_pairs(n, true));
            for i in 0..d {
                let x = basis.state(i);
                let boundaries = (0..n).filter(|&a| ((x >> a) ^ (x >> ((a + 1) % n))) & 1 == 1).count();
                let row: f64 = h[i * d..(i + 1) * d].iter().sum();
                assert_eq!(row / 2.0, boundaries as f64);
                assert_eq!(h[i * d + i], 0.0);
            }
        }
    }

    #[test]
    fn xy_matrices_symmetric_with_entries_zero_or_two() {
        let basis = BasisSet::dicke(7, 3).unwrap();
        let d = basis.dim();
        for pairs in [clique_pairs(7), ring_pairs(7, true)] {
            let h = xy_hamiltonian(&basis, &pairs);
            for r in 0..d {
                for cc in 0..d {
                    assert_eq!(h[r * d + cc], h[cc * d + r]);
                    assert!(h[r * d + cc] == 0.0 || h[r * d + cc] == 2.0);
                }
            }
        }
    }

    #[test]
    fn reconstruction_and_unitarity() {
        for (n, k) in [(4, 2), (6, 3), (8, 3), (12, 2)] {
            let basis = BasisSet::dicke(n, k).unwrap();
            for (pairs, m) in [
                (clique_pairs(n), mixer_clique(n, k).unwrap()),
                (ring_pairs(n, true), mixer_ring(n, k).unwrap()),
            ] {
                let e = m.eigensystem().unwrap();
                let h: Vec<Complex64> = xy_hamiltonian(&basis, &pairs).into_iter().map(c).collect();
                assert!(max_dev(&e.reconstruct(), &h) <= 1e-10, "n={n} k={k}");
                assert!(unitarity_dev(e) <= 1e-10);
            }
        }
    }

    #[test]
    fn xy_argument_errors() {
        assert!(matches!(mixer_clique(4, 0), Err(QaoaError::Domain(_))));
        assert!(matches!(mixer_clique(4, 4), Err(QaoaError::Domain(_))));
        assert!(matches!(mixer_clique(20, 10), Err(QaoaError::Capacity(_))));
    }

    #[test]
    fn custom_examples() {
        let basis = BasisSet::unconstrained(1).unwrap();
        let zero = mixer_custom(&[c(0.); 4], &basis).unwrap();
        assert_eq!(zero.eigensystem().unwrap().values(), &[0., 0.]);
        let diag = mixer_custom(&[c(1.), c(0.), c(0.), c(2.)], &basis).unwrap();
        let e = diag.eigensystem().unwrap();
        assert_eq!(e.values(), &[1., 2.]);
        assert!((e.vector_entry(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!(e.vector_entry(1, 0).norm() < 1e-12);
    }

    #[test]
    fn custom_complex_hermitian() {
        let basis = BasisSet::unconstrained(2).unwrap();
        let i = Complex64::i();
        #[rustfmt::skip]
        let h = vec![
            c(1.), c(0.5) + i * 0.3, c(0.), c(0.2) * i,
            c(0.5) - i * 0.3, c(-1.), c(0.7), c(0.),
            c(0.), c(0.7), c(0.25), c(1.) - i,
            c(-0.2) * i, c(0.), c(1.) + i, c(2.),
        ];
        let m = mixer_custom(&h, &basis).unwrap();
        let e = m.eigensystem().unwrap();
        assert!(!e.is_real());
        assert!(max_dev(&e.reconstruct(), &h) <= 1e-10);
        assert!(unitarity_dev(e) <= 1e-10);
    }

    #[test]
    fn custom_rejects_bad_input() {
        let basis = BasisSet::unconstrained(1).unwrap();
        assert!(matches!(
            mixer_custom(&[c(0.), c(1.), c(2.), c(0.)], &basis),
            Err(QaoaError::Domain(_))
        ));
        assert!(mixer_custom(&[c(0.); 3], &basis).is_err());
    }

    #[test]
    fn grover_marker() {
        let basis = BasisSet::dicke(4, 2).unwrap();
        let m = mixer_grover(&basis);
        assert_eq!(m.kind(), MixerKind::Grover);
        assert_eq!(m.basis().dim(), 6);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clique42.qmix");
        let m = mixer_clique(4, 2).unwrap();
        save_mixer(&m, &path).unwrap();
        let back = load_mixer(&path).unwrap();
        assert_eq!(back, m);
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"QMIX");
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 6 + 16 * 36 + 4);
        let path2 = dir.path().join("again.qmix");
        save_mixer(&back, &path2).unwrap();
        assert_eq!(fs::read(&path2).unwrap(), bytes);
    }

    #[test]
    fn complex_mixer_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("custom.qmix");
        let basis = BasisSet::unconstrained(1).unwrap();
        let h = [c(0.), Complex64::new(0., 1.), Complex64::new(0., -1.), c(0.)];
        let m = mixer_custom(&h, &basis).unwrap();
        save_mixer(&m, &path).unwrap();
        assert_eq!(load_mixer(&path).unwrap(), m);
    }

    #[test]
    fn load_failures() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qmix");
        save_mixer(&mixer_clique(4, 2).unwrap(), &path).unwrap();
        let good = fs::read(&path).unwrap();

        let mut wrong_magic = good.clone();
        wrong_magic[0] = b'X';
        fs::write(&path, &wrong_magic).unwrap();
        assert!(matches!(load_mixer(&path), Err(QaoaError::Format { .. })));

        let mut flipped = good.clone();
        flipped[40] ^= 1;
        fs::write(&path, &flipped).unwrap();
        assert!(matches!(load_mixer(&path), Err(QaoaError::Format { .. })));

        fs::write(&path, &good[..good.len() - 10]).unwrap();
        assert!(matches!(load_mixer(&path), Err(QaoaError::Format { .. })));

        fs::write(&path, &good).unwrap();
        let want = BasisSet::dicke(5, 2).unwrap();
        assert!(matches!(load_mixer_for(&path, &want), Err(QaoaError::Compatibility(_))));
        assert!(load_mixer_for(&path, &BasisSet::dicke(4, 2).unwrap()).is_ok());
    }

    #[test]
    fn cached_mixer_builds_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ring.qmix");
        let basis = BasisSet::dicke(5, 2).unwrap();
        let first = cached_mixer(&path, &basis, || mixer_ring(5, 2)).unwrap();
        let second = cached_mixer(&path, &basis, || panic!("should load from disk")).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn only_eigen_mixers_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.qmix");
        assert!(save_mixer(&mixer_x(&[1], 3).unwrap(), &path).is_err());
    }
}
