//! Feasible computational basis states.
//!
//! Qubit `i` is bit `i` of the state's integer label (qubit 0 is the least
//! significant bit). Every enumeration in this crate visits states in
//! increasing integer order, so index `i` of a [`BasisSet`] always refers to
//! the `i`-th smallest feasible integer.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, QaoaError, Result};

/// Largest qubit count for which full-space vectors are materialized.
pub const MAX_DENSE_QUBITS: u32 = 30;

/// Largest qubit count accepted by the bitstring iterators.
pub const MAX_ITER_QUBITS: u32 = 62;

/// A computational basis state of `n` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    pub value: u64,
    pub n: u32,
}

impl Bitstring {
    pub fn new(value: u64, n: u32) -> Self {
        Self { value, n }
    }

    /// Builds a bitstring from a 0/1 array, entry `i` being qubit `i`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > MAX_ITER_QUBITS as usize {
            return Err(QaoaError::Capacity(format!(
                "{} qubits exceeds the {MAX_ITER_QUBITS}-qubit limit",
                bits.len()
            )));
        }
        let mut value = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => value |= 1 << i,
                other => return Err(domain(format!("bit {i} has value {other}, expected 0 or 1"))),
            }
        }
        Ok(Self::new(value, bits.len() as u32))
    }

    #[inline]
    pub fn bit(&self, i: u32) -> bool {
        (self.value >> i) & 1 == 1
    }

    /// The state as a 0/1 array of length `n`.
    pub fn bits(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.bit(i) as u8).collect()
    }

    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }
}

impl fmt::Display for Bitstring {
    /// Most significant qubit first, like a written binary number.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.n).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Binomial coefficient, `None` on u64 overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Next larger integer with the same popcount (Gosper's hack).
///
/// The result wraps on overflow; callers bound it against `2^n`.
#[inline]
pub fn gosper_next(x: u64) -> u64 {
    debug_assert!(x > 0);
    let lowest = x & x.wrapping_neg();
    let ripple = x.wrapping_add(lowest);
    (((ripple ^ x) >> 2) / lowest) | ripple
}

fn check_iter_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_ITER_QUBITS {
        return Err(QaoaError::Capacity(format!(
            "qubit count {n} outside 1..={MAX_ITER_QUBITS}"
        )));
    }
    Ok(())
}

/// Iterator over all `2^n` bitstrings in increasing order.
#[derive(Debug, Clone)]
pub struct States {
    next: u64,
    end: u64,
    n: u32,
}

impl Iterator for States {
    type Item = Bitstring;

    fn next(&mut self) -> Option<Bitstring> {
        if self.next >= self.end {
            return None;
        }
        let x = self.next;
        self.next += 1;
        Some(Bitstring::new(x, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for States {}

/// All `2^n` states of `n` qubits, `1 <= n <= 62`.
pub fn states(n: u32) -> Result<States> {
    check_iter_n(n)?;
    Ok(States {
        next: 0,
        end: 1u64 << n,
        n,
    })
}

/// Iterator over weight-`k` bitstrings of `n` qubits, driven by [`gosper_next`].
#[derive(Debug, Clone)]
pub struct DickeStates {
    next: Option<u64>,
    limit: u64,
    n: u32,
    remaining: u64,
}

impl DickeStates {
    /// Resumes the Gosper chain at `start`, yielding at most `count` states.
    pub(crate) fn from_start(start: u64, n: u32, count: u64) -> Self {
        Self {
            next: (count > 0).then_some(start),
            limit: 1u64 << n,
            n,
            remaining: count,
        }
    }
}

impl Iterator for DickeStates {
    type Item = Bitstring;

    fn next(&mut self) -> Option<Bitstring> {
        let x = self.next?;
        self.remaining -= 1;
        self.next = if self.remaining == 0 || x == 0 {
            None
        } else {
            let succ = gosper_next(x);
            (succ > x && succ < self.limit).then_some(succ)
        };
        Some(Bitstring::new(x, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = if self.next.is_some() { self.remaining as usize } else { 0 };
        (left, Some(left))
    }
}

/// All weight-`k` states of `n` qubits in increasing order.
pub fn dicke_states(n: u32, k: u32) -> Result<DickeStates> {
    check_iter_n(n)?;
    if k > n {
        return Err(domain(format!("Hamming weight {k} exceeds qubit count {n}")));
    }
    let count = binomial(n as u64, k as u64).expect("C(n,k) fits u64 for n <= 62");
    Ok(DickeStates::from_start((1u64 << k) - 1, n, count))
}

/// Position of weight-`k` state `x` within [`dicke_states`]`(n, k)`.
pub fn dicke_rank(x: u64, n: u32, k: u32) -> Result<u64> {
    if n > MAX_ITER_QUBITS || (n < 64 && x >> n != 0) {
        return Err(domain(format!("state {x:#b} does not fit in {n} qubits")));
    }
    if x.count_ones() != k {
        return Err(domain(format!(
            "state {x:#b} has weight {}, expected {k}",
            x.count_ones()
        )));
    }
    Ok(combinadic_rank(x))
}

/// The `i`-th weight-`k` state of `n` qubits.
pub fn dicke_unrank(i: u64, n: u32, k: u32) -> Result<u64> {
    check_iter_n(n)?;
    if k > n {
        return Err(domain(format!("Hamming weight {k} exceeds qubit count {n}")));
    }
    let dim = binomial(n as u64, k as u64).expect("C(n,k) fits u64 for n <= 62");
    if i >= dim {
        return Err(domain(format!("index {i} out of range for C({n},{k}) = {dim}")));
    }
    Ok(combinadic_unrank(i, n, k))
}

fn combinadic_rank(x: u64) -> u64 {
    let mut rank = 0;
    let mut rest = x;
    let mut j = 1;
    while rest != 0 {
        let pos = rest.trailing_zeros() as u64;
        rank += binomial(pos, j).unwrap();
        rest &= rest - 1;
        j += 1;
    }
    rank
}

fn combinadic_unrank(mut i: u64, n: u32, k: u32) -> u64 {
    let mut x = 0u64;
    let mut top = n as u64;
    for j in (1..=k as u64).rev() {
        // largest c < top with C(c, j) <= i
        let mut c = top - 1;
        while binomial(c, j).unwrap() > i {
            c -= 1;
        }
        i -= binomial(c, j).unwrap();
        x |= 1 << c;
        top = c;
    }
    x
}

/// Which states of the `n`-qubit space are feasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    Unconstrained,
    /// States with exactly `k` qubits set (the Dicke subspace).
    HammingWeight(u32),
    /// A caller-supplied, strictly increasing list of states.
    Explicit(Arc<[u64]>),
}

/// An indexed set of feasible basis states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSet {
    n: u32,
    constraint: Constraint,
    dim: usize,
}

impl BasisSet {
    /// The full `2^n` space, `1 <= n <= 30`.
    pub fn unconstrained(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(QaoaError::Capacity(format!(
                "qubit count {n} outside 1..={MAX_DENSE_QUBITS}"
            )));
        }
        Ok(Self {
            n,
            constraint: Constraint::Unconstrained,
            dim: 1 << n,
        })
    }

    /// The weight-`k` subspace of `n` qubits.
    pub fn dicke(n: u32, k: u32) -> Result<Self> {
        check_iter_n(n)?;
        if k > n {
            return Err(domain(format!("Hamming weight {k} exceeds qubit count {n}")));
        }
        let dim = binomial(n as u64, k as u64).unwrap();
        if dim > 1 << MAX_DENSE_QUBITS {
            return Err(QaoaError::Capacity(format!(
                "C({n},{k}) = {dim} states exceeds 2^{MAX_DENSE_QUBITS}"
            )));
        }
        Ok(Self {
            n,
            constraint: Constraint::HammingWeight(k),
            dim: dim as usize,
        })
    }

    /// An arbitrary feasible set given as a strictly increasing state list.
    pub fn explicit(n: u32, states: Vec<u64>) -> Result<Self> {
        check_iter_n(n)?;
        if states.is_empty() {
            return Err(domain("explicit basis needs at least one state"));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("explicit basis states must be strictly increasing"));
        }
        if states.last().unwrap() >> n != 0 {
            return Err(domain(format!("explicit basis state does not fit in {n} qubits")));
        }
        if states.len() > 1 << MAX_DENSE_QUBITS {
            return Err(QaoaError::Capacity("explicit basis too large".into()));
        }
        Ok(Self {
            n,
            dim: states.len(),
            constraint: Constraint::Explicit(states.into()),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn is_unconstrained(&self) -> bool {
        self.constraint == Constraint::Unconstrained
    }

    /// Hamming weight for Dicke bases.
    pub fn weight(&self) -> Option<u32> {
        match self.constraint {
            Constraint::HammingWeight(k) => Some(k),
            _ => None,
        }
    }

    /// Integer label of the state at `index`. Panics when out of range.
    pub fn state(&self, index: usize) -> u64 {
        assert!(index < self.dim, "basis index {index} out of range {}", self.dim);
        match &self.constraint {
            Constraint::Unconstrained => index as u64,
            Constraint::HammingWeight(k) => combinadic_unrank(index as u64, self.n, *k),
            Constraint::Explicit(list) => list[index],
        }
    }

    /// Index of state `x`, or `None` when `x` is infeasible.
    pub fn index_of(&self, x: u64) -> Option<usize> {
        if x >> self.n != 0 {
            return None;
        }
        match &self.constraint {
            Constraint::Unconstrained => Some(x as usize),
            Constraint::HammingWeight(k) => {
                (x.count_ones() == *k).then(|| combinadic_rank(x) as usize)
            }
            Constraint::Explicit(list) => list.binary_search(&x).ok(),
        }
    }

    /// States with indices in `start..end`, in order.
    pub fn range(&self, start: usize, end: usize) -> Box<dyn Iterator<Item = u64> + Send + '_> {
        let end = end.min(self.dim);
        if start >= end {
            return Box::new(std::iter::empty());
        }
        match &self.constraint {
            Constraint::Unconstrained => Box::new(start as u64..end as u64),
            Constraint::HammingWeight(_) => Box::new(
                DickeStates::from_start(self.state(start), self.n, (end - start) as u64)
                    .map(|b| b.value),
            ),
            Constraint::Explicit(list) => Box::new(list[start..end].iter().copied()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Bitstring> + '_ {
        let n = self.n;
        self.range(0, self.dim).map(move |x| Bitstring::new(x, n))
    }
}
