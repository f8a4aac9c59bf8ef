//! Classical outer loop: local BFGS minimization, basinhopping, iterative
//! round-by-round seeding with checkpointing, and the random-restart and
//! median-angle baselines.
//!
//! Expectation values are maximized by minimizing `-⟨C⟩`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::{CostTable, Orientation};
use crate::error::{domain, format_err, QaoaError, Result};
use crate::mixer::write_atomic;
use crate::sim::{AngleSchedule, Evaluator, Mixers};

/// Basinhopping and local-search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Basinhopping iterations after the initial local minimization.
    pub hops: usize,
    /// Half-width of the uniform perturbation, radians.
    pub step_size: f64,
    /// Metropolis temperature.
    pub temperature: f64,
    /// Independent starts for [`find_angles_random_restarts`].
    pub restarts: usize,
    pub rng_seed: u64,
    pub max_local_iters: usize,
    /// BFGS stops once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            hops: 50,
            step_size: 0.3,
            temperature: 1.0,
            restarts: 100,
            rng_seed: 0,
            max_local_iters: 1000,
            tolerance: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_size > 0.0
            && self.step_size.is_finite()
            && self.temperature > 0.0
            && self.temperature.is_finite()
            && self.restarts >= 1
            && self.max_local_iters >= 1
            && self.tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(domain(format!("invalid optimizer configuration {self:?}")))
        }
    }
}

/// Outcome of a local or global minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective (value + gradient) evaluations spent.
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective returning value and gradient together.
pub trait Objective {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self(x)
    }
}

fn checked_eval<O: Objective + ?Sized>(f: &mut O, x: &[f64], evals: &mut usize) -> Result<(f64, Vec<f64>)> {
    *evals += 1;
    let (v, g) = f.eval(x)?;
    if !v.is_finite() || g.iter().any(|d| !d.is_finite()) {
        return Err(QaoaError::Optimizer(format!("non-finite objective {v} at {x:?}")));
    }
    Ok((v, g))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct LinePoint {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

/// Strong-Wolfe line search (bracketing then zoom). `None` if no step with
/// sufficient decrease was found.
fn line_search<O: Objective + ?Sized>(
    f: &mut O,
    x: &[f64],
    dir: &[f64],
    f0: f64,
    slope0: f64,
    alpha_init: f64,
    evals: &mut usize,
) -> Result<Option<LinePoint>> {
    let mut probe = |alpha: f64, evals: &mut usize| -> Result<LinePoint> {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let (value, grad) = checked_eval(f, &xt, evals)?;
        let slope = dot(&grad, dir);
        Ok(LinePoint { alpha, value, grad, slope })
    };

    let mut prev = LinePoint {
        alpha: 0.0,
        value: f0,
        grad: Vec::new(),
        slope: slope0,
    };
    let mut alpha = alpha_init;
    let mut used = 0;
    let (mut lo, mut hi) = loop {
        let cur = probe(alpha, evals)?;
        used += 1;
        if cur.value > f0 + C1 * alpha * slope0 || (used > 1 && cur.value >= prev.value) {
            break (prev, cur);
        }
        if cur.slope.abs() <= -C2 * slope0 {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            break (cur, prev);
        }
        if used >= MAX_LINE_EVALS {
            return Ok(Some(cur));
        }
        prev = cur;
        alpha *= 2.0;
    };

    while used < MAX_LINE_EVALS {
        let width = hi.alpha - lo.alpha;
        if width.abs() < 1e-14 * lo.alpha.abs().max(1.0) {
            break;
        }
        // quadratic through (lo.value, lo.slope) and hi.value
        let denom = 2.0 * (hi.value - lo.value - lo.slope * width);
        let mut t = if denom > 0.0 { -lo.slope * width * width / denom } else { 0.5 * width };
        let (a, b) = (0.1 * width, 0.9 * width);
        if !(t.is_finite() && (t - a) * (t - b) <= 0.0) {
            t = 0.5 * width;
        }
        let cur = probe(lo.alpha + t, evals)?;
        used += 1;
        if cur.value > f0 + C1 * cur.alpha * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * slope0 {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // lo always satisfies sufficient decrease; accept it if it moved
    Ok((lo.alpha > 0.0).then_some(lo))
}

/// BFGS with a strong-Wolfe line search.
///
/// Stops when the gradient norm drops to `tolerance`, after `max_iters`
/// iterations, or when no further decrease is possible in floating point.
pub fn bfgs_minimize<O: Objective + ?Sized>(f: &mut O, x0: &[f64], max_iters: usize, tolerance: f64) -> Result<Minimum> {
    let n = x0.len();
    let mut evals = 0;
    let mut x = x0.to_vec();
    let (mut fx, mut g) = checked_eval(f, &x, &mut evals)?;
    let mut hinv = identity(n);
    let mut iterations = 0;
    let mut converged = norm(&g) <= tolerance;

    while !converged && iterations < max_iters {
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|d| -d).collect();
            slope = -dot(&g, &g);
        }
        let alpha0 = if iterations == 0 { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
        let Some(step) = line_search(f, &x, &dir, fx, slope, alpha0, &mut evals)? else {
            break;
        };
        iterations += 1;
        let s: Vec<f64> = dir.iter().map(|d| step.alpha * d).collect();
        let y: Vec<f64> = step.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let improved = fx - step.value;
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        fx = step.value;
        g = step.grad;

        if sy > 1e-14 * norm(&s) * norm(&y) {
            if iterations == 1 {
                let scale = sy / dot(&y, &y);
                hinv = identity(n).into_iter().map(|v| v * scale).collect();
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        converged = norm(&g) <= tolerance;
        if improved <= f64::EPSILON * fx.abs().max(1.0) * 1e-2 && norm(&s) <= 1e-14 {
            break;
        }
    }
    Ok(Minimum {
        x,
        value: fx,
        evaluations: evals,
        iterations,
        converged,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    (0..n).for_each(|i| m[i * n + i] = 1.0);
    m
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`, `ρ = 1 / sᵀy`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Basinhopping: perturb, minimize locally, accept by the Metropolis rule.
///
/// Returns the best minimum seen, which is never worse than the local
/// minimum reached from `x0`.
pub fn basinhopping<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &mut O,
    x0: &[f64],
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<Minimum> {
    cfg.validate()?;
    let mut current = bfgs_minimize(f, x0, cfg.max_local_iters, cfg.tolerance)?;
    let mut best = current.clone();
    let mut evaluations = current.evaluations;
    for _ in 0..cfg.hops {
        let trial: Vec<f64> = current
            .x
            .iter()
            .map(|xi| xi + rng.random_range(-cfg.step_size..=cfg.step_size))
            .collect();
        let m = bfgs_minimize(f, &trial, cfg.max_local_iters, cfg.tolerance)?;
        evaluations += m.evaluations;
        let u: f64 = rng.random();
        let accept = m.value < current.value || u < (-(m.value - current.value) / cfg.temperature).exp();
        if m.value < best.value {
            best = m.clone();
        }
        if accept {
            current = m;
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

/// Best angles found for one round count.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub p: usize,
    pub best_betas: Vec<f64>,
    pub best_gammas: Vec<f64>,
    pub best_expectation: f64,
    pub evaluations_used: usize,
}

impl RoundRecord {
    pub fn schedule(&self) -> AngleSchedule {
        AngleSchedule::new(self.best_betas.clone(), self.best_gammas.clone())
            .expect("records hold matching non-empty angle lists")
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn join17(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt17(v)).collect::<Vec<_>>().join(",")
}

/// One checkpoint line (without newline).
pub fn format_record(r: &RoundRecord) -> String {
    let mut s = String::new();
    write!(
        s,
        "p={}\texp={}\tbetas={}\tgammas={}\tevals={}",
        r.p,
        fmt17(r.best_expectation),
        join17(&r.best_betas),
        join17(&r.best_gammas),
        r.evaluations_used
    )
    .unwrap();
    s
}

fn parse_record(line: &str, path: &Path, lineno: usize) -> Result<RoundRecord> {
    let bad = |msg: String| format_err(path, format!("line {lineno}: {msg}"));
    let mut fields = line.split('\t');
    let mut field = |key: &str| -> Result<&str> {
        let f = fields.next().ok_or_else(|| bad(format!("missing `{key}=` field")))?;
        f.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| bad(format!("expected `{key}=`, got {f:?}")))
    };
    let p: usize = field("p")?.parse().map_err(|_| bad("bad round count".into()))?;
    let exp: f64 = field("exp")?.parse().map_err(|_| bad("bad expectation".into()))?;
    let list = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad angle {t:?}"))))
            .collect()
    };
    let betas = list(field("betas")?)?;
    let gammas = list(field("gammas")?)?;
    let evals = match fields.next() {
        None => 0,
        Some(f) => f
            .strip_prefix("evals=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("bad evals field {f:?}")))?,
    };
    if fields.next().is_some() {
        return Err(bad("trailing fields".into()));
    }
    if betas.len() != p || gammas.len() != p || !exp.is_finite() {
        return Err(bad(format!("round {p} needs {p} betas and {p} gammas")));
    }
    Ok(RoundRecord {
        p,
        best_betas: betas,
        best_gammas: gammas,
        best_expectation: exp,
        evaluations_used: evals,
    })
}

/// Reads a checkpoint; rounds must run 1, 2, 3, … without gaps.
pub fn read_checkpoint(path: &Path) -> Result<Vec<RoundRecord>> {
    let text = fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(format_err(path, "truncated final line"));
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let rec = parse_record(line, path, i + 1)?;
        if rec.p != out.len() + 1 {
            return Err(format_err(path, format!("line {}: expected round {}, found {}", i + 1, out.len() + 1, rec.p)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Rewrites the whole checkpoint through a temp file and rename.
pub fn write_checkpoint(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&format_record(r));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

fn check_maximizable(cost: &CostTable) -> Result<()> {
    if cost.orientation() != Orientation::Maximize {
        return Err(domain(
            "angle finding maximizes ⟨C⟩; negate the objective values to minimize",
        ));
    }
    if !cost.is_single_signed() {
        return Err(domain(
            "objective values have mixed signs; add an offset so they share one sign",
        ));
    }
    Ok(())
}

fn mixers_for_rounds<'a>(mixers: &Mixers<'a>, p: usize) -> Result<Mixers<'a>> {
    match mixers {
        Mixers::Single(m) => Ok(Mixers::Single(m)),
        Mixers::PerRound(v) if v.len() >= p => Ok(Mixers::PerRound(v[..p].to_vec())),
        Mixers::PerRound(v) => Err(domain(format!("{} per-round mixers for {p} rounds", v.len()))),
        Mixers::Nested(_) => Err(domain("angle finding supports one mixer per round")),
    }
}

/// `-⟨C⟩` and its gradient over the flat `[betas.., gammas..]` vector.
fn negated_objective<'e, 'a>(ev: &'e mut Evaluator<'a>) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> + use<'e, 'a> {
    move |x: &[f64]| {
        let angles = AngleSchedule::from_flat(x)?;
        let (v, g) = ev.value_and_gradient(&angles)?;
        Ok((-v, g.to_flat().into_iter().map(|d| -d).collect()))
    }
}

fn round_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Starting angles for round `p` from the best angles of earlier rounds.
///
/// Candidates: the previous schedule padded with a zero round (which
/// reproduces the previous expectation, so the result never regresses), the
/// previous schedule with its last round repeated, and a linear
/// extrapolation of its last two rounds.
fn seed_candidates(prev: &RoundRecord) -> Vec<Vec<f64>> {
    let extend = |b: f64, g: f64| {
        let mut betas = prev.best_betas.clone();
        let mut gammas = prev.best_gammas.clone();
        betas.push(b);
        gammas.push(g);
        betas.into_iter().chain(gammas).collect::<Vec<f64>>()
    };
    let q = prev.p;
    let (lb, lg) = (prev.best_betas[q - 1], prev.best_gammas[q - 1]);
    let mut out = vec![extend(0.0, 0.0), extend(lb, lg)];
    if q >= 2 {
        let (pb, pg) = (prev.best_betas[q - 2], prev.best_gammas[q - 2]);
        out.push(extend(2.0 * lb - pb, 2.0 * lg - pg));
    }
    out
}

/// Iterative angle finding for `p = 1..=p_target`.
///
/// Round 1 starts basinhopping at all angles `0.1`; round `p` starts from the
/// best of the [`seed_candidates`] built on round `p - 1`. With a
/// checkpoint path, completed rounds are loaded and skipped, and each new
/// round is persisted before the next begins. Every round draws from its own
/// RNG stream, so a resumed run matches an uninterrupted one.
pub fn find_angles(
    p_target: usize,
    mixers: &Mixers<'_>,
    cost: &CostTable,
    cfg: &OptimizerConfig,
    checkpoint: Option<&Path>,
) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    check_maximizable(cost)?;
    if p_target == 0 {
        return Err(domain("target round count must be at least 1"));
    }
    mixers_for_rounds(mixers, p_target)?;

    let mut records = match checkpoint {
        Some(path) if path.exists() => read_checkpoint(path)?,
        _ => Vec::new(),
    };
    records.truncate(p_target);

    for p in records.len() + 1..=p_target {
        let round_mixers = mixers_for_rounds(mixers, p)?;
        let mut ev = Evaluator::new(cost, round_mixers, None)?;
        let mut evals = 0;
        let start = match records.last() {
            None => vec![0.1; 2 * p],
            Some(prev) => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for cand in seed_candidates(prev) {
                    evals += 1;
                    let v = ev.expectation(&AngleSchedule::from_flat(&cand)?)?;
                    if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                        best = Some((v, cand));
                    }
                }
                best.unwrap().1
            }
        };
        let mut rng = round_rng(cfg.rng_seed, p as u64);
        let mut objective = negated_objective(&mut ev);
        let m = basinhopping(&mut objective, &start, cfg, &mut rng)?;
        let rec = RoundRecord {
            p,
            best_betas: m.x[..p].to_vec(),
            best_gammas: m.x[p..].to_vec(),
            best_expectation: -m.value,
            evaluations_used: evals + m.evaluations,
        };
        records.push(rec);
        if let Some(path) = checkpoint {
            write_checkpoint(path, &records)?;
        }
    }
    Ok(records)
}

/// Best of `cfg.restarts` BFGS runs from uniform random angles in `[0, 2π)`.
///
/// Restart `i` draws its start from RNG stream `i`, so the first `k`
/// restarts are the same whatever the total, and workers reduce to the same
/// result in any order (ties go to the lower index).
pub fn find_angles_random_restarts(
    p: usize,
    mixers: &Mixers<'_>,
    cost: &CostTable,
    cfg: &OptimizerConfig,
) -> Result<RoundRecord> {
    cfg.validate()?;
    check_maximizable(cost)?;
    if p == 0 {
        return Err(domain("round count must be at least 1"));
    }
    let round_mixers = mixers_for_rounds(mixers, p)?;
    let results: Vec<Result<Minimum>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = round_rng(cfg.rng_seed, i as u64);
            let x0: Vec<f64> = (0..2 * p).map(|_| rng.random_range(0.0..TAU)).collect();
            let mut ev = Evaluator::new(cost, round_mixers.clone(), None)?;
            let mut objective = negated_objective(&mut ev);
            bfgs_minimize(&mut objective, &x0, cfg.max_local_iters, cfg.tolerance)
        })
        .collect();
    let mut best: Option<Minimum> = None;
    let mut evaluations = 0;
    for r in results {
        let m = r?;
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let m = best.expect("at least one restart");
    Ok(RoundRecord {
        p,
        best_betas: m.x[..p].to_vec(),
        best_gammas: m.x[p..].to_vec(),
        best_expectation: -m.value,
        evaluations_used: evaluations,
    })
}

/// Coordinate-wise lower median of angle schedules, each angle folded into `[0, 2π)`.
pub fn median_angles(schedules: &[AngleSchedule]) -> Result<AngleSchedule> {
    let first = schedules.first().ok_or_else(|| domain("median of an empty list"))?;
    let width = first.to_flat().len();
    let flats: Vec<Vec<f64>> = schedules.iter().map(AngleSchedule::to_flat).collect();
    if schedules.iter().any(|s| s.p() != first.p()) || flats.iter().any(|f| f.len() != width) {
        return Err(domain("median needs schedules with identical shapes"));
    }
    let median: Vec<f64> = (0..width)
        .map(|c| {
            let mut col: Vec<f64> = flats.iter().map(|f| f[c].rem_euclid(TAU)).collect();
            col.sort_by(f64::total_cmp);
            col[(col.len() - 1) / 2]
        })
        .collect();
    first.with_flat(&median)
}
