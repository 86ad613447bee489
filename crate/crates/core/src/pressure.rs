//! Singular value function, finite-level singular value pressure and the
//! affinity dimension bracket.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, precondition, Error, Result};
use crate::ifs::AffineIfs;
use crate::linalg::{singular_values, singular_values_rect, Matrix};
use crate::lyapunov::{exponents_mc, lyapunov_dimension, LyapunovSpectrum};
use crate::numeric::{tree_reduce, LogSum};
use crate::rng::{par_batches, stream};
use crate::symbolic::{check_budget, enumerate_words, StepMeasure, Word};

/// Default cap on `N^n` for exhaustive sums.
pub const PRESSURE_WORD_LIMIT: u128 = 1 << 24;

/// Default bisection tolerance in `s`.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_BISECTION: usize = 200;
const EVAL_CHUNK: usize = 4096;

/// `log φ^s` from the logs of the singular values, largest first.
pub fn log_svf_from_logs(log_alphas: &[f64], s: f64) -> f64 {
    let d = log_alphas.len();
    if s >= d as f64 {
        return s / d as f64 * log_alphas.iter().sum::<f64>();
    }
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let head: f64 = log_alphas[..k].iter().sum();
    if frac == 0.0 {
        head
    } else {
        head + frac * log_alphas[k]
    }
}

/// The singular value function `φ^s(A)`.
pub fn svf(a: &Matrix, s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("svf exponent must be a finite s >= 0, got {s}")));
    }
    let spec = singular_values(a)?;
    if spec.is_near_singular() {
        return Err(precondition("singular value function of a singular matrix"));
    }
    let logs: Vec<f64> = spec.values().iter().map(|x| x.ln()).collect();
    Ok(log_svf_from_logs(&logs, s).exp())
}

/// Logs of the singular values of `m`, with the smallest recomputed from the
/// exactly known `log|det|` so it keeps full relative accuracy.
fn word_log_alphas(m: &Matrix, log_det: f64, out: &mut Vec<f64>) {
    let d = m.nrows();
    match d {
        1 => out.push(log_det),
        2 => {
            let (a, b, c, e) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let p = (a + e).hypot(c - b);
            let q = (a - e).hypot(c + b);
            let l1 = (0.5 * (p + q)).ln();
            out.push(l1);
            out.push((log_det - l1).min(l1));
        }
        _ => {
            let values = singular_values_rect(m).expect("finite product");
            let mut acc = 0.0;
            let start = out.len();
            for &v in &values[..d - 1] {
                let l = v.ln();
                acc += l;
                out.push(l);
            }
            out.push((log_det - acc).min(out[start + d - 2]));
        }
    }
}

/// Log singular values of every product `A_w`, `|w| = n`, in lexicographic
/// word order.
#[derive(Debug, Clone)]
pub struct LevelSpectra {
    d: usize,
    n: usize,
    log_alphas: Vec<f64>,
}

impl LevelSpectra {
    pub fn new(ifs: &AffineIfs, n: usize) -> Result<Self> {
        Self::with_limit(ifs, n, PRESSURE_WORD_LIMIT)
    }

    pub fn with_limit(ifs: &AffineIfs, n: usize, limit: u128) -> Result<Self> {
        check_budget("pressure sum", ifs.len(), n, limit)?;
        let d = ifs.dim();
        let big_n = ifs.len();
        let log_dets: Vec<f64> = ifs
            .spectra()
            .iter()
            .map(|s| s.values().iter().map(|x| x.ln()).sum())
            .collect();
        let mut prefix_len = 0;
        while prefix_len < n && big_n.pow(prefix_len as u32) < 64 {
            prefix_len += 1;
        }
        let prefixes: Vec<Word> = enumerate_words(big_n.max(2), prefix_len)?.collect();
        let blocks: Vec<Vec<f64>> = prefixes
            .par_iter()
            .map(|p| {
                let mut prod = Matrix::identity(d, d);
                let mut ld = 0.0;
                for &s in p.symbols() {
                    prod *= &ifs.matrices()[s];
                    ld += log_dets[s];
                }
                let mut out = Vec::new();
                descend(ifs.matrices(), &log_dets, &prod, ld, n - prefix_len, &mut out);
                out
            })
            .collect();
        Ok(Self {
            d,
            n,
            log_alphas: blocks.concat(),
        })
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn word_count(&self) -> usize {
        self.log_alphas.len() / self.d
    }

    /// Log singular values of the `idx`-th word in lexicographic order.
    pub fn log_alphas(&self, idx: usize) -> &[f64] {
        &self.log_alphas[idx * self.d..(idx + 1) * self.d]
    }

    /// `a_n(s) = log Σ_{|w|=n} φ^s(A_w)`, reduced over fixed chunks by a
    /// pairwise tree so the value does not depend on the thread count.
    pub fn log_sum(&self, s: f64) -> f64 {
        let d = self.d;
        let parts: Vec<LogSum> = self
            .log_alphas
            .par_chunks(EVAL_CHUNK * d)
            .map(|chunk| {
                let logs: Vec<f64> = chunk
                    .chunks(d)
                    .map(|la| log_svf_from_logs(la, s))
                    .collect();
                LogSum::of(&logs)
            })
            .collect();
        tree_reduce(parts).value()
    }

    /// `log φ^s(A_w)` for every word.
    pub fn log_svf_all(&self, s: f64) -> Vec<f64> {
        self.log_alphas
            .chunks(self.d)
            .map(|la| log_svf_from_logs(la, s))
            .collect()
    }
}

fn descend(
    matrices: &[Matrix],
    log_dets: &[f64],
    prod: &Matrix,
    log_det: f64,
    remaining: usize,
    out: &mut Vec<f64>,
) {
    if remaining == 0 {
        word_log_alphas(prod, log_det, out);
        return;
    }
    for (a, ld) in matrices.iter().zip(log_dets) {
        descend(matrices, log_dets, &(prod * a), log_det + ld, remaining - 1, out);
    }
}

/// `a_n(s) = log Σ_{|w|=n} φ^s(A_w)` by exhaustive enumeration.
pub fn pressure_sum(ifs: &AffineIfs, s: f64, n: usize) -> Result<f64> {
    ifs.require_contractive()?;
    check_exponent(s)?;
    Ok(LevelSpectra::new(ifs, n)?.log_sum(s))
}

fn check_exponent(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("exponent must be a finite s >= 0, got {s}")))
    }
}

/// Finite-level pressure values at one exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub s: f64,
    pub n: usize,
    /// `a_n(s)`.
    pub log_sum: f64,
    /// `a_n / n`, an upper bound for `P(s)`.
    pub upper: f64,
    /// `a_n − a_{n−1}`, a heuristic estimate of `P(s)`; absent at `n = 1`.
    pub slope: Option<f64>,
}

pub fn pressure_estimate(ifs: &AffineIfs, s: f64, n: usize) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(invalid("pressure level must be at least 1"));
    }
    let log_sum = pressure_sum(ifs, s, n)?;
    let slope = if n > 1 {
        Some(log_sum - pressure_sum(ifs, s, n - 1)?)
    } else {
        None
    };
    Ok(PressureEstimate {
        s,
        n,
        log_sum,
        upper: log_sum / n as f64,
        slope,
    })
}

/// Bisection for the root of a strictly decreasing `f` with `f(0) > 0`,
/// starting from `[0, hi]` and widening `hi` until `f(hi) ≤ 0`. Returns the
/// right end of the final bracket, so the root never exceeds the result.
fn decreasing_root(f: impl Fn(f64) -> f64, hi: f64, tol: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = hi;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        assert!(hi.is_finite(), "pressure does not become negative");
    }
    for _ in 0..MAX_BISECTION {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// `min(d, s_n)` where `a_n(s_n) = 0`. Subadditivity gives
/// `P(s_n) ≤ a_n(s_n)/n = 0`, so `s_n` bounds the affinity dimension from
/// above.
pub fn affinity_upper(ifs: &AffineIfs, n: usize, tol: f64) -> Result<f64> {
    ifs.require_contractive()?;
    check_tol(tol)?;
    if n == 0 {
        return Err(invalid("pressure level must be at least 1"));
    }
    let levels = LevelSpectra::new(ifs, n)?;
    Ok(upper_from_levels(&levels, ifs.dim(), tol))
}

pub fn upper_from_levels(levels: &LevelSpectra, d: usize, tol: f64) -> f64 {
    let d = d as f64;
    if levels.log_sum(d) > 0.0 {
        return d;
    }
    decreasing_root(|s| levels.log_sum(s), d, tol)
}

/// The step-n Bernoulli measure with weights `φ^{s_Γ}(A_w)`, `w ∈ Γ`.
#[derive(Debug, Clone)]
pub struct SubsystemMeasure {
    /// Root of `Σ_{w∈Γ} φ^s(A_w) = 1`.
    pub s: f64,
    pub measure: StepMeasure,
    /// Set when `Γ` is a single word and the equation only holds at `s = 0`.
    pub degenerate: bool,
}

/// Builds the subsystem measure on `Γ ⊂ Σ_n` (all of `Σ_n` when `gamma` is
/// `None`).
pub fn subsystem_measure(
    ifs: &AffineIfs,
    n: usize,
    gamma: Option<&[Word]>,
    tol: f64,
) -> Result<SubsystemMeasure> {
    ifs.require_contractive()?;
    check_tol(tol)?;
    if n == 0 {
        return Err(invalid("block length must be at least 1"));
    }
    let d = ifs.dim();
    let (words, logs, root): (Vec<Word>, Vec<Vec<f64>>, f64) = match gamma {
        None => {
            let levels = LevelSpectra::new(ifs, n)?;
            let words: Vec<Word> = enumerate_words(ifs.len(), n)?.collect();
            let logs = (0..words.len())
                .map(|i| levels.log_alphas(i).to_vec())
                .collect();
            let root = decreasing_root(|s| levels.log_sum(s), d as f64, tol);
            (words, logs, root)
        }
        Some(g) => {
            if g.is_empty() {
                return Err(precondition("subsystem needs a nonempty set of words"));
            }
            let mut logs = Vec::with_capacity(g.len());
            for w in g {
                if w.len() != n {
                    return Err(invalid(format!("word {w} does not have length {n}")));
                }
                w.check_alphabet(ifs.len())?;
                let mut prod = Matrix::identity(d, d);
                let mut ld = 0.0;
                for &s in w.symbols() {
                    prod *= &ifs.matrices()[s];
                    ld += ifs.spectra()[s].values().iter().map(|x| x.ln()).sum::<f64>();
                }
                let mut la = Vec::with_capacity(d);
                word_log_alphas(&prod, ld, &mut la);
                logs.push(la);
            }
            let root = if g.len() == 1 {
                0.0
            } else {
                let log_sum = |s: f64| {
                    let v: Vec<f64> = logs.iter().map(|la| log_svf_from_logs(la, s)).collect();
                    LogSum::of(&v).value()
                };
                decreasing_root(log_sum, d as f64, tol)
            };
            (g.to_vec(), logs, root)
        }
    };
    let degenerate = words.len() == 1;
    let s = root;
    let raw: Vec<f64> = logs.iter().map(|la| log_svf_from_logs(la, s)).collect();
    let norm = LogSum::of(&raw).value();
    let weights = raw.iter().map(|x| (x - norm).exp()).collect();
    let measure = StepMeasure::new(n, words, weights)?;
    Ok(SubsystemMeasure {
        s,
        measure,
        degenerate,
    })
}

/// `[lower, upper]` estimate of the affinity dimension at level `n`.
#[derive(Debug, Clone)]
pub struct DimensionBracket {
    /// `min(d, s_n)`, certified.
    pub upper: f64,
    /// Lyapunov dimension of the level-n subsystem measure (Monte Carlo).
    pub lower: f64,
    /// Spread of the lower estimate across trials.
    pub lower_stderr: f64,
    pub n: usize,
    pub entropy: f64,
    pub spectrum: LyapunovSpectrum,
}

impl DimensionBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Parameters of the Monte-Carlo part of a bracket.
#[derive(Debug, Clone, Copy)]
pub struct McParams {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
}

pub fn dimension_bracket(ifs: &AffineIfs, n: usize, tol: f64, mc: McParams) -> Result<DimensionBracket> {
    let upper = affinity_upper(ifs, n, tol)?;
    let sub = subsystem_measure(ifs, n, None, tol)?;
    let spectrum = exponents_mc(ifs, &sub.measure, mc.steps, mc.trials, mc.seed)?;
    let h = sub.measure.entropy();
    let d = ifs.dim();
    let lower = lyapunov_dimension(h, spectrum.chi(), d);
    // Propagate the exponent uncertainty by finite differences.
    let mut var = 0.0;
    for (i, se) in spectrum.stderr().iter().enumerate() {
        let mut shifted = spectrum.chi().to_vec();
        shifted[i] += se;
        shifted.sort_by(f64::total_cmp);
        let delta = lyapunov_dimension(h, &shifted, d) - lower;
        var += delta * delta;
    }
    Ok(DimensionBracket {
        upper,
        lower,
        lower_stderr: var.sqrt(),
        n,
        entropy: h,
        spectrum,
    })
}

/// Extremes of `φ^s(A_i)φ^s(A_j) / φ^s(A_{ij})` over pairs of level-n words.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMultiplicativity {
    pub s: f64,
    pub n: usize,
    /// Smallest ratio seen (at least 1 by submultiplicativity).
    pub c_lower: f64,
    /// Largest ratio seen.
    pub c_defect: f64,
    pub pairs: u128,
    pub sampled: bool,
}

/// Default cap on exhaustive pair counts `N^{2n}`.
pub const PAIR_LIMIT: u128 = 1 << 24;

/// Exhaustive over `Σ_n × Σ_n` when `N^{2n} ≤ pair_limit`, otherwise
/// `samples` uniformly drawn pairs.
pub fn quasi_multiplicativity_diagnostic(
    ifs: &AffineIfs,
    s: f64,
    n: usize,
    pair_limit: u128,
    samples: usize,
    seed: u64,
) -> Result<QuasiMultiplicativity> {
    check_exponent(s)?;
    if n == 0 {
        return Err(invalid("word length must be at least 1"));
    }
    let d = ifs.dim();
    let log_dets: Vec<f64> = ifs
        .spectra()
        .iter()
        .map(|sp| sp.values().iter().map(|x| x.ln()).sum())
        .collect();
    let log_svf_of = |m: &Matrix, ld: f64| {
        let mut la = Vec::with_capacity(d);
        word_log_alphas(m, ld, &mut la);
        log_svf_from_logs(&la, s)
    };
    let product = |w: &[usize]| {
        let mut prod = Matrix::identity(d, d);
        let mut ld = 0.0;
        for &x in w {
            prod *= &ifs.matrices()[x];
            ld += log_dets[x];
        }
        (prod, ld)
    };
    let fold = |acc: (f64, f64), r: f64| (acc.0.min(r), acc.1.max(r));
    let exhaustive = check_budget("quasi-multiplicativity pairs", ifs.len(), 2 * n, pair_limit).is_ok()
        && check_budget("quasi-multiplicativity words", ifs.len(), n, PRESSURE_WORD_LIMIT).is_ok();
    let (lo, hi, pairs) = if exhaustive {
        let words: Vec<(Matrix, f64)> = enumerate_words(ifs.len(), n)?
            .map(|w| product(w.symbols()))
            .collect();
        let phis: Vec<f64> = words.iter().map(|(m, ld)| log_svf_of(m, *ld)).collect();
        let (lo, hi) = words
            .par_iter()
            .enumerate()
            .map(|(i, (mi, li))| {
                let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
                for (j, (mj, lj)) in words.iter().enumerate() {
                    let joint = log_svf_of(&(mi * mj), li + lj);
                    acc = fold(acc, phis[i] + phis[j] - joint);
                }
                acc
            })
            .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        let count = (words.len() as u128).pow(2);
        (lo, hi, count)
    } else {
        if samples == 0 {
            return Err(Error::Budget {
                what: format!("quasi-multiplicativity pairs ({}^{})", ifs.len(), 2 * n),
                required: crate::symbolic::word_count(ifs.len(), 2 * n).unwrap_or(u128::MAX),
                limit: pair_limit,
            });
        }
        let parts = par_batches(samples, 1024, |b, len| {
            let mut rng = stream(seed, b);
            let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
            for _ in 0..len {
                let wi: Vec<usize> = (0..n).map(|_| rng.random_range(0..ifs.len())).collect();
                let wj: Vec<usize> = (0..n).map(|_| rng.random_range(0..ifs.len())).collect();
                let (mi, li) = product(&wi);
                let (mj, lj) = product(&wj);
                let r = log_svf_of(&mi, li) + log_svf_of(&mj, lj) - log_svf_of(&(&mi * &mj), li + lj);
                acc = fold(acc, r);
            }
            acc
        });
        let (lo, hi) = parts
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        (lo, hi, samples as u128)
    };
    Ok(QuasiMultiplicativity {
        s,
        n,
        c_lower: lo.exp(),
        c_defect: hi.exp(),
        pairs,
        sampled: !exhaustive,
    })
}
