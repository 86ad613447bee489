//! Lyapunov exponents of the matrix cocycle, Lyapunov dimension, domination
//! classification and pinching/twisting witnesses in the plane.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::ifs::AffineIfs;
use crate::linalg::{qr_positive, Matrix};
use crate::numeric::linear_fit;
use crate::pressure::{LevelSpectra, PRESSURE_WORD_LIMIT};
use crate::rng::stream;
use crate::symbolic::{check_budget, enumerate_words, word_product, StepMeasure, Word};

/// Symbols between re-orthonormalisations.
pub const QR_CADENCE: usize = 8;
/// Largest condition number a block of products may build up between two
/// re-orthonormalisations.
pub const QR_SPREAD_LIMIT: f64 = 1e6;
/// Symbols discarded before accumulation.
pub const BURN_IN: usize = 100;
/// Smallest triangular diagonal accepted before declaring a fault.
pub const DIAGONAL_FLOOR: f64 = 1e-300;

/// Estimated exponents `χ_1 ≤ … ≤ χ_d` in nats per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    chi: Vec<f64>,
    stderr: Vec<f64>,
    steps: usize,
    trials: usize,
}

impl LyapunovSpectrum {
    pub fn new(chi: Vec<f64>, stderr: Vec<f64>, steps: usize, trials: usize) -> Result<Self> {
        if chi.is_empty() || chi.len() != stderr.len() {
            return Err(invalid("spectrum and standard errors differ in length"));
        }
        if chi.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("exponents must be nondecreasing"));
        }
        Ok(Self {
            chi,
            stderr,
            steps,
            trials,
        })
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    /// Symbols consumed over all trials, burn-in included.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn sum(&self) -> f64 {
        self.chi.iter().sum()
    }
}

/// [`QR_CADENCE`], shortened so that `κ^k ≤` [`QR_SPREAD_LIMIT`] where `κ` is
/// the largest condition number among the matrices.
pub fn qr_cadence(ifs: &AffineIfs) -> usize {
    let kappa = ifs
        .spectra()
        .iter()
        .map(|s| s.norm() / s.mininorm())
        .fold(1.0, f64::max);
    if kappa <= 1.0 + 1e-12 {
        return QR_CADENCE;
    }
    ((QR_SPREAD_LIMIT.ln() / kappa.ln()).floor() as usize).clamp(1, QR_CADENCE)
}

/// Runs the QR cocycle method along a word drawn from `measure` and returns
/// the per-symbol growth rates of `log α_j`, largest first, together with
/// the number of symbols consumed.
pub(crate) fn growth_rates<R: Rng + ?Sized>(
    transposed: &[Matrix],
    measure: &StepMeasure,
    burn_in: usize,
    steps: usize,
    cadence: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let d = transposed[0].nrows();
    let n = measure.block_len();
    let burn_blocks = burn_in.div_ceil(n);
    let blocks = steps.div_ceil(n).max(1);
    let mut y = Matrix::identity(d, d);
    let mut logs = vec![0.0; d];
    let mut since_qr = 0;
    let renormalize = |y: &mut Matrix, logs: &mut [f64], accumulate: bool| -> Result<()> {
        let (q, r) = qr_positive(y).map_err(|e| Error::Renormalization(e.to_string()))?;
        for j in 0..d {
            let rjj = r[(j, j)];
            if !(rjj >= DIAGONAL_FLOOR) || !rjj.is_finite() {
                return Err(Error::Renormalization(format!(
                    "triangular diagonal entry {rjj:e} at position {j}"
                )));
            }
            if accumulate {
                logs[j] += rjj.ln();
            }
        }
        *y = q;
        Ok(())
    };
    for b in 0..(burn_blocks + blocks) {
        let accumulate = b >= burn_blocks;
        if b == burn_blocks {
            renormalize(&mut y, &mut logs, false)?;
            since_qr = 0;
        }
        let idx = measure.sample_block_index(rng);
        for &s in measure.support()[idx].symbols() {
            y = &transposed[s] * &y;
            since_qr += 1;
            if since_qr == cadence {
                renormalize(&mut y, &mut logs, accumulate)?;
                since_qr = 0;
            }
        }
    }
    renormalize(&mut y, &mut logs, true)?;
    let count = (blocks * n) as f64;
    let mut rates: Vec<f64> = logs.iter().map(|l| l / count).collect();
    rates.sort_by(|a, b| b.total_cmp(a));
    Ok((rates, (burn_blocks + blocks) * n))
}

/// Monte-Carlo Lyapunov exponents under a (step-n) Bernoulli measure.
/// Trial `t` draws from stream `t` of `seed`; `steps` counts original
/// symbols after a burn-in of [`BURN_IN`] symbols.
pub fn exponents_mc(
    ifs: &AffineIfs,
    measure: &StepMeasure,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovSpectrum> {
    ifs.require_contractive()?;
    if steps < 100 {
        return Err(invalid(format!("need at least 100 steps, got {steps}")));
    }
    if trials < 2 {
        return Err(invalid("need at least 2 trials for a standard error"));
    }
    if measure.alphabet_size() > ifs.len() {
        return Err(invalid("measure uses symbols outside the alphabet"));
    }
    let transposed: Vec<Matrix> = ifs.matrices().iter().map(|a| a.transpose()).collect();
    let cadence = qr_cadence(ifs);
    let results: Vec<(Vec<f64>, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            growth_rates(&transposed, measure, BURN_IN, steps, cadence, &mut rng)
        })
        .collect::<Result<_>>()?;
    let d = ifs.dim();
    let tf = trials as f64;
    let mut chi = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    for j in 0..d {
        let xs: Vec<f64> = results.iter().map(|(r, _)| -r[j]).collect();
        let mean = xs.iter().sum::<f64>() / tf;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (tf - 1.0);
        chi.push(mean);
        stderr.push((var / tf).sqrt());
    }
    let total = results.iter().map(|(_, s)| s).sum();
    LyapunovSpectrum::new(chi, stderr, total, trials)
}

/// `min_k { k + (h − Σ_{j≤k} χ_j)/χ_{k+1} }` over `k = 0..d−1`, capped at
/// `d`.
pub fn lyapunov_dimension(h: f64, chi: &[f64], d: usize) -> f64 {
    let mut best = d as f64;
    let mut partial = 0.0;
    for (k, &c) in chi.iter().enumerate().take(d) {
        if c > 0.0 {
            best = best.min(k as f64 + (h - partial) / c);
        }
        partial += c;
    }
    best.clamp(0.0, d as f64)
}

/// How a singular value gap behaves along products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapClass {
    Dominated,
    Undominated,
    Inconclusive,
}

impl GapClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GapClass::Dominated => "dominated",
            GapClass::Undominated => "undominated",
            GapClass::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for GapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Statistics of `α_{i+1}/α_i` over words of length `1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// One-based gap index `i`.
    pub gap: usize,
    pub class: GapClass,
    /// Fitted slope of `log max ratio` against `n` (an estimate of `log τ`).
    pub decay_rate: f64,
    pub r2: f64,
    /// Smallest ratio over all words examined.
    pub min_ratio: f64,
    /// Largest ratio at each length.
    pub max_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub gaps: Vec<GapReport>,
    pub n_max: usize,
    pub sampled: bool,
}

impl DominationReport {
    /// Every gap classified as dominated.
    pub fn all_dominated(&self) -> bool {
        self.gaps.iter().all(|g| g.class == GapClass::Dominated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DominationMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

pub const DOMINATION_SLOPE: f64 = -0.01;
pub const DOMINATION_R2: f64 = 0.9;

/// Classifies every gap from the ratio statistics up to `n_max`.
pub fn domination_test(ifs: &AffineIfs, n_max: usize, mode: DominationMode) -> Result<DominationReport> {
    if n_max < 4 {
        return Err(invalid(format!("n_max must be at least 4, got {n_max}")));
    }
    let d = ifs.dim();
    if d < 2 {
        return Err(Error::UnsupportedDimension {
            dim: d,
            reason: "domination needs at least two singular values".into(),
        });
    }
    let gaps = d - 1;
    let mut max_log = vec![Vec::with_capacity(n_max); gaps];
    let mut min_log = vec![f64::INFINITY; gaps];
    for n in 1..=n_max {
        let rows: Vec<Vec<f64>> = match mode {
            DominationMode::Exhaustive => {
                let levels = LevelSpectra::with_limit(ifs, n, PRESSURE_WORD_LIMIT)?;
                (0..levels.word_count())
                    .map(|i| levels.log_alphas(i).to_vec())
                    .collect()
            }
            DominationMode::Sampled { count, seed } => {
                if count == 0 {
                    return Err(invalid("sampled mode needs a positive count"));
                }
                (0..count)
                    .into_par_iter()
                    .map(|c| {
                        let mut rng = stream(seed, ((n as u64) << 32) | c as u64);
                        let w = Word::new((0..n).map(|_| rng.random_range(0..ifs.len())).collect());
                        let m = word_product(ifs.matrices(), &w)?;
                        let s = crate::linalg::singular_values(&m)?;
                        Ok(s.values().iter().map(|x| x.ln()).collect())
                    })
                    .collect::<Result<_>>()?
            }
        };
        for g in 0..gaps {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, la| {
                let r = la[g + 1] - la[g];
                (acc.0.min(r), acc.1.max(r))
            });
            min_log[g] = min_log[g].min(lo);
            max_log[g].push(hi);
        }
    }
    let ns: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    let reports = (0..gaps)
        .map(|g| {
            let (slope, _, r2) = linear_fit(&ns, &max_log[g]).expect("n_max >= 4");
            let min_ratio = min_log[g].exp();
            let first_max = max_log[g][0].exp();
            let class = if slope < DOMINATION_SLOPE && r2 > DOMINATION_R2 {
                GapClass::Dominated
            } else if min_ratio >= 0.5 * first_max {
                GapClass::Undominated
            } else {
                GapClass::Inconclusive
            };
            GapReport {
                gap: g + 1,
                class,
                decay_rate: slope,
                r2,
                min_ratio,
                max_ratio: max_log[g].iter().map(|x| x.exp()).collect(),
            }
        })
        .collect();
    Ok(DominationReport {
        gaps: reports,
        n_max,
        sampled: matches!(mode, DominationMode::Sampled { .. }),
    })
}

/// Relative tolerance for distinct eigenvalue moduli and for angles.
pub const EIGEN_TOL: f64 = 1e-8;

/// Witness words for pinching and twisting.
#[derive(Debug, Clone, PartialEq)]
pub struct PinchTwist {
    pub pinching: Option<Word>,
    pub twisting: Option<Word>,
}

/// Real eigenvectors of a 2×2 matrix with real eigenvalues of distinct
/// modulus, larger modulus first.
fn pinching_eigenlines(p: &Matrix) -> Option<[[f64; 2]; 2]> {
    let (a, b, c, e) = (p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
    let tr = a + e;
    let det = a * e - b * c;
    let disc = tr * tr - 4.0 * det;
    let scale = (a * a + b * b + c * c + e * e).max(f64::MIN_POSITIVE);
    if disc <= EIGEN_TOL * scale {
        return None;
    }
    let sq = disc.sqrt();
    // Stable root pair.
    let big = if tr >= 0.0 { 0.5 * (tr + sq) } else { 0.5 * (tr - sq) };
    let small = if big != 0.0 { det / big } else { -0.5 * sq };
    let (l1, l2) = if big.abs() >= small.abs() { (big, small) } else { (small, big) };
    if !(l2.abs() < (1.0 - EIGEN_TOL) * l1.abs()) {
        return None;
    }
    let vec_for = |l: f64| {
        let v1 = [b, l - a];
        let v2 = [l - e, c];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        [v[0] / n, v[1] / n]
    };
    Some([vec_for(l1), vec_for(l2)])
}

fn line_sine(x: [f64; 2], y: [f64; 2]) -> f64 {
    let cross = x[0] * y[1] - x[1] * y[0];
    cross.abs() / (x[0].hypot(x[1]) * y[0].hypot(y[1]))
}

/// Breadth-first search over words of length `1..=max_len` for a pinching
/// word (real eigenvalues of distinct modulus) and a twisting word mapping
/// each eigenline of the pinching product off both eigenlines.
pub fn pinching_twisting_search(ifs: &AffineIfs, max_len: usize) -> Result<PinchTwist> {
    if ifs.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ifs.dim(),
            reason: "pinching/twisting search is implemented for d = 2 only".into(),
        });
    }
    check_budget("pinching search", ifs.len(), max_len, PRESSURE_WORD_LIMIT)?;
    let mut pinching = None;
    'outer: for len in 1..=max_len {
        for w in enumerate_words(ifs.len(), len)? {
            let p = word_product(ifs.matrices(), &w)?;
            if let Some(lines) = pinching_eigenlines(&p) {
                pinching = Some((w, lines));
                break 'outer;
            }
        }
    }
    let Some((pw, lines)) = pinching else {
        return Ok(PinchTwist {
            pinching: None,
            twisting: None,
        });
    };
    let min_sine = EIGEN_TOL.sin();
    for len in 1..=max_len {
        for w in enumerate_words(ifs.len(), len)? {
            let m = word_product(ifs.matrices(), &w)?;
            let ok = lines.iter().all(|e| {
                let img = [m[(0, 0)] * e[0] + m[(0, 1)] * e[1], m[(1, 0)] * e[0] + m[(1, 1)] * e[1]];
                lines.iter().all(|f| line_sine(img, *f) > min_sine)
            });
            if ok {
                return Ok(PinchTwist {
                    pinching: Some(pw),
                    twisting: Some(w),
                });
            }
        }
    }
    Ok(PinchTwist {
        pinching: Some(pw),
        twisting: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ifs::conjugate;
    use crate::linalg::haar_orthogonal;

    fn within(est: f64, truth: f64, se: f64, floor: f64) -> bool {
        (est - truth).abs() <= (3.0 * se).max(floor)
    }

    #[test]
    fn conformal_exponents() {
        let ifs = fixtures::conformal_fixture();
        let p = [0.2, 0.5, 0.3];
        let m = StepMeasure::bernoulli(&p).unwrap();
        let spec = exponents_mc(&ifs, &m, 20_000, 8, 1).unwrap();
        let truth = 3f64.ln();
        for (c, se) in spec.chi().iter().zip(spec.stderr()) {
            // Exact up to rounding: every product is a scaled rotation.
            assert!(within(*c, truth, *se, 1e-9));
        }
    }

    #[test]
    fn diagonal_exponents() {
        let ifs = fixtures::dominated_diagonal();
        let p = [0.3, 0.7];
        let m = StepMeasure::bernoulli(&p).unwrap();
        let spec = exponents_mc(&ifs, &m, 50_000, 8, 2).unwrap();
        let chi1 = -(0.3 * 0.5f64.ln() + 0.7 * 0.6f64.ln());
        let chi2 = -(0.3 * 0.2f64.ln() + 0.7 * 0.1f64.ln());
        assert!(within(spec.chi()[0], chi1, spec.stderr()[0], 0.01));
        assert!(within(spec.chi()[1], chi2, spec.stderr()[1], 0.01));
    }

    #[test]
    fn determinant_identity_and_bounds() {
        let mut rng = stream(21, 0);
        for d in [2, 3] {
            let ifs = fixtures::random_contractive(d, 3, (0.3, 0.8), &mut rng);
            let m = StepMeasure::uniform(3, 1).unwrap();
            let spec = exponents_mc(&ifs, &m, 5_000, 8, 3).unwrap();
            let expected: f64 = -ifs
                .spectra()
                .iter()
                .map(|s| s.values().iter().map(|x| x.ln()).sum::<f64>())
                .sum::<f64>()
                / 3.0;
            let se: f64 = spec.stderr().iter().map(|s| s * s).sum::<f64>().sqrt();
            assert!(within(spec.sum(), expected, se, 1e-9));
            for (c, se) in spec.chi().iter().zip(spec.stderr()) {
                assert!(*c >= -ifs.norm().ln() - 3.0 * se);
                assert!(*c <= -ifs.mininorm().ln() + 3.0 * se);
            }
        }
    }

    #[test]
    fn conjugation_invariance() {
        let mut rng = stream(22, 0);
        let ifs = fixtures::f1();
        let g = haar_orthogonal(2, &mut rng).unwrap();
        let other = conjugate(&ifs, &g).unwrap();
        let m = StepMeasure::uniform(3, 1).unwrap();
        let a = exponents_mc(&ifs, &m, 20_000, 8, 5).unwrap();
        let b = exponents_mc(&other, &m, 20_000, 8, 6).unwrap();
        for j in 0..2 {
            let se = a.stderr()[j].hypot(b.stderr()[j]);
            assert!(within(a.chi()[j], b.chi()[j], se, 0.005));
        }
    }

    #[test]
    fn step_two_reproduces_step_one() {
        let ifs = fixtures::f1();
        let p = [0.5, 0.3, 0.2];
        let one = StepMeasure::bernoulli(&p).unwrap();
        let words: Vec<Word> = enumerate_words(3, 2).unwrap().collect();
        let weights = words.iter().map(|w| p[w.symbols()[0]] * p[w.symbols()[1]]).collect();
        let two = StepMeasure::new(2, words, weights).unwrap();
        let a = exponents_mc(&ifs, &one, 20_000, 8, 7).unwrap();
        let b = exponents_mc(&ifs, &two, 20_000, 8, 8).unwrap();
        for j in 0..2 {
            let se = a.stderr()[j].hypot(b.stderr()[j]);
            assert!(within(a.chi()[j], b.chi()[j], se, 0.005));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ifs = fixtures::f1();
        let m = StepMeasure::uniform(3, 1).unwrap();
        let a = exponents_mc(&ifs, &m, 1_000, 4, 9).unwrap();
        let b = exponents_mc(&ifs, &m, 1_000, 4, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_checks() {
        let ifs = fixtures::f1();
        let m = StepMeasure::uniform(3, 1).unwrap();
        assert!(exponents_mc(&ifs, &m, 99, 4, 0).is_err());
        assert!(exponents_mc(&ifs, &m, 100, 1, 0).is_err());
        let big = StepMeasure::uniform(4, 1).unwrap();
        assert!(exponents_mc(&ifs, &big, 100, 2, 0).is_err());
    }

    #[test]
    fn lyapunov_dimension_examples() {
        let chi = [2f64.ln(), 4f64.ln()];
        assert_eq!(lyapunov_dimension(2f64.ln(), &chi, 2), 1.0);
        assert_eq!(lyapunov_dimension(0.0, &chi, 2), 0.0);
        assert_eq!(lyapunov_dimension(10.0, &chi, 2), 2.0);
        let mut prev = 0.0;
        for i in 0..=100 {
            let h = 0.03 * i as f64;
            let v = lyapunov_dimension(h, &chi, 2);
            assert!(v >= prev - 1e-15);
            assert!(v - prev <= 0.03 / chi[0] + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn domination_examples() {
        let dom = domination_test(&fixtures::dominated_diagonal(), 8, DominationMode::Exhaustive).unwrap();
        assert_eq!(dom.gaps[0].class, GapClass::Dominated);
        assert!(dom.gaps[0].decay_rate <= -0.9);
        assert!(dom.all_dominated());

        let rot = domination_test(&fixtures::two_rotations(), 8, DominationMode::Exhaustive).unwrap();
        assert_eq!(rot.gaps[0].class, GapClass::Undominated);

        let mixed8 = domination_test(&fixtures::rotation_mixed(), 8, DominationMode::Exhaustive).unwrap();
        let mixed12 = domination_test(&fixtures::rotation_mixed(), 12, DominationMode::Exhaustive).unwrap();
        let flipped = matches!(
            (mixed8.gaps[0].class, mixed12.gaps[0].class),
            (GapClass::Dominated, GapClass::Undominated) | (GapClass::Undominated, GapClass::Dominated)
        );
        assert!(!flipped);
        assert!(domination_test(&fixtures::f1(), 3, DominationMode::Exhaustive).is_err());
    }

    #[test]
    fn domination_sampled_agrees_on_diagonal() {
        let rep = domination_test(
            &fixtures::dominated_diagonal(),
            8,
            DominationMode::Sampled { count: 200, seed: 4 },
        )
        .unwrap();
        assert!(rep.sampled);
        assert_eq!(rep.gaps[0].class, GapClass::Dominated);
    }

    #[test]
    fn pinching_examples() {
        let pt = pinching_twisting_search(&fixtures::pinch_twist(), 4).unwrap();
        assert_eq!(pt.pinching.as_ref().map(|w| w.len()), Some(1));
        assert!(pt.twisting.is_some());

        let rot = pinching_twisting_search(&fixtures::scaled_rotations(3), 6).unwrap();
        assert!(rot.pinching.is_none());

        let diag = pinching_twisting_search(&fixtures::dominated_diagonal(), 3).unwrap();
        assert!(diag.pinching.is_some());
        assert!(diag.twisting.is_none());

        assert!(matches!(
            pinching_twisting_search(&fixtures::equilateral_fixture_3d(0.2), 2),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn eigenlines_are_eigenvectors() {
        let m = Matrix::from_row_slice(2, 2, &[0.3, 0.2, 0.1, 0.05]);
        if let Some(lines) = pinching_eigenlines(&m) {
            for e in lines {
                let img = [m[(0, 0)] * e[0] + m[(0, 1)] * e[1], m[(1, 0)] * e[0] + m[(1, 1)] * e[1]];
                assert!(line_sine(img, e) < 1e-12);
            }
        } else {
            panic!("expected real distinct eigenvalues");
        }
    }
}
