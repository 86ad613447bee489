//! Grassmannian orbits of the inverse cocycle, limit residuals for the
//! growth of restricted and projected products, and transversality
//! diagnostics for rotated translation families.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;

use crate::error::{invalid, precondition, Error, Result};
use crate::ifs::{duplicate_translations, membership_margin, AffineIfs};
use crate::linalg::{
    compound, haar_orthogonal, operator_norm, projected_singular_values, qr_positive, rotation2,
    Matrix, Subspace, Vector,
};
use crate::lyapunov::LyapunovSpectrum;
use crate::rng::{par_batches, stream};
use crate::symbolic::{word_product, StepMeasure, Word};

/// Steps discarded before an orbit point is used as a typical subspace.
pub const ORBIT_BURN_IN: usize = 1000;
/// Default truncation depth for word pairs.
pub const DEFAULT_DEPTH: usize = 40;
/// Samples per seeded batch. Fixed so that a larger sample count extends a
/// smaller one.
pub const SAMPLE_BATCH: usize = 1024;

const ORTHONORMAL_CHECK: f64 = 1e-10;

/// A product of compound matrices kept as `exp(log_scale) · mat` with `mat`
/// normalised to unit max-entry.
#[derive(Debug, Clone)]
struct CompoundAccumulator {
    order: usize,
    mat: Matrix,
    log_scale: f64,
}

impl CompoundAccumulator {
    fn new(k: usize, order: usize) -> Result<Self> {
        let size = crate::linalg::k_subsets(k, order).len();
        Ok(Self {
            order,
            mat: Matrix::identity(size, size),
            log_scale: 0.0,
        })
    }

    /// Replaces the product `C` by `r^∧order · C`.
    fn push_left(&mut self, r: &Matrix) -> Result<()> {
        let c = compound(r, self.order)?;
        self.mat = c * &self.mat;
        let m = self.mat.amax();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Renormalization("compound product degenerated".into()));
        }
        self.mat /= m;
        self.log_scale += m.ln();
        Ok(())
    }

    fn log_norm(&self) -> Result<f64> {
        Ok(self.log_scale + operator_norm(&self.mat)?.ln())
    }
}

/// Tracks `Z ↦ M Z` for a d×k frame, keeping `Z = Q R` with `Q` orthonormal
/// and the singular values of `R` available through compound norms.
#[derive(Debug, Clone)]
struct FrameTracker {
    q: Matrix,
    log_det: f64,
    compounds: Vec<CompoundAccumulator>,
}

impl FrameTracker {
    /// `orders` lists the compound orders `1..k−1` whose norms are needed.
    fn new(frame: Matrix, orders: &[usize]) -> Result<Self> {
        let k = frame.ncols();
        Ok(Self {
            q: frame,
            log_det: 0.0,
            compounds: orders
                .iter()
                .map(|&o| CompoundAccumulator::new(k, o))
                .collect::<Result<_>>()?,
        })
    }

    fn apply(&mut self, m: &Matrix) -> Result<()> {
        let (q, r) = qr_positive(&(m * &self.q)).map_err(|e| Error::Renormalization(e.to_string()))?;
        for j in 0..r.nrows() {
            self.log_det += r[(j, j)].ln();
        }
        for c in &mut self.compounds {
            c.push_left(&r)?;
        }
        self.q = q;
        Ok(())
    }

    /// `log ‖R^∧ℓ‖` with `ℓ = 0` giving 0 and `ℓ = k` giving `log|det R|`.
    fn log_compound_norm(&self, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(0.0);
        }
        if order == self.q.ncols() {
            return Ok(self.log_det);
        }
        self.compounds
            .iter()
            .find(|c| c.order == order)
            .ok_or_else(|| invalid(format!("compound order {order} not tracked")))?
            .log_norm()
    }
}

/// An orbit `V_{m+1} = A_{i_m}^{-1} V_m` of the inverse cocycle.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    pub subspaces: Vec<Subspace>,
    pub word: Word,
    /// `log 𝔪(A_{i_{m-1}}^{-1} ⋯ A_{i_0}^{-1} | V_0)` for `m = 1..=n`.
    pub log_mininorm: Vec<f64>,
}

impl OrbitSample {
    pub fn last(&self) -> &Subspace {
        self.subspaces.last().expect("orbit starts with a subspace")
    }
}

fn check_orbit_inputs(ifs: &AffineIfs, measure: &StepMeasure, k: usize) -> Result<()> {
    ifs.require_contractive()?;
    let d = ifs.dim();
    if k == 0 || k >= d {
        return Err(invalid(format!("subspace dimension {k} must lie in 1..={}", d - 1)));
    }
    if measure.alphabet_size() > ifs.len() {
        return Err(invalid("measure uses symbols outside the alphabet"));
    }
    if let Some(i) = ifs.spectra().iter().position(|s| s.is_near_singular()) {
        return Err(precondition(format!("matrix {} is near singular", i + 1)));
    }
    Ok(())
}

fn sample_symbols<R: Rng + ?Sized>(measure: &StepMeasure, n: usize, rng: &mut R) -> Word {
    let blocks = n.div_ceil(measure.block_len());
    measure.sample_word(blocks, rng).prefix(n)
}

/// Runs `n` steps of `V ↦ A_i^{-1} V` from the start `v0` along `word`.
pub fn orbit_from(ifs: &AffineIfs, v0: Subspace, word: Word) -> Result<OrbitSample> {
    let k = v0.dim();
    let inverses: Vec<Matrix> = ifs
        .matrices()
        .iter()
        .map(|a| a.clone().try_inverse().ok_or_else(|| precondition("singular matrix")))
        .collect::<Result<_>>()?;
    let orders: Vec<usize> = (1..k).collect();
    let mut tracker = FrameTracker::new(v0.basis().clone(), &orders)?;
    let mut subspaces = Vec::with_capacity(word.len() + 1);
    let mut log_mininorm = Vec::with_capacity(word.len());
    subspaces.push(v0);
    for &s in word.symbols() {
        tracker.apply(&inverses[s])?;
        let gram = tracker.q.transpose() * &tracker.q - Matrix::identity(k, k);
        if gram.amax() > ORTHONORMAL_CHECK {
            return Err(Error::Renormalization(format!(
                "orbit frame lost orthonormality ({:e})",
                gram.amax()
            )));
        }
        log_mininorm.push(tracker.log_det - tracker.log_compound_norm(k - 1)?);
        subspaces.push(Subspace::new(tracker.q.clone())?);
    }
    Ok(OrbitSample {
        subspaces,
        word,
        log_mininorm,
    })
}

/// An orbit of length `n` from a Haar-random k-plane along a word drawn
/// from `measure`. Both draws use stream 0 of `seed`.
pub fn grassmann_orbit(
    ifs: &AffineIfs,
    measure: &StepMeasure,
    k: usize,
    n: usize,
    seed: u64,
) -> Result<OrbitSample> {
    check_orbit_inputs(ifs, measure, k)?;
    let mut rng = stream(seed, 0);
    let v0 = Subspace::random(ifs.dim(), k, &mut rng)?;
    let word = sample_symbols(measure, n, &mut rng);
    orbit_from(ifs, v0, word)
}

/// The end point of an orbit of length [`ORBIT_BURN_IN`]: a proxy for a
/// Furstenberg-typical k-plane.
pub fn typical_subspace(ifs: &AffineIfs, measure: &StepMeasure, k: usize, seed: u64) -> Result<Subspace> {
    Ok(grassmann_orbit(ifs, measure, k, ORBIT_BURN_IN, seed)?.last().clone())
}

/// `r_n = (1/n) log 𝔪(A_{i_{n-1}}^{-1} ⋯ A_{i_0}^{-1} | V) − χ_{d−k+1}`.
pub fn furstenberg_limit_residual(orbit: &OrbitSample, chi: &LyapunovSpectrum, k: usize) -> Result<Vec<f64>> {
    let d = chi.chi().len();
    if k == 0 || k >= d || orbit.subspaces[0].dim() != k {
        return Err(invalid("orbit dimension does not match k"));
    }
    let target = chi.chi()[d - k];
    Ok(orbit
        .log_mininorm
        .iter()
        .enumerate()
        .map(|(m, l)| l / (m + 1) as f64 - target)
        .collect())
}

/// `Σ_{j≤⌊s⌋} χ_j + (s−⌊s⌋) χ_{⌈s⌉}`.
pub fn partial_exponent_sum(chi: &[f64], s: f64) -> f64 {
    let k = s.floor() as usize;
    let head: f64 = chi[..k.min(chi.len())].iter().sum();
    let frac = s - k as f64;
    if frac > 0.0 && k < chi.len() {
        head + frac * chi[k]
    } else {
        head
    }
}

/// `−(1/n) log φ^s(P_{V^⊥} A_{i|n}) − Σ_{j≤⌊s⌋}χ_j − (s−⌊s⌋)χ_{⌈s⌉}` for
/// `n = 1..=word.len()`, where `V^⊥` has dimension `k = d − dim V`.
pub fn projected_svf_residual_along(
    ifs: &AffineIfs,
    v: &Subspace,
    s: f64,
    word: &Word,
    chi: &LyapunovSpectrum,
) -> Result<Vec<f64>> {
    let d = ifs.dim();
    if v.ambient_dim() != d {
        return Err(invalid("subspace and system differ in dimension"));
    }
    let k = d - v.dim();
    if !(0.0..=k as f64).contains(&s) {
        return Err(invalid(format!("s must lie in [0, {k}], got {s}")));
    }
    word.check_alphabet(ifs.len())?;
    let target = partial_exponent_sum(chi.chi(), s);
    let lo = s.floor() as usize;
    let hi = (lo + 1).min(k);
    let orders: Vec<usize> = [lo, hi].into_iter().filter(|&o| o >= 1 && o < k).collect();
    let perp = v.complement();
    let mut tracker = FrameTracker::new(perp.basis().clone(), &orders)?;
    let transposed: Vec<Matrix> = ifs.matrices().iter().map(|a| a.transpose()).collect();
    let frac = s - lo as f64;
    let mut out = Vec::with_capacity(word.len());
    for (m, &sym) in word.symbols().iter().enumerate() {
        tracker.apply(&transposed[sym])?;
        let log_phi = if s == 0.0 {
            0.0
        } else if frac == 0.0 {
            tracker.log_compound_norm(lo)?
        } else {
            (1.0 - frac) * tracker.log_compound_norm(lo)? + frac * tracker.log_compound_norm(hi)?
        };
        out.push(-log_phi / (m + 1) as f64 - target);
    }
    Ok(out)
}

/// The projected singular value residual along a fresh word of length `n`
/// drawn from `measure` (stream 1 of `seed`).
pub fn projected_svf_limit_residual(
    ifs: &AffineIfs,
    measure: &StepMeasure,
    v: &Subspace,
    s: f64,
    n: usize,
    chi: &LyapunovSpectrum,
    seed: u64,
) -> Result<Vec<f64>> {
    check_orbit_inputs(ifs, measure, v.dim())?;
    let mut rng = stream(seed, 1);
    let word = sample_symbols(measure, n, &mut rng);
    projected_svf_residual_along(ifs, v, s, &word, chi)
}

/// `prefix · cycle^∞` cut at `depth` symbols.
fn periodic_word<R: Rng + ?Sized>(n: usize, first: usize, depth: usize, rng: &mut R) -> Word {
    let prefix_len = rng.random_range(1..=4usize);
    let cycle_len = rng.random_range(1..=3usize);
    let mut prefix = vec![first];
    prefix.extend((1..prefix_len).map(|_| rng.random_range(0..n)));
    let cycle: Vec<usize> = (0..cycle_len).map(|_| rng.random_range(0..n)).collect();
    Word::periodic(&Word::new(prefix), &Word::new(cycle), depth)
}

/// Difference `π(i) − π(j)` of truncated projections with translations `t`.
fn projection_difference(matrices: &[Matrix], t: &[Vector], i: &Word, j: &Word) -> Vector {
    let eval = |w: &Word| {
        let d = t[0].len();
        let mut x = Vector::zeros(d);
        for &s in w.symbols().iter().rev() {
            x = &matrices[s] * x + &t[s];
        }
        x
    };
    eval(i) - eval(j)
}

/// `min_{α₀, |v|=1} max(|⟨v, D(α₀)⟩|, |⟨v, ∂_α D(α₀)⟩|)` for
/// `D(α) = cos α · p + sin α · q`, which is `σ_min([p q]) / √2`.
pub fn pair_transversality(p: &Vector, q: &Vector) -> f64 {
    let m = Matrix::from_columns(&[p.clone(), q.clone()]);
    let sv = crate::linalg::singular_values_rect(&m).expect("finite");
    sv[1] / SQRT_2
}

/// Result of the transversality constant estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityDelta {
    /// `max(0, raw_min − correction)`.
    pub delta_hat: f64,
    /// Minimum over the sampled word pairs before the tail correction.
    pub raw_min: f64,
    /// `2‖𝐀‖^depth ‖𝐯‖/(1 − ‖𝐀‖)`.
    pub correction: f64,
    pub samples: usize,
    pub depth: usize,
    /// False when the system is outside the planar condition set; the
    /// estimate may then be zero.
    pub member: bool,
    /// The minimising pair.
    pub worst_pair: (Word, Word),
}

/// Estimates the transversality constant of the family `π_α = π_{𝐀, u_α 𝐯}`
/// over `samples` random pairs of eventually periodic words with distinct
/// first symbols. For each pair the inner minimum over the angle and the
/// direction is taken in closed form.
pub fn transversality_delta(ifs: &AffineIfs, samples: usize, depth: usize, seed: u64) -> Result<TransversalityDelta> {
    if ifs.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ifs.dim(),
            reason: "the rotated translation family is planar".into(),
        });
    }
    if samples == 0 || depth == 0 {
        return Err(invalid("samples and depth must be positive"));
    }
    let dups = duplicate_translations(ifs);
    if !dups.is_empty() {
        return Err(Error::DuplicateTranslations(dups));
    }
    let radius = ifs.radius()?;
    let member = membership_margin(ifs).map(|r| r.is_member()).unwrap_or(false);
    let n = ifs.len();
    let j = rotation2(FRAC_PI_2);
    let tv: Vec<Vector> = ifs.translations().to_vec();
    let jv: Vec<Vector> = tv.iter().map(|v| &j * v).collect();
    let parts = par_batches(samples, SAMPLE_BATCH, |b, len| {
        let mut rng = stream(seed, b);
        let mut best = (f64::INFINITY, Word::empty(), Word::empty());
        for _ in 0..len {
            let a = rng.random_range(0..n);
            let mut c = rng.random_range(0..n - 1);
            if c >= a {
                c += 1;
            }
            let wi = periodic_word(n, a, depth, &mut rng);
            let wj = periodic_word(n, c, depth, &mut rng);
            let p = projection_difference(ifs.matrices(), &tv, &wi, &wj);
            let q = projection_difference(ifs.matrices(), &jv, &wi, &wj);
            let v = pair_transversality(&p, &q);
            if v < best.0 {
                best = (v, wi, wj);
            }
        }
        best
    });
    let (raw_min, wi, wj) = parts
        .into_iter()
        .reduce(|x, y| if y.0 < x.0 { y } else { x })
        .expect("at least one batch");
    let correction = 2.0 * ifs.norm().powi(depth as i32) * radius;
    Ok(TransversalityDelta {
        delta_hat: (raw_min - correction).max(0.0),
        raw_min,
        correction,
        samples,
        depth,
        member,
        worst_pair: (wi, wj),
    })
}

/// `π_{𝐀, u_α 𝐯}(w)` truncated at `|w|`.
pub fn rotated_projection(ifs: &AffineIfs, alpha: f64, w: &Word) -> Result<Vector> {
    if ifs.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ifs.dim(),
            reason: "the rotated translation family is planar".into(),
        });
    }
    w.check_alphabet(ifs.len())?;
    let u = rotation2(alpha);
    let mut x = Vector::zeros(2);
    for &s in w.symbols().iter().rev() {
        x = &ifs.matrices()[s] * x + &u * &ifs.translations()[s];
    }
    Ok(x)
}

/// `|(π_{α+h}(w) − π_{α−h}(w))/(2h) − π_{α+π/2}(w)|`.
pub fn derivative_identity_residual(ifs: &AffineIfs, alpha: f64, w: &Word, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("step must be positive"));
    }
    let plus = rotated_projection(ifs, alpha + h, w)?;
    let minus = rotated_projection(ifs, alpha - h, w)?;
    let exact = rotated_projection(ifs, alpha + FRAC_PI_2, w)?;
    Ok(((plus - minus) / (2.0 * h) - exact).norm())
}

/// Empirical small-distance probabilities of projected point differences.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub t: Vec<f64>,
    /// Fraction of sampled group elements with distance below `t`.
    pub p: Vec<f64>,
    /// `Π_l min(1, t/α_l(P_V A_{i∧j}))`.
    pub bound: Vec<f64>,
    /// `p / bound`.
    pub c_hat: Vec<f64>,
    pub samples: usize,
}

/// Samples `G` (rotations for `d = 2`, Haar on `O(d)` otherwise) and records
/// how often `|P_V(π_{𝐀,G𝐯}(i) − π_{𝐀,G𝐯}(j))| < t`.
pub fn transversality_tail(
    ifs: &AffineIfs,
    v: &Subspace,
    pair: (&Word, &Word),
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<TailReport> {
    let d = ifs.dim();
    if d < 2 || v.ambient_dim() != d {
        return Err(invalid("subspace and system differ in dimension"));
    }
    if samples == 0 || t_grid.is_empty() {
        return Err(invalid("need samples and a nonempty t grid"));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("t values must be positive"));
    }
    ifs.require_contractive()?;
    let (wi, wj) = pair;
    wi.check_alphabet(ifs.len())?;
    wj.check_alphabet(ifs.len())?;
    // The difference is linear in G: diff = Σ_k A_{w|k-1} G v_{w_k} = T vec(G)
    // with vec stacking columns.
    let mut lin = Matrix::zeros(d, d * d);
    for (w, sign) in [(wi, 1.0), (wj, -1.0)] {
        let mut prefix = Matrix::identity(d, d);
        for &s in w.symbols() {
            let t = &ifs.translations()[s];
            for c in 0..d {
                let block = &prefix * (t[c] * sign);
                for r in 0..d {
                    for col in 0..d {
                        lin[(r, c * d + col)] += block[(r, col)];
                    }
                }
            }
            prefix *= &ifs.matrices()[s];
        }
    }
    let basis_t = v.basis().transpose();
    let proj_lin = &basis_t * &lin;
    let distances: Vec<f64> = par_batches(samples, SAMPLE_BATCH, |b, len| {
        let mut rng = stream(seed, b);
        (0..len)
            .map(|_| {
                let g = if d == 2 {
                    rotation2(rng.random_range(0.0..2.0 * PI))
                } else {
                    haar_orthogonal(d, &mut rng).expect("d >= 2")
                };
                let vec_g = Vector::from_column_slice(g.as_slice());
                (&proj_lin * vec_g).norm()
            })
            .collect::<Vec<f64>>()
    })
    .concat();
    let common = wi.common_prefix(wj);
    let a_common = word_product(ifs.matrices(), &common)?;
    let alphas = projected_singular_values(v, &a_common)?;
    let mut p = Vec::with_capacity(t_grid.len());
    let mut bound = Vec::with_capacity(t_grid.len());
    let mut c_hat = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let hits = distances.iter().filter(|&&x| x < t).count();
        let pt = hits as f64 / samples as f64;
        let b: f64 = alphas.iter().map(|&a| if a > 0.0 { (t / a).min(1.0) } else { 1.0 }).product();
        p.push(pt);
        bound.push(b);
        c_hat.push(pt / b);
    }
    Ok(TailReport {
        t: t_grid.to_vec(),
        p,
        bound,
        c_hat,
        samples,
    })
}
