//! Affine iterated function systems `f_i(x) = A_i x + v_i`, the natural
//! projection from the code space, and the explicit conditions on a matrix
//! tuple that can be checked from norms and pairwise translation distances.

use crate::error::{invalid, precondition, Error, Result};
use crate::linalg::{singular_values, Matrix, SingularSpectrum, Vector};
use crate::symbolic::Word;

/// Threshold on the separation ratio in the plane.
pub const PLANAR_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Threshold on the separation ratio for `d ≥ 3`: `2/√3 − 1`.
pub fn higher_dim_threshold() -> f64 {
    2.0 / 3f64.sqrt() - 1.0
}

/// The threshold used for ambient dimension `d` (`d ≥ 2`).
pub fn membership_threshold(d: usize) -> Option<f64> {
    match d {
        0 | 1 => None,
        2 => Some(PLANAR_THRESHOLD),
        _ => Some(higher_dim_threshold()),
    }
}

/// An affine IFS with an optional probability vector. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineIfs {
    matrices: Vec<Matrix>,
    translations: Vec<Vector>,
    weights: Option<Vec<f64>>,
    spectra: Vec<SingularSpectrum>,
}

impl AffineIfs {
    /// Validates shapes, finiteness, invertibility and the probability
    /// vector. Contractivity is checked by the operations that need it.
    pub fn new(
        matrices: Vec<Matrix>,
        translations: Vec<Vector>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = matrices.len();
        if n < 2 {
            return Err(invalid(format!("an IFS needs at least 2 maps, got {n}")));
        }
        if translations.len() != n {
            return Err(invalid(format!(
                "{n} matrices but {} translations",
                translations.len()
            )));
        }
        let d = matrices[0].nrows();
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let mut spectra = Vec::with_capacity(n);
        for (i, (a, v)) in matrices.iter().zip(&translations).enumerate() {
            if a.shape() != (d, d) {
                return Err(invalid(format!(
                    "map {}: matrix is {}x{}, expected {d}x{d}",
                    i + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            if v.len() != d {
                return Err(invalid(format!(
                    "map {}: translation has length {}, expected {d}",
                    i + 1,
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(invalid(format!("map {}: non-finite translation", i + 1)));
            }
            let s = singular_values(a)?;
            if s.is_near_singular() {
                return Err(invalid(format!("map {}: matrix is singular", i + 1)));
            }
            spectra.push(s);
        }
        if let Some(p) = &weights {
            if p.len() != n {
                return Err(invalid(format!("{n} maps but {} weights", p.len())));
            }
            if p.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(invalid("weights must be strictly positive"));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("weights sum to {total}, not 1")));
            }
        }
        Ok(Self {
            matrices,
            translations,
            weights,
            spectra,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// Number of maps `N`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn translations(&self) -> &[Vector] {
        &self.translations
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// The probability vector, uniform when none was given.
    pub fn weights_or_uniform(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.len() as f64; self.len()])
    }

    pub fn with_weights(&self, weights: Option<Vec<f64>>) -> Result<Self> {
        Self::new(self.matrices.clone(), self.translations.clone(), weights)
    }

    /// Singular values of each generator.
    pub fn spectra(&self) -> &[SingularSpectrum] {
        &self.spectra
    }

    /// `‖𝐀‖ = max_i ‖A_i‖`.
    pub fn norm(&self) -> f64 {
        self.spectra.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// `𝔪(𝐀) = min_i 𝔪(A_i)`.
    pub fn mininorm(&self) -> f64 {
        self.spectra
            .iter()
            .map(|s| s.mininorm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `‖𝐯‖ = max_i |v_i|`.
    pub fn translation_norm(&self) -> f64 {
        self.translations.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_contractive(&self) -> bool {
        self.norm() < 1.0
    }

    pub fn require_contractive(&self) -> Result<()> {
        if self.is_contractive() {
            Ok(())
        } else {
            Err(precondition(format!(
                "system is not contractive (‖A‖ = {})",
                self.norm()
            )))
        }
    }

    /// `‖𝐯‖ / (1 − ‖𝐀‖)`: the attractor lies in the closed ball of this
    /// radius about the origin.
    pub fn radius(&self) -> Result<f64> {
        self.require_contractive()?;
        Ok(self.translation_norm() / (1.0 - self.norm()))
    }

    /// Fixed point of `f_i`, i.e. `π(i i i …)`.
    pub fn fixed_point(&self, i: usize) -> Result<Vector> {
        let d = self.dim();
        let lhs = Matrix::identity(d, d) - &self.matrices[i];
        lhs.lu()
            .solve(&self.translations[i])
            .ok_or_else(|| precondition(format!("map {} has no unique fixed point", i + 1)))
    }

    /// Applies `f_i`.
    pub fn apply(&self, i: usize, x: &Vector) -> Vector {
        &self.matrices[i] * x + &self.translations[i]
    }

    /// Row-major copies of the maps for allocation-free inner loops.
    pub fn flat_maps(&self) -> FlatMaps {
        let d = self.dim();
        let mut a = Vec::with_capacity(self.len() * d * d);
        let mut v = Vec::with_capacity(self.len() * d);
        for (m, t) in self.matrices.iter().zip(&self.translations) {
            for r in 0..d {
                for c in 0..d {
                    a.push(m[(r, c)]);
                }
            }
            v.extend(t.iter());
        }
        FlatMaps { d, a, v }
    }
}

/// The maps of an IFS in flat row-major storage.
#[derive(Debug, Clone)]
pub struct FlatMaps {
    pub d: usize,
    a: Vec<f64>,
    v: Vec<f64>,
}

impl FlatMaps {
    /// `out = A_i x + v_i`.
    #[inline]
    pub fn apply(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        let a = &self.a[i * d * d..(i + 1) * d * d];
        for r in 0..d {
            let mut acc = self.v[i * d + r];
            for c in 0..d {
                acc += a[r * d + c] * x[c];
            }
            out[r] = acc;
        }
    }

    /// `f_{w_1} ∘ ⋯ ∘ f_{w_n}(x)` written into `x`.
    pub fn apply_word(&self, symbols: &[usize], x: &mut [f64]) {
        let mut tmp = [0.0f64; 16];
        let tmp = &mut tmp[..self.d];
        for &s in symbols.iter().rev() {
            self.apply(s, x, tmp);
            x.copy_from_slice(tmp);
        }
    }
}

/// Number of leading symbols needed so the natural projection is within
/// `tol` of every point of the cylinder.
pub fn projection_depth(ifs: &AffineIfs, tol: f64) -> Result<usize> {
    ifs.require_contractive()?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let norm = ifs.norm();
    let vnorm = ifs.translation_norm();
    if vnorm == 0.0 || norm == 0.0 {
        return Ok(1);
    }
    let n = ((tol * (1.0 - norm) / vnorm).ln() / norm.ln()).ceil();
    Ok(if n.is_finite() && n > 0.0 { n as usize } else { 0 })
}

/// `Σ_{k=1}^{|w|} A_{w|k−1} v_{w_k} = f_w(0)`, the projection truncated at the
/// end of the word.
pub fn truncated_projection(ifs: &AffineIfs, w: &Word) -> Result<Vector> {
    w.check_alphabet(ifs.len())?;
    let flat = ifs.flat_maps();
    let mut x = vec![0.0; ifs.dim()];
    flat.apply_word(w.symbols(), &mut x);
    Ok(Vector::from_vec(x))
}

/// The natural projection of any infinite word starting with `w`, accurate to
/// `tol`: the sum is cut after `n* = min(|w|, ⌈log(tol(1−‖𝐀‖)/‖𝐯‖)/log‖𝐀‖⌉)`
/// terms, whose tail is at most `‖𝐀‖^{n*}‖𝐯‖/(1−‖𝐀‖)`.
pub fn natural_projection(ifs: &AffineIfs, w: &Word, tol: f64) -> Result<Vector> {
    if w.is_empty() {
        return Err(invalid("natural projection needs a nonempty word"));
    }
    let n_star = projection_depth(ifs, tol)?.min(w.len());
    truncated_projection(ifs, &w.prefix(n_star))
}

/// Checkable conditions on a system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `threshold − M`.
    pub membership_margin: f64,
    pub threshold_used: f64,
    /// `M = max_{i≠j} (‖A_i‖+‖A_j‖)/|v_i−v_j| · ‖𝐯‖/(1−‖𝐀‖)`.
    pub separation_ratio: f64,
    pub ssc_gap: f64,
    pub contractive: bool,
    pub duplicates: Vec<(usize, usize)>,
}

impl ConditionReport {
    /// Membership in the open condition set (`M > 0` and margin positive).
    pub fn is_member(&self) -> bool {
        self.separation_ratio > 0.0 && self.membership_margin > 0.0
    }

    pub fn ssc_certified(&self) -> bool {
        self.ssc_gap > 0.0
    }
}

/// Index pairs whose translations agree up to `1e-12 · max(1, ‖𝐯‖)`.
pub fn duplicate_translations(ifs: &AffineIfs) -> Vec<(usize, usize)> {
    let tol = 1e-12 * ifs.translation_norm().max(1.0);
    let t = ifs.translations();
    let mut out = Vec::new();
    for i in 0..t.len() {
        for j in (i + 1)..t.len() {
            if (&t[i] - &t[j]).norm() < tol {
                out.push((i, j));
            }
        }
    }
    out
}

fn separation_inputs(ifs: &AffineIfs) -> Result<f64> {
    ifs.require_contractive()?;
    let dups = duplicate_translations(ifs);
    if !dups.is_empty() {
        return Err(Error::DuplicateTranslations(dups));
    }
    ifs.radius()
}

/// `min_{i≠j} |v_i − v_j| − (‖A_i‖ + ‖A_j‖)·‖𝐯‖/(1 − ‖𝐀‖)`. A positive value
/// certifies the strong separation condition for `(𝐀, G𝐯)` and every
/// orthogonal `G`.
pub fn ssc_certificate(ifs: &AffineIfs) -> Result<f64> {
    let radius = separation_inputs(ifs)?;
    let s = ifs.spectra();
    let t = ifs.translations();
    let mut gap = f64::INFINITY;
    for i in 0..ifs.len() {
        for j in (i + 1)..ifs.len() {
            let g = (&t[i] - &t[j]).norm() - (s[i].norm() + s[j].norm()) * radius;
            gap = gap.min(g);
        }
    }
    Ok(gap)
}

/// Evaluates the separation ratio `M` against the threshold for the ambient
/// dimension (`√2/2` in the plane, `2/√3 − 1` for `d ≥ 3`).
pub fn membership_margin(ifs: &AffineIfs) -> Result<ConditionReport> {
    let threshold = membership_threshold(ifs.dim()).ok_or_else(|| Error::UnsupportedDimension {
        dim: ifs.dim(),
        reason: "membership conditions are defined for d >= 2".into(),
    })?;
    let radius = separation_inputs(ifs)?;
    let s = ifs.spectra();
    let t = ifs.translations();
    let mut ratio: f64 = 0.0;
    for i in 0..ifs.len() {
        for j in (i + 1)..ifs.len() {
            let r = (s[i].norm() + s[j].norm()) / (&t[i] - &t[j]).norm() * radius;
            ratio = ratio.max(r);
        }
    }
    Ok(ConditionReport {
        membership_margin: threshold - ratio,
        threshold_used: threshold,
        separation_ratio: ratio,
        ssc_gap: ssc_certificate(ifs)?,
        contractive: true,
        duplicates: Vec::new(),
    })
}

fn invertible(u: &Matrix, d: usize) -> Result<Matrix> {
    if u.shape() != (d, d) {
        return Err(invalid(format!("conjugating matrix must be {d}x{d}")));
    }
    if singular_values(u)?.is_near_singular() {
        return Err(precondition("conjugating matrix is singular"));
    }
    u.clone()
        .try_inverse()
        .ok_or_else(|| precondition("conjugating matrix is singular"))
}

/// `u(𝐀) = (u⁻¹A_1u, …, u⁻¹A_Nu)` with the original translations.
pub fn conjugate(ifs: &AffineIfs, u: &Matrix) -> Result<AffineIfs> {
    let u_inv = invertible(u, ifs.dim())?;
    let matrices = ifs.matrices().iter().map(|a| &u_inv * a * u).collect();
    AffineIfs::new(matrices, ifs.translations().to_vec(), ifs.weights.clone())
}

/// `(𝐀, u(𝐯))`: the matrices unchanged, every translation mapped by `u`.
pub fn transform_translations(ifs: &AffineIfs, u: &Matrix) -> Result<AffineIfs> {
    invertible(u, ifs.dim())?;
    let translations = ifs.translations().iter().map(|v| u * v).collect();
    AffineIfs::new(ifs.matrices().to_vec(), translations, ifs.weights.clone())
}
