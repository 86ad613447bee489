//! Dense linear algebra for small matrices (2 ≤ d ≤ 6).
//!
//! Singular values use one-sided (Hestenes) Jacobi rotations, which give
//! singular values with high relative accuracy for the small, possibly badly
//! scaled matrix products that appear when iterating an IFS. Exterior powers
//! are represented as compound matrices of k×k minors, indexed by k-subsets
//! in lexicographic order.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, precondition, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative size of the smallest singular value below which a matrix is
/// treated as singular to working precision.
pub const SINGULAR_RTOL: f64 = 1e-14;

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 100;
const ORTHONORMAL_TOL: f64 = 1e-12;

/// Singular values `α_1 ≥ … ≥ α_d` of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    near_singular: bool,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Operator norm `α_1`.
    pub fn norm(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Mininorm `α_d = ‖A⁻¹‖⁻¹`.
    pub fn mininorm(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `α_d < 1e-14 · α_1`.
    pub fn is_near_singular(&self) -> bool {
        self.near_singular
    }

    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }
}

fn check_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid("matrix has non-finite entries"))
    }
}

/// Singular values of a square matrix, largest first.
pub fn singular_values(a: &Matrix) -> Result<SingularSpectrum> {
    if !a.is_square() {
        return Err(invalid(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(invalid("empty matrix"));
    }
    let values = singular_values_rect(a)?;
    let near_singular = values[values.len() - 1] < SINGULAR_RTOL * values[0] || values[0] == 0.0;
    Ok(SingularSpectrum {
        values,
        near_singular,
    })
}

/// Singular values of an arbitrary m×n matrix, `min(m, n)` of them, largest
/// first.
pub fn singular_values_rect(a: &Matrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    // Hestenes iterates on columns; keep the short side as the column count.
    let work = if a.ncols() > a.nrows() {
        a.transpose()
    } else {
        a.clone()
    };
    let scale = work.amax();
    if scale == 0.0 {
        return Ok(vec![0.0; work.ncols()]);
    }
    let mut values = jacobi_column_norms(work / scale);
    for v in values.iter_mut() {
        *v *= scale;
    }
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

fn jacobi_column_norms(mut w: Matrix) -> Vec<f64> {
    let n = w.ncols();
    let m = w.nrows();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..m {
                    let (x, y) = (w[(r, p)], w[(r, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= JACOBI_EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let (x, y) = (w[(r, p)], w[(r, q)]);
                    w[(r, p)] = c * x - s * y;
                    w[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|j| w.column(j).norm()).collect()
}

/// Operator norm induced by the Euclidean norm.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values_rect(a)?.first().copied().unwrap_or(0.0))
}

/// Thin QR factorisation `A = QR` of an m×n matrix (m ≥ n) with the diagonal
/// of `R` forced positive. Modified Gram–Schmidt with one re-orthogonalisation
/// pass.
pub fn qr_positive(a: &Matrix) -> Result<(Matrix, Matrix)> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if n > m {
        return Err(invalid(format!("qr needs rows >= cols, got {m}x{n}")));
    }
    let mut q = Matrix::zeros(m, n);
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.column(j).into_owned();
        let original = v.norm();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let proj = qi.dot(&v);
                r[(i, j)] += proj;
                v.axpy(-proj, &qi, 1.0);
            }
        }
        let norm = v.norm();
        if norm == 0.0 || norm <= f64::EPSILON * original * 1e-2 {
            return Err(precondition(format!(
                "qr: column {j} is linearly dependent on the previous ones"
            )));
        }
        r[(j, j)] = norm;
        q.set_column(j, &(v / norm));
    }
    Ok((q, r))
}

/// Lexicographically ordered k-subsets of `0..d`.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    (0..d).combinations(k).collect()
}

/// The k-th compound matrix `A^∧k`: entry `(I, J)` is the minor of `A` on
/// rows `I` and columns `J`, with `I`, `J` running over k-subsets in
/// lexicographic order.
pub fn compound(a: &Matrix, k: usize) -> Result<Matrix> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(invalid(format!(
            "compound order {k} out of range 1..={}",
            m.min(n)
        )));
    }
    let rows = k_subsets(m, k);
    let cols = k_subsets(n, k);
    let mut out = Matrix::zeros(rows.len(), cols.len());
    let mut sub = Matrix::zeros(k, k);
    for (ri, rs) in rows.iter().enumerate() {
        for (ci, cs) in cols.iter().enumerate() {
            for (a_r, &r) in rs.iter().enumerate() {
                for (a_c, &c) in cs.iter().enumerate() {
                    sub[(a_r, a_c)] = a[(r, c)];
                }
            }
            out[(ri, ci)] = if k == 1 { sub[(0, 0)] } else { sub.determinant() };
        }
    }
    Ok(out)
}

/// A Haar-distributed orthogonal matrix: the Q factor (positive-diagonal
/// convention) of a matrix with i.i.d. standard normal entries.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix> {
    if d < 2 {
        return Err(invalid(format!("haar_orthogonal needs d >= 2, got {d}")));
    }
    loop {
        let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        // A Gaussian matrix is singular with probability zero; redraw if it happens.
        if let Ok((q, _)) = qr_positive(&g) {
            return Ok(q);
        }
    }
}

/// Rotation of the plane by `theta`.
pub fn rotation2(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// A k-plane in ℝ^d, stored as an orthonormal basis (d×k, one vector per
/// column).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// Wraps an already orthonormal basis.
    pub fn new(basis: Matrix) -> Result<Self> {
        check_finite(&basis)?;
        let (d, k) = basis.shape();
        if k == 0 || k >= d {
            return Err(invalid(format!(
                "subspace dimension {k} must lie in 1..={} for ambient dimension {d}",
                d.saturating_sub(1)
            )));
        }
        let gram = basis.transpose() * &basis;
        let defect = (gram - Matrix::identity(k, k)).amax();
        if defect > ORTHONORMAL_TOL {
            return Err(invalid(format!(
                "basis is not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// The span of the columns of `vectors`, which must be independent.
    pub fn span(vectors: &Matrix) -> Result<Self> {
        let (q, _) = qr_positive(vectors)?;
        Self::new(q)
    }

    /// A Haar-random k-plane.
    pub fn random<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Self> {
        let g = haar_orthogonal(d, rng)?;
        Self::new(g.columns(0, k).into_owned())
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthogonal projection onto the subspace, `B Bᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// The orthogonal complement `V^⊥`.
    pub fn complement(&self) -> Subspace {
        let d = self.ambient_dim();
        let k = self.dim();
        let mut cols: Vec<Vector> = (0..k).map(|j| self.basis.column(j).into_owned()).collect();
        for e in 0..d {
            if cols.len() == d {
                break;
            }
            let mut v = Vector::zeros(d);
            v[e] = 1.0;
            for _pass in 0..2 {
                for c in &cols {
                    let proj = c.dot(&v);
                    v.axpy(-proj, c, 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                cols.push(v / norm);
            }
        }
        let basis = Matrix::from_columns(&cols[k..]);
        Subspace { basis }
    }

    /// Largest principal angle to another subspace of the same dimension.
    pub fn angle_to(&self, other: &Subspace) -> Result<f64> {
        if self.dim() != other.dim() || self.ambient_dim() != other.ambient_dim() {
            return Err(invalid("subspaces differ in dimension"));
        }
        let cross = self.basis.transpose() * &other.basis;
        let sv = singular_values_rect(&cross)?;
        let smallest = sv.last().copied().unwrap_or(0.0).clamp(0.0, 1.0);
        // acos is ill-conditioned near 1; recover the sine from the complement.
        let sin = (1.0 - smallest * smallest).max(0.0).sqrt();
        Ok(sin.atan2(smallest))
    }
}

/// The top `dim V` singular values of `P_V A`; the remaining ones are zero.
pub fn projected_singular_values(v: &Subspace, a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() || a.nrows() != v.ambient_dim() {
        return Err(invalid(format!(
            "matrix is {}x{}, subspace lives in dimension {}",
            a.nrows(),
            a.ncols(),
            v.ambient_dim()
        )));
    }
    let projected = v.projector() * a;
    let mut values = singular_values_rect(&projected)?;
    values.truncate(v.dim());
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn diagonal_and_identity() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![0.25, 0.5]));
        let s = singular_values(&a).unwrap();
        assert_eq!(s.values(), &[0.5, 0.25]);
        assert_eq!(s.norm(), 0.5);
        assert_eq!(s.mininorm(), 0.25);

        let s = singular_values(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        assert!(!s.is_near_singular());
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Matrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(
            singular_values(&a),
            Err(crate::Error::InvalidInput(_))
        ));
    }

    #[test]
    fn flags_singular() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(singular_values(&a).unwrap().is_near_singular());
    }

    #[test]
    fn matches_nalgebra_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=6 {
            for _ in 0..50 {
                let a = random_matrix(d, &mut rng);
                let ours = singular_values(&a).unwrap();
                let mut theirs: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
                theirs.sort_by(|x, y| y.total_cmp(x));
                for (x, y) in ours.values().iter().zip(&theirs) {
                    assert!((x - y).abs() <= 1e-12 * theirs[0], "{x} vs {y}");
                }
                assert!(rel_close(ours.product(), a.determinant().abs(), 1e-10));
            }
        }
    }

    #[test]
    fn graded_matrix_keeps_small_singular_value() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-20]);
        let s = singular_values(&a).unwrap();
        assert!(rel_close(s.mininorm(), 1e-20, 1e-12));
    }

    #[test]
    fn compound_top_power_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(4, &mut rng);
        let c = compound(&a, 4).unwrap();
        assert_eq!(c.shape(), (1, 1));
        assert!(rel_close(c[(0, 0)], a.determinant(), 1e-12));
        assert_eq!(compound(&Matrix::identity(4, 4), 2).unwrap(), Matrix::identity(6, 6));
        assert!(compound(&a, 0).is_err());
        assert!(compound(&a, 5).is_err());
    }

    #[test]
    fn compound_of_first_order_is_the_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_matrix(3, &mut rng);
        assert_eq!(compound(&a, 1).unwrap(), a);
    }

    #[test]
    fn compound_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let a = random_matrix(4, &mut rng);
            let b = random_matrix(4, &mut rng);
            let ca = compound(&a, 2).unwrap();
            let cb = compound(&b, 2).unwrap();
            let cab = compound(&(&a * &b), 2).unwrap();
            let lhs = operator_norm(&(cab - &ca * &cb)).unwrap();
            let rhs = 1e-10 * operator_norm(&ca).unwrap() * operator_norm(&cb).unwrap();
            assert!(lhs <= rhs, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn two_top_singular_values_via_compound() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let a = random_matrix(3, &mut rng);
            let s = singular_values(&a).unwrap();
            let c2 = operator_norm(&compound(&a, 2).unwrap()).unwrap();
            assert!(rel_close(s.values()[0] * s.values()[1], c2, 1e-10));
        }
    }

    #[test]
    fn qr_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let a = random_matrix(5, &mut rng);
        let (q, r) = qr_positive(&a).unwrap();
        assert!((&q * &r - &a).amax() < 1e-13);
        assert!((q.transpose() * &q - Matrix::identity(5, 5)).amax() < 1e-14);
        for i in 0..5 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn haar_is_orthogonal_and_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for d in 2..=6 {
            let g = haar_orthogonal(d, &mut rng).unwrap();
            assert!((g.transpose() * &g - Matrix::identity(d, d)).amax() <= 1e-12);
            let x = Vector::from_fn(d, |i, _| i as f64 - 1.5);
            assert!(((&g * &x).norm() - x.norm()).abs() <= 1e-12);
        }
        let a = haar_orthogonal(4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = haar_orthogonal(4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(haar_orthogonal(1, &mut rng).is_err());
    }

    #[test]
    fn haar_entry_mean_is_zero() {
        // Haar measure is invariant under sign flips, so E[G_11] = 0 and
        // Var[G_11] = 1/d.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples = 10_000;
        let mean: f64 = (0..samples)
            .map(|_| haar_orthogonal(2, &mut rng).unwrap()[(0, 0)])
            .sum::<f64>()
            / samples as f64;
        let sigma = (0.5f64 / samples as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn projected_axis_aligned() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.25]));
        let e1 = Subspace::new(Matrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let e2 = Subspace::new(Matrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert_eq!(projected_singular_values(&e1, &a).unwrap(), vec![0.5]);
        assert_eq!(projected_singular_values(&e2, &a).unwrap(), vec![0.25]);
    }

    #[test]
    fn projected_matches_basis_formulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for d in 2..=5 {
            for k in 1..d {
                let v = Subspace::random(d, k, &mut rng).unwrap();
                let a = random_matrix(d, &mut rng);
                let ours = projected_singular_values(&v, &a).unwrap();
                let oracle = singular_values_rect(&(v.basis().transpose() * &a)).unwrap();
                for (x, y) in ours.iter().zip(&oracle) {
                    assert!((x - y).abs() <= 1e-10 * oracle[0].max(1e-300));
                }
                let full = singular_values_rect(&(v.projector() * &a)).unwrap();
                for tail in &full[k..] {
                    assert!(*tail <= 1e-12 * full[0]);
                }
            }
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let v = Subspace::random(5, 2, &mut rng).unwrap();
        let w = v.complement();
        assert_eq!(w.dim(), 3);
        assert!((v.basis().transpose() * w.basis()).amax() < 1e-12);
        assert!(Subspace::new(w.basis().clone()).is_ok());
    }

    #[test]
    fn subspace_rejects_bad_bases() {
        assert!(Subspace::new(Matrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
        assert!(Subspace::new(Matrix::identity(2, 2)).is_err());
    }
}
