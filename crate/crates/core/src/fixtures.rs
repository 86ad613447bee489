//! Reference systems with known closed-form behaviour, plus random
//! generators for property tests and ensemble studies.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ifs::AffineIfs;
use crate::linalg::{operator_norm, rotation2, Matrix, Vector};

fn build(matrices: Vec<Matrix>, translations: Vec<Vec<f64>>) -> AffineIfs {
    AffineIfs::new(
        matrices,
        translations.into_iter().map(Vector::from_vec).collect(),
        None,
    )
    .expect("fixture is valid")
}

fn diag2(a: f64, b: f64) -> Matrix {
    Matrix::from_diagonal(&Vector::from_vec(vec![a, b]))
}

/// Three unit vectors at mutual distance `√3`, embedded in the first two
/// coordinates of ℝ^d.
pub fn equilateral_translations(d: usize) -> Vec<Vector> {
    (0..3)
        .map(|k| {
            let angle = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
            let mut v = Vector::zeros(d);
            v[0] = angle.cos();
            v[1] = angle.sin();
            v
        })
        .collect()
}

/// Equilateral unit-circle translations with `A_i = a·I` in the plane.
pub fn equilateral_fixture(a: f64) -> AffineIfs {
    equilateral_fixture_in(2, a)
}

/// The same geometry in ℝ³.
pub fn equilateral_fixture_3d(a: f64) -> AffineIfs {
    equilateral_fixture_in(3, a)
}

fn equilateral_fixture_in(d: usize, a: f64) -> AffineIfs {
    AffineIfs::new(
        vec![Matrix::identity(d, d) * a; 3],
        equilateral_translations(d),
        None,
    )
    .expect("fixture is valid")
}

/// Equilateral geometry with non-conformal matrices of norm exactly 0.3:
/// `A_i = 0.3 · R(θ_i) diag(1, σ_i) R(φ_i)`.
pub fn f1() -> AffineIfs {
    let params = [(0.3, 0.55, 0.2), (1.9, 0.7, -0.5), (4.1, 0.45, 0.9)];
    let matrices = params
        .iter()
        .map(|&(theta, sigma, phi)| rotation2(theta) * diag2(1.0, sigma) * rotation2(phi) * 0.3)
        .collect();
    AffineIfs::new(matrices, equilateral_translations(2), None).expect("fixture is valid")
}

/// Middle-thirds Cantor set on the line.
pub fn cantor() -> AffineIfs {
    let a = Matrix::from_element(1, 1, 1.0 / 3.0);
    build(vec![a.clone(), a], vec![vec![0.0], vec![2.0 / 3.0]])
}

/// Four half-scale copies tiling the unit square.
pub fn filled_square() -> AffineIfs {
    let a = Matrix::identity(2, 2) * 0.5;
    build(
        vec![a; 4],
        vec![
            vec![0.0, 0.0],
            vec![0.5, 0.0],
            vec![0.0, 0.5],
            vec![0.5, 0.5],
        ],
    )
}

/// Sierpinski triangle: three half-scale similarities.
pub fn sierpinski() -> AffineIfs {
    let a = Matrix::identity(2, 2) * 0.5;
    build(
        vec![a; 3],
        vec![
            vec![0.0, 0.0],
            vec![0.5, 0.0],
            vec![0.25, 3f64.sqrt() / 4.0],
        ],
    )
}

/// Two half-scale maps of the plane collapsing onto the segment
/// `[0, 1] × {0}`.
pub fn segment() -> AffineIfs {
    let a = diag2(0.5, 0.5);
    build(vec![a.clone(), a], vec![vec![0.0, 0.0], vec![0.5, 0.0]])
}

/// Three copies of `diag(1/2, 1/4)`.
pub fn diagonal_fixture() -> AffineIfs {
    let a = diag2(0.5, 0.25);
    build(
        vec![a; 3],
        vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.75]],
    )
}

/// Two copies of `diag(1/2, 1/4)`.
pub fn diagonal_pair() -> AffineIfs {
    let a = diag2(0.5, 0.25);
    build(vec![a; 2], vec![vec![0.0, 0.0], vec![0.5, 0.75]])
}

/// Three similarities of ratio 1/3 with distinct rotation parts.
pub fn conformal_fixture() -> AffineIfs {
    let matrices = [0.0, 2.0, 4.5]
        .iter()
        .map(|&t| rotation2(t) / 3.0)
        .collect();
    build(
        matrices,
        vec![vec![0.0, 0.0], vec![2.0 / 3.0, 0.0], vec![0.0, 2.0 / 3.0]],
    )
}

/// `diag(0.5, 0.2)` and `diag(0.6, 0.1)`: a dominated splitting.
pub fn dominated_diagonal() -> AffineIfs {
    build(
        vec![diag2(0.5, 0.2), diag2(0.6, 0.1)],
        vec![vec![0.0, 0.0], vec![0.4, 0.8]],
    )
}

/// `0.5·R(0.7)` and `0.4·R(2.1)`.
pub fn two_rotations() -> AffineIfs {
    build(
        vec![rotation2(0.7) * 0.5, rotation2(2.1) * 0.4],
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
    )
}

/// `0.5·R(1)` together with `diag(0.5, 0.45)`.
pub fn rotation_mixed() -> AffineIfs {
    build(
        vec![rotation2(1.0) * 0.5, diag2(0.5, 0.45)],
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
    )
}

/// `0.5·R(π/2)` together with `diag(0.7, 0.2)`: products alternate between
/// the two axes, which breaks quasi-multiplicativity of `φ¹`.
pub fn rotation_projection() -> AffineIfs {
    build(
        vec![rotation2(PI / 2.0) * 0.5, diag2(0.7, 0.2)],
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
    )
}

/// `diag(0.5, 0.2)` with `0.4·R(π/4)`.
pub fn pinch_twist() -> AffineIfs {
    build(
        vec![diag2(0.5, 0.2), rotation2(PI / 4.0) * 0.4],
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
    )
}

/// `n` pure rotations scaled by 0.5.
pub fn scaled_rotations(n: usize) -> AffineIfs {
    let matrices = (0..n).map(|k| rotation2(0.5 + 1.3 * k as f64) * 0.5).collect();
    let translations = (0..n).map(|k| vec![k as f64, 0.0]).collect();
    build(matrices, translations)
}

/// A matrix with i.i.d. standard normal entries rescaled to operator norm
/// `norm`.
pub fn gaussian_matrix<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> Matrix {
    loop {
        let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = crate::linalg::singular_values(&g).expect("finite");
        // Keep the condition number moderate so the sample is a useful test.
        if s.mininorm() > 1e-3 * s.norm() {
            let n = operator_norm(&g).expect("finite");
            return g * (norm / n);
        }
    }
}

/// `n_maps` Gaussian matrices with norms drawn from `norm_range` and
/// translations with i.i.d. normal entries.
pub fn random_contractive<R: Rng + ?Sized>(
    d: usize,
    n_maps: usize,
    norm_range: (f64, f64),
    rng: &mut R,
) -> AffineIfs {
    let matrices = (0..n_maps)
        .map(|_| {
            let norm = rng.random_range(norm_range.0..=norm_range.1);
            gaussian_matrix(d, norm, rng)
        })
        .collect();
    let translations = (0..n_maps)
        .map(|_| Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    AffineIfs::new(matrices, translations, None).expect("random fixture is valid")
}

/// A random member of the planar condition set: equilateral translations and
/// Gaussian matrices rescaled to norm `a`, with `a` below the boundary
/// `√6/(4+√6)`.
pub fn random_member<R: Rng + ?Sized>(a: f64, rng: &mut R) -> AffineIfs {
    let matrices = (0..3).map(|_| gaussian_matrix(2, a, rng)).collect();
    AffineIfs::new(matrices, equilateral_translations(2), None).expect("random fixture is valid")
}
