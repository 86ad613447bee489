//! Point clouds on attractors and self-affine measures, box counting,
//! correlation dimension and simple exports.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::ifs::AffineIfs;
use crate::numeric::linear_fit;
use crate::rng::{par_batches, stream};
use crate::symbolic::check_budget;

/// Default cap on the number of points of an exhaustive cloud.
pub const EXHAUSTIVE_POINT_LIMIT: u128 = 1 << 24;
/// Minimum cloud size for a box-counting fit.
pub const MIN_BOX_POINTS: usize = 1000;
/// Minimum cloud size for a correlation fit.
pub const MIN_CORRELATION_POINTS: usize = 10_000;
/// Correlation sums use at most this many points.
pub const CORRELATION_SUBSAMPLE: usize = 20_000;
/// Radii with fewer close pairs are left out of the correlation fit.
pub const MIN_PAIRS: u64 = 50;
/// Minimum number of scales inside a fit window.
pub const MIN_FIT_SCALES: usize = 4;

const RANDOM_BATCH: usize = 4096;
const NN_QUERIES: usize = 2000;
const MAX_KEY_DIM: usize = 6;

/// Points in ℝ^d stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    d: usize,
    coords: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(d: usize, coords: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if d == 0 || coords.len() % d != 0 {
            return Err(invalid("coordinate buffer does not match the dimension"));
        }
        if let Some(w) = &weights {
            if w.len() != coords.len() / d {
                return Err(invalid("one weight per point required"));
            }
        }
        Ok(Self { d, coords, weights })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Largest Euclidean norm of a point.
    pub fn max_norm(&self) -> f64 {
        self.points()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Weighted (or plain) mean of the points.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        let n = self.len() as f64;
        for (i, p) in self.points().enumerate() {
            let w = self.weights.as_ref().map_or(1.0 / n, |w| w[i]);
            for (a, x) in m.iter_mut().zip(p) {
                *a += w * x;
            }
        }
        m
    }

    /// One row per point, `x_1,…,x_d[,weight]`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut line = String::new();
        for (i, p) in self.points().enumerate() {
            line.clear();
            for (j, x) in p.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{x:.16e}"));
            }
            if let Some(w) = &self.weights {
                line.push_str(&format!(",{:.16e}", w[i]));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }

    /// Binary PPM (P6) of the first two coordinates: white background, black
    /// points, first row at the top. Both axes share one scale.
    pub fn write_ppm<W: Write>(&self, mut out: W, width: usize, height: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(invalid("image size must be positive"));
        }
        let mut pixels = vec![255u8; width * height * 3];
        if !self.is_empty() {
            let coord = |p: &[f64], k: usize| if k < self.d { p[k] } else { 0.0 };
            let (mut xmin, mut xmax, mut ymin, mut ymax) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in self.points() {
                xmin = xmin.min(coord(p, 0));
                xmax = xmax.max(coord(p, 0));
                ymin = ymin.min(coord(p, 1));
                ymax = ymax.max(coord(p, 1));
            }
            let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
            let scale = (width.min(height) as f64 - 1.0).max(1.0) / span;
            let x_off = 0.5 * (width as f64 - 1.0 - (xmax - xmin) * scale);
            let y_off = 0.5 * (height as f64 - 1.0 - (ymax - ymin) * scale);
            for p in self.points() {
                let col = ((coord(p, 0) - xmin) * scale + x_off).round();
                let row = ((ymax - coord(p, 1)) * scale + y_off).round();
                if col >= 0.0 && row >= 0.0 && (col as usize) < width && (row as usize) < height {
                    let idx = (row as usize * width + col as usize) * 3;
                    pixels[idx..idx + 3].fill(0);
                }
            }
        }
        let io_err = |e: io::Error| invalid(format!("write failed: {e}"));
        write!(out, "P6\n{width} {height}\n255\n").map_err(io_err)?;
        out.write_all(&pixels).map_err(io_err)?;
        out.flush().map_err(io_err)
    }
}

/// One point `f_w(x_1)` per word `w` of length `depth`, `x_1` the fixed
/// point of the first map, in lexicographic word order. When the system
/// carries weights each point gets the mass of its cylinder.
pub fn generate_exhaustive(ifs: &AffineIfs, depth: usize) -> Result<PointCloud> {
    generate_exhaustive_with_limit(ifs, depth, EXHAUSTIVE_POINT_LIMIT)
}

pub fn generate_exhaustive_with_limit(ifs: &AffineIfs, depth: usize, limit: u128) -> Result<PointCloud> {
    ifs.require_contractive()?;
    check_budget("exhaustive point cloud", ifs.len(), depth, limit)?;
    let d = ifs.dim();
    let flat = ifs.flat_maps();
    let mut coords: Vec<f64> = ifs.fixed_point(0)?.iter().copied().collect();
    let mut masses = ifs.weights().map(|_| vec![1.0]);
    for _ in 0..depth {
        let prev = coords;
        let next: Vec<Vec<f64>> = (0..ifs.len())
            .into_par_iter()
            .map(|i| {
                let mut out = vec![0.0; prev.len()];
                for (src, dst) in prev.chunks(d).zip(out.chunks_mut(d)) {
                    flat.apply(i, src, dst);
                }
                out
            })
            .collect();
        coords = next.concat();
        if let (Some(m), Some(p)) = (masses.as_mut(), ifs.weights()) {
            *m = p.iter().flat_map(|pi| m.iter().map(move |x| pi * x)).collect();
        }
    }
    PointCloud::new(d, coords, masses)
}

/// `count` i.i.d. points `π(w)` with `w` drawn from the Bernoulli measure of
/// the system weights (uniform when absent), truncated at `depth`. Batch
/// `b` of 4096 points uses stream `b` of `seed`.
pub fn generate_random(ifs: &AffineIfs, count: usize, depth: usize, seed: u64) -> Result<PointCloud> {
    ifs.require_contractive()?;
    if count == 0 {
        return Err(invalid("point count must be positive"));
    }
    let d = ifs.dim();
    let flat = ifs.flat_maps();
    let p = ifs.weights_or_uniform();
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for x in &p {
        acc += x;
        cdf.push(acc);
    }
    let n = p.len();
    let batches = par_batches(count, RANDOM_BATCH, |b, len| {
        let mut rng = stream(seed, b);
        let mut out = vec![0.0; len * d];
        let mut tmp = vec![0.0; d];
        for dst in out.chunks_mut(d) {
            // Symbols are i.i.d., so drawing them innermost-first is the same law.
            for _ in 0..depth {
                let u: f64 = rng.random();
                let s = cdf.partition_point(|&c| c <= u).min(n - 1);
                flat.apply(s, dst, &mut tmp);
                dst.copy_from_slice(&tmp);
            }
        }
        out
    });
    PointCloud::new(d, batches.concat(), None)
}

/// Which scales enter a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// Keep scales between the sampling resolution and `radius / 4`.
    Auto { radius: f64 },
    /// Keep scales inside `[min, max]`.
    Range { min: f64, max: f64 },
    All,
}

/// `radius · 2^{-m}` for `m = m_min..=m_max`.
pub fn dyadic_scales(radius: f64, m_min: i32, m_max: i32) -> Vec<f64> {
    (m_min..=m_max).map(|m| radius * 2f64.powi(-m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountCurve {
    /// Decreasing scales.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// Half-open index range of the scales used in the fit.
    pub fit_window: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Smallest scale admitted by the sampling resolution.
    pub resolution: f64,
}

fn box_key(p: &[f64], delta: f64, offset: f64) -> [i64; MAX_KEY_DIM] {
    let mut k = [0i64; MAX_KEY_DIM];
    for (slot, x) in k.iter_mut().zip(p) {
        *slot = ((x - offset) / delta).floor() as i64;
    }
    k
}

fn check_key_dim(d: usize) -> Result<()> {
    if d > MAX_KEY_DIM {
        Err(Error::UnsupportedDimension {
            dim: d,
            reason: format!("box counting supports d <= {MAX_KEY_DIM}"),
        })
    } else {
        Ok(())
    }
}

/// Number of grid boxes `Π [offset + k δ, offset + (k+1) δ)` meeting the
/// cloud.
pub fn count_boxes(cloud: &PointCloud, delta: f64, offset: f64) -> Result<u64> {
    check_key_dim(cloud.dim())?;
    if !(delta > 0.0) {
        return Err(invalid("box size must be positive"));
    }
    let mut keys: Vec<[i64; MAX_KEY_DIM]> = cloud
        .coords
        .par_chunks(cloud.d)
        .map(|p| box_key(p, delta, offset))
        .collect();
    keys.par_sort_unstable();
    keys.dedup();
    Ok(keys.len() as u64)
}

/// Median distance from a point to its nearest neighbour, over an evenly
/// strided subset of query points.
pub fn median_nn_spacing(cloud: &PointCloud) -> Result<f64> {
    check_key_dim(cloud.dim())?;
    let n = cloud.len();
    if n < 2 {
        return Ok(0.0);
    }
    let d = cloud.d;
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for p in cloud.points() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if extent == 0.0 {
        return Ok(0.0);
    }
    let cell = extent / (n as f64).sqrt().max(1.0);
    let mut grid: Vec<([i64; MAX_KEY_DIM], u32)> = cloud
        .coords
        .par_chunks(d)
        .enumerate()
        .map(|(i, p)| (box_key(p, cell, 0.0), i as u32))
        .collect();
    grid.par_sort_unstable();
    let max_ring = (extent / cell).ceil() as i64 + 1;
    let queries: Vec<usize> = (0..NN_QUERIES.min(n)).map(|q| q * n / NN_QUERIES.min(n)).collect();
    let mut dists: Vec<f64> = queries
        .par_iter()
        .map(|&qi| {
            let q = cloud.point(qi);
            let center = box_key(q, cell, 0.0);
            let mut best = f64::INFINITY;
            let mut ring = 0i64;
            loop {
                visit_ring(d, ring, &mut |offs| {
                    let mut key = center;
                    for k in 0..d {
                        key[k] += offs[k];
                    }
                    let start = grid.partition_point(|e| e.0 < key);
                    for e in grid[start..].iter().take_while(|e| e.0 == key) {
                        if e.1 as usize != qi {
                            let p = cloud.point(e.1 as usize);
                            let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                            best = best.min(dist);
                        }
                    }
                });
                if best <= ring as f64 * cell || ring > max_ring {
                    break;
                }
                ring += 1;
            }
            best
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    Ok(dists[dists.len() / 2])
}

/// Calls `f` with every integer offset whose max-norm equals `ring`.
fn visit_ring(d: usize, ring: i64, f: &mut dyn FnMut(&[i64; MAX_KEY_DIM])) {
    let mut offs = [0i64; MAX_KEY_DIM];
    for k in 0..d {
        offs[k] = -ring;
    }
    loop {
        if offs[..d].iter().any(|o| o.abs() == ring) {
            f(&offs);
        }
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            offs[k] += 1;
            if offs[k] <= ring {
                break;
            }
            offs[k] = -ring;
            k += 1;
        }
    }
}

fn window_indices(scales: &[f64], lo: f64, hi: f64) -> Option<(usize, usize)> {
    let idx: Vec<usize> = (0..scales.len())
        .filter(|&i| scales[i] >= lo && scales[i] <= hi)
        .collect();
    Some((*idx.first()?, idx.last()? + 1))
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("scales must be positive and finite"));
    }
    if scales.windows(2).any(|w| w[0] <= w[1]) {
        return Err(invalid("scales must be strictly decreasing"));
    }
    Ok(())
}

/// Box counts at the given decreasing scales and the least-squares slope of
/// `log N(δ)` against `log(1/δ)` over the window.
pub fn box_dimension(cloud: &PointCloud, scales: &[f64], policy: WindowPolicy) -> Result<BoxCountCurve> {
    if cloud.len() < MIN_BOX_POINTS {
        return Err(invalid(format!(
            "box counting needs at least {MIN_BOX_POINTS} points, got {}",
            cloud.len()
        )));
    }
    check_scales(scales)?;
    let counts: Vec<u64> = scales
        .iter()
        .map(|&s| count_boxes(cloud, s, 0.0))
        .collect::<Result<_>>()?;
    let (resolution, lo, hi) = match policy {
        WindowPolicy::Auto { radius } => {
            let r = 10.0 * median_nn_spacing(cloud)?;
            (r, r, radius / 4.0)
        }
        WindowPolicy::Range { min, max } => (0.0, min, max),
        WindowPolicy::All => (0.0, 0.0, f64::INFINITY),
    };
    let window = window_indices(scales, lo, hi)
        .filter(|(a, b)| b - a >= MIN_FIT_SCALES)
        .ok_or_else(|| {
            Error::DegenerateFit(format!(
                "fewer than {MIN_FIT_SCALES} scales inside [{lo:e}, {hi:e}]"
            ))
        })?;
    let x: Vec<f64> = scales[window.0..window.1].iter().map(|s| -s.ln()).collect();
    let y: Vec<f64> = counts[window.0..window.1].iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r2) =
        linear_fit(&x, &y).ok_or_else(|| Error::DegenerateFit("fit failed".into()))?;
    Ok(BoxCountCurve {
        scales: scales.to_vec(),
        counts,
        fit_window: window,
        slope,
        intercept,
        r2,
        resolution,
    })
}

/// Correlation sum curve; the slope is a proxy for the dimension of the
/// sampled measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub radii: Vec<f64>,
    /// Fraction of point pairs closer than each radius.
    pub fraction: Vec<f64>,
    pub pairs_within: Vec<u64>,
    pub fit_window: (usize, usize),
    pub slope: f64,
    pub r2: f64,
    pub points_used: usize,
    /// Always true: the slope estimates the correlation dimension only.
    pub proxy: bool,
}

/// `count` log-spaced radii from `radius` down to `radius · 10^{-decades}`.
pub fn log_radii(radius: f64, count: usize, decades: f64) -> Vec<f64> {
    (0..count)
        .map(|i| radius * 10f64.powf(-decades * i as f64 / (count - 1).max(1) as f64))
        .collect()
}

fn strided_subsample(cloud: &PointCloud, max: usize) -> Vec<&[f64]> {
    let n = cloud.len();
    if n <= max {
        return cloud.points().collect();
    }
    (0..max).map(|i| cloud.point(i * n / max)).collect()
}

/// `C(r)` over all pairs of an evenly strided subsample of at most
/// 20 000 points, fitted on `log C` against `log r` over radii that have at
/// least 50 close pairs and lie inside the window.
pub fn correlation_dimension(cloud: &PointCloud, radii: &[f64], policy: WindowPolicy) -> Result<CorrelationCurve> {
    if cloud.len() < MIN_CORRELATION_POINTS {
        return Err(invalid(format!(
            "correlation dimension needs at least {MIN_CORRELATION_POINTS} points, got {}",
            cloud.len()
        )));
    }
    check_scales(radii)?;
    let pts = strided_subsample(cloud, CORRELATION_SUBSAMPLE);
    let m = pts.len();
    let mut ascending: Vec<f64> = radii.to_vec();
    ascending.reverse();
    let squared: Vec<f64> = ascending.iter().map(|r| r * r).collect();
    let hist = (0..m)
        .into_par_iter()
        .fold(
            || vec![0u64; squared.len() + 1],
            |mut h, i| {
                for j in (i + 1)..m {
                    let d2: f64 = pts[i].iter().zip(pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    h[squared.partition_point(|&r2| r2 <= d2)] += 1;
                }
                h
            },
        )
        .reduce(
            || vec![0u64; squared.len() + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    // hist[k] counts pairs with distance in [r_{k-1}, r_k) for ascending radii.
    let mut within_asc = Vec::with_capacity(squared.len());
    let mut acc = 0u64;
    for h in &hist[..squared.len()] {
        acc += h;
        within_asc.push(acc);
    }
    within_asc.reverse();
    let total = (m as u64) * (m as u64 - 1) / 2;
    let fraction: Vec<f64> = within_asc.iter().map(|&c| c as f64 / total as f64).collect();
    let (lo, hi) = match policy {
        WindowPolicy::Auto { radius } => (0.0, radius / 4.0),
        WindowPolicy::Range { min, max } => (min, max),
        WindowPolicy::All => (0.0, f64::INFINITY),
    };
    let usable: Vec<usize> = (0..radii.len())
        .filter(|&i| radii[i] >= lo && radii[i] <= hi && within_asc[i] >= MIN_PAIRS)
        .collect();
    if usable.len() < MIN_FIT_SCALES {
        return Err(Error::DegenerateFit(format!(
            "fewer than {MIN_FIT_SCALES} radii with at least {MIN_PAIRS} pairs"
        )));
    }
    let window = (usable[0], usable[usable.len() - 1] + 1);
    let x: Vec<f64> = usable.iter().map(|&i| radii[i].ln()).collect();
    let y: Vec<f64> = usable.iter().map(|&i| fraction[i].ln()).collect();
    let (slope, _, r2) = linear_fit(&x, &y).ok_or_else(|| Error::DegenerateFit("fit failed".into()))?;
    Ok(CorrelationCurve {
        radii: radii.to_vec(),
        fraction,
        pairs_within: within_asc,
        fit_window: window,
        slope,
        r2,
        points_used: m,
        proxy: true,
    })
}

/// Local dimension estimates `log(μB(x, r_hi)/μB(x, r_lo)) / log(r_hi/r_lo)`
/// at `queries` points drawn from the cloud, with the cloud itself as the
/// empirical measure.
pub fn local_dimensions(cloud: &PointCloud, r_lo: f64, r_hi: f64, queries: usize, seed: u64) -> Result<Vec<f64>> {
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(invalid("need 0 < r_lo < r_hi"));
    }
    if cloud.is_empty() || queries == 0 {
        return Err(invalid("need points and queries"));
    }
    let mut rng = stream(seed, 0);
    let idx: Vec<usize> = (0..queries).map(|_| rng.random_range(0..cloud.len())).collect();
    let (lo2, hi2) = (r_lo * r_lo, r_hi * r_hi);
    let ratio = (r_hi / r_lo).ln();
    Ok(idx
        .par_iter()
        .map(|&q| {
            let x = cloud.point(q);
            let (mut a, mut b) = (0u64, 0u64);
            for p in cloud.points() {
                let d2: f64 = p.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
                if d2 < lo2 {
                    a += 1;
                }
                if d2 < hi2 {
                    b += 1;
                }
            }
            (b as f64 / a.max(1) as f64).ln() / ratio
        })
        .collect())
}

/// Counts of `values` in `bins` equal-width bins over `[lo, hi]`.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    if bins == 0 || !(hi > lo) {
        return h;
    }
    for &v in values {
        if v >= lo && v <= hi {
            let k = (((v - lo) / (hi - lo)) * bins as f64) as usize;
            h[k.min(bins - 1)] += 1;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn exhaustive_depth_zero_and_counts() {
        let ifs = fixtures::f1();
        let c0 = generate_exhaustive(&ifs, 0).unwrap();
        assert_eq!(c0.len(), 1);
        let fix = ifs.fixed_point(0).unwrap();
        assert!((c0.point(0)[0] - fix[0]).abs() < 1e-15);
        for depth in 1..6 {
            assert_eq!(generate_exhaustive(&ifs, depth).unwrap().len(), 3usize.pow(depth as u32));
        }
        assert!(matches!(
            generate_exhaustive_with_limit(&ifs, 10, 1000),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn cantor_points() {
        let cloud = generate_exhaustive(&fixtures::cantor(), 5).unwrap();
        assert_eq!(cloud.len(), 32);
        let mut xs: Vec<f64> = cloud.points().map(|p| p[0]).collect();
        assert!(xs.iter().all(|&x| (-1e-15..=1.0 + 1e-15).contains(&x)));
        xs.sort_by(f64::total_cmp);
        let min_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!((min_gap - 3f64.powi(-5) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_refinement() {
        let ifs = fixtures::f1();
        let r = ifs.radius().unwrap();
        for depth in 1..5 {
            let coarse = generate_exhaustive(&ifs, depth).unwrap();
            let fine = generate_exhaustive(&ifs, depth + 1).unwrap();
            let bound = ifs.norm().powi(depth as i32) * r * 2.0;
            for p in fine.points() {
                let best = coarse
                    .points()
                    .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= bound);
            }
        }
    }

    #[test]
    fn random_points_in_ball_and_deterministic() {
        let ifs = fixtures::f1();
        let r = ifs.radius().unwrap();
        let a = generate_random(&ifs, 5000, 30, 3).unwrap();
        assert!(a.max_norm() <= r * (1.0 + 1e-12));
        let b = generate_random(&ifs, 5000, 30, 3).unwrap();
        assert_eq!(a, b);
        let one = generate_random(&ifs, 1, 30, 3).unwrap();
        assert_eq!(one.point(0), a.point(0));
        assert!(generate_random(&ifs, 0, 30, 3).is_err());
    }

    #[test]
    fn random_mean_matches_exhaustive() {
        let ifs = fixtures::cantor().with_weights(Some(vec![0.3, 0.7])).unwrap();
        let exact = generate_exhaustive(&ifs, 16).unwrap();
        let mu = exact.mean()[0];
        let n = 100_000;
        let sample = generate_random(&ifs, n, 40, 8).unwrap();
        let m = sample.mean()[0];
        let var = sample.points().map(|p| (p[0] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - mu).abs() <= 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn single_point_has_zero_slope() {
        let cloud = PointCloud::new(2, [0.3, 0.4].repeat(2000), None).unwrap();
        let curve = box_dimension(&cloud, &dyadic_scales(1.0, 2, 10), WindowPolicy::Auto { radius: 1.0 }).unwrap();
        assert_eq!(curve.slope, 0.0);
        assert!(curve.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn box_count_bounds_and_monotonicity() {
        let ifs = fixtures::f1();
        let r = ifs.radius().unwrap();
        let cloud = generate_random(&ifs, 20_000, 30, 1).unwrap();
        let scales = dyadic_scales(r, 0, 12);
        let curve = box_dimension(&cloud, &scales, WindowPolicy::All).unwrap();
        for w in curve.counts.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (s, &c) in scales.iter().zip(&curve.counts) {
            assert!(c >= 1 && (c as f64) <= (1.0 + 2.0 * r / s).powi(2));
        }
    }

    #[test]
    fn anchor_shift_changes_counts_boundedly() {
        let cloud = generate_random(&fixtures::sierpinski(), 20_000, 30, 2).unwrap();
        for m in 1..8 {
            let delta = 2f64.powi(-m);
            let a = count_boxes(&cloud, delta, 0.0).unwrap() as f64;
            let b = count_boxes(&cloud, delta, delta / 2.0).unwrap() as f64;
            assert!(a / b <= 4.0 && b / a <= 4.0);
        }
    }

    #[test]
    fn filled_square_slope() {
        let cloud = generate_exhaustive(&fixtures::filled_square(), 9).unwrap();
        let curve = box_dimension(&cloud, &dyadic_scales(1.0, 0, 12), WindowPolicy::Auto { radius: 2f64.sqrt() }).unwrap();
        assert!((curve.slope - 2.0).abs() <= 0.05, "{curve:?}");
    }

    #[test]
    fn median_spacing_on_grid() {
        let cloud = generate_exhaustive(&fixtures::filled_square(), 5).unwrap();
        assert!((median_nn_spacing(&cloud).unwrap() - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fit_reported() {
        let cloud = generate_exhaustive(&fixtures::filled_square(), 5).unwrap();
        assert!(matches!(
            box_dimension(&cloud, &dyadic_scales(1.0, 0, 3), WindowPolicy::Auto { radius: 1.0 }),
            Err(Error::DegenerateFit(_))
        ));
        assert!(box_dimension(&cloud, &[0.1, 0.2], WindowPolicy::All).is_err());
    }

    #[test]
    fn correlation_segment_and_point() {
        let seg = generate_random(&fixtures::segment(), 20_000, 40, 4).unwrap();
        let c = correlation_dimension(&seg, &log_radii(1.0, 30, 4.0), WindowPolicy::Auto { radius: 1.0 }).unwrap();
        assert!((c.slope - 1.0).abs() <= 0.05, "{}", c.slope);
        assert!(c.proxy);
        let point = PointCloud::new(2, [0.1, 0.2].repeat(10_000), None).unwrap();
        let c = correlation_dimension(&point, &log_radii(1.0, 10, 3.0), WindowPolicy::All).unwrap();
        assert_eq!(c.slope, 0.0);
    }

    #[test]
    fn correlation_sierpinski() {
        let ifs = fixtures::sierpinski();
        let r = ifs.radius().unwrap();
        let cloud = generate_random(&ifs, 20_000, 40, 5).unwrap();
        let c = correlation_dimension(&cloud, &log_radii(r, 30, 4.0), WindowPolicy::Auto { radius: r }).unwrap();
        assert!((c.slope - 3f64.ln() / 2f64.ln()).abs() <= 0.1, "{}", c.slope);
    }

    #[test]
    fn local_dimension_of_segment() {
        let seg = generate_random(&fixtures::segment(), 20_000, 40, 6).unwrap();
        let dims = local_dimensions(&seg, 1e-3, 1e-2, 200, 1).unwrap();
        let mean = dims.iter().sum::<f64>() / dims.len() as f64;
        assert!((mean - 1.0).abs() < 0.1);
        let h = histogram(&dims, 0.0, 2.0, 10);
        assert_eq!(h.iter().sum::<u64>(), 200);
    }

    #[test]
    fn csv_and_ppm_output() {
        let cloud = PointCloud::new(2, vec![0.1, 0.2, 1.0 / 3.0, -0.5], Some(vec![0.25, 0.75])).unwrap();
        let mut buf = Vec::new();
        cloud.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        let fields: Vec<f64> = rows[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![1.0 / 3.0, -0.5, 0.75]);

        let mut img = Vec::new();
        cloud.write_ppm(&mut img, 8, 4).unwrap();
        let header = b"P6\n8 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        let pixels = &img[header.len()..];
        assert_eq!(pixels.len(), 8 * 4 * 3);
        assert!(pixels.iter().any(|&b| b == 0));
        assert!(pixels.iter().any(|&b| b == 255));
    }
}
