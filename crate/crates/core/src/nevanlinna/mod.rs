//! The holomorphic function attached to a pair, evaluated two ways: as the
//! exponential series `½a(0) + Σ_{λ>0} a(λ) e^{2πiλz}` above a strip, and as
//! the Nevanlinna-type integral against `μ` plus `iQ(z)` everywhere in the
//! upper half-plane.

mod jacobi;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use jacobi::{hermitian_eigenvalues, OFF_DIAGONAL_TOL};

use crate::error::{domain, Error, Result};
use crate::kernels::{eval_ghat, eval_shat, ghat_unchecked, GKernel};
use crate::measures::{integrate_against_with, tail_integral, FSPair, TemperedMeasure};
use crate::quadrature::{integrate, integrate_breakpoints, QuadOptions};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Series terms smaller than this are dropped before summation.
const NEGLIGIBLE: f64 = 1e-22;

/// Default relative cutoff for counting an eigenvalue as negative.
pub const DEFAULT_NEG_TOL: f64 = 1e-9;

/// Minimum separation of points passed to [`nev_matrix`].
pub const MIN_POINT_DISTANCE: f64 = 1e-8;

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// Smallest `k` with `2(k + 1) ≥ degree_bound`.
pub fn min_k(degree_bound: u32) -> usize {
    (degree_bound as usize).div_ceil(2).saturating_sub(1)
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(domain(format!("{z} is not in the upper half-plane")));
    }
    Ok(())
}

/// Positive-frequency terms with `e^{-2πλy}` folded in, at a fixed height.
struct SeriesAtHeight {
    half_a0: Complex64,
    /// `(λ, a(λ) e^{-2πλy})` for `λ > 0`, negligible ones dropped
    terms: Vec<(f64, Complex64)>,
    dropped: f64,
}

impl SeriesAtHeight {
    fn new(pair: &FSPair, y: f64) -> Self {
        let mut terms = Vec::new();
        let mut dropped = 0.0;
        for &(l, v) in pair.a.support() {
            if l > 0.0 {
                let c = v * (-2.0 * PI * l * y).exp();
                if c.norm() < NEGLIGIBLE {
                    dropped += c.norm();
                } else {
                    terms.push((l, c));
                }
            }
        }
        Self {
            half_a0: 0.5 * pair.a.value(0.0),
            terms,
            dropped,
        }
    }

    fn eval(&self, x: f64) -> Complex64 {
        self.half_a0
            + self
                .terms
                .iter()
                .map(|&(l, c)| c * Complex64::from_polar(1.0, 2.0 * PI * l * x))
                .sum::<Complex64>()
    }

    fn largest_frequency(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.0)
    }
}

/// Estimated size of `Σ_{λ > Λ} |a(λ)| e^{-2πλy}` beyond the stored truncation `Λ`.
fn series_tail(pair: &FSPair, y: f64) -> f64 {
    let lam = pair.a.truncation();
    if lam <= 0.0 {
        return 0.0;
    }
    let x = 2.0 * PI * y;
    let shell: f64 = pair
        .a
        .support()
        .iter()
        .filter(|p| p.0 > 0.5 * lam && p.0 <= lam)
        .map(|p| p.1.norm())
        .sum();
    // density of |a| near Λ, extrapolated with linear growth
    let from_shell = (shell / (0.5 * lam)) * (-x * lam).exp() * (1.0 / x + 1.0 / (lam * x * x));
    let c2 = pair.a.growth_constant();
    let from_growth = if x > c2 {
        let m: f64 = pair
            .a
            .support()
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| p.1.norm() * (-c2 * p.0).exp())
            .sum();
        m * (-(x - c2) * lam).exp()
    } else {
        f64::INFINITY
    };
    if shell > 0.0 {
        from_shell.min(from_growth)
    } else {
        from_growth
    }
}

/// `½a(0) + Σ_{λ>0} a(λ) e^{2πiλz}` over the stored support.
pub fn f_series(pair: &FSPair, z: Complex64) -> Result<Estimate> {
    if !(z.im > pair.strip_constant) || !z.re.is_finite() {
        return Err(domain(format!(
            "Im z = {} is not above the strip constant {}",
            z.im, pair.strip_constant
        )));
    }
    let s = SeriesAtHeight::new(pair, z.im);
    let value = s.eval(z.re);
    let magnitude: f64 = s.terms.iter().map(|t| t.1.norm()).sum::<f64>() + s.half_a0.norm();
    let error = series_tail(pair, z.im) + s.dropped + 4.0 * f64::EPSILON * magnitude;
    Ok(Estimate { value, error })
}

/// `(z²+1)^k (1+tz) / (2πi (t-z)(1+t²)^{k+1})`
fn integral_kernel(k: usize, z: Complex64, t: f64) -> Complex64 {
    let zz = (z * z + 1.0).powi(k as i32);
    zz * (1.0 + t * z) / (2.0 * PI * I * (t - z) * (1.0 + t * t).powi(k as i32 + 1))
}

/// The integral against `μ` in the representation of `F`, without `iQ`.
pub fn integral_part(mu: &TemperedMeasure, k: usize, z: Complex64) -> Result<Estimate> {
    check_upper(z)?;
    let radius = mu.truncation_radius();
    let kern = |t: f64| integral_kernel(k, z, t);
    let width = z.im.max(1e-6);
    let marks = [z.re - 10.0 * width, z.re, z.re + 10.0 * width];
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_panels: 50_000,
        max_panel: Some(1.0),
    };
    let inner = integrate_against_with(mu, kern, radius, &marks, &opts).into_result()?;
    let magnitude: f64 = mu
        .atoms_in(-radius, radius)
        .iter()
        .map(|a| (a.weight * kern(a.location)).norm())
        .sum();
    let tail = tail_integral(mu, kern, 1e-13).into_result()?;
    let edge = if radius > 0.0 {
        0.5 * (kern(radius).norm() + kern(-radius).norm())
    } else {
        0.0
    };
    let truncation = mu.tail_estimate(edge, 2.0 * k as f64 + 2.0);
    Ok(Estimate {
        value: inner.value + tail.value,
        error: inner.error + tail.error + truncation + 4.0 * f64::EPSILON * magnitude,
    })
}

/// `Σ q_j z^j`
fn poly_eval(q: &[f64], z: Complex64) -> Complex64 {
    q.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Result of fitting `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QFit {
    /// `q_0, …, q_{2k}`
    pub coeffs: Vec<f64>,
    /// Largest pointwise misfit `|f_series − integral − iQ|` on the sample.
    pub residual: f64,
    /// Largest combined error estimate on the sample.
    pub estimate: f64,
    pub condition: f64,
}

/// Condition numbers above this reject the sample as too clustered.
const MAX_CONDITION: f64 = 1e12;

/// Least-squares fit of the real polynomial `Q` of degree `≤ 2k` so that the
/// two representations agree on `sample`.
pub fn fit_q(pair: &FSPair, k: usize, sample: &[Complex64]) -> Result<QFit> {
    let n = sample.len();
    if n < 4 * k + 4 {
        return Err(domain(format!(
            "fitting Q with k = {k} needs at least {} sample points, got {n}",
            4 * k + 4
        )));
    }
    let cols = 2 * k + 1;
    let mut data = Vec::with_capacity(n);
    let mut estimate: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &z in sample {
        let s = f_series(pair, z)?;
        let g = integral_part(&pair.mu, k, z)?;
        let d = s.value - g.value;
        estimate = estimate.max(s.error + g.error);
        scale = scale.max(s.value.norm()).max(g.value.norm());
        data.push(d);
    }
    // iQ(z) = Σ q_j i z^j: real part −Im z^j, imaginary part Re z^j
    let a = DMatrix::from_fn(2 * n, cols, |r, j| {
        let zj = sample[r / 2].powu(j as u32);
        if r % 2 == 0 {
            -zj.im
        } else {
            zj.re
        }
    });
    let b = DVector::from_fn(2 * n, |r, _| if r % 2 == 0 { data[r / 2].re } else { data[r / 2].im });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let q = svd
        .solve(&b, 0.0)
        .map_err(|e| domain(format!("least squares failed: {e}")))?;
    let coeffs: Vec<f64> = q.iter().copied().collect();
    let residual = sample
        .iter()
        .zip(&data)
        .map(|(&z, &d)| (d - I * poly_eval(&coeffs, z)).norm())
        .fold(0.0, f64::max);
    let estimate = estimate.max(1e-13 * (1.0 + scale));
    if residual > 10.0 * estimate {
        return Err(Error::ResidualFloor { residual, estimate });
    }
    Ok(QFit {
        coeffs,
        residual,
        estimate,
        condition,
    })
}

/// Deterministic fit sample of `4k + 8` points in the trusted strip,
/// scattered so that it does not meet [`validation_grid`].
pub fn fit_sample(k: usize, strip: f64) -> Vec<Complex64> {
    let golden = 0.618_033_988_749_894_9;
    let silver = 0.414_213_562_373_095;
    (0..4 * k + 8)
        .map(|i| {
            let u = (i as f64 * golden + 0.05).fract();
            let v = (i as f64 * silver + 0.13).fract();
            Complex64::new(-1.8 + 3.6 * u, strip + 0.15 + 2.5 * v)
        })
        .collect()
}

/// The 5×5 grid `Re z ∈ {−2,…,2}`, `Im z = c + (4 − c) j/5`, `j = 1..5`.
pub fn validation_grid(strip: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(25);
    for j in 1..=5 {
        for r in -2..=2 {
            out.push(Complex64::new(r as f64, strip + (4.0 - strip) * j as f64 / 5.0));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct HolomorphicModel {
    pair: FSPair,
    k: usize,
    q_poly: Vec<f64>,
    valid_strip: f64,
    fit_residual: f64,
}

impl HolomorphicModel {
    /// Model with an explicit `Q` of degree at most `2k`.
    pub fn with_q(pair: FSPair, k: usize, q_poly: Vec<f64>) -> Result<Self> {
        if q_poly.len() > 2 * k + 1 {
            return Err(domain(format!("Q must have degree <= {}", 2 * k)));
        }
        if 2 * (k + 1) < pair.mu.degree_bound() as usize {
            return Err(domain(format!(
                "k = {k} is too small for a measure of degree {}",
                pair.mu.degree_bound()
            )));
        }
        let valid_strip = pair.strip_constant;
        Ok(Self {
            pair,
            k,
            q_poly,
            valid_strip,
            fit_residual: 0.0,
        })
    }

    /// Fits `Q` on `sample`.
    pub fn fit(pair: FSPair, k: usize, sample: &[Complex64]) -> Result<Self> {
        let fit = fit_q(&pair, k, sample)?;
        let mut model = Self::with_q(pair, k, fit.coeffs)?;
        model.fit_residual = fit.residual;
        Ok(model)
    }

    /// Smallest admissible `k` and `Q` fitted on [`fit_sample`].
    pub fn fitted(pair: FSPair) -> Result<Self> {
        let k = min_k(pair.mu.degree_bound());
        let sample = fit_sample(k, pair.strip_constant);
        Self::fit(pair, k, &sample)
    }

    pub fn pair(&self) -> &FSPair {
        &self.pair
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q_poly(&self) -> &[f64] {
        &self.q_poly
    }

    pub fn valid_strip(&self) -> f64 {
        self.valid_strip
    }

    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    pub fn q_eval(&self, z: Complex64) -> Complex64 {
        poly_eval(&self.q_poly, z)
    }
}

/// `F(z)` from the integral representation; valid on the whole upper half-plane.
pub fn f_integral(model: &HolomorphicModel, z: Complex64) -> Result<Estimate> {
    let g = integral_part(&model.pair.mu, model.k, z)?;
    Ok(Estimate {
        value: g.value + I * model.q_eval(z),
        error: g.error,
    })
}

/// `(1/2T) ∫_{−T}^{T} F(x+iy) e^{−2πiλ(x+iy)} dx` with `F` from the series.
pub fn ef_coeff(pair: &FSPair, lambda: f64, y: f64, t: f64) -> Result<Complex64> {
    if !(y > pair.strip_constant) {
        return Err(domain(format!(
            "y = {y} is not above the strip constant {}",
            pair.strip_constant
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("averaging half-width T must be positive"));
    }
    let s = SeriesAtHeight::new(pair, y);
    let width = 1.0 / (4.0 * (lambda.abs() + s.largest_frequency()));
    let growth = (2.0 * PI * lambda * y).exp();
    let panels = (2.0 * t / width).ceil() as usize;
    // the integrand is as large as this even when the average is small
    let magnitude = growth * (s.half_a0.norm() + s.terms.iter().map(|c| c.1.norm()).sum::<f64>());
    let opts = QuadOptions {
        abs_tol: 1e-12 * 2.0 * t * magnitude.max(1.0),
        rel_tol: 1e-11,
        max_panels: panels + 20_000,
        max_panel: Some(width),
    };
    let r = integrate(
        |x| s.eval(x) * Complex64::from_polar(growth, -2.0 * PI * lambda * x),
        -t,
        t,
        &opts,
    )
    .into_result()?;
    Ok(r.value / (2.0 * t))
}

/// `ℜ ∫_{a+is}^{b+is} (F(z) − iQ(z)) / (z²+1)^{k+1} dz`, which tends to
/// `½ ∫_a^b dμ(t)/(1+t²)^{k+1}` as `s → 0`.
pub fn recover_measure(model: &HolomorphicModel, a: f64, b: f64, s: f64) -> Result<f64> {
    if !(a < b) {
        return Err(domain("recovery interval needs a < b"));
    }
    if !(s > 0.0 && s <= 0.1) {
        return Err(domain("contour height s must lie in (0, 0.1]"));
    }
    let mu = &model.pair.mu;
    for end in [a, b] {
        if let Some(at) = mu.atoms_in(end - 1e-3, end + 1e-3).first() {
            return Err(domain(format!(
                "endpoint {end} lies within 1e-3 of the atom at {}",
                at.location
            )));
        }
    }
    let k = model.k;
    let mut pts = vec![a, b];
    for at in mu.atoms_in(a, b) {
        for d in [-10.0 * s, -s, 0.0, s, 10.0 * s] {
            let p = at.location + d;
            if p > a && p < b {
                pts.push(p);
            }
        }
    }
    let failure = std::cell::Cell::new(None);
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_panels: 50_000,
        max_panel: Some(0.05),
    };
    let r = integrate_breakpoints(
        |x| {
            let z = Complex64::new(x, s);
            match integral_part(mu, k, z) {
                Ok(g) => Complex64::new((g.value / (z * z + 1.0).powi(k as i32 + 1)).re, 0.0),
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        &pts,
        &opts,
    );
    if let Some(msg) = failure.take() {
        return Err(domain(format!("integral representation failed on the contour: {msg}")));
    }
    Ok(r.into_result()?.value.re)
}

/// Contour heights used by [`recover_measure_extrapolated`].
pub const RECOVERY_HEIGHTS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub heights: Vec<f64>,
    pub values: Vec<f64>,
    /// Two-level Richardson extrapolation to `s = 0`.
    pub extrapolated: f64,
}

/// [`recover_measure`] at each of [`RECOVERY_HEIGHTS`], extrapolated to
/// `s = 0` assuming an error expansion in powers of `s`.
pub fn recover_measure_extrapolated(model: &HolomorphicModel, a: f64, b: f64) -> Result<Recovery> {
    let values = RECOVERY_HEIGHTS
        .iter()
        .map(|&s| recover_measure(model, a, b, s))
        .collect::<Result<Vec<_>>>()?;
    let r1 = (10.0 * values[1] - values[0]) / 9.0;
    let r2 = (10.0 * values[2] - values[1]) / 9.0;
    let extrapolated = (100.0 * r2 - r1) / 99.0;
    Ok(Recovery {
        heights: RECOVERY_HEIGHTS.to_vec(),
        values,
        extrapolated,
    })
}

/// The Hermitian matrix `i(F(z_n) + conj F(z_m)) / (z_n − conj z_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NevMatrix {
    pub points: Vec<Complex64>,
    pub entries: DMatrix<Complex64>,
}

impl NevMatrix {
    /// Builds the matrix from values `F(z_n)` already computed.
    pub fn from_values(points: &[Complex64], values: &[Complex64]) -> Result<Self> {
        if points.len() != values.len() {
            return Err(domain("one value of F is needed per point"));
        }
        for (i, &p) in points.iter().enumerate() {
            check_upper(p)?;
            for &q in &points[..i] {
                if (p - q).norm() < MIN_POINT_DISTANCE {
                    return Err(domain(format!(
                        "points {q} and {p} are closer than {MIN_POINT_DISTANCE:e}"
                    )));
                }
            }
        }
        let n = points.len();
        let entries = DMatrix::from_fn(n, n, |r, c| {
            I * (values[r] + values[c].conj()) / (points[r] - points[c].conj())
        });
        Ok(Self {
            points: points.to_vec(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|m_ij − conj m_ji|` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(self.entries[(i, j)].norm());
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, indices: &[usize]) -> Self {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let entries = DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            self.entries[(indices[r], indices[c])]
        });
        Self { points, entries }
    }
}

pub fn nev_matrix(model: &HolomorphicModel, points: &[Complex64]) -> Result<NevMatrix> {
    let values = points
        .iter()
        .map(|&z| f_integral(model, z).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    NevMatrix::from_values(points, &values)
}

/// Number of eigenvalues below `−tol_rel · max|eigenvalue|`.
pub fn neg_index(m: &NevMatrix, tol_rel: f64) -> Result<usize> {
    if !(tol_rel > 0.0) {
        return Err(domain("tol_rel must be positive"));
    }
    let eig = m.eigenvalues();
    let norm = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
    Ok(eig.iter().filter(|&&e| e < -tol_rel * norm).count())
}

/// `n` seeded points with `Re z ∈ [−3, 3]` and `Im z ∈ [0.05, 3]`, pairwise
/// separated by at least [`MIN_POINT_DISTANCE`].
pub fn random_points(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Complex64> = Vec::with_capacity(n);
    while out.len() < n {
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(0.05..3.0));
        if out.iter().all(|p| (p - z).norm() >= MIN_POINT_DISTANCE) {
            out.push(z);
        }
    }
    out
}

/// `Σ_{|λ| ≤ T(k+1)} a(λ) G_k(w, z, λ) Ŝ_k(λ/T)`.
pub fn bridge_sum(pair: &FSPair, k: usize, w: Complex64, z: Complex64, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(domain("bridge cutoff T must be positive"));
    }
    let kernel = GKernel::new(k)?;
    let reach = t * (k + 1) as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for &(l, v) in pair.a.support() {
        if l.abs() > reach {
            continue;
        }
        let taper = eval_shat(k, l / t);
        if taper == 0.0 {
            continue;
        }
        total += v * kernel.eval(w, z, l)? * taper;
    }
    if pair.a.support().is_empty() {
        kernel.eval(w, z, 0.0)?;
    }
    Ok(total)
}

/// `∫ Ĝ_k(w, z, t) dμ(t) = (1/2π^{k+1}i) ∫ dμ(t) / ((t−z)(t−w̄)(1+t²)^k)`.
pub fn bridge_rhs(pair: &FSPair, k: usize, w: Complex64, z: Complex64) -> Result<Estimate> {
    eval_ghat(k, w, z, 0.0)?;
    let mu = &pair.mu;
    let radius = mu.truncation_radius();
    let f = |t: f64| ghat_unchecked(k, w, z, t);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_panels: 50_000,
        max_panel: Some(1.0),
    };
    let marks = [z.re, w.re];
    let inner = integrate_against_with(mu, f, radius, &marks, &opts).into_result()?;
    let tail = tail_integral(mu, f, 1e-14).into_result()?;
    let edge = if radius > 0.0 {
        0.5 * (f(radius).norm() + f(-radius).norm())
    } else {
        0.0
    };
    let truncation = mu.tail_estimate(edge, 2.0 * k as f64 + 2.0);
    Ok(Estimate {
        value: inner.value + tail.value,
        error: inner.error + tail.error + truncation,
    })
}

/// Half-width of the `x` window sampled by [`ap_proxy`].
pub const AP_WINDOW: f64 = 32.0;
/// Number of `x` samples used by [`ap_proxy`].
pub const AP_SAMPLES: usize = 1024;

/// For each `N`, the largest deviation on the `x` grid between the series
/// truncated to its first `N` positive frequencies and the full stored series.
pub fn ap_proxy(pair: &FSPair, y: f64, trunc_list: &[usize]) -> Result<Vec<f64>> {
    if !(y > pair.strip_constant) {
        return Err(domain(format!(
            "y = {y} is not above the strip constant {}",
            pair.strip_constant
        )));
    }
    let terms: Vec<(f64, Complex64)> = pair
        .a
        .support()
        .iter()
        .filter(|p| p.0 > 0.0)
        .map(|&(l, v)| (l, v * (-2.0 * PI * l * y).exp()))
        .collect();
    let grid: Vec<f64> = (0..AP_SAMPLES)
        .map(|j| -AP_WINDOW + 2.0 * AP_WINDOW * j as f64 / AP_SAMPLES as f64)
        .collect();
    Ok(trunc_list
        .iter()
        .map(|&n| {
            let rest = &terms[n.min(terms.len())..];
            grid.iter()
                .map(|&x| {
                    rest.iter()
                        .map(|&(l, c)| c * Complex64::from_polar(1.0, 2.0 * PI * l * x))
                        .sum::<Complex64>()
                        .norm()
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_meyer, make_poisson};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k_from_degree() {
        assert_eq!(min_k(0), 0);
        assert_eq!(min_k(2), 0);
        assert_eq!(min_k(3), 1);
        assert_eq!(min_k(4), 1);
        assert_eq!(min_k(5), 2);
    }

    #[test]
    fn poisson_series_at_i() {
        let p = make_poisson(64.0, 64.0).unwrap();
        let v = f_series(&p, I).unwrap();
        assert!((v.value - c(0.5 / (PI).tanh(), 0.0)).norm() < 1e-15);
        assert!(v.error < 1e-15);
        assert!(f_series(&p, c(0.0, 0.1)).is_err());
    }

    #[test]
    fn zero_pair_is_zero() {
        let model = HolomorphicModel::with_q(FSPair::zero(), 0, vec![]).unwrap();
        assert_eq!(f_integral(&model, c(0.3, 0.2)).unwrap().value, c(0.0, 0.0));
        let fit = fit_q(&FSPair::zero(), 0, &fit_sample(0, 0.1)).unwrap();
        assert_eq!(fit.coeffs, vec![0.0]);
        assert_eq!(ap_proxy(&FSPair::zero(), 1.0, &[0, 4]).unwrap(), vec![0.0, 0.0]);
        let b = bridge_sum(&FSPair::zero(), 0, c(0.0, 2.0), c(0.0, 2.0), 8.0).unwrap();
        assert_eq!(b, c(0.0, 0.0));
    }

    #[test]
    fn poisson_integral_is_cotangent() {
        let p = make_poisson(256.0, 256.0).unwrap();
        let model = HolomorphicModel::with_q(p, 0, vec![]).unwrap();
        for z in [c(0.3, 0.4), c(-1.2, 0.05), c(2.0, 3.0)] {
            let oracle = 0.5 * I * (PI * z).cos() / (PI * z).sin();
            let v = f_integral(&model, z).unwrap();
            assert!((v.value - oracle).norm() < 1e-7, "{z}: {} vs {oracle}", v.value);
            assert!((v.value - oracle).norm() < v.error * 10.0 + 1e-12);
        }
    }

    #[test]
    fn meyer_integral_reflects() {
        let m = make_meyer(400).unwrap();
        for z in [c(0.3, 0.2), c(-1.1, 1.5)] {
            let a = integral_part(&m.mu, 1, z).unwrap().value;
            let b = integral_part(&m.mu, 1, -z.conj()).unwrap().value;
            // odd μ: F(−z̄) = −conj F(z)
            assert!((b + a.conj()).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn single_point_matrix() {
        let p = make_poisson(256.0, 256.0).unwrap();
        let model = HolomorphicModel::with_q(p, 0, vec![]).unwrap();
        let y = 0.7;
        let m = nev_matrix(&model, &[c(0.0, y)]).unwrap();
        let oracle = 1.0 / (PI * y).tanh() / (2.0 * y);
        assert!((m.entries[(0, 0)].re - oracle).abs() < 1e-6);
        assert_eq!(neg_index(&m, DEFAULT_NEG_TOL).unwrap(), 0);
    }

    #[test]
    fn constant_imaginary_f_gives_zero_matrix() {
        let pts = random_points(5, 3);
        let vals = vec![c(0.0, 1.7); 5];
        let m = NevMatrix::from_values(&pts, &vals).unwrap();
        assert!(m.entries.iter().all(|v| v.norm() == 0.0));
        assert_eq!(neg_index(&m, DEFAULT_NEG_TOL).unwrap(), 0);
    }

    #[test]
    fn rejects_near_duplicate_points() {
        let pts = [c(0.0, 1.0), c(1e-9, 1.0)];
        assert!(NevMatrix::from_values(&pts, &[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn poisson_ap_tail_bound() {
        let p = make_poisson(64.0, 64.0).unwrap();
        let n_list = [1, 2, 4];
        let v = ap_proxy(&p, 1.0, &n_list).unwrap();
        for (n, s) in n_list.iter().zip(v) {
            let bound = (-2.0 * PI * (*n as f64 + 1.0)).exp() / (1.0 - (-2.0 * PI).exp());
            assert!(s <= bound * (1.0 + 1e-12), "N={n}: {s} > {bound}");
        }
    }

    /// `(z²+r²)^m (r²+tz) / ((r²+t²)^{m+1}(t−z))` expanded into a Cauchy
    /// kernel, a geometric sum and a remainder.
    fn expansion_residual(m: u32, r: f64, t: f64, z: Complex64) -> f64 {
        let r2 = r * r;
        let q = (z * z + r2) / (r2 + t * t);
        let lhs = (z * z + r2).powu(m) * (r2 + t * z) / ((r2 + t * t).powi(m as i32 + 1) * (t - z));
        let geometric: Complex64 = (0..m).map(|j| q.powu(j)).sum();
        let rhs = 1.0 / (t - z) - (t + z) / (r2 + t * t) * geometric
            - t * (r2 + z * z).powu(m) / (r2 + t * t).powi(m as i32 + 1);
        (lhs - rhs).norm() / (1.0 + lhs.norm())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn kernel_expansion_identity(
            m in 0u32..=4,
            wide in any::<bool>(),
            t in -5.0f64..5.0,
            x in -3.0f64..3.0,
            y in 0.05f64..3.0,
        ) {
            let r = if wide { 2.5 } else { 1.0 };
            prop_assert!(expansion_residual(m, r, t, c(x, y)) < 1e-11);
        }
    }
}
