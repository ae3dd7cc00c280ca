//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands.
//!
//! The driver bisects the panel with the largest error estimate until the
//! summed estimate falls below `max(abs_tol, rel_tol * |I|)` or the panel
//! budget is exhausted. Oscillatory integrands are handled by pre-splitting
//! the interval into panels no wider than `max_panel`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of panels held at once.
    pub max_panels: usize,
    /// Initial panels are no wider than this.
    pub max_panel: Option<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 20_000,
            max_panel: None,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn max_panel(mut self, width: f64) -> Self {
        self.max_panel = Some(width);
        self
    }

    pub fn max_panels(mut self, n: usize) -> Self {
        self.max_panels = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            converged: true,
            evaluations: 0,
        }
    }

    /// Turns a non-converged result into an error carrying the best estimate.
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Quadrature {
                estimate_re: self.value.re,
                estimate_im: self.value.im,
                error: self.error,
            })
        }
    }

    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// Returns the rescaled error and the rounding floor it was clamped to.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> (f64, f64) {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    let mut floor = 0.0;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        floor = 50.0 * f64::EPSILON * res_abs;
        scaled = scaled.max(floor);
    }
    (scaled, floor)
}

/// One 15-point Kronrod rule on `[a, b]`, returning the value and the
/// QUADPACK-style error estimate against the embedded 7-point Gauss rule.
pub fn gk15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let (v, e, _) = gk15_with_floor(f, a, b);
    (v, e)
}

/// [`gk15`] plus the part of the error estimate that is pure rounding.
fn gk15_with_floor<F>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64)
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv1 = [Complex64::new(0.0, 0.0); 7];
    let mut fv2 = [Complex64::new(0.0, 0.0); 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += (f1 + f2) * WG[j];
        res_k += (f1 + f2) * WGK[jtw];
        res_abs += WGK[jtw] * (f1.norm() + f2.norm());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += (f1 + f2) * WGK[jtwm1];
        res_abs += WGK[jtwm1] * (f1.norm() + f2.norm());
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let h = half.abs();
    let err = ((res_k - res_g) * half).norm();
    let (err, floor) = rescale_error(err, res_abs * h, res_asc * h);
    (res_k * half, err, floor)
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    /// Share of `error` that bisection cannot remove.
    floor: f64,
}

impl Panel {
    fn reducible(&self) -> f64 {
        self.error - self.floor
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.reducible().total_cmp(&other.reducible())
    }
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Never fails: a result that missed the tolerance has `converged == false`
/// and still carries the best available estimate. Once the error that
/// bisection can still remove is no larger than the rounding floor, a
/// tolerance below that floor is met as far as double precision allows and
/// reported as converged, with the larger error estimate.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return QuadResult::zero();
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let initial = match opts.max_panel {
        Some(w) if w > 0.0 => ((hi - lo) / w).ceil().max(1.0) as usize,
        _ => 1,
    };
    let max_panels = opts.max_panels.max(initial + 1);

    let mut heap = BinaryHeap::with_capacity(initial * 2);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut total_floor = 0.0;
    let width = (hi - lo) / initial as f64;
    for i in 0..initial {
        let pa = lo + width * i as f64;
        let pb = if i + 1 == initial { hi } else { lo + width * (i + 1) as f64 };
        let (value, error, floor) = gk15_with_floor(&f, pa, pb);
        total += value;
        total_err += error;
        total_floor += floor;
        heap.push(Panel {
            a: pa,
            b: pb,
            value,
            error,
            floor,
        });
    }
    let mut evaluations = 15 * initial;

    let target = |total: Complex64| opts.abs_tol.max(opts.rel_tol * total.norm());
    let at_rounding = |err: f64, floor: f64| err - floor <= floor;
    while total_err > target(total) && !at_rounding(total_err, total_floor) && heap.len() < max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot bisect further in floating point.
            heap.push(Panel {
                error: 0.0,
                floor: 0.0,
                ..worst
            });
            total_err -= worst.error;
            total_floor -= worst.floor;
            continue;
        }
        let (v1, e1, f1) = gk15_with_floor(&f, worst.a, mid);
        let (v2, e2, f2) = gk15_with_floor(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_floor += f1 + f2 - worst.floor;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            floor: f1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            floor: f2,
        });
    }

    // Re-sum to shed the drift accumulated by the incremental updates.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: Complex64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    let floor: f64 = panels.iter().map(|p| p.floor).sum();
    QuadResult {
        value: value * sign,
        error,
        converged: error <= target(value) || at_rounding(error, floor),
        evaluations,
    }
}

/// Integrates `f` over the union of consecutive intervals delimited by
/// `points`, so that kinks and discontinuities sit on panel boundaries.
pub fn integrate_breakpoints<F>(f: F, points: &[f64], opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let mut pts: Vec<f64> = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let n = pts.len().saturating_sub(1).max(1) as f64;
    let sub = QuadOptions {
        abs_tol: opts.abs_tol / n,
        ..*opts
    };
    pts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], &sub))
        .fold(QuadResult::zero(), QuadResult::combine)
}

/// Integrates `f` over `[a, ∞)` using the substitution `t = a + (1 - u) / u`.
pub fn integrate_to_infinity<F>(f: F, a: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let mapped = |u: f64| {
        if u <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let t = a + (1.0 - u) / u;
        f(t) / (u * u)
    };
    integrate(mapped, 0.0, 1.0, &QuadOptions { max_panel: None, ..*opts })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// found by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre integration of `f` over `[a, b]`.
pub fn gauss_fixed<F>(f: F, a: f64, b: f64, n: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| f(c + h * xi) * wi)
        .sum::<Complex64>()
        * h
}
