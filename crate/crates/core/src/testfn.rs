//! Smooth test functions and numerical verification of a pair.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::measures::FSPair;
use crate::quadrature::{integrate, QuadOptions};

/// Unit profile before dilation and translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(-1/(1-u²))` on `|u| < 1`.
    Bump,
    /// Equal to 1 on `|u| ≤ inner`, 0 beyond `outer`, smooth in between.
    Plateau { inner: f64, outer: f64 },
    /// `exp(-πu²)`; not compactly supported.
    GaussianDiag,
}

/// `φ(x) = profile((x - shift) / scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    #[serde(flatten)]
    pub profile: Profile,
    pub scale: f64,
    pub shift: f64,
}

/// Gaussian profiles are integrated over `|u| ≤ GAUSS_CUTOFF`; beyond it the
/// profile is below `1e-57`.
const GAUSS_CUTOFF: f64 = 6.5;

impl TestFunctionSpec {
    pub fn bump(scale: f64, shift: f64) -> Result<Self> {
        Self::new(Profile::Bump, scale, shift)
    }

    pub fn plateau(inner: f64, outer: f64, scale: f64, shift: f64) -> Result<Self> {
        Self::new(Profile::Plateau { inner, outer }, scale, shift)
    }

    pub fn gaussian(scale: f64, shift: f64) -> Result<Self> {
        Self::new(Profile::GaussianDiag, scale, shift)
    }

    pub fn new(profile: Profile, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !shift.is_finite() {
            return Err(domain("test function needs a positive scale and finite shift"));
        }
        if let Profile::Plateau { inner, outer } = profile {
            if !(0.0 <= inner && inner < outer && outer <= 1.0) {
                return Err(domain("plateau radii must satisfy 0 <= inner < outer <= 1"));
            }
        }
        Ok(Self {
            profile,
            scale,
            shift,
        })
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.profile, Profile::GaussianDiag)
    }

    /// Closed interval outside which `φ` vanishes (or is negligible).
    pub fn support(&self) -> (f64, f64) {
        let r = self.unit_radius() * self.scale;
        (self.shift - r, self.shift + r)
    }

    fn unit_radius(&self) -> f64 {
        match self.profile {
            Profile::Bump => 1.0,
            Profile::Plateau { outer, .. } => outer,
            Profile::GaussianDiag => GAUSS_CUTOFF,
        }
    }

    pub fn label(&self) -> String {
        let p = match self.profile {
            Profile::Bump => "bump".to_owned(),
            Profile::Plateau { inner, outer } => format!("plateau({inner},{outer})"),
            Profile::GaussianDiag => "gaussian".to_owned(),
        };
        format!("{p}[scale={}, shift={}]", self.scale, self.shift)
    }
}

fn smooth_zero(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth step from 0 at `s ≤ 0` to 1 at `s ≥ 1`.
fn smooth_step(s: f64) -> f64 {
    let a = smooth_zero(s);
    let b = smooth_zero(1.0 - s);
    a / (a + b)
}

fn unit_profile(profile: Profile, u: f64) -> f64 {
    let r = u.abs();
    match profile {
        Profile::Bump => {
            if r < 1.0 {
                (-1.0 / (1.0 - r * r)).exp()
            } else {
                0.0
            }
        }
        Profile::Plateau { inner, outer } => {
            if r <= inner {
                1.0
            } else if r >= outer {
                0.0
            } else {
                smooth_step((outer - r) / (outer - inner))
            }
        }
        Profile::GaussianDiag => (-PI * u * u).exp(),
    }
}

pub fn eval_testfn(spec: &TestFunctionSpec, x: f64) -> f64 {
    unit_profile(spec.profile, (x - spec.shift) / spec.scale)
}

/// `2∫_0^R profile(u) cos(2πuη) du`, the transform of an even unit profile.
/// Returns the value, an error estimate and whether every piece converged.
fn unit_transform(profile: Profile, radius: f64, eta: f64, tol: f64) -> (f64, f64, bool) {
    let width = 1.0 / (4.0 * eta.abs() + 1.0);
    // below this the Kronrod error estimate is pure rounding
    let floor = 1e-15 * radius;
    let opts = QuadOptions {
        abs_tol: (0.5 * tol).max(floor),
        rel_tol: 0.0,
        max_panels: 200_000,
        max_panel: Some(width),
    };
    let mut pts = vec![0.0, radius];
    if let Profile::Plateau { inner, outer } = profile {
        pts = vec![0.0, inner, outer];
    }
    pts.dedup();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = integrate(
            |u| Complex64::new(unit_profile(profile, u) * (2.0 * PI * u * eta).cos(), 0.0),
            w[0],
            w[1],
            &opts,
        );
        value += r.value.re;
        error += r.error;
        converged &= r.converged;
    }
    (2.0 * value, 2.0 * error, converged)
}

/// `φ̂(ξ) = scale · e^{-2πi·shift·ξ} · p̂(scale·ξ)`, with the profile transform
/// computed by adaptive quadrature to absolute accuracy `tol`.
pub fn ft_testfn(spec: &TestFunctionSpec, xi: f64, tol: f64) -> Result<Complex64> {
    let (v, e, ok) = ft_with_error(spec, xi, tol);
    if ok {
        Ok(v)
    } else {
        Err(Error::Quadrature {
            estimate_re: v.re,
            estimate_im: v.im,
            error: e,
        })
    }
}

fn ft_with_error(spec: &TestFunctionSpec, xi: f64, tol: f64) -> (Complex64, f64, bool) {
    let a = spec.scale;
    let (p, err, ok) = unit_transform(spec.profile, spec.unit_radius(), a * xi, tol / a);
    let phase = if spec.shift == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, -2.0 * PI * spec.shift * xi)
    };
    (phase * (a * p), a * err, ok)
}

mod complex_as_object {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        let v = ReIm::deserialize(d)?;
        Ok(Complex64::new(v.re, v.im))
    }
}

/// Outcome of comparing both sides of the summation formula.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub pair_name: String,
    pub testfn: TestFunctionSpec,
    /// `∫ φ̂ dμ` over the stored truncation.
    pub lhs: Complex64,
    /// `Σ a(λ) φ(λ)` over the stored support.
    pub rhs: Complex64,
    pub mu_truncation: f64,
    pub a_truncation: f64,
    pub quadrature_tol: f64,
    /// Wall clock of the run; callers wanting reproducible output zero it.
    pub runtime_ms: u64,
    /// Quadrature error plus the estimated contribution of `μ` beyond its truncation.
    pub lhs_error: f64,
    /// The support of `φ` reaches past the stored part of `a`.
    pub rhs_incomplete: bool,
    /// Some quadrature hit its panel budget; `lhs` is the best estimate.
    pub quadrature_failed: bool,
}

impl VerificationReport {
    pub fn abs_residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    /// Any reason the residual is not a pure quadrature effect.
    pub fn degraded(&self) -> bool {
        self.rhs_incomplete || self.quadrature_failed || !self.lhs_error.is_finite() || self.lhs_error > self.quadrature_tol
    }
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    pair_name: String,
    testfn: TestFunctionSpec,
    #[serde(with = "complex_as_object")]
    lhs: Complex64,
    #[serde(with = "complex_as_object")]
    rhs: Complex64,
    abs_residual: f64,
    mu_truncation: f64,
    a_truncation: f64,
    quadrature_tol: f64,
    runtime_ms: u64,
}

impl Serialize for VerificationReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportJson {
            pair_name: self.pair_name.clone(),
            testfn: self.testfn,
            lhs: self.lhs,
            rhs: self.rhs,
            abs_residual: self.abs_residual(),
            mu_truncation: self.mu_truncation,
            a_truncation: self.a_truncation,
            quadrature_tol: self.quadrature_tol,
            runtime_ms: self.runtime_ms,
        }
        .serialize(s)
    }
}

/// The stored residual is ignored; it is recomputed from `lhs` and `rhs`.
impl<'de> Deserialize<'de> for VerificationReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ReportJson::deserialize(d)?;
        Ok(Self {
            pair_name: r.pair_name,
            testfn: r.testfn,
            lhs: r.lhs,
            rhs: r.rhs,
            mu_truncation: r.mu_truncation,
            a_truncation: r.a_truncation,
            quadrature_tol: r.quadrature_tol,
            runtime_ms: r.runtime_ms,
            lhs_error: f64::NAN,
            rhs_incomplete: false,
            quadrature_failed: false,
        })
    }
}

/// Samples used to bound `|φ̂|` just inside the truncation radius.
const TAIL_SAMPLES: usize = 8;

/// Evaluates both sides of the summation formula for `spec`.
///
/// Atoms of `μ` are summed exactly with `φ̂` computed by adaptive quadrature;
/// a density part is integrated over the same radius. The contribution of
/// `μ` beyond its truncation enters `lhs_error` as an estimate, not a bound.
/// A quadrature that runs out of panels does not abort the run: the best
/// estimate is kept and `quadrature_failed` is set.
pub fn verify_pair(pair: &FSPair, spec: &TestFunctionSpec, tol: f64) -> Result<VerificationReport> {
    if !(tol > 0.0) {
        return Err(domain("quadrature tolerance must be positive"));
    }
    if !spec.is_compact() && !pair.gaussian_admissible {
        return Err(domain(format!(
            "pair `{}` is not known to converge absolutely against Gaussians",
            pair.name
        )));
    }
    let start = Instant::now();
    let mu = &pair.mu;
    let radius = mu.truncation_radius();
    let atoms = mu.atoms_in(-radius, radius);
    let mass: f64 = atoms.iter().map(|a| a.weight.norm()).sum::<f64>().max(1.0);
    let each = tol / (4.0 * mass);

    let mut lhs = Complex64::new(0.0, 0.0);
    let mut lhs_error = 0.0;
    let mut failed = false;
    for a in atoms {
        let (v, e, ok) = ft_with_error(spec, a.location, each);
        lhs += a.weight * v;
        lhs_error += a.weight.norm() * e;
        failed |= !ok;
    }
    if let Some(d) = mu.density() {
        let opts = QuadOptions {
            abs_tol: 0.25 * tol,
            rel_tol: 0.0,
            max_panels: 50_000,
            max_panel: Some(1.0 / (4.0 * spec.scale + 1.0)),
        };
        let inner_tol = 0.25 * tol / (1.0 + 2.0 * radius * d.scale.abs() * radius.max(1.0));
        let inner_failed = std::cell::Cell::new(false);
        let r = integrate(
            |t| {
                let (v, _, ok) = ft_with_error(spec, t, inner_tol);
                if !ok {
                    inner_failed.set(true);
                }
                v * d.eval(t)
            },
            -radius,
            radius,
            &opts,
        );
        lhs += r.value;
        lhs_error += r.error;
        failed |= inner_failed.get() || !r.converged;
    }

    // |φ̂| decays faster than any power; extrapolate with t^{-(deg + 2)}
    if radius > 0.0 {
        let decay = mu.degree_bound() as f64 + 2.0;
        let mut peak: f64 = 0.0;
        for i in 0..TAIL_SAMPLES {
            let t = radius * (0.5 + 0.5 * (i + 1) as f64 / TAIL_SAMPLES as f64);
            let v = ft_with_error(spec, t, each).0.norm() * (t / radius).powf(decay);
            peak = peak.max(v);
        }
        lhs_error += mu.tail_estimate(peak, decay);
    }

    let rhs: Complex64 = pair
        .a
        .support()
        .iter()
        .map(|&(l, v)| v * eval_testfn(spec, l))
        .sum();
    let (lo, hi) = spec.support();
    let a_trunc = pair.a.truncation();
    let rhs_incomplete = lo < -a_trunc || hi > a_trunc;

    Ok(VerificationReport {
        pair_name: pair.name.clone(),
        testfn: *spec,
        lhs,
        rhs,
        mu_truncation: radius,
        a_truncation: a_trunc,
        quadrature_tol: tol,
        runtime_ms: start.elapsed().as_millis() as u64,
        lhs_error,
        rhs_incomplete,
        quadrature_failed: failed,
    })
}
