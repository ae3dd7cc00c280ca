//! Auxiliary kernels: the polynomials `r_k`, the convolution powers `A_k` of
//! `e^{-2π|x|}`, the kernels `G_k = G_0 * A_k` with their Fourier transforms,
//! and the sinc-power taper `S_k` whose transform is a centred B-spline.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};

/// Largest supported `k` for [`r_poly`].
pub const R_POLY_MAX: usize = 16;

/// Radius of the excluded ball around `i` for the closed form of `G_k`.
pub const EPS_SING: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `r_k(X) = Σ coeffs[j] X^j`, the `q^k` coefficient of
/// `e^{(1-√(1-q))X} / √(1-q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RPolynomial {
    pub k: usize,
    coeffs: Vec<f64>,
}

impl RPolynomial {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Coefficients `b_{k,j}` of `p_k(x) = π^{-k} r_k(2πx) = Σ b_{k,j} x^j`.
    pub fn shifted_coeffs(&self) -> Vec<f64> {
        let scale = PI.powi(-(self.k as i32));
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| scale * (2.0 * PI).powi(j as i32) * c)
            .collect()
    }
}

fn series_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Extracts `r_k` from its generating series by truncated composition in `q`.
pub fn r_poly(k: usize) -> Result<RPolynomial> {
    if k > R_POLY_MAX {
        return Err(domain(format!("r_poly supports k <= {R_POLY_MAX}, got {k}")));
    }
    // (1-q)^{-1/2} = Σ C(2j,j)/4^j q^j and 1 - √(1-q) = Σ_{j≥1} C(2j,j)/((2j-1) 4^j) q^j
    let mut inv_sqrt = vec![1.0; k + 1];
    for j in 1..=k {
        inv_sqrt[j] = inv_sqrt[j - 1] * (2 * j - 1) as f64 / (2 * j) as f64;
    }
    let mut shift = vec![0.0; k + 1];
    for j in 1..=k {
        shift[j] = inv_sqrt[j] / (2 * j - 1) as f64;
    }

    let mut coeffs = vec![0.0; k + 1];
    // power = shift^m / m! * (1-q)^{-1/2}
    let mut power = inv_sqrt.clone();
    let mut factorial = 1.0;
    for (m, c) in coeffs.iter_mut().enumerate() {
        if m > 0 {
            factorial *= m as f64;
            power = series_mul(&power, &shift, k);
        }
        *c = power[k] / factorial;
    }
    Ok(RPolynomial { k, coeffs })
}

/// `A_k(x) = e^{-2π|x|} π^{1-k} r_{k-1}(2π|x|)`, the k-fold self-convolution
/// of `e^{-2π|x|}`.
pub fn eval_a(k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("A_k is defined for k >= 1"));
    }
    let r = r_poly(k - 1)?;
    let ax = x.abs();
    Ok((-2.0 * PI * ax).exp() * PI.powi(1 - k as i32) * r.eval(2.0 * PI * ax))
}

/// Centred cardinal B-spline of order `n`: the n-fold convolution of the
/// indicator of `[-1/2, 1/2]`, evaluated by the two-term order recurrence.
pub fn cardinal_bspline(n: usize, t: f64) -> f64 {
    assert!(n >= 1);
    let half = 0.5 * n as f64;
    if t.abs() >= half {
        return 0.0;
    }
    // level m holds M_m at t - (n-m)/2 + i, i = 0..=n-m
    let mut level: Vec<f64> = (0..n)
        .map(|i| {
            let x = t - 0.5 * (n - 1) as f64 + i as f64;
            match x.abs().partial_cmp(&0.5) {
                Some(std::cmp::Ordering::Less) => 1.0,
                Some(std::cmp::Ordering::Equal) => 0.5,
                _ => 0.0,
            }
        })
        .collect();
    for m in 2..=n {
        let hm = 0.5 * m as f64;
        level = (0..=n - m)
            .map(|i| {
                let x = t - 0.5 * (n - m) as f64 + i as f64;
                ((hm + x) * level[i + 1] + (hm - x) * level[i]) / (m - 1) as f64
            })
            .collect();
    }
    level[0]
}

/// `v_k`, the normalisation making `Ŝ_k(0) = 1`.
pub fn taper_norm(k: usize) -> f64 {
    cardinal_bspline(2 * (k + 1), 0.0)
}

/// `S_k(x) = (sin πx / πx)^{2(k+1)} / v_k`.
pub fn eval_s(k: usize, x: f64) -> f64 {
    let sinc = if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    };
    sinc.powi(2 * (k as i32 + 1)) / taper_norm(k)
}

/// `Ŝ_k(t)`, supported on `[-(k+1), k+1]` with `Ŝ_k(0) = 1`.
pub fn eval_shat(k: usize, t: f64) -> f64 {
    let n = 2 * (k + 1);
    cardinal_bspline(n, t) / cardinal_bspline(n, 0.0)
}

fn check_upper(name: &str, z: Complex64) -> Result<()> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {z} is not in the upper half-plane")))
    }
}

/// A validated pair of upper-half-plane arguments together with a kernel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub w: Complex64,
    pub z: Complex64,
    pub value: Complex64,
}

impl KernelPoint {
    pub fn new(w: Complex64, z: Complex64, value: Complex64) -> Result<Self> {
        check_upper("w", w)?;
        check_upper("z", z)?;
        Ok(Self { w, z, value })
    }

    /// `G_k(w, z, λ)` packaged with its arguments.
    pub fn g(k: usize, w: Complex64, z: Complex64, lambda: f64) -> Result<Self> {
        let value = eval_g(k, w, z, lambda)?;
        Self::new(w, z, value)
    }
}

/// `Ĝ_k(w, z, t) = 1 / (2π^{k+1} i (t - z)(t - w̄)(1 + t²)^k)`.
pub fn eval_ghat(k: usize, w: Complex64, z: Complex64, t: f64) -> Result<Complex64> {
    check_upper("w", w)?;
    check_upper("z", z)?;
    Ok(ghat_unchecked(k, w, z, t))
}

pub(crate) fn ghat_unchecked(k: usize, w: Complex64, z: Complex64, t: f64) -> Complex64 {
    let denom = (t - z) * (t - w.conj()) * (1.0 + t * t).powi(k as i32);
    1.0 / (2.0 * PI.powi(k as i32 + 1) * I * denom)
}

/// Precomputed closed-form data for `G_k`, reusable across many `λ`.
#[derive(Debug, Clone)]
pub struct GKernel {
    k: usize,
    /// `j! b_{k-1,j} / (2π)^{j+1}`
    weights: Vec<f64>,
}

impl GKernel {
    pub fn new(k: usize) -> Result<Self> {
        let weights = if k == 0 {
            Vec::new()
        } else {
            let b = r_poly(k - 1)?.shifted_coeffs();
            let mut fact = 1.0;
            b.iter()
                .enumerate()
                .map(|(j, &bj)| {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    fact * bj / (2.0 * PI).powi(j as i32 + 1)
                })
                .collect()
        };
        Ok(Self { k, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `Σ_j j! b_j/(2π)^{j+1} u^{-(j+1)} Σ_{l≤j} (2πλ)^l u^l / l!`
    fn partial_exp_sum(&self, u: Complex64, lambda: f64) -> Complex64 {
        let x = 2.0 * PI * lambda;
        let inv = 1.0 / u;
        let mut total = Complex64::new(0.0, 0.0);
        for (j, &wj) in self.weights.iter().enumerate() {
            // Σ_{l≤j} x^l u^{l-j-1} / l!
            let mut term = inv.powu(j as u32 + 1);
            let mut inner = term;
            for l in 1..=j {
                term = term * u * (x / l as f64);
                inner += term;
            }
            total += inner * wj;
        }
        total
    }

    pub fn eval(&self, w: Complex64, z: Complex64, lambda: f64) -> Result<Complex64> {
        check_upper("w", w)?;
        check_upper("z", z)?;
        if self.k >= 1 {
            for (name, p) in [("z", z), ("w", w)] {
                if (p - I).norm() < EPS_SING {
                    return Err(domain(format!(
                        "{name} = {p} lies within {EPS_SING:e} of i, where the closed form of G_k is singular"
                    )));
                }
            }
        }
        if lambda < 0.0 {
            return Ok(-self.eval_nonneg(z, w, -lambda).conj());
        }
        Ok(self.eval_nonneg(w, z, lambda))
    }

    /// The `λ ≥ 0` closed form.
    pub fn eval_nonneg(&self, w: Complex64, z: Complex64, lambda: f64) -> Complex64 {
        let denom = z - w.conj();
        let osc = (2.0 * PI * I * lambda * z).exp();
        if self.k == 0 {
            return osc / denom;
        }
        let decay = (-2.0 * PI * lambda).exp();
        let uw = 1.0 + I * w.conj();
        let uz = 1.0 + I * z;
        let head = (self.partial_exp_sum(uw, lambda) - self.partial_exp_sum(uz, lambda)) * decay;
        let tail = osc / ((1.0 + z * z).powi(self.k as i32) * PI.powi(self.k as i32));
        (head + tail) / denom
    }
}

/// `G_k(w, z, λ)`; for `λ < 0` uses `G_k(w, z, λ) = -conj(G_k(z, w, -λ))`.
pub fn eval_g(k: usize, w: Complex64, z: Complex64, lambda: f64) -> Result<Complex64> {
    GKernel::new(k)?.eval(w, z, lambda)
}

/// `|Σ_j j! b_{k-1,j}/(2π)^{j+1} [(1+iz)^{-(j+1)} + (1-iz)^{-(j+1)}] - π^{-k}(1+z²)^{-k}|`.
pub fn pf_identity_residual(k: usize, z: Complex64) -> Result<f64> {
    if k == 0 {
        return Err(domain("the partial-fraction identity needs k >= 1"));
    }
    if (z - I).norm() == 0.0 || (z + I).norm() == 0.0 {
        return Err(domain("the partial-fraction identity is singular at z = ±i"));
    }
    let kernel = GKernel::new(k)?;
    let up = 1.0 + I * z;
    let um = 1.0 - I * z;
    let lhs: Complex64 = kernel
        .weights
        .iter()
        .enumerate()
        .map(|(j, &wj)| (up.powu(j as u32 + 1).inv() + um.powu(j as u32 + 1).inv()) * wj)
        .sum();
    let rhs = (1.0 + z * z).powi(-(k as i32)) / PI.powi(k as i32);
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn r_poly_low_orders() {
        assert_eq!(r_poly(0).unwrap().coeffs(), &[1.0]);
        let r1 = r_poly(1).unwrap();
        assert!((r1.coeffs()[0] - 0.5).abs() < 1e-15 && (r1.coeffs()[1] - 0.5).abs() < 1e-15);
        let r2 = r_poly(2).unwrap();
        let want = [3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0];
        for (a, b) in r2.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn r_poly_rejects_alternative_readings() {
        // r₁ = X/2 + 1 would give A₂(0) = 1/π
        let r1 = r_poly(1).unwrap();
        assert!((r1.eval(0.0) - 1.0).abs() > 0.4);
        let r2 = r_poly(2).unwrap();
        assert!((r2.coeffs()[1] - 5.0 / 8.0).abs() > 0.2);
    }

    #[test]
    fn r_poly_degree_and_constant_term() {
        let mut central = 1.0;
        for k in 0..=R_POLY_MAX {
            if k > 0 {
                central *= (2 * k - 1) as f64 / (2 * k) as f64;
            }
            let r = r_poly(k).unwrap();
            assert_eq!(r.coeffs().len(), k + 1);
            assert!(r.coeffs()[k] != 0.0);
            assert!((r.eval(0.0) - central).abs() < 1e-14, "k={k}");
        }
        assert!(r_poly(R_POLY_MAX + 1).is_err());
    }

    #[test]
    fn a_values() {
        assert!(eval_a(0, 0.3).is_err());
        assert!((eval_a(1, 0.3).unwrap() - (-2.0 * PI * 0.3f64).exp()).abs() < 1e-16);
        assert!((eval_a(2, 0.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((eval_a(3, 0.0).unwrap() - 3.0 / (8.0 * PI * PI)).abs() < 1e-15);
        for k in 1..6 {
            for x in [0.1, 0.7, 2.5] {
                let a = eval_a(k, x).unwrap();
                assert!(a > 0.0);
                assert_eq!(a, eval_a(k, -x).unwrap());
            }
        }
    }

    #[test]
    fn bspline_examples() {
        for t in [-1.5, -1.0, -0.3, 0.0, 0.25, 0.999, 2.0] {
            assert!((eval_shat(0, t) - (1.0 - f64::abs(t)).max(0.0)).abs() < 1e-15);
        }
        assert_eq!(taper_norm(0), 1.0);
        assert!((taper_norm(1) - 2.0 / 3.0).abs() < 1e-15);
        for k in 0..5 {
            let edge = (k + 1) as f64;
            assert_eq!(eval_shat(k, edge), 0.0);
            assert_eq!(eval_shat(k, -edge), 0.0);
            assert!((eval_shat(k, 0.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bspline_matches_truncated_power_formula() {
        // M_n(t) = 1/(n-1)! Σ_j (-1)^j C(n,j) (t + n/2 - j)_+^{n-1}
        for n in 2..=10usize {
            let mut fact = 1.0;
            for i in 1..n {
                fact *= i as f64;
            }
            for t in [-2.3, -0.7, 0.0, 0.45, 1.2, 3.9] {
                let mut binom = 1.0;
                let mut s = 0.0;
                let mut mag = 0.0;
                for j in 0..=n {
                    if j > 0 {
                        binom *= (n - j + 1) as f64 / j as f64;
                    }
                    let x = t + 0.5 * n as f64 - j as f64;
                    if x > 0.0 {
                        let term = binom * x.powi(n as i32 - 1);
                        s += if j % 2 == 0 { term } else { -term };
                        mag += term;
                    }
                }
                // the alternating sum cancels; its own rounding sets the tolerance
                let tol = 1e-14 * mag / fact + 1e-15;
                assert!((cardinal_bspline(n, t) - s / fact).abs() < tol, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn s_at_zero_is_inverse_norm() {
        assert!((eval_s(1, 0.0) - 1.5).abs() < 1e-15);
        assert!(eval_s(2, 3.0).abs() < 1e-15);
    }

    #[test]
    fn ghat_examples() {
        let v = eval_ghat(0, I, I, 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * PI * I)).norm() < 1e-15);
        let v = eval_ghat(1, I, I, 1.0).unwrap();
        assert!((v - 1.0 / (8.0 * PI * PI * I)).norm() < 1e-15);
        assert!(eval_ghat(0, c(0.0, -1.0), I, 0.0).is_err());
        let far = eval_ghat(2, I, I, 1e3).unwrap().norm();
        let farther = eval_ghat(2, I, I, 2e3).unwrap().norm();
        assert!((far / farther - 64.0).abs() < 0.1);
    }

    #[test]
    fn g_examples() {
        let w = c(0.3, 0.8);
        let z = c(-1.0, 2.0);
        let v = eval_g(0, w, z, 0.0).unwrap();
        assert!((v - 1.0 / (z - w.conj())).norm() < 1e-15);
        let v = eval_g(0, I, I, 1.0).unwrap();
        assert!((v - (-2.0 * PI).exp() / (2.0 * I)).norm() < 1e-16);
    }

    #[test]
    fn g_rejects_neighbourhood_of_i() {
        assert!(eval_g(1, c(0.0, 2.0), c(0.0, 1.0 + 1e-7), 0.3).is_err());
        assert!(eval_g(1, c(1e-7, 1.0), c(0.0, 2.0), 0.3).is_err());
        assert!(eval_g(0, I, I, 0.3).is_ok());
        assert!(eval_g(2, c(0.0, 2.0), c(0.0, -1.0), 0.3).is_err());
    }

    #[test]
    fn g_closed_form_antisymmetric_at_zero() {
        for k in 0..5 {
            let kern = GKernel::new(k).unwrap();
            for (w, z) in [(c(0.2, 0.7), c(-0.5, 1.9)), (c(1.0, 3.0), c(0.4, 0.6))] {
                let a = kern.eval_nonneg(w, z, 0.0);
                let b = kern.eval_nonneg(z, w, 0.0);
                assert!((a + b.conj()).norm() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn g_continuous_approaching_i() {
        let w = c(0.5, 2.0);
        let kern = GKernel::new(2).unwrap();
        let vals: Vec<Complex64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&d| kern.eval(w, c(d, 1.0 + d), 0.4).unwrap())
            .collect();
        let d1 = (vals[0] - vals[1]).norm();
        let d2 = (vals[1] - vals[2]).norm();
        assert!(d2 < d1 / 5.0, "{d1} {d2}");
    }

    #[test]
    fn pf_identity_low_k() {
        for z in [c(0.3, 0.1), c(-2.0, 1.5), c(5.0, -3.0)] {
            assert!(pf_identity_residual(1, z).unwrap() < 1e-14);
        }
        assert!(pf_identity_residual(2, c(1.0, 2.0)).unwrap() < 1e-10);
        assert!(pf_identity_residual(2, I).is_err());
        assert!(pf_identity_residual(0, c(1.0, 1.0)).is_err());
    }
}
