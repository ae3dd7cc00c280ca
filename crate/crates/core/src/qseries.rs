//! Truncated q-series over `f64`: Euler product, theta series, eta quotients
//! and the sum-of-three-squares counting function.

use std::ops::Mul;

use serde::Serialize;

use crate::error::{domain, Result};

/// `q^leading_exponent * Σ coeffs[n] q^n`, known up to `q^n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedPowerSeries {
    pub leading_exponent: f64,
    coeffs: Vec<f64>,
}

impl TruncatedPowerSeries {
    pub fn new(leading_exponent: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(domain("a truncated series needs at least the constant term"));
        }
        if !leading_exponent.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(domain("series coefficients must be finite"));
        }
        Ok(Self {
            leading_exponent,
            coeffs,
        })
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(0.0, coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs[n]
    }

    /// Drops every coefficient above `q^n_max`.
    pub fn truncate(&self, n_max: usize) -> Self {
        let n = n_max.min(self.n_max());
        Self {
            leading_exponent: self.leading_exponent,
            coeffs: self.coeffs[..=n].to_vec(),
        }
    }

    /// Substitutes `q -> q^m`, keeping the same truncation order.
    pub fn dilate(&self, m: usize) -> Self {
        assert!(m >= 1);
        let n = self.n_max();
        let mut out = vec![0.0; n + 1];
        for (j, &c) in self.coeffs.iter().enumerate().take(n / m + 1) {
            out[j * m] = c;
        }
        Self {
            leading_exponent: self.leading_exponent * m as f64,
            coeffs: out,
        }
    }

    /// Formal logarithm of a series with constant term 1, via
    /// `n L_n = n s_n - Σ_{j<n} j L_j s_{n-j}`.
    pub fn log(&self) -> Result<Self> {
        if self.coeffs[0] != 1.0 {
            return Err(domain(format!(
                "series logarithm needs constant term 1, got {}",
                self.coeffs[0]
            )));
        }
        let s = &self.coeffs;
        let n_max = self.n_max();
        let mut l = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            let conv: f64 = (1..n).map(|j| j as f64 * l[j] * s[n - j]).sum();
            l[n] = s[n] - conv / n as f64;
        }
        Ok(Self {
            leading_exponent: 0.0,
            coeffs: l,
        })
    }

    /// Formal exponential of a series with zero constant term, via
    /// `n E_n = Σ_{j=1}^{n} j L_j E_{n-j}`.
    pub fn exp(&self) -> Result<Self> {
        Ok(self.exp_with_floor()?.0)
    }

    /// `exp` together with, for each coefficient, the size of the rounding
    /// error its recurrence step can introduce.
    fn exp_with_floor(&self) -> Result<(Self, Vec<f64>)> {
        if self.coeffs[0] != 0.0 {
            return Err(domain("series exponential needs a zero constant term"));
        }
        let l = &self.coeffs;
        let n_max = self.n_max();
        let jl: Vec<f64> = l.iter().enumerate().map(|(j, &c)| j as f64 * c).collect();
        let mut e = vec![0.0; n_max + 1];
        let mut floor = vec![0.0; n_max + 1];
        e[0] = 1.0;
        for n in 1..=n_max {
            let mut conv = 0.0;
            let mut mag = 0.0;
            for j in 1..=n {
                let term = jl[j] * e[n - j];
                conv += term;
                mag += term.abs();
            }
            e[n] = conv / n as f64;
            floor[n] = 64.0 * n as f64 * f64::EPSILON * mag / n as f64;
        }
        let out = Self {
            leading_exponent: 0.0,
            coeffs: e,
        };
        Ok((out, floor))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            leading_exponent: self.leading_exponent,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_max(), other.n_max());
        Self {
            leading_exponent: self.leading_exponent,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Mul for &TruncatedPowerSeries {
    type Output = TruncatedPowerSeries;

    /// Cauchy product truncated at the smaller of the two orders.
    fn mul(self, rhs: Self) -> TruncatedPowerSeries {
        let n = self.n_max().min(rhs.n_max());
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a * b;
            }
        }
        TruncatedPowerSeries {
            leading_exponent: self.leading_exponent + rhs.leading_exponent,
            coeffs: out,
        }
    }
}

/// Coefficients of `∏_{n≥1} (1 - q^n)` up to `q^n_max`, from the pentagonal
/// number theorem.
pub fn euler_coeffs(n_max: usize) -> TruncatedPowerSeries {
    let mut c = vec![0.0; n_max + 1];
    c[0] = 1.0;
    for k in 1i64.. {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let p_minus = (k * (3 * k - 1) / 2) as usize;
        let p_plus = (k * (3 * k + 1) / 2) as usize;
        if p_minus > n_max {
            break;
        }
        c[p_minus] += sign;
        if p_plus <= n_max {
            c[p_plus] += sign;
        }
    }
    TruncatedPowerSeries {
        leading_exponent: 0.0,
        coeffs: c,
    }
}

/// `log ∏ (1 - q^n) = -Σ σ(m)/m q^m`, with σ the divisor sum.
///
/// Running the logarithm recurrence on [`euler_coeffs`] instead amplifies
/// rounding like the partition numbers and is useless past order ~150.
pub fn euler_log_coeffs(n_max: usize) -> TruncatedPowerSeries {
    let mut sigma = vec![0.0f64; n_max + 1];
    for d in 1..=n_max {
        for m in (d..=n_max).step_by(d) {
            sigma[m] += d as f64;
        }
    }
    let coeffs = sigma
        .iter()
        .enumerate()
        .map(|(m, &s)| if m == 0 { 0.0 } else { -s / m as f64 })
        .collect();
    TruncatedPowerSeries {
        leading_exponent: 0.0,
        coeffs,
    }
}

/// `s^e = exp(e log s)` for a series with constant term 1.
pub fn series_pow(s: &TruncatedPowerSeries, e: f64) -> Result<TruncatedPowerSeries> {
    let mut out = s.log()?.scale(e).exp()?;
    out.leading_exponent = s.leading_exponent * e;
    Ok(out)
}

/// Coefficients `α_{n,c}` of `η(z)^{24c-2} η(4z)^{24c-2} / η(2z)^{48c-5} =
/// Σ α_{n,c} q^{n+c}` with `η(z) = q^{1/24} ∏(1 - q^n)`.
pub fn guinand_coeffs(c: f64, n_max: usize) -> Result<TruncatedPowerSeries> {
    if !(0.0..=0.125).contains(&c) {
        return Err(domain(format!(
            "eta-quotient parameter c = {c} outside [0, 1/8]; coefficients grow exponentially there"
        )));
    }
    let e1 = 24.0 * c - 2.0;
    let e2 = 48.0 * c - 5.0;
    let log_e = euler_log_coeffs(n_max);
    let total = log_e
        .scale(e1)
        .add(&log_e.dilate(4).scale(e1))
        .add(&log_e.dilate(2).scale(-e2));
    let (mut out, floor) = TruncatedPowerSeries {
        leading_exponent: 0.0,
        coeffs: total.coeffs,
    }
    .exp_with_floor()?;
    // exact zeros (e.g. every non-square at c = 0) come out as rounding noise
    for (v, f) in out.coeffs.iter_mut().zip(floor) {
        if v.abs() <= f {
            *v = 0.0;
        }
    }
    // q^{(e1 + 4 e1 - 2 e2)/24} = q^c
    out.leading_exponent = (e1 + 4.0 * e1 - 2.0 * e2) / 24.0;
    Ok(out)
}

/// `Σ_{m∈ℤ} q^{m²}` by enumerating `m`.
pub fn theta_coeffs(n_max: usize) -> TruncatedPowerSeries {
    let mut c = vec![0.0; n_max + 1];
    let mut m: usize = 0;
    while m * m <= n_max {
        c[m * m] += if m == 0 { 1.0 } else { 2.0 };
        m += 1;
    }
    TruncatedPowerSeries {
        leading_exponent: 0.0,
        coeffs: c,
    }
}

/// `values[n] = #{m ∈ ℤ³ : |m|² = n}` for `n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct R3Table {
    values: Vec<u64>,
}

impl R3Table {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> u64 {
        self.values[n]
    }

    /// `Σ_{n ≤ x} r₃(n)`.
    pub fn partial_sum(&self, x: usize) -> u64 {
        self.values[..=x.min(self.n_max())].iter().sum()
    }
}

/// Enumerates every integer triple with `|m|² ≤ n_max`.
pub fn r3_sequence(n_max: usize) -> R3Table {
    let mut values = vec![0u64; n_max + 1];
    let r = isqrt(n_max) as i64;
    for x in -r..=r {
        let x2 = (x * x) as usize;
        let ry = isqrt(n_max - x2) as i64;
        for y in -ry..=ry {
            let xy2 = x2 + (y * y) as usize;
            let rz = isqrt(n_max - xy2) as i64;
            for z in -rz..=rz {
                values[xy2 + (z * z) as usize] += 1;
            }
        }
    }
    R3Table { values }
}

/// True when `n = 4^a (8b + 7)`.
pub fn is_legendre_excluded(mut n: usize) -> bool {
    if n == 0 {
        return false;
    }
    while n % 4 == 0 {
        n /= 4;
    }
    n % 8 == 7
}

pub(crate) fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
