//! Strongly tempered measures, summation functions, and the built-in
//! Fourier summation pairs.
//!
//! Every infinite object is stored truncated; the truncation radius travels
//! with the data so downstream reports can state it.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::qseries::{guinand_coeffs, isqrt, r3_sequence};
use crate::quadrature::{integrate_breakpoints, integrate_to_infinity, QuadOptions, QuadResult};

/// Atoms closer than this are merged when loading a pair file.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// `r ↦ r tanh(πr)`, the continuous part of the symmetrised Selberg formula.
    RTanhPiR,
    /// Piecewise-linear interpolation of `(t, value)` samples, zero outside.
    Grid(Vec<(f64, f64)>),
}

/// A real absolutely continuous part `scale * kind(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub kind: DensityKind,
    pub scale: f64,
}

impl Density {
    pub fn r_tanh_pi_r(scale: f64) -> Self {
        Self {
            kind: DensityKind::RTanhPiR,
            scale,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let base = match &self.kind {
            DensityKind::RTanhPiR => t * (PI * t).tanh(),
            DensityKind::Grid(pts) => interpolate(pts, t),
        };
        self.scale * base
    }

    /// Points where the density is not smooth, inside `[-t_max, t_max]`.
    fn breakpoints(&self, t_max: f64) -> Vec<f64> {
        match &self.kind {
            DensityKind::RTanhPiR => Vec::new(),
            DensityKind::Grid(pts) => pts
                .iter()
                .map(|p| p.0)
                .filter(|t| t.abs() < t_max)
                .collect(),
        }
    }

    /// Exponent `g` with `|density(t)| ≲ |t|^g`.
    pub fn growth_exponent(&self) -> f64 {
        match self.kind {
            DensityKind::RTanhPiR => 1.0,
            DensityKind::Grid(_) => 0.0,
        }
    }

    fn support_radius(&self) -> f64 {
        match &self.kind {
            DensityKind::RTanhPiR => f64::INFINITY,
            DensityKind::Grid(pts) => pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max),
        }
    }
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    if pts.is_empty() || t < pts[0].0 || t > pts[pts.len() - 1].0 {
        return 0.0;
    }
    let i = pts.partition_point(|p| p.0 <= t);
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[i - 1].1;
    }
    let (t0, v0) = pts[i - 1];
    let (t1, v1) = pts[i];
    if t1 == t0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Beyond `radius` the truncated atoms, equally spaced by `spacing`, are
/// replaced by `density * dt`.
///
/// For a comb-like measure the mean density equals the mass of its Fourier
/// transform at the origin, i.e. `a(0)` of the pair. With `radius` half a
/// spacing past the last atom the replacement is a midpoint rule, and its
/// leading Euler–Maclaurin correction is added in [`tail_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub radius: f64,
    pub density: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperedMeasure {
    atoms: Vec<Atom>,
    density: Option<Density>,
    degree_bound: u32,
    truncation_radius: f64,
    truncation_note: String,
    tail: Option<TailModel>,
}

fn check_sorted<T>(items: &[T], loc: impl Fn(&T) -> f64, what: &'static str) -> Result<()> {
    for (i, w) in items.windows(2).enumerate() {
        let (prev, next) = (loc(&w[0]), loc(&w[1]));
        if next <= prev || !next.is_finite() {
            return Err(Error::Unsorted {
                what,
                index: i + 1,
                prev,
                next,
            });
        }
    }
    Ok(())
}

/// Sorts by location, adds weights closer than [`MERGE_TOL`], drops zeros.
fn normalize(mut items: Vec<(f64, Complex64)>) -> Vec<(f64, Complex64)> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Complex64)> = Vec::with_capacity(items.len());
    for (t, w) in items {
        match out.last_mut() {
            Some(last) if (t - last.0).abs() < MERGE_TOL => last.1 += w,
            _ => out.push((t, w)),
        }
    }
    out.retain(|(_, w)| *w != Complex64::new(0.0, 0.0));
    out
}

impl TemperedMeasure {
    /// Builds a measure from atoms already strictly increasing with non-zero weights.
    pub fn new(
        atoms: Vec<Atom>,
        density: Option<Density>,
        degree_bound: u32,
        truncation_radius: f64,
        truncation_note: impl Into<String>,
    ) -> Result<Self> {
        check_sorted(&atoms, |a| a.location, "atom")?;
        if let Some(a) = atoms.iter().find(|a| a.weight == Complex64::new(0.0, 0.0)) {
            return Err(domain(format!("zero weight stored at t = {}", a.location)));
        }
        if !atoms.iter().all(|a| a.weight.re.is_finite() && a.weight.im.is_finite()) {
            return Err(domain("non-finite atom weight"));
        }
        Ok(Self {
            atoms,
            density,
            degree_bound,
            truncation_radius,
            truncation_note: truncation_note.into(),
            tail: None,
        })
    }

    /// Sorts, merges near-duplicates and drops zero weights before building.
    pub fn from_unsorted(
        atoms: Vec<(f64, Complex64)>,
        density: Option<Density>,
        degree_bound: u32,
        truncation_radius: f64,
        truncation_note: impl Into<String>,
    ) -> Result<Self> {
        let atoms = normalize(atoms)
            .into_iter()
            .map(|(location, weight)| Atom { location, weight })
            .collect();
        Self::new(atoms, density, degree_bound, truncation_radius, truncation_note)
    }

    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
            degree_bound: 0,
            truncation_radius: 0.0,
            truncation_note: "empty measure".into(),
            tail: None,
        }
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn truncation_note(&self) -> &str {
        &self.truncation_note
    }

    pub fn tail(&self) -> Option<&TailModel> {
        self.tail.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.im == 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.density.is_none()
    }

    /// Real with nonnegative atoms and density, the case where the
    /// associated matrices have at most `k` negative eigenvalues.
    pub fn is_nonnegative(&self) -> bool {
        let density_ok = match &self.density {
            None => true,
            Some(d) => match &d.kind {
                DensityKind::RTanhPiR => d.scale >= 0.0,
                DensityKind::Grid(pts) => pts.iter().all(|&(_, v)| d.scale * v >= 0.0),
            },
        };
        density_ok && self.atoms.iter().all(|a| a.weight.im == 0.0 && a.weight.re >= 0.0)
    }

    /// Atoms with `lo <= t <= hi`.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> &[Atom] {
        let start = self.atoms.partition_point(|a| a.location < lo);
        let end = self.atoms.partition_point(|a| a.location <= hi);
        &self.atoms[start..end.max(start)]
    }

    /// `|μ|([-t, t])` including the density.
    pub fn total_variation(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms_in(-t, t).iter().map(|a| a.weight.norm()).sum();
        atoms + self.density_abs_mass(0.0, t)
    }

    /// `∫_{lo ≤ |s| ≤ hi} |density(s)| ds`.
    fn density_abs_mass(&self, lo: f64, hi: f64) -> f64 {
        let Some(d) = &self.density else { return 0.0 };
        let hi = hi.min(d.support_radius());
        if hi <= lo {
            return 0.0;
        }
        let mut pts = vec![lo, hi];
        pts.extend(d.breakpoints(hi).into_iter().map(f64::abs).filter(|t| *t > lo));
        let r = integrate_breakpoints(
            |s| Complex64::new(d.eval(s).abs() + d.eval(-s).abs(), 0.0),
            &pts,
            &QuadOptions::default(),
        );
        r.value.re
    }

    /// Heuristic bound on `∫_{|t|>R} |f| d|μ|` for `|f(t)| ≈ |f(R)| (R/t)^decay`,
    /// extrapolating the `|μ|` density of the outer shell `[R/2, R]` with the
    /// growth allowed by the declared degree.
    pub fn tail_estimate(&self, f_at_radius: f64, decay: f64) -> f64 {
        let r = self.truncation_radius;
        if r <= 0.0 || f_at_radius == 0.0 {
            return 0.0;
        }
        if let Some(tail) = &self.tail {
            // next Euler–Maclaurin term of the corrected midpoint rule, both sides
            let h4 = tail.spacing.powi(4);
            let d3 = decay * (decay + 1.0) * (decay + 2.0);
            return 2.0 * tail.density.abs() * f_at_radius * d3 * 7.0 * h4
                / (5760.0 * tail.radius.powi(3));
        }
        let shell_atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location.abs() > 0.5 * r && a.location.abs() <= r)
            .map(|a| a.weight.norm())
            .sum();
        let shell = shell_atoms + self.density_abs_mass(0.5 * r, r);
        let rho = shell / (0.5 * r);
        let growth = (self.degree_bound as f64 - 2.0).max(0.0);
        let excess = decay - 1.0 - growth;
        if excess <= 0.0 {
            return f64::INFINITY;
        }
        rho * f_at_radius * r / excess
    }
}

/// The `a(·)` side of a pair: finitely many `(λ, a(λ))` plus a declared
/// exponential growth constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SummationFunction {
    support: Vec<(f64, Complex64)>,
    growth_constant: f64,
    truncation: f64,
}

impl SummationFunction {
    pub fn new(support: Vec<(f64, Complex64)>, growth_constant: f64, truncation: f64) -> Result<Self> {
        check_sorted(&support, |p| p.0, "support")?;
        if support.iter().any(|p| p.1 == Complex64::new(0.0, 0.0)) {
            return Err(domain("zero value stored in the support of a"));
        }
        if !(growth_constant > 0.0) {
            return Err(domain("growth constant must be positive"));
        }
        Ok(Self {
            support,
            growth_constant,
            truncation,
        })
    }

    pub fn from_unsorted(
        support: Vec<(f64, Complex64)>,
        growth_constant: f64,
        truncation: f64,
    ) -> Result<Self> {
        Self::new(normalize(support), growth_constant, truncation)
    }

    pub fn zero() -> Self {
        Self {
            support: Vec::new(),
            growth_constant: 1.0,
            truncation: 0.0,
        }
    }

    pub fn support(&self) -> &[(f64, Complex64)] {
        &self.support
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    /// Every `λ` with `|λ| ≤ truncation` is represented.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// `a(λ)`, zero off the stored support (matching within [`MERGE_TOL`]).
    pub fn value(&self, lambda: f64) -> Complex64 {
        let i = self.support.partition_point(|p| p.0 < lambda - MERGE_TOL);
        match self.support.get(i) {
            Some(&(l, v)) if (l - lambda).abs() < MERGE_TOL => v,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn largest_frequency(&self) -> f64 {
        self.support.iter().map(|p| p.0.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FSPair {
    pub name: String,
    pub mu: TemperedMeasure,
    pub a: SummationFunction,
    pub antipodal: bool,
    /// Height above which the exponential series of the associated function
    /// is trusted.
    pub strip_constant: f64,
    /// Both sides converge absolutely against Gaussians.
    pub gaussian_admissible: bool,
}

impl FSPair {
    pub fn new(
        name: impl Into<String>,
        mu: TemperedMeasure,
        a: SummationFunction,
        antipodal: bool,
        strip_constant: f64,
    ) -> Result<Self> {
        let pair = Self {
            name: name.into(),
            mu,
            a,
            antipodal,
            strip_constant,
            gaussian_admissible: false,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            mu: TemperedMeasure::zero(),
            a: SummationFunction::zero(),
            antipodal: true,
            strip_constant: 0.1,
            gaussian_admissible: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strip_constant > 0.0) {
            return Err(domain("strip constant must be positive"));
        }
        if self.antipodal {
            if let Some(a) = self.mu.atoms.iter().find(|a| a.weight.im != 0.0) {
                return Err(domain(format!(
                    "antipodal pair has a complex atom weight at t = {}",
                    a.location
                )));
            }
            for &(lambda, v) in &self.a.support {
                if self.a.value(-lambda) != v.conj() {
                    return Err(Error::Antipodality { lambda });
                }
            }
        }
        Ok(())
    }

    /// Multiplies both sides by a real factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let atoms = self
            .mu
            .atoms
            .iter()
            .map(|a| (a.location, a.weight * factor))
            .collect();
        let density = self.mu.density.clone().map(|d| Density {
            scale: d.scale * factor,
            ..d
        });
        let mut mu = TemperedMeasure::from_unsorted(
            atoms,
            density,
            self.mu.degree_bound,
            self.mu.truncation_radius,
            self.mu.truncation_note.clone(),
        )?;
        mu.tail = self.mu.tail.map(|t| TailModel {
            density: t.density * factor,
            ..t
        });
        let a = SummationFunction::from_unsorted(
            self.a.support.iter().map(|&(l, v)| (l, v * factor)).collect(),
            self.a.growth_constant,
            self.a.truncation,
        )?;
        Ok(Self {
            name: format!("{}*{}", self.name, factor),
            mu,
            a,
            ..self.clone()
        })
    }
}

impl fmt::Display for FSPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} atoms, {} support points, deg(mu) <= {}, {}",
            self.name,
            self.mu.atoms.len(),
            self.a.support.len(),
            self.mu.degree_bound,
            self.mu.truncation_note
        )
    }
}

/// Default height of the trusted strip for the built-in pairs.
pub const DEFAULT_STRIP: f64 = 0.1;

/// The Dirac comb `Σ δ_n` paired with `a ≡ 1` on the integers.
pub fn make_poisson(t_max: f64, lambda_max: f64) -> Result<FSPair> {
    if !(t_max > 0.0 && lambda_max > 0.0) {
        return Err(domain("Poisson truncations must be positive"));
    }
    let n = t_max.floor() as i64;
    let atoms = (-n..=n)
        .map(|m| Atom {
            location: m as f64,
            weight: Complex64::new(1.0, 0.0),
        })
        .collect();
    let mu = TemperedMeasure::new(
        atoms,
        None,
        2,
        n as f64,
        format!("integer atoms |n| <= {n}; beyond {}.5 replaced by unit density", n),
    )?
    .with_tail(TailModel {
        radius: n as f64 + 0.5,
        density: 1.0,
        spacing: 1.0,
    });
    let l = lambda_max.floor() as i64;
    let support = (-l..=l).map(|m| (m as f64, Complex64::new(1.0, 0.0))).collect();
    let a = SummationFunction::new(support, 1.0, l as f64)?;
    let mut pair = FSPair::new("poisson", mu, a, true, DEFAULT_STRIP)?;
    pair.gaussian_admissible = true;
    Ok(pair)
}

/// The self-dual measure `μ_c = Σ α_{n,c} (δ_{√(n+c)} + δ_{-√(n+c)})` paired
/// with itself.
///
/// At `c = 0` this is twice the Poisson comb: the two `n = 0` atoms coincide
/// and the positive squares carry weight 2 on each of `±m`. No rescaling is
/// applied.
pub fn make_guinand(c: f64, n_max: usize) -> Result<FSPair> {
    let alpha = guinand_coeffs(c, n_max)?;
    let mut points = Vec::with_capacity(2 * n_max + 2);
    for (n, &w) in alpha.coeffs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let t = (n as f64 + c).sqrt();
        let w = Complex64::new(w, 0.0);
        points.push((t, w));
        points.push((-t, w));
    }
    let radius = (n_max as f64 + c).sqrt();
    let note = format!("atoms at ±sqrt(n + {c}) for n <= {n_max}");
    let mut mu = TemperedMeasure::from_unsorted(points.clone(), None, 3, radius, note)?;
    if c == 0.0 {
        let m = isqrt(n_max) as f64;
        mu = mu.with_tail(TailModel {
            radius: m + 0.5,
            density: 2.0,
            spacing: 1.0,
        });
    }
    let a = SummationFunction::from_unsorted(points, 1.0, radius)?;
    let mut pair = FSPair::new(format!("guinand(c={c})"), mu, a, true, DEFAULT_STRIP)?;
    pair.gaussian_admissible = true;
    Ok(pair)
}

/// `χ(n)`: −1/2 off 4ℕ, 4 on 4ℕ∖16ℕ, 0 on 16ℕ.
pub fn meyer_chi(n: usize) -> f64 {
    if n % 16 == 0 {
        0.0
    } else if n % 4 == 0 {
        4.0
    } else {
        -0.5
    }
}

/// The odd crystalline measure `Σ χ(n) r₃(n)/√n (δ_{√n/2} − δ_{−√n/2})` with
/// `μ̂ = −iμ`, so `a(λ) = −i μ({λ})`.
pub fn make_meyer(n_max: usize) -> Result<FSPair> {
    if n_max < 1 {
        return Err(domain("make_meyer needs n_max >= 1"));
    }
    let r3 = r3_sequence(n_max);
    let mut atoms = Vec::new();
    for n in 1..=n_max {
        let chi = meyer_chi(n);
        let r = r3.get(n);
        if chi == 0.0 || r == 0 {
            continue;
        }
        let w = chi * r as f64 / (n as f64).sqrt();
        let t = 0.5 * (n as f64).sqrt();
        atoms.push((t, Complex64::new(w, 0.0)));
        atoms.push((-t, Complex64::new(-w, 0.0)));
    }
    let support = atoms.iter().map(|&(t, w)| (t, -Complex64::i() * w)).collect();
    let radius = 0.5 * (n_max as f64).sqrt();
    let mu = TemperedMeasure::from_unsorted(
        atoms,
        None,
        3,
        radius,
        format!("atoms at ±sqrt(n)/2 for 1 <= n <= {n_max}"),
    )?;
    let a = SummationFunction::from_unsorted(support, 1.0, radius)?;
    let mut pair = FSPair::new("meyer", mu, a, true, DEFAULT_STRIP)?;
    pair.gaussian_admissible = true;
    Ok(pair)
}

/// Splits a complex pair into real-antipodal pairs with `μ = μ₁ − iμ₂` and
/// `a = a₁ − i a₂`.
pub fn antipodal_split(pair: &FSPair) -> Result<(FSPair, FSPair)> {
    let mu = &pair.mu;
    let real_atoms = mu
        .atoms
        .iter()
        .map(|a| (a.location, Complex64::new(a.weight.re, 0.0)))
        .collect();
    let imag_atoms = mu
        .atoms
        .iter()
        .map(|a| (a.location, Complex64::new(-a.weight.im, 0.0)))
        .collect();
    let mut mu1 = TemperedMeasure::from_unsorted(
        real_atoms,
        mu.density.clone(),
        mu.degree_bound,
        mu.truncation_radius,
        mu.truncation_note.clone(),
    )?;
    mu1.tail = mu.tail;
    let mu2 = TemperedMeasure::from_unsorted(
        imag_atoms,
        None,
        mu.degree_bound,
        mu.truncation_radius,
        mu.truncation_note.clone(),
    )?;

    let mut lambdas: Vec<f64> = pair
        .a
        .support
        .iter()
        .flat_map(|&(l, _)| [l, -l])
        .collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup_by(|x, y| (*x - *y).abs() < MERGE_TOL);
    let mut a1 = Vec::with_capacity(lambdas.len());
    let mut a2 = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let here = pair.a.value(l);
        let mirror = pair.a.value(-l).conj();
        a1.push((l, (here + mirror) / 2.0));
        a2.push((l, -Complex64::i() * (mirror - here) / 2.0));
    }
    let g = pair.a.growth_constant;
    let t = pair.a.truncation;
    let first = FSPair {
        name: format!("{}/re", pair.name),
        mu: mu1,
        a: SummationFunction::from_unsorted(a1, g, t)?,
        antipodal: true,
        strip_constant: pair.strip_constant,
        gaussian_admissible: pair.gaussian_admissible,
    };
    let second = FSPair {
        name: format!("{}/im", pair.name),
        mu: mu2,
        a: SummationFunction::from_unsorted(a2, g, t)?,
        antipodal: true,
        strip_constant: pair.strip_constant,
        gaussian_admissible: pair.gaussian_admissible,
    };
    first.validate()?;
    second.validate()?;
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeProbe {
    pub n: u32,
    pub t_grid: Vec<f64>,
    pub partial_integrals: Vec<f64>,
    pub verdict: ProbeVerdict,
}

/// Partial integrals `∫_{|t|≤T} (1+t²)^{-n/2} d|μ|(t)` on `t_grid` and a
/// verdict from the ratio of the last two increments.
pub fn degree_probe(mu: &TemperedMeasure, n: u32, t_grid: &[f64]) -> Result<DegreeProbe> {
    check_sorted(t_grid, |t| *t, "T grid")?;
    let weight = |t: f64| (1.0 + t * t).powf(-0.5 * n as f64);
    let partial: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let atoms: f64 = mu
                .atoms_in(-t, t)
                .iter()
                .map(|a| a.weight.norm() * weight(a.location))
                .sum();
            let dens = match &mu.density {
                None => 0.0,
                Some(d) => {
                    let hi = t.min(d.support_radius());
                    let mut pts = vec![0.0, hi.max(0.0)];
                    pts.extend(d.breakpoints(hi).into_iter().map(f64::abs));
                    integrate_breakpoints(
                        |s| Complex64::new((d.eval(s).abs() + d.eval(-s).abs()) * weight(s), 0.0),
                        &pts,
                        &QuadOptions::default(),
                    )
                    .value
                    .re
                }
            };
            atoms + dens
        })
        .collect();

    let verdict = if partial.len() < 3 {
        ProbeVerdict::Inconclusive
    } else {
        let m = partial.len();
        let last = partial[m - 1] - partial[m - 2];
        let prev = partial[m - 2] - partial[m - 3];
        if prev <= 0.0 {
            if last <= 0.0 {
                ProbeVerdict::Converging
            } else {
                ProbeVerdict::Inconclusive
            }
        } else {
            let ratio = last / prev;
            if ratio < 0.9 {
                ProbeVerdict::Converging
            } else if ratio >= 1.0 {
                ProbeVerdict::Diverging
            } else {
                ProbeVerdict::Inconclusive
            }
        }
    };
    Ok(DegreeProbe {
        n,
        t_grid: t_grid.to_vec(),
        partial_integrals: partial,
        verdict,
    })
}

/// `∫_{[-T,T]} f dμ`: atoms summed exactly, the density by adaptive
/// quadrature to `tol`.
pub fn integrate_against<F>(mu: &TemperedMeasure, f: F, t_max: f64, tol: f64) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panel: Some(0.25),
        ..QuadOptions::default()
    };
    integrate_against_with(mu, f, t_max, &[], &opts)
}

/// As [`integrate_against`] with explicit quadrature options and extra
/// breakpoints for the density integral.
pub fn integrate_against_with<F>(
    mu: &TemperedMeasure,
    f: F,
    t_max: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let atoms: Complex64 = mu
        .atoms_in(-t_max, t_max)
        .iter()
        .map(|a| a.weight * f(a.location))
        .sum();
    let mut result = QuadResult {
        value: atoms,
        ..QuadResult::zero()
    };
    if let Some(d) = &mu.density {
        let hi = t_max.min(d.support_radius());
        if hi > 0.0 {
            let mut pts = vec![-hi, hi];
            pts.extend(d.breakpoints(hi));
            pts.extend(breakpoints.iter().copied().filter(|t| t.abs() < hi));
            result = result.combine(integrate_breakpoints(|t| f(t) * d.eval(t), &pts, opts));
        }
    }
    result
}

/// `∫_{|t| > radius} f(t) ρ dt` for the measure's tail model, or zero.
pub fn tail_integral<F>(mu: &TemperedMeasure, f: F, tol: f64) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let Some(tail) = mu.tail else {
        return QuadResult::zero();
    };
    let rho = tail.density;
    let r = tail.radius;
    let mut result = integrate_to_infinity(|t| (f(t) + f(-t)) * rho, r, &QuadOptions::with_abs_tol(tol));
    // Σ_{n≥1} g(R + (n - ½)h) h ≈ ∫_R^∞ g + h²/24 g'(R), for each side
    let d = 1e-2 * tail.spacing;
    let slope = |s: f64| {
        (f(s - 2.0 * d) - 8.0 * f(s - d) + 8.0 * f(s + d) - f(s + 2.0 * d)) / (12.0 * d)
    };
    result.value += rho * tail.spacing * tail.spacing / 24.0 * (slope(r) - slope(-r));
    result
}

// ---------------------------------------------------------------------------
// Pair files

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    name: String,
    antipodal: bool,
    strip_constant: f64,
    mu: MuFile,
    a: AFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MuFile {
    degree_bound: i64,
    atoms: Vec<AtomFile>,
    #[serde(default)]
    density: Option<DensityFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    t: f64,
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    kind: DensityKindFile,
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<GridPoint>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DensityKindFile {
    RTanhPiR,
    Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridPoint {
    t: f64,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AFile {
    growth_constant: f64,
    support: Vec<SupportFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportFile {
    lambda: f64,
    re: f64,
    im: f64,
}

fn schema(field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Rejects decreasing input; merges neighbours closer than [`MERGE_TOL`].
fn ascending_merge(field: &str, items: Vec<(f64, Complex64)>) -> Result<Vec<(f64, Complex64)>> {
    for (i, w) in items.iter().enumerate() {
        if !(w.0.is_finite() && w.1.re.is_finite() && w.1.im.is_finite()) {
            return Err(schema(&format!("{field}[{i}]"), "non-finite number"));
        }
    }
    for (i, w) in items.windows(2).enumerate() {
        if w[1].0 < w[0].0 {
            return Err(Error::Unsorted {
                what: if field.starts_with("mu") { "atom" } else { "support" },
                index: i + 1,
                prev: w[0].0,
                next: w[1].0,
            });
        }
    }
    Ok(normalize(items))
}

/// Parses and validates a pair from the JSON schema.
pub fn pair_from_json(text: &str) -> Result<FSPair> {
    let file: PairFile = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_owned)
            .unwrap_or_else(|| "<document>".to_owned());
        schema(&field, msg)
    })?;

    if !(file.strip_constant > 0.0) {
        return Err(schema("strip_constant", "must be a positive number"));
    }
    if file.mu.degree_bound < 0 {
        return Err(schema("mu.degree_bound", "must be a non-negative integer"));
    }
    if !(file.a.growth_constant > 0.0) {
        return Err(schema("a.growth_constant", "must be a positive number"));
    }

    let atoms = ascending_merge(
        "mu.atoms",
        file.mu
            .atoms
            .iter()
            .map(|a| (a.t, Complex64::new(a.re, a.im)))
            .collect(),
    )?;
    let support = ascending_merge(
        "a.support",
        file.a
            .support
            .iter()
            .map(|s| (s.lambda, Complex64::new(s.re, s.im)))
            .collect(),
    )?;

    let density = match file.mu.density {
        None => None,
        Some(d) => {
            if !d.scale.is_finite() {
                return Err(schema("mu.density.scale", "must be finite"));
            }
            let kind = match (d.kind, d.grid) {
                (DensityKindFile::RTanhPiR, None) => DensityKind::RTanhPiR,
                (DensityKindFile::RTanhPiR, Some(_)) => {
                    return Err(schema("mu.density.grid", "only allowed for kind \"grid\""))
                }
                (DensityKindFile::Grid, None) => {
                    return Err(schema("mu.density.grid", "required for kind \"grid\""))
                }
                (DensityKindFile::Grid, Some(g)) => {
                    let pts: Vec<(f64, f64)> = g.iter().map(|p| (p.t, p.value)).collect();
                    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                        return Err(schema("mu.density.grid", "t values must be strictly increasing"));
                    }
                    DensityKind::Grid(pts)
                }
            };
            Some(Density { kind, scale: d.scale })
        }
    };

    let mut radius = atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
    if let Some(Density {
        kind: DensityKind::Grid(pts),
        ..
    }) = &density
    {
        radius = pts.iter().map(|p| p.0.abs()).fold(radius, f64::max);
    }
    let a_trunc = support.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
    let mu = TemperedMeasure::from_unsorted(
        atoms,
        density,
        file.mu.degree_bound as u32,
        radius,
        format!("user data, atoms up to |t| = {radius}"),
    )?;
    let a = SummationFunction::from_unsorted(support, file.a.growth_constant, a_trunc)?;
    FSPair::new(file.name, mu, a, file.antipodal, file.strip_constant)
}

pub fn load_pair(path: impl AsRef<Path>) -> Result<FSPair> {
    let text = std::fs::read_to_string(path)?;
    pair_from_json(&text)
}

/// Serialises a pair to the file schema. Tail models are not representable
/// and are dropped.
pub fn pair_to_json(pair: &FSPair) -> Result<String> {
    let density = pair.mu.density.as_ref().map(|d| match &d.kind {
        DensityKind::RTanhPiR => DensityFile {
            kind: DensityKindFile::RTanhPiR,
            scale: d.scale,
            grid: None,
        },
        DensityKind::Grid(pts) => DensityFile {
            kind: DensityKindFile::Grid,
            scale: d.scale,
            grid: Some(pts.iter().map(|&(t, value)| GridPoint { t, value }).collect()),
        },
    });
    let file = PairFile {
        name: pair.name.clone(),
        antipodal: pair.antipodal,
        strip_constant: pair.strip_constant,
        mu: MuFile {
            degree_bound: pair.mu.degree_bound as i64,
            atoms: pair
                .mu
                .atoms
                .iter()
                .map(|a| AtomFile {
                    t: a.location,
                    re: a.weight.re,
                    im: a.weight.im,
                })
                .collect(),
            density,
        },
        a: AFile {
            growth_constant: pair.a.growth_constant,
            support: pair
                .a
                .support
                .iter()
                .map(|&(lambda, v)| SupportFile {
                    lambda,
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        },
    };
    Ok(serde_json::to_string_pretty(&file)?)
}
