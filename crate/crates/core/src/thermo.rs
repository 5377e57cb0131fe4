//! Spectrum-level thermal statistics and the ideal degenerate probe.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// Absolute tolerance below which two energies are the same level.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Energy levels with integer degeneracies, strictly ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    levels: Vec<(T, u128)>,
    total_dim: u128,
}

impl<T: Real> Spectrum<T> {
    /// Validates an already merged, ascending level list.
    pub fn new(levels: Vec<(T, u128)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpectrum("no levels".into()));
        }
        let tol = T::lit(MERGE_TOLERANCE);
        let mut total: u128 = 0;
        for (i, &(e, g)) in levels.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::InvalidSpectrum(format!("level {i} has energy {e}")));
            }
            if g == 0 {
                return Err(Error::InvalidSpectrum(format!("level {i} has degeneracy 0")));
            }
            if i > 0 && e - levels[i - 1].0 <= tol {
                return Err(Error::InvalidSpectrum(format!(
                    "levels {} and {i} are not separated by more than {MERGE_TOLERANCE}",
                    i - 1
                )));
            }
            total = total
                .checked_add(g)
                .ok_or_else(|| Error::InvalidSpectrum("total dimension overflows u128".into()))?;
        }
        Ok(Spectrum {
            levels,
            total_dim: total,
        })
    }

    /// Sorts and merges `(energy, degeneracy)` pairs; energies are kept as given.
    pub fn from_weighted<I: IntoIterator<Item = (T, u128)>>(pairs: I) -> Result<Self> {
        let mut v: Vec<(T, u128)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        if v.iter().any(|p| !p.0.is_finite()) {
            return Err(Error::InvalidSpectrum("non-finite energy".into()));
        }
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite energies"));
        let tol = T::lit(MERGE_TOLERANCE);
        let mut out: Vec<(T, u128)> = Vec::with_capacity(v.len());
        let mut anchor = T::zero();
        for (e, g) in v {
            match out.last_mut() {
                Some(last) if e - anchor <= tol => {
                    last.1 = last.1.checked_add(g).ok_or_else(|| {
                        Error::InvalidSpectrum("degeneracy overflows u128".into())
                    })?;
                }
                _ => {
                    anchor = e;
                    out.push((e, g));
                }
            }
        }
        Self::new(out)
    }

    /// Builds a spectrum from individual state energies, ground shifted to 0.
    pub fn from_raw(energies: &[T]) -> Result<Self> {
        let ground = energies.iter().copied().fold(T::infinity(), T::min);
        Self::from_weighted(energies.iter().map(|&e| (e - ground, 1)))
    }

    pub fn levels(&self) -> &[(T, u128)] {
        &self.levels
    }

    pub fn total_dim(&self) -> u128 {
        self.total_dim
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn ground_energy(&self) -> T {
        self.levels[0].0
    }

    /// Same spectrum with every energy moved by `c`.
    pub fn shifted_by(&self, c: T) -> Self {
        Spectrum {
            levels: self.levels.iter().map(|&(e, g)| (e + c, g)).collect(),
            total_dim: self.total_dim,
        }
    }

    /// Ground level moved to energy 0.
    pub fn shifted(&self) -> Self {
        self.shifted_by(-self.ground_energy())
    }

    /// Every energy multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return domain("scale factor must be positive");
        }
        Self::new(self.levels.iter().map(|&(e, g)| (e * lambda, g)).collect())
    }

    fn log_weights(&self, beta: T) -> Vec<T> {
        self.levels
            .iter()
            .map(|&(e, g)| T::lit((g as f64).ln()) - beta * e)
            .collect()
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        domain(format!("beta must be positive and finite, got {beta}"))
    }
}

impl<T: Real> Serialize for Spectrum<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let g0 = self.ground_energy();
        let rows: Vec<(f64, u128)> = self
            .levels
            .iter()
            .map(|&(e, g)| ((e - g0).to_f64_lossy(), g))
            .collect();
        rows.serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Spectrum<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<(f64, u128)> = Vec::deserialize(d)?;
        let levels = rows
            .into_iter()
            .map(|(e, g)| {
                T::from_f64(e)
                    .map(|t| (t, g))
                    .ok_or_else(|| D::Error::custom("energy not representable"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Spectrum::new(levels).map_err(D::Error::custom)
    }
}

/// Thermal summary at one inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalStats<T> {
    pub beta: T,
    pub log_partition: T,
    pub mean_energy: T,
    pub energy_variance: T,
    pub heat_capacity: T,
}

impl<T: Real> ThermalStats<T> {
    pub fn from_moments(beta: T, log_partition: T, mean_energy: T, energy_variance: T) -> Self {
        let var = energy_variance.max(T::zero());
        ThermalStats {
            beta,
            log_partition,
            mean_energy,
            energy_variance: var,
            heat_capacity: beta * beta * var,
        }
    }
}

/// Gibbs population of each level.
pub fn gibbs_populations<T: Real>(s: &Spectrum<T>, beta: T) -> Result<Vec<(usize, T)>> {
    check_beta(beta)?;
    let lw = s.log_weights(beta);
    let lz = log_sum_exp(&lw);
    Ok(lw.iter().map(|&w| (w - lz).exp()).enumerate().collect())
}

/// `ln Z`, mean energy, variance and heat capacity of a spectrum.
pub fn thermal_stats<T: Real>(s: &Spectrum<T>, beta: T) -> Result<ThermalStats<T>> {
    check_beta(beta)?;
    let lw = s.log_weights(beta);
    let lz = log_sum_exp(&lw);
    let p: Vec<T> = lw.iter().map(|&w| (w - lz).exp()).collect();
    let mean: T = p
        .iter()
        .zip(&s.levels)
        .map(|(&pi, &(e, _))| pi * e)
        .sum();
    let var: T = p
        .iter()
        .zip(&s.levels)
        .map(|(&pi, &(e, _))| pi * (e - mean) * (e - mean))
        .sum();
    Ok(ThermalStats::from_moments(beta, lz, mean, var))
}

/// One ground state and a `(dim − 1)`-fold degenerate level at `gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateModel {
    pub dim: u128,
    pub gap: f64,
}

impl DegenerateModel {
    pub fn new(dim: u128, gap: f64) -> Result<Self> {
        if dim < 2 {
            return domain("degenerate model needs dim >= 2");
        }
        if !(gap > 0.0 && gap.is_finite()) {
            return domain("gap must be positive");
        }
        Ok(DegenerateModel { dim, gap })
    }

    pub fn spectrum(&self) -> Spectrum<f64> {
        Spectrum::new(vec![(0.0, 1), (self.gap, self.dim - 1)]).expect("valid two-level spectrum")
    }

    /// Heat capacity at β = 1, `E² / (4 cosh²((E − ln(D−1))/2))`.
    pub fn heat_capacity(&self) -> f64 {
        let l = ((self.dim - 1) as f64).ln();
        let c = (0.5 * (self.gap - l)).cosh();
        self.gap * self.gap / (4.0 * c * c)
    }
}

/// Root of `x + ln((x−2)/(x+2)) = L` with `L = ln(D − 1)`.
pub fn optimal_gap_ln(l: f64) -> Result<f64> {
    if !(l >= std::f64::consts::LN_2 - 1e-15) || !l.is_finite() {
        return domain("optimal gap needs D >= 3");
    }
    let f = |x: f64| x + ((x - 2.0) / (x + 2.0)).ln() - l;
    let df = |x: f64| 1.0 + 4.0 / (x * x - 4.0);
    let (mut lo, mut hi) = (2.0 + 1e-12, 2.0 + l + 20.0);
    let mut x = (2.0 + l).max(2.5).min(hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = fx / df(x);
        let mut nx = x - step;
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() <= 1e-15 * nx.max(1.0) || hi - lo < 1e-13 {
            return Ok(nx);
        }
        x = nx;
    }
    Ok(x)
}

fn ln_dm1(d: u128) -> Result<f64> {
    if d < 3 {
        return domain(format!("D = {d} is below 3"));
    }
    Ok(((d - 1) as f64).ln())
}

/// Optimal excited-level gap of the degenerate model of dimension `d`.
pub fn optimal_gap(d: u128) -> Result<f64> {
    optimal_gap_ln(ln_dm1(d)?)
}

/// `C_opt` given `L = ln(D − 1)`.
pub fn c_opt_ln(l: f64) -> Result<f64> {
    let x = optimal_gap_ln(l)?;
    let c = (0.5 * (x - l)).cosh();
    Ok(x * x / (4.0 * c * c))
}

/// Largest heat capacity of any spectrum of dimension `d` (β = 1).
pub fn c_opt(d: u128) -> Result<f64> {
    c_opt_ln(ln_dm1(d)?)
}

/// `ln(2^n − 1)` without forming `2^n`.
pub fn ln_pow2_minus_1(n: u32) -> f64 {
    n as f64 * std::f64::consts::LN_2 + (-(0.5f64).powi(n as i32)).ln_1p()
}

/// `C_opt(2^n)` for any `n ≥ 2`.
pub fn c_opt_pow2(n: u32) -> Result<f64> {
    if n < 2 {
        return domain("C_opt(2^n) needs n >= 2");
    }
    c_opt_ln(ln_pow2_minus_1(n))
}

/// Minimal relative mean-square temperature error `1/(νC)`.
pub fn estimation_error_bound(c: f64, nu: u64) -> Result<f64> {
    if !(c > 0.0) {
        return domain("heat capacity must be positive");
    }
    if nu == 0 {
        return domain("need at least one measurement");
    }
    Ok(1.0 / (nu as f64 * c))
}

/// Level placed at `scale·E + offset` above a scanned gap `E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperLevel {
    pub scale: f64,
    pub offset: f64,
    pub degeneracy: u128,
}

/// Spectrum `{(0, g0), (E, g1), upper levels...}` parametrized by the gap `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapTemplate {
    pub ground_degeneracy: u128,
    pub first_degeneracy: u128,
    pub upper: Vec<UpperLevel>,
}

impl GapTemplate {
    pub fn two_level(first_degeneracy: u128) -> Self {
        GapTemplate {
            ground_degeneracy: 1,
            first_degeneracy,
            upper: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ground_degeneracy == 0 || self.first_degeneracy == 0 {
            return domain("template degeneracies must be positive");
        }
        for u in &self.upper {
            if !(u.scale >= 1.0 && u.offset >= 0.0) || u.degeneracy == 0 {
                return domain("upper levels need scale >= 1, offset >= 0, degeneracy >= 1");
            }
        }
        Ok(())
    }

    pub fn render(&self, gap: f64) -> Result<Spectrum<f64>> {
        let mut v = vec![(0.0, self.ground_degeneracy), (gap, self.first_degeneracy)];
        v.extend(self.upper.iter().map(|u| (u.scale * gap + u.offset, u.degeneracy)));
        Spectrum::from_weighted(v)
    }

    fn log_dim(&self) -> f64 {
        let total: f64 = (self.ground_degeneracy + self.first_degeneracy) as f64
            + self.upper.iter().map(|u| u.degeneracy as f64).sum::<f64>();
        total.ln()
    }

    fn c_at(&self, gap: f64) -> f64 {
        self.render(gap)
            .and_then(|s| thermal_stats(&s, 1.0))
            .map(|t| t.heat_capacity)
            .unwrap_or(f64::NEG_INFINITY)
    }
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Best gap and heat capacity of a template at β = 1.
pub fn max_c_over_gap(t: &GapTemplate) -> Result<(f64, f64)> {
    t.validate()?;
    let lo = 1e-4;
    let hi = (4.0 * t.log_dim() + 20.0).max(50.0);
    let n = 600;
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&e| t.c_at(e)).collect();
    let mut k = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[k] {
            k = i;
        }
    }
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(n)];
    let (x, c) = golden_section_max(|e| t.c_at(e), a, b, 1e-10);
    if c >= vals[k] {
        Ok((x, c))
    } else {
        Ok((grid[k], vals[k]))
    }
}

/// Largest heat capacity of a single two-level system (≈ 0.4392).
pub fn two_level_max() -> (f64, f64) {
    max_c_over_gap(&GapTemplate::two_level(1)).expect("valid template")
}
