//! Exact thermal statistics by visiting all `2^N` configurations.
//!
//! The tour follows the binary-reflected Gray code `g(t) = t ^ (t >> 1)`, so
//! consecutive states differ by one spin and the energy is updated from local
//! fields in `O(degree)`. The tour is cut into contiguous segments whose
//! boundaries depend only on `N` and which are reduced in order, so every
//! result is independent of the worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SpinHamiltonian;
use crate::scalar::Real;
use crate::thermo::{gibbs_populations, Spectrum, ThermalStats};

pub const MAX_STATS_SPINS: usize = 30;
pub const MAX_SPECTRUM_SPINS: usize = 26;
const MAX_SEGMENT_BITS: usize = 6;
// segments hold at least 2^12 states
const MIN_SEGMENT_LEN_BITS: usize = 12;

/// `∂C/∂θ` for every field and every topology edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientRecord<T> {
    pub d_c_d_field: Vec<T>,
    pub d_c_d_coupling: BTreeMap<(usize, usize), T>,
}

impl<T: Real> GradientRecord<T> {
    /// Fields first, then couplings in topology edge order.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = self.d_c_d_field.clone();
        v.extend(self.d_c_d_coupling.values().copied());
        v
    }

    pub fn norm(&self) -> T {
        self.to_vec().iter().map(|&x| x * x).sum::<T>().sqrt()
    }
}

/// Boltzmann-weighted sums about a reference energy `E_0`, with
/// `w = e^{−β(E−E_0)}`: `s[m] = Σ w (E−E_0)^m` and, per parameter,
/// `t[k][m] = Σ w f_k (E−E_0)^m` where `f_k = ∂E/∂θ_k = ±1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator<T> {
    pub s: [T; 4],
    pub t: Vec<[T; 3]>,
}

impl<T: Real> MomentAccumulator<T> {
    fn zeros(n_params: usize) -> Self {
        MomentAccumulator {
            s: [T::zero(); 4],
            t: vec![[T::zero(); 3]; n_params],
        }
    }

    fn merge(&mut self, o: &Self) {
        for m in 0..4 {
            self.s[m] = self.s[m] + o.s[m];
        }
        for (a, b) in self.t.iter_mut().zip(&o.t) {
            for m in 0..3 {
                a[m] = a[m] + b[m];
            }
        }
    }
}

/// Statistics plus the third central moment of the energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedMoments<T> {
    pub stats: ThermalStats<T>,
    pub third_central_moment: T,
}

impl<T: Real> EnumeratedMoments<T> {
    /// `dC/dβ = 2β Var − β² ⟨(E − ⟨E⟩)³⟩`.
    pub fn heat_capacity_beta_derivative(&self) -> T {
        let b = self.stats.beta;
        (b + b) * self.stats.energy_variance - b * b * self.third_central_moment
    }
}

struct Engine<T> {
    n: usize,
    fields: Vec<T>,
    adj: Vec<Vec<(usize, T)>>,
    // parameter indices whose f_k flips sign when spin i flips
    incident: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

fn gray(t: u64) -> u64 {
    t ^ (t >> 1)
}

impl<T: Real> Engine<T> {
    fn new(h: &SpinHamiltonian<T>, cap: usize) -> Result<Self> {
        let n = h.n_spins();
        if n > cap {
            return Err(Error::Size(format!("{n} spins exceeds the enumeration cap of {cap}")));
        }
        let edges: Vec<(usize, usize)> = h.topology().edges().collect();
        let mut incident: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (k, &(i, j)) in edges.iter().enumerate() {
            incident[i].push(n + k);
            incident[j].push(n + k);
        }
        Ok(Engine {
            n,
            fields: h.fields().to_vec(),
            adj: h.adjacency(),
            incident,
            edges,
        })
    }

    fn n_params(&self) -> usize {
        self.n + self.edges.len()
    }

    fn segments(&self) -> Vec<(u64, u64)> {
        let bits = self.n.saturating_sub(MIN_SEGMENT_LEN_BITS).min(MAX_SEGMENT_BITS);
        let len = 1u64 << (self.n - bits);
        (0..1u64 << bits).map(|s| (s * len, (s + 1) * len)).collect()
    }

    fn run<A, F>(&self, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(u64, u64) -> A + Sync,
    {
        let segs = self.segments();
        if segs.len() == 1 {
            vec![f(segs[0].0, segs[0].1)]
        } else {
            segs.par_iter().map(|&(a, b)| f(a, b)).collect()
        }
    }

    fn spins(&self, cfg: u64) -> Vec<T> {
        (0..self.n)
            .map(|i| if cfg >> i & 1 == 1 { T::one() } else { -T::one() })
            .collect()
    }

    fn local_fields(&self, sigma: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.adj[i]
                    .iter()
                    .fold(self.fields[i], |acc, &(j, v)| acc + v * sigma[j])
            })
            .collect()
    }

    fn energy(&self, sigma: &[T]) -> T {
        let mut e = T::zero();
        for i in 0..self.n {
            e = e + self.fields[i] * sigma[i];
            for &(j, v) in &self.adj[i] {
                if j > i {
                    e = e + v * sigma[i] * sigma[j];
                }
            }
        }
        e
    }

    /// Visits `g(t)` for `t ∈ [start, end)`; `visit` receives the energy and
    /// the index of the spin flipped to reach it (`None` for the first state).
    fn tour<F: FnMut(T, Option<usize>)>(&self, start: u64, end: u64, mut visit: F) -> (Vec<T>, T) {
        let mut sigma = self.spins(gray(start));
        let mut lf = self.local_fields(&sigma);
        let mut e = self.energy(&sigma);
        visit(e, None);
        let two = T::one() + T::one();
        for t in start + 1..end {
            let i = t.trailing_zeros() as usize;
            let s = sigma[i];
            e = e - two * s * lf[i];
            sigma[i] = -s;
            let d = -two * s;
            for &(j, v) in &self.adj[i] {
                lf[j] = lf[j] + v * d;
            }
            visit(e, Some(i));
        }
        (sigma, e)
    }

    fn min_energy(&self) -> T {
        self.run(|a, b| {
            let mut m = T::infinity();
            self.tour(a, b, |e, _| m = m.min(e));
            m
        })
        .into_iter()
        .fold(T::infinity(), T::min)
    }

    /// `f_k` only changes sign when spin `i` or `j` of parameter `k` flips,
    /// so each `t_m[k]` is the signed sum of running-total differences
    /// between consecutive sign changes; the cost per state is `O(degree)`.
    fn moments(&self, beta: T, e0: T, with_params: bool) -> MomentAccumulator<T> {
        let np = if with_params { self.n_params() } else { 0 };
        let parts = self.run(|a, b| {
            let mut acc = MomentAccumulator::zeros(np);
            let mut sign: Vec<T> = Vec::new();
            // running totals at the last sign change of each parameter
            let mut mark = vec![[T::zero(); 3]; np];
            if with_params {
                let sigma = self.spins(gray(a));
                sign = sigma.clone();
                sign.extend(self.edges.iter().map(|&(i, j)| sigma[i] * sigma[j]));
            }
            let MomentAccumulator { s, t } = &mut acc;
            self.tour(a, b, |e, flipped| {
                if let Some(i) = flipped.filter(|_| with_params) {
                    let now = [s[0], s[1], s[2]];
                    for &k in &self.incident[i] {
                        let f = sign[k];
                        let (tk, mk) = (&mut t[k], &mut mark[k]);
                        for m in 0..3 {
                            tk[m] = tk[m] + f * (now[m] - mk[m]);
                        }
                        *mk = now;
                        sign[k] = -f;
                    }
                }
                let r = e - e0;
                let w = (-beta * r).exp();
                let w1 = w * r;
                let w2 = w1 * r;
                s[0] = s[0] + w;
                s[1] = s[1] + w1;
                s[2] = s[2] + w2;
                s[3] = s[3] + w2 * r;
            });
            for k in 0..np {
                for m in 0..3 {
                    t[k][m] = t[k][m] + sign[k] * (s[m] - mark[k][m]);
                }
            }
            acc
        });
        let mut total = MomentAccumulator::zeros(np);
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be positive, got {beta}")))
    }
}

struct Central<T> {
    stats: ThermalStats<T>,
    mean_r: T,
    m2: T,
    m3_central: T,
}

fn central<T: Real>(acc: &MomentAccumulator<T>, beta: T, e0: T) -> Central<T> {
    let z = acc.s[0];
    let mean_r = acc.s[1] / z;
    let m2 = acc.s[2] / z;
    let m3 = acc.s[3] / z;
    let var = m2 - mean_r * mean_r;
    let three = T::lit(3.0);
    let m3c = m3 - three * mean_r * m2 + (three - T::one()) * mean_r * mean_r * mean_r;
    Central {
        stats: ThermalStats::from_moments(beta, z.ln() - beta * e0, e0 + mean_r, var),
        mean_r,
        m2,
        m3_central: m3c,
    }
}

/// Exact `ln Z`, `⟨E⟩`, `Var E` and `C`.
pub fn enumerate_stats<T: Real>(h: &SpinHamiltonian<T>, beta: T) -> Result<ThermalStats<T>> {
    enumerate_moments(h, beta).map(|m| m.stats)
}

/// Exact statistics together with the third central moment.
pub fn enumerate_moments<T: Real>(h: &SpinHamiltonian<T>, beta: T) -> Result<EnumeratedMoments<T>> {
    check_beta(beta)?;
    let eng = Engine::new(h, MAX_STATS_SPINS)?;
    let e0 = eng.min_energy();
    let acc = eng.moments(beta, e0, false);
    let c = central(&acc, beta, e0);
    Ok(EnumeratedMoments {
        stats: c.stats,
        third_central_moment: c.m3_central,
    })
}

/// Exact heat capacity and its gradient with respect to every field and
/// every topology edge coupling.
pub fn enumerate_gradient<T: Real>(
    h: &SpinHamiltonian<T>,
    beta: T,
) -> Result<(ThermalStats<T>, GradientRecord<T>)> {
    check_beta(beta)?;
    let eng = Engine::new(h, MAX_STATS_SPINS)?;
    let e0 = eng.min_energy();
    let acc = eng.moments(beta, e0, true);
    let c = central(&acc, beta, e0);
    let z = acc.s[0];
    let two = T::one() + T::one();
    let grad: Vec<T> = (0..eng.n_params())
        .map(|k| {
            let f = acc.t[k][0] / z;
            let ef = acc.t[k][1] / z;
            let e2f = acc.t[k][2] / z;
            let d1 = f - beta * (ef - c.mean_r * f);
            let d2 = two * ef - beta * (e2f - c.m2 * f);
            beta * beta * (d2 - two * c.mean_r * d1)
        })
        .collect();
    let rec = GradientRecord {
        d_c_d_field: grad[..eng.n].to_vec(),
        d_c_d_coupling: eng.edges.iter().copied().zip(grad[eng.n..].iter().copied()).collect(),
    };
    Ok((c.stats, rec))
}

/// Every configuration energy merged into levels, ground shifted to 0.
pub fn enumerate_spectrum<T: Real>(h: &SpinHamiltonian<T>) -> Result<Spectrum<T>> {
    let eng = Engine::new(h, MAX_SPECTRUM_SPINS)?;
    let parts = eng.run(|a, b| {
        let mut v = Vec::with_capacity((b - a) as usize);
        eng.tour(a, b, |e, _| v.push(e));
        v
    });
    let all: Vec<T> = parts.into_iter().flatten().collect();
    Spectrum::from_raw(&all)
}

/// Thermal weight of the ground level, the first excited level and the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStatistics<T> {
    pub p_ground: T,
    pub p_first_excited: T,
    pub p_tail: T,
}

pub fn level_statistics<T: Real>(h: &SpinHamiltonian<T>, beta: T) -> Result<LevelStatistics<T>> {
    let s = enumerate_spectrum(h)?;
    let p = gibbs_populations(&s, beta)?;
    let p0 = p[0].1;
    let p1 = p.get(1).map(|q| q.1).unwrap_or_else(T::zero);
    let tail: T = p.iter().skip(2).map(|q| q.1).sum();
    Ok(LevelStatistics {
        p_ground: p0,
        p_first_excited: p1,
        p_tail: tail,
    })
}

/// Incrementally tracked energy after one full tour, and the directly
/// evaluated energy of the final configuration.
pub fn gray_code_drift<T: Real>(h: &SpinHamiltonian<T>) -> Result<(T, T)> {
    let eng = Engine::new(h, MAX_STATS_SPINS)?;
    let end = 1u64 << eng.n;
    let (sigma, e) = eng.tour(0, end, |_, _| {});
    Ok((e, eng.energy(&sigma)))
}
