//! Non-intrusive polynomial chaos expansion of the saddle-node indicator
//! tau(zeta): regression fitting, truncation control, surrogate
//! evaluation, and the downstream PDF / CDF / probability estimates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::bifurcation::BifurcationError;
use crate::orthopoly::OrthoPolyFamily;
use crate::quadrature::GaussHermiteRule;

#[derive(Debug, Error)]
pub enum PceError {
    #[error("design matrix is rank deficient ({used} usable samples for order {order})")]
    RankDeficient { used: usize, order: usize },
    #[error("no convergence up to order {0}")]
    NoConvergence(usize),
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitMeta {
    /// Samples that entered the regression.
    pub samples: usize,
    /// Samples excluded because tau was undefined (no critical point).
    pub degenerate: usize,
    pub residual_rms: f64,
    pub seed: u64,
}

/// Truncated expansion `tau_tilde(zeta) = sum a_n P_n(zeta)`.
#[derive(Debug, Clone)]
pub struct PceModel {
    pub family: OrthoPolyFamily,
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub fit_meta: FitMeta,
}

/// Seeded tau evaluations at standard-normal draws, reusable across
/// truncation orders.
#[derive(Debug, Clone)]
pub struct TauSampleSet {
    /// (zeta, tau) pairs where tau was defined.
    pub points: Vec<(f64, f64)>,
    /// Draws where the realization had no positive critical point.
    pub degenerate: usize,
    pub total: usize,
    pub seed: u64,
}

impl TauSampleSet {
    pub fn degenerate_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.total as f64
        }
    }
}

/// Evaluates `tau` at `count` seeded N(0,1) draws. Degenerate draws are
/// recorded and excluded.
pub fn sample_tau<F>(mut tau: F, count: usize, seed: u64) -> Result<TauSampleSet, PceError>
where
    F: FnMut(f64) -> Result<f64, BifurcationError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut degenerate = 0;
    for _ in 0..count {
        let zeta: f64 = rng.sample(StandardNormal);
        match tau(zeta) {
            Ok(t) => points.push((zeta, t)),
            Err(BifurcationError::DegenerateShape { .. }) => degenerate += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(TauSampleSet { points, degenerate, total: count, seed })
}

/// Least-squares fit of the expansion coefficients from precomputed
/// samples.
pub fn fit_from_samples(
    samples: &TauSampleSet,
    family: OrthoPolyFamily,
    order: usize,
) -> Result<PceModel, PceError> {
    let used = samples.points.len();
    if used <= order {
        return Err(PceError::RankDeficient { used, order });
    }
    let cols = order + 1;
    let design = DMatrix::from_fn(used, cols, |i, n| family.eval(n, samples.points[i].0));
    let rhs = DVector::from_fn(used, |i, _| samples.points[i].1);

    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s < 1e-12 * s_max) {
        return Err(PceError::RankDeficient { used, order });
    }
    let coeffs = svd.solve(&rhs, 1e-14).expect("svd solve");
    let residual = &design * &coeffs - &rhs;
    let residual_rms = (residual.norm_squared() / used as f64).sqrt();

    Ok(PceModel {
        family,
        order,
        coeffs: coeffs.iter().copied().collect(),
        fit_meta: FitMeta {
            samples: used,
            degenerate: samples.degenerate,
            residual_rms,
            seed: samples.seed,
        },
    })
}

/// Draws `samples` seeded N(0,1) points and solves the regression of
/// tau onto the basis.
pub fn fit_pce<F>(
    tau: F,
    family: OrthoPolyFamily,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<PceModel, PceError>
where
    F: FnMut(f64) -> Result<f64, BifurcationError>,
{
    let set = sample_tau(tau, samples, seed)?;
    fit_from_samples(&set, family, order)
}

impl PceModel {
    pub fn evaluate(&self, zeta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, &a)| a * self.family.eval(n, zeta))
            .sum()
    }

    /// Maximum of `|a_N P_N(zeta)|` over a 1001-point grid on the range,
    /// the last-term magnitude used as the truncation stopping heuristic.
    pub fn truncation_gap(&self, range: (f64, f64)) -> f64 {
        let a_last = *self.coeffs.last().unwrap_or(&0.0);
        let (lo, hi) = range;
        (0..=1000)
            .map(|i| {
                let z = lo + (hi - lo) * i as f64 / 1000.0;
                (a_last * self.family.eval(self.order, z)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Regression sample count for a given order: ten-fold oversampling,
/// at least 100.
pub fn default_samples(order: usize) -> usize {
    (10 * (order + 1)).max(100)
}

/// Increases the order from 2 until a probe fit one order higher has a
/// negligible last term on [-4, 4] (magnitude below `precision`), i.e.
/// until raising the order would change nothing. Tau evaluations are
/// cached and shared across orders (same seed, same draw prefix).
pub fn fit_adaptive<F>(
    mut tau: F,
    family: OrthoPolyFamily,
    precision: f64,
    max_order: usize,
    seed: u64,
) -> Result<PceModel, PceError>
where
    F: FnMut(f64) -> Result<f64, BifurcationError>,
{
    assert!(max_order >= 2);
    assert!(precision > 0.0);
    let mut cache: Option<TauSampleSet> = None;
    for order in 2..=max_order {
        let want = default_samples(order + 1);
        let need_refresh = !cache.as_ref().is_some_and(|c| c.total >= want);
        if need_refresh {
            // Redraw from the same seed: the prefix of draws is identical,
            // so earlier evaluations are effectively reused.
            cache = Some(sample_tau(&mut tau, want, seed)?);
        }
        let set = cache.as_ref().unwrap();
        let probe = fit_from_samples(set, family, order + 1)?;
        if probe.truncation_gap((-4.0, 4.0)) < precision {
            return fit_from_samples(set, family, order);
        }
    }
    Err(PceError::NoConvergence(max_order))
}

/// Strict-positivity indicator.
pub fn pos(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Real roots of the surrogate polynomial on [lo, hi] by grid bracketing
/// plus bisection.
fn surrogate_roots(model: &PceModel, lo: f64, hi: f64) -> Vec<f64> {
    let grid = 4000;
    let mut roots = Vec::new();
    let at = |z: f64| model.evaluate(z);
    let mut prev_z = lo;
    let mut prev_v = at(lo);
    for i in 1..=grid {
        let z = lo + (hi - lo) * i as f64 / grid as f64;
        let v = at(z);
        if prev_v == 0.0 {
            roots.push(prev_z);
        } else if prev_v * v < 0.0 {
            let (mut a, mut b) = (prev_z, z);
            let mut va = prev_v;
            while b - a > 1e-13 {
                let mid = 0.5 * (a + b);
                let vm = at(mid);
                if vm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if va * vm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    va = vm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_z = z;
        prev_v = v;
    }
    if at(hi) == 0.0 {
        roots.push(hi);
    }
    roots
}

/// `P(tau_tilde(zeta) > 0)` for `zeta ~ N(0,1)`.
///
/// With `refinement` on (the default path) the sign set of the low-degree
/// polynomial is resolved exactly by root bracketing and the probability
/// is a sum of normal CDF differences; otherwise a plain Gauss–Hermite
/// sum over the discontinuous indicator is used.
pub fn resilience_probability(model: &PceModel, rule: &GaussHermiteRule, refinement: bool) -> f64 {
    if !refinement {
        return rule.expect(|z| pos(model.evaluate(z)));
    }
    let (lo, hi) = (-8.0, 8.0);
    let roots = surrogate_roots(model, lo, hi);
    let normal = std_normal();
    let mut prob = 0.0;
    let mut edges = Vec::with_capacity(roots.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend(&roots);
    edges.push(f64::INFINITY);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let probe = if a.is_infinite() {
            if b.is_infinite() { 0.0 } else { b - 1.0 }
        } else if b.is_infinite() {
            a + 1.0
        } else {
            0.5 * (a + b)
        };
        if model.evaluate(probe) > 0.0 {
            let cdf_b = if b.is_infinite() { 1.0 } else { normal.cdf(b) };
            let cdf_a = if a.is_infinite() { 0.0 } else { normal.cdf(a) };
            prob += cdf_b - cdf_a;
        }
    }
    prob.clamp(0.0, 1.0)
}

/// Histogram PDF (density-normalized) and empirical CDF of the surrogate
/// pushed forward through seeded normal draws. Curves are (tau, value)
/// pairs at bin centers / bin right edges.
pub fn tau_distribution(
    model: &PceModel,
    draws: usize,
    bins: usize,
    seed: u64,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    assert!(draws >= 1 && bins >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..draws)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            model.evaluate(z)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let (min, max) = (values[0], values[values.len() - 1]);
    let width = ((max - min) / bins as f64).max(f64::MIN_POSITIVE);

    let mut counts = vec![0usize; bins];
    for &v in &values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = draws as f64;
    let pdf = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (min + (i as f64 + 0.5) * width, c as f64 / (total * width)))
        .collect();
    let mut cum = 0.0;
    let cdf = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            cum += c as f64 / total;
            (min + (i as f64 + 1.0) * width, cum)
        })
        .collect();
    (pdf, cdf)
}

/// Draws the surrogate at seeded normal points, for empirical-CDF
/// comparisons across orders.
pub fn surrogate_samples(model: &PceModel, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            model.evaluate(z)
        })
        .collect()
}

/// Two-sample Kolmogorov–Smirnov statistic: the sup distance between the
/// empirical CDFs.
pub fn cdf_sup_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut sup: f64 = 0.0;
    // Advance past every sample equal to the current value in both arrays
    // before comparing, so ties contribute no spurious distance.
    while i < sa.len() || j < sb.len() {
        let x = match (sa.get(i), sb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup.min(1.0)
}
