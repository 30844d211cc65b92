//! Saddle-node detection on a scalar map: locate the smallest positive
//! critical point rho, evaluate the indicator tau = Xi(rho), and classify
//! the realization as resilient or not.

use thiserror::Error;

use crate::meanfield::{realize_xi, MeanFieldMoments, XiRealization};
use crate::quadrature::QuadError;

/// Absolute tie band around tau = 0.
pub const DEGENERATE_TAU_TOL: f64 = 1e-12;
/// Default number of scan points for the derivative sign search.
pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum BifurcationError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("map evaluated non-finite at x = {0}")]
    NonFiniteValue(f64),
    #[error("no positive critical point in (0, {search_hi}]")]
    DegenerateShape { search_hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResilienceStatus {
    Resilient,
    NonResilient,
    /// tau within the tie band of the bifurcation point.
    Degenerate,
}

/// Outcome of classifying one Xi realization.
#[derive(Debug, Clone, Copy)]
pub struct ResilienceIndicator {
    /// Smallest positive critical point, when one exists in range.
    pub rho: Option<f64>,
    /// Xi(rho); absent when rho is absent.
    pub tau: Option<f64>,
    pub status: ResilienceStatus,
    /// The normal draw that generated the realization.
    pub zeta: f64,
}

/// Central difference (h(x+step) - h(x-step)) / (2 step).
pub fn derivative<F>(h: F, x: f64, step: f64) -> Result<f64, BifurcationError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    assert!(step > 0.0);
    let hi = h(x + step)?;
    let lo = h(x - step)?;
    let d = (hi - lo) / (2.0 * step);
    if !d.is_finite() {
        return Err(BifurcationError::NonFiniteValue(x));
    }
    Ok(d)
}

fn fd_step(x: f64) -> f64 {
    1e-6 * x.max(1.0)
}

/// Scans Xi' on a uniform grid over (0, search_hi]; refines the first
/// sign change by bisection. Returns `None` when Xi' never changes sign
/// in range.
pub fn smallest_positive_root_of_derivative<F>(
    xi: F,
    search_hi: f64,
    grid_points: usize,
) -> Result<Option<f64>, BifurcationError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    assert!(search_hi > 0.0);
    assert!(grid_points >= 16);
    let dxi = |x: f64| derivative(&xi, x, fd_step(x));

    let step = search_hi / grid_points as f64;
    let mut prev_x = step;
    let mut prev_d = dxi(prev_x)?;
    for j in 2..=grid_points {
        let x = step * j as f64;
        let d = dxi(x)?;
        if prev_d == 0.0 {
            return Ok(Some(prev_x));
        }
        if prev_d * d <= 0.0 {
            // bisection on the derivative sign
            let (mut lo, mut hi) = (prev_x, x);
            let mut d_lo = prev_d;
            let tol = 1e-10 * search_hi;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let d_mid = dxi(mid)?;
                if d_mid == 0.0 {
                    return Ok(Some(mid));
                }
                if d_lo * d_mid < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    d_lo = d_mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_x = x;
        prev_d = d;
    }
    Ok(None)
}

/// Classifies a realization from a generic scalar map. Absence of a
/// positive critical point counts as resilient.
pub fn indicator_of_map<F>(
    xi: F,
    zeta: f64,
    search_hi: f64,
    grid_points: usize,
) -> Result<ResilienceIndicator, BifurcationError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    let rho = smallest_positive_root_of_derivative(&xi, search_hi, grid_points)?;
    let Some(rho) = rho else {
        return Ok(ResilienceIndicator { rho: None, tau: None, status: ResilienceStatus::Resilient, zeta });
    };
    let tau = xi(rho)?;
    if !tau.is_finite() {
        return Err(BifurcationError::NonFiniteValue(rho));
    }
    let status = if tau.abs() <= DEGENERATE_TAU_TOL {
        ResilienceStatus::Degenerate
    } else if tau > 0.0 {
        ResilienceStatus::Resilient
    } else {
        ResilienceStatus::NonResilient
    };
    Ok(ResilienceIndicator { rho: Some(rho), tau: Some(tau), status, zeta })
}

/// Classifies one mean-field realization.
pub fn indicator(
    xi_r: &XiRealization<'_>,
    search_hi: f64,
    grid_points: usize,
) -> Result<ResilienceIndicator, BifurcationError> {
    indicator_of_map(|x| xi_r.eval(x), xi_r.zeta, search_hi, grid_points)
}

/// Default upper bound of the critical-point search: just past the
/// carrying capacity when the model exposes one, otherwise 10.
pub fn default_search_hi(moments: &MeanFieldMoments) -> f64 {
    let model = moments.model();
    match model.capacity_hint {
        Some(k) => {
            let reach = model
                .a_params
                .iter()
                .map(|p| p.e * p.support.0.abs().max(p.support.1.abs()))
                .fold(0.0, f64::max);
            k * (1.0 + reach)
        }
        None => 10.0,
    }
}

/// tau as a function of the normal draw: the scalar the PCE fits.
/// An absent critical point surfaces as `DegenerateShape`.
pub fn tau_of_zeta(
    moments: &MeanFieldMoments,
    n: usize,
    m: usize,
    zeta: f64,
    search_hi: f64,
    grid_points: usize,
) -> Result<f64, BifurcationError> {
    let xi_r = realize_xi(moments, n, m, zeta);
    let ind = indicator(&xi_r, search_hi, grid_points)?;
    ind.tau.ok_or(BifurcationError::DegenerateShape { search_hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::make_case_study_model;
    use crate::meanfield::MeanFieldMoments;
    use approx::assert_relative_eq;

    fn cubic(c: f64, t: f64) -> impl Fn(f64) -> Result<f64, QuadError> {
        move |x| Ok(x.powi(3) - 3.0 * c * c * x + t)
    }

    #[test]
    fn central_difference() {
        let d = derivative(|x| Ok(x * x), 3.0, 1e-5).unwrap();
        assert_relative_eq!(d, 6.0, epsilon = 1e-8);
        let d = derivative(|_| Ok(4.2), 1.0, 1e-5).unwrap();
        assert_relative_eq!(d, 0.0);
    }

    #[test]
    fn derivative_matches_local_polynomial_fit() {
        // slope of case-study Xi at zeta=0, x=1, vs a degree-4 fit on a
        // symmetric stencil
        let model = make_case_study_model();
        let mom = MeanFieldMoments::with_resolution(model, 1.0, 12).unwrap();
        let xi_r = realize_xi(&mom, 100, 990, 0.0);
        let xi = |x: f64| xi_r.eval(x);

        let d = derivative(xi, 1.0, fd_step(1.0)).unwrap();

        // five-point stencil slope, exact for degree-4 polynomials
        let h = 1e-2;
        let v: Vec<f64> = (-2i32..=2).map(|i| xi(1.0 + i as f64 * h).unwrap()).collect();
        let fit = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h);
        assert_relative_eq!(d, fit, epsilon = 1e-6);
    }

    #[test]
    fn cubic_critical_point() {
        let rho = smallest_positive_root_of_derivative(cubic(1.0, 2.5), 4.0, 512)
            .unwrap()
            .unwrap();
        assert_relative_eq!(rho, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn monotone_map_has_no_critical_point() {
        let rho = smallest_positive_root_of_derivative(Ok, 4.0, 512).unwrap();
        assert!(rho.is_none());
    }

    #[test]
    fn classification_of_cubics() {
        let ind = indicator_of_map(cubic(1.0, 2.5), 0.0, 4.0, 512).unwrap();
        assert_relative_eq!(ind.rho.unwrap(), 1.0, epsilon = 1e-8);
        assert_relative_eq!(ind.tau.unwrap(), 0.5, epsilon = 1e-8);
        assert_eq!(ind.status, ResilienceStatus::Resilient);

        let ind = indicator_of_map(cubic(1.0, 1.0), 0.0, 4.0, 512).unwrap();
        assert_relative_eq!(ind.tau.unwrap(), -1.0, epsilon = 1e-8);
        assert_eq!(ind.status, ResilienceStatus::NonResilient);

        let ind = indicator_of_map(cubic(1.0, 2.0), 0.0, 4.0, 512).unwrap();
        assert!(ind.tau.unwrap().abs() <= 1e-8);
    }

    #[test]
    fn refined_root_brackets_derivative_sign_change() {
        let xi = cubic(0.7, 1.0);
        let rho = smallest_positive_root_of_derivative(&xi, 4.0, 512).unwrap().unwrap();
        let delta = 1e-8 * 4.0;
        let d = |x: f64| derivative(&xi, x, fd_step(x)).unwrap();
        assert!(d(rho - delta) * d(rho + delta) <= 0.0);
    }

    #[test]
    fn case_study_rho_matches_dense_scan() {
        let model = make_case_study_model();
        let mom = MeanFieldMoments::with_resolution(model, 1.0, 12).unwrap();
        let xi_r = realize_xi(&mom, 100, 990, 0.0);
        let hi = default_search_hi(&mom);

        let ind = indicator(&xi_r, hi, 256).unwrap();
        let rho = ind.rho.expect("case study has a local minimum");

        // dense grid argmin of Xi near the origin
        let scan_pts = 100_000;
        let mut best = (f64::INFINITY, 0.0);
        for j in 1..=scan_pts {
            let x = hi * j as f64 / scan_pts as f64;
            if x > rho * 3.0 {
                break;
            }
            let v = xi_r.eval(x).unwrap();
            if v < best.0 {
                best = (v, x);
            }
        }
        assert!((rho - best.1).abs() < 1e-4, "rho {rho} vs scan {}", best.1);
        assert_relative_eq!(ind.tau.unwrap(), best.0, epsilon = 1e-6);
    }

    #[test]
    fn tau_is_monotone_in_zeta_for_case_study() {
        let mom =
            MeanFieldMoments::with_resolution(make_case_study_model(), 1.0, 10).unwrap();
        let hi = default_search_hi(&mom);
        let taus: Vec<f64> = [-3.0, -1.0, 0.0, 1.0, 3.0]
            .iter()
            .map(|&z| tau_of_zeta(&mom, 100, 990, z, hi, 256).unwrap())
            .collect();
        for w in taus.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "tau not monotone: {taus:?}");
        }
    }

    #[test]
    fn cubic_family_invariant() {
        for i in 1..=5 {
            for j in 0..5 {
                let c = 0.3 * i as f64;
                let t = -1.0 + 0.6 * j as f64;
                let ind = indicator_of_map(cubic(c, t), 0.0, 4.0, 1024).unwrap();
                assert_relative_eq!(ind.rho.unwrap(), c, epsilon = 1e-8);
                assert_relative_eq!(ind.tau.unwrap(), t - 2.0 * c.powi(3), epsilon = 1e-8);
            }
        }
    }
}
