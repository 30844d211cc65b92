//! Full-network ground truth: integrates the coupled ODE system for
//! sampled parameter realizations, classifies resilience by probing for
//! multistability, and estimates the resilience probability by direct
//! Monte Carlo.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{realize_params, DynamicsModel, RealizedParams};
use crate::graph::WeightedDigraph;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("vector field evaluated non-finite at component {0}")]
    NonFiniteValue(usize),
    #[error("step size collapsed below 1e-12 at t = {0}")]
    StiffnessFailure(f64),
    #[error("probe x0 = {probe} failed to reach equilibrium within t_max = {t_max}")]
    Unclassifiable { probe: f64, t_max: f64 },
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub final_state: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkClass {
    Resilient,
    NonResilient,
}

/// Componentwise vector field of the coupled system: self-dynamics per
/// node plus the weighted coupling along each edge `src -> dst` feeding
/// node `dst`.
pub fn rhs(
    model: &DynamicsModel,
    graph: &WeightedDigraph,
    realized: &RealizedParams,
    x: &[f64],
    out: &mut [f64],
) -> Result<(), OracleError> {
    for (i, o) in out.iter_mut().enumerate() {
        *o = model.eval_f(x[i], &realized.a[i]);
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        let w = realized.weights[e];
        out[edge.dst] += w * model.eval_g(x[edge.dst], x[edge.src], &realized.b[e]);
    }
    for (i, &o) in out.iter().enumerate() {
        if !o.is_finite() {
            return Err(OracleError::NonFiniteValue(i));
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const ABS_TOL: f64 = 1e-9;
const REL_TOL: f64 = 1e-7;
const MIN_STEP: f64 = 1e-12;

/// Speed below which the trajectory is close enough to an attractor to
/// hand off from time stepping to Newton root polishing.
const POLISH_THRESHOLD: f64 = 1e-4;
const POLISH_MAX_ITERS: usize = 25;
/// A polish that moves any component further than this is rejected: the
/// iteration may have hopped to a different equilibrium.
const POLISH_MAX_DRIFT: f64 = 0.05;

/// Newton iteration on `F(x) = 0` from a near-equilibrium state, with a
/// finite-difference Jacobian. Returns the refined state when it reaches
/// `max_i |F_i| < tol` without drifting out of the local basin.
fn newton_polish(
    model: &DynamicsModel,
    graph: &WeightedDigraph,
    realized: &RealizedParams,
    start: &[f64],
    tol: f64,
) -> Result<Option<Vec<f64>>, OracleError> {
    let n = start.len();
    let mut x = start.to_vec();
    let mut f = vec![0.0; n];
    let mut fp = vec![0.0; n];
    for _ in 0..POLISH_MAX_ITERS {
        rhs(model, graph, realized, &x, &mut f)?;
        let speed = f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if speed < tol {
            return Ok(Some(x));
        }
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let saved = x[j];
            x[j] = saved + h;
            rhs(model, graph, realized, &x, &mut fp)?;
            x[j] = saved;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - f[i]) / h;
            }
        }
        let delta = match jac.lu().solve(&nalgebra::DVector::from_column_slice(&f)) {
            Some(d) => d,
            None => return Ok(None),
        };
        let mut drift = 0.0f64;
        for i in 0..n {
            x[i] = (x[i] - delta[i]).max(0.0);
            drift = drift.max((x[i] - start[i]).abs());
        }
        if drift > POLISH_MAX_DRIFT {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Integrates until `max_i |xdot_i| < tol` or `t_max`, clamping states at
/// zero from below.
pub fn integrate_to_equilibrium(
    model: &DynamicsModel,
    graph: &WeightedDigraph,
    realized: &RealizedParams,
    x0: &[f64],
    t_max: f64,
    tol: f64,
) -> Result<TrajectoryResult, OracleError> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut dt: f64 = 1e-2;
    let mut steps = 0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut x5 = vec![0.0; n];

    // Explicit stepping alone can dawdle near the attractor: the step
    // size is stability-limited by the fast coupling modes while the
    // local-error floor keeps the residual speed hovering above tol.
    // Once the transient is over, finish the last stretch with Newton.
    let mut polish_below = POLISH_THRESHOLD;

    rhs(model, graph, realized, &x, &mut k[0])?;
    loop {
        let speed = k[0].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if speed < tol {
            return Ok(TrajectoryResult { final_state: x, converged: true, steps, t_final: t });
        }
        if speed < polish_below {
            if let Some(refined) = newton_polish(model, graph, realized, &x, tol)? {
                return Ok(TrajectoryResult {
                    final_state: refined,
                    converged: true,
                    steps,
                    t_final: t,
                });
            }
            // Not settled enough yet; keep integrating and retry closer in.
            polish_below = 0.1 * speed;
        }
        if t >= t_max {
            return Ok(TrajectoryResult { final_state: x, converged: false, steps, t_final: t });
        }
        dt = dt.min(t_max - t);

        for s in 0..6 {
            for i in 0..n {
                let mut acc = x[i];
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += dt * A[s][j] * kj[i];
                }
                stage[i] = acc.max(0.0);
            }
            let (_, tail) = k.split_at_mut(s + 1);
            rhs(model, graph, realized, &stage, &mut tail[0])?;
        }

        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut v5 = x[i];
            let mut v4 = x[i];
            for s in 0..7 {
                v5 += dt * B5[s] * k[s][i];
                v4 += dt * B4[s] * k[s][i];
            }
            x5[i] = v5;
            let scale = ABS_TOL + REL_TOL * x[i].abs().max(v5.abs());
            err = err.max(((v5 - v4) / scale).abs());
        }

        if err <= 1.0 {
            t += dt;
            for i in 0..n {
                x[i] = x5[i].max(0.0);
            }
            steps += 1;
            rhs(model, graph, realized, &x, &mut k[0])?;
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        dt *= factor.clamp(0.2, 5.0);
        if dt < MIN_STEP {
            return Err(OracleError::StiffnessFailure(t));
        }
    }
}

/// Integrates from each uniform initial condition `probe * 1` and counts
/// distinct equilibria by componentwise-mean distance. Two or more
/// attractors means the unhealthy state coexists with the healthy one.
pub fn classify_realization(
    model: &DynamicsModel,
    graph: &WeightedDigraph,
    realized: &RealizedParams,
    probes: &[f64],
    t_max: f64,
    tol: f64,
) -> Result<NetworkClass, OracleError> {
    assert!(probes.len() >= 2, "need at least a low and a high probe");
    let n = graph.node_count();
    let mut attractor_means: Vec<f64> = Vec::new();
    for &probe in probes {
        let x0 = vec![probe; n];
        let traj = integrate_to_equilibrium(model, graph, realized, &x0, t_max, tol)?;
        if !traj.converged {
            return Err(OracleError::Unclassifiable { probe, t_max });
        }
        let mean = traj.final_state.iter().sum::<f64>() / n as f64;
        if attractor_means.iter().all(|&m| (m - mean).abs() > 10.0 * tol) {
            attractor_means.push(mean);
        }
    }
    if attractor_means.len() >= 2 {
        Ok(NetworkClass::NonResilient)
    } else {
        Ok(NetworkClass::Resilient)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: usize,
    pub unclassifiable: usize,
}

/// Direct Monte Carlo over parameter realizations: the resilient
/// fraction and its binomial standard error. Per-trial seeds are
/// `seed + trial index`.
pub fn mc_resilience_probability(
    model: &DynamicsModel,
    graph: &WeightedDigraph,
    trials: usize,
    probes: &[f64],
    t_max: f64,
    tol: f64,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    assert!(trials >= 30, "need at least 30 trials");
    let mut resilient = 0usize;
    let mut unclassifiable = 0usize;
    let mut classified = 0usize;
    for trial in 0..trials {
        let realized = realize_params(model, graph, seed + trial as u64);
        match classify_realization(model, graph, &realized, probes, t_max, tol) {
            Ok(NetworkClass::Resilient) => {
                resilient += 1;
                classified += 1;
            }
            Ok(NetworkClass::NonResilient) => classified += 1,
            Err(OracleError::Unclassifiable { .. }) => unclassifiable += 1,
            Err(e) => return Err(e),
        }
    }
    let p_hat = if classified > 0 { resilient as f64 / classified as f64 } else { f64::NAN };
    let stderr = if classified > 0 {
        (p_hat * (1.0 - p_hat) / classified as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(McEstimate { p_hat, stderr, trials: classified, unclassifiable })
}
