//! Command implementations behind the CLI: estimate, converge, sweep,
//! oracle. Each command reads a `RunConfig`, runs the mean-field + PCE
//! pipeline, and writes machine-readable artifacts (JSON summary, CSV
//! curves).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::bifurcation::{default_search_hi, tau_of_zeta, BifurcationError};
use crate::config::{ConfigError, RunConfig};
use crate::dynamics::{mutualistic_model, DynamicsModel};
use crate::graph::{GraphError, WeightedDigraph};
use crate::meanfield::MeanFieldMoments;
use crate::oracle::{mc_resilience_probability, McEstimate, OracleError};
use crate::orthopoly::OrthoPolyFamily;
use crate::pce::{
    cdf_sup_distance, default_samples, fit_from_samples, resilience_probability, sample_tau,
    surrogate_samples, tau_distribution, PceError, PceModel, TauSampleSet,
};
use crate::quadrature::{GaussHermiteRule, QuadError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("quadrature error: {0}")]
    Quad(#[from] QuadError),
    #[error("bifurcation error: {0}")]
    Bifurcation(#[from] BifurcationError),
    #[error("pce error: {0}")]
    Pce(#[from] PceError),
    #[error("oracle error: {0}")]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Stable CLI contract: 1 for config problems, 2 for numerical or io
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Graph(_) => 1,
            _ => 2,
        }
    }
}

/// Probability estimate with its display curves.
#[derive(Debug, Clone, Serialize)]
pub struct ResilienceEstimate {
    pub probability: f64,
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub degenerate_fraction: f64,
    pub residual_rms: f64,
    pub seed: u64,
    #[serde(skip)]
    pub pdf_curve: Vec<(f64, f64)>,
    #[serde(skip)]
    pub cdf_curve: Vec<(f64, f64)>,
}

pub fn build_model(cfg: &RunConfig) -> DynamicsModel {
    mutualistic_model(cfg.model.means, cfg.model.uncertainty, cfg.model.support)
}

pub fn load_graph(cfg: &RunConfig) -> Result<WeightedDigraph, PipelineError> {
    if let Some(path) = &cfg.graph.file {
        return Ok(WeightedDigraph::from_file(path)?);
    }
    let gen = cfg.graph.generator.as_ref().expect("validated config");
    Ok(WeightedDigraph::generate_random(gen.n, gen.p, gen.weight, gen.seed)?)
}

/// Mean-field moments plus the search window for the critical point.
struct Reduction {
    moments: MeanFieldMoments,
    search_hi: f64,
    grid_points: usize,
    n: usize,
    m: usize,
}

fn reduce(cfg: &RunConfig, model: DynamicsModel, graph: &WeightedDigraph) -> Result<Reduction, PipelineError> {
    let mean_weight = graph.mean_weight()?;
    let moments = MeanFieldMoments::with_resolution(model, mean_weight, cfg.quadrature.points)?;
    let search_hi = cfg.bifurcation.search_hi.unwrap_or_else(|| default_search_hi(&moments));
    Ok(Reduction {
        moments,
        search_hi,
        grid_points: cfg.bifurcation.grid_points,
        n: graph.node_count(),
        m: graph.edge_count(),
    })
}

impl Reduction {
    fn tau(&self, zeta: f64) -> Result<f64, BifurcationError> {
        tau_of_zeta(&self.moments, self.n, self.m, zeta, self.search_hi, self.grid_points)
    }

    fn sample(&self, count: usize, seed: u64) -> Result<TauSampleSet, PceError> {
        sample_tau(|z| self.tau(z), count, seed)
    }

    fn fit(&self, cfg: &RunConfig, seed: u64) -> Result<PceModel, PipelineError> {
        let family = OrthoPolyFamily::Hermite;
        let model = match cfg.pce.order {
            Some(order) => {
                let samples = cfg.pce.samples.unwrap_or_else(|| default_samples(order));
                let set = self.sample(samples, seed)?;
                fit_from_samples(&set, family, order)?
            }
            None => crate::pce::fit_adaptive(
                |z| self.tau(z),
                family,
                cfg.pce.precision,
                cfg.pce.max_order,
                seed,
            )?,
        };
        Ok(model)
    }
}

fn probability_with_degenerate_mass(model: &PceModel) -> (f64, f64) {
    let rule = GaussHermiteRule::new(64);
    let conditional = resilience_probability(model, &rule, true);
    let meta = model.fit_meta;
    let total = meta.samples + meta.degenerate;
    let df = if total > 0 { meta.degenerate as f64 / total as f64 } else { 0.0 };
    // draws without a critical point classify as resilient
    (df + (1.0 - df) * conditional, df)
}

fn estimate_from_fit(cfg: &RunConfig, model: &PceModel) -> ResilienceEstimate {
    let (probability, degenerate_fraction) = probability_with_degenerate_mass(model);
    let (pdf_curve, cdf_curve) =
        tau_distribution(model, cfg.pce.draws, cfg.pce.bins, cfg.seed.wrapping_add(1));
    ResilienceEstimate {
        probability,
        order: model.order,
        coefficients: model.coeffs.clone(),
        degenerate_fraction,
        residual_rms: model.fit_meta.residual_rms,
        seed: cfg.seed,
        pdf_curve,
        cdf_curve,
    }
}

/// The full two-step pipeline on one configuration.
pub fn run_estimate(cfg: &RunConfig) -> Result<(ResilienceEstimate, PceModel), PipelineError> {
    let graph = load_graph(cfg)?;
    let reduction = reduce(cfg, build_model(cfg), &graph)?;
    let model = reduction.fit(cfg, cfg.seed)?;
    Ok((estimate_from_fit(cfg, &model), model))
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn curve_csv(header: &str, curve: &[(f64, f64)]) -> String {
    csv(header, curve.iter().map(|(a, b)| format!("{a},{b}")))
}

fn json<T: Serialize>(value: &T) -> Result<String, PipelineError> {
    Ok(serde_json::to_string_pretty(value).expect("serializable") + "\n")
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    #[serde(flatten)]
    estimate: &'a ResilienceEstimate,
    config: &'a RunConfig,
}

/// `estimate`: writes summary.json, pdf.csv, cdf.csv.
pub fn cmd_estimate(cfg: &RunConfig, out_dir: &Path) -> Result<ResilienceEstimate, PipelineError> {
    let (estimate, _) = run_estimate(cfg)?;
    write_file(
        &out_dir.join("summary.json"),
        &json(&EstimateSummary { estimate: &estimate, config: cfg })?,
    )?;
    write_file(&out_dir.join("pdf.csv"), &curve_csv("tau,density", &estimate.pdf_curve))?;
    write_file(&out_dir.join("cdf.csv"), &curve_csv("tau,cumprob", &estimate.cdf_curve))?;
    Ok(estimate)
}

#[derive(Debug, Serialize)]
pub struct ConvergeReport {
    pub orders: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Pairwise sup distances between the empirical CDFs of the
    /// surrogates, on shared draws.
    pub cdf_sup_distances: Vec<Vec<f64>>,
}

/// `converge`: fits at each requested order from one shared tau-sample
/// cache; writes pce_N<k>.csv, cdf_N<k>.csv, converge.json.
pub fn cmd_converge(
    cfg: &RunConfig,
    orders: &[usize],
    out_dir: &Path,
) -> Result<ConvergeReport, PipelineError> {
    assert!(!orders.is_empty());
    let graph = load_graph(cfg)?;
    let reduction = reduce(cfg, build_model(cfg), &graph)?;

    let count = orders
        .iter()
        .map(|&o| cfg.pce.samples.unwrap_or_else(|| default_samples(o)))
        .max()
        .unwrap();
    let set = reduction.sample(count, cfg.seed)?;

    let mut fits = Vec::with_capacity(orders.len());
    for &order in orders {
        let model = fit_from_samples(&set, OrthoPolyFamily::Hermite, order)?;

        let grid: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let z = -4.0 + 8.0 * i as f64 / 200.0;
                (z, model.evaluate(z))
            })
            .collect();
        write_file(&out_dir.join(format!("pce_N{order}.csv")), &curve_csv("zeta,tau_tilde", &grid))?;

        let (_, cdf) = tau_distribution(&model, cfg.pce.draws, cfg.pce.bins, cfg.seed.wrapping_add(1));
        write_file(&out_dir.join(format!("cdf_N{order}.csv")), &curve_csv("tau,cumprob", &cdf))?;

        fits.push(model);
    }

    // shared zeta draws across orders so CDF distances measure the
    // surrogates, not the sampling
    let draws: Vec<Vec<f64>> = fits
        .iter()
        .map(|m| surrogate_samples(m, cfg.pce.draws, cfg.seed.wrapping_add(2)))
        .collect();
    let dist: Vec<Vec<f64>> = (0..fits.len())
        .map(|i| (0..fits.len()).map(|j| cdf_sup_distance(&draws[i], &draws[j])).collect())
        .collect();
    let probabilities = fits.iter().map(|m| probability_with_degenerate_mass(m).0).collect();

    let report =
        ConvergeReport { orders: orders.to_vec(), probabilities, cdf_sup_distances: dist };
    write_file(&out_dir.join("converge.json"), &json(&report)?)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub probability: f64,
    pub order: usize,
    pub degenerate_fraction: f64,
}

/// `sweep`: re-runs the estimate across a range of one lever (uniform
/// edge-weight scale or a parameter mean); writes sweep.csv.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<SweepRow>, PipelineError> {
    let sweep = cfg.sweep.as_ref().ok_or(ConfigError::Invalid {
        key: "sweep",
        msg: "sweep command needs a [sweep] section".into(),
    })?;
    let base_graph = load_graph(cfg)?;

    let mut rows = Vec::with_capacity(sweep.steps);
    for step in 0..sweep.steps {
        let value = sweep.from
            + (sweep.to - sweep.from) * step as f64 / (sweep.steps - 1) as f64;
        let mut step_cfg = cfg.clone();
        let graph = if sweep.key == "edge_weight" {
            // rescale so the mean edge weight equals the sweep value
            base_graph.scale_weights(value / base_graph.mean_weight()?)?
        } else {
            match sweep.key.as_str() {
                "b" => step_cfg.model.means.b = value,
                "c" => step_cfg.model.means.c = value,
                "k" => step_cfg.model.means.k = value,
                "d" => step_cfg.model.means.d = value,
                _ => unreachable!("validated key"),
            }
            base_graph.clone()
        };
        step_cfg.validate()?;

        let reduction = reduce(&step_cfg, build_model(&step_cfg), &graph)?;
        let model = reduction.fit(&step_cfg, step_cfg.seed)?;
        let (probability, degenerate_fraction) = probability_with_degenerate_mass(&model);
        rows.push(SweepRow { value, probability, order: model.order, degenerate_fraction });
    }

    let body = csv(
        "value,probability,order,degenerate_fraction",
        rows.iter().map(|r| {
            format!("{},{},{},{}", r.value, r.probability, r.order, r.degenerate_fraction)
        }),
    );
    write_file(&out_dir.join("sweep.csv"), &body)?;
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub mc: McEstimate,
    pub pce_probability: f64,
    pub pce_stderr: f64,
    pub difference: f64,
    pub threshold: f64,
    pub pass: bool,
    pub pce_order: usize,
}

/// Number of refit seeds used to estimate the PCE probability's spread.
const PCE_REFITS: usize = 5;

/// `oracle`: runs the full-network Monte Carlo and the PCE pipeline on
/// the same configuration and compares them; writes oracle.json.
pub fn cmd_oracle(cfg: &RunConfig, out_dir: &Path) -> Result<OracleReport, PipelineError> {
    let graph = load_graph(cfg)?;
    let model = build_model(cfg);
    let probes = cfg.oracle_probes();
    let mc = mc_resilience_probability(
        &model,
        &graph,
        cfg.oracle.trials,
        &probes,
        cfg.oracle.t_max,
        cfg.oracle.tol,
        cfg.seed,
    )?;

    let reduction = reduce(cfg, build_model(cfg), &graph)?;
    let fit = reduction.fit(cfg, cfg.seed)?;
    let (pce_probability, _) = probability_with_degenerate_mass(&fit);

    // sampling spread of the regression: refit at shifted seeds
    let mut refit_probs = Vec::with_capacity(PCE_REFITS);
    for r in 0..PCE_REFITS {
        let refit = reduction.fit(cfg, cfg.seed.wrapping_add(1000 + r as u64))?;
        refit_probs.push(probability_with_degenerate_mass(&refit).0);
    }
    let mean: f64 = refit_probs.iter().sum::<f64>() / refit_probs.len() as f64;
    let var: f64 = refit_probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>()
        / (refit_probs.len() - 1) as f64;
    let pce_stderr = var.sqrt();

    let difference = (pce_probability - mc.p_hat).abs();
    let threshold = 3.0 * (mc.stderr.powi(2) + pce_stderr.powi(2)).sqrt();
    let report = OracleReport {
        mc,
        pce_probability,
        pce_stderr,
        difference,
        threshold,
        pass: difference < threshold,
        pce_order: fit.order,
    };
    write_file(&out_dir.join("oracle.json"), &json(&report)?)?;
    Ok(report)
}
