//! Self-dynamics and coupling definitions, the multiplicative uncertainty
//! model, and the built-in mutualistic model of the case study.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::WeightedDigraph;

/// A parameter of the form `mean * (1 + e * U)` with `U` uniform on
/// `[a, b]`. `e` is the relative half-width; `e = 0` makes the parameter
/// deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainParam {
    pub mean: f64,
    pub e: f64,
    pub support: (f64, f64),
}

impl UncertainParam {
    pub fn new(mean: f64, e: f64, support: (f64, f64)) -> Self {
        assert!(e >= 0.0, "relative half-width must be nonnegative");
        assert!(support.0 < support.1, "support must be a nonempty interval");
        Self { mean, e, support }
    }

    pub fn deterministic(mean: f64) -> Self {
        Self::new(mean, 0.0, (-1.0, 1.0))
    }

    /// Value realized at noise coordinate `u`.
    pub fn realize(&self, u: f64) -> f64 {
        self.mean * (1.0 + self.e * u)
    }
}

type RateFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type CouplingFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;

/// A node dynamics `f(x, A)` plus coupling `g(x, y, B)` with uncertain
/// parameter vectors. Immutable and shareable.
#[derive(Clone)]
pub struct DynamicsModel {
    pub name: String,
    f: RateFn,
    g: CouplingFn,
    pub a_params: Vec<UncertainParam>,
    pub b_params: Vec<UncertainParam>,
    /// Multiplicative noise on the edge weight; mean 1 by convention.
    pub edge_uncertainty: UncertainParam,
    /// Carrying capacity hint used to bound the critical-point search.
    pub capacity_hint: Option<f64>,
}

impl std::fmt::Debug for DynamicsModel {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("DynamicsModel")
            .field("name", &self.name)
            .field("a_params", &self.a_params)
            .field("b_params", &self.b_params)
            .field("edge_uncertainty", &self.edge_uncertainty)
            .finish()
    }
}

impl DynamicsModel {
    pub fn new(
        name: impl Into<String>,
        f: RateFn,
        g: CouplingFn,
        a_params: Vec<UncertainParam>,
        b_params: Vec<UncertainParam>,
        edge_uncertainty: UncertainParam,
        capacity_hint: Option<f64>,
    ) -> Self {
        Self { name: name.into(), f, g, a_params, b_params, edge_uncertainty, capacity_hint }
    }

    /// Dimension of the self-parameter vector A.
    pub fn k(&self) -> usize {
        self.a_params.len()
    }

    /// Dimension of the coupling-parameter vector B.
    pub fn l(&self) -> usize {
        self.b_params.len()
    }

    pub fn eval_f(&self, x: f64, a: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.k());
        (self.f)(x, a)
    }

    pub fn eval_g(&self, x: f64, y: f64, b: &[f64]) -> f64 {
        debug_assert_eq!(b.len(), self.l());
        (self.g)(x, y, b)
    }

    pub fn a_means(&self) -> Vec<f64> {
        self.a_params.iter().map(|p| p.mean).collect()
    }

    pub fn b_means(&self) -> Vec<f64> {
        self.b_params.iter().map(|p| p.mean).collect()
    }
}

/// Parameters of the mutualistic model: migration B, Allee threshold C,
/// carrying capacity K, saturation constants D, E, H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualisticParams {
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub d: f64,
    pub e: f64,
    pub h: f64,
}

impl MutualisticParams {
    pub fn case_study() -> Self {
        Self { b: 0.1, c: 1.0, k: 5.0, d: 5.0, e: 0.9, h: 0.1 }
    }

    fn validate(&self) {
        assert!(
            self.b > 0.0 && self.c > 0.0 && self.k > 0.0 && self.d > 0.0 && self.e > 0.0 && self.h > 0.0,
            "mutualistic parameters must be positive"
        );
        assert!(self.c < self.k, "Allee threshold must lie below carrying capacity");
    }
}

/// `f(x) = B + x(x/C - 1)(1 - x/K)`.
pub fn eval_f_mutualistic(x: f64, p: &MutualisticParams) -> f64 {
    p.b + x * (x / p.c - 1.0) * (1.0 - x / p.k)
}

/// `g(x, y) = xy / (D + Ex + Hy)`.
pub fn eval_g_mutualistic(x: f64, y: f64, p: &MutualisticParams) -> f64 {
    x * y / (p.d + p.e * x + p.h * y)
}

/// Relative half-widths for the uncertain parameters of the mutualistic
/// model. E and H carry no noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MutualisticUncertainty {
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub d: f64,
    pub edge: f64,
}

impl MutualisticUncertainty {
    pub fn uniform_ten_percent() -> Self {
        Self { b: 0.1, c: 0.1, k: 0.1, d: 0.1, edge: 0.1 }
    }
}

/// Mutualistic model with explicit means, half-widths and noise support.
/// The self-parameter vector is (B, C, K); the coupling vector is (D)
/// with E and H captured as deterministic constants.
pub fn mutualistic_model(
    params: MutualisticParams,
    unc: MutualisticUncertainty,
    support: (f64, f64),
) -> DynamicsModel {
    params.validate();
    let (e_sat, h_sat) = (params.e, params.h);
    let f: RateFn = Arc::new(move |x, a: &[f64]| {
        let p = MutualisticParams { b: a[0], c: a[1], k: a[2], d: 1.0, e: e_sat, h: h_sat };
        eval_f_mutualistic(x, &p)
    });
    let g: CouplingFn = Arc::new(move |x, y, b: &[f64]| {
        let p = MutualisticParams { b: 1.0, c: 1.0, k: 2.0, d: b[0], e: e_sat, h: h_sat };
        eval_g_mutualistic(x, y, &p)
    });
    DynamicsModel::new(
        "mutualistic",
        f,
        g,
        vec![
            UncertainParam::new(params.b, unc.b, support),
            UncertainParam::new(params.c, unc.c, support),
            UncertainParam::new(params.k, unc.k, support),
        ],
        vec![UncertainParam::new(params.d, unc.d, support)],
        UncertainParam::new(1.0, unc.edge, support),
        Some(params.k),
    )
}

/// The §IV.A configuration: means B=0.1, C=1, K=5, D=5, E=0.9, H=0.1,
/// 10% uniform uncertainty on B, C, K, D and the edge weight.
pub fn make_case_study_model() -> DynamicsModel {
    mutualistic_model(
        MutualisticParams::case_study(),
        MutualisticUncertainty::uniform_ten_percent(),
        (-1.0, 1.0),
    )
}

/// Per-node and per-edge parameter realizations for one full-network draw.
#[derive(Debug, Clone)]
pub struct RealizedParams {
    /// `a[i]` is the realized self-parameter vector of node i.
    pub a: Vec<Vec<f64>>,
    /// `b[e]` is the realized coupling-parameter vector of edge e (in the
    /// graph's edge order).
    pub b: Vec<Vec<f64>>,
    /// Realized weight of edge e, mean weight times the noise factor.
    pub weights: Vec<f64>,
}

/// Draws one independent uniform noise coordinate per node per
/// A-parameter, per edge per B-parameter, and per edge for the weight
/// factor. Deterministic for a fixed seed.
pub fn realize_params(model: &DynamicsModel, graph: &WeightedDigraph, seed: u64) -> RealizedParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |p: &UncertainParam| -> f64 {
        let (lo, hi) = p.support;
        p.realize(rng.gen_range(lo..=hi))
    };
    let a = (0..graph.node_count())
        .map(|_| model.a_params.iter().map(&mut draw).collect())
        .collect();
    let b = (0..graph.edge_count())
        .map(|_| model.b_params.iter().map(&mut draw).collect())
        .collect();
    let weights = graph
        .edges()
        .iter()
        .map(|e| e.weight * draw(&model.edge_uncertainty) / model.edge_uncertainty.mean)
        .collect();
    RealizedParams { a, b, weights }
}
