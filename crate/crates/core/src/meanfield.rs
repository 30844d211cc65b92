//! Mean-field reduction: parameter-averaged moment functions of the self
//! dynamics and coupling, and realizations of the random scalar map
//! Xi(x) whose fluctuations are Gaussian by the central limit theorem.

use crate::dynamics::DynamicsModel;
use crate::quadrature::{QuadError, TensorGridRule};

/// Self-dynamics with each mean parameter perturbed by its own noise
/// coordinate: `f(x, E[A] .* (1 + e .* u))`.
pub fn phi(model: &DynamicsModel, x: f64, u: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), model.k());
    let a: Vec<f64> = model.a_params.iter().zip(u).map(|(p, &ui)| p.realize(ui)).collect();
    model.eval_f(x, &a)
}

/// Per-edge coupling contribution at uniform state: the mean edge weight
/// with its noise factor times `g(x, x, E[B] .* (1 + e .* u))`.
pub fn varphi(model: &DynamicsModel, mean_weight: f64, x: f64, u: &[f64], u_edge: f64) -> f64 {
    debug_assert_eq!(u.len(), model.l());
    let b: Vec<f64> = model.b_params.iter().zip(u).map(|(p, &ui)| p.realize(ui)).collect();
    let weight_factor = model.edge_uncertainty.realize(u_edge) / model.edge_uncertainty.mean;
    mean_weight * weight_factor * model.eval_g(x, x, &b)
}

/// Evaluators for the four moment functions. Each call performs the full
/// hypercube quadrature; nothing is cached.
#[derive(Debug, Clone)]
pub struct MeanFieldMoments {
    model: DynamicsModel,
    mean_weight: f64,
    rule_f: TensorGridRule,
    rule_g: TensorGridRule,
}

impl MeanFieldMoments {
    /// `rule_f` must have dimension k (A-noise); `rule_g` dimension l+1
    /// (B-noise plus the edge-weight coordinate, last).
    pub fn new(
        model: DynamicsModel,
        mean_weight: f64,
        rule_f: TensorGridRule,
        rule_g: TensorGridRule,
    ) -> Self {
        assert_eq!(rule_f.dim, model.k(), "rule_f dimension must match k");
        assert_eq!(rule_g.dim, model.l() + 1, "rule_g dimension must match l + 1");
        Self { model, mean_weight, rule_f, rule_g }
    }

    /// Convenience constructor with Gauss–Legendre rules of the given
    /// resolution on the model's noise support.
    pub fn with_resolution(
        model: DynamicsModel,
        mean_weight: f64,
        points_per_axis: usize,
    ) -> Result<Self, QuadError> {
        let (a, b) = model.a_params.first().map(|p| p.support).unwrap_or((-1.0, 1.0));
        let rule_f = TensorGridRule::gauss_legendre(model.k().max(1), points_per_axis, a, b)?;
        let rule_g = TensorGridRule::gauss_legendre(model.l() + 1, points_per_axis, a, b)?;
        Ok(Self::new(model, mean_weight, rule_f, rule_g))
    }

    pub fn model(&self) -> &DynamicsModel {
        &self.model
    }

    pub fn mean_weight(&self) -> f64 {
        self.mean_weight
    }

    pub fn mu_f(&self, x: f64) -> Result<f64, QuadError> {
        self.rule_f.integrate_mean(|u| phi(&self.model, x, u))
    }

    pub fn var_f(&self, x: f64) -> Result<f64, QuadError> {
        Ok(self.f_moments(x)?.1)
    }

    pub fn mu_g(&self, x: f64) -> Result<f64, QuadError> {
        self.rule_g.integrate_mean(|u| {
            let (b_noise, edge) = u.split_at(self.model.l());
            varphi(&self.model, self.mean_weight, x, b_noise, edge[0])
        })
    }

    pub fn var_g(&self, x: f64) -> Result<f64, QuadError> {
        Ok(self.g_moments(x)?.1)
    }

    /// (mu_f, var_f) in one quadrature pass.
    pub fn f_moments(&self, x: f64) -> Result<(f64, f64), QuadError> {
        self.rule_f.mean_and_variance(|u| phi(&self.model, x, u))
    }

    /// (mu_g, var_g) in one quadrature pass.
    pub fn g_moments(&self, x: f64) -> Result<(f64, f64), QuadError> {
        self.rule_g.mean_and_variance(|u| {
            let (b_noise, edge) = u.split_at(self.model.l());
            varphi(&self.model, self.mean_weight, x, b_noise, edge[0])
        })
    }
}

/// One realization of the random mean-field map, generated by a standard
/// normal draw `zeta`.
#[derive(Debug, Clone)]
pub struct XiRealization<'a> {
    pub zeta: f64,
    pub n: usize,
    pub m: usize,
    moments: &'a MeanFieldMoments,
}

impl XiRealization<'_> {
    /// `mu_f(x) + (m/n) mu_g(x) + sqrt(var_f(x)/n + (m/n^2) var_g(x)) * zeta`.
    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        let (mu_f, var_f) = self.moments.f_moments(x)?;
        let (mu_g, var_g) = self.moments.g_moments(x)?;
        let n = self.n as f64;
        let m = self.m as f64;
        let sd = (var_f / n + m / (n * n) * var_g).sqrt();
        Ok(mu_f + m / n * mu_g + sd * self.zeta)
    }
}

/// Binds a moment set to a topology size and a normal draw.
pub fn realize_xi(moments: &MeanFieldMoments, n: usize, m: usize, zeta: f64) -> XiRealization<'_> {
    assert!(n >= 1);
    XiRealization { zeta, n, m, moments }
}
