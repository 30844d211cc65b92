//! Orthogonal polynomial families used as PCE bases: probabilists'
//! Hermite for Gaussian inputs and Legendre for uniform inputs, plus the
//! distribution-to-basis registry.

use thiserror::Error;

/// Input distribution tags of the basis registry. Only Gaussian and
/// Uniform have implemented bases; the rest are registered names so the
/// error message can point at the matching (unimplemented) family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    Gaussian,
    Uniform,
    Gamma,
    Beta,
    Poisson,
    Binomial,
    NegativeBinomial,
    Hypergeometric,
}

#[derive(Debug, Error, PartialEq)]
#[error("no implemented basis for {distribution:?} (would be {basis})")]
pub struct UnsupportedDistribution {
    pub distribution: Distribution,
    pub basis: &'static str,
}

/// An orthogonal polynomial family under a probability weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoPolyFamily {
    /// Probabilists' Hermite He_n, orthogonal under N(0, 1).
    Hermite,
    /// Legendre P_n, orthogonal under the uniform measure on [-1, 1].
    Legendre,
}

/// Probabilists' Hermite He_n(x) via He_{n+1} = x He_n - n He_{n-1}.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Legendre P_n(x) via (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

impl OrthoPolyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hermite => "hermite",
            Self::Legendre => "legendre",
        }
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        match self {
            Self::Hermite => hermite_eval(n, x),
            Self::Legendre => legendre_eval(n, x),
        }
    }

    /// Squared norm under the family's probability weight: n! for
    /// Hermite, 1/(2n+1) for Legendre.
    pub fn norm_sq(&self, n: usize) -> f64 {
        match self {
            Self::Hermite => (1..=n).map(|k| k as f64).product(),
            Self::Legendre => 1.0 / (2.0 * n as f64 + 1.0),
        }
    }
}

/// Table-driven basis lookup.
pub fn basis_for(distribution: Distribution) -> Result<OrthoPolyFamily, UnsupportedDistribution> {
    match distribution {
        Distribution::Gaussian => Ok(OrthoPolyFamily::Hermite),
        Distribution::Uniform => Ok(OrthoPolyFamily::Legendre),
        Distribution::Gamma => Err(UnsupportedDistribution { distribution, basis: "Laguerre" }),
        Distribution::Beta => Err(UnsupportedDistribution { distribution, basis: "Jacobi" }),
        Distribution::Poisson => Err(UnsupportedDistribution { distribution, basis: "Charlier" }),
        Distribution::Binomial => {
            Err(UnsupportedDistribution { distribution, basis: "Krawtchouk" })
        }
        Distribution::NegativeBinomial => {
            Err(UnsupportedDistribution { distribution, basis: "Meixner" })
        }
        Distribution::Hypergeometric => {
            Err(UnsupportedDistribution { distribution, basis: "Hahn" })
        }
    }
}
