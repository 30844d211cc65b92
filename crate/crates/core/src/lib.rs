//! Resilience probability of large networked dynamical systems with
//! uncertain parameters.
//!
//! The pipeline reduces the coupled n-dimensional system to a random
//! scalar map via mean-field averaging and the central limit theorem,
//! classifies each realization by its saddle-node indicator tau, fits a
//! polynomial chaos surrogate of tau over the generating normal draw,
//! and integrates the surrogate's positivity set to get the probability
//! that the system is free of the unhealthy low-state equilibrium. A
//! brute-force Monte Carlo oracle over full-network ODE integrations
//! validates the reduction.

pub mod bifurcation;
pub mod config;
pub mod dynamics;
pub mod graph;
pub mod meanfield;
pub mod oracle;
pub mod orthopoly;
pub mod pce;
pub mod pipeline;
pub mod quadrature;
