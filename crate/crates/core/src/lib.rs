//! Sobolev tests of uniformity on the sphere, tests of rotational symmetry
//! and radial goodness-of-fit tests for elliptical-type models, together with
//! the samplers and Monte Carlo harness used to study them.

// guards of the form `!(x > 0.0)` also send NaN to the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod radial;
pub mod sampling;
pub mod selftest;
pub mod sobolev;
pub mod specfun;
pub mod symmetry;

pub use error::{Error, Result};
pub use montecarlo::{
    convergence_experiment, histogram, ks_one_sample, run_scenario, ConvergenceConfig, ConvergenceReport,
    ConvergenceStatistic, RejectionRow, Scenario, ScenarioFile, TestSpec,
};
pub use radial::{
    ad_limit_pvalue, ad_statistic, bootstrap_pvalue, BootstrapConfig, RadialFamily, RadialHypothesis, RadialLaw,
    RadialNull,
};
pub use sampling::{ModelSpec, Points, RngStream, Sampler};
pub use sobolev::{statistic, Gram, SobolevKernel, SphereSample, TestReport, WeightScheme};
pub use symmetry::{gof, gof_composite, gof_simple, rotsym_test, GofReport, TangentFrame};
