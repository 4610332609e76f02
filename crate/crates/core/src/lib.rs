//! Numerical laboratory for Markov operators on finite metric state spaces.
//!
//! A model is a finite state set with an explicit metric and a row-stochastic
//! transition kernel, optionally carrying its invariant measure. On top of
//! that the crate provides:
//!
//! * push-forward and dual (observable-side) iteration of the operator,
//!   including Cesàro averages ([`operator`]);
//! * exact bounded-Lipschitz ("flat metric") distances between discrete
//!   measures, computed by a dense-tableau simplex solver with anti-cycling
//!   pivoting ([`flatmetric`]);
//! * equicontinuity profiles that measure how dual iterates separate probe
//!   states from a target state, stability traces toward the invariant
//!   measure, and a search for balls inside the invariant support on which
//!   dual iterates eventually oscillate below a given level
//!   ([`diagnostics`]);
//! * an inductive measure-decomposition construction whose telescoping
//!   identity can be verified in floating-point or in exact rational
//!   arithmetic ([`decomposition`]).
//!
//! The crate is `no_std` + `alloc`; IO, file formats and the command-line
//! front end live in the companion `eprop-cli` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![deny(missing_docs)]

extern crate alloc;

pub mod decomposition;
pub mod diagnostics;
pub mod flatmetric;
pub mod measure;
pub mod operator;
pub mod space;
pub mod weight;

pub use decomposition::{
    check_contradiction_bound, choose_k, continuity_scan, decompose, oscillation_bound,
    verify_telescoping, ContinuityRow, ContinuityScan, ContradictionOutcome, ContradictionRow,
    DecompositionConfig, DecompositionError, DecompositionLevel, DecompositionTree,
};
pub use diagnostics::{
    cesaro_profile, default_candidate_balls, eproperty_profile, find_lemma_ball,
    kernel_continuity_table, liminf_ball_mass, stability_trace, DiagnosticReport,
    DiagnosticsError, LemmaBall, LemmaBallSearch, ProbePlan, ReportRow, Verdict,
    DEFAULT_VERDICT_TOL,
};
pub use flatmetric::{flat_distance, FlatMetricError, FlatMetricProblem, LpSolution};
pub use measure::{combine, DiscreteMeasure};
pub use operator::{
    cesaro_average, dual_apply, dual_iterate, identity_on_norm, integrate, iterate, min1_2norm,
    Observable, ObservableError,
};
pub use space::{
    build_doeblin, build_doeblin3, build_example1, build_example2, build_halfmap,
    discrete_metric, example2_state, Ball, MetricModel, MetricRule, ModelError, StateId,
    StateInfo, VALIDATION_TOL,
};
pub use weight::Weight;

/// The exact weight type, re-exported so downstream crates can select exact
/// arithmetic without depending on the rational crate themselves.
pub use num_rational::BigRational;
