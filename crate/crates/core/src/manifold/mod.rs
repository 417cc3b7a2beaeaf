//! Graph of the inertial manifold by backward shooting, with invariance,
//! Lipschitz, tracking and smoothness probes.

mod bvp;
mod gmres;
mod graph;
mod probes;

pub use bvp::{solve_bvp, BvpConfig, BvpSolution, Solver};
pub use gmres::{gmres, GmresOutcome};
pub use graph::{manifold_value, GraphConfig, GraphPoint, LadderStep};
pub use probes::{
    invariance_check, lipschitz_probe, smoothness_probe, tracking_experiment, DirectionSmoothness,
    GraphEvaluator, InvarianceReport, LipschitzReport, ManifoldGraph, SmoothnessReport,
    TrackingReport,
};
