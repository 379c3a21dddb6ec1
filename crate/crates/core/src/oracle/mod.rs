//! Independent reference implementations used to cross-check the solvers.

pub mod band;
pub mod direct;
pub mod duals;
pub mod kkt;
pub mod nodal;

pub use band::analytic_band_gain_integral;
pub use direct::{direct_psd_maximizer, AscentOptions, DirectOptimum};
pub use duals::{brute_force_duals, DualEstimate, DualScan};
pub use kkt::{kkt_residuals, spectral_kkt, uniform_kkt_residuals, KktReport};
pub use nodal::{
    amplifier_netlist, amplifier_response, nodal_solve, transimpedance, Branch, BranchKind, Netlist, NodalResponse, DRAIN, GATE,
};
