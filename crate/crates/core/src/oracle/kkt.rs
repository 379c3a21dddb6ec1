//! First-order optimality residuals, all dimensionless.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::circuit::{gain_profile, noise_figure, CircuitParams, GainProfile, Matching, Placement, Termination};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::pareto::{band_average_gain, capacity_uniform, BoxBounds, ParetoPoint};
use crate::spectrum::{BudgetSpec, SpectralSolution};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// Sup over the grid of the PSD stationarity violation, in units of
    /// the zero-power marginal utility `1 / (ln2 N_F N0)`.
    pub stationarity_residual: f64,
    /// `|∫Φ - P| / P`.
    pub primal_power_residual: f64,
    /// `max(0, ηP - p_out) / P`.
    pub transfer_residual: f64,
    /// `μ |p_out - ηP| / P`.
    pub slackness_residual: f64,
    /// Largest `|x ∂L/∂x| / C` over the free terminations, with box-active
    /// directions projected out. Absent when no outer problem was checked.
    pub outer_stationarity_residual: Option<f64>,
    pub tolerance: f64,
}

impl KktReport {
    pub fn worst(&self) -> f64 {
        [
            self.stationarity_residual,
            self.primal_power_residual,
            self.transfer_residual,
            self.slackness_residual,
            self.outer_stationarity_residual.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.worst() <= self.tolerance
    }
}

/// Residuals of the inner spectral problem alone.
pub fn spectral_kkt(solution: &SpectralSolution, gain: &GainProfile<'_>, budget: &BudgetSpec) -> Result<KktReport> {
    let grid = gain.grid();
    if solution.psd.len() != grid.len() {
        return Err(Error::GridMismatch {
            left: solution.psd.len(),
            right: grid.len(),
        });
    }
    let (lambda, mu, nf) = (solution.lambda, solution.mu, budget.nf_n0);
    let unit = 1.0 / (LN_2 * nf);
    let mut stationarity: f64 = if mu < 0.0 { -mu } else { 0.0 };
    for (phi, g) in solution.psd.iter().zip(gain.values()) {
        let level = lambda - mu * g;
        let r = if *phi > 0.0 {
            (1.0 / (LN_2 * (nf + phi)) - level).abs()
        } else {
            (unit - level).max(0.0)
        };
        stationarity = stationarity.max(r / unit);
    }
    let total: f64 = solution.psd.iter().zip(grid.weights()).map(|(p, w)| p * w).sum();
    let p_out: f64 = solution
        .psd
        .iter()
        .zip(grid.weights())
        .zip(gain.values())
        .map(|((p, w), g)| p * w * g)
        .sum();
    let target = budget.eta * budget.power;
    Ok(KktReport {
        stationarity_residual: stationarity,
        primal_power_residual: (total - budget.power).abs() / budget.power,
        transfer_residual: (target - p_out).max(0.0) / budget.power,
        slackness_residual: mu.max(0.0) * (p_out - target).abs() / budget.power,
        outer_stationarity_residual: None,
        tolerance: DEFAULT_TOLERANCE,
    })
}

/// Central difference with a relative step.
fn derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64) -> f64 {
    let h = (1e-6 * x.abs()).max(1e-9);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|x dL/dx| / scale`, zero when the coordinate sits on a bound and the
/// derivative pushes outward.
fn projected(x: f64, slope: f64, [lo, hi]: [f64; 2], scale: f64) -> f64 {
    if (x >= hi && slope >= 0.0) || (x <= lo && slope <= 0.0) {
        0.0
    } else {
        (x * slope).abs() / scale
    }
}

fn rebuild(point: &ParetoPoint, g_s: f64, g_l: f64, l: Option<f64>, placement: Placement) -> Termination {
    Termination {
        g_s,
        g_l,
        matching: l.or(point.inductance).map(|inductance| Matching { inductance, placement }),
    }
}

/// Residuals of a scenario-A optimum: the spectral conditions plus outer
/// stationarity of the Lagrangian in `(g_s, g_l)` with `Φ, λ, μ` frozen.
pub fn kkt_residuals(
    solution: &SpectralSolution,
    point: &ParetoPoint,
    circuit: &CircuitParams,
    power: f64,
    grid: &FrequencyGrid,
    bounds: &BoxBounds,
) -> Result<KktReport> {
    if !point.status.is_feasible() {
        return Err(Error::Unsupported("optimality residuals need a feasible point".into()));
    }
    let term = point.termination(Placement::ParallelToCgd)?;
    let gain = gain_profile(circuit, &term, grid)?;
    let nf = noise_figure(circuit, &term)? * circuit.n0;
    let budget = BudgetSpec::new(power, point.eta, nf)?;
    let mut report = spectral_kkt(solution, &gain, &budget)?;

    let psd = &solution.psd;
    let weights = grid.weights();
    let lagrangian = |g_s: f64, g_l: f64| -> f64 {
        let t = Termination::new(g_s, g_l).expect("positive");
        let floor = noise_figure(circuit, &t).expect("valid") * circuit.n0;
        let g = gain_profile(circuit, &t, grid).expect("valid");
        let mut value = 0.0;
        for k in 0..psd.len() {
            value += weights[k] * ((psd[k] / floor).ln_1p() / LN_2 + solution.mu * g.values()[k] * psd[k]);
        }
        value
    };
    let scale = solution.capacity.max(f64::MIN_POSITIVE);
    let d_s = derivative(|x| lagrangian(x, point.g_l), point.g_s);
    let d_l = derivative(|x| lagrangian(point.g_s, x), point.g_l);
    report.outer_stationarity_residual =
        Some(projected(point.g_s, d_s, bounds.g_s, scale).max(projected(point.g_l, d_l, bounds.g_l, scale)));
    Ok(report)
}

/// Residuals of a uniform-PSD optimum. The PSD is fixed by construction,
/// so only the transfer constraint and the outer conditions carry content.
pub fn uniform_kkt_residuals(
    point: &ParetoPoint,
    circuit: &CircuitParams,
    power: f64,
    omega_b: f64,
    grid: &FrequencyGrid,
    bounds: &BoxBounds,
    placement: Placement,
) -> Result<KktReport> {
    if !point.status.is_feasible() {
        return Err(Error::Unsupported("optimality residuals need a feasible point".into()));
    }
    let term = point.termination(placement)?;
    let mean = band_average_gain(circuit, &term, omega_b, grid)?;
    let capacity = capacity_uniform(circuit, &term, power, omega_b)?;
    let mu = point.mu;
    let lagrangian = |t: Termination| -> f64 {
        capacity_uniform(circuit, &t, power, omega_b).expect("valid")
            + mu * power * band_average_gain(circuit, &t, omega_b, grid).expect("valid")
    };
    let scale = capacity.max(f64::MIN_POSITIVE);
    let d_s = derivative(|x| lagrangian(rebuild(point, x, point.g_l, None, placement)), point.g_s);
    let d_l = derivative(|x| lagrangian(rebuild(point, point.g_s, x, None, placement)), point.g_l);
    let mut outer = projected(point.g_s, d_s, bounds.g_s, scale).max(projected(point.g_l, d_l, bounds.g_l, scale));
    if let Some(l) = point.inductance {
        let d_ind = derivative(|x| lagrangian(rebuild(point, point.g_s, point.g_l, Some(x), placement)), l);
        outer = outer.max(projected(l, d_ind, bounds.inductance, scale));
    }
    Ok(KktReport {
        stationarity_residual: if mu < 0.0 { -mu } else { 0.0 },
        primal_power_residual: 0.0,
        transfer_residual: (point.eta - mean).max(0.0),
        slackness_residual: mu.max(0.0) * (mean - point.eta).abs(),
        outer_stationarity_residual: Some(outer),
        tolerance: DEFAULT_TOLERANCE,
    })
}
