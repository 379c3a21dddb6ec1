//! Waterfilling under an additional power-transfer constraint.
//!
//! For a fixed gain profile `G` the optimal PSD maximizes
//! `∫ log2(1 + Φ/(N_F N0)) dω` subject to `∫ Φ dω = P` and
//! `∫ Φ G dω >= η P`. Stationarity of the Lagrangian gives
//!
//! ```text
//! Φ(ω) = max(0, 1 / (ln2 (λ - μ G(ω))) - N_F N0)
//! ```
//!
//! `λ` is fixed by the power budget for every `μ`; `μ` is zero when plain
//! waterfilling already transfers enough power, otherwise it is the root of
//! `p_out(μ) = η P`, which is monotone along the `λ(μ)` path.
//!
//! Internally the water level is carried as the offset `t = λ - μ max(G)`
//! so that large multipliers do not cancel catastrophically.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::circuit::GainProfile;
use crate::error::{ensure_finite, Error, Result};
use crate::grid::FrequencyGrid;
use crate::roots::brent;

/// Relative margin below `max(G)` above which a transfer factor is declared infeasible.
pub const INFEASIBLE_MARGIN: f64 = 1e-6;

const LEVEL_MAX_ITER: usize = 200;
const MU_MAX_ITER: usize = 300;

/// Power budget and noise floor of one spectral solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub power: f64,
    pub eta: f64,
    /// `N_F * N0`
    pub nf_n0: f64,
}

impl BudgetSpec {
    pub fn new(power: f64, eta: f64, nf_n0: f64) -> Result<Self> {
        let b = BudgetSpec { power, eta, nf_n0 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("P", self.power)?;
        ensure_finite("eta", self.eta)?;
        ensure_finite("nf_n0", self.nf_n0)?;
        if self.power <= 0.0 {
            return Err(Error::invalid("P", "must be positive"));
        }
        if self.nf_n0 <= 0.0 {
            return Err(Error::invalid("nf_n0", "must be positive"));
        }
        if self.eta < 0.0 {
            return Err(Error::invalid("eta", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    ConstraintInactive,
    ConstraintActive,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::ConstraintInactive => "ConstraintInactive",
            SolveStatus::ConstraintActive => "ConstraintActive",
            SolveStatus::Infeasible => "Infeasible",
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, SolveStatus::Infeasible)
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ConstraintInactive" => Ok(SolveStatus::ConstraintInactive),
            "ConstraintActive" => Ok(SolveStatus::ConstraintActive),
            "Infeasible" => Ok(SolveStatus::Infeasible),
            other => Err(Error::invalid("status", format!("unknown status `{other}`"))),
        }
    }
}

/// Optimal PSD of one constrained waterfilling problem.
///
/// For `Infeasible` results the PSD and multipliers are those of plain
/// waterfilling; only the status carries the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    /// `Φs(ω_k)` on the full grid.
    pub psd: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub capacity: f64,
    pub p_out: f64,
    pub status: SolveStatus,
    /// Quadrature measure of `{ω : Φs(ω) > 0}`.
    pub support_measure: f64,
    /// `Φs > 0` at `±omega_max`: the support is truncated by the grid.
    pub boundary_hit: bool,
}

impl SpectralSolution {
    pub fn peak(&self) -> f64 {
        self.psd.iter().copied().fold(0.0, f64::max)
    }
}

/// Water level returned by [`lambda_for_power`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterLevel {
    pub lambda: f64,
    pub boundary_hit: bool,
}

/// The problem folded onto `omega >= 0`.
struct Folded<'a> {
    weights: Vec<f64>,
    gain: &'a [f64],
    /// `max(G) - G_k`
    gap: Vec<f64>,
    gmax: f64,
    nf: f64,
}

impl<'a> Folded<'a> {
    fn new(gain: &'a GainProfile<'_>, nf: f64) -> Self {
        let half = gain.half_values();
        let gmax = gain.max();
        Folded {
            weights: gain.grid().half_weights(),
            gain: half,
            gap: half.iter().map(|g| gmax - g).collect(),
            gmax,
            nf,
        }
    }

    /// Total power at offset `t` and its derivative in `t`.
    fn power(&self, t: f64, mu: f64) -> (f64, f64) {
        let mut total = 0.0;
        let mut slope = 0.0;
        for (w, gap) in self.weights.iter().zip(&self.gap) {
            let inv = 1.0 / (LN_2 * (t + mu * gap));
            let phi = inv - self.nf;
            if phi > 0.0 {
                total += w * phi;
                slope -= w * inv * inv * LN_2;
            }
        }
        (total, slope)
    }

    fn psd(&self, t: f64, mu: f64) -> Vec<f64> {
        self.gap
            .iter()
            .map(|gap| (1.0 / (LN_2 * (t + mu * gap)) - self.nf).max(0.0))
            .collect()
    }

    fn transfer(&self, psd: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(psd)
            .zip(self.gain)
            .map(|((w, p), g)| w * p * g)
            .sum()
    }

    fn capacity(&self, psd: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(psd)
            .map(|(w, p)| w * (p / self.nf).ln_1p())
            .sum::<f64>()
            / LN_2
    }

    /// Offset `t` with total power `budget`.
    ///
    /// Total power is convex and decreasing in `t`, so Newton steps taken
    /// from the left of the root never overshoot; a bracket guards against
    /// rounding.
    fn level(&self, mu: f64, budget: f64, hint: Option<f64>) -> Result<f64> {
        let mut hi = 1.0 / (LN_2 * self.nf);
        let mut lo = hint.filter(|h| *h > 0.0 && *h < hi).unwrap_or(0.5 * hi);
        let mut p_lo = self.power(lo, mu);
        let mut halvings = 0;
        while p_lo.0 < budget {
            hi = lo;
            lo *= 0.5;
            halvings += 1;
            if lo < f64::MIN_POSITIVE || halvings > 2100 {
                return Err(Error::NoConvergence {
                    iterations: halvings,
                    detail: format!("water level for power {budget} underflows"),
                });
            }
            p_lo = self.power(lo, mu);
        }
        for _ in 0..LEVEL_MAX_ITER {
            let (p, slope) = p_lo;
            let excess = p - budget;
            if excess <= 1e-15 * budget {
                return Ok(lo);
            }
            let mut next = lo - excess / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next <= lo || next >= hi {
                return Ok(lo);
            }
            let p_next = self.power(next, mu);
            if p_next.0 >= budget {
                lo = next;
                p_lo = p_next;
            } else {
                hi = next;
            }
        }
        Ok(lo)
    }
}

fn support_measure(grid: &FrequencyGrid, psd: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(psd)
        .filter(|(_, p)| **p > 0.0)
        .map(|(w, _)| w)
        .sum()
}

/// PSD implied by the stationarity condition for given multipliers.
pub fn psd_from_duals(lambda: f64, mu: f64, gain: &GainProfile<'_>, nf_n0: f64) -> Result<Vec<f64>> {
    ensure_finite("lambda", lambda)?;
    ensure_finite("mu", mu)?;
    if mu < 0.0 {
        return Err(Error::invalid("mu", "must be non-negative"));
    }
    if !(nf_n0 > 0.0) {
        return Err(Error::invalid("nf_n0", "must be positive"));
    }
    let bound = mu * gain.max();
    if lambda <= bound {
        return Err(Error::Domain { lambda, bound });
    }
    Ok(gain
        .values()
        .iter()
        .map(|g| (1.0 / (LN_2 * (lambda - mu * g)) - nf_n0).max(0.0))
        .collect())
}

/// The unique `λ > μ max(G)` whose PSD carries total power `power`.
pub fn lambda_for_power(mu: f64, power: f64, gain: &GainProfile<'_>, nf_n0: f64) -> Result<WaterLevel> {
    ensure_finite("mu", mu)?;
    if mu < 0.0 {
        return Err(Error::invalid("mu", "must be non-negative"));
    }
    BudgetSpec::new(power, 0.0, nf_n0)?;
    let folded = Folded::new(gain, nf_n0);
    let t = folded.level(mu, power, None)?;
    let psd = folded.psd(t, mu);
    Ok(WaterLevel {
        lambda: mu * folded.gmax + t,
        boundary_hit: psd.last().is_some_and(|p| *p > 0.0),
    })
}

pub fn capacity_of(psd: &[f64], nf_n0: f64, grid: &FrequencyGrid) -> Result<f64> {
    if !(nf_n0 > 0.0) {
        return Err(Error::invalid("nf_n0", "must be positive"));
    }
    if psd.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::invalid("psd", "samples must be non-negative"));
    }
    let integrand: Vec<f64> = psd.iter().map(|p| (p / nf_n0).ln_1p() / LN_2).collect();
    grid.integrate(&integrand)
}

pub fn transferred_power(psd: &[f64], gain: &GainProfile<'_>, grid: &FrequencyGrid) -> Result<f64> {
    if gain.values().len() != psd.len() {
        return Err(Error::GridMismatch {
            left: psd.len(),
            right: gain.values().len(),
        });
    }
    let integrand: Vec<f64> = psd.iter().zip(gain.values()).map(|(p, g)| p * g).collect();
    grid.integrate(&integrand)
}

/// Solves the power-transfer-constrained waterfilling problem on `gain`.
pub fn solve_constrained(budget: &BudgetSpec, gain: &GainProfile<'_>) -> Result<SpectralSolution> {
    budget.validate()?;
    let folded = Folded::new(gain, budget.nf_n0);
    let grid = gain.grid();
    let target = budget.eta * budget.power;

    let finish = |t: f64, mu: f64, status: SolveStatus| -> SpectralSolution {
        let half = folded.psd(t, mu);
        let p_out = folded.transfer(&half);
        let capacity = folded.capacity(&half);
        let boundary_hit = half.last().is_some_and(|p| *p > 0.0);
        let psd = grid.mirror(&half);
        SpectralSolution {
            support_measure: support_measure(grid, &psd),
            psd,
            lambda: mu * folded.gmax + t,
            mu,
            capacity,
            p_out,
            status,
            boundary_hit,
        }
    };

    let t0 = folded.level(0.0, budget.power, None)?;
    let p_out0 = folded.transfer(&folded.psd(t0, 0.0));
    if p_out0 >= target * (1.0 - 1e-12) {
        return Ok(finish(t0, 0.0, SolveStatus::ConstraintInactive));
    }
    if budget.eta >= (1.0 - INFEASIBLE_MARGIN) * folded.gmax {
        return Ok(finish(t0, 0.0, SolveStatus::Infeasible));
    }

    let mut hint = t0;
    let residual = |mu: f64, hint: &mut f64| -> Result<f64> {
        let t = folded.level(mu, budget.power, Some(*hint))?;
        *hint = t;
        Ok(folded.transfer(&folded.psd(t, mu)) - target)
    };

    // bracket in log(mu)
    let mut mu = t0 / (2.0 * folded.gmax);
    let mut r = residual(mu, &mut hint)?;
    let (mut lo, mut hi, mut r_lo, mut r_hi);
    if r < 0.0 {
        lo = mu;
        r_lo = r;
        let mut grown = 0;
        loop {
            mu *= 4.0;
            grown += 1;
            r = residual(mu, &mut hint)?;
            if r >= 0.0 {
                hi = mu;
                r_hi = r;
                break;
            }
            lo = mu;
            r_lo = r;
            if grown > 500 || !mu.is_finite() {
                return Ok(finish(t0, 0.0, SolveStatus::Infeasible));
            }
        }
    } else {
        hi = mu;
        r_hi = r;
        let mut shrunk = 0;
        loop {
            mu *= 0.25;
            shrunk += 1;
            r = residual(mu, &mut hint)?;
            if r < 0.0 {
                lo = mu;
                r_lo = r;
                break;
            }
            hi = mu;
            r_hi = r;
            if shrunk > 500 {
                lo = 0.0;
                r_lo = p_out0 - target;
                break;
            }
        }
    }
    if r_hi == 0.0 {
        let t = folded.level(hi, budget.power, Some(hint))?;
        return Ok(finish(t, hi, SolveStatus::ConstraintActive));
    }

    let mut failure = None;
    let s = if lo > 0.0 {
        brent(
            |s| match residual(s.exp(), &mut hint) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            lo.ln(),
            hi.ln(),
            r_lo,
            r_hi,
            0.0,
            MU_MAX_ITER,
        )
        .exp()
    } else {
        brent(
            |m| match residual(m, &mut hint) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            lo,
            hi,
            r_lo,
            r_hi,
            0.0,
            MU_MAX_ITER,
        )
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let t = folded.level(s, budget.power, Some(hint))?;
    Ok(finish(t, s, SolveStatus::ConstraintActive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gain_profile, CircuitParams, Termination};
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> FrequencyGrid {
        GridSpec {
            omega_max: 20.0,
            samples: 1025,
            grading: 6.0,
        }
        .build()
        .unwrap()
    }

    fn low_pass<'g>(grid: &'g FrequencyGrid, g_s: f64, g_l: f64, g_d: f64) -> GainProfile<'g> {
        let p = CircuitParams::normalized(g_d, g_d).unwrap();
        gain_profile(&p, &Termination::new(g_s, g_l).unwrap(), grid).unwrap()
    }

    #[test]
    fn flat_water_level() {
        let grid = small_grid();
        let gain = GainProfile::flat(&grid, 1.0).unwrap();
        let psd = psd_from_duals(1.0 / (2.0 * LN_2), 0.0, &gain, 1.0).unwrap();
        assert!(psd.iter().all(|p| (p - 1.0).abs() < 1e-14));
        let dry = psd_from_duals(1.0 / LN_2, 0.0, &gain, 1.0).unwrap();
        assert!(dry.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn duals_outside_domain_are_rejected() {
        let grid = small_grid();
        let gain = low_pass(&grid, 1.0, 0.5, 0.1);
        let bound = 2.0 * gain.max();
        assert!(matches!(
            psd_from_duals(bound, 2.0, &gain, 1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn lambda_for_flat_power() {
        let grid = small_grid();
        let gain = GainProfile::flat(&grid, 3.0).unwrap();
        let (p, nf) = (0.7, 1.3);
        let level = lambda_for_power(0.0, p, &gain, nf).unwrap();
        let width = 2.0 * grid.omega_max();
        assert_relative_eq!(level.lambda, 1.0 / (LN_2 * (p / width + nf)), max_relative = 1e-13);
        assert!(level.boundary_hit);
    }

    #[test]
    fn lambda_recovers_power_on_random_instances() {
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let gain = low_pass(&grid, rng.gen_range(0.05..5.0), rng.gen_range(0.05..5.0), 0.1);
            let nf = rng.gen_range(1.0..3.0);
            let p = 10f64.powf(rng.gen_range(-2.0..1.0));
            let mu = rng.gen_range(0.0..2.0) / gain.max();
            let level = lambda_for_power(mu, p, &gain, nf).unwrap();
            let psd = psd_from_duals(level.lambda, mu, &gain, nf).unwrap();
            let total = grid.integrate(&psd).unwrap();
            assert!((total - p).abs() <= 1e-10 * p, "{total} vs {p}");
        }
    }

    #[test]
    fn more_power_lowers_the_level() {
        let grid = small_grid();
        let gain = low_pass(&grid, 0.3, 0.2, 0.1);
        let mu = 0.1 / gain.max();
        let a = lambda_for_power(mu, 0.1, &gain, 1.2).unwrap().lambda;
        let b = lambda_for_power(mu, 0.2, &gain, 1.2).unwrap().lambda;
        assert!(b < a);
    }

    #[test]
    fn flat_gain_is_inactive_or_infeasible() {
        let grid = small_grid();
        let gain = GainProfile::flat(&grid, 2.0).unwrap();
        let (p, nf) = (0.4, 1.5);
        let sol = solve_constrained(&BudgetSpec::new(p, 1.5, nf).unwrap(), &gain).unwrap();
        assert_eq!(sol.status, SolveStatus::ConstraintInactive);
        let width = 2.0 * grid.omega_max();
        assert_relative_eq!(sol.capacity, width * (1.0 + p / (width * nf)).log2(), max_relative = 1e-12);
        assert!(sol.psd.iter().all(|v| (v - p / width).abs() < 1e-12));
        let over = solve_constrained(&BudgetSpec::new(p, 2.5, nf).unwrap(), &gain).unwrap();
        assert_eq!(over.status, SolveStatus::Infeasible);
    }

    #[test]
    fn active_constraint_is_met_with_equality() {
        let grid = small_grid();
        let gain = low_pass(&grid, 1.0, 0.3, 0.1);
        let budget = BudgetSpec::new(0.1, 2.0, 1.1).unwrap();
        let sol = solve_constrained(&budget, &gain).unwrap();
        assert_eq!(sol.status, SolveStatus::ConstraintActive);
        assert!(sol.mu > 0.0);
        assert!((sol.p_out - 0.2).abs() <= 1e-12 * 0.2);
        assert!(sol.mu * (sol.p_out - 0.2).abs() <= 1e-6 * 0.1);
        assert!((grid.integrate(&sol.psd).unwrap() - 0.1).abs() <= 1e-8 * 0.1);
        for (p, g) in sol.psd.iter().zip(gain.values()) {
            assert!(*p >= 0.0);
            if *p > 0.0 {
                assert!(sol.lambda - sol.mu * g > 0.0);
            }
        }
    }

    #[test]
    fn zero_eta_is_classic_waterfilling() {
        let grid = small_grid();
        let gain = low_pass(&grid, 0.2, 0.1, 0.1);
        let nf = 1.5;
        let sol = solve_constrained(&BudgetSpec::new(3.0, 0.0, nf).unwrap(), &gain).unwrap();
        assert_eq!(sol.mu, 0.0);
        let level = lambda_for_power(0.0, 3.0, &gain, nf).unwrap();
        for p in &sol.psd {
            let expect = (1.0 / (LN_2 * level.lambda) - nf).max(0.0);
            assert!((p - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn low_pass_support_is_one_symmetric_interval() {
        let grid = small_grid();
        let gain = low_pass(&grid, 0.5, 0.2, 0.1);
        let sol = solve_constrained(&BudgetSpec::new(0.1, 10.0, 1.2).unwrap(), &gain).unwrap();
        assert_eq!(sol.status, SolveStatus::ConstraintActive);
        let on: Vec<usize> = (0..sol.psd.len()).filter(|k| sol.psd[*k] > 0.0).collect();
        let (first, last) = (on[0], *on.last().unwrap());
        assert_eq!(on.len(), last - first + 1);
        assert_eq!(first + last, sol.psd.len() - 1);
        assert!(sol.support_measure < 2.0 * grid.omega_max());
    }

    #[test]
    fn capacity_and_transfer_examples() {
        let grid = FrequencyGrid::uniform(4.0, 81).unwrap();
        assert_eq!(capacity_of(&vec![0.0; 81], 1.0, &grid).unwrap(), 0.0);
        let gain = GainProfile::flat(&grid, 1.0).unwrap();
        let psd: Vec<f64> = grid.samples().iter().map(|w| (1.0 - w * w / 16.0).max(0.0)).collect();
        let p = grid.integrate(&psd).unwrap();
        assert_relative_eq!(transferred_power(&psd, &gain, &grid).unwrap(), p, max_relative = 1e-15);
        assert_eq!(transferred_power(&vec![0.0; 81], &gain, &grid).unwrap(), 0.0);
        assert!(matches!(
            transferred_power(&vec![0.0; 80], &gain, &grid),
            Err(Error::GridMismatch { .. })
        ));
        // Φ = nf over the whole band [-4, 4]
        let c = capacity_of(&vec![2.0; 81], 2.0, &grid).unwrap();
        assert_relative_eq!(c, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn dual_path_is_monotone() {
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let gain = low_pass(&grid, rng.gen_range(0.1..3.0), rng.gen_range(0.05..2.0), 0.1);
            let nf = rng.gen_range(1.0..2.0);
            let (mut prev_out, mut prev_cap) = (f64::NEG_INFINITY, f64::INFINITY);
            for k in 0..60 {
                let mu = 1e-4 * 1.3f64.powi(k) / gain.max();
                let level = lambda_for_power(mu, 0.1, &gain, nf).unwrap();
                let psd = psd_from_duals(level.lambda, mu, &gain, nf).unwrap();
                let out = transferred_power(&psd, &gain, &grid).unwrap();
                let cap = capacity_of(&psd, nf, &grid).unwrap();
                assert!(out >= prev_out - 1e-12 * out.abs());
                assert!(cap <= prev_cap + 1e-12 * cap.abs());
                prev_out = out;
                prev_cap = cap;
            }
        }
    }
}
