//! Termination optimization and Pareto-frontier tracing.
//!
//! Scenario A optimizes the PSD together with `(g_s, g_l)`: the spectral
//! solve is nested inside a multistart simplex search over the
//! terminations. Scenario B fixes a uniform PSD of bandwidth `omega_b`; the
//! capacity then depends on `g_s` only and increases with it, so the best
//! design is the largest `g_s` whose best achievable band-average gain still
//! meets the transfer requirement.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{gain_profile, gain_unchecked, noise_figure, CircuitParams, Placement, Termination};
use crate::error::{ensure_finite, Error, Result};
use crate::grid::{FrequencyGrid, GridSpec};
use crate::optim::{multistart, Bounds, SearchOptions};
use crate::quad;
use crate::spectrum::{solve_constrained, BudgetSpec, SolveStatus, SpectralSolution, INFEASIBLE_MARGIN};

const BAND_REL_TOL: f64 = 1e-13;
const BAND_MAX_PANELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// PSD, `g_s` and `g_l` optimized jointly.
    #[serde(rename = "A")]
    PsdAndTerminations,
    /// Uniform PSD, `g_s` and `g_l` optimized.
    #[serde(rename = "B")]
    Uniform,
    /// Uniform PSD with a matching inductor.
    #[serde(rename = "BL")]
    UniformWithMatching,
}

impl Scenario {
    pub fn tag(&self) -> &'static str {
        match self {
            Scenario::PsdAndTerminations => "A",
            Scenario::Uniform => "B",
            Scenario::UniformWithMatching => "BL",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Scenario::PsdAndTerminations),
            "B" => Ok(Scenario::Uniform),
            "BL" => Ok(Scenario::UniformWithMatching),
            other => Err(Error::invalid("scenario", format!("expected A, B or BL, got `{other}`"))),
        }
    }
}

/// Search box for the terminations and the matching inductance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub g_s: [f64; 2],
    pub g_l: [f64; 2],
    pub inductance: [f64; 2],
}

impl Default for BoxBounds {
    fn default() -> Self {
        BoxBounds {
            g_s: [1e-3, 1e2],
            g_l: [1e-3, 1e2],
            inductance: [1e-3, 1e2],
        }
    }
}

impl BoxBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("g_s_bounds", self.g_s),
            ("g_l_bounds", self.g_l),
            ("L_bounds", self.inductance),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0) {
                return Err(Error::invalid(name, "bounds must be positive and finite"));
            }
            if lo > hi {
                return Err(Error::invalid(name, format!("lower bound {lo} exceeds upper bound {hi}")));
            }
        }
        Ok(())
    }
}

/// Settings shared by every termination search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub bounds: BoxBounds,
    /// Multistart nodes per search axis.
    pub multistart: usize,
    /// Relative objective tolerance of the simplex phase.
    pub tolerance: f64,
    pub placement: Placement,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            bounds: BoxBounds::default(),
            multistart: 5,
            tolerance: 1e-8,
            placement: Placement::ParallelToCgd,
        }
    }
}

impl SearchSettings {
    fn options(&self, width: f64) -> SearchOptions {
        let spacing = width / (self.multistart.max(2) - 1) as f64;
        SearchOptions {
            max_evals: 500,
            ftol: self.tolerance,
            xtol: 1e-7,
            initial_step: 0.5 * spacing.max(1e-3),
            polish: 3,
            tie_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub scenario: Scenario,
    pub eta_grid: Vec<f64>,
    pub power: f64,
    /// Bandwidth of the uniform PSD (scenario B).
    pub omega_b: f64,
    pub grid: GridSpec,
    pub search: SearchSettings,
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() {
            return Err(Error::invalid("eta_grid", "must not be empty"));
        }
        if self.eta_grid.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::invalid("eta_grid", "entries must be finite and non-negative"));
        }
        if self.eta_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("eta_grid", "must be strictly increasing"));
        }
        ensure_finite("P", self.power)?;
        if self.power <= 0.0 {
            return Err(Error::invalid("P", "must be positive"));
        }
        if !(self.omega_b.is_finite() && self.omega_b > 0.0) {
            return Err(Error::invalid("omega_B", "must be positive"));
        }
        if self.scenario != Scenario::PsdAndTerminations && self.omega_b / 2.0 > self.grid.omega_max {
            return Err(Error::invalid("omega_B", "half bandwidth exceeds the grid"));
        }
        if self.search.multistart == 0 {
            return Err(Error::invalid("multistart", "must be at least 1"));
        }
        if !(self.search.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        self.grid.validate()?;
        self.search.bounds.validate()
    }
}

/// One optimized sample of the frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub eta: f64,
    pub capacity: f64,
    pub g_s: f64,
    pub g_l: f64,
    pub inductance: Option<f64>,
    /// Power-budget multiplier; absent for the fixed uniform PSD.
    pub lambda: Option<f64>,
    pub mu: f64,
    pub p_out: f64,
    pub status: SolveStatus,
}

impl ParetoPoint {
    pub fn termination(&self, placement: Placement) -> Result<Termination> {
        let t = Termination::new(self.g_s, self.g_l)?;
        match self.inductance {
            Some(l) => t.with_matching(l, placement),
            None => Ok(t),
        }
    }
}

/// Maps log coordinates back onto the box, returning the bounds exactly at the ends.
fn from_log(u: f64, [lo, hi]: [f64; 2]) -> f64 {
    if u <= lo.ln() {
        lo
    } else if u >= hi.ln() {
        hi
    } else {
        u.exp()
    }
}

fn log_bounds(ranges: &[[f64; 2]]) -> Bounds {
    Bounds::new(
        ranges.iter().map(|r| r[0].ln()).collect(),
        ranges.iter().map(|r| r[1].ln()).collect(),
    )
}

fn widest(bounds: &Bounds) -> f64 {
    bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(l, h)| h - l)
        .fold(0.0, f64::max)
}

/// Spectral solve for one termination.
pub fn resolve_spectrum(
    circuit: &CircuitParams,
    term: &Termination,
    eta: f64,
    power: f64,
    grid: &FrequencyGrid,
) -> Result<SpectralSolution> {
    let gain = gain_profile(circuit, term, grid)?;
    let nf = noise_figure(circuit, term)? * circuit.n0;
    solve_constrained(&BudgetSpec::new(power, eta, nf)?, &gain)
}

/// Scenario A: maximizes capacity over `(g_s, g_l)` with the PSD solved
/// optimally for each candidate.
pub fn optimize_terminations_a(
    eta: f64,
    circuit: &CircuitParams,
    power: f64,
    grid: &FrequencyGrid,
    settings: &SearchSettings,
) -> Result<ParetoPoint> {
    ensure_finite("eta", eta)?;
    if eta < 0.0 {
        return Err(Error::invalid("eta", "must be non-negative"));
    }
    circuit.validate()?;
    settings.bounds.validate()?;
    let ranges = [settings.bounds.g_s, settings.bounds.g_l];
    let bounds = log_bounds(&ranges);
    let mut failure: Option<Error> = None;
    let mut merit = |u: &[f64]| -> f64 {
        let term = Termination {
            g_s: from_log(u[0], ranges[0]),
            g_l: from_log(u[1], ranges[1]),
            matching: None,
        };
        match resolve_spectrum(circuit, &term, eta, power, grid) {
            Ok(sol) if sol.status.is_feasible() => -sol.capacity,
            Ok(_) => {
                let gmax = gain_profile(circuit, &term, grid).map(|g| g.max()).unwrap_or(0.0);
                1.0 + (eta - (1.0 - INFEASIBLE_MARGIN) * gmax) / eta
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let starts = bounds.grid_points(settings.multistart);
    let best = multistart(&mut merit, &starts, &bounds, &settings.options(widest(&bounds)));
    if let Some(e) = failure {
        return Err(e);
    }
    let term = Termination {
        g_s: from_log(best.x[0], ranges[0]),
        g_l: from_log(best.x[1], ranges[1]),
        matching: None,
    };
    let sol = resolve_spectrum(circuit, &term, eta, power, grid)?;
    Ok(ParetoPoint {
        eta,
        capacity: if sol.status.is_feasible() { sol.capacity } else { 0.0 },
        g_s: term.g_s,
        g_l: term.g_l,
        inductance: None,
        lambda: Some(sol.lambda),
        mu: sol.mu,
        p_out: sol.p_out,
        status: sol.status,
    })
}

/// `ω_B log2(1 + P / (ω_B N_F N0))`: capacity of a flat PSD over the band.
pub fn capacity_uniform(circuit: &CircuitParams, term: &Termination, power: f64, omega_b: f64) -> Result<f64> {
    if !(omega_b.is_finite() && omega_b > 0.0) {
        return Err(Error::invalid("omega_B", "must be positive"));
    }
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::invalid("P", "must be non-negative"));
    }
    let floor = noise_figure(circuit, term)? * circuit.n0;
    Ok(omega_b * (power / (omega_b * floor)).ln_1p() / LN_2)
}

fn band_average_unchecked(circuit: &CircuitParams, term: &Termination, omega_b: f64) -> f64 {
    let half = 0.5 * omega_b;
    quad::integrate(|w| gain_unchecked(circuit, term, w), 0.0, half, BAND_REL_TOL, BAND_MAX_PANELS) / half
}

/// Mean power gain over `[-ω_B/2, ω_B/2]`.
pub fn band_average_gain(
    circuit: &CircuitParams,
    term: &Termination,
    omega_b: f64,
    grid: &FrequencyGrid,
) -> Result<f64> {
    circuit.validate()?;
    term.validate()?;
    if !(omega_b.is_finite() && omega_b > 0.0) {
        return Err(Error::invalid("omega_B", "must be positive"));
    }
    if 0.5 * omega_b > grid.omega_max() {
        return Err(Error::invalid(
            "omega_B",
            format!("half bandwidth {} exceeds omega_max {}", 0.5 * omega_b, grid.omega_max()),
        ));
    }
    Ok(band_average_unchecked(circuit, term, omega_b))
}

/// Best band-average gain at fixed `g_s` and its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BandOptimum {
    gain: f64,
    g_l: f64,
    inductance: Option<f64>,
}

fn best_band_gain(
    circuit: &CircuitParams,
    g_s: f64,
    omega_b: f64,
    with_matching: bool,
    settings: &SearchSettings,
) -> BandOptimum {
    let b = &settings.bounds;
    let plain = {
        let bounds = log_bounds(&[b.g_l]);
        let mut f = |u: &[f64]| {
            let t = Termination {
                g_s,
                g_l: from_log(u[0], b.g_l),
                matching: None,
            };
            -band_average_unchecked(circuit, &t, omega_b)
        };
        let m = multistart(&mut f, &bounds.grid_points(settings.multistart), &bounds, &settings.options(widest(&bounds)));
        BandOptimum {
            gain: -m.f,
            g_l: from_log(m.x[0], b.g_l),
            inductance: None,
        }
    };
    if !with_matching {
        return plain;
    }
    let bounds = log_bounds(&[b.g_l, b.inductance]);
    let mut f = |u: &[f64]| {
        let t = Termination {
            g_s,
            g_l: from_log(u[0], b.g_l),
            matching: Some(crate::circuit::Matching {
                inductance: from_log(u[1], b.inductance),
                placement: settings.placement,
            }),
        };
        -band_average_unchecked(circuit, &t, omega_b)
    };
    let m = multistart(&mut f, &bounds.grid_points(settings.multistart), &bounds, &settings.options(widest(&bounds)));
    let matched = BandOptimum {
        gain: -m.f,
        g_l: from_log(m.x[0], b.g_l),
        inductance: Some(from_log(m.x[1], b.inductance)),
    };
    // without the inductor is the L -> infinity member of the family
    if matched.gain > plain.gain {
        matched
    } else {
        plain
    }
}

/// Scenario B: largest `g_s` whose best band-average gain reaches `eta`.
///
/// `F(g_s) = max over (g_l[, L])` of the band-average gain is sampled on a
/// logarithmic ladder from the top of the box downwards; the first feasible
/// rung and the infeasible rung above it bracket the boundary, which is then
/// bisected. For monotone `F` this is plain bisection; otherwise the ladder
/// keeps the search on the largest feasible branch.
pub fn optimize_terminations_b(
    eta: f64,
    circuit: &CircuitParams,
    power: f64,
    omega_b: f64,
    with_matching: bool,
    grid: &FrequencyGrid,
    settings: &SearchSettings,
) -> Result<ParetoPoint> {
    ensure_finite("eta", eta)?;
    if eta < 0.0 {
        return Err(Error::invalid("eta", "must be non-negative"));
    }
    circuit.validate()?;
    settings.bounds.validate()?;
    if 0.5 * omega_b > grid.omega_max() || !(omega_b > 0.0) {
        return Err(Error::invalid("omega_B", "must be positive with half bandwidth inside the grid"));
    }
    let [lo, hi] = settings.bounds.g_s;
    let (u_lo, u_hi) = (lo.ln(), hi.ln());
    let f_of = |u: f64| best_band_gain(circuit, from_log(u, settings.bounds.g_s), omega_b, with_matching, settings);

    let rungs = 4 * (settings.multistart.max(2) - 1) + 1;
    let mut above: Option<(f64, BandOptimum)> = None;
    let mut feasible: Option<(f64, BandOptimum)> = None;
    let mut best_seen: Option<(f64, BandOptimum)> = None;
    for k in 0..rungs {
        let u = if k == 0 {
            u_hi
        } else if k + 1 == rungs {
            u_lo
        } else {
            u_hi - (u_hi - u_lo) * k as f64 / (rungs - 1) as f64
        };
        let opt = f_of(u);
        if best_seen.is_none_or(|(_, b)| opt.gain > b.gain) {
            best_seen = Some((u, opt));
        }
        if opt.gain >= eta {
            feasible = Some((u, opt));
            break;
        }
        above = Some((u, opt));
        if u_hi == u_lo {
            break;
        }
    }

    let Some((mut u_ok, mut opt_ok)) = feasible else {
        let (u, opt) = best_seen.expect("at least one rung");
        let g_s = from_log(u, settings.bounds.g_s);
        let term = Termination {
            g_s,
            g_l: opt.g_l,
            matching: opt.inductance.map(|l| crate::circuit::Matching {
                inductance: l,
                placement: settings.placement,
            }),
        };
        return Ok(ParetoPoint {
            eta,
            capacity: 0.0,
            g_s,
            g_l: opt.g_l,
            inductance: opt.inductance,
            lambda: None,
            mu: 0.0,
            p_out: power * band_average_unchecked(circuit, &term, omega_b),
            status: SolveStatus::Infeasible,
        });
    };
    if let Some((mut u_bad, _)) = above {
        while u_bad - u_ok > 1e-12 * u_ok.abs().max(1.0) {
            let mid = 0.5 * (u_ok + u_bad);
            if mid <= u_ok || mid >= u_bad {
                break;
            }
            let opt = f_of(mid);
            if opt.gain >= eta {
                u_ok = mid;
                opt_ok = opt;
            } else {
                u_bad = mid;
            }
        }
    }

    let g_s = from_log(u_ok, settings.bounds.g_s);
    let term = Termination {
        g_s,
        g_l: opt_ok.g_l,
        matching: opt_ok.inductance.map(|l| crate::circuit::Matching {
            inductance: l,
            placement: settings.placement,
        }),
    };
    let capacity = capacity_uniform(circuit, &term, power, omega_b)?;
    let active = g_s < hi;
    let mu = if active {
        uniform_transfer_multiplier(circuit, &term, power, omega_b)
    } else {
        0.0
    };
    Ok(ParetoPoint {
        eta,
        capacity,
        g_s,
        g_l: opt_ok.g_l,
        inductance: opt_ok.inductance,
        lambda: None,
        mu,
        p_out: power * opt_ok.gain,
        status: if active {
            SolveStatus::ConstraintActive
        } else {
            SolveStatus::ConstraintInactive
        },
    })
}

/// Multiplier balancing `dC/dg_s` against the transfer sensitivity
/// `P dḠ/dg_s` at the optimum of scenario B.
fn uniform_transfer_multiplier(circuit: &CircuitParams, term: &Termination, power: f64, omega_b: f64) -> f64 {
    let floor = noise_figure(circuit, term).unwrap_or(1.0) * circuit.n0;
    let snr = power / (omega_b * floor);
    // dC/dg_s through N_F = 1 + g_o / g_s
    let dc_dnf = -omega_b / LN_2 * snr / (1.0 + snr) / (floor / circuit.n0);
    let dc = dc_dnf * (-circuit.g_o / (term.g_s * term.g_s));
    let h = 1e-6 * term.g_s;
    let up = Termination { g_s: term.g_s + h, ..*term };
    let down = Termination { g_s: term.g_s - h, ..*term };
    let dg = (band_average_unchecked(circuit, &up, omega_b) - band_average_unchecked(circuit, &down, omega_b)) / (2.0 * h);
    if dg < 0.0 {
        (dc / (-power * dg)).max(0.0)
    } else {
        0.0
    }
}

/// Largest transfer factor attainable inside the box: the peak grid gain
/// for scenario A and the peak band-average gain for scenario B.
pub fn eta_max(
    scenario: Scenario,
    circuit: &CircuitParams,
    grid: &FrequencyGrid,
    omega_b: f64,
    settings: &SearchSettings,
) -> Result<f64> {
    circuit.validate()?;
    settings.bounds.validate()?;
    let b = settings.bounds;
    match scenario {
        Scenario::PsdAndTerminations => {
            let bounds = log_bounds(&[b.g_s, b.g_l]);
            let mut f = |u: &[f64]| {
                let t = Termination {
                    g_s: from_log(u[0], b.g_s),
                    g_l: from_log(u[1], b.g_l),
                    matching: None,
                };
                let peak = grid
                    .half_samples()
                    .iter()
                    .map(|w| gain_unchecked(circuit, &t, *w))
                    .fold(0.0, f64::max);
                -peak
            };
            let m = multistart(&mut f, &bounds.grid_points(settings.multistart), &bounds, &settings.options(widest(&bounds)));
            Ok(-m.f)
        }
        Scenario::Uniform | Scenario::UniformWithMatching => {
            if !(omega_b > 0.0) || 0.5 * omega_b > grid.omega_max() {
                return Err(Error::invalid("omega_B", "must be positive with half bandwidth inside the grid"));
            }
            let with_matching = scenario == Scenario::UniformWithMatching;
            let bounds = log_bounds(&[b.g_s]);
            let mut f = |u: &[f64]| -best_band_gain(circuit, from_log(u[0], b.g_s), omega_b, with_matching, settings).gain;
            let m = multistart(&mut f, &bounds.grid_points(settings.multistart), &bounds, &settings.options(widest(&bounds)));
            Ok(-m.f)
        }
    }
}

/// `0` followed by `count - 1` logarithmically spaced values ending at
/// `0.98 * eta_max`. The spaced part starts at unity gain when the frontier
/// reaches past it and at `1e-3 * eta_max` otherwise.
pub fn default_eta_grid(eta_max: f64, count: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if count <= 1 || !(eta_max > 0.0) {
        return grid;
    }
    let top = 0.98 * eta_max;
    let bottom = if top > 1.0 { 1.0 } else { 1e-3 * eta_max };
    let (a, b) = (bottom.ln(), top.ln());
    let n = count - 1;
    grid.extend((0..n).map(|k| {
        if k + 1 == n {
            top
        } else {
            (a + (b - a) * k as f64 / (n - 1) as f64).exp()
        }
    }));
    grid
}

pub fn optimize_point(eta: f64, cfg: &TraceConfig, circuit: &CircuitParams, grid: &FrequencyGrid) -> Result<ParetoPoint> {
    match cfg.scenario {
        Scenario::PsdAndTerminations => optimize_terminations_a(eta, circuit, cfg.power, grid, &cfg.search),
        Scenario::Uniform => optimize_terminations_b(eta, circuit, cfg.power, cfg.omega_b, false, grid, &cfg.search),
        Scenario::UniformWithMatching => {
            optimize_terminations_b(eta, circuit, cfg.power, cfg.omega_b, true, grid, &cfg.search)
        }
    }
}

/// Optimizes every `eta` of the configuration independently; points come
/// back in `eta` order and infeasible points do not abort the sweep.
pub fn trace_pareto(cfg: &TraceConfig, circuit: &CircuitParams) -> Result<Vec<ParetoPoint>> {
    cfg.validate()?;
    circuit.validate()?;
    let grid = cfg.grid.build()?;
    cfg.eta_grid
        .par_iter()
        .map(|&eta| optimize_point(eta, cfg, circuit, &grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> CircuitParams {
        CircuitParams::normalized(0.1, 0.1).unwrap()
    }

    fn quick_grid() -> FrequencyGrid {
        GridSpec {
            omega_max: 50.0,
            samples: 1025,
            grading: 12.0,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn capacity_uniform_example() {
        let p = reference();
        let t = Termination::new(1.0, 1.0).unwrap();
        let c = capacity_uniform(&p, &t, 0.1, 0.1).unwrap();
        assert_relative_eq!(c, 0.1 * (1.0f64 + 0.1 / 0.11).log2(), max_relative = 1e-14);
        assert!((c - 0.093286).abs() < 5e-6);
        assert!(capacity_uniform(&p, &t, 1e-12, 0.1).unwrap() < 1e-10);
        assert!(capacity_uniform(&p, &t, 0.1, 0.0).is_err());
    }

    #[test]
    fn band_average_of_narrow_band_is_dc_gain() {
        let p = reference();
        let t = Termination::new(0.8, 0.4).unwrap();
        let grid = quick_grid();
        let g0 = gain_unchecked(&p, &t, 0.0);
        let narrow = band_average_gain(&p, &t, 1e-4, &grid).unwrap();
        assert!((narrow - g0).abs() <= 1e-7 * g0);
        assert!(band_average_gain(&p, &t, 101.0, &grid).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [Scenario::PsdAndTerminations, Scenario::Uniform, Scenario::UniformWithMatching] {
            assert_eq!(s.tag().parse::<Scenario>().unwrap(), s);
        }
        assert!("C".parse::<Scenario>().is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_eta_grid(100.0, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1.0);
        assert_eq!(g[49], 98.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let small = default_eta_grid(0.5, 4);
        assert_relative_eq!(small[1], 5e-4, max_relative = 1e-12);
        assert_eq!(small[3], 0.49);
    }

    #[test]
    fn zero_eta_drives_g_s_to_the_upper_bound() {
        let grid = quick_grid();
        let settings = SearchSettings {
            multistart: 3,
            ..Default::default()
        };
        let pt = optimize_terminations_a(0.0, &reference(), 0.1, &grid, &settings).unwrap();
        assert_eq!(pt.mu, 0.0);
        assert_eq!(pt.g_s, 100.0);
        assert_eq!(pt.status, SolveStatus::ConstraintInactive);
    }

    #[test]
    fn unconstrained_uniform_scenario_sits_at_the_top_of_the_box() {
        let grid = quick_grid();
        let settings = SearchSettings {
            multistart: 3,
            ..Default::default()
        };
        let pt = optimize_terminations_b(0.0, &reference(), 0.1, 0.1, false, &grid, &settings).unwrap();
        assert_eq!(pt.g_s, 100.0);
        let t = Termination::new(100.0, 1.0).unwrap();
        assert_eq!(pt.capacity, capacity_uniform(&reference(), &t, 0.1, 0.1).unwrap());
    }

    #[test]
    fn infeasible_eta_is_reported() {
        let grid = quick_grid();
        let settings = SearchSettings {
            multistart: 3,
            ..Default::default()
        };
        let pt = optimize_terminations_b(1e9, &reference(), 0.1, 0.1, false, &grid, &settings).unwrap();
        assert_eq!(pt.status, SolveStatus::Infeasible);
        let pt = optimize_terminations_a(1e9, &reference(), 0.1, &grid, &settings).unwrap();
        assert_eq!(pt.status, SolveStatus::Infeasible);
    }

    #[test]
    fn trace_rejects_bad_configs() {
        let cfg = TraceConfig {
            scenario: Scenario::PsdAndTerminations,
            eta_grid: vec![],
            power: 0.1,
            omega_b: 0.1,
            grid: GridSpec::default(),
            search: SearchSettings::default(),
        };
        assert!(trace_pareto(&cfg, &reference()).is_err());
        let cfg = TraceConfig {
            eta_grid: vec![1.0, 0.5],
            ..cfg
        };
        assert!(trace_pareto(&cfg, &reference()).is_err());
    }
}
