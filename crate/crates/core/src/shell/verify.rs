//! Cross-checks of the solvers against the reference implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::ShellResult;
use crate::circuit::{gain_profile, noise_figure, power_gain, CircuitParams, Placement, Termination};
use crate::grid::{FrequencyGrid, GridSpec};
use crate::oracle::{
    amplifier_response, analytic_band_gain_integral, brute_force_duals, direct_psd_maximizer, kkt_residuals,
    spectral_kkt, uniform_kkt_residuals, AscentOptions, DualScan,
};
use crate::pareto::{band_average_gain, optimize_terminations_a, optimize_terminations_b, resolve_spectrum, SearchSettings};
use crate::spectrum::{solve_constrained, BudgetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    /// Coarser oracle resolutions and fewer instances.
    pub quick: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, worst: f64, tolerance: f64, detail: String) -> Self {
        CheckOutcome {
            name,
            worst,
            tolerance,
            passed: worst <= tolerance,
            detail,
        }
    }
}

/// Gain model under test; replaceable for fault injection.
pub type GainModel = dyn Fn(&CircuitParams, &Termination, f64) -> crate::Result<f64> + Sync;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn random_termination(rng: &mut ChaCha8Rng) -> Termination {
    let t = Termination::new(log_uniform(rng, 1e-2, 1e1), log_uniform(rng, 1e-2, 1e1)).expect("positive");
    match rng.gen_range(0..4) {
        0 => t,
        k => t
            .with_matching(log_uniform(rng, 0.1, 10.0), Placement::ALL[k - 1])
            .expect("positive"),
    }
}

fn nodal_check(gain: &GainModel, cases: usize) -> ShellResult<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let p = CircuitParams::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.0..0.5),
            0.1,
            1.0,
        )?;
        let t = random_termination(&mut rng);
        for w in [0.01, 0.1, 1.0, 10.0, log_uniform(&mut rng, 1e-3, 1e2)] {
            let nodal = amplifier_response(&p, &t, w)?;
            worst = worst.max(rel(gain(&p, &t, w)?, nodal.gain));
            let h = crate::circuit::transfer_function(&p, &t, w)?;
            worst = worst.max((h - nodal.transfer).norm() / nodal.transfer.norm().max(f64::MIN_POSITIVE));
        }
    }
    Ok(CheckOutcome::new(
        "nodal analysis vs closed-form gain",
        worst,
        1e-12,
        format!("{cases} random circuits, all placements"),
    ))
}

struct SpectralCase {
    gain: Vec<f64>,
    budget: BudgetSpec,
}

fn spectral_cases(grid: &FrequencyGrid, count: usize) -> ShellResult<Vec<SpectralCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut out = Vec::new();
    while out.len() < count {
        let g_d = rng.gen_range(0.02..0.3);
        let p = CircuitParams::normalized(g_d, g_d)?;
        let t = Termination::new(log_uniform(&mut rng, 0.03, 3.0), log_uniform(&mut rng, 0.1, 2.0))?;
        let a = t.g_s * (t.g_l + p.g_d);
        let b = t.g_s + t.g_l + p.g_d + p.g_m;
        if a >= b * p.g_m {
            continue;
        }
        let profile = gain_profile(&p, &t, grid)?;
        let power = log_uniform(&mut rng, 0.01, 10.0);
        let nf = noise_figure(&p, &t)? * p.n0;
        let free = solve_constrained(&BudgetSpec::new(power, 0.0, nf)?, &profile)?;
        let floor = free.p_out / power;
        let eta = floor + rng.gen_range(0.1..0.9) * (profile.max() - floor);
        out.push(SpectralCase {
            gain: profile.values().to_vec(),
            budget: BudgetSpec::new(power, eta, nf)?,
        });
    }
    Ok(out)
}

fn band_check(cases: usize) -> ShellResult<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let grid = GridSpec::default().build()?;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let p = CircuitParams::new(rng.gen_range(0.5..2.0), rng.gen_range(0.2..5.0), rng.gen_range(0.0..0.5), 0.1, 1.0)?;
        let t = Termination::new(log_uniform(&mut rng, 1e-3, 1e2), log_uniform(&mut rng, 1e-3, 1e2))?;
        let wb = log_uniform(&mut rng, 1e-3, 10.0);
        let closed = analytic_band_gain_integral(&p, &t, wb)? / wb;
        worst = worst.max(rel(closed, band_average_gain(&p, &t, wb, &grid)?));
    }
    Ok(CheckOutcome::new(
        "closed-form band gain vs adaptive quadrature",
        worst,
        1e-9,
        format!("{cases} random circuits"),
    ))
}

fn outer_checks(cfg: &RunConfig, quick: bool) -> ShellResult<Vec<CheckOutcome>> {
    let circuit = cfg.circuit(cfg.g_d_over_gm[0])?;
    let (grid_spec, multistart) = if quick {
        (
            GridSpec {
                samples: 1025,
                ..cfg.grid
            },
            cfg.multistart.min(3),
        )
    } else {
        (cfg.grid, cfg.multistart)
    };
    let grid = grid_spec.build()?;
    let settings = SearchSettings {
        multistart,
        ..cfg.search()
    };
    let point = optimize_terminations_a(2.0, &circuit, cfg.p_norm, &grid, &settings)?;
    let sol = resolve_spectrum(&circuit, &point.termination(cfg.placement)?, point.eta, cfg.p_norm, &grid)?;
    let a = kkt_residuals(&sol, &point, &circuit, cfg.p_norm, &grid, &cfg.bounds())?;
    let mut out = vec![CheckOutcome::new(
        "optimality residuals, PSD and terminations",
        a.worst(),
        a.tolerance,
        format!("eta = 2, g_s = {:.6}, g_l = {:.6}", point.g_s, point.g_l),
    )];
    for with_matching in [false, true] {
        let eta = 5.0;
        let point = optimize_terminations_b(eta, &circuit, cfg.p_norm, cfg.omega_b_norm, with_matching, &grid, &settings)?;
        let r = uniform_kkt_residuals(&point, &circuit, cfg.p_norm, cfg.omega_b_norm, &grid, &cfg.bounds(), cfg.placement)?;
        out.push(CheckOutcome::new(
            if with_matching {
                "optimality residuals, uniform PSD with matching"
            } else {
                "optimality residuals, uniform PSD"
            },
            r.worst(),
            r.tolerance,
            format!("eta = {eta}, g_s = {:.6}", point.g_s),
        ));
    }
    Ok(out)
}

/// Runs every check with the library gain model.
pub fn verify(cfg: &RunConfig, opts: &VerifyOptions) -> ShellResult<Vec<CheckOutcome>> {
    verify_with(cfg, opts, &power_gain)
}

pub fn verify_with(cfg: &RunConfig, opts: &VerifyOptions, gain: &GainModel) -> ShellResult<Vec<CheckOutcome>> {
    cfg.validate()?;
    let q = opts.quick;
    let mut out = vec![nodal_check(gain, if q { 10 } else { 40 })?];

    let grid = GridSpec {
        omega_max: 20.0,
        samples: if q { 513 } else { 1025 },
        grading: 6.0,
    }
    .build()?;
    let cases = spectral_cases(&grid, if q { 3 } else { 10 })?;
    let scan = DualScan {
        mu_points: if q { 200 } else { 2000 },
        ..DualScan::default()
    };
    let (mut dual_gap, mut direct_gap, mut kkt_worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in &cases {
        let profile = crate::circuit::GainProfile::from_values(&grid, case.gain.clone())?;
        let sol = solve_constrained(&case.budget, &profile)?;
        let scan = brute_force_duals(&profile, &case.budget, &scan)?;
        dual_gap = dual_gap.max(rel(sol.capacity, scan.capacity)).max(rel(sol.p_out, scan.p_out));
        let direct = direct_psd_maximizer(&profile, &case.budget, &AscentOptions::default())?;
        direct_gap = direct_gap.max(rel(sol.capacity, direct.capacity));
        kkt_worst = kkt_worst.max(spectral_kkt(&sol, &profile, &case.budget)?.worst());
    }
    let n = cases.len();
    out.push(CheckOutcome::new(
        "spectral solver vs multiplier scan",
        dual_gap,
        1e-4,
        format!("{n} low-pass instances"),
    ));
    out.push(CheckOutcome::new(
        "spectral solver vs direct ascent",
        direct_gap,
        1e-5,
        format!("{n} low-pass instances"),
    ));
    out.push(CheckOutcome::new(
        "optimality residuals, spectral solver",
        kkt_worst,
        crate::oracle::kkt::DEFAULT_TOLERANCE,
        format!("{n} low-pass instances"),
    ));
    out.push(band_check(if q { 20 } else { 100 })?);
    out.extend(outer_checks(cfg, q)?);
    Ok(out)
}

/// Fixed-width pass/fail table.
pub fn render_table(checks: &[CheckOutcome]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{:<4}  {:<width$}  worst {:>10.3e}  tol {:>8.1e}  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance,
            c.detail
        ));
    }
    s
}
