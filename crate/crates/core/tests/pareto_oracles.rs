use infopower::circuit::{power_gain, CircuitParams, Placement, Termination};
use infopower::grid::{FrequencyGrid, GridSpec};
use infopower::oracle::{kkt_residuals, uniform_kkt_residuals};
use infopower::pareto::{
    band_average_gain, eta_max, optimize_terminations_a, optimize_terminations_b, resolve_spectrum, trace_pareto,
    BoxBounds, ParetoPoint, Scenario, SearchSettings, TraceConfig,
};
use infopower::spectrum::SolveStatus;

const POWER: f64 = 0.1;
const OMEGA_B: f64 = 0.1;

fn reference() -> CircuitParams {
    CircuitParams::normalized(0.1, 0.1).unwrap()
}

fn coarse() -> GridSpec {
    GridSpec { omega_max: 50.0, samples: 1025, grading: 12.0 }
}

fn capacity_at(grid: &FrequencyGrid, eta: f64, g_s: f64, g_l: f64) -> f64 {
    let t = Termination::new(g_s, g_l).unwrap();
    let sol = resolve_spectrum(&reference(), &t, eta, POWER, grid).unwrap();
    if sol.status.is_feasible() {
        sol.capacity
    } else {
        0.0
    }
}

fn log_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[test]
fn terminations_beat_an_exhaustive_scan() {
    let grid = coarse().build().unwrap();
    let eta = 5.0;
    let point = optimize_terminations_a(eta, &reference(), POWER, &grid, &SearchSettings::default()).unwrap();
    let ladder = log_ladder(1e-3, 1e2, 64);
    let mut best: f64 = 0.0;
    for g_s in &ladder {
        for g_l in &ladder {
            best = best.max(capacity_at(&grid, eta, *g_s, *g_l));
        }
    }
    assert!(point.capacity >= best * (1.0 - 1e-12), "{} < {best}", point.capacity);
    assert!((point.capacity - best) / point.capacity <= 1e-3);
}

#[test]
fn returned_points_are_locally_optimal() {
    let grid = coarse().build().unwrap();
    let bounds = BoxBounds::default();
    for eta in [2.0, 20.0] {
        let p = optimize_terminations_a(eta, &reference(), POWER, &grid, &SearchSettings::default()).unwrap();
        for (ds, dl) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
            let (g_s, g_l) = ((p.g_s * ds).clamp(bounds.g_s[0], bounds.g_s[1]), (p.g_l * dl).clamp(bounds.g_l[0], bounds.g_l[1]));
            let c = capacity_at(&grid, eta, g_s, g_l);
            assert!(c <= p.capacity * (1.0 + 1e-6), "eta {eta}: {c} > {}", p.capacity);
        }
        let sol = resolve_spectrum(&reference(), &p.termination(Placement::ParallelToCgd).unwrap(), eta, POWER, &grid).unwrap();
        let report = kkt_residuals(&sol, &p, &reference(), POWER, &grid, &bounds).unwrap();
        assert!(report.passes(), "{report:?}");
    }
}

#[test]
fn scenario_a_eta_max_is_the_best_dc_gain() {
    // in the low-pass regime the gain peaks at DC, and 4 g_l / (g_s (g_l + g_d)^2)
    // is largest at the smallest g_s with g_l = g_d
    let grid = coarse().build().unwrap();
    let top = eta_max(Scenario::PsdAndTerminations, &reference(), &grid, OMEGA_B, &SearchSettings::default()).unwrap();
    let expected = 4.0 * 0.1 / (1e-3 * 0.2 * 0.2);
    assert!((top - expected).abs() <= 1e-6 * expected, "{top} vs {expected}");
}

#[test]
fn scenario_b_eta_max_matches_a_dense_scan() {
    let grid = GridSpec::default().build().unwrap();
    let top = eta_max(Scenario::Uniform, &reference(), &grid, OMEGA_B, &SearchSettings::default()).unwrap();
    let mut best: f64 = 0.0;
    for g_s in log_ladder(1e-3, 1e2, 400) {
        for g_l in log_ladder(1e-3, 1e2, 400) {
            best = best.max(band_average_gain(&reference(), &Termination::new(g_s, g_l).unwrap(), OMEGA_B, &grid).unwrap());
        }
    }
    assert!(top >= best * (1.0 - 1e-12));
    assert!((top - best) / top <= 1e-4, "{top} vs {best}");
}

fn uniform_trace(with_matching: bool, etas: &[f64]) -> Vec<ParetoPoint> {
    let cfg = TraceConfig {
        scenario: if with_matching { Scenario::UniformWithMatching } else { Scenario::Uniform },
        eta_grid: etas.to_vec(),
        power: POWER,
        omega_b: OMEGA_B,
        grid: GridSpec::default(),
        search: SearchSettings::default(),
    };
    trace_pareto(&cfg, &reference()).unwrap()
}

#[test]
fn matching_dominates_and_shares_the_zero_target_point() {
    let etas = [0.0, 1.0, 5.0, 20.0, 40.0, 60.0, 66.0];
    let plain = uniform_trace(false, &etas);
    let matched = uniform_trace(true, &etas);
    for (a, b) in plain.iter().zip(&matched) {
        assert!(b.capacity >= a.capacity - 1e-9, "eta {}: {} < {}", a.eta, b.capacity, a.capacity);
        if a.status.is_feasible() {
            assert!(a.p_out >= a.eta * POWER - 1e-6 * POWER);
        }
    }
    assert!((plain[0].capacity - matched[0].capacity).abs() <= 1e-6 * plain[0].capacity);
    for w in plain.windows(2).chain(matched.windows(2)) {
        assert!(w[1].capacity <= w[0].capacity + 1e-9);
    }
}

#[test]
fn uniform_points_satisfy_the_optimality_conditions() {
    let grid = GridSpec::default().build().unwrap();
    let bounds = BoxBounds::default();
    for with_matching in [false, true] {
        for eta in [5.0, 30.0, 60.0] {
            let p = optimize_terminations_b(eta, &reference(), POWER, OMEGA_B, with_matching, &grid, &SearchSettings::default()).unwrap();
            assert_ne!(p.status, SolveStatus::Infeasible);
            let r = uniform_kkt_residuals(&p, &reference(), POWER, OMEGA_B, &grid, &bounds, Placement::ParallelToCgd).unwrap();
            assert!(r.passes(), "eta {eta} matching {with_matching}: {r:?}");
        }
    }
}

// Near the top of the frontier the best matched design is the L -> infinity
// limit, i.e. the unmatched circuit; the slope in L vanishes there and, at
// fixed L, shrinks with g_s.
#[test]
fn inductance_stops_mattering_at_the_gain_maximizing_end() {
    let grid = GridSpec::default().build().unwrap();
    let top = eta_max(Scenario::UniformWithMatching, &reference(), &grid, OMEGA_B, &SearchSettings::default()).unwrap();
    let p = optimize_terminations_b(0.98 * top, &reference(), POWER, OMEGA_B, true, &grid, &SearchSettings::default()).unwrap();
    assert!(p.g_s < 0.01, "{p:?}");
    assert_eq!(p.inductance, None);
    let slope = |g_s: f64, l: f64| {
        let mean = |l: f64| {
            let t = Termination::new(g_s, p.g_l).unwrap().with_matching(l, Placement::ParallelToCgd).unwrap();
            band_average_gain(&reference(), &t, OMEGA_B, &grid).unwrap()
        };
        let h = 1e-6 * l;
        (mean(l + h) - mean(l - h)) / (2.0 * h)
    };
    let far = 1e4 * BoxBounds::default().inductance[1];
    assert!(slope(p.g_s, far).abs() < 1e-6, "dG/dL = {}", slope(p.g_s, far));
    let l = BoxBounds::default().inductance[1];
    let mut previous = f64::INFINITY;
    for g_s in [1.0, 0.1, 0.01, 1e-3] {
        let s = slope(g_s, l).abs();
        assert!(s < previous, "slope {s} at g_s = {g_s}");
        previous = s;
    }
}

#[test]
fn infeasible_targets_are_reported_not_raised() {
    let grid = coarse().build().unwrap();
    let p = optimize_terminations_a(1e9, &reference(), POWER, &grid, &SearchSettings::default()).unwrap();
    assert_eq!(p.status, SolveStatus::Infeasible);
    let dc = power_gain(&reference(), &Termination::new(1e-3, 0.1).unwrap(), 0.0).unwrap();
    assert!(dc < 1e9);
}
