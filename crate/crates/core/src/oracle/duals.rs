//! Dual search by exhaustive scanning, kept deliberately simple.

use std::f64::consts::LN_2;

use crate::circuit::GainProfile;
use crate::error::{Error, Result};
use crate::spectrum::{BudgetSpec, SolveStatus, INFEASIBLE_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualScan {
    pub mu_points: usize,
    pub golden_iterations: usize,
}

impl Default for DualScan {
    fn default() -> Self {
        DualScan {
            mu_points: 2000,
            golden_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualEstimate {
    pub lambda: f64,
    pub mu: f64,
    pub capacity: f64,
    pub p_out: f64,
    pub psd: Vec<f64>,
    pub status: SolveStatus,
}

struct Scan<'a> {
    w: &'a [f64],
    g: &'a [f64],
    nf: f64,
    gmax: f64,
    power: f64,
}

impl Scan<'_> {
    // the water level is carried as `t = λ - μ max G`
    fn phi(&self, t: f64, mu: f64, k: usize) -> f64 {
        (1.0 / (LN_2 * (t + mu * (self.gmax - self.g[k]))) - self.nf).max(0.0)
    }

    fn total(&self, t: f64, mu: f64) -> f64 {
        (0..self.w.len()).map(|k| self.w[k] * self.phi(t, mu, k)).sum()
    }

    fn transfer(&self, t: f64, mu: f64) -> f64 {
        (0..self.w.len()).map(|k| self.w[k] * self.g[k] * self.phi(t, mu, k)).sum()
    }

    /// Plain bisection on the water level.
    fn level(&self, mu: f64) -> f64 {
        let mut hi = 1.0 / (LN_2 * self.nf);
        let mut lo = hi;
        while self.total(lo, mu) <= self.power {
            lo *= 0.5;
        }
        for _ in 0..400 {
            let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi {
                break;
            }
            if self.total(mid, mu) > self.power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.total(lo, mu) - self.power).abs() < (self.total(hi, mu) - self.power).abs() {
            lo
        } else {
            hi
        }
    }

    fn miss(&self, mu: f64, target: f64) -> f64 {
        self.transfer(self.level(mu), mu) - target
    }

    fn estimate(&self, mu: f64, status: SolveStatus) -> DualEstimate {
        let t = self.level(mu);
        let psd: Vec<f64> = (0..self.w.len()).map(|k| self.phi(t, mu, k)).collect();
        let capacity = (0..self.w.len())
            .map(|k| self.w[k] * (psd[k] / self.nf).ln_1p() / LN_2)
            .sum();
        DualEstimate {
            lambda: t + mu * self.gmax,
            mu,
            capacity,
            p_out: self.transfer(t, mu),
            psd,
            status,
        }
    }
}

/// Scans `μ` on a geometric grid, solving the water level by bisection at
/// each node, then refines the transfer match by golden-section search.
pub fn brute_force_duals(gain: &GainProfile<'_>, budget: &BudgetSpec, scan: &DualScan) -> Result<DualEstimate> {
    budget.validate()?;
    if scan.mu_points < 2 {
        return Err(Error::invalid("mu_points", "need at least two scan points"));
    }
    let s = Scan {
        w: gain.grid().weights(),
        g: gain.values(),
        nf: budget.nf_n0,
        gmax: gain.max(),
        power: budget.power,
    };
    let target = budget.eta * budget.power;
    if s.miss(0.0, target) >= 0.0 {
        return Ok(s.estimate(0.0, SolveStatus::ConstraintInactive));
    }
    if budget.eta >= (1.0 - INFEASIBLE_MARGIN) * s.gmax {
        return Ok(s.estimate(0.0, SolveStatus::Infeasible));
    }
    let t0 = s.level(0.0);
    let mu0 = t0 / (2.0 * s.gmax);
    let (mut lo_exp, mut hi_exp) = (-6.0, 6.0);
    let bracket = loop {
        let nodes: Vec<f64> = (0..scan.mu_points)
            .map(|k| mu0 * 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (scan.mu_points - 1) as f64))
            .collect();
        let misses: Vec<f64> = nodes.iter().map(|&mu| s.miss(mu, target)).collect();
        if let Some(k) = misses.iter().position(|m| *m >= 0.0) {
            break if k == 0 { (0.0, nodes[0]) } else { (nodes[k - 1], nodes[k]) };
        }
        if hi_exp > 60.0 {
            return Err(Error::NoConvergence {
                iterations: scan.mu_points,
                detail: "transfer target not reached on the multiplier scan".into(),
            });
        }
        lo_exp = hi_exp;
        hi_exp += 6.0;
    };

    // golden section on |miss|, logarithmic unless the bracket touches zero
    let log_scale = bracket.0 > 0.0;
    let (map, unmap): (fn(f64) -> f64, fn(f64) -> f64) = if log_scale { (f64::ln, f64::exp) } else { (|x| x, |x| x) };
    let (mut a, mut b) = (map(bracket.0), map(bracket.1));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let cost = |x: f64| s.miss(unmap(x), target).abs();
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..scan.golden_iterations {
        if !(c > a && d < b && c < d) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = cost(d);
        }
    }
    let best = [a, c, d, b]
        .into_iter()
        .min_by(|x, y| cost(*x).total_cmp(&cost(*y)))
        .expect("non-empty");
    Ok(s.estimate(unmap(best), SolveStatus::ConstraintActive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;

    #[test]
    fn flat_gain_closed_form() {
        let grid = FrequencyGrid::uniform(5.0, 201).unwrap();
        let gain = GainProfile::flat(&grid, 2.0).unwrap();
        let est = brute_force_duals(&gain, &BudgetSpec::new(1.0, 1.5, 1.0).unwrap(), &DualScan::default()).unwrap();
        assert_eq!(est.status, SolveStatus::ConstraintInactive);
        let expect = 10.0 * (1.0f64 + 0.1).log2();
        assert!((est.capacity - expect).abs() <= 1e-12 * expect);
        let est = brute_force_duals(&gain, &BudgetSpec::new(1.0, 2.5, 1.0).unwrap(), &DualScan::default()).unwrap();
        assert_eq!(est.status, SolveStatus::Infeasible);
    }
}
