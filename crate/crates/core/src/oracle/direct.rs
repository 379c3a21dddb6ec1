//! Primal maximization of the discretized capacity by projected ascent.
//!
//! Works in the quadrature-weighted inner product, where the gradient of
//! `Σ w log2(1 + Φ/nf)` is `1 / (ln2 (nf + Φ))` sample by sample and the
//! projection onto `{Φ ≥ 0, Σ wΦ = P, Σ wGΦ ≥ ηP}` has the form
//! `max(0, y - α + βG)`.

use std::f64::consts::LN_2;

use crate::circuit::GainProfile;
use crate::error::{Error, Result};
use crate::roots::brent;
use crate::spectrum::BudgetSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub max_iterations: usize,
    /// Relative size of the projected gradient step at convergence.
    pub tolerance: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_iterations: 100_000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOptimum {
    pub psd: Vec<f64>,
    pub capacity: f64,
    pub p_out: f64,
    pub iterations: usize,
    pub step_residual: f64,
}

struct Projector<'a> {
    w: &'a [f64],
    g: &'a [f64],
    power: f64,
    target: f64,
    order: Vec<usize>,
}

impl Projector<'_> {
    /// `α` with `Σ w max(0, z - α) = P`.
    fn shift(&mut self, z: &[f64]) -> f64 {
        self.order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
        let (mut wsum, mut zsum) = (0.0, 0.0);
        for (j, &k) in self.order.iter().enumerate() {
            wsum += self.w[k];
            zsum += self.w[k] * z[k];
            let alpha = (zsum - self.power) / wsum;
            let next = self.order.get(j + 1).map(|&n| z[n]).unwrap_or(f64::NEG_INFINITY);
            if alpha >= next {
                return alpha;
            }
        }
        unreachable!("the last breakpoint always qualifies")
    }

    fn with_tilt(&mut self, y: &[f64], beta: f64, out: &mut [f64]) -> f64 {
        let z: Vec<f64> = y.iter().zip(self.g).map(|(v, g)| v + beta * g).collect();
        let alpha = self.shift(&z);
        for (o, v) in out.iter_mut().zip(&z) {
            *o = (v - alpha).max(0.0);
        }
        out.iter().zip(self.w).zip(self.g).map(|((p, w), g)| p * w * g).sum()
    }

    fn project(&mut self, y: &[f64], out: &mut [f64]) {
        if self.with_tilt(y, 0.0, out) >= self.target {
            return;
        }
        let mut hi = 1.0;
        let mut f_hi = self.with_tilt(y, hi, out) - self.target;
        while f_hi < 0.0 {
            hi *= 2.0;
            f_hi = self.with_tilt(y, hi, out) - self.target;
        }
        let f_lo = self.with_tilt(y, 0.0, out) - self.target;
        let mut scratch = vec![0.0; out.len()];
        let target = self.target;
        let beta = brent(
            |b| self.with_tilt(y, b, &mut scratch) - target,
            0.0,
            hi,
            f_lo,
            f_hi,
            1e-15 * target,
            300,
        );
        self.with_tilt(y, beta, out);
    }
}

fn objective(psd: &[f64], w: &[f64], nf: f64) -> f64 {
    psd.iter().zip(w).map(|(p, w)| w * (p / nf).ln_1p() / LN_2).sum()
}

/// Accelerated projected gradient ascent with restarts.
pub fn direct_psd_maximizer(gain: &GainProfile<'_>, budget: &BudgetSpec, opts: &AscentOptions) -> Result<DirectOptimum> {
    budget.validate()?;
    let w = gain.grid().weights();
    let g = gain.values();
    let n = w.len();
    let nf = budget.nf_n0;
    if budget.eta >= gain.max() {
        return Err(Error::invalid("eta", "transfer target exceeds the peak gain"));
    }
    let mut proj = Projector {
        w,
        g,
        power: budget.power,
        target: budget.eta * budget.power,
        order: (0..n).collect(),
    };
    let step = LN_2 * nf * nf;
    let norm = |v: &[f64]| v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
    let ascend = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(x.iter().map(|p| p + step / (LN_2 * (nf + p))));
    };

    let mut x = vec![0.0; n];
    let width: f64 = w.iter().sum();
    proj.project(&vec![budget.power / width; n], &mut x);
    let mut prev = x.clone();
    let mut y = x.clone();
    let mut trial = Vec::with_capacity(n);
    let mut next = vec![0.0; n];
    let mut momentum = 1.0f64;
    let mut f_x = objective(&x, w, nf);
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        if it % 25 == 1 {
            ascend(&x, &mut trial);
            proj.project(&trial, &mut next);
            let diff: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
            residual = norm(&diff) / norm(&x).max(f64::MIN_POSITIVE);
            if residual <= opts.tolerance {
                return Ok(finish(x, w, g, nf, it, residual));
            }
        }
        ascend(&y, &mut trial);
        proj.project(&trial, &mut next);
        let f_next = objective(&next, w, nf);
        if f_next < f_x {
            // restart: plain projected step from the last iterate
            momentum = 1.0;
            ascend(&x, &mut trial);
            proj.project(&trial, &mut next);
            prev.copy_from_slice(&x);
            x.copy_from_slice(&next);
            y.copy_from_slice(&x);
            f_x = objective(&x, w, nf);
            continue;
        }
        prev.copy_from_slice(&x);
        x.copy_from_slice(&next);
        f_x = f_next;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / t_next;
        momentum = t_next;
        for k in 0..n {
            y[k] = x[k] + beta * (x[k] - prev[k]);
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        detail: format!("projected step residual {residual:.3e} above {:.1e}", opts.tolerance),
    })
}

fn finish(psd: Vec<f64>, w: &[f64], g: &[f64], nf: f64, iterations: usize, step_residual: f64) -> DirectOptimum {
    let capacity = objective(&psd, w, nf);
    let p_out = psd.iter().zip(w).zip(g).map(|((p, w), g)| p * w * g).sum();
    DirectOptimum {
        psd,
        capacity,
        p_out,
        iterations,
        step_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;

    #[test]
    fn flat_gain_gives_flat_psd() {
        let grid = FrequencyGrid::uniform(5.0, 101).unwrap();
        let gain = GainProfile::flat(&grid, 1.0).unwrap();
        let out = direct_psd_maximizer(&gain, &BudgetSpec::new(1.0, 0.5, 1.0).unwrap(), &AscentOptions::default()).unwrap();
        assert!(out.psd.iter().all(|p| (p - 0.1).abs() < 1e-12));
    }

    #[test]
    fn projection_hits_both_constraints() {
        let grid = FrequencyGrid::uniform(1.0, 11).unwrap();
        let g: Vec<f64> = grid.samples().iter().map(|w| 2.0 - w.abs()).collect();
        let mut proj = Projector {
            w: grid.weights(),
            g: &g,
            power: 1.0,
            target: 1.8,
            order: (0..11).collect(),
        };
        let mut out = vec![0.0; 11];
        proj.project(&[0.5; 11], &mut out);
        let total: f64 = out.iter().zip(grid.weights()).map(|(p, w)| p * w).sum();
        let moved: f64 = out.iter().zip(grid.weights()).zip(&g).map(|((p, w), g)| p * w * g).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((moved - 1.8).abs() < 1e-13);
        assert!(out.iter().all(|p| *p >= 0.0));
    }
}
