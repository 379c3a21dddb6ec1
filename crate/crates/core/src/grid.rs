//! Symmetric angular-frequency grids with trapezoidal weights.
//!
//! Samples follow `omega(u) = omega_max * sinh(grading * u) / sinh(grading)` for
//! equally spaced `u` in `[-1, 1]`, which reduces to a uniform grid when
//! `grading == 0`. Grading packs samples around DC where the gain of the
//! low-pass amplifier varies fastest, while still reaching `omega_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction parameters of a [`FrequencyGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub omega_max: f64,
    /// Total sample count, odd so that `omega = 0` is a sample.
    pub samples: usize,
    pub grading: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            omega_max: 50.0,
            samples: 4097,
            grading: 12.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) {
            return Err(Error::invalid("omega_max", "must be positive and finite"));
        }
        if self.samples < 3 || self.samples % 2 == 0 {
            return Err(Error::invalid(
                "samples",
                format!("must be odd and at least 3, got {}", self.samples),
            ));
        }
        if !(self.grading.is_finite() && self.grading >= 0.0 && self.grading <= 200.0) {
            return Err(Error::invalid("grading", "must lie in [0, 200]"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(*self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    spec: GridSpec,
    samples: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.samples;
        let half = n / 2;
        let map = |j: usize| -> f64 {
            if j == half {
                return spec.omega_max;
            }
            let u = j as f64 / half as f64;
            if spec.grading == 0.0 {
                spec.omega_max * u
            } else {
                spec.omega_max * (spec.grading * u).sinh() / spec.grading.sinh()
            }
        };
        let positive: Vec<f64> = (0..=half).map(map).collect();
        let mut samples = Vec::with_capacity(n);
        samples.extend(positive[1..].iter().rev().map(|w| -w));
        samples.extend_from_slice(&positive);

        let mut weights = vec![0.0; n];
        weights[0] = 0.5 * (samples[1] - samples[0]);
        weights[n - 1] = 0.5 * (samples[n - 1] - samples[n - 2]);
        for k in 1..n - 1 {
            weights[k] = 0.5 * (samples[k + 1] - samples[k - 1]);
        }
        Ok(FrequencyGrid {
            spec,
            samples,
            weights,
        })
    }

    pub fn uniform(omega_max: f64, samples: usize) -> Result<Self> {
        Self::new(GridSpec {
            omega_max,
            samples,
            grading: 0.0,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn omega_max(&self) -> f64 {
        self.spec.omega_max
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the `omega = 0` sample.
    pub fn center(&self) -> usize {
        self.samples.len() / 2
    }

    /// Samples with `omega >= 0`, starting at DC.
    pub fn half_samples(&self) -> &[f64] {
        &self.samples[self.center()..]
    }

    /// Weights folding the full symmetric grid onto `omega >= 0`.
    pub fn half_weights(&self) -> Vec<f64> {
        let c = self.center();
        self.weights[c..]
            .iter()
            .enumerate()
            .map(|(k, w)| if k == 0 { *w } else { 2.0 * w })
            .collect()
    }

    /// Trapezoidal quadrature of samples taken on this grid.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch {
                left: values.len(),
                right: self.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Same mapping with `factor` times as many intervals; every
    /// `factor`-th sample of the result coincides with a sample of `self`.
    pub fn refined(&self, factor: usize) -> Result<FrequencyGrid> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be positive"));
        }
        FrequencyGrid::new(GridSpec {
            samples: (self.len() - 1) * factor + 1,
            ..self.spec
        })
    }

    /// Mirrors values computed on `half_samples()` onto the full grid.
    pub fn mirror(&self, half: &[f64]) -> Vec<f64> {
        let c = self.center();
        debug_assert_eq!(half.len(), c + 1);
        let mut full = Vec::with_capacity(self.len());
        full.extend(half[1..].iter().rev().copied());
        full.extend_from_slice(half);
        full
    }
}
