//! Small-signal model of the common-source amplifier stage.
//!
//! The gate node is driven by a Norton source `i_s` with conductance `g_s`.
//! `C_gd` bridges gate and drain, the transconductance `g_m` sinks current
//! from the drain, and the drain node is loaded by `g_l` in parallel with
//! the device output conductance `g_d`. Only `g_l` receives delivered power.
//!
//! With a generic bridge admittance `Y_b`, input admittance `Y_1` and drain
//! admittance `Y_2`, nodal analysis gives
//!
//! ```text
//! u_L / i_s = (Y_b - g_m) / (Y_1 Y_2 + Y_b (Y_1 + Y_2 + g_m))
//! ```
//!
//! which every matching placement reuses by adding the inductor admittance
//! to the branch it sits on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::grid::FrequencyGrid;

/// Device constants of the amplifier model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub g_m: f64,
    pub c_gd: f64,
    pub g_d: f64,
    /// Noise conductance entering the noise figure `1 + g_o / g_s`.
    pub g_o: f64,
    /// Flat input noise PSD.
    pub n0: f64,
}

impl CircuitParams {
    pub fn new(g_m: f64, c_gd: f64, g_d: f64, g_o: f64, n0: f64) -> Result<Self> {
        let p = CircuitParams {
            g_m,
            c_gd,
            g_d,
            g_o,
            n0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters in normalized units: `g_m = C_gd = N0 = 1`.
    pub fn normalized(g_d: f64, g_o: f64) -> Result<Self> {
        Self::new(1.0, 1.0, g_d, g_o, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g_m", self.g_m),
            ("C_gd", self.c_gd),
            ("g_d", self.g_d),
            ("g_o", self.g_o),
            ("N0", self.n0),
        ] {
            ensure_finite(name, v)?;
        }
        if self.g_m <= 0.0 {
            return Err(Error::invalid("g_m", "must be positive"));
        }
        if self.c_gd <= 0.0 {
            return Err(Error::invalid("C_gd", "must be positive"));
        }
        if self.n0 <= 0.0 {
            return Err(Error::invalid("N0", "must be positive"));
        }
        if self.g_d < 0.0 {
            return Err(Error::invalid("g_d", "must be non-negative"));
        }
        if self.g_o < 0.0 {
            return Err(Error::invalid("g_o", "must be non-negative"));
        }
        Ok(())
    }
}

/// Where the matching inductor is connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Placement {
    /// Across `C_gd`, between gate and drain.
    #[default]
    ParallelToCgd,
    /// From the drain (output) node to ground.
    ShuntOutput,
    /// From the gate (input) node to ground.
    ShuntInput,
}

impl Placement {
    pub const ALL: [Placement; 3] = [
        Placement::ParallelToCgd,
        Placement::ShuntOutput,
        Placement::ShuntInput,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub inductance: f64,
    pub placement: Placement,
}

/// Source/load conductances and the optional matching inductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub g_s: f64,
    pub g_l: f64,
    pub matching: Option<Matching>,
}

impl Termination {
    pub fn new(g_s: f64, g_l: f64) -> Result<Self> {
        let t = Termination {
            g_s,
            g_l,
            matching: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_matching(mut self, inductance: f64, placement: Placement) -> Result<Self> {
        self.matching = Some(Matching {
            inductance,
            placement,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn inductance(&self) -> Option<f64> {
        self.matching.map(|m| m.inductance)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("g_s", self.g_s)?;
        ensure_finite("g_l", self.g_l)?;
        if self.g_s <= 0.0 {
            return Err(Error::invalid("g_s", "must be positive"));
        }
        if self.g_l <= 0.0 {
            return Err(Error::invalid("g_l", "must be positive"));
        }
        if let Some(m) = self.matching {
            ensure_finite("L", m.inductance)?;
            if m.inductance <= 0.0 {
                return Err(Error::invalid("L", "must be positive"));
            }
        }
        Ok(())
    }
}

/// `u_L / i_s`, assuming validated inputs. At DC an inductor branch is a
/// short circuit, which is evaluated as the corresponding limit.
fn load_voltage_per_source_current(p: &CircuitParams, t: &Termination, omega: f64) -> Complex64 {
    let mut y1 = Complex64::new(t.g_s, 0.0);
    let mut y2 = Complex64::new(t.g_l + p.g_d, 0.0);
    let mut yb = Complex64::new(0.0, omega * p.c_gd);
    if let Some(m) = t.matching {
        if omega == 0.0 {
            return match m.placement {
                Placement::ShuntOutput | Placement::ShuntInput => Complex64::new(0.0, 0.0),
                // gate shorted to drain
                Placement::ParallelToCgd => Complex64::new(1.0 / (y1.re + y2.re + p.g_m), 0.0),
            };
        }
        let y_l = Complex64::new(0.0, -1.0 / (omega * m.inductance));
        match m.placement {
            Placement::ParallelToCgd => yb += y_l,
            Placement::ShuntOutput => y2 += y_l,
            Placement::ShuntInput => y1 += y_l,
        }
    }
    (yb - p.g_m) / (y1 * y2 + yb * (y1 + y2 + p.g_m))
}

fn check_inputs(p: &CircuitParams, t: &Termination, omega: f64) -> Result<()> {
    p.validate()?;
    t.validate()?;
    ensure_finite("omega", omega)
}

/// `H(jω) = u_L / (i_s / g_s)`.
pub fn transfer_function(p: &CircuitParams, t: &Termination, omega: f64) -> Result<Complex64> {
    check_inputs(p, t, omega)?;
    Ok(load_voltage_per_source_current(p, t, omega) * t.g_s)
}

/// Power delivered to `g_l` over the available source power.
///
/// Without a matching element this is the closed rational form; with one it
/// is `4 (g_l / g_s) |H|^2` from the modified nodal equations.
pub fn power_gain(p: &CircuitParams, t: &Termination, omega: f64) -> Result<f64> {
    check_inputs(p, t, omega)?;
    Ok(gain_unchecked(p, t, omega))
}

pub(crate) fn gain_unchecked(p: &CircuitParams, t: &Termination, omega: f64) -> f64 {
    match t.matching {
        None => {
            let a = t.g_s * (t.g_l + p.g_d);
            let b = t.g_s + t.g_l + p.g_d + p.g_m;
            let wc2 = (omega * p.c_gd).powi(2);
            4.0 * t.g_s * t.g_l * (p.g_m * p.g_m + wc2) / (a * a + wc2 * b * b)
        }
        Some(_) => 4.0 * t.g_s * t.g_l * load_voltage_per_source_current(p, t, omega).norm_sqr(),
    }
}

pub fn noise_figure(p: &CircuitParams, t: &Termination) -> Result<f64> {
    ensure_finite("g_s", t.g_s)?;
    if t.g_s <= 0.0 {
        return Err(Error::invalid("g_s", "must be positive"));
    }
    Ok(1.0 + p.g_o / t.g_s)
}

/// Noise PSD at the output, `N_F * N0 * |H|^2`.
pub fn output_noise_psd(p: &CircuitParams, t: &Termination, omega: f64) -> Result<f64> {
    let h = transfer_function(p, t, omega)?;
    Ok(noise_figure(p, t)? * p.n0 * h.norm_sqr())
}

/// Power gain sampled on a frequency grid.
#[derive(Debug, Clone)]
pub struct GainProfile<'g> {
    grid: &'g FrequencyGrid,
    values: Vec<f64>,
}

impl<'g> GainProfile<'g> {
    pub fn from_values(grid: &'g FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: values.len(),
                right: grid.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("gain", format!("sample {v} is not a finite non-negative value")));
        }
        Ok(GainProfile { grid, values })
    }

    /// Constant gain on every sample.
    pub fn flat(grid: &'g FrequencyGrid, gain: f64) -> Result<Self> {
        Self::from_values(grid, vec![gain; grid.len()])
    }

    pub fn grid(&self) -> &'g FrequencyGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values on the `omega >= 0` half of the grid.
    pub fn half_values(&self) -> &[f64] {
        &self.values[self.grid.center()..]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Samples the power gain on `grid`; evaluated on `omega >= 0` and mirrored,
/// so the profile is exactly even.
pub fn gain_profile<'g>(
    p: &CircuitParams,
    t: &Termination,
    grid: &'g FrequencyGrid,
) -> Result<GainProfile<'g>> {
    p.validate()?;
    t.validate()?;
    let half: Vec<f64> = grid
        .half_samples()
        .iter()
        .map(|&w| gain_unchecked(p, t, w))
        .collect();
    GainProfile::from_values(grid, grid.mirror(&half))
}
