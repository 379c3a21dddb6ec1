//! JSON run configuration.
//!
//! Everything is resolved into normalized units on load: conductances in
//! units of `g_m`, angular frequency in units of `g_m / C_gd` and power in
//! units of `N0 g_m / C_gd`. A `physical` block is converted on ingestion
//! and the mapping is kept in [`RunConfig::normalization`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ShellError, ShellResult};
use crate::circuit::{CircuitParams, Placement, Termination};
use crate::grid::GridSpec;
use crate::pareto::{BoxBounds, Scenario, SearchSettings};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Device and drive values in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub g_m: f64,
    #[serde(rename = "C_gd")]
    pub c_gd: f64,
    pub g_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_o: Option<f64>,
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "omega_B", default, skip_serializing_if = "Option::is_none")]
    pub omega_b: Option<f64>,
}

/// Scales that turn normalized results back into physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    /// Siemens per normalized conductance (`g_m`).
    pub conductance_scale: f64,
    /// rad/s per normalized angular frequency (`g_m / C_gd`).
    pub frequency_scale: f64,
    /// Watts per normalized power (`N0 g_m / C_gd`).
    pub power_scale: f64,
    pub physical: PhysicalParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminationSpec {
    pub g_s: f64,
    pub g_l: f64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    g_d_over_gm: Option<OneOrMany<f64>>,
    g_o_over_gm: Option<f64>,
    #[serde(rename = "P_norm")]
    p_norm: Option<f64>,
    #[serde(rename = "omega_B_norm")]
    omega_b_norm: Option<f64>,
    scenario: Option<OneOrMany<Scenario>>,
    physical: Option<PhysicalParams>,
    normalization: Option<Normalization>,
    placement: Option<Placement>,
    grid: Option<GridSpec>,
    g_s_bounds: Option<[f64; 2]>,
    g_l_bounds: Option<[f64; 2]>,
    #[serde(rename = "L_bounds")]
    l_bounds: Option<[f64; 2]>,
    eta_grid: Option<Vec<f64>>,
    eta_points: Option<usize>,
    multistart: Option<usize>,
    tolerance: Option<f64>,
    psd_etas: Option<Vec<f64>>,
    termination: Option<TerminationSpec>,
    output_dir: Option<String>,
    emit_svg: Option<bool>,
}

/// Fully resolved configuration in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// One trace family member per value.
    pub g_d_over_gm: Vec<f64>,
    /// Device noise conductance; equal to `g_d` of each member when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_o_over_gm: Option<f64>,
    #[serde(rename = "P_norm")]
    pub p_norm: f64,
    #[serde(rename = "omega_B_norm")]
    pub omega_b_norm: f64,
    pub scenario: Vec<Scenario>,
    pub placement: Placement,
    pub grid: GridSpec,
    pub g_s_bounds: [f64; 2],
    pub g_l_bounds: [f64; 2],
    #[serde(rename = "L_bounds")]
    pub l_bounds: [f64; 2],
    /// Explicit sweep; when absent each member uses the default grid up to
    /// its own frontier endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<Vec<f64>>,
    pub eta_points: usize,
    pub multistart: usize,
    pub tolerance: f64,
    pub psd_etas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub emit_svg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BoxBounds::default();
        RunConfig {
            g_d_over_gm: vec![0.1],
            g_o_over_gm: None,
            p_norm: 0.1,
            omega_b_norm: 0.1,
            scenario: vec![Scenario::PsdAndTerminations],
            placement: Placement::default(),
            grid: GridSpec::default(),
            g_s_bounds: b.g_s,
            g_l_bounds: b.g_l,
            l_bounds: b.inductance,
            eta_grid: None,
            eta_points: 50,
            multistart: 5,
            tolerance: 1e-8,
            psd_etas: Vec::new(),
            termination: None,
            output_dir: None,
            emit_svg: false,
            normalization: None,
        }
    }
}

fn positive(key: &str, v: f64) -> ShellResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ShellError::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> ShellResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ShellError::config(key, format!("must be non-negative and finite, got {v}")))
    }
}

fn bounds(key: &str, b: [f64; 2]) -> ShellResult<[f64; 2]> {
    positive(key, b[0])?;
    positive(key, b[1])?;
    if b[0] > b[1] {
        return Err(ShellError::config(key, format!("lower bound {} exceeds upper bound {}", b[0], b[1])));
    }
    Ok(b)
}

impl RunConfig {
    pub fn bounds(&self) -> BoxBounds {
        BoxBounds {
            g_s: self.g_s_bounds,
            g_l: self.g_l_bounds,
            inductance: self.l_bounds,
        }
    }

    pub fn search(&self) -> SearchSettings {
        SearchSettings {
            bounds: self.bounds(),
            multistart: self.multistart,
            tolerance: self.tolerance,
            placement: self.placement,
        }
    }

    /// Normalized device parameters of one family member.
    pub fn circuit(&self, g_d: f64) -> crate::Result<CircuitParams> {
        CircuitParams::normalized(g_d, self.g_o_over_gm.unwrap_or(g_d))
    }

    pub fn termination(&self) -> crate::Result<Termination> {
        let spec = self.termination.unwrap_or(TerminationSpec {
            g_s: 1.0,
            g_l: 1.0,
            inductance: None,
        });
        let t = Termination::new(spec.g_s, spec.g_l)?;
        match spec.inductance {
            Some(l) => t.with_matching(l, self.placement),
            None => Ok(t),
        }
    }

    pub fn validate(&self) -> ShellResult<()> {
        if self.g_d_over_gm.is_empty() {
            return Err(ShellError::config("g_d_over_gm", "needs at least one value"));
        }
        for v in &self.g_d_over_gm {
            non_negative("g_d_over_gm", *v)?;
        }
        if let Some(v) = self.g_o_over_gm {
            non_negative("g_o_over_gm", v)?;
        }
        positive("P_norm", self.p_norm)?;
        positive("omega_B_norm", self.omega_b_norm)?;
        if self.scenario.is_empty() {
            return Err(ShellError::config("scenario", "needs at least one scenario"));
        }
        self.grid
            .validate()
            .map_err(|e| ShellError::config("grid", e.to_string()))?;
        if self.scenario.iter().any(|s| *s != Scenario::PsdAndTerminations) && 0.5 * self.omega_b_norm > self.grid.omega_max {
            return Err(ShellError::config("omega_B_norm", "half bandwidth exceeds grid.omega_max"));
        }
        bounds("g_s_bounds", self.g_s_bounds)?;
        bounds("g_l_bounds", self.g_l_bounds)?;
        bounds("L_bounds", self.l_bounds)?;
        if let Some(grid) = &self.eta_grid {
            if grid.is_empty() {
                return Err(ShellError::config("eta_grid", "must not be empty"));
            }
            for v in grid {
                non_negative("eta_grid", *v)?;
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ShellError::config("eta_grid", "must be strictly increasing"));
            }
        }
        if self.eta_points == 0 {
            return Err(ShellError::config("eta_points", "must be at least 1"));
        }
        if self.multistart == 0 {
            return Err(ShellError::config("multistart", "must be at least 1"));
        }
        positive("tolerance", self.tolerance)?;
        for v in &self.psd_etas {
            non_negative("psd_etas", *v)?;
        }
        if let Some(t) = self.termination {
            positive("termination.g_s", t.g_s)?;
            positive("termination.g_l", t.g_l)?;
            if let Some(l) = t.inductance {
                positive("termination.L", l)?;
            }
        }
        Ok(())
    }
}

fn resolve(raw: RawConfig) -> ShellResult<RunConfig> {
    let d = RunConfig::default();
    let mut cfg = RunConfig {
        g_d_over_gm: d.g_d_over_gm,
        g_o_over_gm: raw.g_o_over_gm,
        p_norm: d.p_norm,
        omega_b_norm: raw.omega_b_norm.unwrap_or(d.omega_b_norm),
        scenario: raw
            .scenario
            .map(OneOrMany::into_vec)
            .ok_or_else(|| ShellError::config("scenario", "is required"))?,
        placement: raw.placement.unwrap_or(d.placement),
        grid: raw.grid.unwrap_or(d.grid),
        g_s_bounds: raw.g_s_bounds.unwrap_or(d.g_s_bounds),
        g_l_bounds: raw.g_l_bounds.unwrap_or(d.g_l_bounds),
        l_bounds: raw.l_bounds.unwrap_or(d.l_bounds),
        eta_grid: raw.eta_grid,
        eta_points: raw.eta_points.unwrap_or(d.eta_points),
        multistart: raw.multistart.unwrap_or(d.multistart),
        tolerance: raw.tolerance.unwrap_or(d.tolerance),
        psd_etas: raw.psd_etas.unwrap_or_default(),
        termination: raw.termination,
        output_dir: raw.output_dir,
        emit_svg: raw.emit_svg.unwrap_or(false),
        normalization: raw.normalization,
    };
    match raw.physical {
        Some(ph) => {
            for (key, given) in [
                ("g_d_over_gm", raw.g_d_over_gm.is_some()),
                ("g_o_over_gm", raw.g_o_over_gm.is_some()),
                ("P_norm", raw.p_norm.is_some()),
                ("omega_B_norm", raw.omega_b_norm.is_some() && ph.omega_b.is_some()),
                ("normalization", cfg.normalization.is_some()),
            ] {
                if given {
                    return Err(ShellError::config(key, "conflicts with the `physical` block"));
                }
            }
            let g_m = positive("physical.g_m", ph.g_m)?;
            let c_gd = positive("physical.C_gd", ph.c_gd)?;
            let n0 = positive("physical.N0", ph.n0)?;
            non_negative("physical.g_d", ph.g_d)?;
            positive("physical.P", ph.power)?;
            let freq = g_m / c_gd;
            let power = n0 * g_m / c_gd;
            cfg.g_d_over_gm = vec![ph.g_d / g_m];
            if let Some(g_o) = ph.g_o {
                cfg.g_o_over_gm = Some(non_negative("physical.g_o", g_o)? / g_m);
            }
            cfg.p_norm = ph.power / power;
            if let Some(w) = ph.omega_b {
                cfg.omega_b_norm = positive("physical.omega_B", w)? / freq;
            }
            cfg.normalization = Some(Normalization {
                conductance_scale: g_m,
                frequency_scale: freq,
                power_scale: power,
                physical: ph,
            });
        }
        None => {
            cfg.g_d_over_gm = raw
                .g_d_over_gm
                .map(OneOrMany::into_vec)
                .ok_or_else(|| ShellError::config("g_d_over_gm", "is required (or give a `physical` block)"))?;
            cfg.p_norm = raw
                .p_norm
                .ok_or_else(|| ShellError::config("P_norm", "is required (or give a `physical` block)"))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_str(text: &str) -> ShellResult<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    resolve(raw)
}

pub fn load_config(path: &Path) -> ShellResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ShellError::io(path, e))?;
    load_config_str(&text)
}

/// Recovers the configuration recorded in a `meta.json` document.
pub fn config_from_meta(text: &str) -> ShellResult<RunConfig> {
    let doc: serde_json::Value = serde_json::from_str(text)?;
    let cfg = doc
        .get("config")
        .ok_or_else(|| ShellError::config("config", "missing from metadata"))?;
    resolve(serde_json::from_value(cfg.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = load_config_str(r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A"}"#).unwrap();
        assert_eq!(cfg.g_d_over_gm, vec![0.1]);
        assert_eq!(cfg.scenario, vec![Scenario::PsdAndTerminations]);
        let c = cfg.circuit(0.1).unwrap();
        assert_eq!(c.g_o, 0.1);
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.g_s_bounds, [1e-3, 1e2]);
    }

    #[test]
    fn unordered_bounds_name_the_key() {
        let err = load_config_str(r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "g_s_bounds": [0.1, 0.01]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("g_s_bounds"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_config_str(r#"{"g_d_over_gm": 0.1, "P_norm": 0.1, "scenario": "A", "gd": 1}"#).unwrap_err();
        assert!(err.to_string().contains("gd"), "{err}");
    }

    #[test]
    fn non_positive_power_names_the_key() {
        let err = load_config_str(r#"{"g_d_over_gm": 0.1, "P_norm": 0, "scenario": "A"}"#).unwrap_err();
        assert!(err.to_string().contains("P_norm"), "{err}");
    }

    #[test]
    fn physical_block_is_normalized() {
        let cfg = load_config_str(
            r#"{"scenario": ["B", "BL"], "physical": {"g_m": 0.02, "C_gd": 1e-13, "g_d": 0.002, "N0": 4e-21, "P": 8e-11, "omega_B": 2e10}}"#,
        )
        .unwrap();
        assert!((cfg.g_d_over_gm[0] - 0.1).abs() < 1e-15);
        assert!((cfg.p_norm - 8e-11 / (4e-21 * 2e11)).abs() < 1e-12);
        assert!((cfg.omega_b_norm - 0.1).abs() < 1e-15);
        let n = cfg.normalization.unwrap();
        assert_eq!(n.frequency_scale, 0.02 / 1e-13);
        let again = load_config_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn physical_conflicts_are_reported() {
        let err = load_config_str(
            r#"{"scenario": "A", "P_norm": 0.1, "physical": {"g_m": 1, "C_gd": 1, "g_d": 0.1, "N0": 1, "P": 0.1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("P_norm"));
    }
}
