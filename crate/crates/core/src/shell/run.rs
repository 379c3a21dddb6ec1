//! The `trace`, `psd` and `gain-profile` commands.
//!
//! All numbers are computed first; files are written afterwards in one
//! sequential pass so a failure never leaves a half-written member behind.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::{columns_csv, format_float, pareto_csv, write_file};
use super::svg::{emit_svg, PlotSpec};
use super::{ShellError, ShellResult};
use crate::circuit::gain_profile;
use crate::grid::FrequencyGrid;
use crate::pareto::{default_eta_grid, eta_max, optimize_point, resolve_spectrum, trace_pareto, ParetoPoint, Scenario, TraceConfig};

pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSummary {
    pub scenario: Scenario,
    pub g_d_over_gm: f64,
    pub g_o_over_gm: f64,
    pub eta_max: Option<f64>,
    pub directory: String,
    pub points: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub members: Vec<MemberSummary>,
}

impl RunSummary {
    pub fn infeasible(&self) -> usize {
        self.members.iter().map(|m| m.infeasible).sum()
    }
}

struct Member {
    scenario: Scenario,
    g_d: f64,
    dir: String,
}

fn members(cfg: &RunConfig) -> Vec<Member> {
    let single = cfg.scenario.len() * cfg.g_d_over_gm.len() == 1;
    let mut out = Vec::new();
    for s in &cfg.scenario {
        for g_d in &cfg.g_d_over_gm {
            out.push(Member {
                scenario: *s,
                g_d: *g_d,
                dir: if single {
                    String::new()
                } else {
                    format!("{}_gd{}", s.tag(), format_float(*g_d))
                },
            });
        }
    }
    out
}

fn legend(m: &Member) -> String {
    format!("{} g_d/g_m = {}", m.scenario.tag(), format_float(m.g_d))
}

/// Creates the output directory and checks that files can be written there.
pub fn prepare_output_dir(dir: &Path) -> ShellResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| ShellError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| ShellError::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| ShellError::io(&probe, e))
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(cfg.output_dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR))
}

struct Files(Vec<(PathBuf, String)>);

impl Files {
    fn add(&mut self, path: PathBuf, text: String) {
        self.0.push((path, text));
    }

    fn write(self) -> ShellResult<()> {
        for (path, text) in self.0 {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| ShellError::io(parent, e))?;
            }
            write_file(&path, &text)?;
        }
        Ok(())
    }
}

fn meta(cfg: &RunConfig, command: &str, members: &[MemberSummary]) -> String {
    let doc = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "units": {
            "conductance": "g_m",
            "angular_frequency": "g_m/C_gd",
            "power": "N0*g_m/C_gd",
            "capacity": "bit*g_m/C_gd",
            "inductance": "C_gd/g_m^2",
        },
        "normalization": cfg.normalization,
        "tolerances": {
            "objective": cfg.tolerance,
            "kkt": crate::oracle::kkt::DEFAULT_TOLERANCE,
            "infeasible_margin": crate::spectrum::INFEASIBLE_MARGIN,
        },
        "members": members,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

const PARETO_PLOT: PlotSpec<'static> = PlotSpec {
    title: "Capacity versus power transfer",
    x_column: "eta",
    y_column: "capacity",
    x_label: "power transfer factor eta",
    y_label: "capacity [bit g_m/C_gd]",
};

const PSD_PLOT: PlotSpec<'static> = PlotSpec {
    title: "Optimal input PSD",
    x_column: "omega",
    y_column: "phi_s",
    x_label: "angular frequency [g_m/C_gd]",
    y_label: "PSD [N0]",
};

const GAIN_PLOT: PlotSpec<'static> = PlotSpec {
    title: "Power gain",
    x_column: "omega",
    y_column: "gain",
    x_label: "angular frequency [g_m/C_gd]",
    y_label: "power gain",
};

fn psd_tables(
    cfg: &RunConfig,
    member: &Member,
    grid: &FrequencyGrid,
    trace: &[ParetoPoint],
    trace_cfg: &TraceConfig,
) -> ShellResult<Vec<(f64, String)>> {
    let circuit = cfg.circuit(member.g_d)?;
    let mut out = Vec::new();
    for &eta in &cfg.psd_etas {
        let point = match trace.iter().find(|p| p.eta == eta) {
            Some(p) => p.clone(),
            None => optimize_point(eta, trace_cfg, &circuit, grid)?,
        };
        let term = point.termination(cfg.placement)?;
        let sol = resolve_spectrum(&circuit, &term, eta, cfg.p_norm, grid)?;
        out.push((eta, columns_csv(["omega", "phi_s"], grid.samples(), &sol.psd)));
    }
    Ok(out)
}

fn trace_config(cfg: &RunConfig, member: &Member, grid: &FrequencyGrid) -> ShellResult<(TraceConfig, Option<f64>)> {
    let circuit = cfg.circuit(member.g_d)?;
    let search = cfg.search();
    let (eta_grid, top) = match &cfg.eta_grid {
        Some(g) => (g.clone(), None),
        None => {
            let top = eta_max(member.scenario, &circuit, grid, cfg.omega_b_norm, &search)?;
            (default_eta_grid(top, cfg.eta_points), Some(top))
        }
    };
    Ok((
        TraceConfig {
            scenario: member.scenario,
            eta_grid,
            power: cfg.p_norm,
            omega_b: cfg.omega_b_norm,
            grid: cfg.grid,
            search,
        },
        top,
    ))
}

/// Traces every configured family member and writes `pareto.csv`, the
/// requested `psd_<eta>.csv` files, `meta.json` and optional SVG plots.
pub fn run_trace(cfg: &RunConfig) -> ShellResult<RunSummary> {
    cfg.validate()?;
    let root = output_dir(cfg);
    prepare_output_dir(&root)?;
    let grid = cfg.grid.build()?;
    let mut files = Files(Vec::new());
    let mut summaries = Vec::new();
    let mut combined: Vec<(String, String)> = Vec::new();
    let list = members(cfg);
    for m in &list {
        let circuit = cfg.circuit(m.g_d)?;
        let (tc, top) = trace_config(cfg, m, &grid)?;
        let points = trace_pareto(&tc, &circuit)?;
        let dir = root.join(&m.dir);
        let table = pareto_csv(&points);
        if cfg.emit_svg {
            let label = legend(m);
            files.add(dir.join("pareto.svg"), emit_svg(&[(&label, &table)], &PARETO_PLOT)?);
        }
        if m.scenario == Scenario::PsdAndTerminations && !cfg.psd_etas.is_empty() {
            let psds = psd_tables(cfg, m, &grid, &points, &tc)?;
            if cfg.emit_svg {
                let labels: Vec<String> = psds.iter().map(|(eta, _)| format!("eta = {}", format_float(*eta))).collect();
                let tables: Vec<(&str, &str)> = labels.iter().zip(&psds).map(|(l, (_, t))| (l.as_str(), t.as_str())).collect();
                files.add(dir.join("psd.svg"), emit_svg(&tables, &PSD_PLOT)?);
            }
            for (eta, text) in psds {
                files.add(dir.join(format!("psd_{}.csv", format_float(eta))), text);
            }
        }
        summaries.push(MemberSummary {
            scenario: m.scenario,
            g_d_over_gm: m.g_d,
            g_o_over_gm: circuit.g_o,
            eta_max: top,
            directory: m.dir.clone(),
            points: points.len(),
            infeasible: points.iter().filter(|p| !p.status.is_feasible()).count(),
        });
        combined.push((legend(m), table.clone()));
        files.add(dir.join("pareto.csv"), table);
    }
    if cfg.emit_svg && list.len() > 1 {
        let tables: Vec<(&str, &str)> = combined.iter().map(|(l, t)| (l.as_str(), t.as_str())).collect();
        files.add(root.join("pareto.svg"), emit_svg(&tables, &PARETO_PLOT)?);
    }
    files.add(root.join("meta.json"), meta(cfg, "trace", &summaries));
    files.write()?;
    Ok(RunSummary {
        output_dir: root,
        members: summaries,
    })
}

/// Writes only the optimal PSDs for `psd_etas` (scenario A members).
pub fn run_psd(cfg: &RunConfig) -> ShellResult<RunSummary> {
    cfg.validate()?;
    if cfg.psd_etas.is_empty() {
        return Err(ShellError::config("psd_etas", "must list at least one eta"));
    }
    if !cfg.scenario.contains(&Scenario::PsdAndTerminations) {
        return Err(ShellError::config("scenario", "PSD output needs scenario A"));
    }
    let root = output_dir(cfg);
    prepare_output_dir(&root)?;
    let grid = cfg.grid.build()?;
    let mut files = Files(Vec::new());
    let mut summaries = Vec::new();
    for m in members(cfg).iter().filter(|m| m.scenario == Scenario::PsdAndTerminations) {
        let circuit = cfg.circuit(m.g_d)?;
        let tc = TraceConfig {
            scenario: m.scenario,
            eta_grid: cfg.psd_etas.clone(),
            power: cfg.p_norm,
            omega_b: cfg.omega_b_norm,
            grid: cfg.grid,
            search: cfg.search(),
        };
        let psds = psd_tables(cfg, m, &grid, &[], &tc)?;
        let dir = root.join(&m.dir);
        if cfg.emit_svg {
            let labels: Vec<String> = psds.iter().map(|(eta, _)| format!("eta = {}", format_float(*eta))).collect();
            let tables: Vec<(&str, &str)> = labels.iter().zip(&psds).map(|(l, (_, t))| (l.as_str(), t.as_str())).collect();
            files.add(dir.join("psd.svg"), emit_svg(&tables, &PSD_PLOT)?);
        }
        summaries.push(MemberSummary {
            scenario: m.scenario,
            g_d_over_gm: m.g_d,
            g_o_over_gm: circuit.g_o,
            eta_max: None,
            directory: m.dir.clone(),
            points: psds.len(),
            infeasible: 0,
        });
        for (eta, text) in psds {
            files.add(dir.join(format!("psd_{}.csv", format_float(eta))), text);
        }
    }
    files.add(root.join("meta.json"), meta(cfg, "psd", &summaries));
    files.write()?;
    Ok(RunSummary {
        output_dir: root,
        members: summaries,
    })
}

/// Writes the power gain of the configured termination on the grid.
pub fn run_gain_profile(cfg: &RunConfig) -> ShellResult<RunSummary> {
    cfg.validate()?;
    let root = output_dir(cfg);
    prepare_output_dir(&root)?;
    let grid = cfg.grid.build()?;
    let term = cfg.termination()?;
    let mut files = Files(Vec::new());
    let mut summaries = Vec::new();
    let mut seen = Vec::new();
    let mut combined = Vec::new();
    for m in members(cfg) {
        // the gain does not depend on the scenario
        if seen.contains(&m.g_d.to_bits()) {
            continue;
        }
        seen.push(m.g_d.to_bits());
        let circuit = cfg.circuit(m.g_d)?;
        let profile = gain_profile(&circuit, &term, &grid)?;
        let dir = if cfg.g_d_over_gm.len() > 1 {
            format!("gd{}", format_float(m.g_d))
        } else {
            String::new()
        };
        let table = columns_csv(["omega", "gain"], grid.samples(), profile.values());
        let label = format!("g_d/g_m = {}", format_float(m.g_d));
        combined.push((label, table.clone()));
        files.add(root.join(&dir).join("gain.csv"), table);
        summaries.push(MemberSummary {
            scenario: m.scenario,
            g_d_over_gm: m.g_d,
            g_o_over_gm: circuit.g_o,
            eta_max: None,
            directory: dir,
            points: grid.len(),
            infeasible: 0,
        });
    }
    if cfg.emit_svg {
        let tables: Vec<(&str, &str)> = combined.iter().map(|(l, t)| (l.as_str(), t.as_str())).collect();
        files.add(root.join("gain.svg"), emit_svg(&tables, &GAIN_PLOT)?);
    }
    files.add(root.join("meta.json"), meta(cfg, "gain-profile", &summaries));
    files.write()?;
    Ok(RunSummary {
        output_dir: root,
        members: summaries,
    })
}
