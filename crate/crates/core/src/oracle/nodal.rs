//! Dense nodal analysis for small linear netlists.

use num_complex::Complex64;

use crate::circuit::{CircuitParams, Placement, Termination};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Conductance,
    Capacitance,
    Inductance,
    /// Current `value * (u[p] - u[n])` flowing from `a` to `b` through the source.
    Vccs,
    /// Current `value` flowing from `a` to `b` through the source.
    CurrentSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub kind: BranchKind,
    pub a: usize,
    pub b: usize,
    pub value: f64,
    pub control: Option<(usize, usize)>,
}

/// Node 0 is ground; nodes `1..=nodes` are unknowns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub nodes: usize,
    pub branches: Vec<Branch>,
}

impl Netlist {
    pub fn new(nodes: usize) -> Self {
        Netlist {
            nodes,
            branches: Vec::new(),
        }
    }

    fn push(&mut self, kind: BranchKind, a: usize, b: usize, value: f64, control: Option<(usize, usize)>) -> &mut Self {
        self.branches.push(Branch {
            kind,
            a,
            b,
            value,
            control,
        });
        self
    }

    pub fn conductance(&mut self, a: usize, b: usize, g: f64) -> &mut Self {
        self.push(BranchKind::Conductance, a, b, g, None)
    }

    pub fn capacitance(&mut self, a: usize, b: usize, c: f64) -> &mut Self {
        self.push(BranchKind::Capacitance, a, b, c, None)
    }

    pub fn inductance(&mut self, a: usize, b: usize, l: f64) -> &mut Self {
        self.push(BranchKind::Inductance, a, b, l, None)
    }

    pub fn vccs(&mut self, a: usize, b: usize, control: (usize, usize), g: f64) -> &mut Self {
        self.push(BranchKind::Vccs, a, b, g, Some(control))
    }

    pub fn current_source(&mut self, a: usize, b: usize, i: f64) -> &mut Self {
        self.push(BranchKind::CurrentSource, a, b, i, None)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |n: usize| n <= self.nodes;
        for br in &self.branches {
            if !in_range(br.a) || !in_range(br.b) {
                return Err(Error::invalid("netlist", format!("terminal out of range in {br:?}")));
            }
            if !br.value.is_finite() {
                return Err(Error::invalid("netlist", format!("non-finite value in {br:?}")));
            }
            match br.kind {
                BranchKind::Conductance | BranchKind::Capacitance | BranchKind::Inductance => {
                    if br.value <= 0.0 {
                        return Err(Error::invalid("netlist", format!("passive value must be positive in {br:?}")));
                    }
                }
                BranchKind::Vccs => match br.control {
                    Some((p, n)) if in_range(p) && in_range(n) => {}
                    _ => return Err(Error::invalid("netlist", format!("bad control terminals in {br:?}"))),
                },
                BranchKind::CurrentSource => {}
            }
        }
        // every node must reach ground through some branch
        let mut reached = vec![false; self.nodes + 1];
        reached[0] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for br in &self.branches {
                if reached[br.a] != reached[br.b] {
                    reached[br.a] = true;
                    reached[br.b] = true;
                    changed = true;
                }
            }
        }
        match reached.iter().position(|r| !r) {
            Some(n) => Err(Error::invalid("netlist", format!("node {n} is not connected to ground"))),
            None => Ok(()),
        }
    }
}

/// Node voltages at angular frequency `omega`, ground included at index 0.
pub fn nodal_solve(netlist: &Netlist, omega: f64) -> Result<Vec<Complex64>> {
    netlist.validate()?;
    if !omega.is_finite() {
        return Err(Error::invalid("omega", "must be finite"));
    }
    let n = netlist.nodes;
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n + 1]; n + 1];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n + 1];
    let jw = Complex64::new(0.0, omega);
    for br in &netlist.branches {
        let (a, b) = (br.a, br.b);
        let adm = match br.kind {
            BranchKind::Conductance => Some(Complex64::new(br.value, 0.0)),
            BranchKind::Capacitance => Some(jw * br.value),
            BranchKind::Inductance => {
                if omega == 0.0 {
                    return Err(Error::Singular { omega, pivot: br.a.max(br.b) });
                }
                Some(1.0 / (jw * br.value))
            }
            _ => None,
        };
        if let Some(v) = adm {
            y[a][a] += v;
            y[b][b] += v;
            y[a][b] -= v;
            y[b][a] -= v;
            continue;
        }
        match br.kind {
            BranchKind::Vccs => {
                let (p, q) = br.control.expect("validated");
                y[a][p] += br.value;
                y[a][q] -= br.value;
                y[b][p] -= br.value;
                y[b][q] += br.value;
            }
            BranchKind::CurrentSource => {
                rhs[a] -= br.value;
                rhs[b] += br.value;
            }
            _ => unreachable!(),
        }
    }
    // drop the ground row and column
    let mut m: Vec<Vec<Complex64>> = y[1..].iter().map(|row| row[1..].to_vec()).collect();
    let mut r: Vec<Complex64> = rhs[1..].to_vec();
    let scale = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("non-empty");
        if !(m[piv][col].norm() > 1e-14 * scale) {
            return Err(Error::Singular { omega, pivot: col + 1 });
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let sub = factor * m[col][k];
                m[row][k] -= sub;
            }
            let sub = factor * r[col];
            r[row] -= sub;
        }
    }
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let tail: Complex64 = (row + 1..n).map(|k| m[row][k] * u[k]).sum();
        u[row] = (r[row] - tail) / m[row][row];
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(Complex64::new(0.0, 0.0));
    out.extend(u);
    Ok(out)
}

pub const GATE: usize = 1;
pub const DRAIN: usize = 2;

/// Amplifier netlist driven by a unit Norton current into the gate. The
/// drain conductance sits across the load.
pub fn amplifier_netlist(p: &CircuitParams, t: &Termination) -> Netlist {
    let mut net = Netlist::new(2);
    net.current_source(0, GATE, 1.0)
        .conductance(GATE, 0, t.g_s)
        .capacitance(GATE, DRAIN, p.c_gd)
        .vccs(DRAIN, 0, (GATE, 0), p.g_m)
        .conductance(DRAIN, 0, t.g_l);
    if p.g_d > 0.0 {
        net.conductance(DRAIN, 0, p.g_d);
    }
    if let Some(m) = t.matching {
        match m.placement {
            Placement::ParallelToCgd => net.inductance(GATE, DRAIN, m.inductance),
            Placement::ShuntOutput => net.inductance(DRAIN, 0, m.inductance),
            Placement::ShuntInput => net.inductance(GATE, 0, m.inductance),
        };
    }
    net
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalResponse {
    /// `u_L g_s / i_s`.
    pub transfer: Complex64,
    /// `|u_L|^2 g_l` for a unit source current.
    pub delivered_power: f64,
    /// Delivered over available power `|i_s|^2 / (4 g_s)`.
    pub gain: f64,
}

pub fn amplifier_response(p: &CircuitParams, t: &Termination, omega: f64) -> Result<NodalResponse> {
    let u = nodal_solve(&amplifier_netlist(p, t), omega)?;
    let u_l = u[DRAIN];
    let delivered = u_l.norm_sqr() * t.g_l;
    Ok(NodalResponse {
        transfer: u_l * t.g_s,
        delivered_power: delivered,
        gain: delivered * 4.0 * t.g_s,
    })
}

/// `u[to] / i` for a unit current injected at `from`.
pub fn transimpedance(netlist: &Netlist, from: usize, to: usize, omega: f64) -> Result<Complex64> {
    let mut net = netlist.clone();
    net.branches.retain(|b| b.kind != BranchKind::CurrentSource);
    net.current_source(0, from, 1.0);
    Ok(nodal_solve(&net, omega)?[to])
}
