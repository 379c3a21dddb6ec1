//! Deterministic box-constrained derivative-free minimization.
//!
//! A Nelder–Mead simplex whose trial points are projected onto the box,
//! started from every node of a grid, followed by a finite-difference
//! Newton polish of the most promising basins. All callers search in
//! logarithmic coordinates.

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
        Bounds { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Tensor grid of `nodes` points per axis; axes with zero width get one node.
    pub fn grid_points(&self, nodes: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| {
                if nodes <= 1 || hi == lo {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..nodes)
                        .map(|k| {
                            if k + 1 == nodes {
                                *hi
                            } else {
                                lo + (hi - lo) * k as f64 / (nodes - 1) as f64
                            }
                        })
                        .collect()
                }
            })
            .collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_evals: usize,
    /// Relative spread of simplex values at convergence.
    pub ftol: f64,
    /// Simplex diameter at convergence.
    pub xtol: f64,
    pub initial_step: f64,
    /// Basins polished after the simplex phase.
    pub polish: usize,
    /// Relative objective difference under which results count as tied.
    pub tie_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_evals: 600,
            ftol: 1e-8,
            xtol: 1e-6,
            initial_step: 0.5,
            polish: 3,
            tie_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// `a` beats `b`: strictly smaller beyond the tie tolerance, or tied and
/// lexicographically smaller.
fn better(a: &Minimum, b: &Minimum, tie_tol: f64) -> bool {
    if !a.f.is_finite() {
        return false;
    }
    if !b.f.is_finite() {
        return true;
    }
    let scale = a.f.abs().max(b.f.abs());
    if (a.f - b.f).abs() <= tie_tol * scale {
        lex_less(&a.x, &b.x)
    } else {
        a.f < b.f
    }
}

pub fn nelder_mead<F>(f: &mut F, x0: &[f64], bounds: &Bounds, opts: &SearchOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut start = x0.to_vec();
    bounds.project(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        // step away from the nearer bound
        let step = if v[i] + opts.initial_step <= bounds.hi[i] {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        v[i] += step;
        bounds.project(&mut v);
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
        })
    };

    while evals < opts.max_evals {
        order(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread_ok = best.is_finite()
            && worst.is_finite()
            && (worst - best) <= opts.ftol * best.abs().max(1e-300);
        if (spread_ok && diameter <= opts.xtol) || diameter == 0.0 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            bounds.project(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + 0.5 * (v - a))
                .collect();
            bounds.project(&mut p);
            let fp = eval(&p, &mut evals);
            *vertex = (p, fp);
        }
    }
    order(&mut simplex);
    let (x, f) = simplex.swap_remove(0);
    Minimum { x, f, evals }
}

/// Central (or second-order one-sided at the box) gradient.
fn fd_gradient<F>(f: &mut F, x: &[f64], fx: f64, bounds: &Bounds, h: f64, evals: &mut usize) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    let mut at = |probe: &mut Vec<f64>, i: usize, v: f64, evals: &mut usize| {
        probe[i] = v;
        *evals += 1;
        let r = f(probe);
        probe[i] = x[i];
        r
    };
    for i in 0..x.len() {
        let up = x[i] + h <= bounds.hi[i];
        let down = x[i] - h >= bounds.lo[i];
        g[i] = if up && down {
            (at(&mut probe, i, x[i] + h, evals) - at(&mut probe, i, x[i] - h, evals)) / (2.0 * h)
        } else if up {
            let f1 = at(&mut probe, i, x[i] + h, evals);
            let f2 = at(&mut probe, i, x[i] + 2.0 * h, evals);
            (-3.0 * fx + 4.0 * f1 - f2) / (2.0 * h)
        } else if down {
            let f1 = at(&mut probe, i, x[i] - h, evals);
            let f2 = at(&mut probe, i, x[i] - 2.0 * h, evals);
            (3.0 * fx - 4.0 * f1 + f2) / (2.0 * h)
        } else {
            0.0
        };
    }
    g
}

fn fd_hessian<F>(f: &mut F, x: &[f64], free: &[usize], bounds: &Bounds, h: f64, evals: &mut usize) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    // stencil centre kept h inside the box
    let centre: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (lo, hi) = (bounds.lo[i] + h, bounds.hi[i] - h);
            if lo <= hi {
                v.clamp(lo, hi)
            } else {
                *v
            }
        })
        .collect();
    *evals += 1;
    let f0 = f(&centre);
    let mut eval = |di: (usize, f64), dj: Option<(usize, f64)>, evals: &mut usize| {
        let mut p = centre.clone();
        p[di.0] += di.1;
        if let Some((j, d)) = dj {
            p[j] += d;
        }
        *evals += 1;
        f(&p)
    };
    let m = free.len();
    let mut hess = vec![vec![0.0; m]; m];
    for (a, &i) in free.iter().enumerate() {
        let fp = eval((i, h), None, evals);
        let fm = eval((i, -h), None, evals);
        hess[a][a] = (fp - 2.0 * f0 + fm) / (h * h);
        for (b, &j) in free.iter().enumerate().skip(a + 1) {
            let fpp = eval((i, h), Some((j, h)), evals);
            let fpm = eval((i, h), Some((j, -h)), evals);
            let fmp = eval((i, -h), Some((j, h)), evals);
            let fmm = eval((i, -h), Some((j, -h)), evals);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    hess
}

/// Solves `a x = b` for a small symmetric positive definite `a`; `None`
/// when the Cholesky factorization breaks down.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Finite-difference Newton refinement of a local minimum, keeping
/// coordinates pinned to a bound when the gradient pushes outward.
pub fn newton_polish<F>(f: &mut F, start: &Minimum, bounds: &Bounds, max_iter: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    const H_GRAD: f64 = 1e-5;
    const H_HESS: f64 = 1e-3;
    let mut x = start.x.clone();
    let mut fx = start.f;
    let mut evals = start.evals;
    if !fx.is_finite() {
        return start.clone();
    }
    for _ in 0..max_iter {
        let g = fd_gradient(f, &x, fx, bounds, H_GRAD, &mut evals);
        let free: Vec<usize> = (0..x.len())
            .filter(|&i| {
                let at_lo = x[i] <= bounds.lo[i] && g[i] > 0.0;
                let at_hi = x[i] >= bounds.hi[i] && g[i] < 0.0;
                !(at_lo || at_hi) && bounds.hi[i] > bounds.lo[i]
            })
            .collect();
        if free.is_empty() {
            break;
        }
        let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();
        let gnorm = gf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= 1e-13 * fx.abs().max(1e-300) {
            break;
        }
        let hess = fd_hessian(f, &x, &free, bounds, H_HESS, &mut evals);
        let neg: Vec<f64> = gf.iter().map(|v| -v).collect();
        let dir = cholesky_solve(&hess, &neg).unwrap_or_else(|| {
            // steepest descent scaled by the diagonal curvature
            free.iter()
                .enumerate()
                .map(|(a, _)| -gf[a] / hess[a][a].abs().max(gnorm))
                .collect()
        });
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let mut trial = x.clone();
            for (a, &i) in free.iter().enumerate() {
                trial[i] += alpha * dir[a];
            }
            bounds.project(&mut trial);
            if trial == x {
                break;
            }
            evals += 1;
            let ft = f(&trial);
            if ft < fx {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Minimum { x, f: fx, evals }
}

/// Runs the simplex from every start, polishes the best `opts.polish`
/// distinct basins, and returns the overall winner.
pub fn multistart<F>(f: &mut F, starts: &[Vec<f64>], bounds: &Bounds, opts: &SearchOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut found: Vec<Minimum> = starts.iter().map(|s| nelder_mead(f, s, bounds, opts)).collect();
    // exact total order here; the tolerance tie-break applies to the polished set
    found.sort_by(|a, b| {
        a.f.total_cmp(&b.f).then_with(|| {
            a.x.iter()
                .zip(&b.x)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut distinct: Vec<Minimum> = Vec::new();
    for m in found {
        let same = distinct
            .iter()
            .any(|d| d.x.iter().zip(&m.x).all(|(a, b)| (a - b).abs() <= 1e-3));
        if !same {
            distinct.push(m);
        }
    }
    let total: usize = distinct.iter().map(|m| m.evals).sum();
    let mut best: Option<Minimum> = None;
    for m in distinct.iter().take(opts.polish.max(1)) {
        let polished = if opts.polish > 0 {
            newton_polish(f, m, bounds, 40)
        } else {
            m.clone()
        };
        if best.as_ref().is_none_or(|b| better(&polished, b, opts.tie_tol)) {
            best = Some(polished);
        }
    }
    let mut best = best.unwrap_or(Minimum {
        x: starts.first().cloned().unwrap_or_default(),
        f: f64::INFINITY,
        evals: 0,
    });
    best.evals += total;
    best
}
