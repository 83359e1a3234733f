//! Finite-difference runs of `u_t = (d(u)·u_x)_x + k(u)·u_x` and tracking of
//! conserved integrals over the resulting trajectories.
//!
//! The scheme is the plain second-order workhorse: the right-hand side is
//! expanded to `d'(u)·u_x² + d(u)·u_xx + k(u)·u_x` and every term is sampled
//! pointwise with central differences, under an explicit-Euler parabolic
//! stability bound.  The discretization is deliberately *not* in flux form
//! (flux form would telescope and conserve the integral exactly), so the
//! discrete integral is conserved only up to truncation error — which is
//! exactly what makes drift a useful convergence observable.

use std::collections::BTreeMap;

use crate::error::EngineError;
use crate::expr::{Dep, Expr, Indeterminate};
use crate::jet::{DifferentialSystem, PDEModel};
use crate::laws::ConservedVector;

use super::{compile, Instance, Point, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Compact support: the solution is pinned to zero at both ends.
    Dirichlet,
}

/// Parameters of one finite-difference run.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub x_min: f64,
    pub x_max: f64,
    /// Number of grid cells (nodes: `cells` when periodic, `cells + 1` when
    /// Dirichlet).
    pub cells: usize,
    pub t_end: f64,
    pub boundary: Boundary,
    /// Safety factor `c` in the parabolic bound `Δt = c·Δx²/max|d|`.
    pub safety: f64,
    /// Number of recorded time levels, including `t = 0`.
    pub frames: usize,
}

impl GridRun {
    pub fn new(x_min: f64, x_max: f64, cells: usize, t_end: f64, boundary: Boundary) -> Self {
        GridRun { x_min, x_max, cells, t_end, boundary, safety: 0.4, frames: 33 }
    }
}

/// Recorded solution states of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub dx: f64,
    pub boundary: Boundary,
    /// `(t, u-values)` at the recorded time levels.
    pub frames: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
}

/// A coefficient program guaranteed to read only `u`.
struct UFn {
    prog: Program,
    scratch: Vec<f64>,
}

impl UFn {
    fn new(model: &PDEModel, e: &Expr, what: &str) -> Result<UFn, EngineError> {
        let prog = compile(&model.normalize(e)?);
        for s in prog.slots() {
            if *s != Indeterminate::u() {
                return Err(EngineError::Unbound { name: format!("{s} (in {what})") });
            }
        }
        Ok(UFn { prog, scratch: Vec::with_capacity(16) })
    }

    fn at(&mut self, u: f64) -> Result<f64, EngineError> {
        let vals = [u];
        let n = self.prog.slots().len();
        match self.prog.run(&vals[..n], f64::INFINITY, &mut self.scratch)? {
            Some(v) => Ok(v),
            None => unreachable!("uncapped evaluation"),
        }
    }
}

const BLOWUP: f64 = 1.0e8;

/// Integrate the model forward from `u0` and record `run.frames` snapshots.
pub fn simulate(
    run: &GridRun,
    model: &PDEModel,
    u0: &dyn Fn(f64) -> f64,
) -> Result<Trajectory, EngineError> {
    if !(run.x_max > run.x_min) || !(run.t_end > 0.0) {
        return Err(EngineError::BadRun { msg: "domain and horizon must be positive".into() });
    }
    if run.cells < 8 {
        return Err(EngineError::BadRun { msg: "need at least 8 cells".into() });
    }
    if !(run.safety > 0.0 && run.safety <= 1.0) {
        return Err(EngineError::BadRun { msg: "safety factor must lie in (0, 1]".into() });
    }
    if run.frames < 2 {
        return Err(EngineError::BadRun { msg: "need at least the initial and final frame".into() });
    }

    let dval = model.normalize(&model.diffusion_value())?;
    let mut d = UFn::new(model, &dval, "the diffusion coefficient")?;
    let mut dp = UFn::new(
        model,
        &crate::expr::diff(&dval, &Indeterminate::u())?,
        "the diffusion coefficient's slope",
    )?;
    let mut k = UFn::new(model, &model.convection_value(), "the convection coefficient")?;

    let dx = (run.x_max - run.x_min) / run.cells as f64;
    let nodes = match run.boundary {
        Boundary::Periodic => run.cells,
        Boundary::Dirichlet => run.cells + 1,
    };
    let xs: Vec<f64> = (0..nodes).map(|j| run.x_min + j as f64 * dx).collect();
    let mut u: Vec<f64> = xs.iter().map(|&x| u0(x)).collect();
    if run.boundary == Boundary::Dirichlet {
        u[0] = 0.0;
        u[nodes - 1] = 0.0;
    }

    let mut traj = Trajectory {
        xs,
        dx,
        boundary: run.boundary,
        frames: Vec::with_capacity(run.frames),
        steps: 0,
    };
    traj.frames.push((0.0, u.clone()));

    let mut unew = vec![0.0; nodes];

    let mut t = 0.0;
    let mut next_frame = 1;
    while next_frame < run.frames {
        let target = run.t_end * next_frame as f64 / (run.frames - 1) as f64;

        // stability bound from the current state: parabolic in d, advective
        // in the total transport speed |k| + |d'|·|u_x|
        let mut dmax: f64 = 0.0;
        let mut amax: f64 = 0.0;
        for j in 0..nodes {
            let jm = (j + nodes - 1) % nodes;
            let jp = (j + 1) % nodes;
            let sx = (u[jp] - u[jm]) / (2.0 * dx);
            dmax = dmax.max(d.at(u[j])?.abs());
            amax = amax.max(k.at(u[j])?.abs() + dp.at(u[j])?.abs() * sx.abs());
        }
        let mut dt = run.safety * dx * dx / dmax.max(1e-12);
        if amax > 0.0 {
            dt = dt.min(0.5 * dx / amax);
        }

        while t < target - 1e-13 * run.t_end {
            let step = dt.min(target - t);
            match run.boundary {
                Boundary::Periodic => {
                    for j in 0..nodes {
                        let jm = (j + nodes - 1) % nodes;
                        let jp = (j + 1) % nodes;
                        let sx = (u[jp] - u[jm]) / (2.0 * dx);
                        let sxx = (u[jp] - 2.0 * u[j] + u[jm]) / (dx * dx);
                        let rate =
                            dp.at(u[j])? * sx * sx + d.at(u[j])? * sxx + k.at(u[j])? * sx;
                        unew[j] = u[j] + step * rate;
                    }
                }
                Boundary::Dirichlet => {
                    unew[0] = 0.0;
                    unew[nodes - 1] = 0.0;
                    for j in 1..nodes - 1 {
                        let sx = (u[j + 1] - u[j - 1]) / (2.0 * dx);
                        let sxx = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dx * dx);
                        let rate =
                            dp.at(u[j])? * sx * sx + d.at(u[j])? * sxx + k.at(u[j])? * sx;
                        unew[j] = u[j] + step * rate;
                    }
                }
            }
            std::mem::swap(&mut u, &mut unew);
            t += step;
            traj.steps += 1;
            if u.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
                return Err(EngineError::Unstable { t });
            }
        }
        traj.frames.push((target, u.clone()));
        next_frame += 1;
    }
    Ok(traj)
}

/// Central first derivative on the grid; one-sided second-order at Dirichlet
/// ends.
fn grid_dx(u: &[f64], dx: f64, boundary: Boundary) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    match boundary {
        Boundary::Periodic => {
            for j in 0..n {
                out[j] = (u[(j + 1) % n] - u[(j + n - 1) % n]) / (2.0 * dx);
            }
        }
        Boundary::Dirichlet => {
            out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
            for j in 1..n - 1 {
                out[j] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
            }
            out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
        }
    }
    out
}

fn grid_dxx(u: &[f64], dx: f64, boundary: Boundary) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    let d2 = dx * dx;
    match boundary {
        Boundary::Periodic => {
            for j in 0..n {
                out[j] = (u[(j + 1) % n] - 2.0 * u[j] + u[(j + n - 1) % n]) / d2;
            }
        }
        Boundary::Dirichlet => {
            out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / d2;
            for j in 1..n - 1 {
                out[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / d2;
            }
            out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / d2;
        }
    }
    out
}

/// Cumulative trapezoid with value 0 at the left end.
fn cumtrapz(f: &[f64], dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for j in 1..f.len() {
        out[j] = out[j - 1] + 0.5 * dx * (f[j - 1] + f[j]);
    }
    out
}

fn integral(f: &[f64], dx: f64, boundary: Boundary) -> f64 {
    match boundary {
        // on the circle the rectangle rule *is* the trapezoid rule
        Boundary::Periodic => dx * f.iter().sum::<f64>(),
        Boundary::Dirichlet => {
            let inner: f64 = f[1..f.len() - 1].iter().sum();
            dx * (inner + 0.5 * (f[0] + f[f.len() - 1]))
        }
    }
}

/// Time series of `∫F dx` over a trajectory and its drift from the initial
/// value.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub times: Vec<f64>,
    pub integrals: Vec<f64>,
    pub max_abs_drift: f64,
    /// Drift relative to the initial integral; falls back to absolute when
    /// the initial integral is itself numerically zero.
    pub max_relative_drift: f64,
}

impl std::fmt::Display for DriftReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "integral {:.6e} -> {:.6e}, max relative drift {:.3e}",
            self.integrals.first().copied().unwrap_or(0.0),
            self.integrals.last().copied().unwrap_or(0.0),
            self.max_relative_drift
        )
    }
}

/// Evaluate `∫F dx` on every frame.  Potential values are reconstructed at
/// each time level by spatial quadrature of their defining `x`-rules (gauge
/// `v = 0` at the left end), so they satisfy `v_x = F_base` on the grid by
/// construction.
pub fn track_conserved(
    traj: &Trajectory,
    cv: &ConservedVector,
    sys: &DifferentialSystem,
    inst: &Instance,
) -> Result<DriftReport, EngineError> {
    let model = sys.model();
    let fprog = compile(&model.normalize(&cv.density)?);
    let levels: Vec<(Dep, Program)> = sys
        .levels()
        .iter()
        .map(|lv| Ok((lv.dep, compile(&model.normalize(&lv.x_rhs)?))))
        .collect::<Result<_, EngineError>>()?;

    // reject densities the grid cannot realize before running all frames
    for prog in levels.iter().map(|(_, p)| p).chain([&fprog]) {
        for a in prog.slots() {
            if let Indeterminate::Jet { dep, dt, dx } = a {
                let ok = *dt == 0 && if *dep == Dep::U { *dx <= 2 } else { *dx <= 1 };
                if !ok {
                    return Err(EngineError::Unbound { name: format!("{a} (on the grid)") });
                }
            }
        }
    }

    let n = traj.xs.len();
    let mut times = Vec::with_capacity(traj.frames.len());
    let mut integrals = Vec::with_capacity(traj.frames.len());
    for (t, u) in &traj.frames {
        let ux = grid_dx(u, traj.dx, traj.boundary);
        let uxx = grid_dxx(u, traj.dx, traj.boundary);
        let mut pts: Vec<Point> = (0..n)
            .map(|j| {
                let mut jets = BTreeMap::new();
                jets.insert(Indeterminate::u(), u[j]);
                jets.insert(Indeterminate::jet(Dep::U, 0, 1), ux[j]);
                jets.insert(Indeterminate::jet(Dep::U, 0, 2), uxx[j]);
                Point { t: *t, x: traj.xs[j], jets }
            })
            .collect();
        for (dep, prog) in &levels {
            let mut rhs = vec![0.0; n];
            for (j, pt) in pts.iter().enumerate() {
                rhs[j] = match pt.resolve(prog, inst, f64::INFINITY)? {
                    Some(v) => v,
                    None => unreachable!("uncapped evaluation"),
                };
            }
            let vals = cumtrapz(&rhs, traj.dx);
            for (j, pt) in pts.iter_mut().enumerate() {
                pt.jets.insert(Indeterminate::jet(*dep, 0, 0), vals[j]);
                pt.jets.insert(Indeterminate::jet(*dep, 0, 1), rhs[j]);
            }
        }
        let mut fvals = vec![0.0; n];
        for (j, pt) in pts.iter().enumerate() {
            fvals[j] = match pt.resolve(&fprog, inst, f64::INFINITY)? {
                Some(v) => v,
                None => unreachable!("uncapped evaluation"),
            };
        }
        times.push(*t);
        integrals.push(integral(&fvals, traj.dx, traj.boundary));
    }

    let i0 = integrals[0];
    let max_abs =
        integrals.iter().map(|i| (i - i0).abs()).fold(0.0, f64::max);
    let scale = if i0.abs() > 1e-9 { i0.abs() } else { 1.0 };
    Ok(DriftReport {
        times,
        integrals,
        max_abs_drift: max_abs,
        max_relative_drift: max_abs / scale,
    })
}
