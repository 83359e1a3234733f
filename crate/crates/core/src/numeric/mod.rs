//! Floating-point cross-checks for the symbolic engine: expressions compile
//! to stack programs, divergences are sampled at pseudo-random on-shell jet
//! points, and finite-difference runs track conserved integrals over time.
//!
//! Everything here requires a fully concrete model: coefficients, their
//! antiderivative pins, parameter values, and a closed-form instance for each
//! declared function symbol.

mod grid;
pub mod instances;

pub use grid::{simulate, track_conserved, Boundary, DriftReport, GridRun, Trajectory};
pub use instances::{case_instances, CaseInstance};

use std::collections::BTreeMap;

use num::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EngineError;
use crate::expr::{lower, ArgVar, Dep, Expr, IndepVar, Indeterminate};
use crate::jet::{DifferentialSystem, DEFAULT_CLOSURE_ORDER};
use crate::laws::ConservedVector;

/// Magnitudes above this abort a sample as "too close to a pole": rounding
/// error in a cancellation grows with the largest intermediate, and past this
/// size it could no longer be told apart from a genuine nonzero residual.
const MAGNITUDE_GUARD: f64 = 1.0e4;

// ---------------------------------------------------------------------------
// Compiled evaluation

#[derive(Debug, Clone)]
enum Op {
    Push(f64),
    Load(usize),
    /// Pop n values, push their sum.
    Add(usize),
    /// Pop n values, push their product.
    Mul(usize),
    Div,
    Pow(i32),
    Exp,
}

/// A stack-machine program compiled from an expression.  `slots()` lists the
/// atoms the program reads; `eval` takes one value per slot, in that order.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    slots: Vec<Indeterminate>,
}

pub fn compile(e: &Expr) -> Program {
    let mut p = Program { ops: Vec::new(), slots: Vec::new() };
    p.emit(e);
    p
}

fn rat_f64(r: &crate::expr::Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Program {
    fn slot(&mut self, a: &Indeterminate) -> usize {
        match self.slots.iter().position(|s| s == a) {
            Some(i) => i,
            None => {
                self.slots.push(a.clone());
                self.slots.len() - 1
            }
        }
    }

    fn emit(&mut self, e: &Expr) {
        match e {
            Expr::Rational(r) => self.ops.push(Op::Push(rat_f64(r))),
            Expr::Atom(a) => {
                let i = self.slot(a);
                self.ops.push(Op::Load(i));
            }
            Expr::Sum(ts) => {
                for t in ts {
                    self.emit(t);
                }
                self.ops.push(Op::Add(ts.len()));
            }
            Expr::Product(ts) => {
                for t in ts {
                    self.emit(t);
                }
                self.ops.push(Op::Mul(ts.len()));
            }
            Expr::Quotient(a, b) => {
                self.emit(a);
                self.emit(b);
                self.ops.push(Op::Div);
            }
            Expr::Power(b, n) => {
                self.emit(b);
                self.ops.push(Op::Pow(*n as i32));
            }
            Expr::Exp(a) => {
                self.emit(a);
                self.ops.push(Op::Exp);
            }
        }
    }

    pub fn slots(&self) -> &[Indeterminate] {
        &self.slots
    }

    /// Evaluate with one value per slot.  Fails at poles (division by zero,
    /// zero to a negative power, non-finite result).
    pub fn eval(&self, vals: &[f64]) -> Result<f64, EngineError> {
        match self.eval_capped(vals, f64::INFINITY)? {
            Some(v) => Ok(v),
            None => unreachable!("no finite value exceeds an infinite cap"),
        }
    }

    /// As `eval`, but gives up (`Ok(None)`) when any intermediate magnitude
    /// exceeds `cap`.
    fn eval_capped(&self, vals: &[f64], cap: f64) -> Result<Option<f64>, EngineError> {
        let mut st = Vec::with_capacity(16);
        self.run(vals, cap, &mut st)
    }

    /// Core interpreter; `st` is caller-owned scratch so hot loops do not
    /// allocate per evaluation.
    fn run(&self, vals: &[f64], cap: f64, st: &mut Vec<f64>) -> Result<Option<f64>, EngineError> {
        debug_assert_eq!(vals.len(), self.slots.len());
        let pole = || EngineError::Pole { what: "an expression".to_string() };
        st.clear();
        for op in &self.ops {
            match op {
                Op::Push(c) => st.push(*c),
                Op::Load(i) => st.push(vals[*i]),
                Op::Add(n) => {
                    let k = st.len() - n;
                    let s = st[k..].iter().sum();
                    st.truncate(k);
                    st.push(s);
                }
                Op::Mul(n) => {
                    let k = st.len() - n;
                    let s = st[k..].iter().product();
                    st.truncate(k);
                    st.push(s);
                }
                Op::Div => {
                    let b = st.pop().expect("divisor on stack");
                    let a = st.last_mut().expect("dividend on stack");
                    if b == 0.0 {
                        return Err(pole());
                    }
                    *a /= b;
                }
                Op::Pow(n) => {
                    let a = st.last_mut().expect("base on stack");
                    if *a == 0.0 && *n < 0 {
                        return Err(pole());
                    }
                    *a = a.powi(*n);
                }
                Op::Exp => {
                    let a = st.last_mut().expect("argument on stack");
                    *a = a.exp();
                }
            }
            let top = *st.last().expect("op leaves a value");
            if !top.is_finite() {
                return Err(pole());
            }
            if top.abs() > cap {
                return Ok(None);
            }
        }
        debug_assert_eq!(st.len(), 1, "program must leave exactly one value");
        Ok(st.pop())
    }
}

impl std::fmt::Display for SampleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} samples, max |residual| = {:.3e}, {} rejected near poles",
            self.samples, self.max_residual, self.rejected
        )
    }
}

// ---------------------------------------------------------------------------
// Concrete function-symbol instances

/// A closed-form realization of a two-argument classifying symbol `f(t, y)`.
/// Every family satisfies the defining relation `f_t + f_yy = 0` identically,
/// so instances contribute no error of their own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FuncInstance {
    /// The constant `c`.
    Const(f64),
    /// `a + b·y`.
    Linear(f64, f64),
    /// `y² − 2t`.
    Quad,
    /// `exp(λy − λ²t)`.
    Exp(f64),
}

impl FuncInstance {
    /// Value of `∂_t^{nt} ∂_y^{ny} f` at `(t, y)`.
    pub fn eval(&self, nt: u32, ny: u32, t: f64, y: f64) -> f64 {
        match *self {
            FuncInstance::Const(c) => {
                if nt == 0 && ny == 0 {
                    c
                } else {
                    0.0
                }
            }
            FuncInstance::Linear(a, b) => match (nt, ny) {
                (0, 0) => a + b * y,
                (0, 1) => b,
                _ => 0.0,
            },
            FuncInstance::Quad => match (nt, ny) {
                (0, 0) => y * y - 2.0 * t,
                (0, 1) => 2.0 * y,
                (0, 2) => 2.0,
                (1, 0) => -2.0,
                _ => 0.0,
            },
            FuncInstance::Exp(l) => {
                let f = (l * y - l * l * t).exp();
                l.powi(ny as i32) * (-l * l).powi(nt as i32) * f
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            FuncInstance::Const(c) => format!("{c}"),
            FuncInstance::Linear(a, b) => format!("{a} + {b}*y"),
            FuncInstance::Quad => "y^2 - 2t".to_string(),
            FuncInstance::Exp(l) => format!("exp({l}*(y - {l}*t))"),
        }
    }
}

/// Numeric bindings for everything a concrete model leaves symbolic:
/// parameter values and one instance per declared function symbol, plus the
/// sampling range for `u` (kept positive for models singular at `u = 0`).
#[derive(Debug, Clone, Default)]
pub struct Instance {
    params: BTreeMap<String, f64>,
    funcs: BTreeMap<String, FuncInstance>,
    u_range: Option<(f64, f64)>,
}

impl Instance {
    pub fn new() -> Self {
        Instance::default()
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn func(mut self, name: &str, f: FuncInstance) -> Self {
        self.funcs.insert(name.to_string(), f);
        self
    }

    /// Draw `u` from `[1/2, 2]` instead of `[-2, 2]`.
    pub fn positive_u(mut self) -> Self {
        self.u_range = Some((0.5, 2.0));
        self
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u_range.unwrap_or((-2.0, 2.0))
    }

    pub fn func_instance(&self, name: &str) -> Option<&FuncInstance> {
        self.funcs.get(name)
    }
}

// ---------------------------------------------------------------------------
// Point environments

/// Values of the free coordinates at one sample point.
struct Point {
    t: f64,
    x: f64,
    jets: BTreeMap<Indeterminate, f64>,
}

impl Point {
    fn jet(&self, dep: Dep, dt: u32, dx: u32) -> Option<f64> {
        self.jets.get(&Indeterminate::jet(dep, dt, dx)).copied()
    }

    /// Resolve one atom; dependent jets must already have been filled in.
    fn value(&self, a: &Indeterminate, inst: &Instance) -> Result<f64, EngineError> {
        let unbound = || EngineError::Unbound { name: a.to_string() };
        match a {
            Indeterminate::Indep(IndepVar::T) => Ok(self.t),
            Indeterminate::Indep(IndepVar::X) => Ok(self.x),
            Indeterminate::Jet { .. } => self.jets.get(a).copied().ok_or_else(unbound),
            Indeterminate::Param(name) => inst.params.get(name).copied().ok_or_else(unbound),
            Indeterminate::Anti(_) => Err(unbound()),
            Indeterminate::Func { name, args, index } => {
                let f = inst.funcs.get(name).ok_or_else(unbound)?;
                // instances realize two-argument symbols f(t, y)
                if args.len() != 2 || args[0] != ArgVar::T {
                    return Err(unbound());
                }
                let y = match args[1] {
                    ArgVar::X => self.x,
                    ArgVar::U => self.jet(Dep::U, 0, 0).ok_or_else(unbound)?,
                    ArgVar::V => self.jet(Dep::V, 0, 0).ok_or_else(unbound)?,
                    ArgVar::T => return Err(unbound()),
                };
                Ok(f.eval(index[0], index[1], self.t, y))
            }
        }
    }

    fn resolve(
        &self,
        prog: &Program,
        inst: &Instance,
        cap: f64,
    ) -> Result<Option<f64>, EngineError> {
        let mut vals = Vec::with_capacity(prog.slots().len());
        for a in prog.slots() {
            let v = self.value(a, inst)?;
            if v.abs() > cap {
                return Ok(None);
            }
            vals.push(v);
        }
        prog.eval_capped(&vals, cap)
    }
}

// ---------------------------------------------------------------------------
// On-shell sampling

/// Result of sampling `D_t F + D_x G` at pseudo-random on-shell points.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub samples: usize,
    pub max_residual: f64,
    /// Points discarded for landing on or too near a pole.
    pub rejected: usize,
}

fn is_dependent(sys: &DifferentialSystem, a: &Indeterminate) -> bool {
    let Indeterminate::Jet { dep, dt, dx } = a else { return false };
    match dep {
        Dep::U => *dt >= 1,
        Dep::V | Dep::W => match sys.level(*dep) {
            None => false,
            Some(lv) => *dx >= 1 || (*dt >= 1 && lv.t_rhs.is_some()),
        },
    }
}

/// Evaluate the raw divergence of `cv` at `n` pseudo-random points that lie
/// on the shell of `sys`: free coordinates are drawn uniformly, every
/// dependent jet is computed from the system's differential consequences.
/// Returns the largest |residual| seen.
pub fn sample_on_shell(
    cv: &ConservedVector,
    sys: &DifferentialSystem,
    inst: &Instance,
    n: usize,
    seed: u64,
) -> Result<SampleReport, EngineError> {
    let model = sys.model();
    let div = model.normalize(&cv.divergence()?)?;

    // consequence programs for every dependent jet in the divergence
    let mut red = sys.reducer(DEFAULT_CLOSURE_ORDER);
    let mut deps: Vec<(Indeterminate, Program)> = Vec::new();
    for a in lower(&div)?.atom_set() {
        if is_dependent(sys, &a) {
            let rule = red.reduce_expr(&Expr::atom(a.clone()))?;
            deps.push((a, compile(&rule)));
        }
    }
    let main = compile(&div);

    // free jets drawn per sample: whatever the programs read that is not
    // computed from a consequence.  Function symbols consume the value of
    // their second argument, so f(t, v) also needs the jet v drawn.
    let mut free: Vec<Indeterminate> = Vec::new();
    let want = |a: &Indeterminate, free: &mut Vec<Indeterminate>| {
        if !is_dependent(sys, a) && !free.contains(a) {
            free.push(a.clone());
        }
    };
    for prog in deps.iter().map(|(_, p)| p).chain([&main]) {
        for a in prog.slots() {
            match a {
                Indeterminate::Jet { .. } => want(a, &mut free),
                Indeterminate::Func { args, .. } => {
                    for arg in args {
                        let dep = match arg {
                            ArgVar::U => Dep::U,
                            ArgVar::V => Dep::V,
                            ArgVar::T | ArgVar::X => continue,
                        };
                        want(&Indeterminate::jet(dep, 0, 0), &mut free);
                    }
                }
                _ => {}
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u_lo, u_hi) = inst.u_range();
    let mut report = SampleReport { samples: 0, max_residual: 0.0, rejected: 0 };
    let budget = 10 * n.max(1);

    'attempts: for _ in 0..budget {
        if report.samples == n {
            break;
        }
        let mut pt = Point {
            t: rng.gen_range(-1.0..=1.0),
            x: rng.gen_range(-1.0..=1.0),
            jets: BTreeMap::new(),
        };
        for a in &free {
            let v = if *a == Indeterminate::u() {
                rng.gen_range(u_lo..=u_hi)
            } else {
                rng.gen_range(-2.0..=2.0)
            };
            pt.jets.insert(a.clone(), v);
        }
        for (a, prog) in &deps {
            match pt.resolve(prog, inst, MAGNITUDE_GUARD) {
                Ok(Some(v)) => {
                    pt.jets.insert(a.clone(), v);
                }
                Ok(None) | Err(EngineError::Pole { .. }) => {
                    report.rejected += 1;
                    continue 'attempts;
                }
                Err(e) => return Err(e),
            }
        }
        match pt.resolve(&main, inst, MAGNITUDE_GUARD) {
            Ok(Some(r)) => {
                report.samples += 1;
                report.max_residual = report.max_residual.max(r.abs());
            }
            Ok(None) | Err(EngineError::Pole { .. }) => report.rejected += 1,
            Err(e) => return Err(e),
        }
    }

    if report.samples < n {
        return Err(EngineError::Pole {
            what: format!(
                "sampling ({} of {n} points; the rest rejected near poles)",
                report.samples
            ),
        });
    }
    Ok(report)
}
