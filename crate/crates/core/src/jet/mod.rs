//! Jet-space calculus: total derivatives over the jet coordinates and
//! on-shell reduction modulo the model equation and potential rules.

mod model;
mod system;

pub use model::{Coefficient, ModelBuilder, PDEModel};
pub use system::{DifferentialSystem, OnShell, PotentialLevel, DEFAULT_CLOSURE_ORDER};

use crate::expr::{
    lift, lower, ArgVar, Canon, Dep, Expr, ExprError, IndepVar, Indeterminate,
};

fn jet_step(dep: Dep, dir: IndepVar) -> Indeterminate {
    match dir {
        IndepVar::T => Indeterminate::jet(dep, 1, 0),
        IndepVar::X => Indeterminate::jet(dep, 0, 1),
    }
}

/// Total derivative of a single atom; `None` means zero.
fn td_atom(a: &Indeterminate, dir: IndepVar) -> Option<Canon> {
    match a {
        Indeterminate::Indep(iv) => {
            if *iv == dir {
                Some(Canon::one())
            } else {
                None
            }
        }
        Indeterminate::Jet { dep, dt, dx } => {
            let (dt, dx) = match dir {
                IndepVar::T => (dt + 1, *dx),
                IndepVar::X => (*dt, dx + 1),
            };
            Some(Canon::from_atom(Indeterminate::jet(*dep, dt, dx)))
        }
        Indeterminate::Func { name, args, index } => {
            // chain rule over the formal arguments
            let mut acc = Canon::zero();
            for (slot, av) in args.iter().enumerate() {
                let factor = match (av, dir) {
                    (ArgVar::T, IndepVar::T) | (ArgVar::X, IndepVar::X) => Canon::one(),
                    (ArgVar::T, IndepVar::X) | (ArgVar::X, IndepVar::T) => continue,
                    (ArgVar::U, _) => Canon::from_atom(jet_step(Dep::U, dir)),
                    (ArgVar::V, _) => Canon::from_atom(jet_step(Dep::V, dir)),
                };
                let mut idx = index.clone();
                idx[slot] += 1;
                let bumped = Canon::from_atom(Indeterminate::func(name, args, &idx));
                acc = acc.add(&bumped.mul(&factor));
            }
            if acc.is_zero() {
                None
            } else {
                Some(acc)
            }
        }
        Indeterminate::Anti(kind) => {
            // D ∫c(u)du = c(u)·Du along either direction
            let coeff = Indeterminate::func(kind.coefficient_name(), &[ArgVar::U], &[0]);
            Some(Canon::from_atom(coeff).mul(&Canon::from_atom(jet_step(Dep::U, dir))))
        }
        Indeterminate::Param(_) => None,
    }
}

pub(crate) fn td_canon(c: &Canon, dir: IndepVar) -> Canon {
    c.derive(&|a: &Indeterminate| td_atom(a, dir))
}

/// Total derivative `D_t` or `D_x` on the free jet space (no equation
/// imposed): jets shift their multi-index, function symbols chain through
/// their arguments, antiderivatives differentiate to coefficient·jet.
pub fn total_derivative(e: &Expr, dir: IndepVar) -> Result<Expr, ExprError> {
    Ok(lift(&td_canon(&lower(e)?, dir)))
}
