//! Potential extension of a system: each conservation law `D_tF + D_xG = 0`
//! yields a potential `p` with `p_x = F`, `p_t = −G`, and the layered system
//! must stay cross-derivative compatible (`D_t p_x = D_x p_t` on-shell).

pub mod registry;

use crate::error::EngineError;
use crate::expr::{lower, Dep, Expr, IndepVar, Indeterminate};
use crate::jet::{total_derivative, DifferentialSystem, PotentialLevel};
use crate::laws::ConservedVector;

/// The dependent variable the next potential would use, if the stack is not
/// already full.
pub fn next_level(sys: &DifferentialSystem) -> Option<Dep> {
    match sys.levels().len() {
        0 => Some(Dep::V),
        1 => Some(Dep::W),
        _ => None,
    }
}

/// Layer the potential of a conservation law on top of a system.  A
/// second-level potential is only introduced for a derivative-free density,
/// the form every second-step law can be brought to.
pub fn build_potential_system(
    sys: &DifferentialSystem,
    cv: &ConservedVector,
) -> Result<DifferentialSystem, EngineError> {
    let dep = next_level(sys).ok_or_else(|| EngineError::BadLevel {
        dep: 'w',
        msg: "no potential levels left to introduce".to_string(),
    })?;
    if dep == Dep::W {
        let mut bad: Option<Indeterminate> = None;
        lower(&cv.density)?.for_each_atom(&mut |a| {
            if bad.is_none() && a.jet_order().is_some_and(|o| o > 0) {
                bad = Some(a.clone());
            }
        });
        if let Some(atom) = bad {
            return Err(EngineError::NotDerivativeFree { atom: atom.to_string() });
        }
    }
    let mut levels = sys.levels().to_vec();
    levels.push(PotentialLevel {
        dep,
        x_rhs: cv.density.clone(),
        t_rhs: Some(-cv.flux.clone()),
    });
    DifferentialSystem::with_levels(sys.model().clone(), levels)
}

/// On-shell residuals of `D_t p_x − D_x p_t`, one per level that carries both
/// rules.  All must vanish for the layered system to be consistent.
pub fn compatibility_residuals(
    sys: &DifferentialSystem,
    max_order: u32,
) -> Result<Vec<(Dep, Expr)>, EngineError> {
    let mut shell = sys.reducer(max_order);
    let mut out = Vec::new();
    for lv in sys.levels() {
        let Some(t_rhs) = &lv.t_rhs else { continue };
        let mixed = total_derivative(&lv.x_rhs, IndepVar::T)?
            - total_derivative(t_rhs, IndepVar::X)?;
        out.push((lv.dep, shell.reduce_expr(&mixed)?));
    }
    Ok(out)
}

/// True when every cross-derivative residual of the system vanishes.
pub fn verify_potential_system(
    sys: &DifferentialSystem,
    max_order: u32,
) -> Result<bool, EngineError> {
    Ok(compatibility_residuals(sys, max_order)?
        .iter()
        .all(|(_, r)| r.is_zero_literal()))
}
