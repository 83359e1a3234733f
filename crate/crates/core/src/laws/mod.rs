//! Conservation laws `D_t F + D_x G = 0` on solutions of a differential
//! system: exact verification, gauge shifts, the determining system for
//! generic first-order densities, and construction from characteristics.

mod determining;

pub use determining::{
    classifying_residual, determining_system, from_characteristic, Characteristic,
    DeterminingSystem,
};

use std::time::{Duration, Instant};

use crate::error::EngineError;
use crate::expr::{lower, Dep, Expr, ExprError, IndepVar, Indeterminate};
use crate::jet::{total_derivative, DifferentialSystem};

/// A conserved vector: `density` is the `t`-component `F`, `flux` the
/// `x`-component `G` of `D_t F + D_x G = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservedVector {
    pub density: Expr,
    pub flux: Expr,
}

/// Highest jet order explicitly present (function-symbol derivative indices
/// do not count).
pub fn order_of(e: &Expr) -> Result<u32, ExprError> {
    let mut max = 0;
    lower(e)?.for_each_atom(&mut |a| {
        if let Some(o) = a.jet_order() {
            max = max.max(o);
        }
    });
    Ok(max)
}

impl ConservedVector {
    pub fn new(density: Expr, flux: Expr) -> Self {
        ConservedVector { density, flux }
    }

    pub fn order(&self) -> Result<u32, ExprError> {
        Ok(order_of(&self.density)?.max(order_of(&self.flux)?))
    }

    /// The divergence `D_t F + D_x G` on the free jet space.
    pub fn divergence(&self) -> Result<Expr, ExprError> {
        Ok(total_derivative(&self.density, IndepVar::T)?
            + total_derivative(&self.flux, IndepVar::X)?)
    }
}

/// Shift by a gauge term: `F ↦ F + D_x H`, `G ↦ G − D_t H`.  The divergence
/// is unchanged identically, so the verification verdict is preserved.
pub fn trivial_shift(cv: &ConservedVector, gauge: &Expr) -> Result<ConservedVector, ExprError> {
    Ok(ConservedVector {
        density: cv.density.clone() + total_derivative(gauge, IndepVar::X)?,
        flux: cv.flux.clone() - total_derivative(gauge, IndepVar::T)?,
    })
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    /// The divergence reduced modulo the system; zero iff the law holds.
    pub residual: Expr,
    pub holds: bool,
    /// Order of the conserved vector itself.
    pub order: u32,
    /// Differential consequences substituted during reduction.
    pub consequences_used: Vec<Indeterminate>,
    pub elapsed: Duration,
}

fn check_declared(sys: &DifferentialSystem, e: &Expr) -> Result<(), EngineError> {
    for a in lower(e)?.atom_set() {
        if let Indeterminate::Jet { dep, .. } = a {
            if dep != Dep::U && sys.level(dep).is_none() {
                return Err(EngineError::UndeclaredVariable { name: a.to_string() });
            }
        }
    }
    Ok(())
}

/// Verify `D_t F + D_x G = 0` modulo the system's differential consequences
/// up to `max_order`.
pub fn verify_conservation_law(
    sys: &DifferentialSystem,
    cv: &ConservedVector,
    max_order: u32,
) -> Result<VerificationReport, EngineError> {
    let start = Instant::now();
    check_declared(sys, &cv.density)?;
    check_declared(sys, &cv.flux)?;
    let order = cv.order()?;
    let mut red = sys.reducer(max_order);
    let residual = red.reduce_expr(&cv.divergence()?)?;
    let holds = residual.is_zero_literal();
    Ok(VerificationReport {
        residual,
        holds,
        order,
        consequences_used: red.used(),
        elapsed: start.elapsed(),
    })
}
