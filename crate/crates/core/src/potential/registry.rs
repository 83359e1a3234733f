//! The classification registry: every inequivalent first-order conservation
//! law of `u_t = (d(u)u_x)_x + k(u)u_x` together with its potential system,
//! and for each first-step system the second-step laws layered on top of it.
//!
//! Single-numbered cases are laws of the bare equation; a dotted id `N.M`
//! is a law of the potential system of case `N` (its `v_t` rule, a
//! differential consequence of the others, is kept so reductions close).
//! `alpha`, `beta` (in `t`, `x`) and `sigma` (in `t`, `v`) denote arbitrary
//! solutions of the backward heat equation in their second argument, and
//! `eps` an arbitrary constant.

use crate::error::EngineError;
use crate::expr::{ArgVar, IndepVar};
use crate::jet::{total_derivative, DifferentialSystem, ModelBuilder, PDEModel, PotentialLevel};
use crate::laws::ConservedVector;

#[derive(Debug, Clone)]
pub struct TableCase {
    pub id: &'static str,
    /// Single-numbered case whose potential system this law lives on.
    pub parent: Option<&'static str>,
    /// The conserved pair `(F, G)` as catalogued.
    pub law: ConservedVector,
    /// System the law is a conservation law of.
    pub system: DifferentialSystem,
    /// `system` extended with this law's own potential.
    pub extended: DifferentialSystem,
}

pub const CASE_IDS: [&str; 13] = [
    "1", "1.1", "1.2", "1.3", "1.4", "1.5", "1.6", "2", "2.1", "3", "3.1", "4", "4.1",
];

/// `(F, G)` source of a single-numbered case, parsed in the model context of
/// the case itself or of any of its dotted descendants.
fn first_step_law(id: &str) -> Option<(&'static str, &'static str)> {
    Some(match id {
        "1" => ("u", "-d*u_x - Kint"),
        "2" => ("x*u", "Dint - x*d*u_x"),
        "3" => ("(exp(x) + eps)*u", "-(exp(x) + eps)*d*u_x - eps*Dint"),
        "4" => ("alpha*u", "alpha_x*u - alpha*u_x"),
        _ => return None,
    })
}

fn model_for(id: &str) -> Result<PDEModel, EngineError> {
    let heat_in = |b: ModelBuilder, name, arg| b.classifying_funcsym(name, [ArgVar::T, arg], "1", "0");
    let b = ModelBuilder::new();
    let b = match id {
        "1" => b,
        "1.1" | "2" | "2.1" => b.convection("0")?.convection_antiderivative("0")?,
        "1.2" => b.convection("d")?.convection_antiderivative("Dint")?,
        "1.3" => b.convection("Dint + u*d")?.convection_antiderivative("u*Dint")?,
        "1.4" => heat_in(b, "sigma", ArgVar::V)?
            .diffusion("u^-2")?
            .diffusion_antiderivative("-u^-1")?
            .convection("0")?
            .convection_antiderivative("0")?,
        "1.5" => heat_in(b, "sigma", ArgVar::V)?
            .diffusion("u^-2")?
            .diffusion_antiderivative("-u^-1")?
            .convection("u^-2")?
            .convection_antiderivative("-u^-1")?,
        "1.6" => heat_in(b, "alpha", ArgVar::X)?
            .diffusion("1")?
            .diffusion_antiderivative("u")?
            .convection("2*u")?
            .convection_antiderivative("u^2")?,
        "3" | "3.1" => b.param("eps")?.convection("d")?.convection_antiderivative("Dint")?,
        "4" => heat_in(b, "alpha", ArgVar::X)?
            .diffusion("1")?
            .diffusion_antiderivative("u")?
            .convection("0")?
            .convection_antiderivative("0")?,
        "4.1" => {
            let b = heat_in(b, "alpha", ArgVar::X)?;
            heat_in(b, "beta", ArgVar::X)?
                .diffusion("1")?
                .diffusion_antiderivative("u")?
                .convection("0")?
                .convection_antiderivative("0")?
        }
        other => return Err(EngineError::UnknownCase { id: other.to_string() }),
    };
    b.build()
}

/// The second-step conserved pair of a dotted case.  Case 4.1 is built from
/// the ratio of two heat solutions, so its components are assembled rather
/// than quoted.
fn second_step_law(id: &str, m: &PDEModel) -> Result<ConservedVector, EngineError> {
    let quoted = |f: &str, g: &str| -> Result<ConservedVector, EngineError> {
        Ok(ConservedVector::new(m.parse_expr(f)?, m.parse_expr(g)?))
    };
    match id {
        "1.1" => quoted("v", "-Dint"),
        "1.2" => quoted("exp(x)*v", "-exp(x)*Dint"),
        "1.3" => quoted("exp(v)", "-exp(v)*Dint"),
        "1.4" => quoted("sigma", "sigma_v*u^-1"),
        "1.5" => quoted("sigma*exp(x)", "sigma_v*u^-1*exp(x)"),
        "1.6" => quoted("alpha*exp(v)", "alpha_x*exp(v) - alpha*u*exp(v)"),
        "2.1" => quoted("x^-2*v", "-x^-1*Dint"),
        "3.1" => quoted(
            "exp(x)*(exp(x) + eps)^-2*v",
            "-exp(x)*(exp(x) + eps)^-1*Dint",
        ),
        "4.1" => {
            let ratio = m.parse_expr("beta/alpha")?;
            let rx = total_derivative(&ratio, IndepVar::X)?;
            let rt = total_derivative(&ratio, IndepVar::T)?;
            let alpha = m.parse_expr("alpha")?;
            let u = m.parse_expr("u")?;
            let v = m.parse_expr("v")?;
            Ok(ConservedVector::new(
                rx.clone() * v.clone(),
                -(alpha * rx * u) - rt * v,
            ))
        }
        other => Err(EngineError::UnknownCase { id: other.to_string() }),
    }
}

fn level_of(dep: crate::expr::Dep, cv: &ConservedVector) -> PotentialLevel {
    PotentialLevel { dep, x_rhs: cv.density.clone(), t_rhs: Some(-cv.flux.clone()) }
}

/// Build one registry case.
pub fn case(id: &str) -> Result<TableCase, EngineError> {
    let id = CASE_IDS
        .iter()
        .find(|c| **c == id)
        .copied()
        .ok_or_else(|| EngineError::UnknownCase { id: id.to_string() })?;
    let model = model_for(id)?;
    match first_step_law(id) {
        Some((f, g)) => {
            let law = ConservedVector::new(model.parse_expr(f)?, model.parse_expr(g)?);
            let system = DifferentialSystem::base(model.clone());
            let extended = DifferentialSystem::with_levels(
                model,
                vec![level_of(crate::expr::Dep::V, &law)],
            )?;
            Ok(TableCase { id, parent: None, law, system, extended })
        }
        None => {
            let parent = &id[..id.find('.').expect("dotted id")];
            let parent = CASE_IDS.iter().find(|c| **c == parent).copied().unwrap();
            let (pf, pg) = first_step_law(parent).expect("parent is single-numbered");
            let parent_law =
                ConservedVector::new(model.parse_expr(pf)?, model.parse_expr(pg)?);
            let law = second_step_law(id, &model)?;
            let v = level_of(crate::expr::Dep::V, &parent_law);
            let w = level_of(crate::expr::Dep::W, &law);
            let system = DifferentialSystem::with_levels(model.clone(), vec![v.clone()])?;
            let extended = DifferentialSystem::with_levels(model, vec![v, w])?;
            Ok(TableCase { id, parent: Some(parent), law, system, extended })
        }
    }
}

pub fn all_cases() -> Result<Vec<TableCase>, EngineError> {
    CASE_IDS.iter().map(|id| case(id)).collect()
}
