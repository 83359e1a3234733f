//! Concrete numeric instantiations of the registry: for every case, at least
//! two coefficient/instance choices that satisfy the case's constraints
//! exactly, ready for on-shell sampling and grid runs.

use crate::error::EngineError;
use crate::jet::{DifferentialSystem, PDEModel};
use crate::laws::ConservedVector;
use crate::potential::registry;

use super::{FuncInstance, Instance};

/// One registry case over a fully concrete model, with numeric bindings for
/// whatever stays symbolic (parameters, function symbols).
#[derive(Debug, Clone)]
pub struct CaseInstance {
    pub id: &'static str,
    pub label: String,
    pub system: DifferentialSystem,
    pub extended: DifferentialSystem,
    pub law: ConservedVector,
    pub instance: Instance,
}

/// Concrete coefficient strings: `(label, d, Dint, k, Kint)`.
type Coeffs = (&'static str, &'static str, &'static str, &'static str, &'static str);

const POLY_FREE: Coeffs = ("d=1+u^2, k=u", "1 + u^2", "u + u^3/3", "u", "u^2/2");
const EXP_FREE: Coeffs = ("d=exp(u), k=1", "exp(u)", "exp(u)", "1", "u");
const POLY_K0: Coeffs = ("d=1+u^2, k=0", "1 + u^2", "u + u^3/3", "0", "0");
const EXP_K0: Coeffs = ("d=exp(u), k=0", "exp(u)", "exp(u)", "0", "0");
const POLY_KD: Coeffs = ("d=k=1+u^2", "1 + u^2", "u + u^3/3", "1 + u^2", "u + u^3/3");
const EXP_KD: Coeffs = ("d=k=exp(u)", "exp(u)", "exp(u)", "exp(u)", "exp(u)");
const POLY_DRIFTED: Coeffs = (
    "d=1+u^2, k=Dint+u*d",
    "1 + u^2",
    "u + u^3/3",
    "2*u + 4*u^3/3",
    "u^2 + u^4/3",
);
const EXP_DRIFTED: Coeffs = (
    "d=exp(u), k=Dint+u*d",
    "exp(u)",
    "exp(u)",
    "exp(u) + u*exp(u)",
    "u*exp(u)",
);

fn concrete_model(c: Coeffs, with_eps: bool) -> Result<PDEModel, EngineError> {
    let mut b = PDEModel::builder();
    if with_eps {
        b = b.param("eps")?;
    }
    b.diffusion(c.1)?
        .diffusion_antiderivative(c.2)?
        .convection(c.3)?
        .convection_antiderivative(c.4)?
        .build()
}

fn swap_model(
    sys: &DifferentialSystem,
    model: &PDEModel,
) -> Result<DifferentialSystem, EngineError> {
    if sys.levels().is_empty() {
        Ok(DifferentialSystem::base(model.clone()))
    } else {
        DifferentialSystem::with_levels(model.clone(), sys.levels().to_vec())
    }
}

/// At least two concrete variants of the given registry case.  Coefficient
/// families obey the case's classifying constraint; function symbols receive
/// closed-form instances satisfying their defining relation identically.
pub fn case_instances(id: &str) -> Result<Vec<CaseInstance>, EngineError> {
    let tc = registry::case(id)?;

    // fixed-coefficient cases keep their registry model and only vary the
    // function-symbol instances
    let func_variants: Option<Vec<(String, Instance)>> = match id {
        "1.4" | "1.5" => Some(
            [FuncInstance::Quad, FuncInstance::Exp(1.0)]
                .into_iter()
                .map(|f| {
                    (format!("sigma = {}", f.describe()),
                     Instance::new().func("sigma", f).positive_u())
                })
                .collect(),
        ),
        "1.6" | "4" => Some(
            [FuncInstance::Quad, FuncInstance::Exp(1.0)]
                .into_iter()
                .map(|f| {
                    (format!("alpha = {}", f.describe()), Instance::new().func("alpha", f))
                })
                .collect(),
        ),
        "4.1" => Some(
            [
                (FuncInstance::Const(1.0), FuncInstance::Quad),
                (FuncInstance::Exp(1.0), FuncInstance::Linear(0.0, 1.0)),
            ]
            .into_iter()
            .map(|(a, b)| {
                (
                    format!("alpha = {}, beta = {}", a.describe(), b.describe()),
                    Instance::new().func("alpha", a).func("beta", b),
                )
            })
            .collect(),
        ),
        _ => None,
    };
    if let Some(variants) = func_variants {
        return Ok(variants
            .into_iter()
            .map(|(label, instance)| CaseInstance {
                id: tc.id,
                label,
                system: tc.system.clone(),
                extended: tc.extended.clone(),
                law: tc.law.clone(),
                instance,
            })
            .collect());
    }

    // free-coefficient cases get two concrete (d, k) choices each
    let (coeffs, eps): (&[Coeffs], &[Option<f64>]) = match id {
        "1" => (&[POLY_FREE, EXP_FREE], &[None, None]),
        "1.1" | "2" | "2.1" => (&[POLY_K0, EXP_K0], &[None, None]),
        "1.2" => (&[POLY_KD, EXP_KD], &[None, None]),
        "3" | "3.1" => (&[POLY_KD, EXP_KD], &[Some(1.0), Some(0.0)]),
        "1.3" => (&[POLY_DRIFTED, EXP_DRIFTED], &[None, None]),
        other => return Err(EngineError::UnknownCase { id: other.to_string() }),
    };

    let mut out = Vec::new();
    for (c, e) in coeffs.iter().zip(eps) {
        let model = concrete_model(*c, e.is_some())?;
        let mut label = c.0.to_string();
        let mut instance = Instance::new();
        if let Some(v) = e {
            label = format!("{label}, eps={v}");
            instance = instance.param("eps", *v);
        }
        out.push(CaseInstance {
            id: tc.id,
            label,
            system: swap_model(&tc.system, &model)?,
            extended: swap_model(&tc.extended, &model)?,
            law: tc.law.clone(),
            instance,
        });
    }
    Ok(out)
}
