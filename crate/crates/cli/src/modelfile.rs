//! The model-file format: a flat TOML document describing an evolution
//! equation `u_t = (d(u)·u_x)_x + k(u)·u_x`, optional potential levels, and a
//! conserved pair `(F, G)`, with all expressions as strings in the engine
//! grammar.
//!
//! Sections:
//!
//! ```toml
//! [model]            # omit a key to leave that coefficient arbitrary
//! d = "u^-2"
//! Dint = "-u^-1"     # antiderivative pin, checked on load
//! k = "0"
//! Kint = "0"
//!
//! [params]
//! declare = ["eps"]
//!
//! [functions.sigma]  # either a classifying symbol f(t, y) with
//! args = ["t", "v"]  # f_t + diffusion·f_yy − convection·f_y = 0 …
//! diffusion = "1"
//! convection = "0"
//!
//! [functions.gamma]  # … or a free symbol with explicit relations
//! args = ["t", "x"]
//! relations = ["gamma_t + gamma_xx"]
//!
//! [conserved]
//! F = "sigma"
//! G = "sigma_v*u^-1"
//!
//! [[system]]         # potential levels under the conserved pair, in order
//! dep = "v"
//! x = "u"            # v_x = u
//! t = "d*u_x + Kint" # v_t = …; omit to drop the t-rule
//! ```
//!
//! Loading re-validates every structural invariant (antiderivative pins,
//! relation shape, level ordering); re-emitting a loaded file preserves
//! canonical-form equality of all expressions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use conslaw_core::{
    ArgVar, ConservedVector, Dep, DifferentialSystem, EngineError, ExprError, ModelBuilder,
    PDEModel, PotentialLevel,
};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a valid model file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("[functions.{name}]: {msg}")]
    BadFunction { name: String, msg: String },
    #[error("[[system]]: `{dep}` is not a potential variable (expected `v` or `w`)")]
    BadLevelName { dep: String },
}

// ---------------------------------------------------------------------------
// Document shape

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    #[serde(default, skip_serializing_if = "ModelSection::is_empty")]
    model: ModelSection,
    #[serde(default, skip_serializing_if = "ParamsSection::is_empty")]
    params: ParamsSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    functions: BTreeMap<String, FuncSection>,
    conserved: ConservedSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    system: Vec<LevelSection>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<String>,
    #[serde(rename = "Dint", skip_serializing_if = "Option::is_none")]
    dint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<String>,
    #[serde(rename = "Kint", skip_serializing_if = "Option::is_none")]
    kint: Option<String>,
}

impl ModelSection {
    fn is_empty(&self) -> bool {
        self.d.is_none() && self.dint.is_none() && self.k.is_none() && self.kint.is_none()
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    #[serde(default)]
    declare: Vec<String>,
}

impl ParamsSection {
    fn is_empty(&self) -> bool {
        self.declare.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FuncSection {
    args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diffusion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convection: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    relations: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConservedSection {
    #[serde(rename = "F")]
    f: String,
    #[serde(rename = "G")]
    g: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelSection {
    dep: String,
    x: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<String>,
}

// ---------------------------------------------------------------------------
// Loading

/// A model file brought to life: the system the conserved pair is claimed
/// to be a law of, and the pair itself.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub system: DifferentialSystem,
    pub law: ConservedVector,
}

impl Loaded {
    pub fn model(&self) -> &PDEModel {
        self.system.model()
    }
}

fn arg_var(name: &str, func: &str) -> Result<ArgVar, FileError> {
    match name {
        "t" => Ok(ArgVar::T),
        "x" => Ok(ArgVar::X),
        "u" => Ok(ArgVar::U),
        "v" => Ok(ArgVar::V),
        other => Err(FileError::BadFunction {
            name: func.to_string(),
            msg: format!("unknown argument `{other}` (expected t, x, u or v)"),
        }),
    }
}

pub fn load_str(src: &str) -> Result<Loaded, FileError> {
    let doc: Doc = toml::from_str(src)?;
    build(&doc)
}

pub fn load_path(path: &Path) -> Result<Loaded, FileError> {
    let src = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&src)
}

fn build(doc: &Doc) -> Result<Loaded, FileError> {
    let mut b = ModelBuilder::new();
    for p in &doc.params.declare {
        b = b.param(p)?;
    }

    // declare every symbol before any relation so relations may cross-refer
    for (name, f) in &doc.functions {
        let args: Vec<ArgVar> =
            f.args.iter().map(|a| arg_var(a, name)).collect::<Result<_, _>>()?;
        if f.diffusion.is_some() || f.convection.is_some() {
            if !f.relations.is_empty() {
                return Err(FileError::BadFunction {
                    name: name.clone(),
                    msg: "give either diffusion/convection or explicit relations, not both"
                        .to_string(),
                });
            }
            let [a0, a1]: [ArgVar; 2] = args.try_into().map_err(|_| FileError::BadFunction {
                name: name.clone(),
                msg: "a classifying symbol takes exactly two arguments".to_string(),
            })?;
            b = b.classifying_funcsym(
                name,
                [a0, a1],
                f.diffusion.as_deref().unwrap_or("1"),
                f.convection.as_deref().unwrap_or("0"),
            )?;
        } else {
            b = b.funcsym(name, &args)?;
        }
    }
    for (name, f) in &doc.functions {
        for rel in &f.relations {
            b = b.relation(name, rel)?;
        }
    }

    if let Some(d) = &doc.model.d {
        b = b.diffusion(d)?;
    }
    if let Some(p) = &doc.model.dint {
        b = b.diffusion_antiderivative(p)?;
    }
    if let Some(k) = &doc.model.k {
        b = b.convection(k)?;
    }
    if let Some(p) = &doc.model.kint {
        b = b.convection_antiderivative(p)?;
    }
    let model = b.build()?;

    let law = ConservedVector::new(
        model.parse_expr(&doc.conserved.f)?,
        model.parse_expr(&doc.conserved.g)?,
    );

    let mut levels = Vec::new();
    for lv in &doc.system {
        let dep = match lv.dep.as_str() {
            "v" => Dep::V,
            "w" => Dep::W,
            other => return Err(FileError::BadLevelName { dep: other.to_string() }),
        };
        levels.push(PotentialLevel {
            dep,
            x_rhs: model.parse_expr(&lv.x)?,
            t_rhs: lv.t.as_deref().map(|s| model.parse_expr(s)).transpose()?,
        });
    }
    let system = DifferentialSystem::with_levels(model, levels)?;
    Ok(Loaded { system, law })
}

// ---------------------------------------------------------------------------
// Emission

fn arg_name(a: ArgVar) -> &'static str {
    match a {
        ArgVar::T => "t",
        ArgVar::X => "x",
        ArgVar::U => "u",
        ArgVar::V => "v",
    }
}

fn doc_of(system: &DifferentialSystem, law: &ConservedVector) -> Doc {
    let model = system.model();
    let coeff = |c: conslaw_core::Coefficient| match c {
        conslaw_core::Coefficient::Arbitrary => None,
        conslaw_core::Coefficient::Explicit(e) => Some(e.to_string()),
    };
    let functions = model
        .ctx()
        .funcs()
        .filter(|f| f.name != "d" && f.name != "k")
        .map(|f| {
            (
                f.name.clone(),
                FuncSection {
                    args: f.args.iter().map(|a| arg_name(*a).to_string()).collect(),
                    diffusion: None,
                    convection: None,
                    relations: f.relations.iter().map(|r| r.to_string()).collect(),
                },
            )
        })
        .collect();
    Doc {
        model: ModelSection {
            d: coeff(model.diffusion()),
            dint: model.dint_pin().map(|p| p.to_string()),
            k: coeff(model.convection()),
            kint: model.kint_pin().map(|p| p.to_string()),
        },
        params: ParamsSection { declare: model.ctx().params().map(str::to_string).collect() },
        functions,
        conserved: ConservedSection { f: law.density.to_string(), g: law.flux.to_string() },
        system: system
            .levels()
            .iter()
            .map(|lv| LevelSection {
                dep: match lv.dep {
                    Dep::U => "u".to_string(),
                    Dep::V => "v".to_string(),
                    Dep::W => "w".to_string(),
                },
                x: lv.x_rhs.to_string(),
                t: lv.t_rhs.as_ref().map(|t| t.to_string()),
            })
            .collect(),
    }
}

/// Render a system and its conserved pair back into the file format.  The
/// output loads to canonically equal expressions (classifying symbols come
/// back as explicit relations, which define the same rewriting).
pub fn emit(system: &DifferentialSystem, law: &ConservedVector) -> String {
    toml::to_string(&doc_of(system, law)).expect("document shape is always serializable")
}
