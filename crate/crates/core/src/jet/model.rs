//! The evolution model `u_t = (d(u)·u_x)_x + k(u)·u_x` with its symbol
//! context and rewriting rules.  Coefficients are either arbitrary (kept as
//! the function symbols `d`, `k`) or explicit expressions in `u`; the
//! antiderivative symbols `Dint = ∫d du`, `Kint = ∫k du` may be pinned to
//! closed forms when one exists.

use std::collections::BTreeMap;

use crate::error::EngineError;
use crate::expr::{
    diff_canon, lift, lower, AntiKind, ArgVar, Canon, Context, Dep, Expr, ExprError,
    Indeterminate, RelationSet,
};

/// A coefficient of the model: an arbitrary function of `u` or a closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coefficient {
    Arbitrary,
    Explicit(Expr),
}

impl Coefficient {
    pub fn is_arbitrary(&self) -> bool {
        matches!(self, Coefficient::Arbitrary)
    }
}

#[derive(Debug, Clone)]
pub struct PDEModel {
    ctx: Context,
    diffusion: Option<Expr>,
    convection: Option<Expr>,
    dint: Option<Expr>,
    kint: Option<Expr>,
    rels: RelationSet,
    rhs: Canon,
}

impl PDEModel {
    /// Model with both coefficients arbitrary and no pins.
    pub fn arbitrary() -> PDEModel {
        ModelBuilder::new().build().expect("empty model is valid")
    }

    pub fn builder() -> ModelBuilder {
        ModelBuilder::new()
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn parse_expr(&self, src: &str) -> Result<Expr, ExprError> {
        crate::expr::parse(src, &self.ctx)
    }

    pub fn relations(&self) -> &RelationSet {
        &self.rels
    }

    pub fn diffusion(&self) -> Coefficient {
        match &self.diffusion {
            None => Coefficient::Arbitrary,
            Some(e) => Coefficient::Explicit(e.clone()),
        }
    }

    pub fn convection(&self) -> Coefficient {
        match &self.convection {
            None => Coefficient::Arbitrary,
            Some(e) => Coefficient::Explicit(e.clone()),
        }
    }

    /// The diffusion coefficient as an expression (the symbol `d` when
    /// arbitrary).
    pub fn diffusion_value(&self) -> Expr {
        self.diffusion
            .clone()
            .unwrap_or_else(|| Expr::Atom(coeff_atom(AntiKind::DInt)))
    }

    pub fn convection_value(&self) -> Expr {
        self.convection
            .clone()
            .unwrap_or_else(|| Expr::Atom(coeff_atom(AntiKind::KInt)))
    }

    pub fn dint_value(&self) -> Expr {
        self.dint.clone().unwrap_or(Expr::Atom(Indeterminate::Anti(AntiKind::DInt)))
    }

    pub fn kint_value(&self) -> Expr {
        self.kint.clone().unwrap_or(Expr::Atom(Indeterminate::Anti(AntiKind::KInt)))
    }

    /// The closed form `Dint` is pinned to, if any.
    pub fn dint_pin(&self) -> Option<&Expr> {
        self.dint.as_ref()
    }

    pub fn kint_pin(&self) -> Option<&Expr> {
        self.kint.as_ref()
    }

    /// Right-hand side of the evolution equation,
    /// `d_u·u_x² + d·u_xx + k·u_x`, with explicit coefficients expanded.
    pub fn evolution_rhs(&self) -> Expr {
        lift(&self.rhs)
    }

    pub(crate) fn evolution_rhs_canon(&self) -> &Canon {
        &self.rhs
    }

    /// Normal form modulo the model's expansion and relation rules.
    pub fn normalize(&self, e: &Expr) -> Result<Expr, EngineError> {
        Ok(lift(&self.rels.apply(&lower(e)?)?.0))
    }
}

fn coeff_atom(kind: AntiKind) -> Indeterminate {
    Indeterminate::func(kind.coefficient_name(), &[ArgVar::U], &[0])
}

/// Atoms admissible in a coefficient or pin expression.
fn check_atoms(
    e: &Expr,
    name: &str,
    allow: &dyn Fn(&Indeterminate) -> bool,
) -> Result<(), EngineError> {
    let c = lower(e)?;
    let mut bad: Option<Indeterminate> = None;
    c.for_each_atom(&mut |a| {
        if bad.is_none() && !allow(a) {
            bad = Some(a.clone());
        }
    });
    match bad {
        None => Ok(()),
        Some(a) => Err(EngineError::BadCoefficient {
            name: name.to_string(),
            msg: format!("may not involve `{a}`"),
        }),
    }
}

fn is_u_or_param(ctx: &Context, a: &Indeterminate) -> bool {
    match a {
        Indeterminate::Jet { dep: Dep::U, dt: 0, dx: 0 } => true,
        Indeterminate::Param(p) => ctx.is_param(p),
        _ => false,
    }
}

pub struct ModelBuilder {
    ctx: Context,
    relations: BTreeMap<String, Vec<Expr>>,
    diffusion: Option<Expr>,
    convection: Option<Expr>,
    dint: Option<Expr>,
    kint: Option<Expr>,
}

impl Default for ModelBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ModelBuilder {
    pub fn new() -> Self {
        ModelBuilder {
            ctx: Context::new(),
            relations: BTreeMap::new(),
            diffusion: None,
            convection: None,
            dint: None,
            kint: None,
        }
    }

    /// Declare a parameter.  Parameters must be declared before any
    /// expression that mentions them is parsed.
    pub fn param(mut self, name: &str) -> Result<Self, ExprError> {
        self.ctx.declare_param(name)?;
        Ok(self)
    }

    /// Declare a function symbol without relations.
    pub fn funcsym(mut self, name: &str, args: &[ArgVar]) -> Result<Self, ExprError> {
        self.ctx.declare_func(name, args)?;
        Ok(self)
    }

    /// Declare a function symbol `f(t, y)` constrained by
    /// `f_t + D·f_yy − K·f_y = 0` with `D`, `K` parsed in the current context.
    pub fn classifying_funcsym(
        mut self,
        name: &str,
        args: [ArgVar; 2],
        diffusion: &str,
        convection: &str,
    ) -> Result<Self, ExprError> {
        let d = crate::expr::parse(diffusion, &self.ctx)?;
        let k = crate::expr::parse(convection, &self.ctx)?;
        self.ctx.declare_classifying_func(name, args, d, k)?;
        Ok(self)
    }

    /// Add a relation `src = 0` for an already-declared function symbol.
    pub fn relation(mut self, name: &str, src: &str) -> Result<Self, ExprError> {
        if self.ctx.func(name).is_none() {
            return Err(ExprError::BadDeclaration { name: name.to_string() });
        }
        let e = crate::expr::parse(src, &self.ctx)?;
        self.relations.entry(name.to_string()).or_default().push(e);
        Ok(self)
    }

    /// Same as [`relation`](Self::relation) with an already-built expression.
    pub fn relation_expr(mut self, name: &str, e: Expr) -> Self {
        self.relations.entry(name.to_string()).or_default().push(e);
        self
    }

    pub fn diffusion(mut self, src: &str) -> Result<Self, ExprError> {
        self.diffusion = Some(crate::expr::parse(src, &self.ctx)?);
        Ok(self)
    }

    pub fn diffusion_expr(mut self, e: Expr) -> Self {
        self.diffusion = Some(e);
        self
    }

    pub fn convection(mut self, src: &str) -> Result<Self, ExprError> {
        self.convection = Some(crate::expr::parse(src, &self.ctx)?);
        Ok(self)
    }

    pub fn convection_expr(mut self, e: Expr) -> Self {
        self.convection = Some(e);
        self
    }

    /// Pin `Dint` to a closed form; checked against the diffusion coefficient.
    pub fn diffusion_antiderivative(mut self, src: &str) -> Result<Self, ExprError> {
        self.dint = Some(crate::expr::parse(src, &self.ctx)?);
        Ok(self)
    }

    pub fn diffusion_antiderivative_expr(mut self, e: Expr) -> Self {
        self.dint = Some(e);
        self
    }

    /// Pin `Kint` to a closed form; checked against the convection
    /// coefficient.  The pin may mention `Dint` (e.g. when `k = d`).
    pub fn convection_antiderivative(mut self, src: &str) -> Result<Self, ExprError> {
        self.kint = Some(crate::expr::parse(src, &self.ctx)?);
        Ok(self)
    }

    pub fn convection_antiderivative_expr(mut self, e: Expr) -> Self {
        self.kint = Some(e);
        self
    }

    pub fn build(mut self) -> Result<PDEModel, EngineError> {
        for (name, rels) in std::mem::take(&mut self.relations) {
            self.ctx.set_relations(&name, rels)?;
        }
        let ctx = self.ctx;

        if let Some(d) = &self.diffusion {
            check_atoms(d, "d", &|a| is_u_or_param(&ctx, a))?;
        }
        if let Some(k) = &self.convection {
            // k may reference d and Dint (e.g. k = d, or k = Dint + u·d)
            check_atoms(k, "k", &|a| {
                is_u_or_param(&ctx, a)
                    || *a == coeff_atom(AntiKind::DInt)
                    || *a == Indeterminate::Anti(AntiKind::DInt)
            })?;
        }

        let mut rels = RelationSet::from_context(&ctx)?;
        if let Some(d) = &self.diffusion {
            rels.push_symbol_expansion("d", &[ArgVar::U], lower(d)?)?;
        }
        if let Some(k) = &self.convection {
            rels.push_symbol_expansion("k", &[ArgVar::U], lower(k)?)?;
        }

        for (kind, pin) in
            [(AntiKind::DInt, self.dint.clone()), (AntiKind::KInt, self.kint.clone())]
        {
            let Some(pin) = pin else { continue };
            let name = Indeterminate::Anti(kind).to_string();
            check_atoms(&pin, &name, &|a| {
                if *a == Indeterminate::Anti(kind) {
                    return false; // self-referential pin would not terminate
                }
                is_u_or_param(&ctx, a)
                    || *a == coeff_atom(AntiKind::DInt)
                    || *a == Indeterminate::Anti(AntiKind::DInt)
            })
            .map_err(|_| EngineError::BadPin { name: name.clone() })?;
            // ∂pin/∂u must reproduce the coefficient
            let du = diff_canon(&lower(&pin)?, &Indeterminate::u());
            let coeff = match kind {
                AntiKind::DInt => self.diffusion.clone(),
                AntiKind::KInt => self.convection.clone(),
            }
            .unwrap_or(Expr::Atom(coeff_atom(kind)));
            let mismatch = du.sub(&lower(&coeff)?);
            if !rels.apply(&mismatch)?.0.is_zero() {
                return Err(EngineError::BadPin { name });
            }
            rels.push_atom_rule(Indeterminate::Anti(kind), lower(&pin)?);
        }

        let raw = crate::expr::parse("d_u*u_x^2 + d*u_xx + k*u_x", &ctx)?;
        let rhs = rels.apply(&lower(&raw)?)?.0;

        Ok(PDEModel {
            ctx,
            diffusion: self.diffusion,
            convection: self.convection,
            dint: self.dint,
            kint: self.kint,
            rels,
            rhs,
        })
    }
}
