//! Symbol declarations: function symbols with formal arguments and defining
//! relations, plus named exact parameters.
//!
//! Every context implicitly declares the diffusion and convection
//! coefficients `d(u)` and `k(u)`; the antiderivative symbols `Dint`, `Kint`
//! and the jet variables need no declaration.

use std::collections::{BTreeMap, BTreeSet};

use super::atom::ArgVar;
use super::{Expr, ExprError};

/// Names that cannot be declared as function symbols or parameters.
const RESERVED: &[&str] = &["t", "x", "u", "v", "w", "exp", "Dint", "Kint"];

#[derive(Clone, Debug)]
pub struct FuncSym {
    pub name: String,
    pub args: Vec<ArgVar>,
    /// Expressions required to vanish identically; each must isolate one
    /// lexicographically-highest derivative so rewriting terminates.
    pub relations: Vec<Expr>,
}

#[derive(Clone, Debug, Default)]
pub struct Context {
    funcs: BTreeMap<String, FuncSym>,
    params: BTreeSet<String>,
}

impl Context {
    /// A context with the implicit coefficient symbols `d(u)` and `k(u)`.
    pub fn new() -> Self {
        let mut ctx = Context::default();
        for name in ["d", "k"] {
            ctx.funcs.insert(
                name.to_string(),
                FuncSym { name: name.to_string(), args: vec![ArgVar::U], relations: vec![] },
            );
        }
        ctx
    }

    fn check_name(&self, name: &str) -> Result<(), ExprError> {
        let valid = !name.is_empty()
            && name.chars().next().unwrap().is_ascii_alphabetic()
            && name.chars().all(|c| c.is_ascii_alphanumeric());
        if !valid
            || RESERVED.contains(&name)
            || self.funcs.contains_key(name)
            || self.params.contains(name)
        {
            return Err(ExprError::BadDeclaration { name: name.to_string() });
        }
        Ok(())
    }

    pub fn declare_func(&mut self, name: &str, args: &[ArgVar]) -> Result<(), ExprError> {
        self.check_name(name)?;
        let distinct: BTreeSet<_> = args.iter().collect();
        if args.is_empty() || distinct.len() != args.len() {
            return Err(ExprError::BadDeclaration { name: name.to_string() });
        }
        self.funcs.insert(
            name.to_string(),
            FuncSym { name: name.to_string(), args: args.to_vec(), relations: vec![] },
        );
        Ok(())
    }

    /// Attach defining relations (expressions that must vanish identically).
    pub fn set_relations(&mut self, name: &str, relations: Vec<Expr>) -> Result<(), ExprError> {
        match self.funcs.get_mut(name) {
            Some(f) => {
                f.relations = relations;
                Ok(())
            }
            None => Err(ExprError::BadDeclaration { name: name.to_string() }),
        }
    }

    /// Declare a symbol `name(args)` obeying `name_t + D name_yy - K name_y = 0`
    /// where `y` is the second argument — the linear classifying equation all
    /// coefficient functions of this equation class satisfy.  With `D = 1`,
    /// `K = 0` this is the backward-heat-type relation used throughout the
    /// case registry.
    pub fn declare_classifying_func(
        &mut self,
        name: &str,
        args: [ArgVar; 2],
        diffusion: Expr,
        convection: Expr,
    ) -> Result<(), ExprError> {
        if args[0] != ArgVar::T {
            return Err(ExprError::BadDeclaration { name: name.to_string() });
        }
        self.declare_func(name, &args)?;
        let ft = Expr::Atom(super::atom::Indeterminate::func(name, &args, &[1, 0]));
        let fyy = Expr::Atom(super::atom::Indeterminate::func(name, &args, &[0, 2]));
        let fy = Expr::Atom(super::atom::Indeterminate::func(name, &args, &[0, 1]));
        let rel = ft + diffusion * fyy - convection * fy;
        self.set_relations(name, vec![rel])
    }

    /// Declare a heat-type symbol: `name_t + name_yy = 0`.
    pub fn declare_heat_func(&mut self, name: &str, args: [ArgVar; 2]) -> Result<(), ExprError> {
        self.declare_classifying_func(name, args, Expr::int(1), Expr::int(0))
    }

    pub fn declare_param(&mut self, name: &str) -> Result<(), ExprError> {
        self.check_name(name)?;
        self.params.insert(name.to_string());
        Ok(())
    }

    pub fn func(&self, name: &str) -> Option<&FuncSym> {
        self.funcs.get(name)
    }

    pub fn funcs(&self) -> impl Iterator<Item = &FuncSym> {
        self.funcs.values()
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.contains(name)
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|s| s.as_str())
    }
}
