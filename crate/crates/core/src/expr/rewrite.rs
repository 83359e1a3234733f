//! Oriented rewriting: defining relations of function symbols, explicit
//! coefficient expansions and on-shell consequences are all expressed as
//! atom-level rewrite rules applied simultaneously to a fixpoint.
//!
//! Orientation isolates the lexicographically greatest derivative of the
//! symbol in each relation; prolonged instances are obtained by formal
//! differentiation with respect to the formal arguments.  Every rewrite
//! strictly decreases that derivative index, so the fixpoint terminates.

use std::collections::{BTreeMap, BTreeSet};

use super::atom::{ArgVar, Dep, Indeterminate};
use super::canon::Canon;
use super::context::Context;
use super::poly::Poly;
use super::ExprError;

const REWRITE_PASS_LIMIT: usize = 512;

#[derive(Clone, Debug)]
pub(crate) enum Rule {
    /// Applies to every derivative of `name` whose index dominates `base`
    /// componentwise; the replacement is `rhs` formally differentiated by the
    /// index difference.
    Func { name: String, args: Vec<ArgVar>, base: Vec<u32>, rhs: Canon },
    /// Exact single-atom substitution.
    Atom { atom: Indeterminate, rhs: Canon },
}

/// An ordered collection of rewrite rules.
#[derive(Clone, Debug, Default)]
pub struct RelationSet {
    pub(crate) rules: Vec<Rule>,
}

impl RelationSet {
    pub fn empty() -> Self {
        RelationSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Orient every defining relation declared in the context.
    pub fn from_context(ctx: &Context) -> Result<Self, ExprError> {
        let mut set = RelationSet::empty();
        for f in ctx.funcs() {
            for rel in &f.relations {
                let canon = super::lower(rel)?;
                let (base, rhs) = orient(&canon, &f.name, &f.args)?;
                set.rules.push(Rule::Func {
                    name: f.name.clone(),
                    args: f.args.clone(),
                    base,
                    rhs,
                });
            }
        }
        Ok(set)
    }

    pub fn merged(&self, other: &RelationSet) -> RelationSet {
        let mut rules = self.rules.clone();
        rules.extend(other.rules.iter().cloned());
        RelationSet { rules }
    }

    pub(crate) fn push_atom_rule(&mut self, atom: Indeterminate, rhs: Canon) {
        self.rules.push(Rule::Atom { atom, rhs });
    }

    /// Expand every derivative of a symbol by an explicit expression in its
    /// formal arguments (e.g. a concrete diffusion coefficient).  The
    /// expression must not mention the symbol itself.
    pub(crate) fn push_symbol_expansion(
        &mut self,
        name: &str,
        args: &[ArgVar],
        rhs: Canon,
    ) -> Result<(), ExprError> {
        let mut cyclic = false;
        rhs.for_each_atom(&mut |a| {
            if let Indeterminate::Func { name: n, .. } = a {
                if n == name {
                    cyclic = true;
                }
            }
        });
        if cyclic {
            return Err(ExprError::InvalidRelation {
                msg: format!("expansion of `{name}` mentions itself"),
            });
        }
        self.rules.push(Rule::Func {
            name: name.to_string(),
            args: args.to_vec(),
            base: vec![0; args.len()],
            rhs,
        });
        Ok(())
    }

    fn rewrite_atom(&self, a: &Indeterminate) -> Option<Canon> {
        for rule in &self.rules {
            match rule {
                Rule::Atom { atom, rhs } => {
                    if atom == a {
                        return Some(rhs.clone());
                    }
                }
                Rule::Func { name, args, base, rhs } => {
                    if let Indeterminate::Func { name: an, index, .. } = a {
                        if an == name
                            && index.len() == base.len()
                            && index.iter().zip(base).all(|(i, b)| i >= b)
                        {
                            let mut out = rhs.clone();
                            for (slot, (i, b)) in index.iter().zip(base).enumerate() {
                                for _ in 0..(i - b) {
                                    out = formal_diff(&out, args[slot]);
                                }
                            }
                            return Some(out);
                        }
                    }
                }
            }
        }
        None
    }

    /// Rewrite to a fixpoint; returns the result and the set of atoms that
    /// were actually rewritten.  Every pass substitutes all matched atoms
    /// simultaneously, so the result does not depend on rule order for
    /// non-overlapping rule sets.
    pub(crate) fn apply(
        &self,
        c: &Canon,
    ) -> Result<(Canon, BTreeSet<Indeterminate>), ExprError> {
        if self.rules.is_empty() {
            return Ok((c.clone(), BTreeSet::new()));
        }
        let mut cur = c.clone();
        let mut used = BTreeSet::new();
        for _ in 0..REWRITE_PASS_LIMIT {
            let mut map: BTreeMap<Indeterminate, Canon> = BTreeMap::new();
            cur.for_each_atom(&mut |a| {
                if !map.contains_key(a) {
                    if let Some(r) = self.rewrite_atom(a) {
                        map.insert(a.clone(), r);
                    }
                }
            });
            if map.is_empty() {
                return Ok((cur, used));
            }
            used.extend(map.keys().cloned());
            cur = cur.substitute(&|a: &Indeterminate| map.get(a).cloned())?;
        }
        Err(ExprError::RewriteLimit { limit: REWRITE_PASS_LIMIT })
    }
}

/// Formal derivative with respect to a formal argument: function-symbol
/// indices increment at the matching slot, the argument itself differentiates
/// to 1, and the antiderivative symbols differentiate to their coefficient
/// functions.  All other atoms are treated as constants.
pub(crate) fn formal_diff(c: &Canon, arg: ArgVar) -> Canon {
    c.derive(&|a: &Indeterminate| formal_diff_atom(a, arg))
}

pub(crate) fn formal_diff_atom(a: &Indeterminate, arg: ArgVar) -> Option<Canon> {
    match a {
        Indeterminate::Indep(iv) => {
            let matches = matches!(
                (iv, arg),
                (super::atom::IndepVar::T, ArgVar::T) | (super::atom::IndepVar::X, ArgVar::X)
            );
            matches.then(Canon::one)
        }
        Indeterminate::Jet { dep, dt: 0, dx: 0 } => {
            let matches = matches!((dep, arg), (Dep::U, ArgVar::U) | (Dep::V, ArgVar::V));
            matches.then(Canon::one)
        }
        Indeterminate::Jet { .. } => None,
        Indeterminate::Func { name, args, index } => {
            args.iter().position(|a| *a == arg).map(|slot| {
                let mut idx = index.clone();
                idx[slot] += 1;
                Canon::from_atom(Indeterminate::func(name, args, &idx))
            })
        }
        Indeterminate::Anti(kind) => (arg == ArgVar::U).then(|| {
            Canon::from_atom(Indeterminate::func(kind.coefficient_name(), &[ArgVar::U], &[0]))
        }),
        Indeterminate::Param(_) => None,
    }
}

/// Orient a relation (an expression required to vanish) of symbol `name`:
/// isolate the lexicographically greatest derivative of `name`, which must
/// occur linearly.
fn orient(
    relation: &Canon,
    name: &str,
    args: &[ArgVar],
) -> Result<(Vec<u32>, Canon), ExprError> {
    if relation.is_zero() {
        return Err(ExprError::InvalidRelation { msg: format!("relation for `{name}` is trivial") });
    }
    let mut best: Option<Vec<u32>> = None;
    relation.for_each_atom(&mut |a| {
        if let Indeterminate::Func { name: an, index, .. } = a {
            if an == name && best.as_ref().map(|b| index > b).unwrap_or(true) {
                best = Some(index.clone());
            }
        }
    });
    let base = best.ok_or_else(|| ExprError::InvalidRelation {
        msg: format!("relation does not mention `{name}`"),
    })?;
    let pivot = Indeterminate::func(name, args, &base);

    // Split the numerator by the pivot's exponent; linearity is required.
    let mut coeff = Poly::zero();
    let mut rest = Poly::zero();
    for (m, c) in &relation.num().terms {
        match m.vars.get(&pivot).copied().unwrap_or(0) {
            0 => {
                let mut in_exp = false;
                if let Some(q) = &m.exparg {
                    q.for_each_atom(&mut |a| in_exp |= a == &pivot);
                }
                if in_exp {
                    rest = Poly::zero();
                    coeff = Poly::zero();
                    break;
                }
                rest.add_term(m.clone(), c.clone());
            }
            1 => {
                let mut vars = m.vars.clone();
                vars.remove(&pivot);
                coeff.add_term(
                    super::poly::Mono { vars, exparg: m.exparg.clone() },
                    c.clone(),
                );
            }
            _ => {
                coeff = Poly::zero();
                break;
            }
        }
    }
    if coeff.is_zero() {
        return Err(ExprError::InvalidRelation {
            msg: format!("cannot isolate the highest derivative of `{name}` linearly"),
        });
    }
    let mut coeff_has_pivot_family = false;
    coeff.for_each_atom(&mut |a| {
        if let Indeterminate::Func { name: an, .. } = a {
            coeff_has_pivot_family |= an == name;
        }
    });
    if coeff_has_pivot_family {
        return Err(ExprError::InvalidRelation {
            msg: format!("leading coefficient of the `{name}` relation depends on `{name}`"),
        });
    }
    let rhs = Canon::from_poly(rest.neg())
        .div(&Canon::from_poly(coeff))
        .expect("nonzero coefficient");
    Ok((base, rhs))
}
