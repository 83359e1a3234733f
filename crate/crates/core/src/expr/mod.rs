//! Symbolic expression kernel.
//!
//! Expressions live in the differential ring generated by the independent
//! variables `t`, `x`, the jet variables `u_…`, `v_…`, `w_…`, declared
//! function symbols with their formal derivatives, the antiderivative symbols
//! `Dint`/`Kint`, parameters, and `exp(·)` of ring elements.  The `Expr` AST
//! is the public face; every operation normalizes through [`Canon`], a
//! gcd-reduced rational form whose structural equality decides expression
//! equality exactly.

mod atom;
mod canon;
mod context;
mod parse;
mod poly;
mod print;
mod rewrite;

pub use atom::{AntiKind, ArgVar, Dep, IndepVar, Indeterminate};
pub(crate) use canon::Canon;
pub use context::{Context, FuncSym};
pub use parse::parse;
pub(crate) use rewrite::{formal_diff, formal_diff_atom};
pub use rewrite::RelationSet;

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};

pub type Rat = BigRational;

/// Symbolic expression tree.  Sums and products are n-ary; `Power` exponents
/// are integers (fractional powers never arise in this calculus).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Rational(Rat),
    Atom(Indeterminate),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Power(Box<Expr>, i64),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(Rat::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Rational(Rat::new(num.into(), den.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn atom(a: Indeterminate) -> Expr {
        Expr::Atom(a)
    }

    pub fn pow(base: Expr, exponent: i64) -> Expr {
        Expr::Power(Box::new(base), exponent)
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::Exp(Box::new(arg))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Rational(r) if r.is_zero())
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Sum(mut a), Expr::Sum(b)) => {
                a.extend(b);
                Expr::Sum(a)
            }
            (Expr::Sum(mut a), b) => {
                a.push(b);
                Expr::Sum(a)
            }
            (a, Expr::Sum(b)) => {
                let mut v = vec![a];
                v.extend(b);
                Expr::Sum(v)
            }
            (a, b) => Expr::Sum(vec![a, b]),
        }
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Product(mut a), Expr::Product(b)) => {
                a.extend(b);
                Expr::Product(a)
            }
            (Expr::Product(mut a), b) => {
                a.push(b);
                Expr::Product(a)
            }
            (a, Expr::Product(b)) => {
                let mut v = vec![a];
                v.extend(b);
                Expr::Product(v)
            }
            (a, b) => Expr::Product(vec![a, b]),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Quotient(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Rational(r) => Expr::Rational(-r),
            Expr::Product(mut v) => {
                match v.first_mut() {
                    Some(Expr::Rational(r)) => *r = -r.clone(),
                    _ => v.insert(0, Expr::int(-1)),
                }
                Expr::Product(v)
            }
            e => Expr::Product(vec![Expr::int(-1), e]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("malformed derivative suffix in `{name}` at byte {pos}")]
    MalformedSuffix { name: String, pos: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression is not polynomial in `{var}`")]
    NonPolynomial { var: String },
    #[error("relation cannot be used for rewriting: {msg}")]
    InvalidRelation { msg: String },
    #[error("rewriting exceeded {limit} passes without reaching a fixed point")]
    RewriteLimit { limit: usize },
    #[error("argument list for `{name}` does not match its declaration")]
    ArgMismatch { name: String },
    #[error("invalid declaration of `{name}`")]
    BadDeclaration { name: String },
}

/// Evaluate the AST into canonical form.
pub(crate) fn lower(e: &Expr) -> Result<Canon, ExprError> {
    match e {
        Expr::Rational(r) => Ok(Canon::from_rat(r.clone())),
        Expr::Atom(a) => Ok(Canon::from_atom(a.clone())),
        Expr::Sum(items) => {
            let mut acc = Canon::zero();
            for it in items {
                acc = acc.add(&lower(it)?);
            }
            Ok(acc)
        }
        Expr::Product(items) => {
            let mut acc = Canon::one();
            for it in items {
                if acc.is_zero() {
                    break;
                }
                acc = acc.mul(&lower(it)?);
            }
            Ok(acc)
        }
        Expr::Quotient(a, b) => lower(a)?.div(&lower(b)?),
        Expr::Power(b, n) => lower(b)?.pow(*n),
        Expr::Exp(a) => Ok(Canon::exp_of(lower(a)?)),
    }
}

fn lift_poly(p: &poly::Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<(&poly::Mono, &Rat)> = p.terms.iter().collect();
    terms.sort_by(|(a, _), (b, _)| b.cmp_grlex(a));
    let mut items = Vec::with_capacity(terms.len());
    for (m, c) in terms {
        let mut factors = Vec::new();
        if !c.is_one() || m.is_unit() {
            factors.push(Expr::Rational(c.clone()));
        }
        for (a, e) in &m.vars {
            let base = Expr::Atom(a.clone());
            factors.push(if *e == 1 { base } else { Expr::pow(base, *e as i64) });
        }
        if let Some(q) = &m.exparg {
            factors.push(Expr::exp(lift(q)));
        }
        items.push(if factors.len() == 1 {
            factors.pop().expect("nonempty")
        } else {
            Expr::Product(factors)
        });
    }
    if items.len() == 1 {
        items.pop().expect("nonempty")
    } else {
        Expr::Sum(items)
    }
}

/// Read canonical form back into a deterministic AST: terms in descending
/// monomial order, coefficient first in each product.
pub(crate) fn lift(c: &Canon) -> Expr {
    let num = lift_poly(c.num());
    if c.den().is_one() {
        num
    } else {
        Expr::Quotient(Box::new(num), Box::new(lift_poly(c.den())))
    }
}

/// Normal form of `e` modulo the oriented relations in `rels`.
pub fn normalize(e: &Expr, rels: &RelationSet) -> Result<Expr, ExprError> {
    Ok(lift(&rels.apply(&lower(e)?)?.0))
}

/// Exact zero test modulo relations.
pub fn is_zero(e: &Expr, rels: &RelationSet) -> Result<bool, ExprError> {
    Ok(rels.apply(&lower(e)?)?.0.is_zero())
}

/// Structural-value equality: both sides lowered to canonical form.
pub fn equal(a: &Expr, b: &Expr) -> Result<bool, ExprError> {
    Ok(lower(a)? == lower(b)?)
}

/// Round-trip through canonical form: collects like terms and drops
/// vanishing ones, without applying any relations.
pub fn canonical(e: &Expr) -> Result<Expr, ExprError> {
    Ok(lift(&lower(e)?))
}

/// Partial derivative with respect to a single coordinate.  When `v` is one
/// of the formal argument variables (`t`, `x`, `u`, `v`), declared function
/// symbols chain through it and the antiderivative symbols differentiate to
/// their coefficient functions; every other atom is treated as independent.
pub fn diff(e: &Expr, v: &Indeterminate) -> Result<Expr, ExprError> {
    Ok(lift(&diff_canon(&lower(e)?, v)))
}

pub(crate) fn diff_canon(c: &Canon, v: &Indeterminate) -> Canon {
    let argvar = match v {
        Indeterminate::Indep(IndepVar::T) => Some(ArgVar::T),
        Indeterminate::Indep(IndepVar::X) => Some(ArgVar::X),
        Indeterminate::Jet { dep: Dep::U, dt: 0, dx: 0 } => Some(ArgVar::U),
        Indeterminate::Jet { dep: Dep::V, dt: 0, dx: 0 } => Some(ArgVar::V),
        _ => None,
    };
    c.derive(&|a: &Indeterminate| {
        if let Some(av) = argvar {
            formal_diff_atom(a, av)
        } else if a == v {
            Some(Canon::one())
        } else {
            None
        }
    })
}

/// Substitution bindings: atoms map to replacement expressions; binding a
/// function symbol by name rewrites all of its derivative atoms by formally
/// differentiating the replacement.
#[derive(Default)]
pub struct Bindings {
    atoms: BTreeMap<Indeterminate, Expr>,
    funcs: BTreeMap<String, Expr>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn atom(mut self, a: Indeterminate, e: Expr) -> Self {
        self.atoms.insert(a, e);
        self
    }

    pub fn func(mut self, name: &str, e: Expr) -> Self {
        self.funcs.insert(name.to_string(), e);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.funcs.is_empty()
    }
}

/// Simultaneous substitution of all bindings.
pub fn substitute(e: &Expr, bindings: &Bindings) -> Result<Expr, ExprError> {
    Ok(lift(&substitute_canon(&lower(e)?, bindings)?))
}

pub(crate) fn substitute_canon(c: &Canon, bindings: &Bindings) -> Result<Canon, ExprError> {
    let mut atom_map: BTreeMap<Indeterminate, Canon> = BTreeMap::new();
    for (a, e) in &bindings.atoms {
        atom_map.insert(a.clone(), lower(e)?);
    }
    let mut func_map: BTreeMap<&str, Canon> = BTreeMap::new();
    for (name, e) in &bindings.funcs {
        func_map.insert(name, lower(e)?);
    }
    c.substitute(&|a: &Indeterminate| {
        if let Some(r) = atom_map.get(a) {
            return Some(r.clone());
        }
        if let Indeterminate::Func { name, args, index } = a {
            if let Some(base) = func_map.get(name.as_str()) {
                let mut out = base.clone();
                for (slot, reps) in index.iter().enumerate() {
                    for _ in 0..*reps {
                        out = formal_diff(&out, args[slot]);
                    }
                }
                return Some(out);
            }
        }
        None
    })
}

/// Collect an expression as a polynomial in `vars`: returns the distinct
/// exponent vectors with their coefficients, descending lexicographically.
/// Errors if any `vars` atom occurs in a denominator or inside `exp(·)`.
pub fn collect(e: &Expr, vars: &[Indeterminate]) -> Result<Vec<(Vec<u32>, Expr)>, ExprError> {
    let c = lower(e)?;
    let offending = |p: &poly::Poly| -> Option<Indeterminate> {
        let mut hit = None;
        p.for_each_atom(&mut |a| {
            if hit.is_none() && vars.contains(a) {
                hit = Some(a.clone());
            }
        });
        hit
    };
    if let Some(a) = offending(c.den()) {
        return Err(ExprError::NonPolynomial { var: a.to_string() });
    }
    for (m, _) in &c.num().terms {
        if let Some(q) = &m.exparg {
            let mut hit = None;
            q.for_each_atom(&mut |a| {
                if hit.is_none() && vars.contains(a) {
                    hit = Some(a.clone());
                }
            });
            if let Some(a) = hit {
                return Err(ExprError::NonPolynomial { var: a.to_string() });
            }
        }
    }
    let mut groups: BTreeMap<Vec<u32>, poly::Poly> = BTreeMap::new();
    for (m, c0) in &c.num().terms {
        let mut key = vec![0u32; vars.len()];
        let mut rest = m.clone();
        for (i, v) in vars.iter().enumerate() {
            if let Some(e) = rest.vars.remove(v) {
                key[i] = e;
            }
        }
        groups.entry(key).or_insert_with(poly::Poly::zero).add_term(rest, c0.clone());
    }
    let den = c.den().clone();
    let mut out = Vec::with_capacity(groups.len());
    for (key, num) in groups.into_iter().rev() {
        let coeff = Canon::make(num, den.clone())?;
        out.push((key, lift(&coeff)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Expr {
        parse(src, &Context::new()).unwrap()
    }

    #[test]
    fn lower_lift_roundtrip_is_stable() {
        for src in ["u_x^2*d + k*u_x + u_t", "(u + 1)/(u - 1)", "exp(2*x)*u - 3/4"] {
            let e = p(src);
            let c = lower(&e).unwrap();
            let lifted = lift(&c);
            assert_eq!(lower(&lifted).unwrap(), c, "unstable lift for `{src}`");
        }
    }

    #[test]
    fn equal_detects_algebraic_identities() {
        assert!(equal(&p("(u + 1)*(u - 1)"), &p("u^2 - 1")).unwrap());
        assert!(equal(&p("exp(x)*exp(t)"), &p("exp(x + t)")).unwrap());
        assert!(equal(&p("(u^2 - 1)/(u - 1)"), &p("u + 1")).unwrap());
        assert!(!equal(&p("u + 1"), &p("u - 1")).unwrap());
    }

    #[test]
    fn diff_chains_through_declared_symbols() {
        let u = Indeterminate::jet(Dep::U, 0, 0);
        // ∂/∂u of Dint is d(u), of d is d_u, of u_x is 0
        assert!(equal(&diff(&p("Dint"), &u).unwrap(), &p("d")).unwrap());
        assert!(equal(&diff(&p("d*u_x"), &u).unwrap(), &p("d_u*u_x")).unwrap());
        assert!(diff(&p("u_x"), &u).unwrap().is_zero_literal());
        // quotient rule: ∂/∂u (1/u) = -1/u^2
        assert!(equal(&diff(&p("1/u"), &u).unwrap(), &p("-1/u^2")).unwrap());
        // jets are independent coordinates: ∂u_xx/∂u_x = 0, ∂u_x/∂u_x = 1
        let ux = Indeterminate::jet(Dep::U, 0, 1);
        assert!(diff(&p("u_xx"), &ux).unwrap().is_zero_literal());
        assert!(equal(&diff(&p("d*u_x^2"), &ux).unwrap(), &p("2*d*u_x")).unwrap());
    }

    #[test]
    fn substitute_replaces_funcsym_with_derivatives() {
        // bind d(u) := u^2, so d_u must become 2u
        let b = Bindings::new().func("d", p("u^2"));
        let got = substitute(&p("d_u*u_x + d"), &b).unwrap();
        assert!(equal(&got, &p("2*u*u_x + u^2")).unwrap());
    }

    #[test]
    fn substitute_is_simultaneous() {
        let u = Indeterminate::jet(Dep::U, 0, 0);
        let x = Indeterminate::x();
        let b = Bindings::new()
            .atom(u.clone(), Expr::Atom(x.clone()))
            .atom(x, Expr::Atom(u));
        let got = substitute(&p("u^2 - x"), &b).unwrap();
        assert!(equal(&got, &p("x^2 - u")).unwrap());
    }

    #[test]
    fn collect_groups_by_exponent_vector() {
        let ut = Indeterminate::jet(Dep::U, 1, 0);
        let ux = Indeterminate::jet(Dep::U, 0, 1);
        let e = p("u_t*u_x^2*d + 2*u_t*u_x^2 - k*u_x + 7");
        let groups = collect(&e, &[ut.clone(), ux.clone()]).unwrap();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[0].0, vec![1, 2]);
        assert!(equal(&groups[0].1, &p("d + 2")).unwrap());
        assert_eq!(groups[1].0, vec![0, 1]);
        assert!(equal(&groups[1].1, &p("-k")).unwrap());
        assert_eq!(groups[2].0, vec![0, 0]);
        assert!(equal(&groups[2].1, &p("7")).unwrap());
        // u_t under exp(·) is not polynomial
        assert!(matches!(
            collect(&p("exp(u_t)"), &[ut]),
            Err(ExprError::NonPolynomial { .. })
        ));
        // u_x in a denominator is not polynomial
        assert!(matches!(
            collect(&p("1/u_x"), &[ux]),
            Err(ExprError::NonPolynomial { .. })
        ));
    }
}
