//! Sparse multivariate polynomials over exact rationals.
//!
//! Monomials map atoms to positive integer exponents and may carry at most
//! one exponential factor `exp(Q)`; multiplying monomials adds the arguments
//! of their exponential factors, which is what makes `exp(a)*exp(b)` and
//! `exp(a+b)` identical by construction.
//!
//! The gcd routines at the bottom operate on the "free model": polynomials
//! whose monomials carry no exponential factor (callers temporarily replace
//! each distinct exponential by a synthetic atom).  Gcd is a subresultant-free
//! primitive PRS — adequate for the small, low-degree polynomials this engine
//! produces.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::atom::Indeterminate;
use super::canon::Canon;

pub(crate) type Rat = BigRational;

pub(crate) fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// A monomial: product of atom powers times an optional exponential factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Mono {
    pub vars: BTreeMap<Indeterminate, u32>,
    pub exparg: Option<Box<Canon>>,
}

impl Mono {
    pub fn unit() -> Self {
        Mono::default()
    }

    pub fn from_var(a: Indeterminate, e: u32) -> Self {
        let mut vars = BTreeMap::new();
        if e > 0 {
            vars.insert(a, e);
        }
        Mono { vars, exparg: None }
    }

    pub fn is_unit(&self) -> bool {
        self.vars.is_empty() && self.exparg.is_none()
    }

    pub fn total_deg(&self) -> u64 {
        self.vars.values().map(|e| *e as u64).sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut vars = self.vars.clone();
        for (a, e) in &other.vars {
            *vars.entry(a.clone()).or_insert(0) += e;
        }
        let exparg = combine_expargs(self.exparg.as_deref(), other.exparg.as_deref());
        Mono { vars, exparg }
    }

    /// Division within the free model (no exponential factors); `None` when
    /// some exponent would go negative.
    pub fn try_div_vars(&self, other: &Mono) -> Option<Mono> {
        debug_assert!(self.exparg.is_none() && other.exparg.is_none());
        let mut vars = self.vars.clone();
        for (a, e) in &other.vars {
            match vars.get_mut(a) {
                Some(se) if *se >= *e => {
                    *se -= e;
                    if *se == 0 {
                        vars.remove(a);
                    }
                }
                _ => return None,
            }
        }
        Some(Mono { vars, exparg: None })
    }

    /// Graded-lex monomial order (total degree, then exponent-vector lex over
    /// the atom order, exponential argument as a final deterministic
    /// tie-break).  Compatible with monomial multiplication on the free
    /// model, which the division routines rely on.
    pub fn cmp_grlex(&self, other: &Mono) -> Ordering {
        match self.total_deg().cmp(&other.total_deg()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut sit = self.vars.iter().peekable();
        let mut oit = other.vars.iter().peekable();
        loop {
            match (sit.peek(), oit.peek()) {
                (None, None) => break,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((sa, se)), Some((oa, oe))) => match sa.cmp(oa) {
                    // the smaller atom is the more significant position;
                    // possessing it at all ranks higher
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if se != oe {
                            return se.cmp(oe);
                        }
                        sit.next();
                        oit.next();
                    }
                },
            }
        }
        self.exparg.cmp(&other.exparg)
    }
}

fn combine_expargs(a: Option<&Canon>, b: Option<&Canon>) -> Option<Box<Canon>> {
    match (a, b) {
        (None, None) => None,
        (Some(q), None) | (None, Some(q)) => Some(Box::new(q.clone())),
        (Some(p), Some(q)) => {
            let s = p.add(q);
            if s.is_zero() {
                None
            } else {
                Some(Box::new(s))
            }
        }
    }
}

/// Sparse polynomial; invariant: no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(Mono::unit(), r);
        }
        Poly { terms }
    }

    pub fn from_atom(a: Indeterminate) -> Self {
        Poly::from_term(Mono::from_var(a, 1), Rat::one())
    }

    pub fn from_term(m: Mono, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }

    /// `Some(r)` when the polynomial is the constant `r` (including zero).
    pub fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                if m.is_unit() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn mul_rat(&self, r: &Rat) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.clone() * r.clone())).collect(),
        }
    }

    #[cfg(test)]
    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Leading term under the graded-lex monomial order.
    pub fn leading(&self) -> Option<(&Mono, &Rat)> {
        self.terms
            .iter()
            .max_by(|(m1, _), (m2, _)| m1.cmp_grlex(m2))
    }

    /// Visit every atom, including atoms inside exponential arguments.
    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Indeterminate)) {
        for m in self.terms.keys() {
            for a in m.vars.keys() {
                f(a);
            }
            if let Some(q) = &m.exparg {
                q.for_each_atom(f);
            }
        }
    }

    /// Greatest monomial (in the divisibility sense) dividing every term.
    /// Exponential factors are ignored.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => m,
            None => return Mono::unit(),
        };
        let mut vars = first.vars.clone();
        for m in it {
            vars = vars
                .into_iter()
                .filter_map(|(a, e)| {
                    let oe = m.vars.get(&a).copied().unwrap_or(0);
                    let min = e.min(oe);
                    (min > 0).then_some((a, min))
                })
                .collect();
            if vars.is_empty() {
                break;
            }
        }
        Mono { vars, exparg: None }
    }

    /// Divide every term by a monomial known to divide the term's variable
    /// part (exponential factors are untouched).
    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(tm, c)| {
                    let mut vars = tm.vars.clone();
                    for (a, e) in &m.vars {
                        let se = vars.get_mut(a).expect("monomial divides");
                        assert!(*se >= *e);
                        *se -= e;
                        if *se == 0 {
                            vars.remove(a);
                        }
                    }
                    (Mono { vars, exparg: tm.exparg.clone() }, c.clone())
                })
                .collect(),
        }
    }

    /// Multiply every term's exponential argument by `exp(q)`.
    pub fn mul_exp(&self, q: &Canon) -> Poly {
        if q.is_zero() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let exparg = combine_expargs(m.exparg.as_deref(), Some(q));
                    (Mono { vars: m.vars.clone(), exparg }, c.clone())
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Free-model gcd machinery (no exponential factors).
// ---------------------------------------------------------------------------

pub(crate) fn rat_gcd(a: &Rat, b: &Rat) -> Rat {
    // gcd(p1/q1, p2/q2) = gcd(p1, p2) / lcm(q1, q2): the largest rational
    // dividing both with integer quotients.
    let p = a.numer().gcd(b.numer());
    let q = a.denom().lcm(b.denom());
    Rat::new(p, q)
}

/// Rational content: positive rational `c` with `self / c` integer-primitive.
pub(crate) fn content(p: &Poly) -> Rat {
    let mut c = Rat::zero();
    for coeff in p.terms.values() {
        if c.is_zero() {
            c = coeff.abs();
        } else {
            c = rat_gcd(&c, &coeff.abs());
        }
        if c.is_one() {
            break;
        }
    }
    if c.is_zero() {
        Rat::one()
    } else {
        c
    }
}

/// Scale to integer-primitive form with positive leading coefficient.
fn primitive(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let mut c = content(p);
    if p.leading().map(|(_, lc)| lc.is_negative()).unwrap_or(false) {
        c = -c;
    }
    p.mul_rat(&c.recip())
}

fn max_atom(polys: &[&Poly]) -> Option<Indeterminate> {
    let mut best: Option<Indeterminate> = None;
    for p in polys {
        for m in p.terms.keys() {
            debug_assert!(m.exparg.is_none(), "gcd operates on the free model");
            if let Some(a) = m.vars.keys().next_back() {
                if best.as_ref().map(|b| a > b).unwrap_or(true) {
                    best = Some(a.clone());
                }
            }
        }
    }
    best
}

/// Dense-by-degree view of `p` as a univariate polynomial in `v` with
/// polynomial coefficients free of `v`.
fn as_univar(p: &Poly, v: &Indeterminate) -> Vec<Poly> {
    let deg = p
        .terms
        .keys()
        .map(|m| m.vars.get(v).copied().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let mut coeffs = vec![Poly::zero(); deg as usize + 1];
    for (m, c) in &p.terms {
        let e = m.vars.get(v).copied().unwrap_or(0);
        let mut vars = m.vars.clone();
        vars.remove(v);
        coeffs[e as usize].add_term(Mono { vars, exparg: None }, c.clone());
    }
    coeffs
}

fn from_univar(coeffs: &[Poly], v: &Indeterminate) -> Poly {
    let mut out = Poly::zero();
    for (e, c) in coeffs.iter().enumerate() {
        let vm = Mono::from_var(v.clone(), e as u32);
        for (m, r) in &c.terms {
            out.add_term(m.mul(&vm), r.clone());
        }
    }
    out
}

fn univar_deg(coeffs: &[Poly]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

/// Content of a univariate view: gcd of the coefficient polynomials.
fn univar_content(coeffs: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        g = if g.is_zero() { primitive(c) } else { gcd_poly(&g, c) };
        if g.is_one() {
            break;
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

fn univar_div_exact(coeffs: &[Poly], d: &Poly) -> Vec<Poly> {
    coeffs
        .iter()
        .map(|c| {
            if c.is_zero() {
                Poly::zero()
            } else {
                div_exact(c, d).expect("content divides")
            }
        })
        .collect()
}

/// Pseudo-remainder of `f` by `g` (both univariate views in the same
/// variable, `g` nonzero).
fn prem(f: &[Poly], g: &[Poly]) -> Vec<Poly> {
    let dg = univar_deg(g).expect("nonzero divisor");
    let lg = g[dg].clone();
    let mut r: Vec<Poly> = f.to_vec();
    loop {
        let dr = match univar_deg(&r) {
            Some(d) if d >= dg => d,
            _ => return r,
        };
        let lr = r[dr].clone();
        let shift = dr - dg;
        // r := lg*r - lr * g * v^shift
        let mut next = vec![Poly::zero(); r.len()];
        for (i, c) in r.iter().enumerate() {
            next[i] = c.mul(&lg);
        }
        for (j, c) in g.iter().enumerate() {
            if !c.is_zero() {
                next[j + shift] = next[j + shift].sub(&c.mul(&lr));
            }
        }
        r = next;
    }
}

/// Multivariate gcd over the rationals; result is integer-primitive with a
/// positive leading coefficient.  Inputs must be free of exponential factors.
pub(crate) fn gcd_poly(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return primitive(b);
    }
    if b.is_zero() {
        return primitive(a);
    }
    let v = match max_atom(&[a, b]) {
        Some(v) => v,
        None => return Poly::one(), // both rational constants
    };
    let fa = as_univar(a, &v);
    let fb = as_univar(b, &v);
    let ca = univar_content(&fa);
    let cb = univar_content(&fb);
    let c = gcd_poly(&ca, &cb);
    let mut f = univar_div_exact(&fa, &ca);
    let mut g = univar_div_exact(&fb, &cb);
    if univar_deg(&f) < univar_deg(&g) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        match univar_deg(&g) {
            None => break,
            Some(0) => {
                // primitive parts coprime in v
                return c;
            }
            Some(_) => {
                let r = prem(&f, &g);
                f = g;
                let rc = univar_content(&r);
                g = univar_div_exact(&r, &rc);
            }
        }
    }
    let pf = from_univar(&f, &v);
    primitive(&pf).mul(&c)
}

/// Exact multivariate division; `None` when `b` does not divide `a`.
/// Inputs must be free of exponential factors.
pub(crate) fn div_exact(a: &Poly, b: &Poly) -> Option<Poly> {
    if a.is_zero() {
        return Some(Poly::zero());
    }
    let (ltb_m, ltb_c) = b.leading()?;
    let mut rem = a.clone();
    let mut q = Poly::zero();
    while !rem.is_zero() {
        let (ltr_m, ltr_c) = {
            let (m, c) = rem.leading().unwrap();
            (m.clone(), c.clone())
        };
        let qm = ltr_m.try_div_vars(ltb_m)?;
        let qc = ltr_c / ltb_c.clone();
        let qt = Poly::from_term(qm, qc);
        rem = rem.sub(&b.mul(&qt));
        q = q.add(&qt);
    }
    Some(q)
}
