//! Canonical rational form: a gcd-reduced quotient of two polynomials with
//! a deterministically scaled denominator.  Structural equality of `Canon`
//! values is the engine's notion of expression equality, and a zero numerator
//! is its exact zero test.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, One, ToPrimitive, Zero};

use super::atom::Indeterminate;
use super::poly::{content, div_exact, gcd_poly, rat_gcd, Mono, Poly, Rat};
use super::ExprError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Canon {
    num: Poly,
    den: Poly,
}

/// Resolver for substitution: `None` leaves the atom untouched.
pub(crate) type Subst<'a> = dyn Fn(&Indeterminate) -> Option<Canon> + 'a;

/// Derivation rule: derivative of a single atom; `None` means zero.
pub(crate) type DeriveRule<'a> = dyn Fn(&Indeterminate) -> Option<Canon> + 'a;

impl Canon {
    pub fn zero() -> Self {
        Canon { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Canon { num: Poly::one(), den: Poly::one() }
    }

    pub fn from_rat(r: Rat) -> Self {
        Canon { num: Poly::from_rat(r), den: Poly::one() }
    }

    #[cfg(test)]
    pub fn from_int(n: i64) -> Self {
        Canon::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn from_atom(a: Indeterminate) -> Self {
        Canon { num: Poly::from_atom(a), den: Poly::one() }
    }

    pub(crate) fn num(&self) -> &Poly {
        &self.num
    }

    pub(crate) fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    #[cfg(test)]
    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// `Some(r)` when the value is the rational constant `r`.
    #[cfg(test)]
    pub fn as_rational(&self) -> Option<Rat> {
        if !self.den.is_one() {
            return None;
        }
        self.num.as_rational()
    }

    /// Normalize a raw quotient.
    pub(crate) fn make(num: Poly, den: Poly) -> Result<Canon, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Canon::zero());
        }
        let mut num = num;
        let mut den = den;

        // A single-term denominator with an exponential factor folds into the
        // numerator as exp(-q): denominators stay exponential-free whenever
        // they are monomials.
        if den.terms.len() == 1 {
            let (m, _) = den.terms.iter().next().unwrap();
            if let Some(q) = m.exparg.clone() {
                num = num.mul_exp(&q.neg());
                den = Poly {
                    terms: den
                        .terms
                        .iter()
                        .map(|(dm, dc)| (Mono { vars: dm.vars.clone(), exparg: None }, dc.clone()))
                        .collect(),
                };
            }
        }

        // Common monomial factor.
        let gn = num.mono_content();
        let gd = den.mono_content();
        let g = mono_gcd(&gn, &gd);
        if !g.is_unit() {
            num = num.div_mono(&g);
            den = den.div_mono(&g);
        }

        // Polynomial gcd in the free model (exponentials on one rational ray
        // become powers of one synthetic atom; the map back is a ring
        // homomorphism, so the reduction is always sound).
        if !den_constant(&den) {
            let table = exp_table(&[&num, &den]);
            let fnum = to_free(&num, &table);
            let fden = to_free(&den, &table);
            let g = gcd_poly(&fnum, &fden);
            if !g.is_one() {
                let qn = div_exact(&fnum, &g).expect("gcd divides numerator");
                let qd = div_exact(&fden, &g).expect("gcd divides denominator");
                num = from_free(&qn, &table);
                den = from_free(&qd, &table);
            }
        }

        // Deterministic scaling: denominator's leading coefficient becomes 1.
        let lc = den.leading().map(|(_, c)| c.clone()).expect("nonzero denominator");
        if !lc.is_one() {
            let r = lc.recip();
            num = num.mul_rat(&r);
            den = den.mul_rat(&r);
        }
        Ok(Canon { num, den })
    }

    pub(crate) fn from_poly(p: Poly) -> Canon {
        Canon { num: p, den: Poly::one() }
    }

    pub fn add(&self, other: &Canon) -> Canon {
        if self.den == other.den {
            return Canon::make(self.num.add(&other.num), self.den.clone())
                .expect("denominator unchanged");
        }
        Canon::make(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
        .expect("product of nonzero denominators")
    }

    pub fn neg(&self) -> Canon {
        Canon { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Canon) -> Canon {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Canon) -> Canon {
        Canon::make(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("product of nonzero denominators")
    }

    pub fn mul_rat(&self, r: &Rat) -> Canon {
        if r.is_zero() {
            return Canon::zero();
        }
        Canon::make(self.num.mul_rat(r), self.den.clone()).expect("denominator unchanged")
    }

    pub fn div(&self, other: &Canon) -> Result<Canon, ExprError> {
        Canon::make(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<Canon, ExprError> {
        Canon::make(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, e: i64) -> Result<Canon, ExprError> {
        if e == 0 {
            return Ok(Canon::one());
        }
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut out = Canon::one();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// `exp` of a canonical argument; merges with neighbours by construction.
    pub fn exp_of(arg: Canon) -> Canon {
        if arg.is_zero() {
            return Canon::one();
        }
        let m = Mono { vars: Default::default(), exparg: Some(Box::new(arg)) };
        Canon { num: Poly::from_term(m, Rat::one()), den: Poly::one() }
    }

    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Indeterminate)) {
        self.num.for_each_atom(f);
        self.den.for_each_atom(f);
    }

    pub fn atom_set(&self) -> BTreeSet<Indeterminate> {
        let mut set = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            set.insert(a.clone());
        });
        set
    }

    /// Simultaneous substitution; atoms mapped to `None` stay themselves.
    /// Substitution descends into exponential arguments.
    pub fn substitute(&self, resolver: &Subst) -> Result<Canon, ExprError> {
        let n = subst_poly(&self.num, resolver)?;
        let d = subst_poly(&self.den, resolver)?;
        n.div(&d)
    }

    /// Apply a derivation defined by its action on atoms (product, quotient
    /// and chain rules for exponentials are supplied here).
    pub fn derive(&self, rule: &DeriveRule) -> Canon {
        let dn = derive_poly(&self.num, rule);
        if self.den.is_one() {
            return dn;
        }
        let dd = derive_poly(&self.den, rule);
        let den_c = Canon::from_poly(self.den.clone());
        let num_c = Canon::from_poly(self.num.clone());
        // (n/d)' = (n'·d - n·d') / d²
        dn.mul(&den_c)
            .sub(&num_c.mul(&dd))
            .div(&den_c.mul(&den_c))
            .expect("nonzero denominator")
    }
}

fn mono_gcd(a: &Mono, b: &Mono) -> Mono {
    let vars = a
        .vars
        .iter()
        .filter_map(|(at, e)| {
            let oe = b.vars.get(at).copied().unwrap_or(0);
            let m = (*e).min(oe);
            (m > 0).then(|| (at.clone(), m))
        })
        .collect();
    Mono { vars, exparg: None }
}

fn den_constant(den: &Poly) -> bool {
    den.as_rational().is_some()
}

/// Translation table between exponential factors and synthetic atoms.
///
/// Arguments on a common rational ray share one atom: with the base chosen
/// so that each argument is a positive integer multiple `n·base`, the factor
/// `exp(arg)` maps to `#ei^n`, and powers of one exponential stay powers of
/// one variable — which is what lets the gcd cancel them.
struct ExpTable {
    bases: Vec<Canon>,
    /// argument -> (index into `bases`, multiple of that base)
    index: BTreeMap<Canon, (usize, u32)>,
}

/// `q = s·dir` with `s > 0` rational and `dir` the content-one representative
/// of the signed direction of `q`.
fn split_ray(q: &Canon) -> (Rat, Canon) {
    let s = content(q.num());
    let dir = q.mul_rat(&s.recip());
    (s, dir)
}

fn exp_table(polys: &[&Poly]) -> ExpTable {
    let mut args: BTreeSet<Canon> = BTreeSet::new();
    for p in polys {
        for m in p.terms.keys() {
            if let Some(q) = &m.exparg {
                args.insert((**q).clone());
            }
        }
    }
    let mut rays: Vec<(Canon, Vec<(Canon, Rat)>)> = Vec::new();
    for q in args {
        let (s, dir) = split_ray(&q);
        match rays.iter_mut().find(|(d, _)| *d == dir) {
            Some((_, members)) => members.push((q, s)),
            None => rays.push((dir, vec![(q, s)])),
        }
    }
    let mut bases = Vec::new();
    let mut index = BTreeMap::new();
    for (i, (dir, members)) in rays.into_iter().enumerate() {
        // every member scale is an integer multiple of the scales' gcd
        let g = members.iter().fold(Rat::zero(), |acc, (_, s)| rat_gcd(&acc, s));
        bases.push(dir.mul_rat(&g));
        for (q, s) in members {
            let n = (s / &g).to_integer().to_u32().expect("ray multiple fits in u32");
            index.insert(q, (i, n));
        }
    }
    ExpTable { bases, index }
}

fn synthetic(i: usize) -> Indeterminate {
    // '#' cannot appear in parsed identifiers, so these can never collide
    // with user parameters.
    Indeterminate::Param(format!("#e{i}"))
}

fn to_free(p: &Poly, table: &ExpTable) -> Poly {
    if table.index.is_empty() {
        return p.clone();
    }
    Poly {
        terms: p
            .terms
            .iter()
            .map(|(m, c)| {
                let mut vars = m.vars.clone();
                if let Some(q) = &m.exparg {
                    let (i, n) = table.index[&**q];
                    vars.insert(synthetic(i), n);
                }
                (Mono { vars, exparg: None }, c.clone())
            })
            .collect(),
    }
}

fn from_free(p: &Poly, table: &ExpTable) -> Poly {
    if table.index.is_empty() {
        return p.clone();
    }
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        let mut vars = BTreeMap::new();
        let mut arg = Canon::zero();
        for (a, e) in &m.vars {
            if let Indeterminate::Param(name) = a {
                if let Some(rest) = name.strip_prefix("#e") {
                    let i: usize = rest.parse().expect("synthetic atom index");
                    arg = arg.add(&table.bases[i].mul_rat(&super::poly::rat_int(*e as i64)));
                    continue;
                }
            }
            vars.insert(a.clone(), *e);
        }
        let exparg = if arg.is_zero() { None } else { Some(Box::new(arg)) };
        out.add_term(Mono { vars, exparg }, c.clone());
    }
    out
}

fn subst_poly(p: &Poly, resolver: &Subst) -> Result<Canon, ExprError> {
    let mut acc = Canon::zero();
    for (m, c) in &p.terms {
        let mut term = Canon::from_rat(c.clone());
        for (a, e) in &m.vars {
            let base = resolver(a).unwrap_or_else(|| Canon::from_atom(a.clone()));
            term = term.mul(&base.pow(*e as i64)?);
        }
        if let Some(q) = &m.exparg {
            term = term.mul(&Canon::exp_of(q.substitute(resolver)?));
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

fn derive_poly(p: &Poly, rule: &DeriveRule) -> Canon {
    let mut acc = Canon::zero();
    for (m, c) in &p.terms {
        for (a, e) in &m.vars {
            let da = match rule(a) {
                Some(d) if !d.is_zero() => d,
                _ => continue,
            };
            let mut vars = m.vars.clone();
            if *e == 1 {
                vars.remove(a);
            } else {
                vars.insert(a.clone(), e - 1);
            }
            let rest = Poly::from_term(
                Mono { vars, exparg: m.exparg.clone() },
                c.clone() * Rat::from_integer(BigInt::from(*e)),
            );
            acc = acc.add(&Canon::from_poly(rest).mul(&da));
        }
        if let Some(q) = &m.exparg {
            let dq = q.derive(rule);
            if !dq.is_zero() {
                let whole = Poly::from_term(m.clone(), c.clone());
                acc = acc.add(&Canon::from_poly(whole).mul(&dq));
            }
        }
    }
    acc
}
