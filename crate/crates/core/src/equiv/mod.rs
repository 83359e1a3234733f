//! The point-symmetry group of the model class:
//!
//! ```text
//! t̃ = t_scale·t + t_shift
//! x̃ = x_scale·x + drift·t + x_shift
//! ũ = u_scale·u + u_shift        (all three scales nonzero)
//! ```
//!
//! acting on coefficients by `d ↦ x_scale²·d/t_scale`,
//! `k ↦ (x_scale·k − drift)/t_scale`, and on conserved vectors by the
//! push-forward `F ↦ F/x_scale`, `G ↦ (drift·F + x_scale·G)/(t_scale·x_scale)`
//! (the flux absorbs the density carried along by the drift).

use num::{One, Zero};

use crate::error::EngineError;
use crate::expr::{
    lift, lower, AntiKind, ArgVar, Canon, Dep, Expr, Indeterminate, Rat,
};
use crate::jet::{DifferentialSystem, PDEModel, PotentialLevel};
use crate::laws::ConservedVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivTransform {
    pub t_scale: Rat,
    pub x_scale: Rat,
    pub u_scale: Rat,
    pub t_shift: Rat,
    pub x_shift: Rat,
    pub u_shift: Rat,
    /// Coefficient of `t` in the new `x`: a drift of the spatial frame.
    pub drift: Rat,
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

impl EquivTransform {
    pub fn new(
        t_scale: Rat,
        x_scale: Rat,
        u_scale: Rat,
        t_shift: Rat,
        x_shift: Rat,
        u_shift: Rat,
        drift: Rat,
    ) -> Result<Self, EngineError> {
        if t_scale.is_zero() || x_scale.is_zero() || u_scale.is_zero() {
            return Err(EngineError::SingularTransform);
        }
        Ok(EquivTransform { t_scale, x_scale, u_scale, t_shift, x_shift, u_shift, drift })
    }

    pub fn identity() -> Self {
        EquivTransform {
            t_scale: rat(1),
            x_scale: rat(1),
            u_scale: rat(1),
            t_shift: rat(0),
            x_shift: rat(0),
            u_shift: rat(0),
            drift: rat(0),
        }
    }

    /// Forward point map.
    pub fn apply_point(&self, t: &Rat, x: &Rat, u: &Rat) -> (Rat, Rat, Rat) {
        (
            &self.t_scale * t + &self.t_shift,
            &self.x_scale * x + &self.drift * t + &self.x_shift,
            &self.u_scale * u + &self.u_shift,
        )
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &EquivTransform) -> EquivTransform {
        EquivTransform {
            t_scale: &self.t_scale * &first.t_scale,
            x_scale: &self.x_scale * &first.x_scale,
            u_scale: &self.u_scale * &first.u_scale,
            t_shift: &self.t_scale * &first.t_shift + &self.t_shift,
            x_shift: &self.x_scale * &first.x_shift
                + &self.drift * &first.t_shift
                + &self.x_shift,
            u_shift: &self.u_scale * &first.u_shift + &self.u_shift,
            drift: &self.x_scale * &first.drift + &self.drift * &first.t_scale,
        }
    }

    pub fn inverse(&self) -> EquivTransform {
        let ts = self.t_scale.recip();
        let xs = self.x_scale.recip();
        let us = self.u_scale.recip();
        EquivTransform {
            t_shift: -(&ts * &self.t_shift),
            x_shift: &self.drift * &self.t_shift / (&self.t_scale * &self.x_scale)
                - &xs * &self.x_shift,
            u_shift: -(&us * &self.u_shift),
            drift: -(&self.drift / (&self.t_scale * &self.x_scale)),
            t_scale: ts,
            x_scale: xs,
            u_scale: us,
        }
    }
}

fn binom(n: u32, k: u32) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc = acc * rat((n - i) as i64) / rat((i + 1) as i64);
    }
    acc
}

/// Binomial expansion of `(t_scale·D_T + drift·D_X)^a D_X^b` applied to a
/// jet-like atom family, landing on indices `(i, a+b−i)`.
fn mixed_derivative_sum(
    tr: &EquivTransform,
    a: u32,
    b: u32,
    make: &dyn Fn(u32, u32) -> Indeterminate,
) -> Canon {
    let mut acc = Canon::zero();
    for i in 0..=a {
        let coeff = binom(a, i)
            * num::pow::pow(tr.t_scale.clone(), i as usize)
            * num::pow::pow(tr.drift.clone(), (a - i) as usize);
        if coeff.is_zero() {
            continue;
        }
        acc = acc.add(&Canon::from_atom(make(i, a + b - i)).mul_rat(&coeff));
    }
    acc.mul_rat(&num::pow::pow(tr.x_scale.clone(), b as usize))
}

/// Express a source atom in the transformed coordinates and symbols.
fn atom_image(a: &Indeterminate, tr: &EquivTransform) -> Result<Option<Canon>, EngineError> {
    let inv = tr.inverse();
    let img = match a {
        Indeterminate::Param(_) => return Ok(None),
        Indeterminate::Indep(iv) => {
            // old coordinates via the inverse point map of the new ones
            let t = Canon::from_atom(Indeterminate::t());
            let x = Canon::from_atom(Indeterminate::x());
            match iv {
                crate::expr::IndepVar::T => {
                    t.mul_rat(&inv.t_scale).add(&Canon::from_rat(inv.t_shift.clone()))
                }
                crate::expr::IndepVar::X => x
                    .mul_rat(&inv.x_scale)
                    .add(&t.mul_rat(&inv.drift))
                    .add(&Canon::from_rat(inv.x_shift.clone())),
            }
        }
        Indeterminate::Jet { dep, dt: 0, dx: 0 } => {
            let atom = Canon::from_atom(a.clone());
            match dep {
                Dep::U => atom
                    .sub(&Canon::from_rat(tr.u_shift.clone()))
                    .mul_rat(&tr.u_scale.recip()),
                // potentials are invariant: the push-forward keeps F dx − G dt
                Dep::V | Dep::W => atom,
            }
        }
        Indeterminate::Jet { dep, dt, dx } => {
            let dep = *dep;
            let sum = mixed_derivative_sum(tr, *dt, *dx, &|i, j| Indeterminate::jet(dep, i, j));
            match dep {
                Dep::U => sum.mul_rat(&tr.u_scale.recip()),
                Dep::V | Dep::W => sum,
            }
        }
        Indeterminate::Anti(AntiKind::DInt) => Canon::from_atom(a.clone())
            .mul_rat(&(&tr.t_scale / (&tr.x_scale * &tr.x_scale * &tr.u_scale))),
        Indeterminate::Anti(AntiKind::KInt) => {
            // Kint = (t_scale·K̃int + drift·ũ) / (x_scale·u_scale), up to the
            // integration constant, which no convention can make compose
            // strictly and which a conservation law never depends on
            let ku = Canon::from_atom(Indeterminate::u()).mul_rat(&tr.drift);
            Canon::from_atom(a.clone())
                .mul_rat(&tr.t_scale)
                .add(&ku)
                .mul_rat(&(&tr.x_scale * &tr.u_scale).recip())
        }
        Indeterminate::Func { name, args, index } => {
            if name == "d" {
                // d = t_scale·d̃/x_scale² (u_scale per derivative)
                let n = index[0];
                let scale = &tr.t_scale * num::pow::pow(tr.u_scale.clone(), n as usize)
                    / (&tr.x_scale * &tr.x_scale);
                Canon::from_atom(a.clone()).mul_rat(&scale)
            } else if name == "k" {
                let n = index[0];
                if n == 0 {
                    // k = (t_scale·k̃ + drift)/x_scale
                    Canon::from_atom(a.clone())
                        .mul_rat(&tr.t_scale)
                        .add(&Canon::from_rat(tr.drift.clone()))
                        .mul_rat(&tr.x_scale.recip())
                } else {
                    let scale = &tr.t_scale * num::pow::pow(tr.u_scale.clone(), n as usize)
                        / &tr.x_scale;
                    Canon::from_atom(a.clone()).mul_rat(&scale)
                }
            } else {
                funcsym_image(name, args, index, tr)?
            }
        }
    };
    Ok(Some(img))
}

/// Image of a declared function-symbol derivative atom.  The symbol itself
/// maps to the same symbol in the new coordinates; its derivative indices
/// pick up the Jacobian of the argument change.
fn funcsym_image(
    name: &str,
    args: &[ArgVar],
    index: &[u32],
    tr: &EquivTransform,
) -> Result<Canon, EngineError> {
    let t_slot = args.iter().position(|a| *a == ArgVar::T);
    let x_slot = args.iter().position(|a| *a == ArgVar::X);
    if x_slot.is_some() && t_slot.is_none() && !tr.drift.is_zero() {
        // x̃ mixes t in, so a symbol of x alone does not stay one
        return Err(EngineError::UnsupportedTransform { name: name.to_string() });
    }
    // scale factors for pure per-argument derivatives
    let mut scale = Rat::one();
    for (slot, av) in args.iter().enumerate() {
        let per = match av {
            ArgVar::T => continue, // handled by the mixed sum below
            ArgVar::X => tr.x_scale.clone(),
            ArgVar::U => tr.u_scale.clone(),
            ArgVar::V => Rat::one(),
        };
        scale = scale * num::pow::pow(per, index[slot] as usize);
    }
    let a = t_slot.map(|s| index[s]).unwrap_or(0);
    let mut acc = Canon::zero();
    match (t_slot, x_slot) {
        (Some(ts), Some(xs)) => {
            for i in 0..=a {
                let c = binom(a, i)
                    * num::pow::pow(tr.t_scale.clone(), i as usize)
                    * num::pow::pow(tr.drift.clone(), (a - i) as usize);
                if c.is_zero() {
                    continue;
                }
                let mut idx = index.to_vec();
                idx[ts] = i;
                idx[xs] = index[xs] + (a - i);
                acc = acc.add(&Canon::from_atom(Indeterminate::func(name, args, &idx)).mul_rat(&c));
            }
        }
        _ => {
            let c = num::pow::pow(tr.t_scale.clone(), a as usize);
            acc = Canon::from_atom(Indeterminate::func(name, args, index)).mul_rat(&c);
        }
    }
    Ok(acc.mul_rat(&scale))
}

pub(crate) fn map_canon(c: &Canon, tr: &EquivTransform) -> Result<Canon, EngineError> {
    let err: std::cell::Cell<Option<EngineError>> = std::cell::Cell::new(None);
    let out = c.substitute(&|a: &Indeterminate| match atom_image(a, tr) {
        Ok(img) => img,
        Err(e) => {
            err.set(Some(e));
            None
        }
    });
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(out?)
}

/// Rewrite an expression in the transformed coordinates: every occurrence of
/// an old coordinate, jet, coefficient symbol, or antiderivative is replaced
/// by its expression in the new ones.
pub fn transform_expr(e: &Expr, tr: &EquivTransform) -> Result<Expr, EngineError> {
    Ok(lift(&map_canon(&lower(e)?, tr)?))
}

/// Push a conserved vector forward along the transform.
pub fn transform_conserved_vector(
    cv: &ConservedVector,
    tr: &EquivTransform,
) -> Result<ConservedVector, EngineError> {
    let f = map_canon(&lower(&cv.density)?, tr)?;
    let g = map_canon(&lower(&cv.flux)?, tr)?;
    let density = f.mul_rat(&tr.x_scale.recip());
    let flux = f
        .mul_rat(&tr.drift)
        .add(&g.mul_rat(&tr.x_scale))
        .mul_rat(&(&tr.t_scale * &tr.x_scale).recip());
    Ok(ConservedVector::new(lift(&density), lift(&flux)))
}

/// Transformed model: coefficients, pins and function-symbol relations are
/// all rewritten so the new model describes the image equation.
pub fn transform_model(m: &PDEModel, tr: &EquivTransform) -> Result<PDEModel, EngineError> {
    let mut b = PDEModel::builder();
    for p in m.ctx().params() {
        b = b.param(p)?;
    }
    let mut relations: Vec<(String, Expr)> = Vec::new();
    for f in m.ctx().funcs() {
        if f.name == "d" || f.name == "k" {
            continue;
        }
        b = b.funcsym(&f.name, &f.args)?;
        for rel in &f.relations {
            relations.push((f.name.clone(), transform_expr(rel, tr)?));
        }
    }
    for (name, rel) in relations {
        b = b.relation_expr(&name, rel);
    }
    if let crate::jet::Coefficient::Explicit(d) = m.diffusion() {
        let mapped = transform_expr(&d, tr)?;
        let scale = &tr.x_scale * &tr.x_scale / &tr.t_scale;
        b = b.diffusion_expr(Expr::Rational(scale) * mapped);
    }
    if let crate::jet::Coefficient::Explicit(k) = m.convection() {
        let mapped = transform_expr(&k, tr)?;
        let new = (Expr::Rational(tr.x_scale.clone()) * mapped
            - Expr::Rational(tr.drift.clone()))
            / Expr::Rational(tr.t_scale.clone());
        b = b.convection_expr(new);
    }
    if let Some(p) = m.dint_pin() {
        let scale = &tr.x_scale * &tr.x_scale * &tr.u_scale / &tr.t_scale;
        b = b.diffusion_antiderivative_expr(
            Expr::Rational(scale) * transform_expr(p, tr)?,
        );
    }
    if let Some(p) = m.kint_pin() {
        let scale = &tr.x_scale * &tr.u_scale / &tr.t_scale;
        let shift = &tr.drift / &tr.t_scale;
        b = b.convection_antiderivative_expr(
            Expr::Rational(scale) * transform_expr(p, tr)?
                - Expr::Rational(shift) * Expr::Atom(Indeterminate::u()),
        );
    }
    b.build()
}

/// Transformed system: model plus image potential levels
/// (`ṽ_x̃ = F̃`, `ṽ_t̃ = −G̃` for each level's conserved pair).
pub fn transform_system(
    sys: &DifferentialSystem,
    tr: &EquivTransform,
) -> Result<DifferentialSystem, EngineError> {
    let model = transform_model(sys.model(), tr)?;
    let mut levels = Vec::new();
    for lv in sys.levels() {
        let xf = map_canon(&lower(&lv.x_rhs)?, tr)?;
        let x_rhs = lift(&xf.mul_rat(&tr.x_scale.recip()));
        let t_rhs = match &lv.t_rhs {
            None => None,
            Some(g) => {
                let xg = map_canon(&lower(g)?, tr)?;
                // ṽ_t̃ = (x_scale·(old t-rule) − drift·(old x-rule)) / (t_scale·x_scale)
                Some(lift(
                    &xg.mul_rat(&tr.x_scale)
                        .sub(&xf.mul_rat(&tr.drift))
                        .mul_rat(&(&tr.t_scale * &tr.x_scale).recip()),
                ))
            }
        };
        levels.push(PotentialLevel { dep: lv.dep, x_rhs, t_rhs });
    }
    DifferentialSystem::with_levels(model, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equal, parse, Context, IndepVar};
    use crate::jet::{total_derivative, DEFAULT_CLOSURE_ORDER};
    use crate::laws::verify_conservation_law;
    use proptest::prelude::*;

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Rat::new(n.into(), d.into()))
    }

    fn nonzero_rat() -> impl Strategy<Value = Rat> {
        (prop_oneof![-4i64..=-1, 1i64..=4], 1i64..=3)
            .prop_map(|(n, d)| Rat::new(n.into(), d.into()))
    }

    prop_compose! {
        fn transforms()(
            ts in nonzero_rat(),
            xs in nonzero_rat(),
            us in nonzero_rat(),
            a in small_rat(),
            b in small_rat(),
            c in small_rat(),
            dr in small_rat(),
        ) -> EquivTransform {
            EquivTransform::new(ts, xs, us, a, b, c, dr).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn group_axioms_hold(e in transforms(), f in transforms(), g in transforms()) {
            let id = EquivTransform::identity();
            prop_assert_eq!(e.compose(&id), e.clone());
            prop_assert_eq!(id.compose(&e), e.clone());
            prop_assert_eq!(e.inverse().compose(&e), id.clone());
            prop_assert_eq!(e.compose(&e.inverse()), id);
            prop_assert_eq!(e.compose(&f).compose(&g), e.compose(&f.compose(&g)));
            // point action is compatible with composition
            let (t, x, u) = (Rat::new(1.into(), 3.into()), Rat::new((-2).into(), 1.into()), Rat::new(5.into(), 2.into()));
            let (t1, x1, u1) = f.apply_point(&t, &x, &u);
            let seq = e.apply_point(&t1, &x1, &u1);
            prop_assert_eq!(e.compose(&f).apply_point(&t, &x, &u), seq);
        }

        #[test]
        fn expression_maps_are_functorial(e in transforms(), f in transforms()) {
            let mut ctx = Context::new();
            ctx.declare_func("alpha", &[ArgVar::T, ArgVar::X]).unwrap();
            ctx.declare_func("sigma", &[ArgVar::T, ArgVar::V]).unwrap();
            for src in ["u_tx + t*u", "d*u_x^2 - Dint", "k*x - u^2", "alpha_tx*v_t", "sigma_tv + x"] {
                let expr = parse(src, &ctx).unwrap();
                let step = transform_expr(&transform_expr(&expr, &f).unwrap(), &e).unwrap();
                let joint = transform_expr(&expr, &e.compose(&f)).unwrap();
                prop_assert!(equal(&step, &joint).unwrap(), "src {}", src);
            }
        }

        #[test]
        fn antiderivative_routes_differ_only_by_a_constant(e in transforms(), f in transforms()) {
            // two transform routes may pick different integration constants
            // for Kint; nothing else may differ
            let ctx = Context::new();
            let expr = parse("Kint", &ctx).unwrap();
            let step = transform_expr(&transform_expr(&expr, &f).unwrap(), &e).unwrap();
            let joint = transform_expr(&expr, &e.compose(&f)).unwrap();
            let defect = lower(&(step - joint)).unwrap();
            prop_assert!(defect.as_rational().is_some(), "defect {}", lift(&defect));
        }

        #[test]
        fn divergence_scales_by_the_jacobian(tr in transforms()) {
            // D_t̃ F̃ + D_x̃ G̃ = (D_t F + D_x G)∘map / (t_scale·x_scale),
            // identically on the free jet space, for any (F, G)
            let ctx = Context::new();
            let cv = ConservedVector::new(
                parse("u*u_x + exp(u)", &ctx).unwrap(),
                parse("t*u_x^2 - Dint", &ctx).unwrap(),
            );
            let image = transform_conserved_vector(&cv, &tr).unwrap();
            let left = image.divergence().unwrap();
            let right = transform_expr(&cv.divergence().unwrap(), &tr).unwrap();
            let scale = Expr::Rational((&tr.t_scale * &tr.x_scale).recip());
            prop_assert!(equal(&left, &(scale * right)).unwrap());
        }

        #[test]
        fn transformed_base_law_verifies_on_transformed_model(tr in transforms()) {
            let sys = DifferentialSystem::base(PDEModel::arbitrary());
            let cv = ConservedVector::new(
                sys.model().parse_expr("u").unwrap(),
                sys.model().parse_expr("-d*u_x - Kint").unwrap(),
            );
            let sys2 = transform_system(&sys, &tr).unwrap();
            let cv2 = transform_conserved_vector(&cv, &tr).unwrap();
            let rep = verify_conservation_law(&sys2, &cv2, DEFAULT_CLOSURE_ORDER).unwrap();
            prop_assert!(rep.holds, "residual {}", rep.residual);
        }
    }

    #[test]
    fn chain_rule_on_jets_matches_total_derivatives() {
        // X(D_t e) = (t_scale·D_t + drift·D_x) X(e) for a sample transform
        let tr = EquivTransform::new(
            rat(3),
            rat(2),
            Rat::new((-1).into(), 2.into()),
            rat(1),
            rat(-2),
            rat(5),
            Rat::new(7.into(), 3.into()),
        )
        .unwrap();
        let ctx = Context::new();
        for src in ["u", "u_x*u_tt", "x*exp(u_x)"] {
            let e = parse(src, &ctx).unwrap();
            let lhs = transform_expr(&total_derivative(&e, IndepVar::T).unwrap(), &tr).unwrap();
            let img = transform_expr(&e, &tr).unwrap();
            let rhs = Expr::Rational(tr.t_scale.clone())
                * total_derivative(&img, IndepVar::T).unwrap()
                + Expr::Rational(tr.drift.clone())
                    * total_derivative(&img, IndepVar::X).unwrap();
            assert!(equal(&lhs, &rhs).unwrap(), "chain rule failed on `{src}`");
        }
    }

    #[test]
    fn explicit_model_coefficients_transform_as_stated() {
        let m = PDEModel::builder()
            .diffusion("1 + u^2")
            .unwrap()
            .convection("u")
            .unwrap()
            .build()
            .unwrap();
        let tr = EquivTransform::new(rat(4), rat(2), rat(1), rat(0), rat(0), rat(0), rat(3))
            .unwrap();
        let m2 = transform_model(&m, &tr).unwrap();
        // d̃(ũ) = (x_scale²/t_scale)·d(u) with u = ũ (u_scale = 1, no shift)
        let want_d = m2.parse_expr("(1 + u^2)").unwrap();
        assert!(equal(&m2.diffusion_value(), &want_d).unwrap());
        // k̃(ũ) = (x_scale·k − drift)/t_scale = (2u − 3)/4
        let want_k = m2.parse_expr("(2*u - 3)/4").unwrap();
        assert!(equal(&m2.convection_value(), &want_k).unwrap());
    }

    #[test]
    fn pins_survive_transformation() {
        let m = PDEModel::builder()
            .diffusion("u^-2")
            .unwrap()
            .diffusion_antiderivative("-u^-1")
            .unwrap()
            .convection("0")
            .unwrap()
            .convection_antiderivative("0")
            .unwrap()
            .build()
            .unwrap();
        let tr = EquivTransform::new(rat(2), rat(3), rat(5), rat(1), rat(1), rat(0), rat(7))
            .unwrap();
        // builds only if the transformed pins still differentiate to the
        // transformed coefficients
        let m2 = transform_model(&m, &tr).unwrap();
        assert!(!m2.diffusion().is_arbitrary());
    }
}
