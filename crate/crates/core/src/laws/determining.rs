//! Determining system for conserved vectors with generic first-order
//! components, and construction of laws from characteristics.

use crate::error::EngineError;
use crate::expr::{
    collect, diff, lift, lower, normalize, ArgVar, Context, Expr, Indeterminate,
};
use crate::jet::{total_derivative, PDEModel};
use crate::expr::{Dep, IndepVar};

/// The divergence of a generic ansatz
/// `F = Σ f_ij(t,x,u)·u_t^i·u_x^j`, `G = Σ g_ij(t,x,u)·u_t^i·u_x^j`
/// split after eliminating `u_xx` through the equation.  Setting every
/// equation to zero characterizes conserved vectors of this shape.
#[derive(Debug, Clone)]
pub struct DeterminingSystem {
    /// Context in which the coefficient symbols `fij`, `gij` live.
    pub ctx: Context,
    pub density: Expr,
    pub flux: Expr,
    /// Coefficient of `u_tt` in the divergence; equals `∂F/∂u_t`, so the
    /// system forces the density to be independent of `u_t`.
    pub utt_coefficient: Expr,
    /// Coefficient of `u_tx`; equals `∂F/∂u_x + ∂G/∂u_t`.
    pub utx_coefficient: Expr,
    /// All determining equations: the `(u_tt, u_tx, u_t, u_x)`-coefficients
    /// of the divergence, numerators only (denominators are powers of `d`).
    pub equations: Vec<Expr>,
}

/// Build the determining system for densities polynomial of total degree
/// `degree` in `(u_t, u_x)` with coefficients depending on `(t, x, u)`.
pub fn determining_system(model: &PDEModel, degree: u32) -> Result<DeterminingSystem, EngineError> {
    let mut ctx = model.ctx().clone();
    let args = [ArgVar::T, ArgVar::X, ArgVar::U];
    let ut = Expr::Atom(Indeterminate::jet(Dep::U, 1, 0));
    let ux = Expr::Atom(Indeterminate::jet(Dep::U, 0, 1));
    let mut density = Expr::zero();
    let mut flux = Expr::zero();
    for i in 0..=degree {
        for j in 0..=(degree - i) {
            let f = format!("f{i}{j}");
            let g = format!("g{i}{j}");
            ctx.declare_func(&f, &args)?;
            ctx.declare_func(&g, &args)?;
            let mono = Expr::pow(ut.clone(), i as i64) * Expr::pow(ux.clone(), j as i64);
            density = density + Expr::Atom(Indeterminate::func(&f, &args, &[0, 0, 0])) * mono.clone();
            flux = flux + Expr::Atom(Indeterminate::func(&g, &args, &[0, 0, 0])) * mono;
        }
    }

    let divergence = total_derivative(&density, IndepVar::T)?
        + total_derivative(&flux, IndepVar::X)?;
    // eliminate u_xx through the equation: u_xx = (u_t − k·u_x − d_u·u_x²)/d
    let uxx = Indeterminate::jet(Dep::U, 0, 2);
    let solved = model.parse_expr("(u_t - k*u_x - d_u*u_x^2)/d")?;
    let bound = crate::expr::substitute(
        &divergence,
        &crate::expr::Bindings::new().atom(uxx, solved),
    )?;
    let bound = normalize(&bound, model.relations())?;

    let utt = Indeterminate::jet(Dep::U, 2, 0);
    let utx = Indeterminate::jet(Dep::U, 1, 1);
    let ut_a = Indeterminate::jet(Dep::U, 1, 0);
    let ux_a = Indeterminate::jet(Dep::U, 0, 1);

    let mut utt_coefficient = Expr::zero();
    let mut utx_coefficient = Expr::zero();
    let mut equations = Vec::new();
    for (key, coeff) in collect(&bound, &[utt.clone(), utx.clone()])? {
        match (key[0], key[1]) {
            (1, 0) => utt_coefficient = coeff.clone(),
            (0, 1) => utx_coefficient = coeff.clone(),
            (0, 0) => {}
            _ => unreachable!("divergence is linear in second-order jets"),
        }
        for (_, eq) in collect(&coeff, &[ut_a.clone(), ux_a.clone()])? {
            // clear the d-power denominator; d ≠ 0 on the model class
            equations.push(lift(&crate::expr::Canon::from_poly(lower(&eq)?.num().clone())));
        }
    }

    Ok(DeterminingSystem { ctx, density, flux, utt_coefficient, utx_coefficient, equations })
}

/// A characteristic triple: multiplier `psi(t,x)` against the equation, plus
/// gauge data `phi`, `chi`.
#[derive(Debug, Clone)]
pub struct Characteristic {
    pub psi: Expr,
    pub phi: Expr,
    pub chi: Expr,
}

impl Characteristic {
    pub fn multiplier(psi: Expr) -> Self {
        Characteristic { psi, phi: Expr::zero(), chi: Expr::zero() }
    }
}

/// Conserved vector generated by a characteristic:
/// `F = D_x φ − ψ·u`,
/// `G = χ − D_t φ + d·ψ·u_x + ψ·Kint − ψ_x·Dint`.
/// Its divergence vanishes on shell whenever `ψ` satisfies the classifying
/// relation `ψ_t + d·ψ_xx − k·ψ_x = 0` and `χ_x = 0`.
pub fn from_characteristic(
    ch: &Characteristic,
) -> Result<crate::laws::ConservedVector, EngineError> {
    let u = Expr::Atom(Indeterminate::u());
    let ux = Expr::Atom(Indeterminate::jet(Dep::U, 0, 1));
    let d = Expr::Atom(Indeterminate::func("d", &[ArgVar::U], &[0]));
    let dint = Expr::Atom(Indeterminate::Anti(crate::expr::AntiKind::DInt));
    let kint = Expr::Atom(Indeterminate::Anti(crate::expr::AntiKind::KInt));
    let psi_x = total_derivative(&ch.psi, IndepVar::X)?;
    let density = total_derivative(&ch.phi, IndepVar::X)? - ch.psi.clone() * u;
    let flux = ch.chi.clone() - total_derivative(&ch.phi, IndepVar::T)?
        + d * ch.psi.clone() * ux
        + ch.psi.clone() * kint
        - psi_x * dint;
    Ok(crate::laws::ConservedVector::new(density, flux))
}

/// Residual of the classifying relation `ψ_t + d·ψ_xx − k·ψ_x` for a
/// concrete multiplier, normalized modulo the model's rules.
pub fn classifying_residual(model: &PDEModel, psi: &Expr) -> Result<Expr, EngineError> {
    let t = Indeterminate::t();
    let x = Indeterminate::x();
    let d = model.diffusion_value();
    let k = model.convection_value();
    let psi_t = diff(psi, &t)?;
    let psi_x = diff(psi, &x)?;
    let psi_xx = diff(&psi_x, &x)?;
    model.normalize(&(psi_t + d * psi_xx - k * psi_x))
}
