//! Indeterminates: the atomic symbols expressions are built from.
//!
//! Every expression is, after normalization, a rational function in a finite
//! set of these atoms (plus exponentials, handled by the canonical form).
//! Atoms are self-describing so printing and formal differentiation do not
//! need a symbol table.

use std::fmt;

/// Independent variables of the base equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndepVar {
    T,
    X,
}

/// Dependent variables: `u` is the unknown of the base equation, `v` and `w`
/// are first- and second-level potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dep {
    U,
    V,
    W,
}

impl Dep {
    pub fn name(self) -> &'static str {
        match self {
            Dep::U => "u",
            Dep::V => "v",
            Dep::W => "w",
        }
    }
}

/// Formal arguments a function symbol may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgVar {
    T,
    X,
    U,
    V,
}

impl ArgVar {
    pub fn letter(self) -> char {
        match self {
            ArgVar::T => 't',
            ArgVar::X => 'x',
            ArgVar::U => 'u',
            ArgVar::V => 'v',
        }
    }

    pub fn from_letter(c: char) -> Option<ArgVar> {
        match c {
            't' => Some(ArgVar::T),
            'x' => Some(ArgVar::X),
            'u' => Some(ArgVar::U),
            'v' => Some(ArgVar::V),
            _ => None,
        }
    }
}

/// The two antiderivative symbols: `Dint` with d/du Dint = d(u), and `Kint`
/// with d/du Kint = k(u).  The engine never integrates; models supply
/// explicit antiderivatives when the coefficients are concrete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AntiKind {
    DInt,
    KInt,
}

impl AntiKind {
    pub fn name(self) -> &'static str {
        match self {
            AntiKind::DInt => "Dint",
            AntiKind::KInt => "Kint",
        }
    }

    /// Name of the coefficient function this symbol is an antiderivative of.
    pub fn coefficient_name(self) -> &'static str {
        match self {
            AntiKind::DInt => "d",
            AntiKind::KInt => "k",
        }
    }
}

/// An atomic symbol.
///
/// `Jet { dep, dt, dx }` is the jet variable `∂_t^dt ∂_x^dx dep`; `Func` is a
/// derivative of a declared function symbol, indexed per formal argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indeterminate {
    Indep(IndepVar),
    Jet { dep: Dep, dt: u32, dx: u32 },
    Func { name: String, args: Vec<ArgVar>, index: Vec<u32> },
    Anti(AntiKind),
    Param(String),
}

impl Indeterminate {
    pub fn t() -> Self {
        Indeterminate::Indep(IndepVar::T)
    }

    pub fn x() -> Self {
        Indeterminate::Indep(IndepVar::X)
    }

    pub fn jet(dep: Dep, dt: u32, dx: u32) -> Self {
        Indeterminate::Jet { dep, dt, dx }
    }

    pub fn u() -> Self {
        Self::jet(Dep::U, 0, 0)
    }

    pub fn func(name: &str, args: &[ArgVar], index: &[u32]) -> Self {
        debug_assert_eq!(args.len(), index.len());
        Indeterminate::Func {
            name: name.to_string(),
            args: args.to_vec(),
            index: index.to_vec(),
        }
    }

    pub fn param(name: &str) -> Self {
        Indeterminate::Param(name.to_string())
    }

    /// Jet order (total number of differentiations) for jet atoms, `None`
    /// otherwise.  Function-symbol derivative indices do not count: a symbol
    /// like a derivative of `sigma` is still order zero in the jet sense.
    pub fn jet_order(&self) -> Option<u32> {
        match self {
            Indeterminate::Jet { dt, dx, .. } => Some(dt + dx),
            _ => None,
        }
    }

    /// True when the atom is a jet variable carrying at least one
    /// t-differentiation (the coordinates eliminated by on-shell reduction).
    pub fn has_t_derivative(&self) -> bool {
        matches!(self, Indeterminate::Jet { dt, .. } if *dt > 0)
    }
}

fn write_suffix(f: &mut fmt::Formatter<'_>, letters: &[(char, u32)]) -> fmt::Result {
    if letters.iter().all(|(_, n)| *n == 0) {
        return Ok(());
    }
    write!(f, "_")?;
    for (c, n) in letters {
        for _ in 0..*n {
            write!(f, "{c}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Indeterminate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indeterminate::Indep(IndepVar::T) => write!(f, "t"),
            Indeterminate::Indep(IndepVar::X) => write!(f, "x"),
            Indeterminate::Jet { dep, dt, dx } => {
                write!(f, "{}", dep.name())?;
                write_suffix(f, &[('t', *dt), ('x', *dx)])
            }
            Indeterminate::Func { name, args, index } => {
                write!(f, "{name}")?;
                let letters: Vec<(char, u32)> =
                    args.iter().zip(index).map(|(a, n)| (a.letter(), *n)).collect();
                write_suffix(f, &letters)
            }
            Indeterminate::Anti(k) => write!(f, "{}", k.name()),
            Indeterminate::Param(p) => write!(f, "{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_matches_input_grammar() {
        assert_eq!(Indeterminate::jet(Dep::U, 1, 2).to_string(), "u_txx");
        assert_eq!(Indeterminate::jet(Dep::V, 0, 0).to_string(), "v");
        assert_eq!(
            Indeterminate::func("alpha", &[ArgVar::T, ArgVar::X], &[0, 2]).to_string(),
            "alpha_xx"
        );
        assert_eq!(
            Indeterminate::func("sigma", &[ArgVar::T, ArgVar::V], &[1, 1]).to_string(),
            "sigma_tv"
        );
        assert_eq!(Indeterminate::Anti(AntiKind::DInt).to_string(), "Dint");
    }
}
