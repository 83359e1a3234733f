//! Display for expressions.  Output re-parses to the same normal form, so
//! printed expressions can round-trip through model files.

use std::fmt;

use num::{BigRational, One, Signed, Zero};

use super::Expr;

// Precedence used to decide parenthesisation: the required level of a slot
// must not exceed the inherent level of the child written into it.
const P_SUM: u8 = 0;
const P_TERM: u8 = 1;
const P_DENOM: u8 = 2;
const P_BASE: u8 = 3;

fn rat_level(r: &BigRational) -> u8 {
    if !r.denom().is_one() {
        P_TERM // prints with a `/`
    } else if r.is_negative() {
        P_DENOM // leading `-` must not capture a following `^`
    } else {
        P_BASE
    }
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Rational(r) => rat_level(r),
        Expr::Atom(_) | Expr::Exp(_) => P_BASE,
        Expr::Sum(_) => P_SUM,
        Expr::Product(_) | Expr::Quotient(..) => P_TERM,
        Expr::Power(..) => P_DENOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, required: u8) -> fmt::Result {
    if level(e) < required {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

/// True when the printed form of `e` starts with a minus sign, so that a sum
/// can join it with ` - ` instead of ` + -`.
fn leads_negative(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Rational(r) if r.is_negative() => Some(Expr::Rational(-r)),
        Expr::Product(fs) => match fs.first() {
            Some(Expr::Rational(r)) if r.is_negative() => {
                let mut out = fs.clone();
                if (-r).is_one() && out.len() > 1 {
                    out.remove(0);
                    if out.len() == 1 {
                        return Some(out.pop().expect("nonempty"));
                    }
                } else {
                    out[0] = Expr::Rational(-r);
                }
                Some(Expr::Product(out))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Rational(r) => {
            if r.denom().is_one() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        Expr::Atom(a) => write!(f, "{a}"),
        Expr::Sum(items) => {
            if items.is_empty() {
                return write!(f, "0");
            }
            for (i, item) in items.iter().enumerate() {
                if i == 0 {
                    write_at(f, item, P_SUM)?;
                } else if let Some(pos) = leads_negative(item) {
                    write!(f, " - ")?;
                    write_at(f, &pos, P_TERM)?;
                } else {
                    write!(f, " + ")?;
                    write_at(f, item, P_TERM)?;
                }
            }
            Ok(())
        }
        Expr::Product(items) => {
            if items.is_empty() {
                return write!(f, "1");
            }
            let mut items = &items[..];
            // `-1 * rest` prints as `-rest`
            if let Some(Expr::Rational(r)) = items.first() {
                if (-r).is_one() && items.len() > 1 {
                    write!(f, "-")?;
                    items = &items[1..];
                    if items.len() == 1 {
                        return write_at(f, &items[0], P_TERM);
                    }
                }
            }
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_at(f, item, P_TERM)?;
            }
            Ok(())
        }
        Expr::Quotient(a, b) => {
            write_at(f, a, P_TERM)?;
            write!(f, "/")?;
            write_at(f, b, P_DENOM)
        }
        Expr::Power(b, n) => {
            write_at(f, b, P_BASE)?;
            write!(f, "^{n}")
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            write_expr(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Expr::Sum(items) = self {
            if items.is_empty() {
                return write!(f, "0");
            }
        }
        if self == &Expr::Rational(BigRational::zero()) {
            return write!(f, "0");
        }
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{lower, parse, Context};

    /// print → parse → lower must agree with the original lowering.
    fn roundtrip(src: &str) {
        let ctx = Context::new();
        let e = parse(src, &ctx).unwrap();
        let printed = e.to_string();
        let back = parse(&printed, &ctx).unwrap();
        assert_eq!(
            lower(&e).unwrap(),
            lower(&back).unwrap(),
            "round-trip changed value: `{src}` printed as `{printed}`"
        );
    }

    #[test]
    fn printed_forms_reparse_to_equal_values() {
        roundtrip("u_t - d_u*u_x^2 - d*u_xx - k*u_x");
        roundtrip("(u + 1)^2 / (u - 1)");
        roundtrip("-3/2*u*exp(x - t)");
        roundtrip("1/2 - u^-2");
        roundtrip("x*(t + u)^3 - Dint/u");
    }

    #[test]
    fn negative_sums_join_with_minus() {
        let ctx = Context::new();
        let e = parse("u - 2*x - 1", &ctx).unwrap();
        let s = e.to_string();
        assert!(!s.contains("+ -"), "ugly join in `{s}`");
    }
}
