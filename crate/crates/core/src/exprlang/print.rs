use std::fmt;

use num_traits::{One, Signed};

use super::ast::{Expr, Rational};

// Binding strength of the printed form; a child is parenthesized when it
// binds more loosely than its slot requires.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) | Expr::Sub(..) => SUM,
        Expr::Mul(_) | Expr::Div(..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Pow(..) => POWER,
        Expr::Num(q) => match (q.is_integer(), q.is_negative()) {
            (true, false) => ATOM,
            (true, true) => UNARY,
            (false, _) => PRODUCT,
        },
        Expr::Pi | Expr::Var(_) | Expr::Param(_) | Expr::Call(..) => ATOM,
    }
}

struct Child<'a> {
    expr: &'a Expr,
    paren: bool,
}

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.paren {
            write!(f, "({})", self.expr)
        } else {
            write!(f, "{}", self.expr)
        }
    }
}

fn child(expr: &Expr, paren: bool) -> Child<'_> {
    Child { expr, paren }
}

fn write_num(q: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let v = q.value();
    if v.denom().is_one() {
        write!(f, "{}", v.numer())
    } else if v.is_negative() {
        write!(f, "-{}/{}", v.numer().abs(), v.denom())
    } else {
        write!(f, "{}/{}", v.numer(), v.denom())
    }
}

/// Prints in the input grammar; `parse(e.to_string())` rebuilds `e` up to
/// the folding of negative and fractional constants.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(q) => write_num(q, f),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => write!(f, "-{}", child(a, precedence(a) <= UNARY)),
            Expr::Add(xs) => match xs.as_slice() {
                [] => f.write_str("0"),
                [x] => write!(f, "{x}"),
                _ => {
                    for (i, x) in xs.iter().enumerate() {
                        if i == 0 {
                            let paren = matches!(x, Expr::Add(_));
                            write!(f, "{}", child(x, paren))?;
                        } else {
                            write!(f, " + {}", child(x, precedence(x) <= SUM))?;
                        }
                    }
                    Ok(())
                }
            },
            Expr::Sub(a, b) => write!(f, "{} - {}", a, child(b, precedence(b) <= SUM)),
            Expr::Mul(xs) => match xs.as_slice() {
                [] => f.write_str("1"),
                [x] => write!(f, "{x}"),
                _ => {
                    for (i, x) in xs.iter().enumerate() {
                        if i == 0 {
                            let paren = precedence(x) < PRODUCT || matches!(x, Expr::Mul(_));
                            write!(f, "{}", child(x, paren))?;
                        } else {
                            write!(f, "*{}", child(x, precedence(x) <= PRODUCT))?;
                        }
                    }
                    Ok(())
                }
            },
            Expr::Div(a, b) => write!(
                f,
                "{}/{}",
                child(a, precedence(a) < PRODUCT),
                child(b, precedence(b) <= PRODUCT)
            ),
            Expr::Pow(a, n) => write!(f, "{}^{}", child(a, precedence(a) < ATOM), n),
            Expr::Call(g, a) => write!(f, "{}({})", g.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::exprlang::parse;

    fn round(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn prints_canonical_text() {
        assert_eq!(round("r^2 - 2*z^2"), "r^2 - 2*z^2");
        assert_eq!(round("(r+z)*(r-z)"), "(r + z)*(r - z)");
        assert_eq!(round("a-(b-c)"), "a - (b - c)");
        assert_eq!(round("a/(b*c)"), "a/(b*c)");
        assert_eq!(round("(-r)^2"), "(-r)^2");
        assert_eq!(round("-(-r)"), "-(-r)");
        assert_eq!(round("(a+b)+c"), "(a + b) + c");
        assert_eq!(round("r^-2"), "r^-2");
        assert_eq!(round("sin(k*sqrt(r^2+(z+z0)^2))"), "sin(k*sqrt(r^2 + (z + z0)^2))");
    }

    #[test]
    fn reparse_is_structurally_identical() {
        for s in [
            "r^2 - 2*z^2",
            "(4*z^4+13*r^4+20*r^2*z^2)/((r^2-2*z^2)^2*r^2)",
            "-k^2+1/r^2+2*k^2/(sin(k*z))^2",
            "a - b - c + d*e/f/g",
            "-(a+b)*-c",
            "1/2*r",
        ] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s}");
        }
    }
}
