use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Value of a function of `(r, z)` together with all first and second
/// partial derivatives, propagated in forward mode.
///
/// Arithmetic applies the chain rule exactly, so derivatives carry only
/// rounding error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperDual {
    pub value: f64,
    pub d_r: f64,
    pub d_z: f64,
    pub d_rr: f64,
    pub d_rz: f64,
    pub d_zz: f64,
}

impl HyperDual {
    pub const fn constant(value: f64) -> Self {
        HyperDual {
            value,
            d_r: 0.0,
            d_z: 0.0,
            d_rr: 0.0,
            d_rz: 0.0,
            d_zz: 0.0,
        }
    }

    /// The coordinate `r` seeded at `value`.
    pub const fn r(value: f64) -> Self {
        HyperDual {
            d_r: 1.0,
            ..HyperDual::constant(value)
        }
    }

    /// The coordinate `z` seeded at `value`.
    pub const fn z(value: f64) -> Self {
        HyperDual {
            d_z: 1.0,
            ..HyperDual::constant(value)
        }
    }

    /// Composes a scalar function with value `f0`, first derivative `f1` and
    /// second derivative `f2` (all at `self.value`).
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        HyperDual {
            value: f0,
            d_r: f1 * self.d_r,
            d_z: f1 * self.d_z,
            d_rr: f1 * self.d_rr + f2 * self.d_r * self.d_r,
            d_rz: f1 * self.d_rz + f2 * self.d_r * self.d_z,
            d_zz: f1 * self.d_zz + f2 * self.d_z * self.d_z,
        }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => HyperDual::constant(1.0),
            1 => self,
            _ => {
                let x = self.value;
                let nf = f64::from(n);
                self.chain(x.powi(n), nf * x.powi(n - 1), nf * (nf - 1.0) * x.powi(n - 2))
            }
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn cot(self) -> Self {
        let (s, c) = self.value.sin_cos();
        let ct = c / s;
        let csc2 = 1.0 + ct * ct;
        self.chain(ct, -csc2, 2.0 * ct * csc2)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn is_finite(&self) -> bool {
        [self.value, self.d_r, self.d_z, self.d_rr, self.d_rz, self.d_zz]
            .iter()
            .all(|x| x.is_finite())
    }

    pub fn scale(self, k: f64) -> Self {
        HyperDual {
            value: self.value * k,
            d_r: self.d_r * k,
            d_z: self.d_z * k,
            d_rr: self.d_rr * k,
            d_rz: self.d_rz * k,
            d_zz: self.d_zz * k,
        }
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual {
            value: self.value + o.value,
            d_r: self.d_r + o.d_r,
            d_z: self.d_z + o.d_z,
            d_rr: self.d_rr + o.d_rr,
            d_rz: self.d_rz + o.d_rz,
            d_zz: self.d_zz + o.d_zz,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual {
            value: self.value * o.value,
            d_r: self.d_r * o.value + self.value * o.d_r,
            d_z: self.d_z * o.value + self.value * o.d_z,
            d_rr: self.d_rr * o.value + 2.0 * self.d_r * o.d_r + self.value * o.d_rr,
            d_rz: self.d_rz * o.value + self.d_r * o.d_z + self.d_z * o.d_r + self.value * o.d_rz,
            d_zz: self.d_zz * o.value + 2.0 * self.d_z * o.d_z + self.value * o.d_zz,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_mixed_partial() {
        // f = r^2 * z^3 at (2, 1): f_rz = 6 r z^2 = 12
        let r = HyperDual::r(2.0);
        let z = HyperDual::z(1.0);
        let f = r.powi(2) * z.powi(3);
        assert_eq!(f.value, 4.0);
        assert_eq!(f.d_r, 4.0);
        assert_eq!(f.d_z, 12.0);
        assert_eq!(f.d_rr, 2.0);
        assert_eq!(f.d_rz, 12.0);
        assert_eq!(f.d_zz, 24.0);
    }

    #[test]
    fn quotient_matches_closed_form() {
        // f = z / r at (2, 3): f_rr = 2z/r^3 = 0.75, f_rz = -1/r^2
        let f = HyperDual::z(3.0) / HyperDual::r(2.0);
        assert!((f.d_rr - 0.75).abs() < 1e-15);
        assert!((f.d_rz + 0.25).abs() < 1e-15);
        assert_eq!(f.d_zz, 0.0);
    }
}
