//! Double-double arithmetic (~31 significant digits).
//!
//! The alternating binomial sums of the exact F1 path cancel down to
//! ~log10(C(tau, tau/2) / F1) digits — about 16 at tau = 50 — so plain f64
//! returns noise there. A double-double carries enough headroom through
//! tau = 60. Only +, -, *, /, sqrt and integer powers are needed; the
//! algorithms are the classic error-free transformations (Dekker, Knuth),
//! with `f64::mul_add` providing the exact product residual.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, rhs: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, rhs.hi);
        let (s2, e2) = two_sum(self.lo, rhs.lo);
        let (s1, e1) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s1, e1 + e2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(rhs.neg())
    }

    #[inline]
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul(Dd::from_f64(q1)));
        let q2 = r.hi / rhs.hi;
        let r = r.sub(rhs.mul(Dd::from_f64(q2)));
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        // One dd Newton step from the f64 root: s + (x - s^2) / (2 s).
        let s = Dd::from_f64(self.hi.sqrt());
        let num = self.sub(s.mul(s));
        s.add(num.div(s.add(s)))
    }

    pub fn powi(self, n: u32) -> Dd {
        let mut base = self;
        let mut n = n;
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    #[inline]
    #[allow(dead_code)]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_mul_carry_extra_digits() {
        // (1 + 2^-60) stays distinguishable from 1.
        let tiny = Dd::from_f64(2f64.powi(-60));
        let x = Dd::ONE.add(tiny);
        assert_eq!(x.hi, 1.0);
        assert_eq!(x.lo, 2f64.powi(-60));
        let y = x.mul(x); // 1 + 2^-59 + 2^-120
        assert!((y.sub(Dd::ONE).to_f64() - 2f64.powi(-59)).abs() < 1e-30);
    }

    #[test]
    fn div_and_recip() {
        let a = Dd::from_f64(355.0).div(Dd::from_f64(113.0));
        let back = a.mul(Dd::from_f64(113.0));
        assert!((back.to_f64() - 355.0).abs() < 1e-28);
        let r = Dd::from_f64(7.0).recip().mul(Dd::from_f64(7.0));
        assert!((r.sub(Dd::ONE).to_f64()).abs() < 1e-30);
    }

    #[test]
    fn sqrt_squares_back() {
        for &x in &[2.0, 10.0, 1.2857142857142858_f64] {
            let s = Dd::from_f64(x).sqrt();
            let back = s.mul(s).sub(Dd::from_f64(x)).to_f64();
            assert!(back.abs() < 1e-30, "x={x} resid={back:e}");
        }
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let x = Dd::from_f64(1.5);
        let mut acc = Dd::ONE;
        for _ in 0..13 {
            acc = acc.mul(x);
        }
        assert!((x.powi(13).sub(acc).to_f64()).abs() < 1e-25);
    }
}
