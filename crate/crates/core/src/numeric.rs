//! Scalar abstraction shared by the double and extended-precision threshold code,
//! plus small root-finding helpers.

use astro_float::{BigFloat, Consts, RoundingMode};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Working precision of [`Ext`] in bits.
pub const EXT_BITS: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

pub trait Real:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn exp_m1(&self) -> Self;
    fn pi() -> Self;
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn exp_m1(&self) -> Self {
        f64::exp_m1(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
}

/// 256-bit binary floating point backed by `astro-float`.
#[derive(Debug, Clone)]
pub struct Ext(BigFloat);

impl PartialEq for Ext {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! ext_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Ext {
            type Output = Ext;
            fn $m(self, rhs: Ext) -> Ext {
                Ext(self.0.$m(&rhs.0, EXT_BITS, RM))
            }
        }
    };
}
ext_binop!(Add, add);
ext_binop!(Sub, sub);
ext_binop!(Mul, mul);
ext_binop!(Div, div);

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext(self.0.neg())
    }
}

impl Real for Ext {
    fn from_f64(v: f64) -> Self {
        Ext(BigFloat::from_f64(v, EXT_BITS))
    }
    fn to_f64(&self) -> f64 {
        let Some((words, _, sign, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        // Value is 0.m * 2^exp with the mantissa stored little-endian.
        let Some((&top, rest)) = words.split_last() else {
            return 0.0;
        };
        if top == 0 {
            return 0.0;
        }
        // Sticky bit below the 53 retained bits keeps the u64 -> f64 rounding correct.
        let m = if rest.iter().any(|&w| w != 0) { top | 1 } else { top };
        let shift = exp as i32 - 64;
        let half = shift / 2;
        let v = m as f64 * 2f64.powi(half) * 2f64.powi(shift - half);
        if sign == astro_float::Sign::Neg {
            -v
        } else {
            v
        }
    }
    fn sqrt(&self) -> Self {
        Ext(self.0.sqrt(EXT_BITS, RM))
    }
    fn exp(&self) -> Self {
        CONSTS.with(|c| Ext(self.0.exp(EXT_BITS, RM, &mut c.borrow_mut())))
    }
    fn exp_m1(&self) -> Self {
        self.exp() - Ext::from_f64(1.0)
    }
    fn pi() -> Self {
        CONSTS.with(|c| Ext(c.borrow_mut().pi(EXT_BITS, RM)))
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping at relative width `rel_tol`.
pub fn bisect<T: Real, F: Fn(&T) -> T>(f: F, mut lo: T, mut hi: T, rel_tol: f64) -> Option<T> {
    let zero = T::from_f64(0.0);
    let two = T::from_f64(2.0);
    let flo = f(&lo);
    let fhi = f(&hi);
    if flo == zero {
        return Some(lo);
    }
    if fhi == zero {
        return Some(hi);
    }
    let lo_neg = flo < zero;
    if lo_neg == (fhi < zero) {
        return None;
    }
    let tol = T::from_f64(rel_tol);
    for _ in 0..400 {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        let fm = f(&mid);
        if fm == zero {
            return Some(mid);
        }
        if (fm < zero) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
        let width = hi.clone() - lo.clone();
        let scale = if hi < zero { -hi.clone() } else { hi.clone() };
        if width <= tol.clone() * scale {
            break;
        }
    }
    Some((lo + hi) / two)
}

/// Plain `f64` bisection to full resolution (stops when the midpoint repeats).
pub fn bisect_f64<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if (flo < 0.0) == (fhi < 0.0) {
        return None;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}
