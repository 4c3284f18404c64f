//! Exact integer/real helpers the rest of the crate rests on: signed
//! residues, tie-up rounding, and the trigamma function.

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// 2^k as an unsigned big integer.
pub fn pow2(k: u32) -> BigUint {
    BigUint::one() << (k as usize)
}

/// 2^k as a signed big integer.
pub fn pow2_int(k: u32) -> BigInt {
    BigInt::one() << (k as usize)
}

/// Reduces `u` modulo `n` into the window [-n/2, n/2).
pub fn signed_residue(u: &BigInt, n: &BigInt) -> Result<BigInt> {
    if !n.is_positive() {
        return Err(Error::Parameter(format!(
            "signed residue needs a positive modulus, got {n}"
        )));
    }
    let mut r = u.mod_floor(n);
    if (&r << 1) >= *n {
        r -= n;
    }
    Ok(r)
}

/// Signed residue with a power-of-two modulus 2^k.
pub fn signed_residue_pow2(u: &BigInt, k: u32) -> BigInt {
    signed_residue(u, &pow2_int(k)).expect("power of two modulus is positive")
}

/// Rounds an exact rational to the closest integer, breaking ties upward,
/// so that round(u) = u - {u}_1 with {u}_1 in [-1/2, 1/2).
pub fn round_half_up(u: &BigRational) -> BigInt {
    let floor = u.floor().to_integer();
    let frac = u - BigRational::from_integer(floor.clone());
    // frac in [0, 1); round up from 1/2 inclusive.
    if frac * BigRational::from_integer(BigInt::from(2)) >= BigRational::one() {
        floor + 1
    } else {
        floor
    }
}

/// Round-half-up of the exact ratio `num / den` for `den > 0`.
///
/// Equals floor((2 num + den) / (2 den)).
pub fn round_half_up_ratio(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    ((num << 1u32) + den).div_floor(&(den << 1u32))
}

/// Round-half-up on floats; diagnostics only, exact paths use the rational
/// variants.
pub fn round_half_up_f64(u: f64) -> f64 {
    (u + 0.5).floor()
}

/// Trigamma function psi'(x) = sum_{k >= 0} 1/(x+k)^2 for x > 0.
///
/// Evaluated by summing the series up to a shift point and estimating the
/// Hurwitz tail by its integral together with the standard correction terms,
/// giving relative accuracy well below 1e-12 over the whole domain.
pub fn trigamma(x: f64) -> Result<f64> {
    if x <= 0.0 || x.is_nan() {
        return Err(Error::Parameter(format!("trigamma needs x > 0, got {x}")));
    }
    let mut acc = 0.0f64;
    let mut y = x;
    while y < 20.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    // Tail: integral 1/y plus correction terms of the asymptotic expansion.
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let tail = inv
        + inv2 / 2.0
        + inv2 * inv / 6.0
        - inv2 * inv2 * inv / 30.0
        + inv2 * inv2 * inv2 * inv / 42.0
        - inv2 * inv2 * inv2 * inv2 * inv / 30.0;
    Ok(acc + tail)
}

/// Converts the exact dyadic rational `num / 2^log2_den` to a float.
///
/// Uses the top 53 bits of the numerator so the conversion stays accurate
/// even when `num` has hundreds of bits.
pub fn dyadic_to_f64(num: &BigInt, log2_den: u32) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let mag = num.magnitude();
    let bits = mag.bits();
    let (mant, shift) = if bits > 53 {
        let top: BigUint = mag >> ((bits - 53) as usize);
        (top.to_f64().unwrap_or(f64::INFINITY), (bits - 53) as i64)
    } else {
        (mag.to_f64().unwrap_or(f64::INFINITY), 0i64)
    };
    let e = shift - log2_den as i64;
    let v = if e < -1100 {
        0.0
    } else if e > 1020 {
        f64::INFINITY
    } else {
        mant * 2f64.powi(e as i32)
    };
    if num.sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

/// Base-2 logarithm of a positive big integer, accurate to ~1e-15.
pub fn log2_big(n: &BigUint) -> f64 {
    assert!(!n.is_zero(), "log2 of zero");
    let bits = n.bits();
    if bits <= 53 {
        n.to_f64().unwrap().log2()
    } else {
        let top: BigUint = n >> ((bits - 53) as usize);
        top.to_f64().unwrap().log2() + (bits - 53) as f64
    }
}
