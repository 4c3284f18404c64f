//! Exact evaluation of the measurement outcome distribution: the argument
//! and angle of a pair (j, k), the inner sum zeta, the per-pair probability
//! in closed form, the per-j offset distribution, and tau-goodness.
//!
//! Angles are always formed from exact dyadic rationals (the argument alpha
//! over a power-of-two modulus) and converted to floating point last, so the
//! trigonometry stays accurate when alpha has hundreds of bits.

use num::bigint::{BigInt, BigUint};
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numutil::{dyadic_to_f64, pow2, pow2_int, signed_residue_pow2, trigamma};

/// The argument alpha in [-2^(m+ell-1), 2^(m+ell-1)) together with the angle
/// theta = 2 pi alpha / 2^(m+ell) it represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleArgument {
    alpha: BigInt,
    m: u32,
    ell: u32,
}

impl AngleArgument {
    pub fn new(alpha: BigInt, m: u32, ell: u32) -> Result<Self> {
        let half = pow2_int(m + ell - 1);
        if alpha < -&half || alpha >= half {
            return Err(Error::Parameter(format!(
                "alpha {alpha} outside [-2^{0}, 2^{0})",
                m + ell - 1
            )));
        }
        Ok(AngleArgument { alpha, m, ell })
    }

    pub fn alpha(&self) -> &BigInt {
        &self.alpha
    }

    /// theta in [-pi, pi).
    pub fn theta(&self) -> f64 {
        2.0 * std::f64::consts::PI * dyadic_to_f64(&self.alpha, self.m + self.ell)
    }
}

/// alpha(j, k) = {d j + 2^m k}_{2^(m+ell)}.
pub fn alpha_of(d: &BigUint, j: &BigUint, k: &BigUint, m: u32, ell: u32) -> Result<BigInt> {
    if *j >= pow2(m + ell) {
        return Err(Error::Parameter(format!("j = {j} outside [0, 2^{})", m + ell)));
    }
    if *k >= pow2(ell) {
        return Err(Error::Parameter(format!("k = {k} outside [0, 2^{ell})")));
    }
    let raw = BigInt::from(d * j) + (BigInt::from(k.clone()) << (m as usize));
    Ok(signed_residue_pow2(&raw, m + ell))
}

/// zeta(theta, n) = |sum_{b < n} e^(i theta b)|^2, evaluated in the sin^2
/// form; n^2 at theta = 0. Always in [0, n^2].
pub fn zeta(theta: f64, n: u64) -> f64 {
    let nf = n as f64;
    if theta == 0.0 {
        return nf * nf;
    }
    let s = (theta / 2.0).sin();
    let sn = (nf * theta / 2.0).sin();
    ((sn * sn) / (s * s)).clamp(0.0, nf * nf)
}

/// Length of the contiguous range of b in [0, 2^ell) admitting some
/// a in [0, 2^(m+ell)) with e = a - b d. Zero outside the support.
pub fn count_b(e: &BigInt, d: &BigUint, m: u32, ell: u32) -> BigUint {
    let cap = pow2_int(ell) - BigInt::one();
    if d.is_zero() {
        return if !e.is_negative() && *e < pow2_int(m + ell) {
            pow2(ell)
        } else {
            BigUint::zero()
        };
    }
    let d_int = BigInt::from(d.clone());
    let lo = if e.is_negative() {
        // smallest b with e + b d >= 0
        (-e).div_ceil(&d_int)
    } else {
        BigInt::zero()
    };
    let hi_raw = (pow2_int(m + ell) - BigInt::one() - e).div_floor(&d_int);
    let hi = hi_raw.min(cap);
    if hi < lo {
        BigUint::zero()
    } else {
        (hi - lo + BigInt::one()).to_biguint().unwrap()
    }
}

/// 2 pi * {y}_{2^e} / 2^e, the exactly reduced angle of a dyadic rational.
fn reduced_angle(y: &BigInt, e: u32) -> f64 {
    2.0 * std::f64::consts::PI * dyadic_to_f64(&signed_residue_pow2(y, e), e)
}

/// Faulhaber power sums 1^p + ... + M^p for p = 2, 4, 6, 8 in floats.
fn power_sums(mf: f64) -> (f64, f64, f64, f64) {
    let common = mf * (mf + 1.0) * (2.0 * mf + 1.0);
    let a2 = common / 6.0;
    let a4 = common * (3.0 * mf * mf + 3.0 * mf - 1.0) / 30.0;
    let a6 = common * (3.0 * mf.powi(4) + 6.0 * mf.powi(3) - 3.0 * mf + 1.0) / 42.0;
    let a8 = common
        * (5.0 * mf.powi(6) + 15.0 * mf.powi(5) + 5.0 * mf.powi(4) - 15.0 * mf.powi(3)
            - mf * mf
            + 9.0 * mf
            - 3.0)
        / 90.0;
    (a2, a4, a6, a8)
}

/// sum_e zeta(theta, #b(e)) normalized by 2^(m+3 ell); this equals the
/// probability of k given j at alpha = alpha(j, k).
///
/// Closed form: #b(e) = 2^ell for exactly 2^(m+ell) - (2^ell - 1) d values
/// of e, and every n in [1, 2^ell - 1] occurs exactly 2d times (d per tail);
/// the partial sums over n collapse through the Dirichlet kernel. The
/// structure is validated against the brute-force amplitude oracle in tests.
pub fn prob_k_given_j(d: &BigUint, m: u32, ell: u32, alpha: &BigInt) -> f64 {
    debug_assert!(m + 3 * ell <= 900, "desk-scale probability evaluation");
    debug_assert!({
        let half = pow2_int(m + ell - 1);
        *alpha >= -&half && *alpha < half
    });
    let two_l = pow2(ell);
    let full_count = pow2(m + ell) - (&two_l - BigUint::one()) * d;
    // coefficient of the full-width term, normalized by 2^(m+ell)
    let coef_full = dyadic_to_f64(&BigInt::from(full_count), m + ell);
    let coef_tail = dyadic_to_f64(&(BigInt::from(d.clone()) << 1), m + ell);
    let mf = (two_l.to_f64().unwrap_or(f64::INFINITY)) - 1.0; // M = 2^ell - 1
    let scale_2l = 2f64.powi(2 * ell as i32); // 2^(2 ell)

    if alpha.is_zero() {
        // zeta(0, 2^ell) / 2^(2 ell) = 1; tail sum of n^2.
        let (a2, _, _, _) = power_sums(mf);
        return coef_full + coef_tail * (a2 / scale_2l);
    }

    let half_angle = reduced_angle(alpha, m + ell + 1); // theta / 2
    let s = half_angle.sin();
    let s2 = s * s;

    // zeta(theta, 2^ell) / 2^(2 ell): the numerator angle 2^(ell-1) theta
    // reduces to alpha over 2^(m+1).
    let sn = reduced_angle(alpha, m + 1).sin();
    let zeta_full_scaled = ((sn * sn) / (s2 * scale_2l)).clamp(0.0, 1.0);

    // S = sum_{n=1}^{M} zeta(theta, n). |M theta / 2| ~ pi |alpha| / 2^m
    // decides between the kernel difference form and the Taylor form.
    let mx_mag = std::f64::consts::PI * dyadic_to_f64(&alpha.abs(), m);
    let s_sum = if mx_mag < 0.1 {
        // Taylor expansion of sin^2(n x) summed over n; x = theta/2 is tiny
        // here so the reduced angle equals the true angle.
        let x = half_angle;
        let (a2, a4, a6, a8) = power_sums(mf);
        let x2 = x * x;
        let num = a2 * x2 - a4 * x2 * x2 / 3.0 + 2.0 * a6 * x2 * x2 * x2 / 45.0
            - a8 * x2 * x2 * x2 * x2 / 315.0;
        num / s2
    } else {
        // sum sin^2(n x) = M/2 - sin(M x) cos((M+1) x) / (2 sin x)
        let m_big = BigInt::from(&two_l - BigUint::one());
        let mx = reduced_angle(&(&m_big * alpha), m + ell + 1);
        let m1x = reduced_angle(alpha, m + 1); // (M+1) x = 2^ell theta / 2
        let num = mf / 2.0 - (mx.sin() * m1x.cos()) / (2.0 * s);
        (num / s2).max(0.0)
    };

    (coef_full * zeta_full_scaled + coef_tail * (s_sum / scale_2l)).max(0.0)
}

/// P(theta(alpha)): probability of observing one pair (j, k) whose argument
/// is alpha.
pub fn prob_of_angle(d: &BigUint, m: u32, ell: u32, alpha: &BigInt) -> f64 {
    prob_k_given_j(d, m, ell, alpha) * 2f64.powi(-((m + ell) as i32))
}

/// k0(j): the k making alpha(j, k) = d j mod 2^m; equals -floor(d j / 2^m)
/// mod 2^ell.
pub fn k0_of_j(d: &BigUint, j: &BigUint, m: u32, ell: u32) -> Result<BigUint> {
    if *j >= pow2(m + ell) {
        return Err(Error::Parameter(format!("j = {j} outside [0, 2^{})", m + ell)));
    }
    let two_l = pow2(ell);
    let q = (d * j) >> (m as usize);
    let rem = &q % &two_l;
    Ok((&two_l - rem) % &two_l)
}

/// Offset distribution of t = k - k0(j) (mod 2^ell, centered) for a fixed j.
#[derive(Debug, Clone)]
pub struct OffsetDistribution {
    pub j: BigUint,
    pub k0: BigUint,
    pub window: u64,
    /// (t, probability) for t in [-W, W] clipped to the valid offset range,
    /// ascending in t.
    pub entries: Vec<(i64, f64)>,
    pub tail_mass: f64,
}

/// Valid offset range for a given ell: t in [t_min, t_max] inclusive.
pub(crate) fn offset_range(ell: u32) -> (i64, i64) {
    assert!((1..=62).contains(&ell), "desk-scale ell");
    (-(1i64 << (ell - 1)), (1i64 << (ell - 1)) - 1)
}

/// alpha for offset t relative to alpha0 = d j mod 2^m; exact, no reduction
/// needed inside the valid range.
pub(crate) fn alpha_at_offset(alpha0: &BigUint, t: i64, m: u32) -> BigInt {
    BigInt::from(alpha0.clone()) + (BigInt::from(t) << (m as usize))
}

pub fn offset_distribution(
    d: &BigUint,
    j: &BigUint,
    m: u32,
    ell: u32,
    window: u64,
) -> Result<OffsetDistribution> {
    if ell > 62 {
        return Err(Error::Parameter(format!("offset tables need ell <= 62, got {ell}")));
    }
    let max_w = 1u64 << (ell - 1).min(62);
    if window < 1 || window > max_w {
        return Err(Error::Parameter(format!(
            "window must lie in [1, 2^(ell-1)] = [1, {max_w}], got {window}"
        )));
    }
    let (t_min, t_max) = offset_range(ell);
    let lo = (-(window as i64)).max(t_min);
    let hi = (window as i64).min(t_max);
    let k0 = k0_of_j(d, j, m, ell)?;
    let alpha0 = (d * j) % pow2(m);
    let mut entries = Vec::with_capacity((hi - lo + 1) as usize);
    let mut total = 0.0f64;
    for t in lo..=hi {
        let p = prob_k_given_j(d, m, ell, &alpha_at_offset(&alpha0, t, m));
        total += p;
        entries.push((t, p));
    }
    Ok(OffsetDistribution {
        j: j.clone(),
        k0,
        window,
        entries,
        tail_mass: (1.0 - total).max(0.0),
    })
}

impl OffsetDistribution {
    /// The k corresponding to an offset t.
    pub fn k_of_t(&self, t: i64, ell: u32) -> BigUint {
        let two_l = pow2_int(ell);
        let k = (BigInt::from(self.k0.clone()) + BigInt::from(t)).mod_floor(&two_l);
        k.to_biguint().unwrap()
    }

    /// Upper bound psi'(W) on the mass outside the window.
    pub fn tail_bound(&self) -> f64 {
        trigamma(self.window as f64).expect("window is positive")
    }
}

/// Whether |alpha(j, k)| <= 2^(m+tau).
pub fn is_tau_good(d: &BigUint, j: &BigUint, k: &BigUint, m: u32, ell: u32, tau: u32) -> bool {
    debug_assert!(tau <= ell);
    let alpha = alpha_of(d, j, k, m, ell).expect("in-range pair");
    alpha.magnitude() <= &pow2(m + tau)
}

/// Minimal tau in [0, ell] making the pair with argument alpha tau-good.
pub fn min_good_tau(alpha: &BigInt, m: u32) -> u32 {
    let a = alpha.magnitude();
    if a <= &pow2(m) {
        return 0;
    }
    // smallest tau with 2^(m+tau) >= a
    let ceil_log2 = (a - BigUint::one()).bits() as u32;
    ceil_log2.saturating_sub(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        let a = alpha_of(
            &BigUint::from(11u8),
            &BigUint::from(3u8),
            &BigUint::from(5u8),
            4,
            4,
        )
        .unwrap();
        assert_eq!(a, BigInt::from(113));
        let z = alpha_of(&BigUint::from(9u8), &BigUint::zero(), &BigUint::zero(), 4, 4).unwrap();
        assert!(z.is_zero());
        // boundary wrap: d = 1, j = 2^(m+ell-1), k = 0
        let b = alpha_of(&BigUint::one(), &pow2(7), &BigUint::zero(), 4, 4).unwrap();
        assert_eq!(b, -pow2_int(7));
        assert!(alpha_of(&BigUint::one(), &pow2(8), &BigUint::zero(), 4, 4).is_err());
        assert!(alpha_of(&BigUint::one(), &BigUint::zero(), &pow2(4), 4, 4).is_err());
    }

    #[test]
    fn angle_argument_range_and_value() {
        let a = AngleArgument::new(BigInt::from(113), 4, 4).unwrap();
        // theta = 2 pi 113/256, inside [-pi, pi)
        let expect = 2.0 * std::f64::consts::PI * 113.0 / 256.0;
        assert!((a.theta() - expect).abs() < 1e-15);
        assert!(a.theta() < std::f64::consts::PI);
        let b = AngleArgument::new(-pow2_int(7), 4, 4).unwrap();
        assert!((b.theta() + std::f64::consts::PI).abs() < 1e-15);
        assert!(AngleArgument::new(pow2_int(7), 4, 4).is_err());
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(0.0, 4), 16.0);
        assert!(zeta(std::f64::consts::PI, 2) < 1e-20);
        assert!((zeta(std::f64::consts::FRAC_PI_2, 2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_bounded_by_pi_sq_over_theta_sq() {
        for i in 1..=2000 {
            let theta = std::f64::consts::PI * i as f64 / 2000.0;
            for &n in &[1u64, 2, 3, 7, 8, 100] {
                for sign in [-1.0, 1.0] {
                    let th = sign * theta;
                    assert!(
                        zeta(th, n) <= std::f64::consts::PI.powi(2) / (th * th) * (1.0 + 1e-12),
                        "theta={th}, n={n}"
                    );
                }
            }
        }
    }

    /// Exhaustive (a, b) oracle for #b(e).
    fn count_b_oracle(e: i64, d: u64, m: u32, ell: u32) -> u64 {
        let mut c = 0;
        for b in 0..(1u64 << ell) {
            let a = e + (b * d) as i64;
            if a >= 0 && a < (1i64 << (m + ell)) {
                c += 1;
            }
        }
        c
    }

    #[test]
    fn count_b_matches_enumeration() {
        for (e, expect) in [(-2i64, 1u64), (0, 2), (7, 1)] {
            assert_eq!(count_b_oracle(e, 2, 2, 1), expect);
            assert_eq!(
                count_b(&BigInt::from(e), &BigUint::from(2u8), 2, 1),
                BigUint::from(expect)
            );
        }
        for d in 0..6u64 {
            for e in -40i64..40 {
                assert_eq!(
                    count_b(&BigInt::from(e), &BigUint::from(d), 3, 2),
                    BigUint::from(count_b_oracle(e, d, 3, 2)),
                    "d={d}, e={e}"
                );
            }
        }
    }

    #[test]
    fn count_b_total_is_pair_count() {
        // sum_e #b(e) = 2^(m+2 ell): every (a, b) pair contributes once.
        for (m, ell, d) in [(3u32, 2u32, 5u64), (4, 3, 11), (2, 1, 0)] {
            let lo = -(((1i64 << ell) - 1) * d as i64);
            let hi = 1i64 << (m + ell);
            let mut total = BigUint::zero();
            for e in lo..hi {
                total += count_b(&BigInt::from(e), &BigUint::from(d), m, ell);
            }
            assert_eq!(total, pow2(m + 2 * ell));
        }
    }

    #[test]
    fn k0_examples() {
        let k0 = k0_of_j(&BigUint::from(11u8), &BigUint::from(3u8), 4, 4).unwrap();
        assert_eq!(k0, BigUint::from(14u8));
        // defining property via scan
        let d = BigUint::from(11u8);
        let j = BigUint::from(3u8);
        let mut found = None;
        for k in 0u8..16 {
            let a = alpha_of(&d, &j, &BigUint::from(k), 4, 4).unwrap();
            if !a.is_negative() && a < pow2_int(4) && a == BigInt::from((11 * 3) % 16) {
                found = Some(k);
            }
        }
        assert_eq!(found, Some(14));
        assert!(k0_of_j(&BigUint::zero(), &BigUint::from(5u8), 4, 4)
            .unwrap()
            .is_zero());
        assert!(k0_of_j(&BigUint::from(9u8), &BigUint::zero(), 4, 4)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn prob_theta_zero_branch() {
        // closed form at theta = 0 against the explicit expression
        let (m, ell, d) = (3u32, 2u32, 5u64);
        let p = prob_of_angle(&BigUint::from(d), m, ell, &BigInt::zero());
        let two_ml = (1u64 << (m + ell)) as f64;
        let two_l = (1u64 << ell) as f64;
        let sum_sq: f64 = (1..(1u64 << ell)).map(|n| (n * n) as f64).sum();
        let expect = ((two_ml - (two_l - 1.0) * d as f64) * two_l * two_l
            + 2.0 * d as f64 * sum_sq)
            / 2f64.powi(2 * (m + 2 * ell) as i32);
        assert!((p - expect).abs() <= 1e-15);
    }

    #[test]
    fn probabilities_sum_to_one_tiny() {
        for (m, ell, d) in [(3u32, 2u32, 5u64), (4, 2, 9), (3, 3, 0), (4, 3, 6)] {
            let db = BigUint::from(d);
            let mut total = 0.0;
            for j in 0..(1u64 << (m + ell)) {
                for k in 0..(1u64 << ell) {
                    let alpha =
                        alpha_of(&db, &BigUint::from(j), &BigUint::from(k), m, ell).unwrap();
                    total += prob_of_angle(&db, m, ell, &alpha);
                }
            }
            assert!((total - 1.0).abs() < 1e-9, "m={m} ell={ell} d={d}: {total}");
        }
    }

    #[test]
    fn offset_distribution_full_window_sums_to_one() {
        let d = BigUint::from(5u8);
        for j in 0..(1u64 << 5) {
            let dist = offset_distribution(&d, &BigUint::from(j), 3, 2, 2).unwrap();
            let sum: f64 = dist.entries.iter().map(|(_, p)| p).sum();
            assert!((sum - 1.0).abs() < 1e-9, "j={j}");
            assert!(dist.tail_mass < 1e-9);
            assert_eq!(dist.entries.len(), 4);
        }
    }

    #[test]
    fn offset_distribution_tail_bounded() {
        let d = BigUint::from(201u16);
        for j in [0u64, 3, 77, 200, 1021] {
            for w in [1u64, 2, 4, 8] {
                let dist = offset_distribution(&d, &BigUint::from(j), 8, 5, w).unwrap();
                assert!(
                    dist.tail_mass <= dist.tail_bound() + 1e-9,
                    "j={j} w={w}: {} > {}",
                    dist.tail_mass,
                    dist.tail_bound()
                );
            }
        }
    }

    #[test]
    fn offset_mass_within_two_pow_tau() {
        // mass of |t| <= 2^tau is at least 1 - psi'(2^tau), every j, tiny size
        let (m, ell) = (4u32, 3u32);
        let d = BigUint::from(11u8);
        for j in 0..(1u64 << (m + ell)) {
            let dist =
                offset_distribution(&d, &BigUint::from(j), m, ell, 1 << (ell - 1)).unwrap();
            for tau in 0..=ell {
                let lim = 1i64 << tau;
                let mass: f64 = dist
                    .entries
                    .iter()
                    .filter(|(t, _)| t.abs() <= lim)
                    .map(|(_, p)| p)
                    .sum();
                assert!(
                    mass >= 1.0 - trigamma((1u64 << tau) as f64).unwrap() - 1e-9,
                    "j={j} tau={tau}"
                );
            }
        }
    }

    #[test]
    fn offset_peak_at_zero_when_alpha0_vanishes() {
        // pick j with d j = 0 mod 2^m
        let d = BigUint::from(4u8);
        let (m, ell) = (2u32, 3u32);
        let j = BigUint::from(8u8); // d j = 32 = 0 mod 4
        assert!(((&d * &j) % pow2(m)).is_zero());
        let dist = offset_distribution(&d, &j, m, ell, 1 << (ell - 1)).unwrap();
        let p0 = dist.entries.iter().find(|(t, _)| *t == 0).unwrap().1;
        for (t, p) in &dist.entries {
            if *t != 0 {
                assert!(p0 > *p, "t={t}");
            }
        }
    }

    #[test]
    fn offset_rejects_bad_window() {
        let d = BigUint::from(5u8);
        assert!(offset_distribution(&d, &BigUint::one(), 3, 2, 0).is_err());
        assert!(offset_distribution(&d, &BigUint::one(), 3, 2, 3).is_err());
    }

    #[test]
    fn tau_good_examples() {
        let d = BigUint::from(11u8);
        let j = BigUint::from(3u8);
        let k0 = k0_of_j(&d, &j, 4, 4).unwrap();
        assert!(is_tau_good(&d, &j, &k0, 4, 4, 0));
        assert!(!is_tau_good(&d, &j, &BigUint::from(5u8), 4, 4, 0));
        assert!(is_tau_good(&d, &j, &BigUint::from(5u8), 4, 4, 3));
        // tau = ell is always good
        for k in 0u8..16 {
            assert!(is_tau_good(&d, &j, &BigUint::from(k), 4, 4, 4));
        }
    }

    #[test]
    fn min_good_tau_is_minimal() {
        let d = BigUint::from(11u8);
        for j in 0u64..(1 << 8) {
            for k in 0u64..(1 << 4) {
                let alpha = alpha_of(&d, &BigUint::from(j), &BigUint::from(k), 4, 4).unwrap();
                let t = min_good_tau(&alpha, 4);
                assert!(is_tau_good(&d, &BigUint::from(j), &BigUint::from(k), 4, 4, t));
                if t > 0 {
                    assert!(!is_tau_good(&d, &BigUint::from(j), &BigUint::from(k), 4, 4, t - 1));
                }
            }
        }
    }

    #[test]
    fn degenerate_d_zero_concentrates_on_k0() {
        let d = BigUint::zero();
        let (m, ell) = (3u32, 3u32);
        for j in [0u64, 1, 17, 63] {
            let dist =
                offset_distribution(&d, &BigUint::from(j), m, ell, 1 << (ell - 1)).unwrap();
            let p0 = dist.entries.iter().find(|(t, _)| *t == 0).unwrap().1;
            assert!((p0 - 1.0).abs() < 1e-12);
        }
    }
}
