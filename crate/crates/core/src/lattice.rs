//! The two-dimensional lattice attached to an observed j: construction,
//! Lagrange reduction, Babai's nearest plane, enumeration bounds, and
//! t-balancedness.
//!
//! Every decision here is exact: squared norms and determinants are compared
//! as integers, projection coefficients as rationals. Floats only appear in
//! the diagnostic norm accessors.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numutil::{pow2, pow2_int, round_half_up_ratio};

/// The lattice generated by (j, 2^tau) and (2^(m+ell), 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSpec {
    pub j: BigUint,
    pub tau: u32,
    pub m: u32,
    pub ell: u32,
}

impl LatticeSpec {
    pub fn new(j: BigUint, tau: u32, m: u32, ell: u32) -> Result<Self> {
        if j >= pow2(m + ell) {
            return Err(Error::Parameter(format!("j = {j} outside [0, 2^{})", m + ell)));
        }
        Ok(LatticeSpec { j, tau, m, ell })
    }

    pub fn generators(&self) -> ([BigInt; 2], [BigInt; 2]) {
        (
            [BigInt::from(self.j.clone()), pow2_int(self.tau)],
            [pow2_int(self.m + self.ell), BigInt::zero()],
        )
    }

    /// |det| = 2^(m + ell + tau).
    pub fn det_magnitude(&self) -> BigUint {
        pow2(self.m + self.ell + self.tau)
    }
}

fn dot(a: &[BigInt; 2], b: &[BigInt; 2]) -> BigInt {
    &a[0] * &b[0] + &a[1] * &b[1]
}

fn norm_sq(a: &[BigInt; 2]) -> BigInt {
    dot(a, a)
}

fn sub_scaled(a: &[BigInt; 2], r: &BigInt, b: &[BigInt; 2]) -> [BigInt; 2] {
    [&a[0] - r * &b[0], &a[1] - r * &b[1]]
}

/// A Lagrange-reduced basis: s1 a shortest nonzero vector, s2 a shortest one
/// independent of it up to sign, |mu| <= 1/2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBasis {
    s1: [BigInt; 2],
    s2: [BigInt; 2],
    norm1_sq: BigInt,
    norm2_sq: BigInt,
    dot12: BigInt,
    det: BigInt,
    pub tau: u32,
    pub m: u32,
    pub ell: u32,
}

impl ReducedBasis {
    pub fn s1(&self) -> &[BigInt; 2] {
        &self.s1
    }

    pub fn s2(&self) -> &[BigInt; 2] {
        &self.s2
    }

    pub fn norm1_sq(&self) -> &BigInt {
        &self.norm1_sq
    }

    pub fn norm2_sq(&self) -> &BigInt {
        &self.norm2_sq
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// mu = <s1, s2> / |s1|^2 as an exact rational.
    pub fn mu(&self) -> BigRational {
        BigRational::new(self.dot12.clone(), self.norm1_sq.clone())
    }

    // Float diagnostics.
    pub fn lambda1(&self) -> f64 {
        self.norm1_sq.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn lambda2(&self) -> f64 {
        self.norm2_sq.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn lambda2_perp(&self) -> f64 {
        // lambda1 * lambda2_perp = |det|
        self.det.magnitude().to_f64().unwrap_or(f64::INFINITY) / self.lambda1()
    }

    pub fn lambda2_par(&self) -> f64 {
        (self.mu().to_f64().unwrap_or(0.0)).abs() * self.lambda1()
    }

    /// lambda2_perp^2 as an exact rational det^2 / |s1|^2.
    pub fn norm2_perp_sq(&self) -> BigRational {
        BigRational::new(&self.det * &self.det, self.norm1_sq.clone())
    }
}

/// Lagrange (Gauss) reduction with exact integer arithmetic.
///
/// Ties |s1| = |s2| keep the incoming order; s1 is normalized so its first
/// nonzero coordinate is non-negative.
pub fn lagrange_reduce(spec: &LatticeSpec) -> ReducedBasis {
    let (g1, g2) = spec.generators();
    let mut b1 = g1;
    let mut b2 = g2;
    let mut n1 = norm_sq(&b1);
    let mut n2 = norm_sq(&b2);
    if n2 < n1 {
        std::mem::swap(&mut b1, &mut b2);
        std::mem::swap(&mut n1, &mut n2);
    }
    loop {
        let r = round_half_up_ratio(&dot(&b1, &b2), &n1);
        b2 = sub_scaled(&b2, &r, &b1);
        n2 = norm_sq(&b2);
        if n2 < n1 {
            std::mem::swap(&mut b1, &mut b2);
            std::mem::swap(&mut n1, &mut n2);
        } else {
            break;
        }
    }
    // Normalize the sign of s1.
    let flip = if b1[0].is_zero() {
        b1[1].is_negative()
    } else {
        b1[0].is_negative()
    };
    if flip {
        b1 = [-&b1[0], -&b1[1]];
    }
    let dot12 = dot(&b1, &b2);
    let det = &b1[0] * &b2[1] - &b1[1] * &b2[0];
    debug_assert_eq!(det.magnitude(), &spec.det_magnitude());
    // |mu| <= 1/2, i.e. 2 |<s1,s2>| <= |s1|^2.
    debug_assert!((dot12.magnitude() << 1u32) <= n1.magnitude().clone());
    ReducedBasis {
        s1: b1,
        s2: b2,
        norm1_sq: n1,
        norm2_sq: n2,
        dot12,
        det,
        tau: spec.tau,
        m: spec.m,
        ell: spec.ell,
    }
}

/// Babai's nearest plane: the lattice point o = nu1 s1 + nu2 s2 with
/// o - v = delta1 s1 + delta2 s2_perp, |delta_i| <= 1/2.
pub fn babai_nearest_plane(basis: &ReducedBasis, v: &[BigInt; 2]) -> ([BigInt; 2], BigInt, BigInt) {
    // Component along s2_perp: <v, s2_perp> / |s2_perp|^2 as an exact ratio
    // (<v,s2>|s1|^2 - <s1,s2><v,s1>) / det^2.
    let v_s1 = dot(v, basis.s1());
    let v_s2 = dot(v, basis.s2());
    let num = &v_s2 * &basis.norm1_sq - &basis.dot12 * &v_s1;
    let den = &basis.det * &basis.det;
    let nu2 = round_half_up_ratio(&num, &den);
    let v1 = sub_scaled(v, &nu2, basis.s2());
    let nu1 = round_half_up_ratio(&dot(&v1, basis.s1()), &basis.norm1_sq);
    let o = [
        &nu1 * &basis.s1[0] + &nu2 * &basis.s2[0],
        &nu1 * &basis.s1[1] + &nu2 * &basis.s2[1],
    ];
    (o, nu1, nu2)
}

/// Exact (delta1, delta2) of the decomposition o - v = delta1 s1 + delta2 s2_perp.
pub fn babai_offsets(
    basis: &ReducedBasis,
    v: &[BigInt; 2],
    o: &[BigInt; 2],
) -> (BigRational, BigRational) {
    let w = [&o[0] - &v[0], &o[1] - &v[1]];
    let w_s1 = dot(&w, basis.s1());
    let w_s2 = dot(&w, basis.s2());
    // s1 and s2_perp are orthogonal, so the components project independently:
    // delta1 = <w, s1>/|s1|^2, delta2 = <w, s2_perp>/|s2_perp|^2.
    let delta2 = BigRational::new(
        &w_s2 * &basis.norm1_sq - &basis.dot12 * &w_s1,
        &basis.det * &basis.det,
    );
    let delta1 = BigRational::new(w_s1, basis.norm1_sq.clone());
    (delta1, delta2)
}

/// Enumeration half-widths B1 = floor(2^(m+tau) sqrt(2)/lambda1 + 1) and
/// B2 = floor(2^(m+tau) sqrt(2)/lambda2_perp + 1/2), evaluated exactly via
/// integer square roots.
pub fn enum_bounds(basis: &ReducedBasis) -> (BigUint, BigUint) {
    let k = pow2(2 * (basis.m + basis.tau) + 1); // (2^(m+tau) sqrt(2))^2
    let l1 = basis.norm1_sq.magnitude().clone();
    let b1 = (&k / &l1).sqrt() + BigUint::one();
    // B2: largest q with (2q - 1)^2 <= 4 K L1 / det^2 = 8 L1 / 2^(2 ell)
    let det_sq = pow2(2 * (basis.m + basis.ell + basis.tau));
    let ratio = (&k << 2u32) * &l1 / det_sq;
    let b2 = (ratio.sqrt() + BigUint::one()) >> 1u32;
    debug_assert!(!b1.is_zero());
    debug_assert!((&b1 << 1u32) > b2);
    (b1, b2)
}

/// Whether the lattice is t-balanced: lambda1 >= 2^(m-t), compared exactly
/// through squared norms.
pub fn is_t_balanced(basis: &ReducedBasis, t: u32) -> Result<bool> {
    if t >= basis.m {
        return Err(Error::Parameter(format!(
            "need t in [0, m) = [0, {}), got {t}",
            basis.m
        )));
    }
    Ok(*basis.norm1_sq.magnitude() >= pow2(2 * (basis.m - t)))
}

/// Minimal t in [0, m) at which the lattice is t-balanced; returns m when no
/// t in range qualifies (lambda1 < 2).
pub fn min_balanced_t(basis: &ReducedBasis) -> u32 {
    let l1 = basis.norm1_sq.magnitude();
    if l1 >= &pow2(2 * basis.m) {
        return 0;
    }
    // largest e with 2^(2e) <= |s1|^2
    let e = ((l1.bits() - 1) / 2) as u32;
    basis.m - e
}

/// Integer coordinates of `v` in the generator basis of `spec`, when they
/// exist. Test helper for lattice membership.
pub fn generator_coordinates(spec: &LatticeSpec, v: &[BigInt; 2]) -> Option<(BigInt, BigInt)> {
    let two_tau = pow2_int(spec.tau);
    let (a, rem) = v[1].div_rem(&two_tau);
    if !rem.is_zero() {
        return None;
    }
    let rest = &v[0] - &a * BigInt::from(spec.j.clone());
    let two_ml = pow2_int(spec.m + spec.ell);
    let (b, rem2) = rest.div_rem(&two_ml);
    if !rem2.is_zero() {
        return None;
    }
    Some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::RandBigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn spec(j: u64, tau: u32, m: u32, ell: u32) -> LatticeSpec {
        LatticeSpec::new(BigUint::from(j), tau, m, ell).unwrap()
    }

    #[test]
    fn degenerate_j_zero() {
        let b = lagrange_reduce(&spec(0, 0, 4, 3));
        assert_eq!(b.s1(), &[BigInt::zero(), BigInt::one()]);
        assert_eq!(b.norm1_sq(), &BigInt::one());
        // lambda1 = 2^tau in general at j = 0
        let b2 = lagrange_reduce(&spec(0, 3, 4, 3));
        assert_eq!(b2.norm1_sq(), &BigInt::from(64));
    }

    #[test]
    fn shortest_vector_matches_brute_force_small() {
        // enumerate all integer combinations of the generators
        for (j, tau, m, ell) in [(3u64, 0u32, 2u32, 2u32), (7, 1, 2, 2), (11, 2, 3, 2), (6, 0, 3, 3)] {
            let sp = spec(j, tau, m, ell);
            let b = lagrange_reduce(&sp);
            let (g1, g2) = sp.generators();
            let lim = 1i64 << (m + ell);
            let mut best: Option<BigInt> = None;
            for w in -lim..=lim {
                for z in -lim..=lim {
                    if w == 0 && z == 0 {
                        continue;
                    }
                    let v = [
                        BigInt::from(w) * &g1[0] + BigInt::from(z) * &g2[0],
                        BigInt::from(w) * &g1[1] + BigInt::from(z) * &g2[1],
                    ];
                    let n = norm_sq(&v);
                    if best.as_ref().is_none_or(|b| n < *b) {
                        best = Some(n);
                    }
                }
            }
            assert_eq!(best.unwrap(), *b.norm1_sq(), "j={j} tau={tau}");
        }
    }

    #[test]
    fn reduction_invariants_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let m = rng.gen_range(2u32..10);
            let ell = rng.gen_range(1u32..=m.min(8));
            let tau = rng.gen_range(0u32..=ell);
            let j = rng.gen_biguint_below(&pow2(m + ell));
            let sp = LatticeSpec::new(j, tau, m, ell).unwrap();
            let b = lagrange_reduce(&sp);
            // determinant preserved exactly
            assert_eq!(b.det().magnitude(), &sp.det_magnitude());
            // |mu| <= 1/2
            let mu = b.mu();
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            assert!(mu.abs() <= half);
            // lambda1 <= lambda2, and lambda2_perp^2 >= 3 lambda2^2 / 4
            assert!(b.norm1_sq() <= b.norm2_sq());
            let lhs = BigInt::from(4) * b.det() * b.det();
            let rhs = BigInt::from(3) * b.norm1_sq() * b.norm2_sq();
            assert!(lhs >= rhs);
            // second components divisible by 2^tau
            let t = pow2_int(tau);
            assert!(b.s1()[1].is_multiple_of(&t));
            assert!(b.s2()[1].is_multiple_of(&t));
            // both vectors lie in the lattice
            assert!(generator_coordinates(&sp, b.s1()).is_some());
            assert!(generator_coordinates(&sp, b.s2()).is_some());
            // s1 sign convention
            let first_nonzero = if b.s1()[0].is_zero() { &b.s1()[1] } else { &b.s1()[0] };
            assert!(!first_nonzero.is_negative());
        }
    }

    #[test]
    fn babai_examples_and_bounds() {
        let sp = spec(13, 1, 4, 3);
        let b = lagrange_reduce(&sp);
        // a lattice vector maps to itself
        let (g1, _) = sp.generators();
        let (o, _, _) = babai_nearest_plane(&b, &g1);
        assert_eq!(o, g1);
        let (d1, d2) = babai_offsets(&b, &g1, &o);
        assert!(d1.is_zero() && d2.is_zero());

        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for _ in 0..10_000 {
            let m = rng.gen_range(2u32..9);
            let ell = rng.gen_range(1u32..=m.min(6));
            let tau = rng.gen_range(0u32..=ell);
            let j = rng.gen_biguint_below(&pow2(m + ell));
            let basis = lagrange_reduce(&LatticeSpec::new(j, tau, m, ell).unwrap());
            let vx = rng.gen_bigint(12);
            let vy = rng.gen_bigint(12);
            let v = [vx, vy];
            let (o, nu1, nu2) = babai_nearest_plane(&basis, &v);
            let rebuilt = [
                &nu1 * &basis.s1()[0] + &nu2 * &basis.s2()[0],
                &nu1 * &basis.s1()[1] + &nu2 * &basis.s2()[1],
            ];
            assert_eq!(o, rebuilt);
            let (d1, d2) = babai_offsets(&basis, &v, &o);
            assert!(d1.abs() <= half, "delta1 = {d1}");
            assert!(d2.abs() <= half, "delta2 = {d2}");
        }
    }

    #[test]
    fn babai_tie_boundary_accepted() {
        // v chosen so the projection lands exactly on a half-integer
        let sp = spec(0, 0, 2, 2);
        let b = lagrange_reduce(&sp); // s1 = (0,1), s2 = (16,0)
        let (o, _, _) = babai_nearest_plane(&b, &[BigInt::from(8), BigInt::zero()]);
        let (d1, d2) = babai_offsets(&b, &[BigInt::from(8), BigInt::zero()], &o);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        assert!(d1.abs() <= half && d2.abs() <= half);
        assert!(d2.abs() == half || d1.abs() == half);
    }

    #[test]
    fn enum_bounds_formula_cases() {
        // lambda1 = 2^(m+tau) gives B1 = floor(sqrt(2) + 1) = 2
        // realized with j = 0, tau = ell = m (lambda1 = 2^tau = 2^m ... need
        // tau = m, so pick m = ell = tau = 3 and check through the formula)
        let sp = spec(0, 3, 3, 3);
        let b = lagrange_reduce(&sp);
        assert_eq!(b.norm1_sq(), &BigInt::from(64)); // lambda1 = 8 = 2^tau
        let (b1, _) = enum_bounds(&b);
        // 2^(m+tau) sqrt(2) / lambda1 = 2^6 sqrt2 / 2^3 = 8 sqrt2 -> floor + 1 = 12
        assert_eq!(b1, BigUint::from(12u8));
    }

    #[test]
    fn enum_bounds_invariants_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let m = rng.gen_range(2u32..10);
            let ell = rng.gen_range(1u32..=m.min(8));
            let tau = rng.gen_range(0u32..=ell);
            let j = rng.gen_biguint_below(&pow2(m + ell));
            let basis = lagrange_reduce(&LatticeSpec::new(j, tau, m, ell).unwrap());
            let (b1, b2) = enum_bounds(&basis);
            assert!(b1 >= BigUint::one());
            assert!((&b1 << 1u32) > b2);
            // floating-point cross-check
            let target = 2f64.powi((m + tau) as i32) * 2f64.sqrt();
            let b1f = (target / basis.lambda1() + 1.0).floor();
            let b2f = (target / basis.lambda2_perp() + 0.5).floor();
            assert!((b1.to_f64().unwrap() - b1f).abs() <= 1.0, "B1 vs float");
            assert!((b2.to_f64().unwrap() - b2f).abs() <= 1.0, "B2 vs float");
        }
    }

    #[test]
    fn balanced_examples() {
        // j = 0: lambda1 = 2^tau, balanced iff tau >= m - t
        for tau in 0..=3u32 {
            let b = lagrange_reduce(&spec(0, tau, 4, 3));
            for t in 0..4u32 {
                assert_eq!(is_t_balanced(&b, t).unwrap(), tau >= 4 - t, "tau={tau} t={t}");
            }
        }
        let b = lagrange_reduce(&spec(5, 1, 4, 3));
        assert!(is_t_balanced(&b, 5).is_err());
        // monotone in t
        let mut prev = false;
        for t in 0..4 {
            let cur = is_t_balanced(&b, t).unwrap();
            assert!(!prev || cur);
            prev = cur;
        }
        // min_balanced_t consistency
        let tb = min_balanced_t(&b);
        if tb < 4 {
            assert!(is_t_balanced(&b, tb).unwrap());
            if tb > 0 {
                assert!(!is_t_balanced(&b, tb - 1).unwrap());
            }
        }
    }

    #[test]
    fn not_balanced_fraction_bounded_exhaustive() {
        // at m = 6, delta = 0, tau = 2, t = 2 the fraction of j with
        // lambda1 < 2^(m-t) is at most 2^(delta - 2(t-1) - tau) = 2^-4
        let (m, ell, tau, t) = (6u32, 6u32, 2u32, 2u32);
        let total = 1u64 << (m + ell);
        let mut bad = 0u64;
        for j in 0..total {
            let b = lagrange_reduce(&spec(j, tau, m, ell));
            if !is_t_balanced(&b, t).unwrap() {
                bad += 1;
            }
        }
        assert!((bad as f64) / (total as f64) <= 2f64.powi(-4));
    }
}
