//! Recovery of the logarithm from a single pair (j, k): Babai offset plus a
//! two-stage meet-in-the-middle enumeration over the B1 x B2 grid, with
//! strict operation accounting, and a naive grid enumeration used as an
//! oracle by the test suites.

use std::collections::HashMap;

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::lattice::{
    babai_nearest_plane, enum_bounds, lagrange_reduce, min_balanced_t, LatticeSpec, ReducedBasis,
};
use crate::numutil::{pow2, pow2_int, round_half_up, signed_residue_pow2};

/// Post-processing knobs.
#[derive(Debug, Clone)]
pub struct RecoveryParams {
    pub tau: u32,
    /// Table/work balance: a factor c fewer table entries for a factor c
    /// more second-stage work.
    pub c: u64,
    /// Require recovered candidates to lie in [0, 2^m).
    pub verify_range: bool,
}

impl RecoveryParams {
    pub fn new(tau: u32, c: u64) -> Self {
        RecoveryParams {
            tau,
            c,
            verify_range: true,
        }
    }
}

/// Outcome of one recovery session, with exact accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryReport {
    pub found: Option<BigInt>,
    pub group_ops_used: u64,
    pub table_entries: u64,
    pub b1: u64,
    pub b2: u64,
    /// First-stage stride n = c round(sqrt(B1/(B2+1))).
    pub stride: u64,
    pub tau: u32,
    pub c: u64,
    /// Whether the recovered d makes (j, k) tau-good; only set on success.
    pub tau_good: Option<bool>,
    /// Minimal t at which the lattice was balanced (m when none).
    pub t_balanced_at: u32,
}

impl Serialize for RecoveryReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RecoveryReport", 9)?;
        st.serialize_field("found", &self.found.is_some())?;
        match &self.found {
            Some(d) => st.serialize_field("d", &d.to_string())?,
            None => st.skip_field("d")?,
        }
        st.serialize_field("ops", &self.group_ops_used.to_string())?;
        st.serialize_field("table", &self.table_entries.to_string())?;
        st.serialize_field("B1", &self.b1.to_string())?;
        st.serialize_field("B2", &self.b2.to_string())?;
        st.serialize_field("n", &self.stride.to_string())?;
        st.serialize_field("tau", &self.tau.to_string())?;
        st.serialize_field("c", &self.c.to_string())?;
        st.end()
    }
}

/// Geometry shared by the searches: reduced basis, target vector, Babai
/// coordinates, enumeration bounds, and the scaled second components.
#[derive(Debug, Clone)]
pub struct RecoveryGeometry {
    pub basis: ReducedBasis,
    pub v: [BigInt; 2],
    pub nu1: BigInt,
    pub nu2: BigInt,
    pub b1: u64,
    pub b2: u64,
    /// s_{1,2} / 2^tau and s_{2,2} / 2^tau; integers by construction.
    pub s1: BigInt,
    pub s2: BigInt,
    pub mu: BigRational,
}

pub fn recovery_geometry(
    j: &BigUint,
    k: &BigUint,
    m: u32,
    ell: u32,
    tau: u32,
) -> Result<RecoveryGeometry> {
    if tau > ell {
        return Err(Error::Parameter(format!("need tau <= ell = {ell}, got {tau}")));
    }
    if *k >= pow2(ell) {
        return Err(Error::Parameter(format!("k = {k} outside [0, 2^{ell})")));
    }
    let spec = LatticeSpec::new(j.clone(), tau, m, ell)?;
    let basis = lagrange_reduce(&spec);
    let vx = signed_residue_pow2(&-(BigInt::from(k.clone()) << (m as usize)), m + ell);
    let v = [vx, BigInt::zero()];
    let (_, nu1, nu2) = babai_nearest_plane(&basis, &v);
    let (b1_big, b2_big) = enum_bounds(&basis);
    let b1 = b1_big
        .to_u64()
        .ok_or_else(|| Error::Parameter("B1 exceeds the desk-scale limit".into()))?;
    let b2 = b2_big
        .to_u64()
        .ok_or_else(|| Error::Parameter("B2 exceeds the desk-scale limit".into()))?;
    let two_tau = pow2_int(tau);
    let s1 = &basis.s1()[1] / &two_tau;
    let s2 = &basis.s2()[1] / &two_tau;
    let mu = basis.mu();
    Ok(RecoveryGeometry {
        basis,
        v,
        nu1,
        nu2,
        b1,
        b2,
        s1,
        s2,
        mu,
    })
}

/// Search outcome plus accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub found: Option<BigInt>,
    pub ops: u64,
    pub table_entries: u64,
    pub stride: u64,
}

fn round_mu_times(mu: &BigRational, f: i64) -> BigInt {
    round_half_up(&(mu * BigRational::from_integer(BigInt::from(f))))
}

/// Stride n = c round(sqrt(B1 / (B2 + 1))), rounded half-up exactly:
/// the largest q with (2q - 1)^2 (B2 + 1) <= 4 B1.
fn stride(b1: u64, b2: u64, c: u64) -> u64 {
    let four_b1 = BigUint::from(b1) << 2u32;
    let q = ((four_b1 / BigUint::from(b2 + 1)).sqrt() + BigUint::one()) >> 1u32;
    let q = q.to_u64().expect("q <= 2 sqrt(B1)");
    debug_assert!(q >= 1);
    c * q
}

struct Accept<'a> {
    ctx: &'a GroupContext,
    g: &'a GroupElement,
    x: &'a GroupElement,
    range_limit: Option<BigInt>,
}

impl Accept<'_> {
    /// Final verification, outside the operation budget: g^cand = x and,
    /// when range checking is on, 0 <= cand < 2^m.
    fn accepts(&self, cand: &BigInt) -> Result<bool> {
        if let Some(limit) = &self.range_limit {
            if cand.is_negative() || cand >= limit {
                return Ok(false);
            }
        }
        Ok(self.ctx.pow(self.g, cand)? == *self.x)
    }
}

/// Two-stage meet-in-the-middle search over the enumeration grid.
///
/// Stage one tables g^(n i s1) for |i| <= ceil(B1/n); stage two scans
/// g^((nu1 + i - round(j mu)) s1 + (nu2 +- j) s2) x^-1 looking it up in the
/// table. Only the accumulator updates are counted; the handful of fixed
/// elements is pre-computed. The drift round(j mu) moves by -1, 0 or 1 per
/// step (|mu| <= 1/2), with the negative branch's drift tracked by its own
/// exact rounding so the accumulator invariants hold even at rounding ties.
#[allow(clippy::too_many_arguments)]
pub fn meet_in_the_middle(
    ctx: &GroupContext,
    g: &GroupElement,
    x: &GroupElement,
    nu1: &BigInt,
    nu2: &BigInt,
    b1: u64,
    b2: u64,
    s1: &BigInt,
    s2: &BigInt,
    mu: &BigRational,
    c: u64,
    verify_range: Option<u32>,
) -> Result<SearchOutcome> {
    if c == 0 {
        return Err(Error::Parameter("c must be a positive integer".into()));
    }
    if b1 < 1 || 2 * b1 <= b2 {
        return Err(Error::Parameter(format!(
            "enumeration bounds must satisfy B1 >= 1 and 2 B1 > B2, got ({b1}, {b2})"
        )));
    }
    let accept = Accept {
        ctx,
        g,
        x,
        range_limit: verify_range.map(pow2_int),
    };

    // Pre-computed elements (uncounted).
    let g1 = ctx.pow(g, s1)?;
    let g2 = ctx.pow(g, s2)?;
    let g1_inv = ctx.inv(&g1)?;
    let g2_inv = ctx.inv(&g2)?;
    let x_inv = ctx.inv(x)?;
    let w = ctx.mul_uncounted(
        &ctx.mul_uncounted(&ctx.pow(&g1, nu1)?, &ctx.pow(&g2, nu2)?)?,
        &x_inv,
    )?;
    let n = stride(b1, b2, c);
    let s = ctx.pow(&g1, &BigInt::from(n))?;
    let s_inv = ctx.inv(&s)?;
    let up_fwd = ctx.mul_uncounted(&g2, &g1)?; // g2 g1
    let up_bwd = ctx.mul_uncounted(&g2, &g1_inv)?; // g2 g1^-1
    let dn_fwd = ctx.mul_uncounted(&g2_inv, &g1)?; // g2^-1 g1
    let dn_bwd = ctx.mul_uncounted(&g2_inv, &g1_inv)?; // g2^-1 g1^-1

    let ops_start = ctx.group_ops();

    // Stage one: table of i indexed by g^(i n s1).
    let n_half = b1.div_ceil(n); // ceil(B1 / n)
    let mut table: HashMap<BigUint, Vec<i64>> = HashMap::new();
    let insert = |key: &GroupElement, val: i64, table: &mut HashMap<BigUint, Vec<i64>>| {
        table.entry(key.residue().clone()).or_default().push(val);
    };
    insert(&ctx.one(), 0, &mut table);
    let mut z_pos = s.clone();
    let mut z_neg = s_inv.clone();
    let mut i = 1u64;
    loop {
        insert(&z_pos, i as i64, &mut table);
        insert(&z_neg, -(i as i64), &mut table);
        i += 1;
        if i > n_half {
            break;
        }
        z_pos = ctx.mul(&z_pos, &s)?;
        z_neg = ctx.mul(&z_neg, &s_inv)?;
    }
    let table_entries = 2 * n_half + 1;

    // Stage two.
    let mut z_pos = w.clone();
    let mut z_neg = w;
    let mut jj = 0u64;
    let mut round_pos_prev = BigInt::zero(); // round((jj) mu) at jj
    let mut round_neg_prev = BigInt::zero(); // round(-(jj) mu)
    let candidate = |i: u64, jj: i64, drift: &BigInt, k_idx: i64| -> BigInt {
        (nu1 + BigInt::from(i) - drift - BigInt::from(k_idx) * BigInt::from(n)) * s1
            + (nu2 + BigInt::from(jj)) * s2
    };
    // Hits whose grid coefficient i - k n falls outside [-B1, B1] are
    // skipped: the table's stride coverage overshoots the radius by up to
    // n - 1, and the search must visit exactly the enumeration grid.
    let in_grid = |i: u64, k_idx: i64| -> bool {
        let m1 = i as i128 - k_idx as i128 * n as i128;
        m1.unsigned_abs() <= b1 as u128
    };
    let outcome = 'outer: loop {
        let mut zp = z_pos.clone();
        let mut zn = z_neg.clone();
        let mut i = 0u64;
        loop {
            if let Some(hits) = table.get(zp.residue()) {
                for &k_idx in hits {
                    if !in_grid(i, k_idx) {
                        continue;
                    }
                    let cand = candidate(i, jj as i64, &round_pos_prev, k_idx);
                    if accept.accepts(&cand)? {
                        break 'outer Some(cand);
                    }
                }
            }
            if jj > 0 {
                if let Some(hits) = table.get(zn.residue()) {
                    for &k_idx in hits {
                        if !in_grid(i, k_idx) {
                            continue;
                        }
                        let cand = candidate(i, -(jj as i64), &round_neg_prev, k_idx);
                        if accept.accepts(&cand)? {
                            break 'outer Some(cand);
                        }
                    }
                }
            }
            i += 1;
            if i >= n {
                break;
            }
            zp = ctx.mul(&zp, &g1)?;
            zn = ctx.mul(&zn, &g1)?;
        }
        jj += 1;
        if jj > b2 {
            break None;
        }
        // Drift updates; both deltas are in {-1, 0, 1}.
        let round_pos = round_mu_times(mu, jj as i64);
        let round_neg = round_mu_times(mu, -(jj as i64));
        let delta_pos = &round_pos - &round_pos_prev;
        let delta_neg = &round_neg - &round_neg_prev;
        debug_assert!(delta_pos.abs() <= BigInt::one());
        debug_assert!(delta_neg.abs() <= BigInt::one());
        z_pos = if delta_pos.is_negative() {
            ctx.mul(&z_pos, &up_fwd)?
        } else if delta_pos.is_positive() {
            ctx.mul(&z_pos, &up_bwd)?
        } else {
            ctx.mul(&z_pos, &g2)?
        };
        z_neg = if delta_neg.is_negative() {
            ctx.mul(&z_neg, &dn_fwd)?
        } else if delta_neg.is_positive() {
            ctx.mul(&z_neg, &dn_bwd)?
        } else {
            ctx.mul(&z_neg, &g2_inv)?
        };
        round_pos_prev = round_pos;
        round_neg_prev = round_neg;
    };
    let ops = ctx.group_ops() - ops_start;

    // Work and table never exceed 8 c sqrt(B1 (B2 + 1)) and
    // 8 sqrt(B1 (B2 + 1)) / c + 3; compared exactly.
    debug_assert!({
        let budget = BigUint::from(64u8) * BigUint::from(c) * BigUint::from(c)
            * BigUint::from(b1)
            * BigUint::from(b2 + 1);
        BigUint::from(ops) * BigUint::from(ops) <= budget
    });
    debug_assert!({
        let lhs = BigUint::from(table_entries.saturating_sub(3)) * BigUint::from(c);
        &lhs * &lhs <= BigUint::from(64u8) * BigUint::from(b1) * BigUint::from(b2 + 1)
    });

    Ok(SearchOutcome {
        found: outcome,
        ops,
        table_entries,
        stride: n,
    })
}

/// Tests every grid point directly with one exponentiation each; the oracle
/// the meet-in-the-middle search is checked against.
#[allow(clippy::too_many_arguments)]
pub fn naive_enumerate(
    ctx: &GroupContext,
    g: &GroupElement,
    x: &GroupElement,
    nu1: &BigInt,
    nu2: &BigInt,
    b1: u64,
    b2: u64,
    s1: &BigInt,
    s2: &BigInt,
    mu: &BigRational,
    verify_range: Option<u32>,
) -> Result<(Option<BigInt>, u64)> {
    let accept = Accept {
        ctx,
        g,
        x,
        range_limit: verify_range.map(pow2_int),
    };
    let mut visited = 0u64;
    for m2 in -(b2 as i64)..=(b2 as i64) {
        let drift = round_mu_times(mu, m2);
        for m1 in -(b1 as i64)..=(b1 as i64) {
            visited += 1;
            let cand = (nu1 + BigInt::from(m1) - &drift) * s1 + (nu2 + BigInt::from(m2)) * s2;
            if accept.accepts(&cand)? {
                return Ok((Some(cand), visited));
            }
        }
    }
    Ok((None, visited))
}

/// Full recovery from one pair (j, k): lattice construction, reduction,
/// Babai, bounds, and the meet-in-the-middle search. `not-found` is a value;
/// the report always carries exact accounting.
#[allow(clippy::too_many_arguments)]
pub fn recover_d(
    ctx: &GroupContext,
    g: &GroupElement,
    x: &GroupElement,
    j: &BigUint,
    k: &BigUint,
    m: u32,
    ell: u32,
    params: &RecoveryParams,
) -> Result<RecoveryReport> {
    let geom = recovery_geometry(j, k, m, ell, params.tau)?;
    let verify_range = params.verify_range.then_some(m);
    let search = meet_in_the_middle(
        ctx,
        g,
        x,
        &geom.nu1,
        &geom.nu2,
        geom.b1,
        geom.b2,
        &geom.s1,
        &geom.s2,
        &geom.mu,
        params.c,
        verify_range,
    )?;
    let tau_good = search
        .found
        .as_ref()
        .filter(|d| !d.is_negative())
        .map(|d| crate::distribution::is_tau_good(d.magnitude(), j, k, m, ell, params.tau));
    Ok(RecoveryReport {
        found: search.found,
        group_ops_used: search.ops,
        table_entries: search.table_entries,
        b1: geom.b1,
        b2: geom.b2,
        stride: search.stride,
        tau: params.tau,
        c: params.c,
        tau_good,
        t_balanced_at: min_balanced_t(&geom.basis),
    })
}
