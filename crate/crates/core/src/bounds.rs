//! Success lower bound and enumeration work bound for single-run recovery,
//! parameter optimization against a target probability, and the derived
//! tables (general, safe-prime Diffie-Hellman, RSA).

use num::bigint::BigUint;
use num::One;

use crate::error::{Error, Result};
use crate::numutil::log2_big;

/// N = 2^(delta + tau + 1) + 2^(tau + t + 2) + 2, the cap on B1 (B2 + 1).
pub fn n_param(delta: u32, tau: u32, t: u32) -> BigUint {
    (BigUint::one() << (delta + tau + 1) as usize)
        + (BigUint::one() << (tau + t + 2) as usize)
        + BigUint::from(2u8)
}

/// max(0, 1 - 2^-tau - 2^-2tau/2 - 2^-3tau/6) * max(0, 1 - 2^(delta - 2(t-1) - tau)).
pub fn success_lower_bound(delta: u32, tau: u32, t: u32) -> f64 {
    let tf = tau as f64;
    let first = 1.0 - ((-tf).exp2() + (-2.0 * tf - 1.0).exp2() + (-3.0 * tf).exp2() / 6.0);
    let expo = delta as f64 - 2.0 * (t as f64 - 1.0) - tf;
    let second = 1.0 - expo.exp2();
    first.max(0.0) * second.max(0.0)
}

/// 3 + log2(c) + log2(N) / 2.
pub fn work_log2(delta: u32, tau: u32, t: u32, c: u64) -> f64 {
    assert!(c >= 1);
    3.0 + (c as f64).log2() + 0.5 * log2_big(&n_param(delta, tau, t))
}

/// The work bound rounded UP to one decimal, returned in tenths (22.1 ->
/// 221). Near a decimal boundary the comparison falls back to exact integer
/// arithmetic ((c^2 N)^5 against a power of two), so the displayed value is
/// the true ceiling, not the floating-point one.
pub fn work_display_tenths(n: &BigUint, c: u64) -> i64 {
    let m = BigUint::from(c) * BigUint::from(c) * n;
    let w10 = 30.0 + 5.0 * log2_big(&m);
    let q = w10.round();
    if (w10 - q).abs() < 1e-6 {
        // work*10 > q iff (c^2 N)^5 > 2^(q - 30)
        let qi = q as i64;
        debug_assert!(qi > 30);
        let lhs = m.pow(5u32);
        let rhs = BigUint::one() << (qi - 30) as usize;
        if lhs > rhs {
            qi + 1
        } else {
            qi
        }
    } else {
        w10.ceil() as i64
    }
}

/// Lookup-table size bound 8 sqrt(N) / c + 3.
pub fn table_size_bound(n: &BigUint, c: u64) -> f64 {
    8.0 * 2f64.powf(log2_big(n) / 2.0) / c as f64 + 3.0
}

/// One evaluated parameter point; the unit of the bound tables.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub delta: u32,
    pub tau: u32,
    pub t: u32,
    pub c: u64,
    pub success_lb: f64,
    pub n: BigUint,
    pub work_log2: f64,
    /// Work rounded up at one decimal, in tenths.
    pub work_tenths: i64,
    pub table_size_bound: f64,
}

pub fn bound_row(delta: u32, tau: u32, t: u32, c: u64) -> BoundRow {
    let n = n_param(delta, tau, t);
    BoundRow {
        delta,
        tau,
        t,
        c,
        success_lb: success_lower_bound(delta, tau, t),
        work_log2: work_log2(delta, tau, t, c),
        work_tenths: work_display_tenths(&n, c),
        table_size_bound: table_size_bound(&n, c),
        n,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub tau_max: u32,
    pub t_max: u32,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            tau_max: 64,
            t_max: 64,
        }
    }
}

/// The (tau, t) meeting `target` with minimal work; ties go to smaller tau,
/// then smaller t. Work is compared exactly through N (c is fixed), so the
/// minimization never trips over float rounding. `None` when no pair within
/// the limits reaches the target.
pub fn optimize_params(
    delta: u32,
    target: f64,
    c: u64,
    limits: SearchLimits,
) -> Option<BoundRow> {
    optimize_params_with_factor(delta, target, 1.0, c, limits)
}

/// Optimization with an external success reduction factor: the constraint
/// becomes success_lower_bound * factor >= target.
pub fn optimize_params_with_factor(
    delta: u32,
    target: f64,
    factor: f64,
    c: u64,
    limits: SearchLimits,
) -> Option<BoundRow> {
    assert!(target > 0.0 && target < 1.0, "target must lie in (0, 1)");
    let mut best: Option<(BigUint, u32, u32)> = None;
    for tau in 0..=limits.tau_max {
        for t in 0..=limits.t_max {
            if success_lower_bound(delta, tau, t) * factor < target {
                continue;
            }
            let n = n_param(delta, tau, t);
            if best.as_ref().is_none_or(|(bn, _, _)| n < *bn) {
                best = Some((n, tau, t));
            }
        }
    }
    best.map(|(_, tau, t)| bound_row(delta, tau, t, c))
}

/// One safe-prime Diffie-Hellman comparison row: quantum group operations
/// for the single-run algorithm against the classic order-finding approach.
#[derive(Debug, Clone, PartialEq)]
pub struct FfdhRow {
    pub l: u32,
    pub z: u32,
    pub m: u32,
    pub ops_single_run: u64,
    pub ops_order_finding: u64,
    /// Advantage rounded half-up at one decimal, in tenths.
    pub advantage_tenths: i64,
    pub row: BoundRow,
}

/// m = 2z; ops are m + 2 ell = 3m - 2 delta versus 2(l - 1) - delta.
pub fn ffdh_row(l: u32, z: u32, delta: u32, tau: u32, t: u32) -> FfdhRow {
    let m = 2 * z;
    let ops_single_run = (3 * m - 2 * delta) as u64;
    let ops_order_finding = (2 * (l - 1) - delta) as u64;
    // round-half-up of 10 * ops_s / ops_eh, exactly in integers
    let advantage_tenths =
        ((20 * ops_order_finding + ops_single_run) / (2 * ops_single_run)) as i64;
    FfdhRow {
        l,
        z,
        m,
        ops_single_run,
        ops_order_finding,
        advantage_tenths,
        row: bound_row(delta, tau, t, 1),
    }
}

/// Probability reduction factors f(delta) for random-generator RSA groups;
/// consumed as constants.
pub const RSA_REDUCTION_FACTORS: &[(u32, f64)] = &[
    (9, 0.9288),
    (10, 0.95817),
    (13, 0.99200),
    (17, 0.999208),
    (20, 0.999867),
    (21, 0.9999278),
];

pub fn rsa_reduction_factor(delta: u32) -> Option<f64> {
    RSA_REDUCTION_FACTORS
        .iter()
        .find(|(d, _)| *d == delta)
        .map(|(_, f)| *f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsaRow {
    pub delta: u32,
    pub factor: f64,
    pub target: f64,
    /// None when the target is infeasible for this delta and factor.
    pub row: Option<BoundRow>,
}

/// For each (delta, f) entry and each target, optimize (tau, t) so that
/// success_lower_bound * f >= target, minimizing work.
pub fn rsa_rows(entries: &[(u32, f64)], targets: &[f64], c: u64) -> Vec<RsaRow> {
    let limits = SearchLimits::default();
    let mut out = Vec::new();
    for &(delta, factor) in entries {
        for &target in targets {
            out.push(RsaRow {
                delta,
                factor,
                target,
                row: optimize_params_with_factor(delta, target, factor, c, limits),
            });
        }
    }
    out
}

/// Parameter schedule in m for the asymptotic regime.
#[derive(Debug, Clone, Copy)]
pub struct ParamSchedule {
    pub tau: fn(u32) -> u32,
    pub delta: fn(u32) -> u32,
    pub t: fn(u32) -> u32,
}

impl ParamSchedule {
    /// tau = ceil(log2 m), delta = t = 2.
    pub fn default_log() -> Self {
        fn tau(m: u32) -> u32 {
            32 - (m - 1).leading_zeros()
        }
        fn two(_: u32) -> u32 {
            2
        }
        ParamSchedule {
            tau,
            delta: two,
            t: two,
        }
    }
}

const GUARD_SLOPE: f64 = 4.0;
const GUARD_OFFSET: f64 = 16.0;

/// Evaluates the bound along `m_list` under `schedule`. Schedules whose work
/// outgrows the polynomial guard (work_log2 > 4 log2 m + 16 at any listed m)
/// are rejected.
pub fn asymptotic_check(
    m_list: &[u32],
    schedule: &ParamSchedule,
    c: u64,
) -> Result<Vec<(u32, f64)>> {
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        if m < 2 {
            return Err(Error::Parameter("m must be at least 2".into()));
        }
        let (tau, delta, t) = ((schedule.tau)(m), (schedule.delta)(m), (schedule.t)(m));
        let work = work_log2(delta, tau, t, c);
        let cap = GUARD_SLOPE * (m as f64).log2() + GUARD_OFFSET;
        if work > cap {
            return Err(Error::Parameter(format!(
                "schedule fails the polynomial-work guard at m = {m}: work {work:.1} > {cap:.1}"
            )));
        }
        rows.push((m, success_lower_bound(delta, tau, t)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numutil::trigamma;

    #[test]
    fn success_bound_examples() {
        assert!(success_lower_bound(0, 14, 2) >= 1.0 - 1e-4);
        assert_eq!(success_lower_bound(5, 0, 3), 0.0); // first factor clamps
        assert!(success_lower_bound(0, 34, 2) >= 1.0 - 1e-10);
    }

    #[test]
    fn success_bound_monotone() {
        for delta in [0u32, 10, 30] {
            for tau in 1..30 {
                for t in 1..20 {
                    let here = success_lower_bound(delta, tau, t);
                    assert!(success_lower_bound(delta, tau + 1, t) >= here);
                    assert!(success_lower_bound(delta, tau, t + 1) >= here);
                }
            }
        }
    }

    #[test]
    fn first_factor_relaxes_trigamma_bound() {
        // 1 - psi'(2^tau) dominates the polynomial first factor
        for tau in 1..=30u32 {
            let tf = tau as f64;
            let first = 1.0 - ((-tf).exp2() + (-2.0 * tf - 1.0).exp2() + (-3.0 * tf).exp2() / 6.0);
            let exact = 1.0 - trigamma((1u64 << tau) as f64).unwrap();
            assert!(first <= exact + 1e-15, "tau={tau}");
        }
    }

    #[test]
    fn work_examples() {
        let w = work_log2(0, 34, 2, 1);
        assert!(w > 22.0 && w <= 22.1);
        assert_eq!(work_display_tenths(&n_param(0, 34, 2), 1), 221);
        assert_eq!(work_display_tenths(&n_param(0, 14, 2), 1), 121);
        assert_eq!(work_display_tenths(&n_param(20, 4, 12), 1), 156);
        // boundary case: N = 2^22 + 2 gives work just above 14.0
        assert_eq!(work_display_tenths(&n_param(10, 10, 9), 1), 141);
        // large-delta boundary: work = 70.5 + epsilon displays as 70.6
        assert_eq!(work_display_tenths(&n_param(130, 4, 67), 1), 706);
        // work monotone in each argument
        let base = work_log2(10, 8, 5, 1);
        assert!(work_log2(11, 8, 5, 1) > base);
        assert!(work_log2(10, 9, 5, 1) > base);
        assert!(work_log2(10, 8, 6, 1) > base);
        assert!(work_log2(10, 8, 5, 2) > base);
    }

    #[test]
    fn optimizer_examples() {
        let limits = SearchLimits::default();
        let row = optimize_params(0, 0.99, 1, limits).unwrap();
        assert_eq!((row.tau, row.t), (7, 2));
        assert_eq!(row.work_tenths, 86);
        let row = optimize_params(50, 1.0 - 1e-10, 1, limits).unwrap();
        assert_eq!(row.work_tenths, 456);
        assert_eq!((row.tau, row.t), (34, 27));
        // infeasible under a tight tau cap
        assert!(optimize_params(
            0,
            0.999999999999,
            1,
            SearchLimits {
                tau_max: 4,
                t_max: 64
            }
        )
        .is_none());
    }

    #[test]
    fn ffdh_examples() {
        let r = ffdh_row(2048, 112, 70, 7, 37);
        assert_eq!(r.ops_single_run, 532);
        assert_eq!(r.advantage_tenths, 76);
        assert_eq!(r.row.work_tenths, 421);
        let r = ffdh_row(8192, 200, 0, 34, 2);
        assert_eq!(r.ops_single_run, 1200);
        assert_eq!(r.advantage_tenths, 137);
        // delta = 0 collapses to 3m
        let r = ffdh_row(3072, 128, 0, 34, 2);
        assert_eq!(r.ops_single_run, 3 * 256);
    }

    #[test]
    fn rsa_examples() {
        let rows = rsa_rows(&[(20, 0.999867)], &[0.99], 1);
        let row = rows[0].row.as_ref().unwrap();
        assert_eq!((row.tau, row.t), (7, 12));
        assert_eq!(row.work_tenths, 171);
        let rows = rsa_rows(&[(21, 0.9999278)], &[1.0 - 1e-4], 1);
        assert_eq!(rows[0].row.as_ref().unwrap().work_tenths, 221);
        // factor 1 reduces to the plain optimizer
        let with = optimize_params_with_factor(0, 0.99, 1.0, 1, SearchLimits::default()).unwrap();
        let without = optimize_params(0, 0.99, 1, SearchLimits::default()).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn asymptotic_examples() {
        let ms: Vec<u32> = (4..=20).map(|k| 1u32 << k).collect();
        let rows = asymptotic_check(&ms, &ParamSchedule::default_log(), 1).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].1 >= pair[0].1, "bound not nondecreasing");
        }
        assert!(rows.last().unwrap().1 > 1.0 - 1e-4);

        // constant schedule gives a constant bound
        fn c5(_: u32) -> u32 {
            5
        }
        fn c2(_: u32) -> u32 {
            2
        }
        let sched = ParamSchedule {
            tau: c5,
            delta: c2,
            t: c2,
        };
        let rows = asymptotic_check(&ms, &sched, 1).unwrap();
        let first = rows[0].1;
        assert!(rows.iter().all(|(_, b)| (b - first).abs() < 1e-15));

        // linear tau rejected by the guard
        fn half(m: u32) -> u32 {
            m / 2
        }
        let bad = ParamSchedule {
            tau: half,
            delta: c2,
            t: c2,
        };
        assert!(asymptotic_check(&ms, &bad, 1).is_err());
    }

    #[test]
    fn bound_row_invariants() {
        let row = bound_row(10, 14, 7, 2);
        assert_eq!(row.n, n_param(10, 14, 7));
        let expect = 3.0 + (2f64).log2() + 0.5 * log2_big(&row.n);
        assert!((row.work_log2 - expect).abs() < 1e-12);
        assert!(row.table_size_bound > 0.0);
    }
}
