//! Independent reference implementations used by the test suites: the
//! brute-force amplitude sum for the outcome distribution and a standalone
//! baby-step giant-step search. These deliberately share no code with the
//! paths they check.

use std::collections::HashMap;

use num::bigint::{BigInt, BigUint};
use num::complex::Complex64;
use num::{Signed, Zero};

use crate::error::Result;
use crate::group::{GroupContext, GroupElement};
use crate::numutil::pow2_int;

/// Probability of observing each pair (j, k), computed by summing the raw
/// amplitudes exp(2 pi i (a j + 2^m b k) / 2^(m+ell)) over all (a, b),
/// grouped by e = a - b d, then adding |amplitude|^2 over e.
///
/// Returns `out[j][k]`. Exponential in m and ell; tiny sizes only.
pub fn joint_probability_brute_force(d: u64, m: u32, ell: u32) -> Vec<Vec<f64>> {
    let big_m = 1u64 << (m + ell);
    let small_m = 1u64 << ell;
    // root table: exp(2 pi i r / 2^(m+ell))
    let roots: Vec<Complex64> = (0..big_m)
        .map(|r| {
            let phi = 2.0 * std::f64::consts::PI * r as f64 / big_m as f64;
            Complex64::new(phi.cos(), phi.sin())
        })
        .collect();
    let e_offset = ((small_m - 1) * d) as usize; // shift e into [0, ...)
    let e_count = e_offset + big_m as usize;
    let norm = 1.0 / (big_m as f64 * small_m as f64).powi(2);
    let mut out = vec![vec![0.0f64; small_m as usize]; big_m as usize];
    let mut amps = vec![Complex64::zero(); e_count];
    for j in 0..big_m {
        for k in 0..small_m {
            for a in &mut amps {
                *a = Complex64::zero();
            }
            for b in 0..small_m {
                let phase_b = ((1u64 << m) * b * k) % big_m;
                for a in 0..big_m {
                    let e = (a as i64 - (b * d) as i64 + e_offset as i64) as usize;
                    let r = ((a * j) % big_m + phase_b) % big_m;
                    amps[e] += roots[r as usize];
                }
            }
            out[j as usize][k as usize] = norm * amps.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    out
}

/// Baby-step giant-step over the arithmetic progression base + i * step for
/// i in [-half_width, half_width]: returns the unique exponent with
/// g^(base + i step) = x passing the optional range filter, or None.
pub fn bsgs_in_progression(
    ctx: &GroupContext,
    g: &GroupElement,
    x: &GroupElement,
    base: &BigInt,
    step: &BigInt,
    half_width: u64,
    range_bits: Option<u32>,
) -> Result<Option<BigInt>> {
    let width = 2 * half_width + 1;
    let baby = (width as f64).sqrt().ceil() as u64;
    let accept = |cand: &BigInt| -> Result<bool> {
        if let Some(bits) = range_bits {
            if cand.is_negative() || *cand >= pow2_int(bits) {
                return Ok(false);
            }
        }
        Ok(ctx.pow(g, cand)? == *x)
    };
    // shift to y in [0, width): solve h^y = x g^(-base) h^(half_width)
    let h = ctx.pow(g, step)?;
    let target = {
        let g_base = ctx.pow(g, base)?;
        let shift = ctx.pow(&h, &BigInt::from(half_width))?;
        ctx.mul_uncounted(&ctx.mul_uncounted(&x.clone(), &ctx.inv(&g_base)?)?, &shift)?
    };
    let mut baby_table: HashMap<BigUint, Vec<u64>> = HashMap::new();
    let mut cur = ctx.one();
    for i in 0..baby {
        baby_table.entry(cur.residue().clone()).or_default().push(i);
        cur = ctx.mul_uncounted(&cur, &h)?;
    }
    let giant = ctx.inv(&cur)?; // h^-baby
    let mut probe = target;
    let mut block = 0u64;
    while block * baby < width {
        if let Some(is) = baby_table.get(probe.residue()) {
            for &i in is {
                let y = block * baby + i;
                if y >= width {
                    continue;
                }
                let cand = base + BigInt::from(y as i64 - half_width as i64) * step;
                if accept(&cand)? {
                    return Ok(Some(cand));
                }
            }
        }
        probe = ctx.mul_uncounted(&probe, &giant)?;
        block += 1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_safe_prime_instance;

    #[test]
    fn brute_force_is_a_probability_distribution() {
        let p = joint_probability_brute_force(5, 3, 2);
        let total: f64 = p.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(p.iter().flatten().all(|&v| v >= -1e-15));
    }

    #[test]
    fn bsgs_finds_known_logarithm() {
        let inst = make_safe_prime_instance(20, 6, 0, 3).unwrap();
        let ctx = inst.context().unwrap();
        let g = inst.generator_elem(&ctx);
        let x = inst.target_elem(&ctx);
        let d = BigInt::from(inst.d.clone().unwrap());
        let found = bsgs_in_progression(
            &ctx,
            &g,
            &x,
            &BigInt::zero(),
            &BigInt::from(1),
            1 << 6,
            Some(6),
        )
        .unwrap();
        assert_eq!(found, Some(d));
    }
}
