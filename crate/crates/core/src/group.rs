//! Arithmetic in Z_N^* with an instrumented multiplication counter, problem
//! instance generation for the safe-prime and RSA settings, and the
//! factoring-from-short-logarithm reduction.
//!
//! Only multiplications issued through [`GroupContext::mul`] count against a
//! recovery session's budget; inversions, exponentiations and
//! [`GroupContext::mul_uncounted`] are treated as pre-computation.

use std::cell::Cell;
use std::sync::{Arc, OnceLock};

use num::bigint::{BigInt, BigUint, RandBigInt};
use num::{Integer, One, Signed};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numutil::pow2;

#[derive(Debug, PartialEq, Eq)]
struct ContextInner {
    modulus: BigUint,
}

/// One multiplicative group Z_N^* together with the session's operation
/// counter. The counter is confined to a single worker; elements themselves
/// are immutable and freely shareable.
#[derive(Debug)]
pub struct GroupContext {
    inner: Arc<ContextInner>,
    ops: Cell<u64>,
}

/// A residue in [1, N) tied to its group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    residue: BigUint,
    ctx: Arc<ContextInner>,
}

impl GroupElement {
    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn is_one(&self) -> bool {
        self.residue.is_one()
    }
}

impl GroupContext {
    pub fn new(modulus: BigUint) -> Result<Self> {
        if modulus < BigUint::from(3u8) || modulus.is_even() {
            return Err(Error::Parameter(format!(
                "modulus must be odd and at least 3, got {modulus}"
            )));
        }
        Ok(GroupContext {
            inner: Arc::new(ContextInner { modulus }),
            ops: Cell::new(0),
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.inner.modulus
    }

    /// Group multiplications counted so far in this session.
    pub fn group_ops(&self) -> u64 {
        self.ops.get()
    }

    pub fn reset_ops(&self) {
        self.ops.set(0);
    }

    /// Wraps a residue (reduced mod N) as an element of this group. No
    /// coprimality check is performed here; `inv` surfaces nontrivial gcds.
    pub fn element(&self, value: BigUint) -> GroupElement {
        GroupElement {
            residue: value % &self.inner.modulus,
            ctx: Arc::clone(&self.inner),
        }
    }

    pub fn one(&self) -> GroupElement {
        self.element(BigUint::one())
    }

    fn check_member(&self, a: &GroupElement) -> Result<()> {
        if Arc::ptr_eq(&self.inner, &a.ctx) || self.inner.modulus == a.ctx.modulus {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "context mismatch: element modulus {} vs context modulus {}",
                a.ctx.modulus, self.inner.modulus
            )))
        }
    }

    fn raw_mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check_member(a)?;
        self.check_member(b)?;
        Ok(self.element(&a.residue * &b.residue))
    }

    /// Modular multiplication; increments the session op counter.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let r = self.raw_mul(a, b)?;
        self.ops.set(self.ops.get() + 1);
        Ok(r)
    }

    /// Multiplication for the pre-computation stage; not counted.
    pub fn mul_uncounted(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.raw_mul(a, b)
    }

    /// Inverse via the extended Euclidean algorithm. Not counted: inverses
    /// belong to classical pre-computation. A residue sharing a factor with
    /// the modulus yields the distinguished nontrivial-gcd outcome.
    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check_member(a)?;
        let n = BigInt::from(self.inner.modulus.clone());
        let e = the_ext_gcd(&BigInt::from(a.residue.clone()), &n);
        if !e.0.is_one() {
            return Err(Error::NontrivialGcd {
                factor: e.0.to_biguint().expect("gcd is nonnegative"),
            });
        }
        let inv = e.1.mod_floor(&n).to_biguint().expect("reduced residue");
        Ok(self.element(inv))
    }

    /// Square-and-multiply exponentiation; negative exponents go through
    /// `inv`. Not counted (pre-computation and verification use only).
    pub fn pow(&self, a: &GroupElement, e: &BigInt) -> Result<GroupElement> {
        self.check_member(a)?;
        let base = if e.is_negative() {
            self.inv(a)?
        } else {
            a.clone()
        };
        let exp = e.magnitude();
        Ok(self.element(base.residue.modpow(exp, &self.inner.modulus)))
    }
}

fn the_ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let e = a.extended_gcd(b);
    (e.gcd, e.x)
}

// ---------------------------------------------------------------------------
// Primality and factoring helpers (desk-scale).
// ---------------------------------------------------------------------------

const TRIAL_DIVISION_BOUND: u64 = 10_000;
const MILLER_RABIN_ROUNDS: usize = 64;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_DIVISION_BOUND as usize;
        let mut sieve = vec![true; n];
        let mut primes = Vec::new();
        for p in 2..n {
            if sieve[p] {
                primes.push(p as u64);
                let mut q = p * p;
                while q < n {
                    sieve[q] = false;
                    q += p;
                }
            }
        }
        primes
    })
}

/// Probabilistic primality: deterministic trial division below 10^4, then 64
/// Miller-Rabin rounds with random bases.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    if n < &BigUint::from(2u8) {
        return false;
    }
    for &p in small_primes() {
        let bp = BigUint::from(p);
        if &bp * &bp > *n {
            return true; // fully trial-divided
        }
        if n.is_multiple_of(&bp) {
            return *n == bp;
        }
    }
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> (s as usize);
    'rounds: for _ in 0..MILLER_RABIN_ROUNDS {
        // base uniform in [2, n-2]
        let a = rng.gen_biguint_below(&(n - BigUint::from(3u8))) + &two;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

fn gen_prime<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> BigUint {
    assert!(bits >= 2);
    loop {
        let mut cand = pow2(bits - 1) + rng.gen_biguint((bits - 1) as u64);
        cand |= BigUint::one();
        if is_probable_prime(&cand, rng) {
            return cand;
        }
    }
}

/// Full factorization by trial division plus Pollard's rho; intended for
/// desk-scale inputs (the order computation for RSA instances).
pub fn factorize<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> Vec<(BigUint, u32)> {
    let mut factors: Vec<(BigUint, u32)> = Vec::new();
    let mut rest = n.clone();
    for &p in small_primes() {
        let bp = BigUint::from(p);
        let mut e = 0u32;
        while rest.is_multiple_of(&bp) {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            factors.push((bp, e));
        }
        if rest.is_one() {
            return factors;
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m, rng) {
            match factors.iter_mut().find(|(p, _)| *p == m) {
                Some((_, e)) => *e += 1,
                None => factors.push((m, 1)),
            }
            continue;
        }
        let d = pollard_rho(&m, rng);
        stack.push(&m / &d);
        stack.push(d);
    }
    factors.sort();
    factors
}

fn pollard_rho<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> BigUint {
    if n.is_even() {
        return BigUint::from(2u8);
    }
    loop {
        let c = rng.gen_biguint_below(n);
        let mut x = rng.gen_biguint_below(n);
        let mut y = x.clone();
        loop {
            x = (&x * &x + &c) % n;
            y = (&y * &y + &c) % n;
            y = (&y * &y + &c) % n;
            if x == y {
                break; // cycle without factor; new parameters
            }
            let diff = if x > y { &x - &y } else { &y - &x };
            let g = diff.gcd(n);
            if !g.is_one() {
                if g == *n {
                    break;
                }
                return g;
            }
        }
    }
}

/// Multiplicative order of `g` modulo prime `p` given the factorization of
/// p - 1.
fn order_mod_prime(g: &BigUint, p: &BigUint, p_minus_1_factors: &[(BigUint, u32)]) -> BigUint {
    let mut ord = p - BigUint::one();
    for (q, e) in p_minus_1_factors {
        for _ in 0..*e {
            let cand = &ord / q;
            if g.modpow(&cand, p).is_one() {
                ord = cand;
            } else {
                break;
            }
        }
    }
    ord
}

// ---------------------------------------------------------------------------
// Problem instances.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    SafePrime,
    Rsa,
}

/// A short discrete logarithm problem: x = g^d in Z_N^* with d below 2^m.
/// The secret `d` and the order `r` of `g` are carried only on simulation
/// instances, for sampling and verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub kind: InstanceKind,
    pub modulus: BigUint,
    pub generator: BigUint,
    pub target: BigUint,
    /// Upper bound on the bit length of d.
    pub m: u32,
    /// Exponent-length reduction; ell = m - delta.
    pub delta: u32,
    pub d: Option<BigUint>,
    pub order: Option<BigUint>,
}

impl ProblemInstance {
    pub fn ell(&self) -> u32 {
        self.m - self.delta
    }

    pub fn context(&self) -> Result<GroupContext> {
        GroupContext::new(self.modulus.clone())
    }

    pub fn generator_elem(&self, ctx: &GroupContext) -> GroupElement {
        ctx.element(self.generator.clone())
    }

    pub fn target_elem(&self, ctx: &GroupContext) -> GroupElement {
        ctx.element(self.target.clone())
    }

    /// Whether r >= 2^(m+ell) + (2^ell - 1) d holds; `None` when the order
    /// (or d) is unknown.
    pub fn shortness_ok(&self) -> Option<bool> {
        let r = self.order.as_ref()?;
        let d = self.d.as_ref()?;
        let ell = self.ell();
        let need = pow2(self.m + ell) + (pow2(ell) - BigUint::one()) * d;
        Some(*r >= need)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&InstanceWire::from(self)).expect("instance serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let wire: InstanceWire =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("instance JSON: {e}")))?;
        wire.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    #[serde(rename = "N")]
    n: String,
    g: String,
    x: String,
    m: String,
    delta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<String>,
    kind: InstanceKind,
}

impl From<&ProblemInstance> for InstanceWire {
    fn from(p: &ProblemInstance) -> Self {
        InstanceWire {
            n: p.modulus.to_string(),
            g: p.generator.to_string(),
            x: p.target.to_string(),
            m: p.m.to_string(),
            delta: p.delta.to_string(),
            d: p.d.as_ref().map(|v| v.to_string()),
            r: p.order.as_ref().map(|v| v.to_string()),
            kind: p.kind,
        }
    }
}

impl TryFrom<InstanceWire> for ProblemInstance {
    type Error = Error;

    fn try_from(w: InstanceWire) -> Result<Self> {
        fn big(s: &str, field: &str) -> Result<BigUint> {
            s.parse()
                .map_err(|_| Error::Parse(format!("field {field}: bad decimal string {s:?}")))
        }
        fn small(s: &str, field: &str) -> Result<u32> {
            s.parse()
                .map_err(|_| Error::Parse(format!("field {field}: bad integer {s:?}")))
        }
        let m = small(&w.m, "m")?;
        let delta = small(&w.delta, "delta")?;
        if delta >= m {
            return Err(Error::Parameter(format!("need delta < m, got {delta} >= {m}")));
        }
        Ok(ProblemInstance {
            kind: w.kind,
            modulus: big(&w.n, "N")?,
            generator: big(&w.g, "g")?,
            target: big(&w.x, "x")?,
            m,
            delta,
            d: w.d.as_deref().map(|s| big(s, "d")).transpose()?,
            order: w.r.as_deref().map(|s| big(s, "r")).transpose()?,
        })
    }
}

fn seeded_rng(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Safe-prime instance: p = 2r + 1 with r prime, g a quadratic residue of
/// order r, d uniform in [2^(m-1), 2^m), x = g^d.
pub fn make_safe_prime_instance(
    prime_bits: u32,
    m: u32,
    delta: u32,
    seed: u64,
) -> Result<ProblemInstance> {
    make_safe_prime_instance_with_rng(prime_bits, m, delta, &mut seeded_rng(seed))
}

pub fn make_safe_prime_instance_with_rng<R: Rng + ?Sized>(
    prime_bits: u32,
    m: u32,
    delta: u32,
    rng: &mut R,
) -> Result<ProblemInstance> {
    check_exponent_params(m, delta)?;
    let ell = m - delta;
    if prime_bits < m + ell + 2 {
        return Err(Error::Parameter(format!(
            "prime_bits must be at least m + ell + 2 = {}, got {prime_bits}",
            m + ell + 2
        )));
    }
    loop {
        // r and p = 2r + 1 both prime.
        let r = {
            let mut cand = pow2(prime_bits - 2) + rng.gen_biguint((prime_bits - 2) as u64);
            cand |= BigUint::one();
            cand
        };
        if !is_probable_prime(&r, rng) {
            continue;
        }
        let p = (&r << 1) + BigUint::one();
        if !is_probable_prime(&p, rng) {
            continue;
        }
        let d = pow2(m - 1) + rng.gen_biguint((m - 1) as u64);
        // At the minimum prime size the shortness inequality can fail for
        // small p; draw again until it holds.
        let need = pow2(m + ell) + (pow2(ell) - BigUint::one()) * &d;
        if r < need {
            continue;
        }
        let g = loop {
            let h = rng.gen_biguint_below(&(&p - BigUint::from(3u8))) + BigUint::from(2u8);
            let g = h.modpow(&BigUint::from(2u8), &p);
            if !g.is_one() {
                break g;
            }
        };
        let x = g.modpow(&d, &p);
        return Ok(ProblemInstance {
            kind: InstanceKind::SafePrime,
            modulus: p,
            generator: g,
            target: x,
            m,
            delta,
            d: Some(d),
            order: Some(r),
        });
    }
}

/// Safe-prime instance with a caller-chosen logarithm (adversarial d).
pub fn make_safe_prime_instance_with_d<R: Rng + ?Sized>(
    prime_bits: u32,
    m: u32,
    delta: u32,
    d: BigUint,
    rng: &mut R,
) -> Result<ProblemInstance> {
    check_exponent_params(m, delta)?;
    if d >= pow2(m) {
        return Err(Error::Parameter(format!("d must be below 2^m, got {d}")));
    }
    let mut inst = make_safe_prime_instance_with_rng(prime_bits, m, delta, rng)?;
    let ctx = inst.context()?;
    let g = inst.generator_elem(&ctx);
    inst.target = ctx.pow(&g, &BigInt::from(d.clone()))?.residue().clone();
    inst.d = Some(d);
    if inst.shortness_ok() != Some(true) {
        return Err(Error::Parameter(
            "order too small for the requested d".into(),
        ));
    }
    Ok(inst)
}

fn check_exponent_params(m: u32, delta: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    if delta >= m {
        return Err(Error::Parameter(format!("need delta < m, got delta={delta}, m={m}")));
    }
    Ok(())
}

const RSA_G_ATTEMPTS: usize = 128;
const RSA_MODULUS_ATTEMPTS: usize = 64;

/// RSA instance for the factoring reduction: N = pq with p, q random l-bit
/// primes, d = (p + q)/2, x = g^((N+1)/2), m = l + 1. The order of g is
/// computed from the factorization and g is resampled until the shortness
/// condition holds.
pub fn make_rsa_instance(l: u32, delta: u32, seed: u64) -> Result<ProblemInstance> {
    make_rsa_instance_with_rng(l, delta, &mut seeded_rng(seed))
}

pub fn make_rsa_instance_with_rng<R: Rng + ?Sized>(
    l: u32,
    delta: u32,
    rng: &mut R,
) -> Result<ProblemInstance> {
    if l < 16 {
        return Err(Error::Parameter(format!("need l >= 16, got {l}")));
    }
    let m = l + 1;
    check_exponent_params(m, delta)?;
    let ell = m - delta;
    let one = BigUint::one();
    // The order of any g divides lcm(p-1, q-1) < 2^(2l); small delta makes
    // the shortness threshold 2^(m+ell) unreachable outright.
    if m + ell > 2 * l {
        return Err(Error::Parameter(format!(
            "shortness unattainable: need delta >= {}, got {delta}",
            m + ell - 2 * l + delta
        )));
    }
    for _ in 0..RSA_MODULUS_ATTEMPTS {
        let p = gen_prime(l, rng);
        let q = loop {
            let q = gen_prime(l, rng);
            if q != p {
                break q;
            }
        };
        let n = &p * &q;
        let d = (&p + &q) >> 1;
        let need = pow2(m + ell) + (pow2(ell) - &one) * &d;
        let p_minus_1 = &p - &one;
        let q_minus_1 = &q - &one;
        if p_minus_1.lcm(&q_minus_1) < need {
            continue; // no g in this group can satisfy shortness
        }
        let fac_p = factorize(&p_minus_1, rng);
        let fac_q = factorize(&q_minus_1, rng);
        for _ in 0..RSA_G_ATTEMPTS {
            let g = rng.gen_biguint_below(&n);
            if g < BigUint::from(2u8) || !g.gcd(&n).is_one() {
                continue;
            }
            let rp = order_mod_prime(&(&g % &p), &p, &fac_p);
            let rq = order_mod_prime(&(&g % &q), &q, &fac_q);
            let r = rp.lcm(&rq);
            if r < need {
                continue;
            }
            let exp = (&n + &one) >> 1;
            let x = g.modpow(&exp, &n);
            return Ok(ProblemInstance {
                kind: InstanceKind::Rsa,
                modulus: n,
                generator: g,
                target: x,
                m,
                delta,
                d: Some(d),
                order: Some(r),
            });
        }
    }
    Err(Error::Parameter(format!(
        "could not meet the shortness condition at l={l}, delta={delta}"
    )))
}

/// Inverts the reduction: given N = pq and d = (p + q)/2, recovers (p, q).
pub fn factor_from_short_dlog(n: &BigUint, d: &BigUint) -> Result<(BigUint, BigUint)> {
    let d_sq = d * d;
    if d_sq < *n {
        return Err(Error::ReductionFailure(format!(
            "d^2 = {d_sq} is below N = {n}"
        )));
    }
    let disc = &d_sq - n;
    let s = disc.sqrt();
    if &s * &s != disc {
        return Err(Error::ReductionFailure(
            "d^2 - N is not a perfect square".into(),
        ));
    }
    let p = d - &s;
    let q = d + &s;
    if &p * &q != *n {
        return Err(Error::ReductionFailure("recovered factors do not multiply to N".into()));
    }
    Ok((p, q))
}
