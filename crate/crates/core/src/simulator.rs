//! Samples outcome pairs (j, k) from the exact measurement distribution when
//! the logarithm is known: j uniform, then k given j through the per-j offset
//! distribution.

use num::bigint::{BigInt, BigUint, RandBigInt};
use num::Integer;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::distribution::{alpha_at_offset, k0_of_j, min_good_tau, offset_range, prob_k_given_j};
use crate::error::{Error, Result};
use crate::group::ProblemInstance;
use crate::numutil::{pow2, pow2_int, trigamma};

/// What to do when a draw lands outside the offset window: report a tail
/// event, or fall back to a uniform offset in the uncovered range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    Fail,
    UniformTail,
}

#[derive(Debug, Clone)]
pub struct SimulatorConfig {
    /// Offset window half-width; clipped to 2^(ell-1).
    pub window: u64,
    pub tail_policy: TailPolicy,
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            window: 1 << 22,
            tail_policy: TailPolicy::Fail,
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    /// Mass that can escape the window, bounded by psi'(W).
    pub fn tail_mass_bound(&self) -> f64 {
        trigamma(self.window as f64).expect("positive window")
    }
}

/// One simulated run outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub j: BigUint,
    pub outcome: SampleOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    Drawn {
        k: BigUint,
        /// Offset from k0(j); k = (k0 + t) mod 2^ell.
        t: i64,
        /// Minimal tau making (j, k) tau-good.
        tau_min: u32,
        /// Whether this draw came from the uniform-tail fallback.
        from_tail: bool,
    },
    /// The draw fell outside the window under the fail policy.
    TailFail,
}

impl SampleOutcome {
    pub fn is_tail_fail(&self) -> bool {
        matches!(self, SampleOutcome::TailFail)
    }
}

/// Per-trial generator keyed by (seed, trial) so that execution order and
/// worker count cannot change results.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// j uniform on [0, 2^(m+ell)).
pub fn sample_j<R: Rng + ?Sized>(m: u32, ell: u32, rng: &mut R) -> BigUint {
    rng.gen_biguint((m + ell) as u64)
}

fn require_simulation_instance(instance: &ProblemInstance) -> Result<&BigUint> {
    let d = instance
        .d
        .as_ref()
        .ok_or_else(|| Error::Parameter("instance carries no logarithm to simulate".into()))?;
    match instance.shortness_ok() {
        Some(true) => Ok(d),
        Some(false) => Err(Error::Parameter(
            "instance violates the shortness condition".into(),
        )),
        None => Err(Error::Parameter(
            "instance carries no order; shortness cannot be verified".into(),
        )),
    }
}

fn offset_to_outcome(
    d: &BigUint,
    j: &BigUint,
    m: u32,
    ell: u32,
    alpha0: &BigUint,
    t: i64,
    from_tail: bool,
) -> SampleOutcome {
    let k0 = k0_of_j(d, j, m, ell).expect("j validated");
    let k = (BigInt::from(k0) + BigInt::from(t))
        .mod_floor(&pow2_int(ell))
        .to_biguint()
        .unwrap();
    let tau_min = min_good_tau(&alpha_at_offset(alpha0, t, m), m);
    SampleOutcome::Drawn {
        k,
        t,
        tau_min,
        from_tail,
    }
}

/// Draws k given j by inverse transform over the offset distribution.
///
/// Offsets are scanned in the fixed order 0, -1, 1, -2, 2, ... out to the
/// window edge, accumulating probability until the uniform draw is covered.
/// This is law-identical to materializing the window table first and keeps
/// the expected work far below the O(W) cap. When the window covers the full
/// offset range, floating-point residue is absorbed by the last offset
/// scanned, so no tail event can occur there.
pub fn sample_k_given_j<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    j: &BigUint,
    config: &SimulatorConfig,
    rng: &mut R,
) -> Result<SampleOutcome> {
    let d = require_simulation_instance(instance)?;
    let (m, ell) = (instance.m, instance.ell());
    if ell > 62 {
        return Err(Error::Parameter(format!("sampler needs ell <= 62, got {ell}")));
    }
    if *j >= pow2(m + ell) {
        return Err(Error::Parameter(format!("j = {j} outside [0, 2^{})", m + ell)));
    }
    if config.window == 0 {
        return Err(Error::Parameter("window must be positive".into()));
    }
    let (t_min, t_max) = offset_range(ell);
    let lo = (-(config.window as i64)).max(t_min);
    let hi = (config.window as i64).min(t_max);
    let full_window = lo == t_min && hi == t_max;
    let alpha0 = (d * j) % pow2(m);

    let u: f64 = rng.gen();
    let mut acc = 0.0f64;
    let mut last = 0i64;
    let mut mag = 0i64;
    'walk: loop {
        let candidates = if mag == 0 { [0i64, 0] } else { [-mag, mag] };
        for (idx, &t) in candidates.iter().enumerate() {
            if mag == 0 && idx == 1 {
                continue; // t = 0 visited once
            }
            if t < lo || t > hi {
                continue;
            }
            acc += prob_k_given_j(d, m, ell, &alpha_at_offset(&alpha0, t, m));
            last = t;
            if u < acc {
                return Ok(offset_to_outcome(d, j, m, ell, &alpha0, t, false));
            }
        }
        mag += 1;
        if -mag < lo && mag > hi {
            break 'walk;
        }
    }
    if full_window {
        return Ok(offset_to_outcome(d, j, m, ell, &alpha0, last, false));
    }
    match config.tail_policy {
        TailPolicy::Fail => Ok(SampleOutcome::TailFail),
        TailPolicy::UniformTail => {
            let below = (lo - t_min) as u64;
            let above = (t_max - hi) as u64;
            let idx = rng.gen_range(0..below + above);
            let t = if idx < below {
                t_min + idx as i64
            } else {
                hi + 1 + (idx - below) as i64
            };
            Ok(offset_to_outcome(d, j, m, ell, &alpha0, t, true))
        }
    }
}

/// Composition of sample_j and sample_k_given_j with diagnostics filled.
pub fn sample_pair<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    config: &SimulatorConfig,
    rng: &mut R,
) -> Result<Sample> {
    let j = sample_j(instance.m, instance.ell(), rng);
    let outcome = sample_k_given_j(instance, &j, config, rng)?;
    Ok(Sample { j, outcome })
}

/// JSONL record for one sample; integers as decimal strings.
#[derive(Debug, Serialize)]
pub struct SampleLogLine {
    pub trial: String,
    pub j: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_min: Option<String>,
    pub tail: bool,
}

impl SampleLogLine {
    pub fn new(trial: u64, sample: &Sample) -> Self {
        match &sample.outcome {
            SampleOutcome::Drawn {
                k,
                t,
                tau_min,
                from_tail,
            } => SampleLogLine {
                trial: trial.to_string(),
                j: sample.j.to_string(),
                k: Some(k.to_string()),
                t: Some(t.to_string()),
                tau_min: Some(tau_min.to_string()),
                tail: *from_tail,
            },
            SampleOutcome::TailFail => SampleLogLine {
                trial: trial.to_string(),
                j: sample.j.to_string(),
                k: None,
                t: None,
                tau_min: None,
                tail: true,
            },
        }
    }
}
