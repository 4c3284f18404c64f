//! Deterministic Monte Carlo harness: one instance per trial (or a fixed
//! one), a simulated pair, a recovery, and strict bookkeeping against the
//! proven budgets. Records replay byte-for-byte from (config, seed).

use std::io::Write;
use std::time::Instant;

use num::bigint::{BigInt, BigUint};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use shortdlp::bounds::{n_param, success_lower_bound};
use shortdlp::group::{
    make_rsa_instance_with_rng, make_safe_prime_instance_with_rng, InstanceKind, ProblemInstance,
};
use shortdlp::postprocess::{recover_d, RecoveryParams, RecoveryReport};
use shortdlp::simulator::{sample_pair, trial_rng, SampleOutcome, SimulatorConfig, TailPolicy};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: InstanceKind,
    pub m: u32,
    pub delta: u32,
    pub tau: u32,
    /// Balancedness exponent used for the reported bound and work budget.
    pub t: u32,
    pub c: u64,
    pub trials: u64,
    pub seed: u64,
    /// 0 means "let the pool decide".
    pub workers: usize,
    pub window: u64,
    pub tail_policy: TailPolicy,
    pub fixed_instance: bool,
    /// Safe-prime modulus size; defaults to m + ell + 3.
    pub prime_bits: Option<u32>,
}

impl ExperimentConfig {
    pub fn ell(&self) -> u32 {
        self.m - self.delta
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.delta >= self.m {
            return Err(CliError::Parameter(format!(
                "need delta < m, got delta={} m={}",
                self.delta, self.m
            )));
        }
        if self.tau > self.ell() {
            return Err(CliError::Parameter(format!(
                "need tau <= ell = {}, got {}",
                self.ell(),
                self.tau
            )));
        }
        if self.t >= self.m {
            return Err(CliError::Parameter(format!(
                "need t < m, got t={} m={}",
                self.t, self.m
            )));
        }
        if self.c == 0 {
            return Err(CliError::Parameter("c must be positive".into()));
        }
        if self.kind == InstanceKind::Rsa && self.m < 17 {
            return Err(CliError::Parameter(
                "rsa experiments need m >= 17 (l = m - 1 >= 16)".into(),
            ));
        }
        Ok(())
    }

    fn generate_instance<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> shortdlp::Result<ProblemInstance> {
        match self.kind {
            InstanceKind::SafePrime => {
                let bits = self
                    .prime_bits
                    .unwrap_or(self.m + self.ell() + 3);
                make_safe_prime_instance_with_rng(bits, self.m, self.delta, rng)
            }
            InstanceKind::Rsa => make_rsa_instance_with_rng(self.m - 1, self.delta, rng),
        }
    }
}

/// One JSONL record: trial index, sample fields, recovery fields, and the
/// strict success flag. Integers are decimal strings.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: String,
    pub j: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_min: Option<String>,
    pub tail: bool,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ops: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(rename = "B1", skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(rename = "B2", skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
    #[serde(rename = "n", skip_serializing_if = "Option::is_none")]
    pub stride: Option<String>,
    pub tau: String,
    pub c: String,
    /// Recovered the true logarithm within the theorem's work and table
    /// budgets at (tau, t, c).
    pub success: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub kind: InstanceKind,
    pub m: u32,
    pub delta: u32,
    pub tau: u32,
    pub t: u32,
    pub c: u64,
    pub trials: u64,
    pub seed: u64,
    pub window: u64,
    pub tail_policy: TailPolicy,
    pub fixed_instance: bool,
    pub found: u64,
    pub success: u64,
    pub tail_events: u64,
    /// None (null) when there were no trials.
    pub found_rate: Option<f64>,
    pub success_rate: Option<f64>,
    /// Wilson 99% interval on the strict success rate.
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
    /// The proven lower bound at (delta, tau, t).
    pub theorem_bound: f64,
    /// Whether the observation is consistent with the bound: the claim is
    /// never made above the Wilson upper limit.
    pub bound_consistent: Option<bool>,
    pub mean_ops: Option<f64>,
    pub max_ops: u64,
    pub max_table: u64,
    pub over_budget: u64,
    pub wall_time_s: f64,
}

const WILSON_Z99: f64 = 2.5758293035489004;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let spread = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

fn within_budget(report: &RecoveryReport, n_cap: &BigUint, c: u64) -> bool {
    let ops = BigUint::from(report.group_ops_used);
    let budget = BigUint::from(64u8) * BigUint::from(c) * BigUint::from(c) * n_cap;
    if &ops * &ops > budget {
        return false;
    }
    if report.table_entries > 3 {
        let lhs = BigUint::from(report.table_entries - 3) * BigUint::from(c);
        if &lhs * &lhs > BigUint::from(64u8) * n_cap {
            return false;
        }
    }
    true
}

fn run_trial(
    cfg: &ExperimentConfig,
    fixed: Option<&ProblemInstance>,
    n_cap: &BigUint,
    trial: u64,
) -> Result<TrialRecord, CliError> {
    let mut rng = trial_rng(cfg.seed, trial);
    let owned;
    let instance = match fixed {
        Some(inst) => inst,
        None => {
            owned = cfg.generate_instance(&mut rng)?;
            &owned
        }
    };
    let sim = SimulatorConfig {
        window: cfg.window,
        tail_policy: cfg.tail_policy,
        seed: cfg.seed,
    };
    let sample = sample_pair(instance, &sim, &mut rng)?;
    let (tau_s, c_s) = (cfg.tau.to_string(), cfg.c.to_string());
    let (k, t, tau_min, from_tail) = match &sample.outcome {
        SampleOutcome::Drawn {
            k,
            t,
            tau_min,
            from_tail,
        } => (k.clone(), *t, *tau_min, *from_tail),
        SampleOutcome::TailFail => {
            // counted as a post-processing failure
            return Ok(TrialRecord {
                trial: trial.to_string(),
                j: sample.j.to_string(),
                k: None,
                t: None,
                tau_min: None,
                tail: true,
                found: false,
                d: None,
                ops: None,
                table: None,
                b1: None,
                b2: None,
                stride: None,
                tau: tau_s,
                c: c_s,
                success: false,
            });
        }
    };
    let ctx = instance.context()?;
    let g = instance.generator_elem(&ctx);
    let x = instance.target_elem(&ctx);
    let report = recover_d(
        &ctx,
        &g,
        &x,
        &sample.j,
        &k,
        instance.m,
        instance.ell(),
        &RecoveryParams::new(cfg.tau, cfg.c),
    )?;
    let truth = BigInt::from(instance.d.clone().expect("simulation instance"));
    let correct = report.found.as_ref() == Some(&truth);
    let success = correct && within_budget(&report, n_cap, cfg.c);
    Ok(TrialRecord {
        trial: trial.to_string(),
        j: sample.j.to_string(),
        k: Some(k.to_string()),
        t: Some(t.to_string()),
        tau_min: Some(tau_min.to_string()),
        tail: from_tail,
        found: report.found.is_some(),
        d: report.found.as_ref().map(|d| d.to_string()),
        ops: Some(report.group_ops_used.to_string()),
        table: Some(report.table_entries.to_string()),
        b1: Some(report.b1.to_string()),
        b2: Some(report.b2.to_string()),
        stride: Some(report.stride.to_string()),
        tau: tau_s,
        c: c_s,
        success,
    })
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
) -> Result<(Vec<TrialRecord>, ExperimentSummary), CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let fixed = if cfg.fixed_instance {
        // the reserved stream below the trial range keys the shared instance
        let mut rng = trial_rng(cfg.seed, u64::MAX);
        Some(cfg.generate_instance(&mut rng)?)
    } else {
        None
    };
    let n_cap = n_param(cfg.delta, cfg.tau, cfg.t);
    let run_all = || -> Result<Vec<TrialRecord>, CliError> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, fixed.as_ref(), &n_cap, trial))
            .collect()
    };
    let records = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| CliError::Parameter(format!("worker pool: {e}")))?
            .install(run_all)?
    } else {
        run_all()?
    };

    let trials = cfg.trials;
    let found = records.iter().filter(|r| r.found).count() as u64;
    let success = records.iter().filter(|r| r.success).count() as u64;
    let tail_events = records.iter().filter(|r| r.tail).count() as u64;
    let ops: Vec<u64> = records
        .iter()
        .filter_map(|r| r.ops.as_ref().and_then(|s| s.parse().ok()))
        .collect();
    let tables: Vec<u64> = records
        .iter()
        .filter_map(|r| r.table.as_ref().and_then(|s| s.parse().ok()))
        .collect();
    let over_budget = records.iter().filter(|r| r.found && !r.success).count() as u64;
    let (wilson_low, wilson_high) = if trials > 0 {
        let (lo, hi) = wilson_interval(success, trials, WILSON_Z99);
        (Some(lo), Some(hi))
    } else {
        (None, None)
    };
    let theorem_bound = success_lower_bound(cfg.delta, cfg.tau, cfg.t);
    let summary = ExperimentSummary {
        kind: cfg.kind,
        m: cfg.m,
        delta: cfg.delta,
        tau: cfg.tau,
        t: cfg.t,
        c: cfg.c,
        trials,
        seed: cfg.seed,
        window: cfg.window,
        tail_policy: cfg.tail_policy,
        fixed_instance: cfg.fixed_instance,
        found,
        success,
        tail_events,
        found_rate: (trials > 0).then(|| found as f64 / trials as f64),
        success_rate: (trials > 0).then(|| success as f64 / trials as f64),
        wilson_low,
        wilson_high,
        theorem_bound,
        bound_consistent: wilson_high.map(|hi| hi >= theorem_bound),
        mean_ops: (!ops.is_empty()).then(|| ops.iter().sum::<u64>() as f64 / ops.len() as f64),
        max_ops: ops.iter().copied().max().unwrap_or(0),
        max_table: tables.iter().copied().max().unwrap_or(0),
        over_budget,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((records, summary))
}

/// One record per line, in trial order.
pub fn write_jsonl<W: Write>(records: &[TrialRecord], mut w: W) -> Result<(), CliError> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
