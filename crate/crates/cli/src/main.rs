use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::bigint::BigUint;

use shortdlp::bounds::SearchLimits;
use shortdlp::group::{
    factor_from_short_dlog, make_rsa_instance, make_safe_prime_instance, InstanceKind,
    ProblemInstance,
};
use shortdlp::postprocess::{recover_d, RecoveryParams};
use shortdlp::simulator::{sample_pair, trial_rng, SampleLogLine, SimulatorConfig, TailPolicy};
use shortdlp::Error as CoreError;

use shortdlp_cli::experiment::{run_experiment, write_jsonl, ExperimentConfig};
use shortdlp_cli::{parse_target, tables, CliError};

/// Short discrete logarithm recovery lab: exact output-distribution
/// simulation, lattice + meet-in-the-middle recovery, and bound tables.
#[derive(Parser)]
#[command(name = "shortdlp", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    SafePrime,
    Rsa,
}

impl From<KindArg> for InstanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::SafePrime => InstanceKind::SafePrime,
            KindArg::Rsa => InstanceKind::Rsa,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TailPolicyArg {
    Fail,
    UniformTail,
}

impl From<TailPolicyArg> for TailPolicy {
    fn from(p: TailPolicyArg) -> Self {
        match p {
            TailPolicyArg::Fail => TailPolicy::Fail,
            TailPolicyArg::UniformTail => TailPolicy::UniformTail,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimized (tau, t) and work bound for given deltas and targets.
    Bounds(BoundsArgs),
    /// Regenerate the built-in tables (general, safe-prime DH, RSA).
    Tables(TablesArgs),
    /// Run simulated trials with recovery and write a JSONL log.
    Experiment(ExperimentArgs),
    /// Generate a problem instance and print it as JSON.
    Instance(InstanceArgs),
    /// Draw outcome pairs from an instance file.
    Sample(SampleArgs),
    /// Recover the logarithm from one (j, k) pair.
    Recover(RecoverArgs),
    /// Invert the factoring reduction: N and d = (p+q)/2 back to (p, q).
    Factor(FactorArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated deltas.
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<u32>,
    /// Comma-separated targets; accepts 0.99 or 1-1e-10 forms.
    #[arg(long, value_delimiter = ',', required = true)]
    target: Vec<String>,
    #[arg(long, default_value_t = 1)]
    c: u64,
    #[arg(long, default_value_t = 64)]
    tau_max: u32,
    /// Large deltas need t beyond the library default of 64.
    #[arg(long, default_value_t = 128)]
    t_max: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, value_enum)]
    which: WhichTable,
    #[arg(long, default_value_t = 1)]
    c: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhichTable {
    Bounds,
    Ffdh,
    Rsa,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value_t = KindArg::SafePrime)]
    kind: KindArg,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    delta: u32,
    #[arg(long)]
    tau: u32,
    /// Balancedness exponent for the reported bound and budgets.
    #[arg(long, default_value_t = 2)]
    t: u32,
    #[arg(long, default_value_t = 1)]
    c: u64,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// 0 lets the pool decide.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 1 << 22)]
    window: u64,
    #[arg(long, value_enum, default_value_t = TailPolicyArg::Fail)]
    tail_policy: TailPolicyArg,
    /// Reuse one instance across trials instead of one per trial.
    #[arg(long)]
    fixed_instance: bool,
    /// Safe-prime modulus bits (default m + ell + 3).
    #[arg(long)]
    prime_bits: Option<u32>,
    /// JSONL destination for per-trial records.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Bit-length bound on d (safe-prime kind).
    #[arg(long)]
    m: Option<u32>,
    /// Prime size for the RSA kind (m becomes l + 1).
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    delta: u32,
    #[arg(long)]
    prime_bits: Option<u32>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1 << 22)]
    window: u64,
    #[arg(long, value_enum, default_value_t = TailPolicyArg::Fail)]
    tail_policy: TailPolicyArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    j: String,
    #[arg(long)]
    k: String,
    #[arg(long)]
    tau: u32,
    #[arg(long, default_value_t = 1)]
    c: u64,
    /// Accept candidates outside [0, 2^m) too.
    #[arg(long)]
    no_verify_range: bool,
}

#[derive(Args)]
struct FactorArgs {
    #[arg(long)]
    n: String,
    #[arg(long)]
    d: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(), // usage errors exit 2, --help exits 0
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_big(s: &str, name: &str) -> Result<BigUint, CliError> {
    s.parse()
        .map_err(|_| CliError::Parameter(format!("{name} must be a decimal integer, got {s:?}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Tables(a) => cmd_tables(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::Instance(a) => cmd_instance(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Recover(a) => cmd_recover(a),
        Cmd::Factor(a) => cmd_factor(a),
    }
}

fn cmd_bounds(a: BoundsArgs) -> Result<(), CliError> {
    if a.delta.is_empty() || a.target.is_empty() {
        return Err(CliError::Usage("need at least one delta and one target".into()));
    }
    let targets: Vec<f64> = a
        .target
        .iter()
        .map(|s| parse_target(s))
        .collect::<Result<_, _>>()?;
    let limits = SearchLimits {
        tau_max: a.tau_max,
        t_max: a.t_max,
    };
    let rows = tables::bounds_query(&a.delta, &targets, a.c, limits);
    let text = match a.format {
        FormatArg::Text => tables::bounds_text(&rows),
        FormatArg::Csv => tables::bounds_csv(&rows),
    };
    emit(&text, &a.out)?;
    if rows.iter().any(|r| r.row.is_none()) {
        return Err(CliError::NoSolution(
            "some (delta, target) pairs are infeasible within the search limits".into(),
        ));
    }
    Ok(())
}

fn cmd_tables(a: TablesArgs) -> Result<(), CliError> {
    let text = match (a.which, a.format) {
        (WhichTable::Bounds, FormatArg::Text) => tables::bounds_text(&tables::general_table(a.c)),
        (WhichTable::Bounds, FormatArg::Csv) => tables::bounds_csv(&tables::general_table(a.c)),
        (WhichTable::Ffdh, FormatArg::Text) => tables::ffdh_text(&tables::ffdh_rows()),
        (WhichTable::Ffdh, FormatArg::Csv) => tables::ffdh_csv(&tables::ffdh_rows()),
        (WhichTable::Rsa, FormatArg::Text) => tables::rsa_text(&tables::rsa_table(a.c)),
        (WhichTable::Rsa, FormatArg::Csv) => tables::rsa_csv(&tables::rsa_table(a.c)),
    };
    emit(&text, &a.out)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        kind: a.kind.into(),
        m: a.m,
        delta: a.delta,
        tau: a.tau,
        t: a.t,
        c: a.c,
        trials: a.trials,
        seed: a.seed,
        workers: a.workers,
        window: a.window,
        tail_policy: a.tail_policy.into(),
        fixed_instance: a.fixed_instance,
        prime_bits: a.prime_bits,
    };
    let (records, summary) = run_experiment(&cfg)?;
    if let Some(path) = &a.out {
        let file = fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        write_jsonl(&records, &mut w)?;
        w.flush()?;
    }
    if summary.trials == 0 {
        eprintln!("warning: no trials were run; rates are undefined");
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_instance(a: InstanceArgs) -> Result<(), CliError> {
    let inst = match a.kind {
        KindArg::SafePrime => {
            let m = a.m.ok_or_else(|| CliError::Usage("safe-prime kind needs --m".into()))?;
            if a.delta >= m {
                return Err(CliError::Parameter(format!(
                    "need delta < m, got {} >= {m}",
                    a.delta
                )));
            }
            let ell = m - a.delta;
            let bits = a.prime_bits.unwrap_or(m + ell + 3);
            make_safe_prime_instance(bits, m, a.delta, a.seed)?
        }
        KindArg::Rsa => {
            let l = a.l.ok_or_else(|| CliError::Usage("rsa kind needs --l".into()))?;
            make_rsa_instance(l, a.delta, a.seed)?
        }
    };
    emit(&(inst.to_json_string() + "\n"), &a.out)
}

fn load_instance(path: &PathBuf) -> Result<ProblemInstance, CliError> {
    let text = fs::read_to_string(path)?;
    match ProblemInstance::from_json_str(text.trim()) {
        Ok(i) => Ok(i),
        Err(CoreError::Parse(m)) => Err(CliError::Io(format!("parse {}: {m}", path.display()))),
        Err(e) => Err(e.into()),
    }
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let cfg = SimulatorConfig {
        window: a.window,
        tail_policy: a.tail_policy.into(),
        seed: a.seed,
    };
    let mut text = String::new();
    for trial in 0..a.count {
        let mut rng = trial_rng(a.seed, trial);
        let sample = sample_pair(&inst, &cfg, &mut rng)?;
        text.push_str(&serde_json::to_string(&SampleLogLine::new(trial, &sample))?);
        text.push('\n');
    }
    emit(&text, &a.out)
}

fn cmd_recover(a: RecoverArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let j = parse_big(&a.j, "j")?;
    let k = parse_big(&a.k, "k")?;
    let ctx = inst.context()?;
    let g = inst.generator_elem(&ctx);
    let x = inst.target_elem(&ctx);
    let mut params = RecoveryParams::new(a.tau, a.c);
    params.verify_range = !a.no_verify_range;
    let report = recover_d(&ctx, &g, &x, &j, &k, inst.m, inst.ell(), &params)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn cmd_factor(a: FactorArgs) -> Result<(), CliError> {
    let n = parse_big(&a.n, "N")?;
    let d = parse_big(&a.d, "d")?;
    match factor_from_short_dlog(&n, &d) {
        Ok((p, q)) => {
            println!(
                "{}",
                serde_json::json!({"found": true, "p": p.to_string(), "q": q.to_string()})
            );
        }
        Err(CoreError::ReductionFailure(reason)) => {
            // a failed reduction is data, not an error
            println!("{}", serde_json::json!({"found": false, "reason": reason}));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
