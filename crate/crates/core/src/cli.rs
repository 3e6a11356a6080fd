//! Command-line front end: `simulate`, `exact`, `verify` and `compare`.
//!
//! Exit codes: 0 success or verified, 1 bound violation, 2 usage error,
//! 3 resource cap (enumeration or simulation limits).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{verify, BoundReport, CheckKind, VerifyConfig, VerifyMode, VerifySummary};
use crate::error::Error;
use crate::exact::{
    full_enumeration_kind, tree_exact, ExactResult, HerdingChain, DEFAULT_ENUMERATION_CAP,
};
use crate::montecarlo::{default_probes, run_trials, ThetaMode, TrialConfig};
use crate::protocol::ProtocolKind;
use crate::report::{
    estimate_rows, exact_rows, prior_rows, write_rows, CompareRow, OutputFormat, SeriesRow,
};
use crate::signal::{SignalParams, StateOfNature};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "HERDSIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "herdsim",
    version,
    about = "Sequential social learning protocol laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate p_n and reveal frequencies by Monte Carlo.
    Simulate(SimulateArgs),
    /// Exact p_n and reveal probabilities for deterministic protocols.
    Exact(ExactArgs),
    /// Check the reveal and correctness bounds; exit 1 on any violation.
    Verify(VerifyArgs),
    /// One table with several protocols side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.4)]
    pub q0: f64,
    #[arg(long, default_value_t = 0.6)]
    pub q1: f64,
    /// Largest agent index; accepts decimal or `2^k`.
    #[arg(long, default_value = "4096", value_parser = parse_index)]
    pub n: u128,
    /// `0`, `1`, `prior` or `prior:<p>`.
    #[arg(long, default_value = "1")]
    pub theta: ThetaMode,
    /// P[θ = 1] the herding agents reason with; `--theta prior:<p>` overrides it.
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
    /// Agent indices to report (comma separated); default: powers of two up to n, plus n.
    #[arg(long = "probe", value_delimiter = ',', value_parser = parse_index)]
    pub probes: Vec<u128>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ProtocolKind::TreeDeterministic)]
    pub protocol: ProtocolKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactChoice {
    /// Closed form for tree, full enumeration for herding.
    Auto,
    ClosedForm,
    Enumeration,
    /// Herding public-belief chain (any n).
    Chain,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum, default_value_t = ProtocolKind::TreeDeterministic)]
    pub protocol: ProtocolKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ExactChoice::Auto)]
    pub method: ExactChoice,
    /// Largest n full enumeration accepts.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ProtocolKind::TreeDeterministic)]
    pub protocol: ProtocolKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = VerifyMode::Exact)]
    pub mode: VerifyMode,
    /// Exact mode checks every n up to this index, plus the powers of two beyond it.
    #[arg(long, default_value = "8192", value_parser = parse_index)]
    pub dense_limit: u128,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Also write per-index rows at ε*.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Exact values where an oracle exists, estimates otherwise.
    Auto,
    Montecarlo,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "tree,randomized,herding"
    )]
    pub protocols: Vec<ProtocolKind>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Source::Auto)]
    pub source: Source,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses a decimal index or `2^k`.
pub fn parse_index(s: &str) -> Result<u128, String> {
    let value = match s.split_once('^') {
        Some(("2", exp)) => {
            let k: u32 = exp
                .trim()
                .parse()
                .map_err(|e| format!("bad exponent in `{s}`: {e}"))?;
            if k >= 128 {
                return Err(format!("`{s}` does not fit in 128 bits"));
            }
            1u128 << k
        }
        Some(_) => return Err(format!("only powers of 2 are accepted in `{s}`")),
        None => s
            .trim()
            .parse()
            .map_err(|e| format!("bad index `{s}`: {e}"))?,
    };
    if value == 0 {
        Err("agent indices start at 1".to_string())
    } else {
        Ok(value)
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EnumerationCap { .. }
            | Error::ChainNotConverged { .. }
            | Error::SimulationLimit(_) => EXIT_CAP,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult<T> = Result<T, Failure>;

impl ModelArgs {
    pub fn params(&self) -> CmdResult<SignalParams> {
        Ok(SignalParams::new(self.q0, self.q1)?)
    }

    /// Prior the herding agents use.
    pub fn agent_prior(&self) -> f64 {
        match self.theta {
            ThetaMode::Prior(p) => p,
            ThetaMode::Fixed(_) => self.prior,
        }
    }

    pub fn probe_list(&self) -> CmdResult<Vec<u128>> {
        let mut probes = if self.probes.is_empty() {
            default_probes(self.n)
        } else {
            self.probes.clone()
        };
        probes.sort_unstable();
        probes.dedup();
        if let Some(&bad) = probes.iter().find(|&&p| p > self.n) {
            return Err(Error::ProbeOutOfRange {
                index: bad,
                n: self.n,
            }
            .into());
        }
        Ok(probes)
    }

    fn trial_config(
        &self,
        protocol: ProtocolKind,
        sampling: &SamplingArgs,
    ) -> CmdResult<TrialConfig> {
        Ok(TrialConfig {
            protocol,
            params: self.params()?,
            prior: self.agent_prior(),
            theta_mode: self.theta,
            n: self.n,
            trials: sampling.trials,
            seed: sampling.seed,
            probes: self.probe_list()?,
        })
    }
}

/// Monte Carlo rows for one protocol.
pub fn cmd_simulate(
    protocol: ProtocolKind,
    model: &ModelArgs,
    sampling: &SamplingArgs,
    workers: usize,
) -> CmdResult<Vec<SeriesRow>> {
    let config = model.trial_config(protocol, sampling)?;
    let series = run_trials(&config, workers)?;
    Ok(estimate_rows(&series, &config.params))
}

fn exact_results(
    protocol: ProtocolKind,
    model: &ModelArgs,
    method: ExactChoice,
    cap: u32,
    theta: StateOfNature,
) -> CmdResult<Vec<ExactResult>> {
    let params = model.params()?;
    let prior = model.agent_prior();
    let probes = model.probe_list()?;
    let enumerate = || -> CmdResult<Vec<ExactResult>> {
        if model.n > u128::from(cap.min(crate::exact::MAX_ENUMERATION_CAP)) {
            return Err(Error::EnumerationCap { n: model.n, cap }.into());
        }
        let all = full_enumeration_kind(protocol, &params, prior, theta, model.n as u32, cap)?;
        Ok(probes.iter().map(|&i| all[(i - 1) as usize]).collect())
    };
    match (protocol, method) {
        (ProtocolKind::RandomizedReveal, _) => Err(Error::NoExactOracle("randomized").into()),
        (ProtocolKind::TreeDeterministic, ExactChoice::Auto | ExactChoice::ClosedForm) => probes
            .iter()
            .map(|&n| tree_exact(n, &params, theta).map_err(Failure::from))
            .collect(),
        (ProtocolKind::TreeDeterministic, ExactChoice::Enumeration) => enumerate(),
        (ProtocolKind::TreeDeterministic, ExactChoice::Chain) => Err(usage(
            "the cascade chain only applies to the herding protocol",
        )),
        (ProtocolKind::RationalHerding, ExactChoice::Auto | ExactChoice::Enumeration) => {
            enumerate()
        }
        (ProtocolKind::RationalHerding, ExactChoice::Chain) => {
            let chain = HerdingChain::new(&params, prior, theta)?;
            probes
                .iter()
                .map(|&n| chain.at(n).map_err(Failure::from))
                .collect()
        }
        (ProtocolKind::RationalHerding, ExactChoice::ClosedForm) => {
            Err(usage("the closed form only applies to the tree protocol"))
        }
    }
}

/// Exact rows per θ, followed by prior-weighted rows.
pub fn cmd_exact(
    protocol: ProtocolKind,
    model: &ModelArgs,
    method: ExactChoice,
    cap: u32,
) -> CmdResult<Vec<SeriesRow>> {
    let params = model.params()?;
    let zero = exact_rows(
        protocol,
        &exact_results(protocol, model, method, cap, StateOfNature::Zero)?,
        &params,
    );
    let one = exact_rows(
        protocol,
        &exact_results(protocol, model, method, cap, StateOfNature::One)?,
        &params,
    );
    let prior = prior_rows(&zero, &one, model.agent_prior());
    Ok(zero.into_iter().chain(one).chain(prior).collect())
}

/// Rows for one protocol under `compare`.
fn compare_rows(
    protocol: ProtocolKind,
    model: &ModelArgs,
    source: Source,
    sampling: &SamplingArgs,
    workers: usize,
) -> CmdResult<Vec<SeriesRow>> {
    if source == Source::Montecarlo || !protocol.is_deterministic() {
        return cmd_simulate(protocol, model, sampling, workers);
    }
    let method = match protocol {
        ProtocolKind::RationalHerding => ExactChoice::Chain,
        _ => ExactChoice::ClosedForm,
    };
    let params = model.params()?;
    let rows = |theta| -> CmdResult<Vec<SeriesRow>> {
        Ok(exact_rows(
            protocol,
            &exact_results(protocol, model, method, 0, theta)?,
            &params,
        ))
    };
    match model.theta {
        ThetaMode::Fixed(theta) => rows(theta),
        ThetaMode::Prior(p) => Ok(prior_rows(
            &rows(StateOfNature::Zero)?,
            &rows(StateOfNature::One)?,
            p,
        )),
    }
}

pub enum CompareTable {
    Single(Vec<SeriesRow>),
    Multi(Vec<CompareRow>),
}

pub fn cmd_compare(args: &CompareArgs, workers: usize) -> CmdResult<CompareTable> {
    let mut protocols = Vec::new();
    for &p in &args.protocols {
        if !protocols.contains(&p) {
            protocols.push(p);
        }
    }
    if protocols.is_empty() {
        return Err(usage("compare needs at least one protocol"));
    }
    if protocols.len() == 1 {
        return Ok(CompareTable::Single(compare_rows(
            protocols[0],
            &args.model,
            args.source,
            &args.sampling,
            workers,
        )?));
    }
    let mut table = Vec::new();
    for &p in &protocols {
        let rows = compare_rows(p, &args.model, args.source, &args.sampling, workers)?;
        table.extend(rows.into_iter().map(|r| CompareRow::new(p, r)));
    }
    Ok(CompareTable::Multi(table))
}

pub fn verify_config(args: &VerifyArgs) -> CmdResult<VerifyConfig> {
    Ok(VerifyConfig {
        protocol: args.protocol,
        params: args.model.params()?,
        prior: args.model.agent_prior(),
        n_max: args.model.n,
        mode: args.mode,
        probes: args.model.probes.clone(),
        dense_limit: args.dense_limit,
        trials: args.sampling.trials,
        seed: args.sampling.seed,
    })
}

/// Per-(θ, n) rows at ε* built from verification reports.
pub fn verify_rows(reports: &[BoundReport], epsilon: f64) -> Vec<SeriesRow> {
    let mut rows: Vec<SeriesRow> = Vec::new();
    for r in reports.iter().filter(|r| r.epsilon == epsilon) {
        let mode = ThetaMode::Fixed(r.theta).to_string();
        let existing = rows
            .iter_mut()
            .rev()
            .find(|row| row.index == r.n && row.theta_mode == mode);
        let row = match existing {
            Some(row) => row,
            None => {
                rows.push(SeriesRow {
                    index: r.n,
                    theta_mode: mode,
                    p: f64::NAN,
                    ci_low: None,
                    ci_high: None,
                    p_reveal: 0.0,
                    reveal_bound: r.reveal_bound,
                    correct_bound: r.correct_bound,
                    satisfied: true,
                    method: r.method.clone(),
                });
                rows.last_mut().expect("just pushed")
            }
        };
        match r.check {
            CheckKind::Correctness => {
                row.p = r.value;
                if r.slack > 0.0 {
                    row.ci_low = Some((r.value - r.slack).max(0.0));
                    row.ci_high = Some((r.value + r.slack).min(1.0));
                }
            }
            CheckKind::Reveal => row.p_reveal = r.value,
        }
        row.satisfied &= r.satisfied;
    }
    rows
}

fn print_summary(
    out: &mut dyn Write,
    config: &VerifyConfig,
    reports: &[BoundReport],
) -> std::io::Result<()> {
    let derived = config.params.derived();
    let probes = reports
        .iter()
        .filter(|r| {
            r.theta == StateOfNature::Zero
                && r.epsilon == derived.epsilon_star
                && r.check == CheckKind::Correctness
        })
        .count();
    writeln!(
        out,
        "verify protocol={} q0={} q1={} eps*={} mode={} probes={}",
        config.protocol,
        config.params.q0(),
        config.params.q1(),
        derived.epsilon_star,
        match config.mode {
            VerifyMode::Exact => "exact",
            VerifyMode::MonteCarlo => "montecarlo",
        },
        probes
    )?;
    writeln!(
        out,
        "{:<6}{:<12}{:<13}{:>9}{:>13}{:>12}",
        "theta", "epsilon", "check", "reports", "non-vacuous", "violations"
    )?;
    for theta in StateOfNature::BOTH {
        for eps in config.epsilons() {
            for check in [CheckKind::Correctness, CheckKind::Reveal] {
                let group: Vec<&BoundReport> = reports
                    .iter()
                    .filter(|r| r.theta == theta && r.epsilon == eps && r.check == check)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                writeln!(
                    out,
                    "{:<6}{:<12}{:<13}{:>9}{:>13}{:>12}",
                    theta.to_string(),
                    format!("{eps:.6}"),
                    match check {
                        CheckKind::Correctness => "correctness",
                        CheckKind::Reveal => "reveal",
                    },
                    group.len(),
                    group.iter().filter(|r| !r.vacuous).count(),
                    group.iter().filter(|r| !r.satisfied).count()
                )?;
            }
        }
    }
    let summary = VerifySummary::new(reports);
    if !summary.violations.is_empty() {
        writeln!(out, "violations:")?;
        for r in summary.violations.iter().take(25) {
            let (bound, relation) = match r.check {
                CheckKind::Correctness => (r.correct_bound, "<"),
                CheckKind::Reveal => (r.reveal_bound, ">"),
            };
            writeln!(
                out,
                "  n={} theta={} eps={} {:?}: value={:.12} {} bound={:.12} (slack {:.3e})",
                r.n, r.theta, r.epsilon, r.check, r.value, relation, bound, r.slack
            )?;
        }
        if summary.violations.len() > 25 {
            writeln!(out, "  ... {} more", summary.violations.len() - 25)?;
        }
    }
    if summary.all_vacuous() {
        writeln!(out, "note: all bounds in this range are vacuous")?;
    }
    if summary.passed() {
        writeln!(
            out,
            "result: VERIFIED ({} reports, {} non-vacuous)",
            summary.total, summary.non_vacuous
        )
    } else {
        writeln!(
            out,
            "result: VIOLATED ({} of {} reports)",
            summary.violations.len(),
            summary.total
        )
    }
}

fn emit<T: Serialize>(
    rows: &[T],
    format: OutputFormat,
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
) -> CmdResult<()> {
    let result = match path {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            write_rows(rows, format, BufWriter::new(file))
        }
        None => write_rows(rows, format, stdout),
    };
    result.map_err(|e| usage(format!("failed to write output: {e}")))
}

fn dispatch(cli: Cli, workers: usize, stdout: &mut dyn Write) -> CmdResult<i32> {
    match cli.command {
        Command::Simulate(args) => {
            let rows = cmd_simulate(args.protocol, &args.model, &args.sampling, workers)?;
            emit(&rows, args.output.format, &args.output.out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Exact(args) => {
            let rows = cmd_exact(args.protocol, &args.model, args.method, args.cap)?;
            emit(&rows, args.output.format, &args.output.out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let config = verify_config(&args)?;
            let reports = verify(&config, workers)?;
            if args.out.is_some() {
                let rows = verify_rows(&reports, config.params.derived().epsilon_star);
                emit(&rows, args.format, &args.out, stdout)?;
            }
            print_summary(stdout, &config, &reports).map_err(|e| usage(e.to_string()))?;
            Ok(if VerifySummary::new(&reports).passed() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            })
        }
        Command::Compare(args) => {
            match cmd_compare(&args, workers)? {
                CompareTable::Single(rows) => {
                    emit(&rows, args.output.format, &args.output.out, stdout)?
                }
                CompareTable::Multi(rows) => {
                    emit(&rows, args.output.format, &args.output.out, stdout)?
                }
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// `workers = 0` uses every core. Returns the process exit code.
pub fn run<I, T>(args: I, workers: usize, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, workers, stdout) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

/// Reads the worker count from `HERDSIM_THREADS` (unset or empty = all cores).
pub fn workers_from_env() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("{THREADS_ENV}={v:?} is not a worker count: {e}")),
        Err(_) => Ok(0),
    }
}
