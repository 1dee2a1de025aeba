//! `seqproc`: generate targets, simulate the quantum processors, certify and
//! compute classical limits, encode and anneal, and approximate matrices.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seqproc::anneal::{anneal_frozen, anneal_poly, anneal_strategies, AnnealResult, Schedule};
use seqproc::apps::{complete, lowrank_approx, BinaryMatrix, LowRank, Method};
use seqproc::bounds::certify;
use seqproc::classical::{exact_oracle_with_budget, StrategySet, DEFAULT_ORACLE_BUDGET};
use seqproc::files;
use seqproc::pbo::{
    encode_correlation, errors_from_energy, freeze_module, quadratize, read_poly, write_poly, write_qubo, Encoding,
};
use seqproc::quantum::{
    generate_target, sample_shots, subset_statistics, ProcessorKind, QuantumProcessor, SamplerConfig, SignConvention,
};
use seqproc::reference::table_by_name;
use seqproc::{Error, TargetFunction};

#[derive(Parser, Debug)]
#[command(name = "seqproc", version, about, args_override_self = true)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file whose keys override command-line flags (`shots = 85000`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the deterministic target of a processor and print its matrix.
    GenTarget {
        kind: ProcessorKind,
        #[arg(long, default_value = "matrix")]
        convention: SignConvention,
    },
    /// Sample shots and report per-subset correlations.
    Simulate {
        kind: ProcessorKind,
        #[arg(long, default_value_t = 85_000)]
        shots: usize,
        #[arg(long, default_value_t = 1000)]
        subset_size: usize,
        /// Visibility in [0, 1]; omitted means ideal.
        #[arg(long)]
        visibility: Option<f64>,
        #[arg(long, default_value = "matrix")]
        convention: SignConvention,
        /// Count only post-selected detections towards `--shots`.
        #[arg(long)]
        detections: bool,
        /// Also write the raw shot log here.
        #[arg(long)]
        shot_log: Option<PathBuf>,
    },
    /// Check the structural lower-bound certificate of a target.
    Bound {
        /// `qubit3`, `qutrit3`, `qutrit4` or a target file.
        target: String,
    },
    /// Exact classical optimum; `--out` receives the witness strategy.
    Oracle {
        target: String,
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: f64,
    },
    /// Write the pseudo-Boolean encoding of a target.
    Encode {
        target: String,
        #[command(flatten)]
        enc: EncodeArgs,
        /// Quadratize and write a QUBO instead.
        #[arg(long)]
        qubo: bool,
    },
    /// Simulated annealing on a target (or a polynomial file).
    Anneal {
        /// Target name or file; omit when `--poly` is given.
        #[arg(long)]
        target: Option<String>,
        /// Anneal a polynomial file directly.
        #[arg(long, conflicts_with = "target")]
        poly: Option<PathBuf>,
        /// Anneal strategy tables instead of the binary encoding.
        #[arg(long, conflicts_with = "poly")]
        strategies: bool,
        #[command(flatten)]
        enc: EncodeArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Closest matrix with at most k distinct rows.
    Lowrank {
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "exact")]
        method: Method,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Fill unobserved (0) entries with at most k distinct rows.
    Complete {
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "exact")]
        method: Method,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// `bit`, `twobit` or `onehot`; default follows the link arity.
    #[arg(long)]
    encoding: Option<Encoding>,
    /// Fix a module: `1=TableIII` or `1=path/to/strategy.toml` (1-based).
    #[arg(long)]
    freeze: Vec<String>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    factor: Option<f64>,
}

impl ScheduleArgs {
    fn schedule(&self, seed: u64) -> Schedule {
        let d = Schedule::with_seed(seed);
        Schedule {
            initial_temperature: self.t0.or(d.initial_temperature),
            final_temperature: self.t_final.unwrap_or(d.final_temperature),
            factor: self.factor.unwrap_or(d.factor),
            sweeps: self.sweeps.unwrap_or(d.sweeps),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed,
        }
    }
}

/// Turn config keys into trailing flags, so they win over earlier ones.
fn config_flags(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let values = match value {
            toml::Value::Array(a) => a,
            v => vec![v],
        };
        for v in values {
            match v {
                toml::Value::Boolean(true) => flags.push(flag.clone()),
                toml::Value::Boolean(false) => {}
                toml::Value::String(s) => flags.extend([flag.clone(), s]),
                other => flags.extend([flag.clone(), other.to_string()]),
            }
        }
    }
    Ok(flags)
}

fn parse_cli() -> anyhow::Result<Cli> {
    let args: Vec<String> = std::env::args().collect();
    let first = Cli::parse_from(&args);
    match &first.config {
        None => Ok(first),
        Some(path) => {
            let mut all = args.clone();
            all.extend(config_flags(path)?);
            Ok(Cli::try_parse_from(all)?)
        }
    }
}

fn load_target(spec: &str) -> anyhow::Result<(String, TargetFunction)> {
    if let Ok(kind) = spec.parse::<ProcessorKind>() {
        let t = generate_target(&QuantumProcessor::new(kind), SignConvention::default());
        return Ok((kind.name().to_string(), t));
    }
    let text = fs::read_to_string(spec).map_err(Error::from).with_context(|| format!("reading {spec}"))?;
    Ok((spec.to_string(), files::read_target(&text)?))
}

fn load_strategy(spec: &str) -> anyhow::Result<StrategySet> {
    if let Some(s) = table_by_name(spec) {
        return Ok(s);
    }
    let text = fs::read_to_string(spec).map_err(Error::from).with_context(|| format!("reading {spec}"))?;
    Ok(files::read_strategy(&text)?)
}

/// Parse `module=strategy` pairs into 0-based module indices.
fn freezes(specs: &[String]) -> anyhow::Result<Vec<(usize, StrategySet)>> {
    let mut out: Vec<(usize, StrategySet)> = specs
        .iter()
        .map(|s| {
            let (m, src) = s
                .split_once('=')
                .ok_or_else(|| Error::Contract(format!("--freeze expects MODULE=STRATEGY, got {s:?}")))?;
            let m: usize = m
                .trim()
                .parse()
                .ok()
                .filter(|&m| m >= 1)
                .ok_or_else(|| Error::Contract(format!("bad module number in {s:?}")))?;
            Ok((m - 1, load_strategy(src.trim())?))
        })
        .collect::<anyhow::Result<_>>()?;
    // Freeze from the highest index down so earlier indices stay valid.
    out.sort_by_key(|s| std::cmp::Reverse(s.0));
    Ok(out)
}

fn encode(
    target: &TargetFunction,
    args: &EncodeArgs,
) -> anyhow::Result<(seqproc::pbo::PseudoBooleanPoly, seqproc::pbo::VariableLayout)> {
    let encoding = match args.encoding {
        Some(e) => e,
        None => Encoding::for_arity(target.topology().channel_arity())?,
    };
    let (mut poly, mut layout) = encode_correlation(target, encoding)?;
    for (m, s) in freezes(&args.freeze)? {
        if s.topology() != target.topology() {
            bail!(Error::Contract(format!("strategy for module {} has a different topology", m + 1)));
        }
        (poly, layout) = freeze_module(&poly, &layout, m, s.module(m))?;
    }
    Ok((poly, layout))
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> anyhow::Result<()> {
        match &self.path {
            Some(p) => fs::write(p, text).map_err(Error::from).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn is_file(&self) -> bool {
        self.path.is_some()
    }
}

fn classical_limit(target: &TargetFunction) -> Option<(usize, num_rational::Ratio<i64>)> {
    let cert = certify(target).ok()?;
    let e = cert.bound()?;
    Some((e, target.correlation_for_errors(e)))
}

#[derive(Serialize)]
struct AnnealReport {
    source: String,
    mode: &'static str,
    seed: u64,
    schedule: Schedule,
    num_vars: usize,
    best_energy: String,
    errors: Option<usize>,
    correlation: Option<String>,
    best_restart: usize,
    restart_energies: Vec<String>,
    assignment: String,
    strategy: Option<Vec<Vec<Vec<i8>>>>,
}

impl AnnealReport {
    fn new(source: String, mode: &'static str, schedule: Schedule, num_vars: usize, r: &AnnealResult) -> Self {
        Self {
            source,
            mode,
            seed: schedule.seed,
            schedule,
            num_vars,
            best_energy: r.energy.to_string(),
            errors: r.errors,
            correlation: None,
            best_restart: r.best_restart,
            restart_energies: r.restart_energies.iter().map(ToString::to_string).collect(),
            assignment: r.assignment.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            strategy: r.strategy.as_ref().map(|s| s.modules().iter().map(|m| m.rows()).collect()),
        }
    }
}

fn lowrank_report(r: &LowRank) -> String {
    format!("# distance {}\n{}", r.distance, files::write_matrix(&r.approximation))
}

type MatrixSolver = fn(&BinaryMatrix, usize, Method, &Schedule) -> seqproc::Result<LowRank>;

fn matrix_command(
    out: &Output,
    path: &Path,
    k: usize,
    method: Method,
    schedule: &Schedule,
    solve: MatrixSolver,
) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
    let r = solve(&files::read_matrix(&text)?, k, method, schedule)?;
    out.write(&lowrank_report(&r))?;
    if out.is_file() {
        println!("distance {}", r.distance);
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()?;
    }
    let out = Output { path: cli.out.clone() };
    let seed = cli.seed;
    match cli.command {
        Command::GenTarget { kind, convention } => {
            let t = generate_target(&QuantumProcessor::new(kind), convention);
            if out.is_file() {
                out.write(&files::write_target(&t))?;
                print!("{}", files::render_matrix(&files::display_matrix(&t)));
            } else {
                print!("{}", files::write_target(&t));
            }
        }
        Command::Simulate { kind, shots, subset_size, visibility, convention, detections, shot_log } => {
            let p = QuantumProcessor::new(kind);
            let target = generate_target(&p, convention);
            let config = SamplerConfig { num_shots: shots, seed, visibility, convention, count_detections: detections };
            let records = sample_shots(&p, &config)?;
            if let Some(path) = shot_log {
                let mut f = fs::File::create(&path).map_err(Error::from)?;
                files::write_shots(&records, &mut f)?;
                f.flush().map_err(Error::from)?;
            }
            let stats = subset_statistics(&records, &target, subset_size)?;
            let mut text = String::from("subset_index,correlation\n");
            for (i, c) in stats.correlations.iter().enumerate() {
                text += &format!("{i},{c}\n");
            }
            text +=
                &format!("# mean,stderr,discard_rate\n{},{},{}\n", stats.mean, stats.std_error, stats.discard_rate());
            out.write(&text)?;
            if out.is_file() {
                println!(
                    "{kind}: {} subsets, mean {:.4} ± {:.4}, discard rate {:.4}",
                    stats.correlations.len(),
                    stats.mean,
                    stats.std_error,
                    stats.discard_rate()
                );
            }
            if let Some((e, c)) = classical_limit(&target) {
                let gap = (stats.mean - *c.numer() as f64 / *c.denom() as f64) / stats.std_error;
                eprintln!("classical limit {c} ({e} errors); quantum mean exceeds it by {gap:.1} standard errors");
            }
        }
        Command::Bound { target } => {
            let (id, t) = load_target(&target)?;
            let mut cert = certify(&t)?;
            cert.target_id = id;
            if out.is_file() {
                out.write(&cert.to_json())?;
            }
            print!("{}", cert.render());
            match cert.bound() {
                Some(e) => {
                    println!("lower bound {e} errors => max classical correlation {}", t.correlation_for_errors(e))
                }
                None => bail!(Error::Contract("certificate failed".into())),
            }
        }
        Command::Oracle { target, budget } => {
            let (id, t) = load_target(&target)?;
            let r = exact_oracle_with_budget(&t, budget)?;
            let c = r.max_correlation;
            let summary = format!(
                "{id}: max classical correlation {c} = {} ({} errors, {} configurations)\n",
                *c.numer() as f64 / *c.denom() as f64,
                r.min_errors,
                r.configurations
            );
            if out.is_file() {
                out.write(&files::write_strategy(&r.witness))?;
                print!("{summary}");
            } else {
                print!("{summary}{}", files::write_strategy(&r.witness));
            }
        }
        Command::Encode { target, enc, qubo } => {
            let (_, t) = load_target(&target)?;
            let (poly, _) = encode(&t, &enc)?;
            let mut buf = Vec::new();
            if qubo {
                let q = quadratize(&poly, None)?;
                write_qubo(q.as_poly(), &mut buf)?;
                eprintln!(
                    "{} original + {} auxiliary variables, penalty {}",
                    q.num_original(),
                    q.aux().len(),
                    q.penalty()
                );
            } else {
                write_poly(&poly, &mut buf)?;
                eprintln!("{} variables, {} terms, degree {}", poly.num_vars(), poly.num_terms(), poly.degree());
            }
            out.write(&String::from_utf8(buf)?)?;
        }
        Command::Anneal { target, poly, strategies, enc, schedule } => {
            let schedule = schedule.schedule(seed);
            let report = match (target, poly) {
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path).map_err(Error::from)?;
                    let p = read_poly(&text)?;
                    let r = anneal_poly(&p, &schedule)?;
                    eprintln!("wall time {:.3}s", r.wall_time.as_secs_f64());
                    AnnealReport::new(path.display().to_string(), "poly", schedule, p.num_vars(), &r)
                }
                (Some(spec), None) => {
                    let (id, t) = load_target(&spec)?;
                    let (mode, vars, r) = if strategies {
                        if !enc.freeze.is_empty() {
                            bail!(Error::Contract("--freeze applies to the binary encoding only".into()));
                        }
                        ("strategies", 0, anneal_strategies(&t, &schedule)?)
                    } else {
                        let (p, layout) = encode(&t, &enc)?;
                        ("encoding", p.num_vars(), anneal_frozen(&p, &layout, &t, &schedule)?)
                    };
                    eprintln!("wall time {:.3}s", r.wall_time.as_secs_f64());
                    let mut rep = AnnealReport::new(id, mode, schedule, vars, &r);
                    let energy = r.energy.to_integer();
                    rep.errors = r.errors.or_else(|| errors_from_energy(t.support_size(), energy));
                    rep.correlation = rep.errors.map(|e| t.correlation_for_errors(e).to_string());
                    rep
                }
                _ => bail!(Error::Contract("give exactly one of --target or --poly".into())),
            };
            out.write(&(serde_json::to_string_pretty(&report)? + "\n"))?;
            if out.is_file() {
                println!(
                    "best energy {}, errors {}",
                    report.best_energy,
                    report.errors.map_or("-".into(), |e| e.to_string())
                );
            }
        }
        Command::Lowrank { matrix, k, method, schedule } => {
            matrix_command(&out, &matrix, k, method, &schedule.schedule(seed), lowrank_approx)?
        }
        Command::Complete { matrix, k, method, schedule } => {
            matrix_command(&out, &matrix, k, method, &schedule.schedule(seed), complete)?
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Contract(_) | Error::Parse(_) => 2,
                Error::TooLarge { .. } => 3,
                Error::Io(_) => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let result = parse_cli().and_then(run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
