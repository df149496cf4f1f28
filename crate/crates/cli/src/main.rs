use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use delayline::ctransform::{c_transform, in_class_a, in_class_b, unique_representation_check_limited};
use delayline::greedy::{greedy_from_partition_capped, normalize_partition, BSource, DEFAULT_MAX_M};
use delayline::mri::{mri_recursive, MriQuery};
use delayline::search::{brute_force_optimal, Evaluator, SearchOptions, SearchResult, Space, CAP_A, CAP_B};
use delayline::simulator::{
    bernoulli_streams, simulate_compressor, simulate_fifo_mux, ConflictReport, Mode, PacketTrace,
    SimConfig, MAX_HORIZON,
};
use delayline::tables::{diff_against_golden, generate_table, TableId};
use delayline::verify::{optimal_greedy_sweep, run_verification_suite, Scope, SuiteReport};
use delayline::{DelaySeq, Error, GreedyMode, PartitionSeq, Scanner, Strictness, DEFAULT_SCAN_LIMIT};

const EXIT_VERIFY: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_CAPACITY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "delayline", version, about = "Fiber delay line sequences under a recirculation budget")]
struct Cli {
    /// key = value file presetting workers, caps and the scan limit.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// C-transform of one or more values.
    Ctransform(CtransformArgs),
    /// Maximum representable integer B(d;k).
    Mri(MriArgs),
    /// Greedy delays of a composition.
    Greedy(GreedyArgs),
    /// Move units into the first part until it is at least 2.
    Normalize {
        #[arg(long, value_delimiter = ',', required = true)]
        parts: Vec<usize>,
    },
    /// Optimal sequences over A, B or the greedy family.
    Search(SearchArgs),
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Exhaustive checks of the identities and theorems.
    Verify(VerifyArgs),
    /// Regenerate a published table and compare it with its golden file.
    Table {
        id: String,
    },
}

#[derive(Args, Debug)]
struct CtransformArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    delays: Vec<u64>,
    /// Values to transform; all of 0..=sum(d) when omitted.
    #[arg(long, value_delimiter = ',')]
    x: Vec<u64>,
    /// Report class membership and unique representability instead.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct MriArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    delays: Vec<u64>,
    #[arg(long)]
    k: u32,
    /// Also print the transform of every 0..=sum(d) (columns x, I1..IM).
    #[arg(long)]
    table: bool,
    /// Use the recursion (nondecreasing sequences) and report the pivot.
    #[arg(long)]
    recursive: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GreedyModeArg {
    Closed,
    Scan,
    Recursive,
}

#[derive(Args, Debug)]
struct GreedyArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    parts: Vec<usize>,
    #[arg(long, value_enum, default_value = "closed")]
    mode: GreedyModeArg,
    /// Accept a first part equal to 1 (recursive modes only).
    #[arg(long)]
    permissive: bool,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value = "A")]
    space: String,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    prune: bool,
    /// Evaluate each leaf with the scan oracle.
    #[arg(long)]
    scan: bool,
}

#[derive(Subcommand, Debug)]
enum SimulateCommand {
    /// Single-input linear compressor.
    Compressor {
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<u64>,
        #[arg(long)]
        k: u32,
        /// CSV with columns slot,delay.
        #[arg(long)]
        arrivals: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
        /// Write traces here instead of stdout.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// 2-to-1 FIFO multiplexer with Bernoulli inputs.
    Mux {
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<u64>,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0.4)]
        p1: f64,
        #[arg(long, default_value_t = 0.4)]
        p2: f64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        traces: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VerifyScope {
    Lemmas,
    Theorems,
    All,
    OptimalGreedy,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    scope: VerifyScope,
    #[arg(long = "Mmax", default_value_t = 7)]
    mmax: usize,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    workers: Option<usize>,
    cap_a: Option<usize>,
    cap_b: Option<usize>,
    scan_limit: Option<u64>,
    max_m: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Human,
    Json,
    Csv,
}

struct Ctx {
    format: Format,
    config: Config,
    out: io::StdoutLock<'static>,
}

impl Ctx {
    fn workers(&self, flag: Option<usize>) -> usize {
        flag.or(self.config.workers).unwrap_or(0)
    }

    fn scanner(&self) -> Scanner {
        Scanner::with_limit(self.config.scan_limit.unwrap_or(DEFAULT_SCAN_LIMIT))
    }

    fn json(&mut self, value: &impl serde::Serialize) -> Result<()> {
        writeln!(self.out, "{}", serde_json::to_string(value)?)?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_capacity() => EXIT_CAPACITY,
        Some(Error::GoldenMismatch { .. }) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Human
    };
    let mut ctx = Ctx {
        format,
        config: load_config(cli.config.as_ref())?,
        out: io::stdout().lock(),
    };
    match cli.command {
        Command::Ctransform(a) => ctransform(&mut ctx, a),
        Command::Mri(a) => mri(&mut ctx, a),
        Command::Greedy(a) => greedy(&mut ctx, a),
        Command::Normalize { parts } => normalize(&mut ctx, parts),
        Command::Search(a) => search(&mut ctx, a),
        Command::Simulate(s) => simulate(&mut ctx, s),
        Command::Verify(a) => verify(&mut ctx, a),
        Command::Table { id } => table(&mut ctx, &id),
    }
}

fn bits_csv(bits: &[u8]) -> String {
    bits.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

fn transform_header(m: usize) -> String {
    let mut h = vec!["x".to_string()];
    h.extend((1..=m).map(|i| format!("I{i}")));
    h.join(",")
}

fn ctransform(ctx: &mut Ctx, a: CtransformArgs) -> Result<u8> {
    let d = DelaySeq::new(a.delays)?;
    if a.check {
        let unique = unique_representation_check_limited(&d, ctx.scanner().limit)?;
        let report = serde_json::json!({
            "delays": d,
            "class_a": in_class_a(&d),
            "class_b": in_class_b(&d),
            "unique_representation": unique,
        });
        match ctx.format {
            Format::Json => ctx.json(&report)?,
            _ => writeln!(
                ctx.out,
                "class A: {}\nclass B: {}\nunique representation: {unique}",
                in_class_a(&d),
                in_class_b(&d)
            )?,
        }
        return Ok(0);
    }
    let xs: Vec<u64> = if a.x.is_empty() {
        if d.total() > ctx.scanner().limit {
            return Err(Error::ScanLimit { total: d.total(), limit: ctx.scanner().limit }.into());
        }
        (0..=d.total()).collect()
    } else {
        a.x
    };
    let reps = xs
        .iter()
        .map(|&x| c_transform(x, &d))
        .collect::<delayline::Result<Vec<_>>>()?;
    match ctx.format {
        Format::Json => ctx.json(&reps)?,
        Format::Csv => {
            writeln!(ctx.out, "{}", transform_header(d.len()))?;
            for r in &reps {
                writeln!(ctx.out, "{},{}", r.value, bits_csv(&r.bits))?;
            }
        }
        Format::Human => {
            for (x, r) in xs.iter().zip(&reps) {
                write!(ctx.out, "x={x} bits=({}) ones={}", bits_csv(&r.bits), r.popcount())?;
                if r.residual == 0 {
                    writeln!(ctx.out)?;
                } else {
                    writeln!(ctx.out, " represents {} (residual {})", r.value, r.residual)?;
                }
            }
        }
    }
    Ok(0)
}

fn mri(ctx: &mut Ctx, a: MriArgs) -> Result<u8> {
    let d = DelaySeq::new(a.delays)?;
    let scanner = ctx.scanner();
    let (value, pivot) = if a.recursive {
        let r = mri_recursive(&MriQuery::new(d.clone(), a.k))?;
        (r.value, Some(r.pivot))
    } else {
        (scanner.scan(&d, a.k)?, None)
    };
    let rows = if a.table {
        (0..=d.total()).map(|x| c_transform(x, &d)).collect::<delayline::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    match ctx.format {
        Format::Json => {
            let mut v = serde_json::json!({ "delays": d, "k": a.k, "B": value });
            if let Some(p) = pivot {
                v["pivot"] = p.into();
            }
            if a.table {
                v["table"] = serde_json::to_value(&rows)?;
            }
            ctx.json(&v)?;
        }
        Format::Csv if a.table => {
            writeln!(ctx.out, "{}", transform_header(d.len()))?;
            for r in &rows {
                writeln!(ctx.out, "{},{}", r.value, bits_csv(&r.bits))?;
            }
        }
        Format::Csv => writeln!(ctx.out, "B\n{value}")?,
        Format::Human => {
            write!(ctx.out, "B({d};{}) = {value}", a.k)?;
            match pivot {
                Some(p) => writeln!(ctx.out, " (pivot l' = {p})")?,
                None => writeln!(ctx.out)?,
            }
            if a.table {
                writeln!(ctx.out, "{}", transform_header(d.len()))?;
                for r in &rows {
                    writeln!(ctx.out, "{},{}", r.value, bits_csv(&r.bits))?;
                }
            }
        }
    }
    Ok(0)
}

fn greedy(ctx: &mut Ctx, a: GreedyArgs) -> Result<u8> {
    let n = PartitionSeq::new(a.parts)?;
    if n.m() != a.m || n.k() != a.k {
        bail!(Error::InconsistentIndex(format!(
            "parts {n} sum to {} with {} blocks, but --M {} --k {} were given",
            n.m(),
            n.k(),
            a.m,
            a.k
        )));
    }
    let mode = match a.mode {
        GreedyModeArg::Closed => GreedyMode::ClosedForm,
        GreedyModeArg::Scan => GreedyMode::RecursiveB(BSource::Scan),
        GreedyModeArg::Recursive => GreedyMode::RecursiveB(BSource::Recursive),
    };
    let strictness = if a.permissive { Strictness::Permissive } else { Strictness::Strict };
    let g = greedy_from_partition_capped(&n, mode, strictness, ctx.config.max_m.unwrap_or(DEFAULT_MAX_M))?;
    let header: Vec<String> = std::iter::once("i".to_string())
        .chain((1..=g.delays.len()).map(|i| i.to_string()))
        .collect();
    let row: Vec<String> = std::iter::once("d_i".to_string())
        .chain(g.delays.as_slice().iter().map(|v| v.to_string()))
        .collect();
    match ctx.format {
        Format::Json => ctx.json(&serde_json::json!({
            "partition": g.partition,
            "delays": g.delays,
            "B": g.b(),
            "block_B": g.b_values,
        }))?,
        Format::Csv => writeln!(ctx.out, "{}\n{}", header.join(","), row.join(","))?,
        Format::Human => {
            writeln!(ctx.out, "{}\n{}", header.join(","), row.join(","))?;
            writeln!(ctx.out, "B(d;{}) = {}", a.k, g.b())?;
        }
    }
    Ok(0)
}

fn normalize(ctx: &mut Ctx, parts: Vec<usize>) -> Result<u8> {
    let n = PartitionSeq::new(parts)?;
    let norm = normalize_partition(&n)?;
    match ctx.format {
        Format::Json => ctx.json(&serde_json::json!({ "input": n, "normalized": norm }))?,
        Format::Csv => writeln!(ctx.out, "{}", norm.parts().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","))?,
        Format::Human => writeln!(ctx.out, "{n} -> {norm}")?,
    }
    Ok(0)
}

fn search(ctx: &mut Ctx, a: SearchArgs) -> Result<u8> {
    let space: Space = a.space.parse()?;
    let opts = SearchOptions {
        workers: ctx.workers(a.workers),
        prune: a.prune,
        evaluator: if a.scan { Evaluator::Scan } else { Evaluator::Incremental },
        cap_a: ctx.config.cap_a.unwrap_or(CAP_A),
        cap_b: ctx.config.cap_b.unwrap_or(CAP_B),
    };
    let r = brute_force_optimal(a.m, a.k, space, &opts)?;
    eprintln!("searched {} leaves in {:.3?}", r.instances_examined, r.wall_time);
    print_search(ctx, &r)?;
    Ok(0)
}

fn print_search(ctx: &mut Ctx, r: &SearchResult) -> Result<()> {
    match ctx.format {
        Format::Json => ctx.json(r)?,
        Format::Csv => {
            writeln!(ctx.out, "B,delays")?;
            for d in &r.argmax_set {
                let cells: Vec<String> = d.as_slice().iter().map(|v| v.to_string()).collect();
                writeln!(ctx.out, "{},\"{}\"", r.best_b, cells.join(","))?;
            }
        }
        Format::Human => {
            writeln!(
                ctx.out,
                "space {} M={} k={}: best B = {} ({} maximizer(s), {} examined)",
                r.space.letter(),
                r.m,
                r.k,
                r.best_b,
                r.argmax_set.len(),
                r.instances_examined
            )?;
            for (i, d) in r.argmax_set.iter().enumerate() {
                match r.argmax_partitions.get(i) {
                    Some(ns) => {
                        let ns: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
                        writeln!(ctx.out, "  {d}  n = {}", ns.join(" "))?
                    }
                    None => writeln!(ctx.out, "  {d}")?,
                }
            }
        }
    }
    Ok(())
}

fn read_arrivals(path: &PathBuf) -> Result<Vec<(u64, u64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<(u64, u64)>().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedArrivals(format!("row {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn emit_traces(ctx: &mut Ctx, traces: &[PacketTrace], path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
            for t in traces {
                writeln!(f, "{}", serde_json::to_string(t)?)?;
            }
            f.flush()?;
        }
        None => {
            for t in traces {
                writeln!(ctx.out, "{}", serde_json::to_string(t)?)?;
            }
        }
    }
    Ok(())
}

fn simulate(ctx: &mut Ctx, cmd: SimulateCommand) -> Result<u8> {
    let (traces, report, path, strict) = match cmd {
        SimulateCommand::Compressor { delays, k, arrivals, horizon, traces } => {
            let cfg = SimConfig {
                d: DelaySeq::new(delays)?,
                k,
                horizon: horizon.unwrap_or(MAX_HORIZON),
                mode: Mode::Compressor,
                seed: 0,
            };
            let arrivals = read_arrivals(&arrivals)?;
            let (t, r) = simulate_compressor(&cfg, &arrivals)?;
            // Departure contention is a property of the input, not a fault.
            (t, r, traces, false)
        }
        SimulateCommand::Mux { delays, k, p1, p2, horizon, seed, traces } => {
            for p in [p1, p2] {
                if !(0.0..=1.0).contains(&p) {
                    bail!(Error::InvalidRange(format!("probability {p} is outside [0, 1]")));
                }
            }
            let cfg = SimConfig {
                d: DelaySeq::new(delays)?,
                k,
                horizon,
                mode: Mode::FifoMux,
                seed,
            };
            if horizon > MAX_HORIZON {
                bail!(Error::InvalidRange(format!("horizon {horizon} exceeds 2^48 slots")));
            }
            let (a, b) = bernoulli_streams(horizon, p1, p2, seed);
            let (t, r) = simulate_fifo_mux(&cfg, &a, &b)?;
            (t, r, traces, true)
        }
    };
    emit_traces(ctx, &traces, path.as_ref())?;
    let summary = serde_json::json!({ "summary": summary_value(&report) });
    ctx.json(&summary)?;
    let failed = strict && !report.clean() || !report.capacity_violations.is_empty();
    Ok(if failed { EXIT_VERIFY } else { 0 })
}

fn summary_value(r: &ConflictReport) -> serde_json::Value {
    serde_json::json!({
        "packets": r.packets,
        "delivered": r.delivered,
        "flagged_unreliable": r.flagged_unreliable,
        "lost_overflow": r.lost_overflow,
        "effective_capacity": r.effective_capacity,
        "fiber_conflicts": r.fiber_conflicts.len(),
        "departure_conflicts": r.departure_conflicts.len(),
        "fifo_violations": r.fifo_violations.len(),
        "work_conservation_violations": r.work_conservation_violations.len(),
        "capacity_violations": r.capacity_violations.len(),
        "first_fiber_conflict": r.fiber_conflicts.first(),
        "first_departure_conflict": r.departure_conflicts.first(),
    })
}

fn verify(ctx: &mut Ctx, a: VerifyArgs) -> Result<u8> {
    let workers = ctx.workers(a.workers);
    let scope = match a.scope {
        VerifyScope::OptimalGreedy => return verify_optimal(ctx, a.mmax, workers),
        VerifyScope::Lemmas => Scope::Lemmas,
        VerifyScope::Theorems => Scope::Theorems,
        VerifyScope::All => Scope::All,
    };
    let report = run_verification_suite(scope, a.mmax, workers)?;
    print_suite(ctx, &report)?;
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

fn print_suite(ctx: &mut Ctx, r: &SuiteReport) -> Result<()> {
    match ctx.format {
        Format::Json => ctx.json(r)?,
        Format::Csv => {
            writeln!(ctx.out, "name,instances,vacuous,failures")?;
            for t in &r.tallies {
                writeln!(ctx.out, "{},{},{},{}", t.name, t.instances, t.vacuous, t.failures)?;
            }
        }
        Format::Human => {
            for t in &r.tallies {
                let status = if t.failures == 0 { "PASS" } else { "FAIL" };
                writeln!(
                    ctx.out,
                    "{status} {:<30} {:>10} instances ({} vacuous, {} failures)",
                    t.name, t.instances, t.vacuous, t.failures
                )?;
                if let Some(f) = &t.first_failure {
                    writeln!(ctx.out, "     first failure: {f}")?;
                }
            }
            for o in &r.observations {
                writeln!(ctx.out, "note: {o}")?;
            }
            writeln!(
                ctx.out,
                "{} ({} instances)",
                if r.passed { "PASS" } else { "FAIL" },
                r.total_instances()
            )?;
        }
    }
    Ok(())
}

fn verify_optimal(ctx: &mut Ctx, mmax: usize, workers: usize) -> Result<u8> {
    if mmax > CAP_A {
        bail!(Error::SpaceTooLarge {
            space: 'A',
            m: mmax,
            cap: CAP_A,
            estimate: delayline::search::size_estimate(Space::A, mmax),
        });
    }
    let reports = optimal_greedy_sweep(mmax, workers)?;
    let passed = reports.iter().all(|r| r.passed());
    match ctx.format {
        Format::Json => ctx.json(&reports)?,
        Format::Csv => {
            writeln!(ctx.out, "M,k,verdict,max_A,max_B,argmax_count")?;
            for r in &reports {
                writeln!(
                    ctx.out,
                    "{},{},{},{},{},{}",
                    r.m,
                    r.k,
                    serde_json::to_value(r.verdict)?.as_str().unwrap_or(""),
                    r.max_a,
                    r.max_b,
                    r.argmax_count
                )?;
            }
        }
        Format::Human => {
            for r in &reports {
                let argmax: Vec<String> = r.argmax_a.iter().map(|d| d.to_string()).collect();
                writeln!(
                    ctx.out,
                    "M={:<2} k={:<2} {:<15} B={:<6} argmax {}",
                    r.m,
                    r.k,
                    format!("{:?}", r.verdict),
                    r.max_a,
                    argmax.join(" ")
                )?;
                for c in &r.counterexamples {
                    writeln!(ctx.out, "    counterexample: {c}")?;
                }
            }
            writeln!(ctx.out, "{}", if passed { "PASS" } else { "FAIL" })?;
        }
    }
    Ok(if passed { 0 } else { EXIT_VERIFY })
}

fn table(ctx: &mut Ctx, id: &str) -> Result<u8> {
    let id: TableId = id.parse()?;
    let t = generate_table(id)?;
    let diffs = diff_against_golden(&t)?;
    match ctx.format {
        Format::Json => ctx.json(&t)?,
        Format::Csv => write!(ctx.out, "{}", t.to_csv()?)?,
        Format::Human => write!(ctx.out, "{}", t.to_human())?,
    }
    if diffs.is_empty() {
        Ok(0)
    } else {
        Err(Error::GoldenMismatch { table: id.name().to_string(), diffs }.into())
    }
}
