//! `w1`: solve, verify and inspect uniform CSP instances, run the subset-sum
//! and hitting-set reductions, and execute or audit NRAM programs.
//!
//! Exit codes: 0 yes/accepted/passed, 1 no/rejected/failed, 2 usage or input error.

use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use w1_core::bench::{bench, lookups_independent_of_n};
use w1_core::gen::GeneratorConfig;
use w1_core::hitting::{solve_hitting_with, HypergraphFamilyInstance};
use w1_core::nram::{
    assemble, audit, run, subset_sum_bounds, subset_sum_preload, subset_sum_program, AuditBounds, DivRounding,
    GuessResolver, MachineConfig, NramProgram, Outcome, RunReport, DEFAULT_BUDGET, SUBSET_SUM_ASM,
};
use w1_core::selftest::{run_all, SelftestConfig};
use w1_core::subset_sum::{solve as solve_subset_sum, SubsetSumInstance};
use w1_core::verifier::{oracle_solve, solve_with, verify_certificate, SearchOptions, DEFAULT_MAX_CANDIDATES};
use w1_core::weighted::{solve_wcsp_with, WeightedCspInstance};
use w1_core::{build_tables, normalize, parse_instance, Assignment, BuildOptions, CspInstance};

const YES: u8 = 0;
const NO: u8 = 1;
const ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "w1", version, about = "Parameterized verification for uniform CSPs, subset sum and NRAM programs")]
struct Cli {
    /// Worker threads for candidate enumeration.
    #[arg(long, global = true, env = "W1_JOBS")]
    jobs: Option<usize>,

    /// Refuse searches with more candidates than this.
    #[arg(long, global = true, env = "W1_MAX_CANDIDATES", default_value_t = DEFAULT_MAX_CANDIDATES)]
    max_candidates: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a size-k satisfying assignment, or check a certificate.
    Solve(SolveArgs),
    /// Check one certificate (`x=1,z=1`) against the verification tables.
    Verify {
        file: String,
        certificate: String,
        #[command(flatten)]
        opts: CheckOpts,
    },
    /// Brute-force decision straight from the constraints.
    Oracle { file: String },
    /// Build and inspect the verification tables.
    Tables(TablesArgs),
    /// Pick k of the values summing to the target; indices are printed 1-based.
    SubsetSum(SubsetSumArgs),
    /// Weighted Boolean CSP: constraints plus a weight target.
    Wcsp {
        file: String,
        #[arg(long)]
        stats: bool,
    },
    /// Find S of size k with S ∩ V_i an edge of every hypergraph.
    HittingSet { file: String },
    /// Run or audit nondeterministic RAM programs.
    #[command(subcommand)]
    Nram(NramCommand),
    /// Print a seeded random instance.
    Gen(GenArgs),
    /// Run the property suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of the full case counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Table-build time and per-candidate lookups on a chain family as n grows.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 50, 100, 500])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Args)]
struct CheckOpts {
    /// Also cross-check accepted witnesses against the constraints in release builds.
    #[arg(long)]
    paranoid: bool,
    /// Print lookup counts as `d=<n> l=<n> nodes=<n>`.
    #[arg(long)]
    stats: bool,
    /// Build the frontier without the empty-support addition.
    #[arg(long)]
    no_patch: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Enumerate,
    Verify,
}

#[derive(Args)]
struct SolveArgs {
    file: String,
    #[arg(long, value_enum, default_value_t = Mode::Enumerate)]
    mode: Mode,
    /// Certificate for `--mode verify`.
    #[arg(long)]
    certificate: Option<String>,
    /// Check candidates one at a time on the calling thread.
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    opts: CheckOpts,
}

#[derive(Args)]
struct TablesArgs {
    file: String,
    /// Print every d and l entry.
    #[arg(long)]
    dump: bool,
    /// Print the satisfying sets as an instance document.
    #[arg(long)]
    dump_satsets: bool,
    #[arg(long)]
    no_patch: bool,
    /// Drop frontier elements larger than k.
    #[arg(long)]
    prune: bool,
}

#[derive(Args)]
struct SubsetSumArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    values: Vec<String>,
    #[arg(long)]
    target: String,
    /// Digit width is f + 1.
    #[arg(long)]
    f: Option<u32>,
}

#[derive(Subcommand)]
enum NramCommand {
    /// Execute a program.
    Run {
        program: String,
        #[command(flatten)]
        machine: MachineArgs,
        /// Print one line per executed step (tape and random resolution).
        #[arg(long)]
        trace: bool,
    },
    /// Execute a program and compare its resource use with the given bounds.
    Audit {
        program: String,
        #[command(flatten)]
        machine: MachineArgs,
        /// `steps=..,nondet=..,reg=..,value=..,tail=..`
        #[arg(long)]
        bounds: String,
    },
    /// Print the bundled subset-sum program.
    Program,
    /// Print the register preload and manifest bounds of the bundled program for one input.
    Preload(NramSubsetSum),
    /// Run the bundled program on one input under exhaustive guessing and audit it.
    SubsetSum(NramSubsetSum),
}

#[derive(Args)]
struct MachineArgs {
    /// Register preload `r1=5,r2=3`.
    #[arg(long, default_value = "")]
    init: String,
    /// `tape:3,1,4`, `exhaustive`, or `random[:seed]`.
    #[arg(long, default_value = "exhaustive")]
    guess: String,
    /// Step cap per run.
    #[arg(long, env = "W1_NRAM_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Rounding::Floor)]
    rounding: Rounding,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rounding {
    Floor,
    HalfUp,
}

#[derive(Args)]
struct NramSubsetSum {
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    values: Vec<String>,
    #[arg(long)]
    target: String,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    f: Option<u32>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 5)]
    vars: usize,
    #[arg(long, default_value_t = 2)]
    domain: usize,
    #[arg(long, default_value_t = 3)]
    constraints: usize,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a weight per variable.
    #[arg(long)]
    weights: bool,
    /// Add a weight target.
    #[arg(long)]
    target: bool,
    #[arg(long, default_value_t = 20)]
    max_weight: u64,
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).context("reading standard input")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn load_instance(path: &str) -> Result<CspInstance> {
    parse_instance(&read_input(path)?).with_context(|| format!("invalid instance {path}"))
}

fn show(inst: &CspInstance, a: &Assignment) -> String {
    if a.is_empty() {
        "{}".into()
    } else {
        inst.display(a).to_string()
    }
}

fn parse_certificate(inst: &CspInstance, text: &str) -> Result<Assignment> {
    let text = if text.trim() == "{}" { "" } else { text };
    inst.parse_assignment(text).with_context(|| format!("invalid certificate `{text}`"))
}

fn build_options(no_patch: bool, prune: bool) -> BuildOptions {
    BuildOptions {
        patch_empty: !no_patch,
        prune_oversize: prune,
    }
}

fn decimal(s: &str) -> Result<BigUint> {
    s.trim().parse().map_err(|_| anyhow!("`{s}` is not a nonnegative decimal integer"))
}

fn decimals(items: &[String]) -> Result<Vec<BigUint>> {
    items.iter().map(|s| decimal(s)).collect()
}

fn cmd_solve(args: SolveArgs, max_candidates: u64) -> Result<u8> {
    let inst = load_instance(&args.file)?;
    let options = SearchOptions {
        build: build_options(args.opts.no_patch, false),
        max_candidates,
        parallel: !args.deterministic,
        paranoid: args.opts.paranoid,
    };
    match args.mode {
        Mode::Verify => {
            let cert = args
                .certificate
                .as_deref()
                .ok_or_else(|| anyhow!("--mode verify needs --certificate"))?;
            check_certificate(&inst, cert, &options, args.opts.stats)
        }
        Mode::Enumerate => {
            if args.certificate.is_some() {
                bail!("--certificate only applies to --mode verify");
            }
            let report = solve_with(&inst, &options)?;
            match &report.witness {
                Some(w) => println!("{}", show(&inst, w)),
                None => println!("unsatisfiable"),
            }
            if args.opts.stats {
                println!("{}", report.stats);
                println!("candidates={}", report.candidates_checked);
            }
            Ok(if report.witness.is_some() { YES } else { NO })
        }
    }
}

fn check_certificate(inst: &CspInstance, cert: &str, options: &SearchOptions, stats: bool) -> Result<u8> {
    let b = parse_certificate(inst, cert)?;
    let (ok, lookups) = verify_certificate(inst, &b, options)?;
    println!("{}", if ok { "accepted" } else { "rejected" });
    if stats {
        println!("{lookups}");
    }
    Ok(if ok { YES } else { NO })
}

fn cmd_tables(args: TablesArgs) -> Result<u8> {
    let inst = load_instance(&args.file)?;
    let normalized = normalize(&inst, inst.k());
    if args.dump_satsets {
        print!("{}", normalized.to_document().to_json());
    }
    let tables = build_tables(&normalized, build_options(args.no_patch, args.prune))?;
    if args.dump {
        print!("{}", tables.dump(&inst));
    }
    if !args.dump && !args.dump_satsets {
        let s = tables.stats();
        println!(
            "blocks={} frontier={} d_entries={} l_entries={} d_nodes={} l_nodes={}",
            s.blocks, s.frontier, s.d_entries, s.l_entries, s.d_nodes, s.l_nodes
        );
    }
    Ok(YES)
}

fn cmd_subset_sum(args: SubsetSumArgs, max_candidates: u64) -> Result<u8> {
    if args.values.len() != args.n {
        bail!("--n {} but {} values given", args.n, args.values.len());
    }
    let inst = SubsetSumInstance::new(decimals(&args.values)?, decimal(&args.target)?, args.k, args.f)?;
    match solve_subset_sum(&inst, max_candidates)? {
        Some(subset) => {
            let shown: Vec<String> = subset.iter().map(|i| (i + 1).to_string()).collect();
            println!("{}", if shown.is_empty() { "{}".into() } else { shown.join(",") });
            Ok(YES)
        }
        None => {
            println!("unsatisfiable");
            Ok(NO)
        }
    }
}

fn cmd_wcsp(file: &str, stats: bool, max_candidates: u64) -> Result<u8> {
    let base = load_instance(file)?;
    let inst = WeightedCspInstance::from_instance(base)?;
    let report = solve_wcsp_with(&inst, BuildOptions::default(), max_candidates)?;
    match &report.witness {
        Some(w) => println!("{}", show(inst.base(), w)),
        None => println!("unsatisfiable"),
    }
    if stats {
        println!("{}", report.stats);
        println!("candidates={} weight_failures={}", report.candidates_checked, report.weight_failures);
    }
    Ok(if report.witness.is_some() { YES } else { NO })
}

fn cmd_hitting(file: &str, max_candidates: u64) -> Result<u8> {
    let h = HypergraphFamilyInstance::parse(&read_input(file)?).with_context(|| format!("invalid family {file}"))?;
    let options = SearchOptions {
        max_candidates,
        ..SearchOptions::default()
    };
    match solve_hitting_with(&h, &options)? {
        Some(s) if s.is_empty() => println!("{{}}"),
        Some(s) => println!("{}", s.into_iter().collect::<Vec<_>>().join(",")),
        None => {
            println!("unsatisfiable");
            return Ok(NO);
        }
    }
    Ok(YES)
}

fn parse_init(text: &str) -> Result<Vec<(usize, u64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (reg, val) = item.split_once('=').ok_or_else(|| anyhow!("`{item}` is not `rN=value`"))?;
            let reg = reg.trim();
            let reg = reg.strip_prefix('r').or_else(|| reg.strip_prefix('R')).unwrap_or(reg);
            Ok((
                reg.parse().with_context(|| format!("bad register in `{item}`"))?,
                val.trim().parse().with_context(|| format!("bad value in `{item}`"))?,
            ))
        })
        .collect()
}

fn parse_guess(text: &str) -> Result<GuessResolver> {
    let text = text.trim();
    if text == "exhaustive" {
        return Ok(GuessResolver::Exhaustive);
    }
    if text == "random" {
        return Ok(GuessResolver::Random(0));
    }
    if let Some(seed) = text.strip_prefix("random:") {
        return Ok(GuessResolver::Random(seed.parse().context("bad random seed")?));
    }
    if let Some(tape) = text.strip_prefix("tape:") {
        let tape = tape
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().with_context(|| format!("bad tape entry `{s}`")))
            .collect::<Result<_>>()?;
        return Ok(GuessResolver::Tape(tape));
    }
    bail!("--guess must be tape:..., exhaustive or random[:seed], got `{text}`")
}

fn parse_bounds(text: &str) -> Result<AuditBounds> {
    let mut fields = [None; 5];
    const NAMES: [&str; 5] = ["steps", "nondet", "reg", "value", "tail"];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, val) = item.split_once('=').ok_or_else(|| anyhow!("`{item}` is not `name=value`"))?;
        let slot = NAMES
            .iter()
            .position(|n| *n == name.trim())
            .ok_or_else(|| anyhow!("unknown bound `{name}`; expected one of {}", NAMES.join(", ")))?;
        fields[slot] = Some(val.trim().parse::<u64>().with_context(|| format!("bad bound `{item}`"))?);
    }
    let get = |i: usize| fields[i].ok_or_else(|| anyhow!("--bounds is missing `{}`", NAMES[i]));
    Ok(AuditBounds {
        step_bound: get(0)?,
        nondet_bound: get(1)?,
        register_bound: get(2)?,
        value_bound: get(3)?,
        tail_window: get(4)?,
    })
}

fn format_bounds(b: &AuditBounds) -> String {
    format!(
        "steps={},nondet={},reg={},value={},tail={}",
        b.step_bound, b.nondet_bound, b.register_bound, b.value_bound, b.tail_window
    )
}

fn load_program(path: &str) -> Result<NramProgram> {
    assemble(&read_input(path)?).with_context(|| format!("assembling {path}"))
}

fn machine_config(m: &MachineArgs, trace: bool) -> MachineConfig {
    MachineConfig {
        budget: m.budget,
        rounding: match m.rounding {
            Rounding::Floor => DivRounding::Floor,
            Rounding::HalfUp => DivRounding::HalfUp,
        },
        record_trace: trace,
        ..MachineConfig::default()
    }
}

fn print_run(report: &RunReport) {
    println!("outcome {}", report.outcome);
    let a = report.primary();
    println!(
        "steps={} nondet={} max_register={} max_value={} tail={}",
        a.total_steps,
        a.nondet_count(),
        a.max_register_index,
        a.max_value_stored,
        a.tail_depth()
    );
    if report.runs.len() > 1 {
        println!("runs={}", report.runs.len());
    }
}

fn outcome_code(o: Outcome) -> u8 {
    if o == Outcome::Accept {
        YES
    } else {
        NO
    }
}

fn subset_sum_input(args: &NramSubsetSum) -> Result<SubsetSumInstance> {
    Ok(SubsetSumInstance::new(decimals(&args.values)?, decimal(&args.target)?, args.k, args.f)?)
}

fn cmd_nram(cmd: NramCommand) -> Result<u8> {
    match cmd {
        NramCommand::Run { program, machine, trace } => {
            let p = load_program(&program)?;
            let resolver = parse_guess(&machine.guess)?;
            let report = run(&p, &parse_init(&machine.init)?, &resolver, &machine_config(&machine, trace))?;
            for t in report.trace.iter().flatten() {
                let guess = t.guess.map(|g| format!(" guess={g}")).unwrap_or_default();
                println!("step {} pc={} {}{guess}", t.step, t.pc, t.instr);
            }
            print_run(&report);
            Ok(outcome_code(report.outcome))
        }
        NramCommand::Audit { program, machine, bounds } => {
            let p = load_program(&program)?;
            let report = audit(
                &p,
                &parse_init(&machine.init)?,
                &parse_guess(&machine.guess)?,
                &parse_bounds(&bounds)?,
                &machine_config(&machine, false),
            )?;
            print!("{report}");
            println!("outcome {}", report.outcome);
            Ok(if report.passed() { YES } else { NO })
        }
        NramCommand::Program => {
            print!("{SUBSET_SUM_ASM}");
            Ok(YES)
        }
        NramCommand::Preload(args) => {
            let inst = subset_sum_input(&args)?;
            let tables = inst.tables();
            let (_, init) = subset_sum_preload(&tables, inst.k());
            let init: Vec<String> = init.iter().map(|(r, v)| format!("r{r}={v}")).collect();
            println!("init {}", init.join(","));
            println!("bounds {}", format_bounds(&subset_sum_bounds(&tables, inst.k())));
            Ok(YES)
        }
        NramCommand::SubsetSum(args) => {
            let inst = subset_sum_input(&args)?;
            let tables = inst.tables();
            let (_, init) = subset_sum_preload(&tables, inst.k());
            let bounds = subset_sum_bounds(&tables, inst.k());
            let report = audit(subset_sum_program(), &init, &GuessResolver::Exhaustive, &bounds, &MachineConfig::default())?;
            print!("{report}");
            println!("outcome {}", report.outcome);
            if !report.passed() {
                bail!("bundled program exceeded its manifest");
            }
            Ok(outcome_code(report.outcome))
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let cfg = GeneratorConfig {
        vars: args.vars,
        domain: args.domain,
        constraints: args.constraints,
        arity_cap: args.arity,
        density: args.density,
        k: args.k,
        seed: args.seed,
        weights: args.weights,
        target: args.target,
        max_weight: args.max_weight,
    };
    if !(0.0..=1.0).contains(&cfg.density) {
        bail!("--density must lie in [0, 1]");
    }
    print!("{}", cfg.generate().to_json());
    Ok(YES)
}

fn cmd_selftest(seed: u64, scale: f64) -> Result<u8> {
    if scale.is_nan() || scale <= 0.0 {
        bail!("--scale must be positive");
    }
    let outcomes = run_all(&SelftestConfig { seed, scale });
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    for o in &outcomes {
        println!("{o}");
    }
    println!("selftest: {} passed, {failed} failed", outcomes.len() - failed);
    Ok(if failed == 0 { YES } else { NO })
}

fn cmd_bench(ns: &[usize], k: usize) -> Result<u8> {
    let start = Instant::now();
    let rows = bench(ns, k)?;
    for row in &rows {
        println!("{row}");
    }
    let same = lookups_independent_of_n(&rows);
    println!("per-candidate lookups independent of n: {}", if same { "yes" } else { "no" });
    log::info!("bench finished in {:?}", start.elapsed());
    Ok(if same { YES } else { NO })
}

fn dispatch(cli: Cli) -> Result<u8> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let cap = cli.max_candidates;
    match cli.command {
        Command::Solve(args) => cmd_solve(args, cap),
        Command::Verify { file, certificate, opts } => {
            let inst = load_instance(&file)?;
            let options = SearchOptions {
                build: build_options(opts.no_patch, false),
                max_candidates: cap,
                parallel: false,
                paranoid: opts.paranoid,
            };
            check_certificate(&inst, &certificate, &options, opts.stats)
        }
        Command::Oracle { file } => {
            let inst = load_instance(&file)?;
            match oracle_solve(&inst, cap)? {
                Some(w) => {
                    println!("{}", show(&inst, &w));
                    Ok(YES)
                }
                None => {
                    println!("unsatisfiable");
                    Ok(NO)
                }
            }
        }
        Command::Tables(args) => cmd_tables(args),
        Command::SubsetSum(args) => cmd_subset_sum(args, cap),
        Command::Wcsp { file, stats } => cmd_wcsp(&file, stats, cap),
        Command::HittingSet { file } => cmd_hitting(&file, cap),
        Command::Nram(cmd) => cmd_nram(cmd),
        Command::Gen(args) => cmd_gen(args),
        Command::Selftest { seed, scale } => cmd_selftest(seed, scale),
        Command::Bench { n, k } => cmd_bench(&n, k),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(ERROR)
        }
    }
}
