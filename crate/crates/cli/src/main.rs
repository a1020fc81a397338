use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ftqec::codes::{self, load_code, BUILTIN_CODES};
use ftqec::gadgets::{self, GadgetSpec};
use ftqec::program::{parse, well_formed, Program};
use ftqec::smt::{Encoding, SolverConfig};
use ftqec::verify::{brute_force, verify, BasisChoice, BruteOptions, Mode, Status, Verdict, VerifyOptions};

#[derive(Parser)]
#[command(name = "ftqec", version, about = "Fault-tolerance verifier for quantum error-correction gadgets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify a gadget program symbolically with an SMT solver.
    Verify(VerifyArgs),
    /// List the built-in codes.
    ListCodes {
        /// Include the large codes.
        #[arg(long)]
        large: bool,
    },
    /// Write a generated gadget program as `.cqp`.
    GenGadget {
        /// Gadget kind (see `--help` of `verify --builtin`).
        kind: String,
        #[arg(long)]
        code: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cross-check by exhaustive Pauli fault enumeration.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct Source {
    /// Program file (`.cqp`).
    file: Option<PathBuf>,
    /// Built-in gadget: cat4_good, cat4_bad, cat8, or KIND:CODE with KIND
    /// one of prep0, prep1, prep_plus, prep_plus_i, cnot, measure,
    /// measure_2t, ec, ec_bad_ordering, distill_ec.
    #[arg(long)]
    builtin: Option<String>,
    /// Code for the gadget (overrides the program's `code` line).
    #[arg(long)]
    code: Option<String>,
    /// Allow the large codes.
    #[arg(long)]
    large: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    src: Source,
    /// Fault budget; defaults to the code's t.
    #[arg(long)]
    t: Option<usize>,
    /// ft or ideal; defaults to the gadget's own mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// z, x or both.
    #[arg(long, default_value = "both")]
    basis: BasisChoice,
    /// Solver binary; falls back to FTQEC_SOLVER, then `z3`.
    #[arg(long)]
    solver: Option<String>,
    /// Per-query timeout in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Parallel solver processes.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write every SMT query to this directory.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
    /// Write the verdict as JSON (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// low-weight, quantified or expanded.
    #[arg(long, default_value = "low-weight")]
    encoding: Encoding,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    src: Source,
    /// Fault budget.
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, default_value = "both")]
    basis: BasisChoice,
    /// Give up after this many concrete runs.
    #[arg(long, default_value_t = 5_000_000)]
    max_runs: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

struct Loaded {
    program: Program,
    mode: Mode,
    default_t: Option<usize>,
}

fn check_size(name: &str, large: bool) -> Result<()> {
    if codes::is_large(name) && !large {
        bail!("code {name} is large; pass --large to use it");
    }
    Ok(())
}

fn load(src: &Source) -> Result<Loaded> {
    let (mut program, mode) = match (&src.file, &src.builtin) {
        (Some(_), Some(_)) => bail!("give either a file or --builtin, not both"),
        (None, None) => bail!("give a program file or --builtin NAME"),
        (Some(f), None) => {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            let p = parse(&text).map_err(|e| anyhow!("{}:{e}", f.display()))?;
            (p, Mode::Ft)
        }
        (None, Some(name)) => {
            let spec: GadgetSpec = match (&src.code, name.contains(':')) {
                (Some(c), false) if !gadgets::NAMED.contains(&name.as_str()) => {
                    check_size(c, src.large)?;
                    gadgets::build(name, Some(&load_code(c)?))?
                }
                _ => {
                    if let Some((_, c)) = name.split_once(':') {
                        check_size(c, src.large)?;
                    }
                    gadgets::builtin(name)?
                }
            };
            (spec.program, spec.mode)
        }
    };
    if let (Some(c), Some(_)) = (&src.code, &src.file) {
        program.code = Some(c.clone());
    }
    if let Some(c) = &program.code {
        check_size(c, src.large)?;
    }
    well_formed(&program).map_err(|e| anyhow!("{e}"))?;
    let default_t = match &program.code {
        Some(c) => Some(load_code(c)?.t()),
        None => None,
    };
    Ok(Loaded { program, mode, default_t })
}

fn json_to_stdout(out: &Option<PathBuf>) -> bool {
    out.as_ref().is_some_and(|p| p.as_os_str() == "-")
}

fn emit_json(v: &Verdict, out: &Option<PathBuf>) -> Result<()> {
    match out {
        None => Ok(()),
        Some(p) if p.as_os_str() == "-" => {
            println!("{}", v.to_json());
            Ok(())
        }
        Some(p) => std::fs::write(p, v.to_json() + "\n").with_context(|| format!("writing {}", p.display())),
    }
}

fn report(v: &Verdict) {
    let status = match v.status {
        Status::FaultTolerant => "fault_tolerant",
        Status::NotFaultTolerant => "not_fault_tolerant",
        Status::Inconclusive => "inconclusive",
    };
    println!("verdict: {status}");
    if let Some(r) = &v.reason {
        println!("reason: {r}");
    }
    let s = &v.stats;
    if s.runs > 0 {
        println!("runs: {}  wall: {} ms", s.runs, s.wall_ms);
    } else {
        println!(
            "paths: {}  queries: {} (sat {}, unsat {}, unknown {})  solver: {} ms  wall: {} ms",
            s.paths, s.queries, s.sat, s.unsat, s.unknown, s.solver_ms, s.wall_ms
        );
    }
    for d in &v.diagnostics {
        println!("note: {d}");
    }
    if let Some(c) = &v.counterexample {
        println!("counterexample ({} input):", c.basis.name());
        println!("  violated: {}", c.violated_condition);
        if !c.logical_phases.is_empty() {
            let bits: String = c.logical_phases.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("  logical phases: {bits}");
        }
        for e in &c.input_errors {
            println!("  input error {} on q{} (block {})", e.pauli, e.qubit, e.block);
        }
        for f in &c.faults {
            let at = if f.line > 0 { format!("line {}", f.line) } else { format!("stmt {}", f.stmt) };
            let qs: Vec<String> = f.qubits.iter().map(|q| format!("q{q}")).collect();
            match &f.pre {
                Some(pre) => println!("  fault at {at} ({} {}): {pre} before, {} after", f.op, qs.join(" "), f.pauli),
                None => println!("  fault at {at} ({} {}): {}", f.op, qs.join(" "), f.pauli),
            }
        }
        for (k, b) in &c.outcomes {
            println!("  outcome {k} = {}", *b as u8);
        }
        for (k, bits) in &c.decoder_outputs {
            println!("  decoder {k} = {bits}");
        }
        let errs: Vec<String> =
            c.output_errors.iter().map(|e| e.map_or_else(|| "?".to_string(), |w| w.to_string())).collect();
        if !errs.is_empty() {
            println!("  output errors per block: {}", errs.join(", "));
        }
        println!("  replay: {}", if c.replay_ok { "confirmed" } else { "failed" });
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::ListCodes { large } => {
            for name in BUILTIN_CODES {
                if codes::is_large(name) && !large {
                    continue;
                }
                let c = codes::builtin(name)?;
                println!("{:<14} [[{},{},{}]]  t={}", c.name, c.n, c.k, c.d, c.t());
            }
            Ok(0)
        }
        Cmd::GenGadget { kind, code, output } => {
            let code = code.map(|c| load_code(&c)).transpose()?;
            let spec = gadgets::build(&kind, code.as_ref())?;
            std::fs::write(&output, spec.program.to_string())
                .with_context(|| format!("writing {}", output.display()))?;
            Ok(0)
        }
        Cmd::Verify(a) => {
            let l = load(&a.src)?;
            let t = a.t.or(l.default_t).ok_or_else(|| anyhow!("--t is required for programs without a code"))?;
            let solver = SolverConfig::resolve(a.solver.as_deref(), Duration::from_secs_f64(a.timeout));
            let mut opts = VerifyOptions::new(t, solver);
            opts.mode = a.mode.unwrap_or(l.mode);
            opts.bases = a.basis;
            opts.encoding = a.encoding;
            opts.dump_smt = a.dump_smt;
            if let Some(j) = a.jobs {
                opts.jobs = j.max(1);
            }
            let v = verify(&l.program, &opts)?;
            if !json_to_stdout(&a.json) {
                report(&v);
            }
            emit_json(&v, &a.json)?;
            Ok(v.exit_code())
        }
        Cmd::OracleCheck(a) => {
            let l = load(&a.src)?;
            let mut opts = BruteOptions::new(a.budget);
            opts.mode = a.mode.unwrap_or(l.mode);
            opts.bases = a.basis;
            opts.max_runs = a.max_runs;
            let v = brute_force(&l.program, &opts)?;
            if !json_to_stdout(&a.json) {
                report(&v);
            }
            emit_json(&v, &a.json)?;
            Ok(v.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
