use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use plancycle::curation::{self, Hyperparameters, SftSource};
use plancycle::generators::{self, DomainId};
use plancycle::par::Execution;
use plancycle::pddl;
use plancycle::pipeline::{self, RunConfig, TraceStore};
use plancycle::policy::ExampleBank;
use plancycle::policy::Trace;
use plancycle::rlcheck::{self, SuiteConfig};
use plancycle::validator;

#[derive(Parser)]
#[command(name = "plancycle", version, about = "Iterative deployment loop for PDDL planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a plan; exits 0 when valid, 1 when invalid.
    Validate { domain: PathBuf, problem: PathBuf, plan: PathBuf },
    /// Generate a task set with oracle plan lengths.
    GenTasks {
        #[arg(long)]
        domain: DomainId,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Generator parameter, e.g. `--aux width=10`.
        #[arg(long, value_parser = parse_aux)]
        aux: Vec<(String, f64)>,
        #[arg(long)]
        sequential: bool,
    },
    /// Run or resume the deploy/validate/curate loop.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_root`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute metrics from a trace store.
    Metrics {
        #[arg(long)]
        root: PathBuf,
        /// Where to write metrics.json and the CSVs (default: `root`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a fine-tuning set from stored traces.
    Curate {
        /// Output root or domain directory of a previous `run`.
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        domain: Option<DomainId>,
        /// Generations to draw from: `N`, `A..B` or `A..=B`, end inclusive.
        #[arg(long, value_parser = parse_gens)]
        gens: (u32, u32),
        #[arg(long, value_enum, default_value_t = Mode::Curated)]
        mode: Mode,
        /// Only this run's traces; all runs are pooled when omitted.
        #[arg(long)]
        run: Option<u32>,
        /// Take hyperparameters from this run config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Numerical check of the REINFORCE/SFT gradient identities.
    RlCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        fd_cases: usize,
        #[arg(long, default_value_t = 5)]
        sgd_cases: usize,
        /// Print only the summary, not every case.
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Curated,
    Uncurated,
}

fn parse_aux(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("{v:?} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_gens(s: &str) -> Result<(u32, u32), String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad generation {t:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => (num(s)?, num(s)?),
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { domain, problem, plan } => {
            let d = pddl::parse_domain(&read(&domain)?).with_context(|| domain.display().to_string())?;
            let p = pddl::parse_problem(&read(&problem)?, &d).with_context(|| problem.display().to_string())?;
            let steps = validator::parse_plan(&read(&plan)?).with_context(|| plan.display().to_string())?;
            let verdict = validator::validate(&d, &p, &steps);
            print_json(&verdict)?;
            Ok(if verdict.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::GenTasks { domain, count, seed, out, aux, sequential } => {
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let aux: BTreeMap<String, f64> = aux.into_iter().collect();
            let set = generators::gen_taskset_with(domain, count, seed, &aux, exec)?;
            let plans = generators::oracle_plans(&set, exec);
            let lengths: Vec<Option<usize>> = plans.iter().map(|p| p.as_ref().ok().map(|p| p.len())).collect();
            let manifest = generators::write_taskset(&set, &lengths, &out)?;
            let unsolved = lengths.iter().filter(|l| l.is_none()).count();
            eprintln!("wrote {} {} tasks to {} ({unsolved} without oracle plan)", set.len(), domain, out.display());
            print_json(&manifest)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output_root = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = pipeline::run_iterative(&cfg)?;
            let awaiting: Vec<_> = outcome
                .awaiting
                .iter()
                .map(|a| {
                    json!({
                        "domain": a.domain,
                        "generation": a.generation,
                        "run": a.run,
                        "sft_dir": a.sft_dir,
                        "model_ref_file": a.model_ref_file,
                    })
                })
                .collect();
            for a in &outcome.awaiting {
                eprintln!(
                    "{} generation {} run {}: fine-tune on {} and write the model name to {}",
                    a.domain,
                    a.generation,
                    a.run,
                    a.sft_dir.display(),
                    a.model_ref_file.display()
                );
            }
            print_json(&json!({ "metrics": outcome.report, "awaiting": awaiting }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { root, out } => {
            let report = pipeline::metrics_from_store(&root)?;
            if report.domains.is_empty() {
                bail!("no completed generations under {}", root.display());
            }
            report.write(out.as_deref().unwrap_or(&root))?;
            print_json(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Curate { root, domain, gens, mode, run, config, out } => {
            let dir = domain_dir(&root, domain)?;
            let (taskset, _) = generators::read_taskset(&dir.join("tasks"))?;
            let store = TraceStore::new(dir.join("traces"));
            let mut by_gen: Vec<Vec<Trace>> = Vec::new();
            for g in gens.0..=gens.1 {
                let runs: Vec<u32> = match run {
                    Some(r) => vec![r],
                    None => (0..).take_while(|r| store.path(g, *r).exists()).collect(),
                };
                let mut traces = Vec::new();
                for r in runs {
                    if !store.path(g, r).exists() {
                        bail!("no traces at {}", store.path(g, r).display());
                    }
                    traces.extend(store.load(g, r)?.into_iter().map(|rec| rec.trace));
                }
                if traces.is_empty() {
                    bail!("generation {g} has no traces under {}", store.root().display());
                }
                by_gen.push(traces);
            }
            let hyper = match config {
                Some(p) => RunConfig::load(&p)?.hyperparameters,
                None => Hyperparameters::default(),
            };
            let bank = ExampleBank::standard();
            let manifest = match mode {
                Mode::Curated => {
                    let valid: Vec<_> =
                        by_gen.iter().map(|t| curation::filter_valid_with(t, &taskset, Execution::Parallel)).collect();
                    let set = curation::aggregate(&valid);
                    curation::export_sft(SftSource::Curated(&set), &taskset, &bank, &hyper, &out)?
                }
                Mode::Uncurated => {
                    let samples = curation::aggregate_uncurated(&by_gen, &taskset);
                    curation::export_sft(SftSource::Uncurated(&samples), &taskset, &bank, &hyper, &out)?
                }
            };
            print_json(&manifest)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RlCheck { cases, tol, seed, fd_cases, sgd_cases, summary } => {
            let cfg = SuiteConfig { cases, tol, seed, fd_cases, sgd_cases };
            let report = rlcheck::run_suite(&cfg);
            if summary {
                print_json(&json!({ "config": report.config, "summary": report.summary, "pass": report.pass }))?;
            } else {
                print_json(&report)?;
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

/// Accepts either a domain directory (holding `tasks/`) or an output root.
fn domain_dir(root: &Path, domain: Option<DomainId>) -> Result<PathBuf> {
    if let Some(d) = domain {
        let dir = root.join(d.name());
        if dir.join("tasks").is_dir() {
            return Ok(dir);
        }
    }
    if root.join("tasks").is_dir() {
        return Ok(root.to_path_buf());
    }
    let found: Vec<PathBuf> =
        DomainId::ALL.iter().map(|d| root.join(d.name())).filter(|p| p.join("tasks").is_dir()).collect();
    match found.as_slice() {
        [one] => Ok(one.clone()),
        [] => bail!("no task set under {}", root.display()),
        _ => bail!("{} holds several domains; pass --domain", root.display()),
    }
}
