//! The `tpka` command line.
//!
//! Exit codes: 0 success, 1 invalid input (flags, config, attack script),
//! 2 failure while running (failed trial, failed self-check, I/O).

mod config;
mod manifest;
mod verify;

pub use config::{DeploymentSection, ProtocolSection, RunConfig, SweepSection, VerifySection};
pub use manifest::{RunManifest, MANIFEST_SCHEMA};
pub use verify::{chain_replay, run_checks, session_agreement, Check};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::geometry::{connectivity_curve, local_connectivity_analytic, Scenario};
use crate::protocol::write_ndjson;
use crate::sim::{
    aggregate, deploy, expected_energy_uj, run_key_establishment, run_trials, AttackScript, EdgeMode, OpCounts,
    SimConfig, TrialOutcome,
};

/// Default output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "TPKA_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "tpka", version, about = "Third-party key agreement: analysis and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated seeds, a range `a..b`, or a count `N` meaning 0..N.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Output directory (default: $TPKA_OUT_DIR or ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub scenario: Option<Scenario>,
    #[arg(long = "edge-mode", global = true)]
    pub edge_mode: Option<EdgeMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic connectivity curves.
    Analyze,
    /// Monte Carlo trials with per-trial reports and an aggregate.
    Simulate {
        /// Also write a per-delivery trace for each seed.
        #[arg(long)]
        trace: bool,
    },
    /// Capture and impersonation experiment driven by a JSON script.
    Attack {
        #[arg(long)]
        script: PathBuf,
    },
    /// Expected per-node energy budget, with observed values if seeds are given.
    Energy,
    /// Numerical and protocol self-checks.
    Verify,
}

/// Parses `--seeds`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Validation(format!("--seeds: cannot parse '{text}'"));
    let text = text.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else if text.contains(',') {
        text.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    } else {
        (0..text.parse::<u64>().map_err(|_| bad())?).collect()
    };
    if seeds.is_empty() {
        return Err(CliError::Validation("--seeds selects no seeds".into()));
    }
    Ok(seeds)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    config: RunConfig,
    config_path: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    out: PathBuf,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, self.config_path.as_deref(), self.config.clone(), self.seeds.clone().unwrap_or_default())
    }

    fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![0])
    }

    fn sim_config(&self) -> Result<SimConfig, CliError> {
        self.config.sim_config(0)
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn finish(&self, manifest: RunManifest) -> Result<RunManifest, CliError> {
        let m = manifest.finalize(&self.out);
        self.write("manifest.json", &(serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n"))?;
        Ok(m)
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.scenario {
        config.deployment.scenario = s;
        config.sweep.scenarios = vec![s];
    }
    if let Some(m) = cli.edge_mode {
        config.deployment.edge_mode = m;
    }
    config.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let seeds = cli.seeds.as_deref().map(parse_seeds).transpose()?;
    let ctx = Context { config, config_path: cli.config.clone(), seeds, out };
    match &cli.command {
        Command::Analyze => cmd_analyze(&ctx),
        Command::Simulate { trace } => cmd_simulate(&ctx, *trace),
        Command::Attack { script } => cmd_attack(&ctx, script),
        Command::Energy => cmd_energy(&ctx),
        Command::Verify => cmd_verify(&ctx),
    }
}

fn cmd_analyze(ctx: &Context) -> Result<(), CliError> {
    let manifest = ctx.finish(ctx.manifest("analyze"))?;
    let points = connectivity_curve(&ctx.config.sweep());
    let mut csv = String::from("scenario,d,n,t,ratio,p_analytic,manifest\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", p.scenario, p.d, p.n, p.t, p.ratio, p.p_analytic, manifest.hash());
    }
    let path = ctx.write("analyze.csv", &csv)?;
    println!("wrote {} curve points to {}", points.len(), path.display());
    Ok(())
}

fn report_document(hash: &str, report: &impl serde::Serialize) -> String {
    let doc = serde_json::json!({ "manifest": hash, "report": report });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

fn cmd_simulate(ctx: &Context, trace: bool) -> Result<(), CliError> {
    let seeds = ctx.seeds();
    let cfg = ctx.sim_config()?;
    let manifest = ctx.finish(ctx.manifest("simulate"))?;
    info!("simulating {} seeds", seeds.len());
    let outcomes = run_trials(&cfg, &seeds, &AttackScript::default());
    write_outcomes(ctx, manifest.hash(), &outcomes)?;
    if trace {
        for &seed in &seeds {
            let mut c = cfg.clone();
            c.deployment.seed = seed;
            c.record_trace = true;
            let topo = deploy(&c.deployment, c.edge_mode).map_err(|e| CliError::Runtime(e.to_string()))?;
            let run = run_key_establishment(&topo, &c, &AttackScript::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
            let mut buf = Vec::new();
            write_ndjson(&mut buf, &run.trace).map_err(|e| CliError::Runtime(e.to_string()))?;
            ctx.write(&format!("traces/seed-{seed}.ndjson"), &String::from_utf8(buf).expect("json is utf-8"))?;
        }
    }
    let agg = aggregate(&outcomes);
    ctx.write("aggregate.csv", &agg.to_csv(manifest.hash()))?;
    ctx.write("aggregate.json", &report_document(manifest.hash(), &agg))?;
    let analytic = local_connectivity_analytic(&cfg.deployment).p_local;
    let conn = agg.get("empirical_local_connectivity").unwrap_or_default();
    println!(
        "{} trials ({} failed): connectivity {:.5} ± {:.5} (analytic {:.5})",
        agg.trials,
        agg.failed.len(),
        conn.mean,
        conn.stddev,
        analytic
    );
    if !agg.failed.is_empty() {
        return Err(CliError::Runtime(format!("{} trial(s) failed: seeds {:?}", agg.failed.len(), agg.failed)));
    }
    Ok(())
}

fn write_outcomes(ctx: &Context, hash: &str, outcomes: &[TrialOutcome]) -> Result<(), CliError> {
    for o in outcomes {
        match &o.result {
            Ok(r) => ctx.write(&format!("reports/seed-{}.json", o.seed), &report_document(hash, r))?,
            Err(e) => ctx.write(
                &format!("reports/seed-{}.error.json", o.seed),
                &report_document(hash, &serde_json::json!({ "seed": o.seed, "error": e })),
            )?,
        };
    }
    Ok(())
}

fn cmd_attack(ctx: &Context, script_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(script_path)
        .map_err(|e| CliError::Validation(format!("cannot read attack script {}: {e}", script_path.display())))?;
    let script = AttackScript::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", script_path.display())))?;
    let seeds = ctx.seeds();
    let cfg = ctx.sim_config()?;
    let mut topos = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let mut c = cfg.clone();
        c.deployment.seed = seed;
        let topo = deploy(&c.deployment, c.edge_mode).map_err(|e| CliError::Validation(e.to_string()))?;
        script.validate(&topo).map_err(|e| CliError::Validation(format!("{}: {e}", script_path.display())))?;
        topos.push((c, topo));
    }
    let mut manifest = ctx.manifest("attack");
    manifest.add_input("attack_script", text.as_bytes());
    let manifest = ctx.finish(manifest)?;
    let mut csv = String::from(
        "seed,captured,round,captured_fraction,compromised_links,compromised_fraction,noncaptured_links,\
         compromised_noncaptured,noncaptured_fraction,impersonation_attempts,impersonation_acceptances,manifest\n",
    );
    for (c, topo) in &topos {
        let run = run_key_establishment(topo, c, &script).map_err(|e| CliError::Runtime(e.to_string()))?;
        let r = &run.report;
        let population = (r.sensors + r.third_parties) as f64;
        for p in &r.compromise {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                p.captured,
                p.round,
                p.captured as f64 / population,
                p.compromised_links,
                p.compromised_fraction,
                p.noncaptured_links,
                p.compromised_noncaptured,
                p.noncaptured_fraction,
                r.impersonation_attempts,
                r.impersonation_acceptances,
                manifest.hash()
            );
        }
        ctx.write(&format!("reports/seed-{}.json", r.seed), &report_document(manifest.hash(), r))?;
        let last = r.compromise.last().expect("timeline has a zero point");
        println!(
            "seed {}: {} captures, {} of {} links readable, {} uncaptured-link compromises, {} forged adverts accepted",
            r.seed, last.captured, last.compromised_links, r.established_links, last.compromised_noncaptured, r.impersonation_acceptances
        );
    }
    ctx.write("resilience.csv", &csv)?;
    Ok(())
}

fn cmd_energy(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.sim_config()?;
    let d = cfg.deployment.expected_degree;
    let expected = [
        ("sensor", crate::sim::expected_sensor_counts(d)),
        ("third_party", crate::sim::expected_tp_counts(d)),
    ];
    let observed: Option<[OpCounts; 2]> = match &ctx.seeds {
        None => None,
        Some(seeds) => {
            let outcomes = run_trials(&cfg, seeds, &AttackScript::default());
            let reports: Vec<_> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
            if reports.len() != outcomes.len() {
                return Err(CliError::Runtime("energy trials failed".into()));
            }
            let k = 1.0 / reports.len() as f64;
            let mut s = OpCounts::default();
            let mut t = OpCounts::default();
            for r in &reports {
                s = add(&s, &r.sensor.ops.scale(k));
                t = add(&t, &r.third_party_per_requester.scale(k));
            }
            Some([s, t])
        }
    };
    let manifest = ctx.finish(ctx.manifest("energy"))?;
    let mut csv = String::from("role,op,expected,observed,relative_gap,manifest\n");
    println!("per-node budget at d = {d} (sizes: {:?})", cfg.sizes);
    println!("{:<12} {:<10} {:>12} {:>12} {:>8}", "role", "op", "expected", "observed", "gap");
    for (k, (role, exp)) in expected.iter().enumerate() {
        for op in crate::protocol::Op::ALL {
            let e = exp.get(op);
            let o = observed.map(|obs| obs[k].get(op));
            let gap = o.filter(|_| e > 0.0).map(|o| (o - e).abs() / e);
            let fmt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(csv, "{role},{},{e},{},{},{}", op.name(), fmt(o), fmt(gap), manifest.hash());
            println!(
                "{:<12} {:<10} {:>12.3} {:>12} {:>8}",
                role,
                op.name(),
                e,
                o.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                gap.map(|g| format!("{:.2}%", 100.0 * g)).unwrap_or_else(|| "-".into())
            );
        }
        let e = expected_energy_uj(k == 0, exp, &cfg.sizes, &cfg.energy);
        let o = observed.map(|obs| expected_energy_uj(k == 0, &obs[k], &cfg.sizes, &cfg.energy));
        let _ = writeln!(
            csv,
            "{role},energy_uj,{e},{},,{}",
            o.map(|v| format!("{v}")).unwrap_or_default(),
            manifest.hash()
        );
        println!("{:<12} {:<10} {:>12.1} {:>12}", role, "energy_uJ", e, o.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()));
    }
    ctx.write("energy.csv", &csv)?;
    Ok(())
}

fn add(a: &OpCounts, b: &OpCounts) -> OpCounts {
    OpCounts {
        encrypt: a.encrypt + b.encrypt,
        decrypt: a.decrypt + b.decrypt,
        hash: a.hash + b.hash,
        keygen: a.keygen + b.keygen,
        transmit: a.transmit + b.transmit,
        receive: a.receive + b.receive,
    }
}

fn cmd_verify(ctx: &Context) -> Result<(), CliError> {
    let manifest = ctx.finish(ctx.manifest("verify"))?;
    let checks = run_checks(&ctx.config.verify);
    let mut csv = String::from("check,expected,computed,passed,manifest\n");
    println!("{:<20} {:<38} {:<30} result", "check", "expected", "computed");
    for c in &checks {
        println!("{:<20} {:<38} {:<30} {}", c.name, c.expected, c.computed, if c.passed { "PASS" } else { "FAIL" });
        let _ = writeln!(csv, "{},{},{},{},{}", c.name, c.expected, c.computed, c.passed, manifest.hash());
    }
    ctx.write("verify.csv", &csv)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} check(s) failed")));
    }
    Ok(())
}
