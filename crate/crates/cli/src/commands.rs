//! Subcommand execution. Every command computes all payloads first, then writes them with a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ubiq::cantor::{audit_scaling, build, check_invariants, AuditOptions, CantorConfig, CantorTree};
use ubiq::demo::{demo_jarnik_besicovitch, JarnikConfig};
use ubiq::measures::{read_measure, write_binary, MeasureSpec, MultinomialSpec};
use ubiq::redundancy::analyze;
use ubiq::selection::{default_j_top, limsup_boxcount, select, BoxCountOptions, EpsSpec, SelectionResult, SelectionSpec};
use ubiq::spectrum::{default_alpha_grid, legendre, q_grid, tau_fit, Bound, Gauge};
use ubiq::systems::{gen_badic, gen_nalpha, gen_poisson, gen_rationals, gen_uniform, AlphaSpec, LambdaRule, PointScaleSystem, RadiusMode};
use ubiq::{Error, Result};

use crate::manifest::{manifest_path, sidecar, FileDigest, RunManifest};
use crate::{
    CantorAuditArgs, CantorBuildArgs, CantorCmd, Cli, Command, DemoArgs, DimArgs, Family, MeasureBuildArgs, MeasureCmd, MeasureKind,
    Radius, RedundancyArgs, ReplayArgs, SelectArgs, SpectrumArgs, SystemCmd, SystemGenArgs,
};

/// 2 for invalid input, 3 when valid input cannot be carried through.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Invalid(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::Resolution(_) | Error::Resource(_) | Error::Construction(_) => 3,
    }
}

/// Files a command produces plus what its manifest records about the run.
struct Outcome {
    outputs: Vec<(PathBuf, Vec<u8>)>,
    inputs: Vec<PathBuf>,
    seeds: Vec<u64>,
    summary: String,
}

impl Outcome {
    fn new(inputs: Vec<PathBuf>) -> Self {
        Self { outputs: Vec::new(), inputs, seeds: Vec::new(), summary: String::new() }
    }

    fn file(mut self, path: PathBuf, bytes: Vec<u8>) -> Self {
        self.outputs.push((path, bytes));
        self
    }

    fn json(self, path: PathBuf, value: &impl Serialize) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(self.file(path, bytes))
    }

    fn seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds.extend(seeds);
        self
    }

    fn summary(mut self, s: impl Into<String>) -> Self {
        self.summary = s.into();
        self
    }
}

/// Selection file: the result plus the inputs it was computed from.
#[derive(Serialize, Deserialize)]
struct SelectionFile {
    system: PathBuf,
    system_sha256: String,
    measure: PathBuf,
    measure_sha256: String,
    result: SelectionResult,
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    if let Command::Replay(args) = &command {
        return replay(args);
    }
    let start = Instant::now();
    let name = command_name(&command);
    let params = serde_json::to_value(&command)?;
    let (out, outcome) = match command {
        Command::Measure(MeasureCmd::Build(a)) => (a.out.clone(), measure_build(&a)?),
        Command::Spectrum(a) => (a.out.clone(), spectrum(&a)?),
        Command::System(SystemCmd::Gen(a)) => (a.out.clone(), system_gen(&a)?),
        Command::Redundancy(a) => (a.out.clone(), redundancy(&a)?),
        Command::Select(a) => (a.out.clone(), selection(&a)?),
        Command::Dim(a) => (a.out.clone(), dim(&a)?),
        Command::Cantor(CantorCmd::Build(a)) => (a.out.clone(), cantor_build(&a)?),
        Command::Cantor(CantorCmd::Audit(a)) => (a.out.clone(), cantor_audit(&a)?),
        Command::Demo(a) => (a.out.clone(), demo(&a)?),
        Command::Replay(_) => unreachable!("handled above"),
    };
    check_out_dir(&out)?;
    let inputs = outcome.inputs.iter().map(|p| FileDigest::of(p)).collect::<std::io::Result<Vec<_>>>()?;
    for (path, bytes) in &outcome.outputs {
        std::fs::write(path, bytes)?;
    }
    let outputs = outcome.outputs.iter().map(|(p, b)| FileDigest { path: p.clone(), sha256: hex_sha256(b) }).collect();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        argv: argv.to_vec(),
        cwd: std::env::current_dir()?,
        params,
        seeds: outcome.seeds,
        threads: rayon::current_num_threads(),
        inputs,
        outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(manifest_path(&out), bytes)?;
    if !outcome.summary.is_empty() {
        println!("{}", outcome.summary);
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Measure(_) => "measure build",
        Command::Spectrum(_) => "spectrum",
        Command::System(_) => "system gen",
        Command::Redundancy(_) => "redundancy",
        Command::Select(_) => "select",
        Command::Dim(_) => "dim",
        Command::Cantor(CantorCmd::Build(_)) => "cantor build",
        Command::Cantor(CantorCmd::Audit(_)) => "cantor audit",
        Command::Demo(_) => "demo",
        Command::Replay(_) => "replay",
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_out_dir(out: &Path) -> Result<()> {
    match out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::Invalid(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn read_system(path: &Path) -> Result<PointScaleSystem> {
    let s: PointScaleSystem = read_json(path)?;
    s.validate()?;
    Ok(s)
}

fn load_measure(path: &Path) -> Result<ubiq::measures::BoxMeasure> {
    if !path.is_file() {
        return Err(Error::Invalid(format!("{}: no such file", path.display())));
    }
    read_measure(path)
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Invalid(e.to_string()))
}

fn measure_build(a: &MeasureBuildArgs) -> Result<Outcome> {
    let mut value: serde_json::Value = read_json(&a.spec)?;
    let obj = value.as_object_mut().ok_or_else(|| Error::Invalid("measure spec must be a JSON object".into()))?;
    let kind = serde_json::to_value(a.kind)?;
    if let Some(k) = obj.get("kind") {
        if k != &kind {
            return Err(Error::Invalid(format!("spec kind {k} does not match --kind {kind}")));
        }
    }
    obj.insert("kind".into(), kind);
    if let Some(seed) = a.seed {
        match a.kind {
            MeasureKind::Cascade | MeasureKind::Cpc => {
                obj.insert("seed".into(), seed.into());
            }
            MeasureKind::Multinomial | MeasureKind::Gibbs => {}
        }
    }
    if matches!(a.kind, MeasureKind::Cascade | MeasureKind::Gibbs) {
        obj.insert("depth".into(), a.depth.into());
    }
    let spec: MeasureSpec = serde_json::from_value(value)?;
    let mu = spec.build(a.depth)?;
    let seeds: Vec<u64> = match &spec {
        MeasureSpec::Cascade(s) => vec![s.seed],
        MeasureSpec::Cpc(s) => vec![s.seed],
        _ => Vec::new(),
    };
    let bytes = if a.out.extension().is_some_and(|e| e == "json") {
        serde_json::to_vec(&mu)?
    } else {
        let mut buf = Vec::new();
        write_binary(&mu, &mut buf)?;
        buf
    };
    Ok(Outcome::new(vec![a.spec.clone()])
        .file(a.out.clone(), bytes)
        .seeds(seeds)
        .summary(format!("{} measure, depth {}, additivity defect {:.3e}", spec.kind(), a.depth, mu.additivity_defect())))
}

#[derive(Serialize)]
struct TauRow {
    q: f64,
    j: u32,
    tau_j: f64,
    tau: f64,
}

#[derive(Serialize)]
struct LegendreRow {
    alpha: f64,
    tau_star: f64,
}

fn spectrum(a: &SpectrumArgs) -> Result<Outcome> {
    if !(a.q_step > 0.0) || !(a.q_max >= a.q_min) || a.alphas < 2 {
        return Err(Error::Invalid("need q_step > 0, q_max ≥ q_min and at least two α values".into()));
    }
    let mu = load_measure(&a.measure)?;
    let grid = q_grid(a.q_min, a.q_max, a.q_step);
    let mut table = tau_fit(&mu, &grid, (a.j_min, a.j_max))?;
    let alphas = default_alpha_grid(&table, a.alphas);
    legendre(&mut table, &alphas);
    let tau_rows: Vec<TauRow> = table
        .q_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &q)| {
            let t = &table;
            t.per_scale[i].iter().enumerate().map(move |(s, &tj)| TauRow { q, j: t.j_window.0 + s as u32, tau_j: tj, tau: t.tau[i] })
        })
        .collect();
    let leg_rows = table.alpha_grid.iter().zip(&table.tau_star).map(|(&alpha, &tau_star)| LegendreRow { alpha, tau_star });
    let summary = format!("{} q values, {} concavity violations", table.q_grid.len(), table.concavity_violations.len());
    Outcome::new(vec![a.measure.clone()])
        .file(sidecar(&a.out, "tau.csv"), csv_bytes(tau_rows)?)
        .file(sidecar(&a.out, "legendre.csv"), csv_bytes(leg_rows)?)
        .json(a.out.clone(), &table)
        .map(|o| o.summary(summary))
}

fn system_gen(a: &SystemGenArgs) -> Result<Outcome> {
    let (system, seeds) = match a.family {
        Family::Badic => (gen_badic(a.b, a.d, a.j_max, a.budget)?, vec![]),
        Family::Rationals => {
            let mode = match a.radius {
                Radius::Standard => RadiusMode::Standard,
                Radius::Hurwitz => RadiusMode::Hurwitz,
            };
            (gen_rationals(a.q_max, a.d, a.irreducible, mode, a.budget)?, vec![])
        }
        Family::Nalpha => (gen_nalpha(&AlphaSpec::parse(&a.alpha)?, a.n_max, a.budget)?, vec![]),
        Family::Poisson => (gen_poisson(a.gamma, a.lambda_min, a.seed, a.budget)?, vec![a.seed]),
        Family::Uniform => {
            let n = usize::try_from(a.n_max).map_err(|_| Error::Invalid("n_max too large".into()))?;
            (gen_uniform(&LambdaRule::Harmonic { gamma: a.gamma }, n, a.d, a.seed)?, vec![a.seed])
        }
    };
    let summary = format!("{} system with {} pairs", system.family, system.len());
    Ok(Outcome::new(vec![]).json(a.out.clone(), &system)?.seeds(seeds).summary(summary))
}

#[derive(Serialize)]
struct RedundancyRow {
    j: i32,
    count: usize,
    multiplicity: usize,
    colors: usize,
}

fn redundancy(a: &RedundancyArgs) -> Result<Outcome> {
    if a.j_min > a.j_max {
        return Err(Error::Invalid("j_min exceeds j_max".into()));
    }
    let system = read_system(&a.system)?;
    let report = analyze(&system, (a.j_min, a.j_max));
    let rows = report.levels.iter().map(|l| RedundancyRow { j: l.j, count: l.count, multiplicity: l.multiplicity, colors: l.colors });
    let summary = format!("slope {:.4}, weakly redundant: {}", report.slope, report.weakly_redundant);
    Ok(Outcome::new(vec![a.system.clone()])
        .file(sidecar(&a.out, "csv"), csv_bytes(rows)?)
        .json(a.out.clone(), &report)?
        .summary(summary))
}

fn parse_eps(s: &str) -> Result<EpsSpec> {
    if s == "auto" {
        return Ok(EpsSpec::default());
    }
    let value: f64 = s.parse().map_err(|_| Error::Invalid(format!("--eps expects `auto` or a number, got {s:?}")))?;
    Ok(EpsSpec::Constant { value })
}

fn selection(a: &SelectArgs) -> Result<Outcome> {
    let spec = SelectionSpec { rho: a.rho, alpha: a.alpha, eps: parse_eps(&a.eps)?, delta: a.delta, margin: a.margin };
    spec.validate()?;
    let system = read_system(&a.system)?;
    let mu = load_measure(&a.measure)?;
    let result = select(&system, &mu, &spec)?;
    let summary = format!(
        "{} selected, {} indeterminate, {} rejected, {} errors",
        result.selected.len(),
        result.indeterminate.len(),
        result.rejected,
        result.errors.len()
    );
    let file = SelectionFile {
        system: std::path::absolute(&a.system)?,
        system_sha256: crate::manifest::sha256_file(&a.system)?,
        measure: std::path::absolute(&a.measure)?,
        measure_sha256: crate::manifest::sha256_file(&a.measure)?,
        result,
    };
    Ok(Outcome::new(vec![a.system.clone(), a.measure.clone()]).json(a.out.clone(), &file)?.summary(summary))
}

#[derive(Serialize)]
struct DimRow {
    delta: f64,
    n_tail: usize,
    j_top: u32,
    tail_slope: Option<f64>,
    fine_slope: Option<f64>,
    coarse_slope: Option<f64>,
    complete: bool,
    slope: Option<f64>,
    bound: Option<f64>,
}

fn dim(a: &DimArgs) -> Result<Outcome> {
    let sel: SelectionFile = read_json(&a.selection)?;
    let system_path = a.system.clone().unwrap_or_else(|| sel.system.clone());
    if !system_path.is_file() {
        return Err(Error::Invalid(format!("{}: no such file", system_path.display())));
    }
    if crate::manifest::sha256_file(&system_path)? != sel.system_sha256 {
        return Err(Error::Invalid(format!("{} is not the system the selection was made on", system_path.display())));
    }
    let system = read_system(&system_path)?;
    let deltas = if a.deltas.is_empty() { vec![sel.result.spec.delta] } else { a.deltas.clone() };
    if deltas.iter().any(|&d| !(d >= 1.0)) || a.tails.is_empty() {
        return Err(Error::Invalid("every δ must be at least 1 and at least one tail is needed".into()));
    }
    let lambda_min = system.lambda_min().ok_or_else(|| Error::Invalid("system is empty".into()))?;
    let tau_star = a.tau_star.unwrap_or(system.d() as f64);
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for &delta in &deltas {
        let mut s = sel.result.clone();
        s.spec.delta = delta;
        let j_top = a.j_top.unwrap_or_else(|| default_j_top(lambda_min, delta, a.c));
        let opts = BoxCountOptions { c: a.c, tails: a.tails.clone(), j_top: Some(j_top), window: a.window, tau_star };
        let est = limsup_boxcount(&system, &s, &opts);
        let bound = match est.bound {
            Bound::Empty => None,
            Bound::Value(v) => Some(v),
        };
        for t in &est.tails {
            rows.push(DimRow {
                delta,
                n_tail: t.n_tail,
                j_top: est.j_top,
                tail_slope: t.slope,
                fine_slope: t.fine_fit.map(|f| f.slope),
                coarse_slope: t.coarse_fit.map(|f| f.slope),
                complete: t.complete,
                slope: est.slope,
                bound,
            });
        }
        estimates.push(est);
    }
    let summary = estimates
        .iter()
        .map(|e| format!("δ={}: slope {}", e.delta, e.slope.map_or("n/a".to_string(), |s| format!("{s:.4}"))))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome::new(vec![a.selection.clone(), system_path])
        .file(a.out.clone(), csv_bytes(rows)?)
        .json(sidecar(&a.out, "json"), &estimates)?
        .summary(summary))
}

fn cantor_build(a: &CantorBuildArgs) -> Result<Outcome> {
    let (config, inputs) = match &a.config {
        Some(path) => (read_json::<CantorConfig>(path)?, vec![path.clone()]),
        None => {
            let c = u32::try_from(a.weights.len()).map_err(|_| Error::Invalid("too many weights".into()))?;
            let mut cfg = CantorConfig::self_similar(MultinomialSpec::new(c, vec![a.weights.clone()])?, a.delta, a.generations);
            cfg.rho = a.rho;
            cfg.exact = a.exact;
            if let Some(kappa) = a.chi_kappa {
                cfg.gauges.chi = Gauge::LogLogPower { kappa };
            }
            (cfg, vec![])
        }
    };
    let tree = build(&config)?;
    let inv = check_invariants(&tree);
    if !inv.ok() {
        return Err(Error::Construction(format!("tree violates its invariants: {}", inv.violations.join("; "))));
    }
    let summary = format!("{} nodes over {} generations", tree.node_count(), tree.generations.len());
    Outcome::new(inputs).json(sidecar(&a.out, "invariants.json"), &inv)?.json(a.out.clone(), &tree).map(|o| o.summary(summary))
}

#[derive(Serialize)]
struct AuditRow {
    decade: u32,
    balls: usize,
    max_log_ratio: f64,
    mean_local_exponent: f64,
}

fn cantor_audit(a: &CantorAuditArgs) -> Result<Outcome> {
    let tree: CantorTree = read_json(&a.tree)?;
    let mut opts = AuditOptions::new(tree.config.gauges, a.balls);
    opts.seed = a.seed;
    opts.exponent = a.exponent;
    if let Some(c) = a.phi_c {
        opts.gauges.phi = Gauge::PhiC { c };
    }
    let audit = audit_scaling(&tree, &opts);
    let rows = audit.rows.iter().map(|r| AuditRow {
        decade: r.decade,
        balls: r.balls,
        max_log_ratio: r.max_log_ratio,
        mean_local_exponent: r.mean_local_exponent,
    });
    let summary = format!("exponent {:.4}: {}", audit.exponent, if audit.pass { "PASS" } else { "FAIL" });
    Ok(Outcome::new(vec![a.tree.clone()])
        .file(a.out.clone(), csv_bytes(rows)?)
        .json(sidecar(&a.out, "report.json"), &audit)?
        .seeds([a.seed])
        .summary(summary))
}

#[derive(Serialize)]
struct DemoRow {
    delta: f64,
    measured: Option<f64>,
    theoretical: f64,
}

fn demo(a: &DemoArgs) -> Result<Outcome> {
    let mut cfg = JarnikConfig::new(a.b, a.pi.clone(), a.deltas.clone(), a.depth);
    cfg.eps = a.eps;
    cfg.window = a.window;
    let report = demo_jarnik_besicovitch(&cfg)?;
    let rows = report.rows.iter().map(|r| DemoRow { delta: r.delta, measured: r.measured, theoretical: r.theoretical });
    let summary = report
        .rows
        .iter()
        .map(|r| format!("δ={}: {} vs {:.4}", r.delta, r.measured.map_or("n/a".to_string(), |m| format!("{m:.4}")), r.theoretical))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome::new(vec![])
        .file(a.out.clone(), csv_bytes(rows)?)
        .json(sidecar(&a.out, "report.json"), &report)?
        .summary(summary))
}

fn replay(a: &ReplayArgs) -> Result<()> {
    use clap::Parser;
    let manifest: RunManifest = read_json(&a.manifest)?;
    let mut argv = vec!["ubiq".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::Invalid(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Invalid("a manifest cannot record a replay".into()));
    }
    std::env::set_current_dir(&manifest.cwd)?;
    for input in &manifest.inputs {
        if crate::manifest::sha256_file(&input.path)? != input.sha256 {
            return Err(Error::Invalid(format!("input {} changed since the recorded run", input.path.display())));
        }
    }
    run(cli.command, &manifest.argv)?;
    if a.check {
        let changed: Vec<String> = manifest
            .outputs
            .iter()
            .filter(|o| crate::manifest::sha256_file(&o.path).map_or(true, |s| s != o.sha256))
            .map(|o| o.path.display().to_string())
            .collect();
        if !changed.is_empty() {
            return Err(Error::Resolution(format!("replay produced different bytes for {}", changed.join(", "))));
        }
        println!("replay reproduced {} outputs", manifest.outputs.len());
    }
    Ok(())
}
