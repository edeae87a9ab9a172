//! `explab`: exponent sweeps, list-decoding simulations, the validation suite
//! and the BSC comparison figure.
//!
//! Exit codes: 0 on success, 1 when a computation or check fails, 2 when the
//! arguments cannot be understood.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use explab::exponent::write_csv;
use explab::prob::{parse_channel, parse_dist};
use explab::sim::{estimate_error_probability, estimate_exponent, Decoder, SimConfig, SimMode};
use explab::validate::{run_validation, ValidateOptions, SUITES};
use explab::{
    fig1_family, parse_metric, sweep, Dist, Dmc, ExponentCurve, ExponentKind, ExponentQuery, ListSize, SolverConfig,
};

use manifest::{manifest_path, now, RunManifest};

#[derive(Parser)]
#[command(name = "explab", version, about = "Error exponents of randomized list decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep an exponent over a rate grid and write a CSV.
    Exponent(ExponentArgs),
    /// Estimate the list error probability by Monte Carlo.
    Simulate(SimulateArgs),
    /// Write the five BSC(0.1) comparison curves and a gnuplot script.
    ReproduceFig1(Fig1Args),
    /// Run the numerical check suites.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq)]
enum Base {
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "e")]
    #[serde(rename = "e")]
    E,
}

impl Base {
    fn value(self) -> f64 {
        match self {
            Base::Two => 2.0,
            Base::E => std::f64::consts::E,
        }
    }

    fn ln(self) -> f64 {
        self.value().ln()
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum DecoderArg {
    Randomized,
    Deterministic,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Auto,
    Codebook,
    TypeClass,
}

#[derive(Args, Clone, Serialize)]
struct SolverArgs {
    /// Denominator of the coarse type lattice.
    #[arg(long, default_value_t = 16)]
    grid_denominator: u32,
    /// Refinement stopping tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            grid_denominator: self.grid_denominator,
            tolerance: self.tolerance,
            restarts: self.restarts,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args, Serialize)]
struct ExponentArgs {
    /// `bsc:p`, `bec:e`, `noiseless:k` or a JSON channel object.
    #[arg(long)]
    channel: String,
    /// `uniform`, a comma list or a JSON array.
    #[arg(long, default_value = "uniform")]
    q: String,
    /// `matched`, `mmi`, `mismatched:<channel>` or `constant:c`; repeatable.
    #[arg(long = "metric", default_value = "matched")]
    metrics: Vec<String>,
    /// Fixed list size; repeatable.
    #[arg(long = "fixed-l")]
    fixed_l: Vec<u32>,
    /// Exponential list size `L = e^{nλ}`, λ in `--base` units; repeatable.
    #[arg(long = "lambda")]
    lambdas: Vec<f64>,
    #[arg(long, value_enum, default_value = "randomized")]
    decoder: DecoderArg,
    /// `start:stop:step` in `--base` units, inclusive.
    #[arg(long)]
    rates: String,
    #[arg(long, value_enum, default_value = "e")]
    base: Base,
    /// Also emit the random-coding exponent.
    #[arg(long)]
    with_er: bool,
    /// Also emit the sphere-packing exponent.
    #[arg(long)]
    with_esp: bool,
    #[arg(long, default_value = "exponent.csv")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateArgs {
    /// JSON file with any of the fields below; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Block length.
    #[arg(long)]
    n: Option<usize>,
    /// Rate in `--base` units.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, value_enum)]
    base: Option<Base>,
    #[arg(long)]
    fixed_l: Option<u32>,
    /// List exponent in `--base` units.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    #[arg(long)]
    trials: Option<u64>,
    /// Trials sharing one codebook.
    #[arg(long)]
    batch_size: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report the sampled error indicator instead of the conditional error.
    #[arg(long)]
    raw: Option<bool>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Comma-separated block lengths; fits the decay rate.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Also write a CSV with one row per block length.
    #[arg(long)]
    #[serde(skip)]
    csv: Option<PathBuf>,
}

/// The simulation settings after merging the config file and flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimSettings {
    channel: String,
    q: String,
    n: usize,
    rate: f64,
    base: Base,
    fixed_l: Option<u32>,
    lambda: Option<f64>,
    metric: String,
    decoder: DecoderArg,
    trials: u64,
    batch_size: u64,
    seed: u64,
    raw: bool,
    mode: ModeArg,
    n_grid: Option<Vec<usize>>,
}

#[derive(Args, Serialize)]
struct Fig1Args {
    #[arg(long, default_value = "fig1")]
    outdir: PathBuf,
    /// λ for the exponential-list curves, in bits.
    #[arg(long, default_value_t = 0.1)]
    lambda_bits: f64,
    #[arg(long, default_value_t = 4)]
    list: u32,
    #[arg(long, default_value_t = 0.01)]
    step_bits: f64,
    #[arg(long, default_value_t = 0.53)]
    max_rate_bits: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run only these suites; repeatable or comma-separated.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Multiplies every tolerance; 0 makes approximate checks exact.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

/// Bad arguments exit with 2, failed computations with 1.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

trait Phase<T> {
    fn usage(self) -> Result<T, Failure>;
    fn run(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Phase<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn run(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Run(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var("EXPLAB_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: EXPLAB_THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    let result = match cli.command {
        Command::Exponent(a) => cmd_exponent(&a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::ReproduceFig1(a) => cmd_reproduce_fig1(&a),
        Command::Validate(a) => cmd_validate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Parses `start:stop:step` into an inclusive grid.
fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad rate grid {spec:?}"))?;
    let [a, b, step] = parts[..] else {
        bail!("rate grid must be start:stop:step, got {spec:?}");
    };
    if !(a.is_finite() && b.is_finite() && step > 0.0 && b >= a && a >= 0.0) {
        bail!("rate grid needs 0 ≤ start ≤ stop and step > 0");
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn write_curves(path: &Path, curves: &[ExponentCurve]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, curves)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn cmd_exponent(a: &ExponentArgs) -> CmdResult {
    let started = now();
    let w: Dmc = parse_channel(&a.channel).usage()?;
    let q: Dist = parse_dist(&a.q, w.x_size()).usage()?;
    let metrics = a
        .metrics
        .iter()
        .map(|m| parse_metric(m, &w))
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    let grid = parse_grid(&a.rates).usage()?;
    let rates: Vec<f64> = grid.iter().map(|r| r * a.base.ln()).collect();
    let cfg = a.solver.config();
    cfg.validate().usage()?;
    let mut lists: Vec<(ListSize<f64>, String)> = a.fixed_l.iter().map(|&l| (ListSize::Fixed(l), format!("L{l}"))).collect();
    lists.extend(
        a.lambdas
            .iter()
            .map(|&l| (ListSize::Exponential(l * a.base.ln()), format!("lambda{l}"))),
    );
    if lists.is_empty() {
        lists.push((ListSize::Fixed(1), "L1".into()));
    }
    let (kind, prefix) = match a.decoder {
        DecoderArg::Randomized => (ExponentKind::RandomizedList, ""),
        DecoderArg::Deterministic => (ExponentKind::DeterministicList, "det_"),
    };
    let base_query = ExponentQuery {
        channel: w.clone(),
        q: q.clone(),
        rate: 0.0,
        metric: metrics[0].clone(),
        list: lists[0].0,
        solver: cfg,
    };
    base_query.validate().usage()?;
    let mut curves = Vec::new();
    if a.with_er {
        curves.push(sweep(&base_query, ExponentKind::RandomCoding, &rates, a.base.value(), "E_r").run()?);
    }
    if a.with_esp {
        curves.push(sweep(&base_query, ExponentKind::SpherePacking, &rates, a.base.value(), "E_sp").run()?);
    }
    for (i, metric) in metrics.iter().enumerate() {
        let name = if metrics.iter().filter(|m| m.kind() == metric.kind()).count() > 1 {
            format!("{}{}", metric.kind(), i)
        } else {
            metric.kind().to_string()
        };
        for (list, list_label) in &lists {
            let query = ExponentQuery {
                metric: metric.clone(),
                list: *list,
                ..base_query.clone()
            };
            query.validate().usage()?;
            let label = format!("{prefix}{name}_{list_label}");
            curves.push(sweep(&query, kind, &rates, a.base.value(), &label).run()?);
        }
    }
    write_curves(&a.out, &curves).run()?;
    RunManifest::new(a, None, started, vec![a.out.clone()])
        .and_then(|m| m.write(&manifest_path(&a.out)))
        .run()?;
    Ok(())
}

impl SimSettings {
    fn merge(a: &SimulateArgs) -> anyhow::Result<Self> {
        let file: SimulateArgs = match &a.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => SimulateArgs::default(),
        };
        macro_rules! pick {
            ($f:ident) => {
                a.$f.clone().or(file.$f.clone())
            };
        }
        let need = |name: &str| anyhow!("missing --{name} (flag or config field)");
        let (fixed_l, lambda) = match (pick!(fixed_l), pick!(lambda)) {
            (Some(_), Some(_)) if a.fixed_l.is_some() != a.lambda.is_some() => {
                // A flag overrides the other kind of list size from the file.
                (a.fixed_l, a.lambda)
            }
            (Some(_), Some(_)) => bail!("give either a fixed list size or λ, not both"),
            (None, None) => (Some(1), None),
            other => other,
        };
        Ok(Self {
            channel: pick!(channel).ok_or_else(|| need("channel"))?,
            q: pick!(q).unwrap_or_else(|| "uniform".into()),
            n: pick!(n).ok_or_else(|| need("n"))?,
            rate: pick!(rate).ok_or_else(|| need("rate"))?,
            base: pick!(base).unwrap_or(Base::E),
            fixed_l,
            lambda,
            metric: pick!(metric).unwrap_or_else(|| "matched".into()),
            decoder: pick!(decoder).unwrap_or(DecoderArg::Randomized),
            trials: pick!(trials).unwrap_or(100_000),
            batch_size: pick!(batch_size).unwrap_or(1),
            seed: pick!(seed).unwrap_or(0),
            raw: pick!(raw).unwrap_or(false),
            mode: pick!(mode).unwrap_or(ModeArg::Auto),
            n_grid: pick!(n_grid),
        })
    }

    fn config(&self) -> anyhow::Result<SimConfig> {
        let w: Dmc = parse_channel(&self.channel)?;
        let q: Dist = parse_dist(&self.q, w.x_size())?;
        let metric = parse_metric(&self.metric, &w)?;
        let list = match (self.fixed_l, self.lambda) {
            (_, Some(l)) => ListSize::Exponential(l * self.base.ln()),
            (Some(l), None) => ListSize::Fixed(l),
            (None, None) => ListSize::Fixed(1),
        };
        let mut c = SimConfig::new(w, q, self.n, self.rate * self.base.ln(), list, metric);
        c.decoder = match self.decoder {
            DecoderArg::Randomized => Decoder::Randomized,
            DecoderArg::Deterministic => Decoder::DeterministicTopL,
        };
        c.trials = self.trials;
        c.batch_size = self.batch_size;
        c.seed = self.seed;
        c.rao_blackwell = !self.raw;
        c.mode = match self.mode {
            ModeArg::Auto => SimMode::Auto,
            ModeArg::Codebook => SimMode::Codebook,
            ModeArg::TypeClass => SimMode::TypeClass,
        };
        Ok(c)
    }
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let started = now();
    let settings = SimSettings::merge(&a).usage()?;
    let cfg = settings.config().usage()?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("simulate.json"));
    let (result, rows) = match &settings.n_grid {
        Some(grid) => {
            for &n in grid {
                SimConfig { n, ..cfg.clone() }.validate().usage()?;
            }
            let fit = estimate_exponent(&cfg, grid).run()?;
            let rows = fit.estimates.clone();
            (serde_json::json!({ "settings": settings, "fit": fit }), rows)
        }
        None => {
            cfg.validate().usage()?;
            let est = estimate_error_probability(&cfg).run()?;
            (serde_json::json!({ "settings": settings, "estimate": est }), vec![est])
        }
    };
    let mut outputs = vec![out.clone()];
    let text = serde_json::to_string_pretty(&result).run()? + "\n";
    fs::write(&out, text).with_context(|| format!("writing {}", out.display())).run()?;
    if let Some(csv) = &a.csv {
        let mut f = Vec::new();
        writeln!(f, "n,p_hat,stderr,trials,errors_observed,empirical_exponent").run()?;
        for e in &rows {
            let ee = e.empirical_exponent.map(|v| v.to_string()).unwrap_or_default();
            writeln!(f, "{},{},{},{},{},{}", e.n, e.p_hat, e.stderr, e.trials, e.errors_observed, ee).run()?;
        }
        fs::write(csv, f).with_context(|| format!("writing {}", csv.display())).run()?;
        outputs.push(csv.clone());
    }
    RunManifest::new(&settings, Some(settings.seed), started, outputs)
        .and_then(|m| m.write(&manifest_path(&out)))
        .run()?;
    Ok(())
}

fn gnuplot_script(curves: &[ExponentCurve], lambda_bits: f64) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key top right\n");
    s.push_str("set xlabel 'R [bits]'\n");
    s.push_str("set ylabel 'exponent [bits]'\n");
    s.push_str(&format!("set title 'BSC(0.1), lambda = {lambda_bits} bits'\n"));
    let plots: Vec<String> = curves
        .iter()
        .map(|c| format!("'{0}.csv' every ::1 using 1:2 with lines title '{0}'", c.label))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

fn cmd_reproduce_fig1(a: &Fig1Args) -> CmdResult {
    let started = now();
    if !(a.lambda_bits >= 0.0) || a.list == 0 {
        return Err(Failure::Usage(anyhow!("λ must be nonnegative and L positive")));
    }
    let grid = parse_grid(&format!("0:{}:{}", a.max_rate_bits, a.step_bits)).usage()?;
    let cfg = a.solver.config();
    cfg.validate().usage()?;
    let w = Dmc::bsc(0.1).run()?;
    let q = Dist::uniform(2).run()?;
    let ln2 = std::f64::consts::LN_2;
    let rates: Vec<f64> = grid.iter().map(|r| r * ln2).collect();
    let curves = fig1_family(&w, &q, a.list, a.lambda_bits * ln2, &rates, 2.0, &cfg).run()?;
    fs::create_dir_all(&a.outdir).run()?;
    let mut outputs = Vec::new();
    for c in &curves {
        let p = a.outdir.join(format!("{}.csv", c.label));
        write_curves(&p, std::slice::from_ref(c)).run()?;
        outputs.push(p);
    }
    let gp = a.outdir.join("fig1.gp");
    fs::write(&gp, gnuplot_script(&curves, a.lambda_bits)).run()?;
    outputs.push(gp);
    RunManifest::new(a, None, started, outputs)
        .and_then(|m| m.write(&a.outdir.join("manifest.json")))
        .run()?;
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let opts = ValidateOptions {
        only: a.only.clone(),
        tolerance_scale: a.tolerance_scale,
    };
    if let Some(bad) = opts.only.iter().find(|s| !SUITES.contains(&s.as_str())) {
        return Err(Failure::Usage(anyhow!("unknown suite {bad:?}; known: {}", SUITES.join(", "))));
    }
    let report = run_validation(&opts).usage()?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).run()?);
    } else {
        println!("{:<18} {:<6} {:>12} {:>12} {:>7}  check", "suite", "status", "observed", "allowed", "cases");
        for r in &report.rows {
            let status = if r.passed { "PASS" } else { "FAIL" };
            println!(
                "{:<18} {:<6} {:>12.4e} {:>12.4e} {:>7}  {}",
                r.suite, status, r.observed, r.allowed, r.cases, r.check
            );
        }
    }
    if report.all_passed() {
        Ok(())
    } else {
        let lines: Vec<String> = report
            .failures()
            .map(|r| format!("  {} / {} ({} of {} cases)", r.suite, r.check, r.violations, r.cases))
            .collect();
        Err(Failure::Run(anyhow!("failing checks:\n{}", lines.join("\n"))))
    }
}
