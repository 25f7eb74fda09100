//! Command-line front end: argument parsing, config files and report
//! writing around the library.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::{
    barron_embedding_constant, barron_term, check_embedding, dictionary_norm_check, interpolation_check,
    mc_construction, md_lower_bound_probe, norm_relation_check, random_atoms, random_feasible_net, rate_sweep,
    variation_embedding_constant, variation_term, Atom, McMode, RateReport, SweepSpec,
};
use crate::datagen::{make_noisy_dataset, make_target, NoiseKind, NoisyDataset, TargetKind, TargetSpec};
use crate::error::{Error, Result};
use crate::io::{read_to_string, to_json_pretty, write_atomic};
use crate::model_io;
use crate::network::MultiIndex;
use crate::penalty::PenaltyKind;
use crate::quadrature::{QuadratureRule, RuleKind};
use crate::rng::SeedStream;
use crate::solver::{self, TikhonovConfig};

/// Version of the JSON report layout written by every subcommand.
pub const REPORT_FORMAT_VERSION: u32 = 1;

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nmodel format_version 1\ndataset format_version 1\nreport format_version 1"
);

#[derive(Debug, Parser)]
#[command(name = "repu-tik", version, long_version = LONG_VERSION, about = "Tikhonov-regularized RePU networks")]
struct Cli {
    /// Worker threads; defaults to the available hardware parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a noisy dataset from a target specification.
    Datagen(DatagenArgs),
    /// Fit a regularized network to a dataset.
    Fit(FitArgs),
    /// Evaluate derivatives of a saved network at points from a CSV file.
    Differentiate(DifferentiateArgs),
    /// Print embedding constants and the M(d) probe as a table.
    Constants(ConstantsArgs),
    /// Monte Carlo approximation-rate experiment.
    McRate(ExperimentArgs),
    /// Regularization rate sweep.
    Rates(ExperimentArgs),
    /// Run the property suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct DatagenArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the dataset as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the target network as a model file (reference-network targets).
    #[arg(long)]
    target_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct DifferentiateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    points: PathBuf,
    /// Comma-separated multi-indices with `:` between components, e.g.
    /// `0:0,1:0,0:2`.
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u32>,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
    /// Also write the table to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// One row per grid point.
    #[arg(long)]
    csv: PathBuf,
    /// JSON report with the resolved config and pass/fail flags.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Suite {
    Constants,
    Embedding,
    Dictionary,
    Norms,
    Interpolation,
    MdProbe,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Suites to run; all when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    suite: Vec<Suite>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random objects per suite case.
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// One row per checked object.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Config of the `datagen` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenConfig {
    pub target: TargetSpec,
    #[serde(default)]
    pub target_seed: u64,
    pub quadrature: RuleKind,
    pub delta: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub noise_seed: u64,
}

/// Config of the `mc-rate` subcommand. Random atoms are drawn when `atoms`
/// is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub mode: McMode,
    pub k: u32,
    pub d: usize,
    #[serde(default)]
    pub atoms: Option<Vec<Atom>>,
    #[serde(default = "default_atom_count")]
    pub atom_count: usize,
    #[serde(default)]
    pub atom_seed: u64,
    pub ns: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub quadrature: Option<RuleKind>,
    #[serde(default)]
    pub seed: u64,
}

fn default_atom_count() -> usize {
    10
}

#[derive(Debug, Serialize)]
struct InputFile {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Flag {
    name: String,
    passed: bool,
}

fn flag(name: impl Into<String>, passed: bool) -> Flag {
    Flag {
        name: name.into(),
        passed,
    }
}

#[derive(Debug, Serialize)]
struct Report<C: Serialize, R: Serialize> {
    format_version: u32,
    command: &'static str,
    config: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<InputFile>,
    checks: Vec<Flag>,
    result: R,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: config error at `--jobs`: must be at least 1");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            info!("thread pool already initialized: {e}");
        }
    }
    let outcome = match cli.command {
        Command::Datagen(a) => datagen(&a).map(|_| 0),
        Command::Fit(a) => fit(&a).map(|_| 0),
        Command::Differentiate(a) => differentiate(&a).map(|_| 0),
        Command::Constants(a) => constants(&a).map(|_| 0),
        Command::McRate(a) => mc_rate(&a),
        Command::Rates(a) => rates(&a),
        Command::Check(a) => check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(crate::io::parse_error)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_pretty(value)?.as_bytes())
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn datagen(a: &DatagenArgs) -> Result<()> {
    let cfg: DatagenConfig = read_config(&a.config)?;
    let target = make_target(&cfg.target, cfg.target_seed)?;
    let rule = QuadratureRule::build(&cfg.quadrature, target.d)?;
    let data = make_noisy_dataset(&target, &rule, cfg.delta, cfg.noise, cfg.noise_seed)?;
    data.save(&a.out)?;
    if let Some(p) = &a.csv {
        write_atomic(p, data.to_csv()?.as_bytes())?;
    }
    if let Some(p) = &a.target_out {
        match &target.kind {
            TargetKind::ReferenceNetwork(net) => model_io::save(net, p)?,
            _ => return Err(Error::config("target", "only network targets can be written as models")),
        }
    }
    println!(
        "dataset: {} points, d = {}, delta realized {:.6e}",
        data.len(),
        data.dim(),
        data.delta_realized
    );
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let raw = read_to_string(&a.data)?;
    let data = NoisyDataset::from_json(&raw)?;
    let config = TikhonovConfig::from_json(&read_to_string(&a.config)?)?;
    let resolved = config.resolved(&data);
    let report = solver::fit(&data, &resolved)?;
    model_io::save(&report.network, &a.out)?;
    println!(
        "objective {:.6e}  fidelity {:.6e}  penalty {:.6e}  lambda {:.6e}",
        report.objective, report.fidelity, report.penalty, report.lambda
    );
    let eps_ok = resolved.penalty != PenaltyKind::RadonBV || report.epsilon_achieved <= resolved.epsilon_target;
    write_json(
        &a.report,
        &Report {
            format_version: REPORT_FORMAT_VERSION,
            command: "fit",
            config: &resolved,
            data: Some(InputFile {
                path: a.data.display().to_string(),
                sha256: sha256_hex(raw.as_bytes()),
            }),
            checks: vec![flag("epsilon_achieved_within_target", eps_ok)],
            result: &report,
        },
    )
}

/// Parses `0:0,1:0` style lists; for `d = 1` a bare order is accepted.
fn parse_alphas(text: &str, d: usize) -> Result<Vec<MultiIndex>> {
    text.split(',')
        .map(|item| {
            let orders = item
                .trim()
                .split(':')
                .map(|c| c.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::config("--alpha", format!("`{item}`: {e}")))?;
            if orders.len() != d {
                return Err(Error::config(
                    "--alpha",
                    format!("`{item}` has {} components, model has d = {d}", orders.len()),
                ));
            }
            Ok(MultiIndex::new(orders))
        })
        .collect()
}

fn read_points(path: &Path, d: usize) -> Result<Vec<Vec<f64>>> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) if p.len() == d => points.push(p),
            Ok(p) => {
                return Err(Error::Invalid {
                    path: format!("{}:{}", path.display(), i + 1),
                    message: format!("expected {d} coordinates, found {}", p.len()),
                })
            }
            // A non-numeric first row is a header.
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Invalid {
                    path: format!("{}:{}", path.display(), i + 1),
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(points)
}

fn differentiate(a: &DifferentiateArgs) -> Result<()> {
    let net = model_io::load(&a.model)?;
    let alphas = parse_alphas(&a.alpha, net.d())?;
    let points = read_points(&a.points, net.d())?;
    let values = solver::differentiate(&net, &points, &alphas)?;
    let mut header: Vec<String> = (1..=net.d()).map(|j| format!("x{j}")).collect();
    header.extend(alphas.iter().map(|al| {
        let parts: Vec<String> = al.orders().iter().map(u32::to_string).collect();
        format!("d[{}]", parts.join(":"))
    }));
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&values)
        .map(|(x, v)| x.iter().chain(v).map(|&z| num(z)).collect())
        .collect();
    write_atomic(&a.out, csv_string(&header, &rows)?.as_bytes())
}

fn constants(a: &ConstantsArgs) -> Result<()> {
    let header: Vec<String> = ["d", "k", "m", "barron_constant", "variation_constant", "md_probe"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for &d in &a.d {
        for &k in &a.k {
            let probe = if d >= 2 {
                let rule = QuadratureRule::tensor_gauss_legendre(k as usize + 1, 1)?;
                format!("{}", md_lower_bound_probe(d, k, &rule)?.value)
            } else {
                String::new()
            };
            for &m in &a.m {
                rows.push(vec![
                    d.to_string(),
                    k.to_string(),
                    m.to_string(),
                    format!("{}", barron_embedding_constant(d, m, k)?),
                    format!("{}", variation_embedding_constant(d, m, k)?),
                    probe.clone(),
                ]);
            }
        }
    }
    let table = csv_string(&header, &rows)?;
    print!("{table}");
    if let Some(p) = &a.out {
        write_atomic(p, table.as_bytes())?;
    }
    Ok(())
}

fn mc_rate(a: &ExperimentArgs) -> Result<i32> {
    let mut cfg: McConfig = read_config(&a.config)?;
    let atoms = match &cfg.atoms {
        Some(atoms) => atoms.clone(),
        None => random_atoms(cfg.atom_count, cfg.d, cfg.atom_seed),
    };
    cfg.atoms = Some(atoms.clone());
    let rule_kind = cfg.quadrature.clone().unwrap_or_else(|| RuleKind::default_for_dim(cfg.d, cfg.seed));
    cfg.quadrature = Some(rule_kind.clone());
    let rule = QuadratureRule::build(&rule_kind, cfg.d)?;
    let report = mc_construction(&atoms, cfg.mode, cfg.k, &cfg.ns, cfg.trials, &rule, cfg.seed)?;
    let header: Vec<String> = ["n", "mean_sq_error", "std_error", "rms_error", "expected_sq_error", "ceiling", "within_ceiling"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                num(p.mean_sq_error),
                num(p.std_error),
                num(p.rms_error),
                num(p.expected_sq_error),
                num(p.ceiling),
                p.within_ceiling.to_string(),
            ]
        })
        .collect();
    write_atomic(&a.csv, csv_string(&header, &rows)?.as_bytes())?;
    let slope_ok = report.slope.is_some_and(|s| (-0.6..=-0.4).contains(&s.slope));
    let checks = vec![flag("below_ceiling", report.all_within_ceiling), flag("slope_in_band", slope_ok)];
    for c in &checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let failed = checks.iter().any(|c| !c.passed);
    write_json(
        &a.report,
        &Report {
            format_version: REPORT_FORMAT_VERSION,
            command: "mc-rate",
            config: &cfg,
            data: None,
            checks,
            result: &report,
        },
    )?;
    Ok(if failed { 2 } else { 0 })
}

fn rate_rows(r: &RateReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = [
        "axis_value",
        "delta",
        "n",
        "d",
        "lambda",
        "objective",
        "fidelity",
        "penalty",
        "epsilon_achieved",
        "feasible",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in 0..=r.m_max {
        header.push(format!("error_h{m}"));
        header.push(format!("stderr_h{m}"));
        header.push(format!("bound_ratio_h{m}"));
    }
    header.push("failure".into());
    let rows = r
        .points
        .iter()
        .map(|p| {
            let mut row = vec![num(p.axis_value), num(p.delta), p.n.to_string(), p.d.to_string()];
            match &p.fit {
                Some(f) => {
                    row.extend([num(f.lambda), num(f.objective), num(f.fidelity), num(f.penalty), num(f.epsilon_achieved)]);
                    row.push(f.feasible.to_string());
                    for m in 0..f.errors.len() {
                        row.extend([num(f.errors[m].value), num(f.errors[m].std_error), num(f.bound_ratios[m])]);
                    }
                    row.push(String::new());
                }
                None => {
                    row.extend(std::iter::repeat_n(String::new(), 6 + 3 * (r.m_max as usize + 1)));
                    row.push(p.failure.clone().unwrap_or_default());
                }
            }
            row
        })
        .collect();
    (header, rows)
}

fn rates(a: &ExperimentArgs) -> Result<i32> {
    let spec: SweepSpec = read_config(&a.config)?;
    let report = rate_sweep(&spec)?;
    let (header, rows) = rate_rows(&report);
    write_atomic(&a.csv, csv_string(&header, &rows)?.as_bytes())?;
    let mut checks = vec![flag("all_points_fitted", report.points.iter().all(|p| p.fit.is_some()))];
    let fits: Vec<_> = report.points.iter().filter_map(|p| p.fit.as_ref()).collect();
    if report.penalty.constrained() {
        checks.push(flag("feasible", fits.iter().all(|f| f.feasible)));
    }
    if report.penalty == PenaltyKind::RadonBV {
        let eps = spec.tikhonov.epsilon_target;
        checks.push(flag("epsilon_within_target", fits.iter().all(|f| f.epsilon_achieved <= eps)));
    }
    for (m, s) in report.slopes.iter().enumerate() {
        match s {
            Some(s) => println!("m = {m}: slope {:.4} (theory {:.4})", s.slope, report.exponents[m]),
            None => println!("m = {m}: no slope"),
        }
    }
    for c in &checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let failed = checks.iter().any(|c| !c.passed);
    write_json(
        &a.report,
        &Report {
            format_version: REPORT_FORMAT_VERSION,
            command: "rates",
            config: &spec,
            data: None,
            checks,
            result: &report,
        },
    )?;
    Ok(if failed { 2 } else { 0 })
}

/// One checked object.
#[derive(Debug, Serialize)]
struct CheckRow {
    suite: Suite,
    case: String,
    value: f64,
    bound: f64,
    passed: bool,
}

fn row(suite: Suite, case: String, value: f64, bound: f64, passed: bool) -> CheckRow {
    CheckRow {
        suite,
        case,
        value,
        bound,
        passed,
    }
}

fn suite_constants() -> Result<Vec<CheckRow>> {
    let mut rows = vec![
        row(Suite::Constants, "C(2,1,2)".into(), barron_embedding_constant(2, 1, 2)?, 3.0, barron_embedding_constant(2, 1, 2)? == 3.0),
        row(Suite::Constants, "c~(2,0,2)".into(), variation_embedding_constant(2, 0, 2)?, 8.0, variation_embedding_constant(2, 0, 2)? == 8.0),
    ];
    let mut worst_b = 0.0f64;
    let mut worst_v = 0.0f64;
    for d in 1..=50usize {
        for k in 1..=4u32 {
            for s in 0..k {
                let (df, sf, kf) = (d as f64, s as f64, k as f64);
                let eb = (sf + df) * (kf - sf).powi(2) / (sf + 1.0);
                let rb = barron_term(d, s + 1, k) / barron_term(d, s, k);
                worst_b = worst_b.max((rb - eb).abs() / eb);
                let ev = eb / (4.0 * df);
                let rv = variation_term(d, s + 1, k) / variation_term(d, s, k);
                worst_v = worst_v.max((rv - ev).abs() / ev);
            }
        }
    }
    rows.push(row(Suite::Constants, "barron_ratio_recursion".into(), worst_b, 1e-12, worst_b <= 1e-12));
    rows.push(row(Suite::Constants, "variation_ratio_recursion".into(), worst_v, 1e-12, worst_v <= 1e-12));
    Ok(rows)
}

fn suite_embedding(seed: u64, count: usize) -> Result<Vec<CheckRow>> {
    let streams = SeedStream::new(seed).child("embedding");
    let mut rows = Vec::new();
    for d in [2usize, 3] {
        let rule = QuadratureRule::build(&RuleKind::default_for_dim(d, seed), d)?;
        for kind in [PenaltyKind::ExtendedBarron, PenaltyKind::Variation] {
            let mut rng = streams.rng_indexed(kind.name(), d as u64);
            for i in 0..count {
                let net = random_feasible_net(kind, d, 2, 1 + i % 6, &mut rng)?;
                for m in 0..=2 {
                    let c = check_embedding(&net, m, &rule)?;
                    rows.push(row(Suite::Embedding, format!("{kind} d={d} m={m} net={i}"), c.sobolev_norm, c.bound, c.passed));
                }
            }
        }
    }
    Ok(rows)
}

fn suite_dictionary(seed: u64, count: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for d in [2usize, 3] {
        let rule = QuadratureRule::build(&RuleKind::default_for_dim(d, seed), d)?;
        let mut rng = SeedStream::new(seed).rng_indexed("dictionary", d as u64);
        let r = dictionary_norm_check(2, count, &rule, &mut rng)?;
        rows.push(row(Suite::Dictionary, format!("d={d} k=2"), r.max_norm, r.bound, r.violations == 0));
    }
    Ok(rows)
}

fn suite_norms(seed: u64, count: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for d in [2usize, 4, 8] {
        let mut rng = SeedStream::new(seed).rng_indexed("norms", d as u64);
        let nets = (0..count)
            .map(|i| random_feasible_net(PenaltyKind::Variation, d, 2, 1 + i % 6, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let r = norm_relation_check(&nets, 2, d)?;
        rows.push(row(Suite::Norms, format!("d={d} k=2"), r.max_ratio, r.bound, r.violations == 0));
    }
    Ok(rows)
}

fn suite_interpolation(seed: u64, count: usize) -> Result<Vec<CheckRow>> {
    let mut rng = SeedStream::new(seed).rng("interpolation");
    let nets = (0..count)
        .map(|i| random_feasible_net(PenaltyKind::ExtendedBarron, 2, 2, 1 + i % 6, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let rule = QuadratureRule::tensor_gauss_legendre(24, 2)?;
    let mut rows = Vec::new();
    for m in 0..=2 {
        let r = interpolation_check(&nets, m, 2, &rule)?;
        let passed = if m == 0 || m == 2 {
            r.ratios.iter().flatten().all(|&x| x == 1.0)
        } else {
            r.k_fit.is_finite() && r.k_fit < 10.0 * r.median
        };
        let bound = if m == 1 { 10.0 * r.median } else { 1.0 };
        rows.push(row(Suite::Interpolation, format!("d=2 k=2 m={m}"), r.k_fit, bound, passed));
    }
    Ok(rows)
}

/// Band on `probe * d^{k/2}`.
pub const MD_PROBE_BAND: (f64, f64) = (0.05, 20.0);

fn suite_md_probe() -> Result<Vec<CheckRow>> {
    let rule = QuadratureRule::tensor_gauss_legendre(8, 1)?;
    (2..=30usize)
        .map(|d| {
            let p = md_lower_bound_probe(d, 2, &rule)?;
            let scaled = p.value * d as f64;
            let ok = (MD_PROBE_BAND.0..=MD_PROBE_BAND.1).contains(&scaled);
            Ok(row(Suite::MdProbe, format!("d={d} k=2"), scaled, MD_PROBE_BAND.1, ok))
        })
        .collect()
}

fn check(a: &CheckArgs) -> Result<i32> {
    let suites = if a.suite.is_empty() {
        vec![
            Suite::Constants,
            Suite::Embedding,
            Suite::Dictionary,
            Suite::Norms,
            Suite::Interpolation,
            Suite::MdProbe,
        ]
    } else {
        a.suite.clone()
    };
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for s in &suites {
        let r = match s {
            Suite::Constants => suite_constants()?,
            Suite::Embedding => suite_embedding(a.seed, a.count)?,
            Suite::Dictionary => suite_dictionary(a.seed, 5 * a.count)?,
            Suite::Norms => suite_norms(a.seed, 5 * a.count)?,
            Suite::Interpolation => suite_interpolation(a.seed, a.count)?,
            Suite::MdProbe => suite_md_probe()?,
        };
        let failures = r.iter().filter(|x| !x.passed).count();
        let name = serde_json::to_value(s)?.as_str().unwrap_or_default().to_string();
        println!("{} {name} ({} cases, {failures} failed)", if failures == 0 { "PASS" } else { "FAIL" }, r.len());
        checks.push(flag(name, failures == 0));
        rows.extend(r);
    }
    if let Some(p) = &a.csv {
        let header: Vec<String> = ["suite", "case", "value", "bound", "passed"].iter().map(|s| s.to_string()).collect();
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let suite = serde_json::to_value(r.suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                vec![suite, r.case.clone(), num(r.value), num(r.bound), r.passed.to_string()]
            })
            .collect();
        write_atomic(p, csv_string(&header, &body)?.as_bytes())?;
    }
    let failed = checks.iter().any(|c| !c.passed);
    if let Some(p) = &a.report {
        #[derive(Serialize)]
        struct CheckConfig<'a> {
            suites: &'a [Suite],
            seed: u64,
            count: usize,
        }
        write_json(
            p,
            &Report {
                format_version: REPORT_FORMAT_VERSION,
                command: "check",
                config: CheckConfig {
                    suites: &suites,
                    seed: a.seed,
                    count: a.count,
                },
                data: None,
                checks,
                result: &rows,
            },
        )?;
    }
    Ok(if failed { 2 } else { 0 })
}

/// Removes every `wall_time_s` field from a parsed report, recursively.
pub fn strip_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("wall_time_s");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::DATASET_FORMAT_VERSION;
    use crate::model_io::MODEL_FORMAT_VERSION;

    #[test]
    fn alpha_lists_parse() {
        let a = parse_alphas("0:0, 1:0,0:2", 2).unwrap();
        assert_eq!(a, vec![MultiIndex::new(vec![0, 0]), MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 2])]);
        assert_eq!(parse_alphas("2", 1).unwrap(), vec![MultiIndex::new(vec![2])]);
        assert!(matches!(parse_alphas("1:0:0", 2), Err(Error::Config { .. })));
        assert!(matches!(parse_alphas("x:0", 2), Err(Error::Config { .. })));
    }

    #[test]
    fn timing_fields_are_stripped() {
        let mut v: Value = serde_json::json!({"a": 1, "wall_time_s": 2.0, "b": [{"wall_time_s": 3.0, "c": 4}]});
        strip_timing(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "b": [{"c": 4}]}));
    }

    #[test]
    fn constant_suite_passes() {
        assert!(suite_constants().unwrap().iter().all(|r| r.passed));
        assert!(suite_md_probe().unwrap().iter().all(|r| r.passed));
    }

    #[test]
    fn unknown_subcommand_and_missing_files_exit_one() {
        assert_eq!(run_from(["repu-tik", "nope"]), 1);
        assert_eq!(run_from(["repu-tik", "fit", "--data", "/nonexistent/d.json", "--config", "c", "--out", "o", "--report", "r"]), 1);
    }

    #[test]
    fn format_versions_are_consistent() {
        assert_eq!(MODEL_FORMAT_VERSION, 1);
        assert_eq!(DATASET_FORMAT_VERSION, 1);
        assert!(LONG_VERSION.contains("report format_version 1"));
    }
}
