//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or validation error, 4
//! numeric or method error. Errors are written to stderr as one JSON object
//! `{"error": {"kind", "message"}}`; warnings as `warning: ` lines.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::enbs::{enbs_curve, write_enbs_csv, CostModel, PopulationSpec};
use crate::error::{Error, ErrorClass};
use crate::evppi::{fit_evppi, EvppiConfig, EvppiFit, DEFAULT_BOOTSTRAP};
use crate::evsi::{
    ess_direct, ess_from_posterior_means, ess_from_summary, evsi_ga_from_fit, evsi_is, evsi_mm_detailed,
    evsi_oracle_with, evsi_rb_with, write_evsi_csv, EssEstimate, GaWeight, MmConfig, OracleConfig,
    PosteriorMeanConfig, RbConfig, DEFAULT_Q,
};
use crate::model::config::{load_config, Scenario};
use crate::model::StudyDesign;
use crate::parallel::with_threads;
use crate::psa::{
    compute_net_benefit, decision_uncertainty_curves, evpi, format_decimal, load_psa_dataset,
    save_augmented_psa_dataset, save_psa_dataset, write_curves_csv, PsaDataset, WtpThreshold,
};
use crate::voi::VoiEstimate;

#[derive(Debug, Parser)]
#[command(name = "evsi", version, about = "Value of information analysis for decision-analytic models")]
pub struct Cli {
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output format of the main result.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the main result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a probabilistic sensitivity analysis and write it as a PSA CSV.
    Psa(PsaArgs),
    /// Expected value of perfect information.
    Evpi(EvpiArgs),
    /// Expected value of partial perfect information for a parameter group.
    Evppi(EvppiArgs),
    /// Expected value of sample information for a proposed study.
    Evsi(EvsiArgs),
    /// Prior effective sample size of one parameter.
    Ess(EssArgs),
    /// Expected net benefit of sampling and the optimal study size.
    Enbs(EnbsArgs),
    /// Cost-effectiveness acceptability curve and frontier, and expected loss curves.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in model: normal-normal, beta-binomial, gamma-poisson, gamma-exponential, dr-tox.
    #[arg(long, conflicts_with = "config")]
    pub model: Option<String>,
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Willingness-to-pay threshold; overrides the scenario's.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PsaSource {
    /// PSA CSV (`sim`, parameters, then `qaly.t<k>`, `cost.t<k>`); generated from the scenario when absent.
    #[arg(long)]
    pub psa: Option<PathBuf>,
    /// PSA size when generating.
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct PsaArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvpiArgs {
    #[arg(long)]
    pub psa: PathBuf,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct EvppiArgs {
    #[arg(long)]
    pub psa: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Parameters of interest, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub phi: Vec<String>,
    /// Seeds the bootstrap standard error.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    /// Also write the augmented dataset (PSA columns plus `nmb.t<k>`, `enb.t<k>`) here.
    #[arg(long)]
    pub augmented: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvsiMethodArg {
    Rb,
    Is,
    Ga,
    Mm,
    Oracle,
}

#[derive(Debug, Args)]
pub struct EvsiArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub source: PsaSource,
    #[arg(long, value_enum)]
    pub method: EvsiMethodArg,
    /// Study sample sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long)]
    pub seed: u64,
    /// Bootstrap replicates for the RB and GA standard errors.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    /// GA prior effective sample sizes as `name=value`, comma separated;
    /// direct formulas are used when absent.
    #[arg(long, value_delimiter = ',')]
    pub n0: Vec<String>,
    /// GA shrinkage weight.
    #[arg(long, value_enum, default_value_t = GaWeightArg::Variance)]
    pub ga_weight: GaWeightArg,
    /// MM quantile points.
    #[arg(long, default_value_t = DEFAULT_Q)]
    pub q: usize,
    /// Oracle outer draws.
    #[arg(long, default_value_t = 1000)]
    pub outer: usize,
    /// Oracle inner draws.
    #[arg(long, default_value_t = 1000)]
    pub inner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaWeightArg {
    Variance,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EssMethodArg {
    Direct,
    Summary,
    PosteriorMean,
}

#[derive(Debug, Args)]
pub struct EssArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub source: PsaSource,
    #[arg(long, value_enum)]
    pub method: EssMethodArg,
    /// Parameter whose prior is measured.
    #[arg(long)]
    pub param: String,
    /// Pilot study size for the simulation-based methods.
    #[arg(long = "n", default_value_t = 50)]
    pub n: u64,
    /// Required by the simulation-based methods.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EnbsArgs {
    /// EVSI curve as written by `evsi` (`method,N,evsi,se`).
    #[arg(long)]
    pub evsi: PathBuf,
    /// Scenario file supplying `population.*` and `research.*`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rows of this method only, when the file holds several.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub incidence: Option<f64>,
    #[arg(long)]
    pub horizon: Option<u32>,
    #[arg(long)]
    pub discount: Option<f64>,
    #[arg(long)]
    pub fixed: Option<f64>,
    #[arg(long)]
    pub per_participant: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub psa: PathBuf,
    /// Thresholds, comma separated; otherwise the min/max/step grid.
    /// Thresholds must be positive.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1000.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 100_000.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub lambda_step: f64,
}

/// Failure of one invocation.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(Error::Io(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let mut warnings = Vec::new();
    let result = with_threads(cli.threads, || execute(&cli, &mut warnings));
    // Estimates sharing one fit repeat its warnings.
    let mut seen = std::collections::HashSet::new();
    for w in warnings.iter().filter(|w| seen.insert(w.as_str())) {
        let _ = writeln!(stderr, "warning: {w}");
    }
    match result {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => report(stderr, &Failure::Run(Error::Io(e))),
            },
            None => match stdout.write_all(text.as_bytes()) {
                Ok(()) => 0,
                Err(e) => report(stderr, &Failure::Run(Error::Io(e))),
            },
        },
        Err(f) => report(stderr, &f),
    }
}

fn report(stderr: &mut dyn Write, f: &Failure) -> i32 {
    let (kind, message, code) = match f {
        Failure::Usage(m) => ("usage", m.clone(), 2),
        Failure::Run(e) => (
            e.kind(),
            e.to_string(),
            match e.class() {
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
        ),
    };
    let body = serde_json::json!({ "error": { "kind": kind, "message": message } });
    let _ = writeln!(stderr, "{body}");
    code
}

fn execute(cli: &Cli, warnings: &mut Vec<String>) -> Outcome<String> {
    match &cli.command {
        Command::Psa(a) => cmd_psa(a),
        Command::Evpi(a) => cmd_evpi(a, cli.format),
        Command::Evppi(a) => cmd_evppi(a, cli.format, warnings),
        Command::Evsi(a) => cmd_evsi(a, cli.format, warnings),
        Command::Ess(a) => cmd_ess(a, cli.format),
        Command::Enbs(a) => cmd_enbs(a, cli.format),
        Command::Curves(a) => cmd_curves(a, cli.format),
    }
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("writers emit UTF-8")
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Run(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn load_psa(path: &Path) -> Outcome<PsaDataset> {
    Ok(load_psa_dataset(open(path)?)?)
}

fn scenario(a: &ScenarioArgs) -> Outcome<Scenario> {
    let mut sc = match (&a.model, &a.config) {
        (Some(name), None) => Scenario::builtin(name)?,
        (None, Some(path)) => load_config(path)?,
        _ => return Err(Failure::Usage("give a built-in model with --model or a scenario file with --config".into())),
    };
    if let Some(l) = a.lambda {
        sc.lambda = WtpThreshold::new(l)?;
    }
    Ok(sc)
}

fn psa_for(sc: &Scenario, source: &PsaSource, seed: u64) -> Outcome<PsaDataset> {
    match &source.psa {
        Some(path) => load_psa(path),
        None => Ok(sc.run_psa(source.samples, seed)?),
    }
}

fn estimates_out(estimates: &[VoiEstimate], format: Format, warnings: &mut Vec<String>) -> Outcome<String> {
    for e in estimates {
        warnings.extend(e.diagnostics.warnings.iter().cloned());
    }
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "kind,method,N,value,se")?;
            for e in estimates {
                let kind = serde_json::to_value(e.kind).expect("kind serialises");
                writeln!(
                    buf,
                    "{},{},{},{},{}",
                    kind.as_str().unwrap_or_default(),
                    e.method,
                    e.design_n.map(|n| n.to_string()).unwrap_or_default(),
                    format_decimal(e.value),
                    e.mc_se.map(format_decimal).unwrap_or_default()
                )?;
            }
            Ok(utf8(buf))
        }
        Format::Json => json_out(estimates),
    }
}

fn json_out<T: serde::Serialize + ?Sized>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Run(Error::Numeric(e.to_string())))?;
    s.push('\n');
    Ok(s)
}

fn cmd_psa(a: &PsaArgs) -> Outcome<String> {
    let sc = scenario(&a.scenario)?;
    let ds = sc.run_psa(a.samples, a.seed)?;
    let mut buf = Vec::new();
    save_psa_dataset(&ds, &mut buf)?;
    Ok(utf8(buf))
}

fn cmd_evpi(a: &EvpiArgs, format: Format) -> Outcome<String> {
    let ds = load_psa(&a.psa)?;
    let nb = compute_net_benefit(&ds, WtpThreshold::new(a.lambda)?)?;
    estimates_out(&[evpi(&nb)], format, &mut Vec::new())
}

fn cmd_evppi(a: &EvppiArgs, format: Format, warnings: &mut Vec<String>) -> Outcome<String> {
    let ds = load_psa(&a.psa)?;
    let config = EvppiConfig {
        bootstrap: a.bootstrap,
        seed: a.seed,
        ..EvppiConfig::default()
    };
    let fit = fit_evppi(&ds, &a.phi, WtpThreshold::new(a.lambda)?, &config)?;
    if let Some(path) = &a.augmented {
        let mut w = BufWriter::new(File::create(path)?);
        save_augmented_psa_dataset(&fit.augmented, &mut w)?;
        w.flush()?;
    }
    estimates_out(&[fit.estimate], format, warnings)
}

fn design_phi(design: &StudyDesign) -> Vec<String> {
    design.phi_names()
}

fn fit_for_design(ds: &PsaDataset, design: &StudyDesign, lambda: WtpThreshold, bootstrap: usize, seed: u64) -> Outcome<EvppiFit> {
    let config = EvppiConfig {
        bootstrap,
        seed,
        ..EvppiConfig::default()
    };
    Ok(fit_evppi(ds, &design_phi(design), lambda, &config)?)
}

/// `n₀` per design parameter from `name=value` pairs, else from the direct
/// formulas for the first outcome informing each parameter.
fn ga_n0(sc: &Scenario, given: &[String]) -> Outcome<Vec<f64>> {
    let mut pairs = Vec::with_capacity(given.len());
    for g in given {
        let (name, value) = g
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--n0 expects name=value, got `{g}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("--n0 value `{value}` is not a number")))?;
        pairs.push((name.trim().to_string(), v));
    }
    sc.design
        .phi_names()
        .iter()
        .map(|name| {
            if let Some((_, v)) = pairs.iter().find(|(n, _)| n == name) {
                return Ok(*v);
            }
            let spec = sc
                .model
                .parameters()
                .iter()
                .find(|p| &p.name == name)
                .ok_or_else(|| Error::Argument(format!("model has no parameter `{name}`")))?;
            let outcome = sc
                .design
                .outcomes()
                .iter()
                .find(|o| &o.parameter == name)
                .expect("phi names come from the outcomes");
            let e = ess_direct(spec, outcome.family).map_err(|e| match e {
                Error::NoDirectEss { .. } => Error::Argument(format!(
                    "{e}; supply --n0 {name}=<value>, for example from `evsi ess --method posterior-mean`"
                )),
                other => other,
            })?;
            Ok(e.n0)
        })
        .collect()
}

fn cmd_evsi(a: &EvsiArgs, format: Format, warnings: &mut Vec<String>) -> Outcome<String> {
    if a.n.contains(&0) {
        return Err(Failure::Usage("study sample sizes must be positive".into()));
    }
    let sc = scenario(&a.scenario)?;
    let lambda = sc.lambda;
    let designs: Vec<StudyDesign> = a.n.iter().map(|&n| sc.design.with_sample_size(n)).collect();
    let estimates: Vec<VoiEstimate> = match a.method {
        EvsiMethodArg::Rb => {
            let ds = psa_for(&sc, &a.source, a.seed)?;
            let config = RbConfig {
                bootstrap: a.bootstrap,
                ..RbConfig::with_seed(a.seed)
            };
            designs
                .iter()
                .map(|d| evsi_rb_with(&ds, d, lambda, &config))
                .collect::<Result<_, _>>()?
        }
        EvsiMethodArg::Is => {
            let ds = psa_for(&sc, &a.source, a.seed)?;
            let fit = fit_for_design(&ds, &sc.design, lambda, 0, a.seed)?;
            designs
                .iter()
                .map(|d| evsi_is(&fit.augmented, d, lambda, a.seed))
                .collect::<Result<_, _>>()?
        }
        EvsiMethodArg::Ga => {
            let ds = psa_for(&sc, &a.source, a.seed)?;
            let n0 = ga_n0(&sc, &a.n0)?;
            let fit = fit_for_design(&ds, &sc.design, lambda, 0, a.seed)?;
            let config = EvppiConfig {
                bootstrap: a.bootstrap,
                seed: a.seed,
                ..EvppiConfig::default()
            };
            let rule = match a.ga_weight {
                GaWeightArg::Variance => GaWeight::Variance,
                GaWeightArg::Linear => GaWeight::Linear,
            };
            evsi_ga_from_fit(&fit, &n0, &a.n, rule, &config)?
        }
        EvsiMethodArg::Mm => {
            let ds = psa_for(&sc, &a.source, a.seed)?;
            let fit = fit_for_design(&ds, &sc.design, lambda, 0, a.seed)?;
            let config = MmConfig {
                q: a.q,
                ..MmConfig::with_seed(a.seed)
            };
            designs
                .iter()
                .map(|d| evsi_mm_detailed(sc.model.as_ref(), &fit.augmented, d, lambda, &config).map(|r| r.0))
                .collect::<Result<_, _>>()?
        }
        EvsiMethodArg::Oracle => {
            let config = OracleConfig::new(a.outer, a.inner, a.seed);
            designs
                .iter()
                .map(|d| evsi_oracle_with(sc.model.as_ref(), d, lambda, &config))
                .collect::<Result<_, _>>()?
        }
    };
    for e in &estimates {
        warnings.extend(e.diagnostics.warnings.iter().cloned());
    }
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_evsi_csv(&estimates, &mut buf)?;
            Ok(utf8(buf))
        }
        Format::Json => json_out(&estimates),
    }
}

fn cmd_ess(a: &EssArgs, format: Format) -> Outcome<String> {
    let sc = scenario(&a.scenario)?;
    let est: EssEstimate = match a.method {
        EssMethodArg::Direct => {
            let spec = sc
                .model
                .parameters()
                .iter()
                .find(|p| p.name == a.param)
                .ok_or_else(|| Error::Argument(format!("model has no parameter `{}`", a.param)))?;
            let outcome = sc
                .design
                .outcomes()
                .iter()
                .find(|o| o.parameter == a.param)
                .ok_or_else(|| Error::Argument(format!("the study does not inform `{}`", a.param)))?;
            ess_direct(spec, outcome.family)?
        }
        EssMethodArg::Summary | EssMethodArg::PosteriorMean => {
            let seed = a
                .seed
                .ok_or_else(|| Failure::Usage("--seed is required by the simulation-based methods".into()))?;
            let ds = psa_for(&sc, &a.source, seed)?;
            if a.method == EssMethodArg::Summary {
                ess_from_summary(&sc.design, &ds, &a.param, a.n, seed)?
            } else {
                let config = PosteriorMeanConfig {
                    priors: Some(sc.model.parameters().to_vec()),
                };
                ess_from_posterior_means(&sc.design, &ds, &a.param, a.n, seed, &config)?
            }
        }
    };
    match format {
        Format::Csv => {
            let method = serde_json::to_value(est.method).expect("method serialises");
            Ok(format!(
                "parameter,method,n0,alternative,weak_prior\n{},{},{},{},{}\n",
                est.parameter,
                method.as_str().unwrap_or_default(),
                format_decimal(est.n0),
                est.alternative.map(format_decimal).unwrap_or_default(),
                est.weak_prior
            ))
        }
        Format::Json => json_out(&est),
    }
}

/// `(N, evsi)` rows of an EVSI curve file, optionally of one method.
fn read_evsi_curve(path: &Path, method: Option<&str>) -> Outcome<Vec<(u64, f64)>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("EVSI file has no `{name}` column")))
    };
    let (cm, cn, cv) = (col("method")?, col("N")?, col("evsi")?);
    let mut rows = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let m = rec.get(cm).unwrap_or_default().trim().to_string();
        if method.is_some_and(|want| want != m) {
            continue;
        }
        let parse_err = |column: &str, message: String| Error::Parse {
            row: i + 1,
            column: column.into(),
            message,
        };
        let n: u64 = rec
            .get(cn)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| parse_err("N", "not a non-negative integer".into()))?;
        let v: f64 = rec
            .get(cv)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| parse_err("evsi", "not a number".into()))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
        rows.push((n, v));
    }
    if methods.len() > 1 {
        return Err(Failure::Usage(format!(
            "EVSI file holds methods {}; choose one with --method",
            methods.join(", ")
        )));
    }
    Ok(rows)
}

fn cmd_enbs(a: &EnbsArgs, format: Format) -> Outcome<String> {
    let sc = match &a.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let pop_cfg = sc.as_ref().and_then(|s| s.population);
    let cost_cfg = sc.as_ref().and_then(|s| s.research);
    let missing = |what: &str| Failure::Usage(format!("{what} is needed: pass it as a flag or in --config"));
    let pop = PopulationSpec::new(
        a.incidence.or(pop_cfg.map(|p| p.incidence)).ok_or_else(|| missing("--incidence"))?,
        a.horizon.or(pop_cfg.map(|p| p.horizon)).ok_or_else(|| missing("--horizon"))?,
        a.discount.or(pop_cfg.map(|p| p.discount)).unwrap_or(0.0),
    )?;
    let cost = CostModel::new(
        a.fixed.or(cost_cfg.map(|c| c.fixed)).ok_or_else(|| missing("--fixed"))?,
        a.per_participant
            .or(cost_cfg.map(|c| c.per_participant))
            .ok_or_else(|| missing("--per-participant"))?,
    )?;
    let curve = enbs_curve(&read_evsi_curve(&a.evsi, a.method.as_deref())?, &pop, &cost)?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_enbs_csv(&curve, &mut buf)?;
            Ok(utf8(buf))
        }
        Format::Json => json_out(&curve),
    }
}

fn cmd_curves(a: &CurvesArgs, format: Format) -> Outcome<String> {
    let ds = load_psa(&a.psa)?;
    let lambdas = if a.lambdas.is_empty() {
        if !(a.lambda_step > 0.0 && a.lambda_max >= a.lambda_min) {
            return Err(Failure::Usage("threshold grid needs step > 0 and max ≥ min".into()));
        }
        let steps = ((a.lambda_max - a.lambda_min) / a.lambda_step + 1e-9).floor() as usize;
        (0..=steps).map(|i| a.lambda_min + i as f64 * a.lambda_step).collect()
    } else {
        a.lambdas.clone()
    };
    let curves = decision_uncertainty_curves(&ds, &lambdas)?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_curves_csv(&curves, &mut buf)?;
            Ok(utf8(buf))
        }
        Format::Json => json_out(&curves),
    }
}
