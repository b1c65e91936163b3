//! Command-line front end. [`run`] parses arguments, executes one command and
//! returns the process exit code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ConfigError, ProjectConfig};
use crate::photonstats::StatsError;
use crate::qpm::spectrum::Spectrum;
use crate::qpm::QpmError;
use crate::report::{f, Envelope, InputDigest, Table};
use crate::workflow::{self, Project};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tfln-pdc", version, about = "Design and characterization of thin-film lithium niobate pair sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }
    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Project configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed recorded in the envelope and used by stochastic steps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Poling period, tolerance slopes, period range and mode check.
    Design(Common),
    /// Simulated spectra.
    #[command(subcommand)]
    Spectrum(SpectrumCommand),
    /// Sinc fit of a measured spectrum (two-column CSV).
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spectrum: PathBuf,
    },
    /// Photon-counting statistics from a counts CSV.
    Counts {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        counts: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCommand {
    /// Down-conversion spectrum per poling period.
    Pdc(Common),
    /// Sum-frequency phase-matching map and ridge angle.
    Sfg(Common),
    /// Phase-matched wavelengths versus temperature.
    Tune(Common),
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(m: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: m.to_string(),
        }
    }
    fn input(m: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            message: m.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e)
    }
}

impl From<QpmError> for CliError {
    fn from(e: QpmError) -> Self {
        let code = match e {
            QpmError::Input(_) => EXIT_INPUT,
            QpmError::InvalidProcess(_) | QpmError::Material(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        let code = match e {
            StatsError::Domain(_) | StatsError::Fit(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    exit_code: i32,
    message: &'a str,
}

struct Context {
    command: &'static str,
    common: Common,
    config: Option<ProjectConfig>,
    inputs: Vec<InputDigest>,
}

impl Context {
    fn hash(&self) -> String {
        self.config.as_ref().map(|c| c.hash()).unwrap_or_default()
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.common.out)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", self.common.out.display())))?;
        let p = self.common.out.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display())))
    }

    fn emit<T: Serialize>(&self, warnings: Vec<String>, results: &T, tables: &[Table]) -> Result<(), CliError> {
        for w in &warnings {
            log::warn!("{w}");
        }
        if self.common.format.json() {
            let env = Envelope::new(self.command, self.hash(), self.common.seed, self.inputs.clone(), warnings, results);
            self.write(&format!("{}.json", self.command.replace(' ', "_")), &env.to_json())?;
        }
        if self.common.format.csv() {
            for t in tables {
                self.write(&format!("{}.csv", t.name), &t.to_csv())?;
            }
        }
        Ok(())
    }

    fn fail(&self, e: &CliError) {
        let env = Envelope::new(
            self.command,
            self.hash(),
            self.common.seed,
            self.inputs.clone(),
            vec![],
            ErrorReport {
                exit_code: e.code,
                message: &e.message,
            },
        );
        let name = format!("{}.error.json", self.command.replace(' ', "_"));
        if let Err(w) = self.write(&name, &env.to_json()) {
            eprintln!("error: {}", w.message);
        }
    }
}

fn read_input(path: &Path) -> Result<(String, InputDigest), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::of(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok((text, digest))
}

fn load(ctx: &mut Context) -> Result<Project, CliError> {
    let (_, digest) = read_input(&ctx.common.config).map_err(|e| CliError::config(e.message))?;
    let cfg = ProjectConfig::load(&ctx.common.config)?;
    ctx.inputs.push(digest);
    ctx.config = Some(cfg.clone());
    Ok(Project::new(cfg)?)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, common) = match &cli.command {
        Command::Design(c) => ("design", c),
        Command::Spectrum(SpectrumCommand::Pdc(c)) => ("spectrum pdc", c),
        Command::Spectrum(SpectrumCommand::Sfg(c)) => ("spectrum sfg", c),
        Command::Spectrum(SpectrumCommand::Tune(c)) => ("spectrum tune", c),
        Command::Fit { common, .. } => ("fit", common),
        Command::Counts { common, .. } => ("counts", common),
    };
    let mut ctx = Context {
        command,
        common: common.clone(),
        config: None,
        inputs: Vec::new(),
    };
    let result = (|| {
        let project = load(&mut ctx)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(project.config.solver.threads)
            .build()
            .map_err(CliError::config)?;
        pool.install(|| match &cli.command {
            Command::Design(_) => design(&ctx, &project),
            Command::Spectrum(SpectrumCommand::Pdc(_)) => pdc(&ctx, &project),
            Command::Spectrum(SpectrumCommand::Sfg(_)) => sfg(&ctx, &project),
            Command::Spectrum(SpectrumCommand::Tune(_)) => tune(&ctx, &project),
            Command::Fit { spectrum, .. } => fit(&mut ctx, &project, spectrum),
            Command::Counts { counts: path, .. } => counts(&mut ctx, &project, path),
        })
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ctx.fail(&e);
            e.code
        }
    }
}

fn design(ctx: &Context, project: &Project) -> Result<(), CliError> {
    let r = workflow::run_design(project)?;
    let mut slopes = Table::new("design_slopes", &["parameter", "unit", "sample", "delta_beta_per_m", "slope", "slope_stderr"]);
    for s in &r.slopes {
        for (x, y) in s.samples.iter().zip(&s.delta_beta) {
            slopes.push([s.parameter.name().into(), s.unit.into(), f(*x), f(*y), f(s.slope), f(s.slope_stderr)]);
        }
    }
    let mut cand = Table::new("design_candidates", &["period_um"]);
    for p in &r.candidate_periods_um {
        cand.push([format!("{p:.4}")]);
    }
    ctx.emit(r.warnings.clone(), &r, &[slopes, cand])
}

fn pdc(ctx: &Context, project: &Project) -> Result<(), CliError> {
    let periods = workflow::spectrum_periods(project)?;
    let pump = project.config.process.spectrum_pump_nm;
    let res = workflow::pdc_spectra(project, &periods, pump)?;
    let mut t = Table::new("spectrum_pdc", &["period_um", "wavelength_nm", "intensity"]);
    for r in &res {
        for (l, i) in r.spectrum.wavelength_nm.iter().zip(&r.spectrum.intensity) {
            t.push([format!("{:.4}", r.period_um), format!("{l:.4}"), f(*i)]);
        }
    }
    let mut warnings = Vec::new();
    for r in &res {
        let k = r.spectrum.peak().map(|p| p.0).unwrap_or(0);
        if k == 0 || k + 1 == r.spectrum.len() {
            warnings.push(format!("period {:.4} µm: peak at the grid edge ({:.2} nm)", r.period_um, r.peak_nm));
        }
    }
    ctx.emit(warnings, &res, &[t])
}

fn sfg(ctx: &Context, project: &Project) -> Result<(), CliError> {
    let period = workflow::spectrum_periods(project)?[0];
    let r = workflow::sfg(project, period)?;
    let mut map = Table::new("spectrum_sfg", &["visible_nm", "telecom_nm", "intensity"]);
    for (i, v) in r.map.visible_nm.iter().enumerate() {
        for (j, t) in r.map.telecom_nm.iter().enumerate() {
            map.push([format!("{v:.4}"), format!("{t:.4}"), f(r.map.at(i, j))]);
        }
    }
    let mut locus = Table::new("spectrum_sfg_locus", &["telecom_nm", "visible_nm"]);
    for (t, v) in &r.map.locus {
        locus.push([format!("{t:.6}"), format!("{v:.6}")]);
    }
    ctx.emit(vec![], &r, &[map, locus])
}

fn tune(ctx: &Context, project: &Project) -> Result<(), CliError> {
    let period = workflow::spectrum_periods(project)?[0];
    let r = workflow::tuning(project, period, project.config.process.spectrum_pump_nm)?;
    let mut t = Table::new("spectrum_tune", &["temperature_c", "signal_nm", "idler_nm"]);
    for row in &r.rows {
        t.push([format!("{:.3}", row.temperature_c), format!("{:.6}", row.signal_nm), format!("{:.6}", row.idler_nm)]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        period_um: f64,
        pump_nm: f64,
        tuning: &'a crate::qpm::spectrum::TuningResult,
    }
    let out = Out {
        period_um: period,
        pump_nm: project.config.process.spectrum_pump_nm,
        tuning: &r,
    };
    ctx.emit(vec![], &out, &[t])
}

fn fit(ctx: &mut Context, project: &Project, path: &Path) -> Result<(), CliError> {
    let (text, digest) = read_input(path)?;
    ctx.inputs.push(digest);
    let spectrum = Spectrum::from_csv(&text, project.config.fit.axis)?;
    let r = workflow::fit_spectrum(project, &spectrum)?;
    let mut t = Table::new("fit", &["wavelength_nm", "measured", "model"]);
    for ((l, y), m) in spectrum.wavelength_nm.iter().zip(&spectrum.intensity).zip(&r.model) {
        t.push([format!("{l:.4}"), f(*y), f(*m)]);
    }
    ctx.emit(vec![], &r, &[t])
}

fn counts(ctx: &mut Context, project: &Project, path: &Path) -> Result<(), CliError> {
    let (text, digest) = read_input(path)?;
    ctx.inputs.push(digest);
    let (records, rejected) = workflow::read_counts(&text).map_err(CliError::input)?;
    let warnings: Vec<String> = rejected.iter().map(|r| format!("line {} rejected: {}", r.line, r.reason)).collect();
    let r = workflow::analyze_counts(project, &records, rejected)?;
    let mut t = Table::new(
        "counts",
        &[
            "power_W",
            "klyshko_signal",
            "klyshko_signal_err",
            "klyshko_idler",
            "klyshko_idler_err",
            "pair_rate_hz",
            "pair_rate_err",
            "mean_photon_number",
            "g2_measured",
            "g2_measured_err",
            "g2_theory",
        ],
    );
    for s in &r.records {
        let (g, ge) = s.g2_measured.map(|m| (f(m.value), f(m.stderr))).unwrap_or_default();
        t.push([
            f(s.power_w),
            f(s.klyshko.signal.value),
            f(s.klyshko.signal.stderr),
            f(s.klyshko.idler.value),
            f(s.klyshko.idler.stderr),
            f(s.pair_rate_hz.value),
            f(s.pair_rate_hz.stderr),
            f(s.mean_photon_number),
            g,
            ge,
            f(s.g2_theory),
        ]);
    }
    ctx.emit(warnings, &r, &[t])
}
