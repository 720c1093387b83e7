//! The `km-rates` command line: `certify`, `run`, `verify`, `audit` and
//! `catalog`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 certificate overflow,
//! 4 numeric abort, 5 verification failure.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::certificates::{
    certify, instance_constants, Certificate, CertificateTable, InstanceConstants,
};
use crate::config::{Format, RunConfig, FAMILIES};
use crate::engine::{
    audit_inequalities, csv_line, iterate_with, write_trajectory_csv, AuditReport, IterateOptions,
    Row, Sink, Trajectory, CSV_HEADER, MAX_STORED_POINTS,
};
use crate::error::KmError;
use crate::moduli::{Nat, RateFn, RateKind};
use crate::operators::{check_nonexpansive, NonexpansiveReport, Operator, Space, CATALOG};
use crate::schedules::{verify_hypotheses, HypothesisReport, Schedule};
use crate::verify::{
    check_liminf_contract, check_rate_soundness, LiminfReport, Quantity, SoundnessReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Auto horizons never exceed this before the margin is added.
pub const AUTO_HORIZON_CAP: u64 = 100_000;
pub const AUTO_HORIZON_MARGIN: u64 = 100;

#[derive(Debug, Parser)]
#[command(
    name = "km-rates",
    version,
    about = "Rates of asymptotic regularity for generalized KM iterations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Ω, Φ, Ψ for an instance.
    Certify(CommonArgs),
    /// Run the iteration, write the trajectory and audit it.
    Run(CommonArgs),
    /// Certify, run and check the rates against the trajectory.
    Verify(CommonArgs),
    /// Check schedule hypotheses, nonexpansiveness and the pointwise inequalities.
    Audit(CommonArgs),
    /// List operators and schedule families.
    Catalog {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, replacing `output.directory`; without either the report goes to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest k to tabulate and verify
    #[arg(long)]
    pub k_max: Option<u64>,
    /// Number of iteration steps; sized from Φ when absent
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Seed for the nonexpansiveness sampler
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report format; replaces `output.formats` from the config
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Errors of a command, carrying their exit code.
#[derive(Debug)]
pub enum CliError {
    Km(KmError),
    Io(String),
}

impl From<KmError> for CliError {
    fn from(e: KmError) -> Self {
        CliError::Km(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Km(KmError::Overflow { .. }) => EXIT_OVERFLOW,
            CliError::Km(KmError::NonFinite { .. }) => EXIT_NUMERIC,
            CliError::Km(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Km(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Effective settings after applying command-line flags to the config.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Settings {
    pub fn new(mut config: RunConfig, args: &CommonArgs) -> Self {
        if let Some(k) = args.k_max {
            config.run.k_max = k;
        }
        if let Some(h) = args.horizon {
            config.run.horizon = Some(h);
        }
        if let Some(s) = args.seed {
            config.run.seed = s;
        }
        let out = args.out.clone().or_else(|| config.output.directory.clone());
        let formats = match args.format {
            Some(f) => vec![f],
            None => config.output.formats.clone(),
        };
        Settings {
            config,
            out,
            formats,
        }
    }

    pub fn load(args: &CommonArgs) -> CliResult<Self> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| KmError::Config(format!("{}: {e}", args.config.display())))?;
        Ok(Settings::new(RunConfig::from_json(&text)?, args))
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn primary_format(&self) -> Format {
        self.formats.first().copied().unwrap_or(Format::Json)
    }
}

/// Everything needed to run and certify one instance.
pub struct Instance {
    pub space: Space,
    pub op: Operator,
    pub x0: Vec<f64>,
    pub z: Vec<f64>,
    pub schedule: Schedule,
    pub constants: InstanceConstants,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub operator: String,
    pub schedule: String,
    pub start: Vec<f64>,
    pub z: Vec<f64>,
    pub constants: InstanceConstants,
}

impl Instance {
    pub fn prepare(cfg: &RunConfig) -> crate::Result<Self> {
        let space = cfg.build_space()?;
        let op = cfg.build_operator(&space)?;
        let x0 = cfg.start(&space)?;
        let schedule = cfg.build_schedule(&space)?;
        let z = op.fixed_point_for(&space, &x0);
        let constants = instance_constants(&space, &x0, &z, &schedule)?;
        let mut certificate = certify(cfg.certificate.formula, &constants, &schedule, &space)?;
        if let Some(c) = cfg.certificate.phi_constant {
            certificate.phi = RateFn::constant(
                RateKind::RateOfConvergence("|x_n - Tx_n|".into()),
                Nat::from(c),
            )
            .with_description(format!("constant {c} (override)"));
            certificate.alternate = None;
            certificate
                .notes
                .push("Phi replaced by a constant override".into());
        }
        log::info!(
            "instance: {} / {:?}, b = {}, M0 = {}, formula {:?}",
            op.tag(),
            schedule.family(),
            constants.b,
            constants.m0,
            certificate.formula_tag
        );
        Ok(Instance {
            space,
            op,
            x0,
            z,
            schedule,
            constants,
            certificate,
        })
    }

    pub fn summary(&self) -> InstanceSummary {
        InstanceSummary {
            operator: self.op.tag().to_string(),
            schedule: format!("{:?}", self.schedule.family()),
            start: self.x0.clone(),
            z: self.z.clone(),
            constants: self.constants,
        }
    }

    /// `min(cap, max_{k ≤ k_max} Φ(k)) + margin`.
    pub fn auto_horizon(&self, k_max: u64) -> crate::Result<u64> {
        let mut m: Nat = 0;
        for k in 0..=Nat::from(k_max) {
            m = m.max(self.certificate.phi.eval(k)?);
        }
        Ok(m.min(Nat::from(AUTO_HORIZON_CAP)) as u64 + AUTO_HORIZON_MARGIN)
    }

    pub fn horizon(&self, cfg: &RunConfig) -> crate::Result<u64> {
        match cfg.run.horizon {
            Some(h) => Ok(h),
            None => self.auto_horizon(cfg.run.k_max),
        }
    }

    /// Runs the iteration; in streaming mode rows go straight to `csv`.
    pub fn run(&self, horizon: u64, csv: Option<&Path>) -> CliResult<Trajectory> {
        let streamed = horizon > MAX_STORED_POINTS;
        let t = match (csv, streamed) {
            (Some(path), true) => {
                let mut w = BufWriter::new(File::create(path)?);
                writeln!(w, "{CSV_HEADER}")?;
                let mut io_err = None;
                let mut sink = |r: &Row| {
                    if let Err(e) = writeln!(w, "{}", csv_line(r)) {
                        io_err.get_or_insert(e.to_string());
                    }
                    Ok(())
                };
                let t = self.iterate(horizon, Some(&mut sink))?;
                if let Some(e) = io_err {
                    return Err(CliError::Io(e));
                }
                w.flush()?;
                t
            }
            (Some(path), false) => {
                let t = self.iterate(horizon, None)?;
                write_trajectory_csv(&t, BufWriter::new(File::create(path)?))?;
                t
            }
            (None, _) => self.iterate(horizon, None)?,
        };
        Ok(t)
    }

    fn iterate(&self, horizon: u64, sink: Option<Sink<'_>>) -> crate::Result<Trajectory> {
        iterate_with(
            &self.space,
            &self.op,
            &self.x0,
            &self.z,
            &self.schedule,
            horizon,
            IterateOptions { hook: None, sink },
        )
    }
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub instance: InstanceSummary,
    pub certificate: CertificateTable,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub instance: InstanceSummary,
    pub horizon: u64,
    pub streamed: bool,
    pub audit: AuditReport,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub instance: InstanceSummary,
    pub horizon: u64,
    pub formula_tag: crate::certificates::FormulaTag,
    pub notes: Vec<String>,
    pub res_t: SoundnessReport,
    pub res_step: SoundnessReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate_res_t: Option<SoundnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate_res_step: Option<SoundnessReport>,
    pub liminf: LiminfReport,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct AuditCommandReport {
    pub instance: InstanceSummary,
    pub hypotheses: HypothesisReport,
    pub nonexpansive: NonexpansiveReport,
    pub inequalities: AuditReport,
    pub pass: bool,
}

/// Samples used by `audit` for the nonexpansiveness check.
pub const NONEXPANSIVE_SAMPLES: usize = 2000;

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn out_dir(s: &Settings) -> CliResult<Option<PathBuf>> {
    match &s.out {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.clone()))
        }
        None => Ok(None),
    }
}

fn certificate_csv<W: Write>(t: &CertificateTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,omega,phi,psi")?;
    for r in &t.rows {
        writeln!(w, "{},{},{},{}", r.k, r.omega, r.phi, r.psi)?;
    }
    w.flush()
}

pub fn cmd_certify(s: &Settings) -> CliResult<i32> {
    let inst = Instance::prepare(&s.config)?;
    let table = inst.certificate.tabulate(Nat::from(s.config.run.k_max))?;
    let report = CertifyReport {
        instance: inst.summary(),
        certificate: table,
    };
    match out_dir(s)? {
        Some(d) => {
            if s.wants(Format::Json) {
                write_json(&d.join("certificate.json"), &report)?;
            }
            if s.wants(Format::Csv) {
                certificate_csv(
                    &report.certificate,
                    BufWriter::new(File::create(d.join("certificate.csv"))?),
                )?;
            }
        }
        None => match s.primary_format() {
            Format::Json => print_json(&report)?,
            Format::Csv => certificate_csv(&report.certificate, std::io::stdout().lock())?,
        },
    }
    Ok(EXIT_OK)
}

pub fn cmd_run(s: &Settings) -> CliResult<i32> {
    let inst = Instance::prepare(&s.config)?;
    let horizon = inst.horizon(&s.config)?;
    let dir = out_dir(s)?;
    let csv = dir.as_ref().map(|d| d.join("trajectory.csv"));
    let t = inst.run(horizon, csv.as_deref())?;
    let audit = audit_inequalities(&t, &inst.constants);
    let pass = audit.pass();
    let report = RunReport {
        instance: inst.summary(),
        horizon,
        streamed: t.is_streamed(),
        audit,
    };
    match dir {
        Some(d) => write_json(&d.join("audit.json"), &report)?,
        None => match s.primary_format() {
            Format::Json => print_json(&report)?,
            Format::Csv => write_trajectory_csv(&t, std::io::stdout().lock())?,
        },
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

pub fn cmd_verify(s: &Settings) -> CliResult<i32> {
    let inst = Instance::prepare(&s.config)?;
    let horizon = inst.horizon(&s.config)?;
    let dir = out_dir(s)?;
    let csv = dir
        .as_ref()
        .filter(|_| s.wants(Format::Csv))
        .map(|d| d.join("trajectory.csv"));
    let t = inst.run(horizon, csv.as_deref())?;
    let k_max = Nat::from(s.config.run.k_max);
    let cert = &inst.certificate;
    let res_t = check_rate_soundness(&t, &cert.phi, Quantity::ResT, k_max)?;
    let res_step = check_rate_soundness(&t, &cert.psi, Quantity::ResStep, k_max)?;
    let (alt_t, alt_step) = match &cert.alternate {
        Some((p, q)) => (
            Some(check_rate_soundness(&t, p, Quantity::ResT, k_max)?),
            Some(check_rate_soundness(&t, q, Quantity::ResStep, k_max)?),
        ),
        None => (None, None),
    };
    let l_max = Nat::from(s.config.run.l_max);
    let liminf = check_liminf_contract(&t, &cert.liminf, l_max, l_max)?;
    let pass = res_t.pass()
        && res_step.pass()
        && alt_t.as_ref().is_none_or(|r| r.pass())
        && alt_step.as_ref().is_none_or(|r| r.pass())
        && liminf.pass();
    let report = VerifyReport {
        instance: inst.summary(),
        horizon,
        formula_tag: cert.formula_tag,
        notes: cert.notes.clone(),
        res_t,
        res_step,
        alternate_res_t: alt_t,
        alternate_res_step: alt_step,
        liminf,
        pass,
    };
    match dir {
        Some(d) => {
            if s.wants(Format::Json) {
                write_json(&d.join("verify.json"), &report)?;
            }
            if s.wants(Format::Csv) {
                report
                    .res_t
                    .write_csv(BufWriter::new(File::create(d.join("soundness_res_T.csv"))?))?;
                report.res_step.write_csv(BufWriter::new(File::create(
                    d.join("soundness_res_step.csv"),
                )?))?;
            }
        }
        None => match s.primary_format() {
            Format::Json => print_json(&report)?,
            Format::Csv => report.res_t.write_csv(std::io::stdout().lock())?,
        },
    }
    for row in report
        .res_t
        .failures()
        .iter()
        .chain(report.res_step.failures().iter())
    {
        log::warn!(
            "rate violated at k = {} (bound {}): excess {:?}",
            row.k,
            row.bound,
            row.max_excess
        );
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

pub fn cmd_audit(s: &Settings) -> CliResult<i32> {
    let inst = Instance::prepare(&s.config)?;
    let horizon = inst.horizon(&s.config)?;
    let hypotheses = verify_hypotheses(
        &inst.schedule,
        horizon.min(crate::config::VALIDATION_WINDOW * 5),
    )?;
    let half_width = inst.space.norm(&inst.x0).max(1.0) * 2.0;
    let nonexpansive = check_nonexpansive(
        &inst.op,
        &inst.space,
        NONEXPANSIVE_SAMPLES,
        s.config.run.seed,
        half_width,
    )?;
    let t = inst.run(horizon, None)?;
    let inequalities = audit_inequalities(&t, &inst.constants);
    let pass = hypotheses.pass() && nonexpansive.pass() && inequalities.pass();
    let report = AuditCommandReport {
        instance: inst.summary(),
        hypotheses,
        nonexpansive,
        inequalities,
        pass,
    };
    match out_dir(s)? {
        Some(d) => write_json(&d.join("audit_report.json"), &report)?,
        None => print_json(&report)?,
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

#[derive(Debug, Serialize)]
struct CatalogEntry {
    kind: &'static str,
    name: &'static str,
    description: &'static str,
}

pub fn cmd_catalog(format: Format) -> CliResult<i32> {
    let entries: Vec<CatalogEntry> = CATALOG
        .iter()
        .map(|(name, description)| CatalogEntry {
            kind: "operator",
            name,
            description,
        })
        .chain(FAMILIES.iter().map(|(name, description)| CatalogEntry {
            kind: "schedule",
            name,
            description,
        }))
        .collect();
    match format {
        Format::Json => print_json(&entries)?,
        Format::Csv => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "kind,name,description")?;
            for e in &entries {
                writeln!(out, "{},{},\"{}\"", e.kind, e.name, e.description)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Certify(a) => Settings::load(a).and_then(|s| cmd_certify(&s)),
        Command::Run(a) => Settings::load(a).and_then(|s| cmd_run(&s)),
        Command::Verify(a) => Settings::load(a).and_then(|s| cmd_verify(&s)),
        Command::Audit(a) => Settings::load(a).and_then(|s| cmd_audit(&s)),
        Command::Catalog { format } => cmd_catalog(*format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
