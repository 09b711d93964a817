//! Command-line front end: coefficient synthesis and export, scenario
//! simulation and operation-count audit.
//!
//! Every command returns its stdout summary as `key=value` lines; the binary
//! only prints it and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use adrc_core::cost::{audit, audit_formula, Implementation};
use adrc_core::design::{fbtf_synthesize, DesignError, DesignSpec, FbtfCoefficients};
use adrc_core::runtime::ControllerKind;
use adrc_core::scalar::Precision;
use adrc_core::sim::{settling_time, simulate, Scenario, SimError};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";

/// Settling band used in `sim` summaries, relative to the step size.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
    #[error("simulation diverged at sample {sample}")]
    Divergence { sample: usize },
    #[error("measured operation counts differ from the closed-form counts")]
    AuditMismatch { report: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Divergence { .. } => 3,
            CliError::AuditMismatch { .. } => 4,
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Divergence { sample } => CliError::Divergence { sample },
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// On-disk form of [`FbtfCoefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub schema_version: String,
    pub order: usize,
    #[serde(rename = "T")]
    pub ts: f64,
    pub b0: f64,
    pub omega_cl: f64,
    pub k_eso: f64,
    pub z_eso: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub feedforward: f64,
}

impl From<&FbtfCoefficients> for CoefficientFile {
    fn from(c: &FbtfCoefficients) -> Self {
        CoefficientFile {
            schema_version: SCHEMA_VERSION.to_string(),
            order: c.order,
            ts: c.ts,
            b0: c.b0,
            omega_cl: c.omega_cl,
            k_eso: c.k_eso,
            z_eso: c.z_eso,
            alpha: c.alpha.clone(),
            beta: c.beta.clone(),
            gamma: c.gamma.clone(),
            feedforward: c.feedforward,
        }
    }
}

impl CoefficientFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("coefficient file serializes");
        s.push('\n');
        s
    }

    /// Parses and checks schema version and array lengths.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: CoefficientFile =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("coefficient file: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported schema_version '{}' (expected '{SCHEMA_VERSION}')",
                file.schema_version
            )));
        }
        for (name, v) in [("alpha", &file.alpha), ("beta", &file.beta), ("gamma", &file.gamma)] {
            if v.len() != file.order + 1 {
                return Err(CliError::Invalid(format!(
                    "{name} has {} entries, order {} needs {}",
                    v.len(),
                    file.order,
                    file.order + 1
                )));
            }
        }
        Ok(file)
    }

    pub fn spec(&self) -> Result<DesignSpec, DesignError> {
        DesignSpec::new(self.order, self.b0, self.ts, self.omega_cl, self.k_eso)
    }

    pub fn into_coefficients(self) -> FbtfCoefficients {
        FbtfCoefficients {
            order: self.order,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            feedforward: self.feedforward,
            ts: self.ts,
            b0: self.b0,
            omega_cl: self.omega_cl,
            k_eso: self.k_eso,
            z_eso: self.z_eso,
        }
    }
}

/// Data-only C header with the coefficient arrays; the update recurrence is
/// documented in comments.
pub fn c_header(c: &FbtfCoefficients) -> String {
    let n = c.order;
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let mut h = String::new();
    let _ = writeln!(h, "/* ADRC feedback transfer function coefficients, order {n}.");
    let _ = writeln!(
        h,
        " * T = {:?} s, b0 = {:?}, omega_cl = {:?} rad/s, k_eso = {:?}, z_eso = {:?}",
        c.ts, c.b0, c.omega_cl, c.k_eso, c.z_eso
    );
    let _ = writeln!(h, " *");
    let _ = writeln!(h, " * Per sample, with storage x[0..{n}] and limiter limit():");
    let _ = writeln!(h, " *   c     = gamma[0]*y + x[0]");
    let _ = writeln!(h, " *   u     = ADRC_FEEDFORWARD*r - c");
    let _ = writeln!(h, " *   u_lim = limit(u)");
    let _ = writeln!(
        h,
        " *   for i = 0 .. {} (ascending): x[i] = x[i+1] - alpha[i]*c + beta[i]*u_lim + gamma[i+1]*y",
        n - 1
    );
    let _ = writeln!(h, " *   x[{n}] = beta[{n}]*u_lim - alpha[{n}]*c");
    let _ = writeln!(h, " */");
    let _ = writeln!(h, "#ifndef ADRC_COEFFICIENTS_H");
    let _ = writeln!(h, "#define ADRC_COEFFICIENTS_H\n");
    let _ = writeln!(h, "#define ADRC_ORDER {n}");
    let _ = writeln!(h, "#define ADRC_STORAGE {}\n", n + 1);
    let _ = writeln!(h, "static const double ADRC_FEEDFORWARD = {:?};", c.feedforward);
    let _ = writeln!(h, "static const double adrc_alpha[{}] = {{ {} }};", n + 1, list(&c.alpha));
    let _ = writeln!(h, "static const double adrc_beta[{}] = {{ {} }};", n + 1, list(&c.beta));
    let _ = writeln!(h, "static const double adrc_gamma[{}] = {{ {} }};\n", n + 1, list(&c.gamma));
    let _ = writeln!(h, "#endif");
    h
}

#[derive(Debug, Parser)]
#[command(name = "adrc", version, about = "Discrete-time ADRC design, simulation and cost audit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    CHeader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerArg {
    Fbtf,
    Ss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize controller coefficients from tuning parameters.
    #[command(allow_negative_numbers = true)]
    Synth {
        /// Plant order n (>= 1).
        #[arg(long)]
        order: usize,
        /// Nominal input gain.
        #[arg(long)]
        b0: f64,
        /// Sample period in seconds.
        #[arg(long)]
        ts: f64,
        /// Closed-loop bandwidth in rad/s.
        #[arg(long)]
        wcl: f64,
        /// Observer-to-controller bandwidth ratio.
        #[arg(long)]
        keso: f64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Run a closed-loop scenario and write the trace as CSV.
    Sim {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Trace CSV output file.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "fbtf")]
        controller: ControllerArg,
        #[arg(long, value_enum, default_value = "double")]
        precision: PrecisionArg,
    },
    /// Compare measured per-step operation counts with the closed forms.
    Audit {
        #[arg(long, default_value_t = 6)]
        max_order: usize,
    },
}

/// Runs one command and returns its stdout summary.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Synth { order, b0, ts, wcl, keso, out, format } => cmd_synth(order, b0, ts, wcl, keso, &out, format),
        Command::Sim { scenario, out, seed, controller, precision } => {
            cmd_sim(&scenario, &out, seed, controller, precision)
        }
        Command::Audit { max_order } => cmd_audit(max_order),
    }
}

pub fn cmd_synth(
    order: usize,
    b0: f64,
    ts: f64,
    wcl: f64,
    keso: f64,
    out: &Path,
    format: OutputFormat,
) -> Result<String, CliError> {
    let spec = DesignSpec::new(order, b0, ts, wcl, keso)?;
    let warnings = spec.validate()?;
    let coeffs = fbtf_synthesize(&spec)?;
    let checks = coeffs.identity_checks();
    let mut summary = String::new();
    let _ = writeln!(summary, "order={order}");
    let _ = writeln!(summary, "z_eso={:?}", coeffs.z_eso);
    for w in &warnings {
        let _ = writeln!(summary, "warning={w}");
    }
    for check in &checks {
        let _ = writeln!(summary, "identity.{}.rel_error={:e}", check.name, check.rel_error);
    }
    if let Some(bad) = checks.iter().find(|c| !c.holds()) {
        return Err(CliError::Invalid(format!(
            "identity {} violated: lhs {:e} rhs {:e} (relative error {:e})",
            bad.name, bad.lhs, bad.rhs, bad.rel_error
        )));
    }
    let text = match format {
        OutputFormat::Json => CoefficientFile::from(&coeffs).to_json(),
        OutputFormat::CHeader => c_header(&coeffs),
    };
    fs::write(out, text).map_err(|e| io_err(out, e))?;
    let _ = writeln!(summary, "identities=ok");
    let _ = writeln!(summary, "out={}", out.display());
    Ok(summary)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("scenario {}: {e}", path.display())))
}

pub fn cmd_sim(
    scenario: &Path,
    out: &Path,
    seed: Option<u64>,
    controller: ControllerArg,
    precision: PrecisionArg,
) -> Result<String, CliError> {
    let mut sc = load_scenario(scenario)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let kind = match controller {
        ControllerArg::Fbtf => ControllerKind::Fbtf,
        ControllerArg::Ss => ControllerKind::StateSpace,
    };
    let prec = match precision {
        PrecisionArg::Single => Precision::Single,
        PrecisionArg::Double => Precision::Double,
    };
    let trace = simulate(&sc, kind, prec)?;
    let file = fs::File::create(out).map_err(|e| io_err(out, e))?;
    trace.write_csv(BufWriter::new(file)).map_err(|e| io_err(out, e))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "samples={}", trace.records.len());
    let _ = writeln!(summary, "seed={}", sc.seed);
    let _ = writeln!(summary, "controller={}", if kind == ControllerKind::Fbtf { "fbtf" } else { "ss" });
    let _ = writeln!(summary, "precision={}", if prec == Precision::Single { "single" } else { "double" });
    // the last setpoint change after startup is the one reported
    let step = sc.setpoint_schedule.0.iter().rev().find(|(t, _)| *t > 0.0).map(|&(t, _)| t);
    match step {
        Some(t) => {
            let _ = writeln!(summary, "setpoint_step_time={t:?}");
            match settling_time(&trace, t, SETTLING_BAND) {
                Some(s) => writeln!(summary, "settling_time={s:?}"),
                None => writeln!(summary, "settling_time=not_settled"),
            }
            .ok();
        }
        None => {
            let _ = writeln!(summary, "settling_time=none");
        }
    }
    let _ = writeln!(summary, "max_du_lim={:?}", trace.max_output_step());
    let _ = writeln!(summary, "saturation_duty={:?}", trace.saturation_duty());
    let _ = writeln!(summary, "out={}", out.display());
    Ok(summary)
}

/// One row per order: measured and closed-form counts as `mul/add/vars`.
pub fn cmd_audit(max_order: usize) -> Result<String, CliError> {
    if max_order == 0 {
        return Err(CliError::Invalid("max-order must be >= 1".into()));
    }
    let mut report = String::new();
    let mut ok = true;
    for n in 1..=max_order {
        let _ = write!(report, "n={n}");
        for imp in [Implementation::StateSpace, Implementation::Fbtf] {
            let formula = audit_formula(imp, n);
            let measured = audit(imp, n);
            ok &= measured == Some(formula);
            let shown = measured.map_or("none".to_string(), |m| m.to_string());
            let _ = write!(report, " {name}={shown} {name}_formula={formula}", name = imp.name());
        }
        // formula-only column, not executed
        let etf = audit_formula(Implementation::ErrorTransferFunction, n);
        let _ = writeln!(report, " error_tf_formula={etf}");
    }
    if ok {
        let _ = writeln!(report, "status=ok");
        Ok(report)
    } else {
        let _ = writeln!(report, "status=mismatch");
        Err(CliError::AuditMismatch { report })
    }
}
