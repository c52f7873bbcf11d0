//! `g2flow` — drive the invariant-flow library from the command line.
//!
//! Exit codes: 0 on success, 1 when a mathematical identity check fails
//! (a `verify` row above tolerance, or disagreeing operator assemblies),
//! 2 on input errors (unreadable or malformed models, failed validation,
//! states outside the positive cone, wrong argument shapes).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use g2flow_core::dynamics::{
    constrained_critical, flow, soliton_check, uniform_grid, write_csv, FlowOptions,
};
use g2flow_core::homogeneous::{HomogeneousModel, InvariantFamily, TorsionSquares};
use g2flow_core::linearized::{
    deformation_space, linearize_q, linearize_soliton, p_operator, star_d_spectrum_27,
};
use g2flow_core::models::{builtin, builtin_family};
use g2flow_core::suite::{format_table, identity_suite};
use g2flow_core::Error;

#[derive(Parser)]
#[command(
    name = "g2flow",
    version,
    about = "Invariant flows of positive 3-forms: verification suite, energies, \
             trajectories, solitons, critical points and linearized operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seeded identity suite and print a pass/fail table.
    Verify {
        /// Seed for the deterministic random generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random positive forms to draw.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Evaluate the energy functionals and torsion component norms.
    Energy {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the negative-gradient flow and write the trajectory CSV.
    Flow {
        #[command(flatten)]
        state: StateArgs,
        /// Integration horizon.
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Relative step tolerance.
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        /// Absolute step tolerance.
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        /// Force this many uniformly spaced sample times (0 = adaptive only).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test whether the flow field at the start is collinear with the form.
    Soliton {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Newton search for a constrained critical point inside the model's
    /// parameter family (built-in models only).
    Critical {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a linearized operator at a nearly parallel basepoint.
    Linearize {
        #[command(flatten)]
        state: StateArgs,
        /// Which operator to export.
        #[arg(long, value_enum, default_value_t = OperatorKind::Q)]
        operator: OperatorKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of ⋆d on the invariant Λ³₂₇ part plus the deformation space.
    Spectrum {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OperatorKind {
    /// Linearized flow field.
    Q,
    /// Linearized soliton operator.
    Soliton,
    /// Soliton operator minus the orbit-form adjoint square.
    P,
}

#[derive(Args)]
struct StateArgs {
    /// Built-in model name (`flat7`, `squashed_s7`) or a path to a model
    /// JSON file.
    #[arg(long, default_value = "squashed_s7")]
    model: String,
    /// Comma-separated start. For built-in models this is read as family
    /// parameters when the length matches (e.g. `a,b` for squashed_s7);
    /// otherwise, or with --raw-coeffs, as invariant-basis coefficients.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// Force --start to be interpreted as raw invariant coefficients.
    #[arg(long, default_value_t = false)]
    raw_coeffs: bool,
    /// Comma-separated energy weights ν (four positive reals).
    #[arg(long, default_value = "7,84,1,1", allow_hyphen_values = true)]
    nu: String,
}

/// A CLI failure: exit code plus message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IdentityViolation { .. } => 1,
            _ => 2,
        };
        let message = match &e {
            Error::NotPositive { .. } => format!("invalid start: {e}"),
            Error::Json(inner) => format!("malformed model JSON: {inner}"),
            Error::ModelInvalid { .. } => format!("model failed validation: {e}"),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn log_enabled() -> bool {
    std::env::var_os("G2FLOW_LOG").is_some_and(|v| !v.is_empty())
}

macro_rules! log {
    ($($arg:tt)*) => {
        if log_enabled() {
            eprintln!($($arg)*);
        }
    };
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Failure::input(format!("{what}: `{s}` is not a number")))
        })
        .collect()
}

fn parse_nu(text: &str) -> Result<[f64; 4], Failure> {
    let vals = parse_list(text, "--nu")?;
    let arr: [f64; 4] = vals
        .try_into()
        .map_err(|v: Vec<f64>| Failure::input(format!("--nu needs 4 entries, got {}", v.len())))?;
    Ok(arr)
}

struct LoadedModel {
    model: HomogeneousModel,
    family: Option<InvariantFamily>,
    name: String,
}

fn load_model(spec: &str) -> Result<LoadedModel, Failure> {
    if let Some(model) = builtin(spec) {
        log!("loaded built-in model `{spec}`");
        return Ok(LoadedModel {
            model,
            family: builtin_family(spec),
            name: spec.to_string(),
        });
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Failure::input(format!("cannot read model `{spec}`: {e}")))?;
    let model: HomogeneousModel = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("malformed model JSON in `{spec}`: {e}")))?;
    model
        .validate()
        .map_err(|e| Failure::input(format!("model `{spec}` failed validation: {e}")))?;
    log!(
        "loaded model `{spec}` with {} invariant 3-form directions",
        model.inv3_basis().len()
    );
    Ok(LoadedModel {
        model,
        family: None,
        name: spec.to_string(),
    })
}

/// Resolve --start to invariant coefficients.
fn resolve_start(args: &StateArgs, loaded: &LoadedModel) -> Result<Vec<f64>, Failure> {
    let vals = parse_list(&args.start, "--start")?;
    let n = loaded.model.inv3_basis().len();
    if args.raw_coeffs {
        if vals.len() != n {
            return Err(Failure::input(format!(
                "--start with --raw-coeffs needs {n} coefficients, got {}",
                vals.len()
            )));
        }
        return Ok(vals);
    }
    if let Some(fam) = &loaded.family {
        if vals.len() == fam.param_dim() {
            return Ok(fam.coefficients(&vals)?);
        }
    }
    if vals.len() == n {
        return Ok(vals);
    }
    let accepted = match &loaded.family {
        Some(f) if f.param_dim() != n => format!("{} (parameters) or {n} (coefficients)", f.param_dim()),
        _ => format!("{n} (coefficients)"),
    };
    Err(Failure::input(format!(
        "--start has {} entries; accepted lengths: {accepted}",
        vals.len()
    )))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::input(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::input(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct EnergyOutput<'a> {
    schema_version: u32,
    model: &'a str,
    coefficients: &'a [f64],
    nu: [f64; 4],
    energy: g2flow_core::homogeneous::EnergyReport,
    torsion_squares: TorsionSquares,
}

#[derive(Serialize)]
struct SolitonOutput<'a> {
    schema_version: u32,
    model: &'a str,
    coefficients: &'a [f64],
    nu: [f64; 4],
    #[serde(flatten)]
    report: g2flow_core::dynamics::SolitonReport,
}

#[derive(Serialize)]
struct CriticalOutput<'a> {
    schema_version: u32,
    model: &'a str,
    nu: [f64; 4],
    #[serde(flatten)]
    point: g2flow_core::dynamics::CriticalPoint,
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    schema_version: u32,
    model: &'a str,
    coefficients: &'a [f64],
    star_d_on_invariant_27: g2flow_core::linearized::StarDSpectrum,
    deformations: g2flow_core::linearized::DeformationSpace,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Verify { seed, count } => {
            let rows = identity_suite(seed, count)?;
            print!("{}", format_table(&rows));
            if rows.iter().all(|r| r.passed) {
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::Energy { state, out } => {
            let loaded = load_model(&state.model)?;
            let nu = parse_nu(&state.nu)?;
            let coeffs = resolve_start(&state, &loaded)?;
            let ctx = g2flow_core::metric_from_form(&loaded.model.three_form(&coeffs)?)?;
            let (energy, torsion_squares) = loaded.model.energies_with_ctx(&ctx, nu)?;
            let output = EnergyOutput {
                schema_version: 1,
                model: &loaded.name,
                coefficients: &coeffs,
                nu,
                energy,
                torsion_squares,
            };
            emit(out.as_deref(), &to_pretty(&output)?)?;
            Ok(0)
        }
        Command::Flow {
            state,
            t_end,
            rtol,
            atol,
            samples,
            out,
        } => {
            let loaded = load_model(&state.model)?;
            let nu = parse_nu(&state.nu)?;
            let coeffs = resolve_start(&state, &loaded)?;
            let opts = FlowOptions {
                rtol,
                atol,
                forced_times: if samples > 0 {
                    uniform_grid(t_end, samples)
                } else {
                    Vec::new()
                },
                ..FlowOptions::default()
            };
            let traj = flow(&loaded.model, &coeffs, nu, t_end, &opts)?;
            log!(
                "flow finished with status `{}` after {} samples",
                traj.termination.label(),
                traj.times.len()
            );
            let mut buf = Vec::new();
            write_csv(&traj, &mut buf)
                .map_err(|e| Failure::input(format!("cannot render CSV: {e}")))?;
            let text = String::from_utf8(buf).expect("CSV is ASCII");
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Soliton { state, out } => {
            let loaded = load_model(&state.model)?;
            let nu = parse_nu(&state.nu)?;
            let coeffs = resolve_start(&state, &loaded)?;
            let report = soliton_check(&loaded.model, &coeffs, nu)?;
            let output = SolitonOutput {
                schema_version: 1,
                model: &loaded.name,
                coefficients: &coeffs,
                nu,
                report,
            };
            emit(out.as_deref(), &to_pretty(&output)?)?;
            Ok(0)
        }
        Command::Critical { state, out } => {
            let loaded = load_model(&state.model)?;
            let nu = parse_nu(&state.nu)?;
            let fam = loaded.family.as_ref().ok_or_else(|| {
                Failure::input(format!(
                    "model `{}` has no parameter family; `critical` needs a built-in model",
                    loaded.name
                ))
            })?;
            let params = parse_list(&state.start, "--start")?;
            let point = constrained_critical(fam, &params, nu)?;
            let output = CriticalOutput {
                schema_version: 1,
                model: &loaded.name,
                nu,
                point,
            };
            emit(out.as_deref(), &to_pretty(&output)?)?;
            Ok(0)
        }
        Command::Linearize {
            state,
            operator,
            out,
        } => {
            let loaded = load_model(&state.model)?;
            let coeffs = resolve_start(&state, &loaded)?;
            let op = match operator {
                OperatorKind::Q => linearize_q(&loaded.model, &coeffs)?,
                OperatorKind::Soliton => linearize_soliton(&loaded.model, &coeffs)?,
                OperatorKind::P => p_operator(&loaded.model, &coeffs)?,
            };
            emit(out.as_deref(), &to_pretty(&op.export())?)?;
            Ok(0)
        }
        Command::Spectrum { state, out } => {
            let loaded = load_model(&state.model)?;
            let coeffs = resolve_start(&state, &loaded)?;
            let output = SpectrumOutput {
                schema_version: 1,
                model: &loaded.name,
                coefficients: &coeffs,
                star_d_on_invariant_27: star_d_spectrum_27(&loaded.model, &coeffs)?,
                deformations: deformation_space(&loaded.model, &coeffs)?,
            };
            emit(out.as_deref(), &to_pretty(&output)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
