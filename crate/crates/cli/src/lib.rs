//! Command implementations behind the `gleason` binary.
//!
//! Every command returns an [`Outcome`]: the JSON printed on stdout plus the
//! exit code. Parsing and I/O problems are [`CliError::Input`] (exit 2),
//! violated contracts are [`CliError::Domain`] or a failing check (exit 1).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use gleason_core::boxes::{self, bell_verdict, is_nonsignalling, pr_box, random_ns_box};
use gleason_core::cj;
use gleason_core::operators::{self, classify, pr_measurements, pr_operator, TraceRuleModel};
use gleason_core::synthesis::synthesize;
use gleason_core::upb::{self, build_upb, e_from_theta, UpbModel, DEFAULT_THETA};
use gleason_core::witness::{certify_witness, grid_oracle_3qubit, WitnessVerdict, DEFAULT_RESTARTS};
use gleason_core::{CorrelationBox, HermitianOperator, Scenario};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Domain(#[from] gleason_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: value < tolerance,
            value,
            tolerance,
        }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: value > tolerance,
            value,
            tolerance,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What a command prints and how the process exits.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub stdout: Value,
    pub exit_code: i32,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        let exit_code = if report.passed() { EXIT_PASS } else { EXIT_DOMAIN };
        Outcome {
            stdout: serde_json::to_value(&report).expect("reports serialize"),
            exit_code,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gleason", version, about = "Trace-rule models for nonsignalling correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a box for no-signalling.
    NsCheck { path: PathBuf },
    /// Build an operator and measurements reproducing a box.
    Synthesize {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Evaluate `tr(O M ⊗ ... ⊗ M)` for an operator/measurement model.
    Evaluate {
        path: PathBuf,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Three-qubit UPB witness and its Bell value.
    Upb {
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// The PR box from an indefinite two-qubit operator.
    PrboxDemo {
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random nonsignalling box.
    Random {
        parties: usize,
        settings: usize,
        outcomes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Bipartite witness/state identity on random channels.
    CjVerify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tripartite Bell value of a (3,2,2) box.
    BellBeta { path: PathBuf },
    /// Positive / witness / indefinite classification of an operator.
    Classify {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::NsCheck { path } => Ok(cmd_ns_check(path)?.into()),
        Command::Synthesize { path, seed, out } => Ok(cmd_synthesize(path, *seed, out.as_deref())?.into()),
        Command::Evaluate { path, out } => Ok(cmd_evaluate(path, out.as_deref())?.into()),
        Command::Upb {
            theta,
            restarts,
            seed,
            grid,
        } => Ok(cmd_upb(*theta, *restarts, *seed, *grid)?.into()),
        Command::PrboxDemo { restarts, seed } => Ok(cmd_prbox_demo(*restarts, *seed)?.into()),
        Command::Random {
            parties,
            settings,
            outcomes,
            seed,
            out,
        } => {
            let b = cmd_random(*parties, *settings, *outcomes, *seed)?;
            let value = to_value(&b);
            if let Some(path) = out {
                write_json(path, &value)?;
            }
            Ok(Outcome {
                stdout: value,
                exit_code: EXIT_PASS,
            })
        }
        Command::CjVerify { trials, seed } => Ok(cmd_cj_verify(*trials, *seed)?.into()),
        Command::BellBeta { path } => Ok(cmd_bell_beta(path)?.into()),
        Command::Classify { path, restarts, seed } => Ok(cmd_classify(path, *restarts, *seed)?.into()),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("values serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("library types serialize")
}

pub fn cmd_ns_check(path: &Path) -> CliResult<Report> {
    let b: CorrelationBox = read_json(path)?;
    let check = is_nonsignalling(&b);
    Ok(Report {
        command: "ns-check".into(),
        inputs: json!({ "box": path.display().to_string() }),
        results: json!({
            "scenario": to_value(&b.scenario()),
            "max_violation": check.max_violation,
            "normalization_error": b.normalization_error(),
        }),
        checks: vec![
            Check::below("no_signalling", check.max_violation, boxes::NS_TOL),
            Check::below("normalization", b.normalization_error(), boxes::NS_TOL),
        ],
    })
}

pub fn cmd_synthesize(path: &Path, seed: u64, out: Option<&Path>) -> CliResult<Report> {
    let b: CorrelationBox = read_json(path)?;
    let model = synthesize(&b, seed)?;
    let back = model.evaluate()?;
    let round_trip = back.max_abs_difference(&b);
    let trace_error = (model.operator.trace() - 1.0).abs();
    let hermiticity = gleason_core::hilbert::hermitian_deviation(model.operator.matrix());
    let model_json = to_value(&model.to_json_model());
    let mut results = json!({
        "local_dim": model.local_dim(),
        "round_trip_max_error": round_trip,
        "trace_error": trace_error,
        "hermitian_deviation": hermiticity,
        "duality_error": model.family.duality_error(),
        "operator_min_eigenvalue": model.operator.min_eigenvalue(),
    });
    match out {
        Some(p) => write_json(p, &model_json)?,
        None => results["model"] = model_json,
    }
    Ok(Report {
        command: "synthesize".into(),
        inputs: json!({ "box": path.display().to_string(), "seed": seed }),
        results,
        checks: vec![
            Check::below("round_trip", round_trip, 1e-9),
            Check::below("unit_trace", trace_error, 1e-9),
            Check::below("hermitian", hermiticity, 1e-12),
            Check::below("duality", model.family.duality_error(), 1e-10),
        ],
    })
}

pub fn cmd_evaluate(path: &Path, out: Option<&Path>) -> CliResult<Report> {
    let model: TraceRuleModel = read_json(path)?;
    let evaluation = model.evaluate()?;
    let ns = is_nonsignalling(&evaluation.correlations);
    let box_json = to_value(&evaluation.correlations);
    if let Some(p) = out {
        write_json(p, &box_json)?;
    }
    Ok(Report {
        command: "evaluate".into(),
        inputs: json!({ "model": path.display().to_string() }),
        results: json!({
            "box": box_json,
            "valid_probabilities": evaluation.valid_probabilities,
            "max_violation": ns.max_violation,
        }),
        checks: vec![Check::below("no_signalling", ns.max_violation, boxes::NS_TOL)],
    })
}

pub fn cmd_upb(theta: Option<f64>, restarts: usize, seed: u64, grid: Option<usize>) -> CliResult<Report> {
    let e = match theta {
        Some(t) => {
            let e = e_from_theta(t);
            build_upb(&e)?;
            if !(t > 0.0 && t < std::f64::consts::FRAC_PI_2) {
                return Err(gleason_core::Error::RangeViolation {
                    name: "theta",
                    value: t,
                    range: "(0, π/2)",
                }
                .into());
            }
            e
        }
        None => upb::default_e(),
    };
    let model = UpbModel::build(&e, restarts, seed)?;
    let summary = upb::summarize(&model)?;
    let b = upb::gleason_box(&model)?;
    let eps = summary.epsilon;
    let ns = is_nonsignalling(&b);
    let entries_ok = b.entries_within(1e-9);
    let want_trace = upb::witness_value_on_rho(eps);
    let mut results = json!({
        "epsilon": eps,
        "beta_formula": summary.beta_formula,
        "beta_direct": summary.beta_direct,
        "witness_trace_on_rho": summary.witness_trace_on_rho,
        "classical_max": summary.classical_max,
        "gap": summary.gap,
        "box_max_violation": ns.max_violation,
    });
    let mut checks = vec![
        Check::flag("epsilon_in_open_half_interval", eps > 0.0 && eps < 0.5),
        Check::below("beta_formula_vs_direct", (summary.beta_direct - summary.beta_formula).abs(), 1e-9),
        Check::above("beta_minus_classical", summary.gap, 1e-3),
        Check::below("witness_trace_on_rho", (summary.witness_trace_on_rho - want_trace).abs(), 1e-10),
        Check::flag("entries_in_range", entries_ok),
        Check::below("no_signalling", ns.max_violation, boxes::NS_TOL),
    ];
    if let Some(points) = grid {
        let grid_eps = grid_oracle_3qubit(&model.upb.pi_upb, points)?;
        results["epsilon_grid"] = json!(grid_eps);
        checks.insert(0, Check::below("epsilon_vs_grid", (eps - grid_eps).abs(), 1e-3));
    }
    Ok(Report {
        command: "upb".into(),
        inputs: json!({
            "theta": theta.unwrap_or(DEFAULT_THETA),
            "restarts": restarts,
            "seed": seed,
            "grid": grid,
        }),
        results,
        checks,
    })
}

pub fn cmd_prbox_demo(restarts: usize, seed: u64) -> CliResult<Report> {
    let o = pr_operator();
    let evaluation = operators::evaluate_box(&o, &pr_measurements())?;
    let error = evaluation.correlations.max_abs_difference(&pr_box());
    let class = classify(&o, restarts, seed);
    let cert = certify_witness(&o, restarts, seed)?;
    let recomputed = cert.minimization.argmin.expectation(&o)?;
    Ok(Report {
        command: "prbox-demo".into(),
        inputs: json!({ "restarts": restarts, "seed": seed }),
        results: json!({
            "max_error": error,
            "min_eigenvalue": class.min_eigenvalue,
            "positive": class.positive,
            "product_min": cert.minimization.value,
            "witness_verdict": to_value(&cert.verdict),
            "box": to_value(&evaluation.correlations),
        }),
        checks: vec![
            Check::below("pr_box_exact", error, 1e-12),
            Check::flag("not_positive", !class.positive),
            Check::flag("not_a_witness", cert.verdict == WitnessVerdict::Violated),
            Check::below("certificate_recomputes", (recomputed - cert.minimization.value).abs(), 1e-10),
        ],
    })
}

pub fn cmd_random(parties: usize, settings: usize, outcomes: usize, seed: u64) -> CliResult<CorrelationBox> {
    let s = Scenario::new(parties, settings, outcomes)?;
    Ok(random_ns_box(s, seed))
}

pub fn cmd_cj_verify(trials: usize, seed: u64) -> CliResult<Report> {
    let summary = cj::run_random_trials(trials, seed)?;
    let (psi, t, mm) = cj::transpose_fixture();
    let fixture = cj::verify_gleason_identity(&psi, &t, &mm)?;
    let identity = cj::verify_gleason_identity(&psi, &cj::LinearMap::identity(2), &mm)?;
    Ok(Report {
        command: "cj-verify".into(),
        inputs: json!({ "trials": trials, "seed": seed }),
        results: json!({
            "random": to_value(&summary),
            "transpose_fixture": to_value(&fixture),
            "identity_fixture_discrepancy": identity.max_discrepancy,
        }),
        checks: vec![
            Check::below("random_discrepancy", summary.max_discrepancy, 1e-10),
            Check::flag("random_dual_povms_valid", summary.all_dual_povms_valid),
            Check::below("transpose_discrepancy", fixture.max_discrepancy, 1e-10),
            Check::below("transpose_choi_indefinite", fixture.witness_min_eigenvalue, 0.0),
            Check::flag("transpose_dual_povms_valid", fixture.dual_povms_valid),
            Check::below("identity_discrepancy", identity.max_discrepancy, 1e-14),
        ],
    })
}

pub fn cmd_bell_beta(path: &Path) -> CliResult<Report> {
    let b: CorrelationBox = read_json(path)?;
    let verdict = bell_verdict(&b)?;
    Ok(Report {
        command: "bell-beta".into(),
        inputs: json!({ "box": path.display().to_string() }),
        results: to_value(&verdict),
        checks: vec![],
    })
}

pub fn cmd_classify(path: &Path, restarts: usize, seed: u64) -> CliResult<Report> {
    let o: HermitianOperator = read_json(path)?;
    let class = classify(&o, restarts, seed);
    Ok(Report {
        command: "classify".into(),
        inputs: json!({ "operator": path.display().to_string(), "restarts": restarts, "seed": seed }),
        results: to_value(&class),
        checks: vec![Check::flag("hermitian_unit_trace", class.hermitian_unit_trace)],
    })
}
