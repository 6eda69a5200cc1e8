mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eapm_core::bounds::{
    conjectured_bound, critical_visibility, l_d, reference_thresholds, scenario_bound,
    visibility_scan, xor_qubit_bound, BoundKind, BoundResult, XorGame,
};
use eapm_core::optimize::{seesaw, SdpOptions, SeesawConfig};
use eapm_core::protocols::{ideal_score, make_game, Scenario};
use eapm_core::qudit::{check_prime, max_entangled};
use eapm_core::{par, Error};

use output::{destination, emit, fmt_num, matrix, Document};

const IDEAL_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "eapm",
    version,
    about = "Entanglement certification with entanglement-assisted product measurements"
)]
struct Cli {
    /// Output file. Defaults to a file in $EAPM_OUTPUT_DIR when set, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score of the ideal protocol on the maximally entangled state.
    Ideal(IdealArgs),
    /// Ideal-protocol score against the no-entanglement bound over a visibility grid.
    Scan(ScanArgs),
    /// A no-entanglement bound.
    Bound(BoundArgs),
    /// See-saw search over unassisted strategies.
    Seesaw(SeesawArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScenarioArg {
    Eapm,
    #[value(alias = "symmetric")]
    Sym,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Eapm => Scenario::Eapm,
            ScenarioArg::Sym => Scenario::Symmetric,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SeesawScenario {
    #[value(alias = "eapm")]
    EapmUnassisted,
    #[value(alias = "symmetric")]
    Sym,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Which {
    #[value(name = "Ld", alias = "ld")]
    #[serde(rename = "Ld")]
    Ld,
    #[value(name = "xor")]
    #[serde(rename = "xor")]
    Xor,
    #[value(name = "conjecture")]
    #[serde(rename = "conjecture")]
    Conjecture,
}

#[derive(Args, Debug, Serialize)]
struct IdealArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    d: usize,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    d: usize,
    /// Game whose XOR bound is computed (`--which xor`).
    #[arg(long, value_enum, default_value_t = ScenarioArg::Sym)]
    scenario: ScenarioArg,
}

#[derive(Args, Debug, Serialize)]
struct SeesawArgs {
    #[arg(long, value_enum)]
    scenario: SeesawScenario,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 300)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop a restart once a round improves the score by less than this.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Threads for restarts; defaults to the rayon pool size.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    sdp_gap_tol: Option<f64>,
    #[arg(long)]
    sdp_feas_tol: Option<f64>,
    #[arg(long)]
    sdp_max_iters: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Precondition(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Precondition(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Precondition(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn json_only(format: Format, command: &str) -> Outcome {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Precondition(format!(
            "{command} has no CSV form; use --format json"
        ))),
    }
}

#[derive(Serialize)]
struct IdealReport {
    scenario: Scenario,
    d: usize,
    score: f64,
}

fn cmd_ideal(cli: &Cli, a: &IdealArgs) -> Outcome {
    json_only(cli.format, "ideal")?;
    check_prime(a.d)?;
    let scenario = Scenario::from(a.scenario);
    let score = ideal_score(&max_entangled(a.d)?, scenario)?;
    if (score - 1.0).abs() > IDEAL_TOL {
        return Err(Failure::Solver(format!(
            "ideal score {score} deviates from 1"
        )));
    }
    let doc = Document::new(
        "ideal",
        vec![
            "shared maximally entangled state, encodings U_x = X^x0 Z^x1, product MUB measurement with c = c1 - c2",
            "ideal score = 1",
        ],
        a,
        IdealReport { scenario, d: a.d, score },
    );
    emit(
        &doc.to_json()?,
        destination(
            cli.out.as_deref(),
            &format!("ideal-{}-d{}.json", scenario.name(), a.d),
        )
        .as_deref(),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ScanReport {
    scenario: Scenario,
    d: usize,
    bound: BoundResult,
    crossing: f64,
    rows: Vec<eapm_core::bounds::ScanRow>,
}

fn cmd_scan(cli: &Cli, a: &ScanArgs) -> Outcome {
    let scenario = Scenario::from(a.scenario);
    let bound = scenario_bound(a.d, scenario)?;
    let scan = visibility_scan(a.d, scenario, bound, a.from, a.to, a.steps)?;
    let anchors = vec![
        "isotropic state v phi+ + (1 - v) I/d^2; ideal score v + (1 - v)/d",
        "crossing v* = (d b - 1)/(d - 1) for bound b",
    ];
    let ext = match cli.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let dest = destination(
        cli.out.as_deref(),
        &format!("scan-{}-d{}.{ext}", scenario.name(), a.d),
    );
    let text = match cli.format {
        Format::Json => Document::new(
            "scan",
            anchors,
            a,
            ScanReport {
                scenario,
                d: a.d,
                bound: scan.bound,
                crossing: scan.crossing,
                rows: scan.rows,
            },
        )
        .to_json()?,
        Format::Csv => {
            let mut head = String::new();
            head.push_str(&format!(
                "# tool=eapm version={}\n",
                env!("CARGO_PKG_VERSION")
            ));
            head.push_str(&format!(
                "# command=scan scenario={} d={} from={} to={} steps={}\n",
                scenario.name(),
                a.d,
                fmt_num(a.from),
                fmt_num(a.to),
                a.steps
            ));
            for anchor in &anchors {
                head.push_str(&format!("# paper_anchor={anchor}\n"));
            }
            head.push_str(&format!(
                "# bound={} bound_kind={}\n",
                fmt_num(scan.bound.value),
                scan.bound.kind.name()
            ));
            head.push_str(&format!("# crossing={}\n", fmt_num(scan.crossing)));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["v", "score", "bound", "bound_kind", "certified"])?;
            for r in &scan.rows {
                w.write_record([
                    fmt_num(r.v),
                    fmt_num(r.score),
                    fmt_num(r.bound),
                    r.bound_kind.name().to_string(),
                    r.certified.to_string(),
                ])?;
            }
            let body = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
            head + &String::from_utf8_lossy(&body)
        }
    };
    emit(&text, dest.as_deref())?;
    Ok(())
}

#[derive(Serialize)]
struct BoundReport {
    which: Which,
    d: usize,
    bound: BoundResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    /// Ideal-protocol visibility above which the bound is beaten.
    critical_visibility: Option<f64>,
    reference_thresholds: eapm_core::bounds::ReferenceThresholds,
}

fn cmd_bound(cli: &Cli, a: &BoundArgs) -> Outcome {
    json_only(cli.format, "bound")?;
    let (bound, eta, xi, anchor) = match a.which {
        Which::Ld => (l_d(a.d)?, None, None, "L_d = (1 + (d - 1)/sqrt(d + 1))/d"),
        Which::Conjecture => (
            conjectured_bound(a.d)?,
            None,
            None,
            "R_d <= 2/(d + 1), conjectured for odd prime d",
        ),
        Which::Xor => {
            if a.d != 2 {
                return Err(Failure::Precondition(format!(
                    "the XOR bound needs d = 2, got {}",
                    a.d
                )));
            }
            let out = xor_qubit_bound(&XorGame::from_game(&make_game(2, a.scenario.into())?)?)?;
            (
                out.bound,
                Some(out.eta.value),
                Some(out.xi.value),
                "1/2 + sqrt(N_X N_Z + 2 eta) sqrt(N_Y N_Z + 2 xi)/(2 N_X N_Y N_Z), eta and xi from the Gram SDP",
            )
        }
    };
    let report = BoundReport {
        which: a.which,
        d: a.d,
        bound,
        eta,
        xi,
        critical_visibility: critical_visibility(a.d, &bound).ok(),
        reference_thresholds: reference_thresholds(a.d)?,
    };
    let name = match a.which {
        Which::Ld => "Ld",
        Which::Xor => "xor",
        Which::Conjecture => "conjecture",
    };
    let doc = Document::new("bound", vec![anchor], a, report);
    emit(
        &doc.to_json()?,
        destination(cli.out.as_deref(), &format!("bound-{name}-d{}.json", a.d)).as_deref(),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct RestartSummary {
    restart: usize,
    score: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct Strategy {
    states_a: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    states_b: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    /// `povms[z][c]`
    povms: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Serialize)]
struct SeesawReport {
    scenario: Scenario,
    d: usize,
    best_score: f64,
    best_restart: usize,
    recomputed_score: f64,
    converged: bool,
    reference_bound: BoundResult,
    lower_bound: BoundResult,
    restarts: Vec<RestartSummary>,
    strategy: Strategy,
}

#[derive(Serialize)]
struct SeesawEffective<'a> {
    #[serde(flatten)]
    args: &'a SeesawArgs,
    effective: &'a SeesawConfig,
}

fn cmd_seesaw(cli: &Cli, a: &SeesawArgs) -> Outcome {
    json_only(cli.format, "seesaw")?;
    let scenario = match a.scenario {
        SeesawScenario::EapmUnassisted => Scenario::Eapm,
        SeesawScenario::Sym => Scenario::Symmetric,
    };
    let game = make_game(a.d, scenario)?;
    let defaults = SdpOptions::default();
    let cfg = SeesawConfig {
        restarts: a.restarts,
        tol: a.tol,
        max_iters: a.max_iters,
        seed: a.seed,
        workers: a.workers.unwrap_or_else(par::default_workers),
        sdp: SdpOptions {
            max_iters: a.sdp_max_iters.unwrap_or(defaults.max_iters),
            feas_tol: a.sdp_feas_tol.unwrap_or(defaults.feas_tol),
            gap_tol: a.sdp_gap_tol.unwrap_or(defaults.gap_tol),
            ..defaults
        },
    };
    let r = seesaw(&game, &cfg)?;
    let reference_bound = match scenario {
        Scenario::Eapm => l_d(a.d)?,
        Scenario::Symmetric => scenario_bound(a.d, scenario)?,
    };
    let report = SeesawReport {
        scenario,
        d: a.d,
        best_score: r.best_score,
        best_restart: r.best_restart,
        recomputed_score: r.recomputed_score,
        converged: r.converged,
        reference_bound,
        lower_bound: BoundResult {
            value: r.best_score,
            kind: BoundKind::SeesawLower,
            certificate: None,
        },
        restarts: r
            .trace
            .iter()
            .map(|t| RestartSummary {
                restart: t.restart,
                score: t.score,
                iterations: t.iterations,
                converged: t.converged,
            })
            .collect(),
        strategy: Strategy {
            states_a: r.states_a.iter().map(|s| matrix(&s.mat)).collect(),
            states_b: r
                .states_b
                .as_ref()
                .map(|v| v.iter().map(|s| matrix(&s.mat)).collect()),
            povms: r
                .povms
                .iter()
                .map(|p| p.effects.iter().map(matrix).collect())
                .collect(),
        },
    };
    let doc = Document::new(
        "seesaw",
        vec![
            "alternating exact updates: receiver measurements by SDP, sender states by top eigenvector",
            "restart stops when a full round improves the score by less than tol",
        ],
        SeesawEffective { args: a, effective: &cfg },
        report,
    );
    let tag = match a.scenario {
        SeesawScenario::EapmUnassisted => "eapm-unassisted",
        SeesawScenario::Sym => "sym",
    };
    emit(
        &doc.to_json()?,
        destination(
            cli.out.as_deref(),
            &format!("seesaw-{tag}-d{}-seed{}.json", a.d, a.seed),
        )
        .as_deref(),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Ideal(a) => cmd_ideal(&cli, a),
        Command::Scan(a) => cmd_scan(&cli, a),
        Command::Bound(a) => cmd_bound(&cli, a),
        Command::Seesaw(a) => cmd_seesaw(&cli, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Precondition(m) | Failure::Solver(m) | Failure::Io(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
