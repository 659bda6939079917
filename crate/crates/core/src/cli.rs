//! The `persuasion` command line: config in, CSV/JSON tables out.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::concavify::{blackwell_spread, optimal_experiment, GridSpec, PosteriorLaw};
use crate::config::{parse_override, Config, ProtocolKind, SweepKind};
use crate::epic::{epic_check, protocol_a_solve, protocol_b_construct, solve_silence_posterior, Protocol};
use crate::error::{Error, Result};
use crate::instruments::state_outcome;
use crate::mc::{simulate_sender_value, simulate_verification};
use crate::model::{aggregate_action, indirect_value, verifying_mass, Belief, State};
use crate::statics::{
    protocol_b_equilibrium, sweep_design, sweep_instrument_usage, sweep_silence_posterior, value_function, SweepReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "persuasion", version, about = "Bayesian persuasion with costly verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `model.b=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory [default: output.dir from the config, else ./out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `grid.points`.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate lambda, A and v over a belief grid.
    Eval,
    /// Solve for the silence posterior and build the protocol.
    SolveEpic,
    /// Concavified design, with instruments when configured.
    Optimize,
    /// Per-(mu, theta) falsification and violence table.
    Instruments,
    /// Monte Carlo estimate.
    Simulate,
    /// Comparative statics along a family path.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::SolveEpic => "solve-epic",
            Command::Optimize => "optimize",
            Command::Instruments => "instruments",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
        }
    }
}

/// Parses arguments, runs, reports on stdout/stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(done) => {
            for w in &done.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", done.summary);
            done.code
        }
        Err(e) => {
            eprintln!("error: {}: {e}", cli.command.name());
            EXIT_INPUT
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let mut overrides = cli
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(seed) = cli.seed {
        overrides.push(("sim.seed".into(), json!(seed)));
    }
    if let Some(points) = cli.grid {
        overrides.push(("grid.points".into(), json!(points)));
    }
    Config::load(path, &overrides)
}

pub fn run(cli: &Cli) -> Result<RunResult> {
    let cfg = load_config(cli)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./out"));
    std::fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    match cli.command {
        Command::Eval => eval(&cfg, &out),
        Command::SolveEpic => solve_epic(&cfg, &out),
        Command::Optimize => optimize(&cfg, &out),
        Command::Instruments => instruments(&cfg, &out),
        Command::Simulate => simulate(&cfg, &out),
        Command::Sweep => sweep(&cfg, &out),
    }
}

/// CSV numerals: 17 significant digits, which round-trip every `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Header plus rows, comma separated, newline terminated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::domain("empty CSV"))?
            .split(',')
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(String::from).collect();
            if row.len() != header.len() {
                return Err(Error::domain(format!("CSV row {} has {} fields", i + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

/// Free text inside a CSV cell; commas would break the dialect.
fn text_cell(s: Option<&str>) -> String {
    s.unwrap_or("").replace([',', '\n'], ";")
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_file(dir.join(name), &text)
}

fn mu_grid(points: usize) -> Result<Vec<f64>> {
    Ok(GridSpec::new(points)?.nodes())
}

fn done(summary: String, files: Vec<PathBuf>) -> RunResult {
    RunResult {
        code: EXIT_OK,
        summary,
        files,
        warnings: Vec::new(),
    }
}

fn eval(cfg: &Config, out: &Path) -> Result<RunResult> {
    let dist = cfg.distribution()?;
    let b = cfg.model.bias();
    let mut t = Table::new(&["mu", "lambda", "a_state0", "a_state1", "v"]);
    for m in mu_grid(cfg.output.mu_points)? {
        let mu = Belief::clamped(m);
        t.push(vec![
            fmt_num(m),
            fmt_num(verifying_mass(mu, dist)),
            fmt_num(aggregate_action(mu, State::Zero, dist)),
            fmt_num(aggregate_action(mu, State::One, dist)),
            fmt_num(indirect_value(mu, dist, b)),
        ]);
    }
    let path = write_file(out.join("eval.csv"), &t.to_csv())?;
    Ok(done(format!("eval: {} rows -> {}", t.rows.len(), path.display()), vec![path]))
}

#[derive(Serialize)]
struct EpicOut {
    roots: Vec<f64>,
    mu_s: f64,
    lambda_at_silence: f64,
    branch: crate::epic::Branch,
    protocol: Protocol,
    delta0: f64,
    a0: Option<f64>,
    alpha: Option<f64>,
    law: LawOut,
    epic_slacks: EpicSlacks,
    epic_holds: bool,
}

#[derive(Serialize)]
struct EpicSlacks {
    epic0: f64,
    epic1: f64,
    indifference_required: bool,
}

#[derive(Serialize)]
struct LawOut {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl From<&PosteriorLaw> for LawOut {
    fn from(l: &PosteriorLaw) -> Self {
        LawOut {
            support: l.support().to_vec(),
            weights: l.weights().to_vec(),
        }
    }
}

fn solve_epic(cfg: &Config, out: &Path) -> Result<RunResult> {
    let dist = cfg.distribution()?;
    let params = &cfg.model;
    let branch = cfg.protocol.branch;
    let sol = solve_silence_posterior(params.bias(), dist, branch)?;
    let mu = Belief::new(sol.mu_s)?;
    let (protocol, law) = match cfg.protocol.kind {
        ProtocolKind::A => {
            let p = protocol_a_solve(params, mu)?;
            (Protocol::A(p), p.induced_law(params)?)
        }
        ProtocolKind::B => {
            let p = match cfg.protocol.delta0 {
                Some(d0) => protocol_b_construct(params, d0, mu)?,
                None => protocol_b_equilibrium(params, dist, branch)?,
            };
            (Protocol::B(p), p.induced_law()?)
        }
    };
    let report = epic_check(&protocol, dist, params);
    let (a0, alpha) = match protocol {
        Protocol::A(_) => (None, None),
        Protocol::B(p) => (Some(p.a0), Some(p.alpha)),
    };
    let record = EpicOut {
        roots: sol.roots.clone(),
        mu_s: sol.mu_s,
        lambda_at_silence: verifying_mass(mu, dist),
        branch,
        protocol,
        delta0: protocol.delta0(),
        a0,
        alpha,
        law: (&law).into(),
        epic_slacks: EpicSlacks {
            epic0: report.epic0_slack,
            epic1: report.epic1_slack,
            indifference_required: report.indifference_required,
        },
        epic_holds: report.holds(),
    };
    let path = write_json(out, "solve_epic.json", &record)?;
    Ok(done(
        format!(
            "solve-epic: mu_s={} lambda={} epic={} -> {}",
            record.mu_s,
            record.lambda_at_silence,
            if record.epic_holds { "ok" } else { "violated" },
            path.display()
        ),
        vec![path],
    ))
}

fn optimize(cfg: &Config, out: &Path) -> Result<RunResult> {
    let dist = cfg.distribution()?;
    let ins = cfg.instruments.as_ref();
    let value_fn = value_function(dist, cfg.model.bias(), ins);
    let law = optimal_experiment(&cfg.model, &value_fn, cfg.grid)?;
    let value = law.expectation(&value_fn);
    let spread = if law.len() <= 2 { Some(blackwell_spread(&law)?) } else { None };
    let record = json!({
        "prior": cfg.model.prior(),
        "with_instruments": ins.is_some(),
        "grid_points": cfg.grid.points(),
        "support": law.support(),
        "weights": law.weights(),
        "value": value,
        "value_at_prior": value_fn(cfg.model.prior()),
        "spread": spread,
    });
    let path = write_json(out, "optimize.json", &record)?;
    Ok(done(
        format!("optimize: support={:?} value={value} -> {}", law.support(), path.display()),
        vec![path],
    ))
}

fn instruments(cfg: &Config, out: &Path) -> Result<RunResult> {
    let dist = cfg.distribution()?;
    let ins = cfg.instruments()?;
    let b = cfg.model.bias();
    let mut t = Table::new(&[
        "mu",
        "theta",
        "aggregate",
        "target",
        "d_star",
        "loss",
        "gap",
        "violence",
        "d_applied",
        "total_loss",
    ]);
    let mut used = 0usize;
    for m in mu_grid(cfg.output.mu_points)? {
        for theta in State::ALL {
            let o = state_outcome(
                Belief::clamped(m),
                theta,
                dist,
                b,
                &ins.falsification,
                ins.violence.as_ref(),
            )?;
            used += o.violence as usize;
            t.push(vec![
                fmt_num(m),
                fmt_num(theta.value()),
                fmt_num(o.aggregate),
                fmt_num(o.target),
                fmt_num(o.falsification.d_star),
                fmt_num(o.falsification.loss),
                fmt_num(o.gap.unwrap_or(f64::NAN)),
                (o.violence as u8).to_string(),
                fmt_num(o.d_applied),
                fmt_num(o.total_loss),
            ]);
        }
    }
    let path = write_file(out.join("instruments.csv"), &t.to_csv())?;
    Ok(done(
        format!(
            "instruments: {} rows, violence in {used} -> {}",
            t.rows.len(),
            path.display()
        ),
        vec![path],
    ))
}

fn simulate(cfg: &Config, out: &Path) -> Result<RunResult> {
    let dist = cfg.distribution()?;
    let sim = cfg.sim()?;
    let sc = sim.sim_config()?;
    let b = cfg.model.bias();
    let record: Value = match sim.state {
        Some(theta) => {
            let est = simulate_verification(sim.mu, theta, dist, &sc)?;
            json!({
                "quantity": "lambda",
                "estimate": est.lambda_hat,
                "se": est.se_lambda,
                "exact": verifying_mass(sim.mu, dist),
                "a_hat": est.a_hat,
                "se_a": est.se_a,
                "a_exact": aggregate_action(sim.mu, theta, dist),
                "mu": sim.mu,
                "state": theta,
                "n": sc.n(),
                "replications": sc.replications(),
                "seed": sc.seed(),
            })
        }
        None => {
            let (f, v) = match &cfg.instruments {
                Some(i) => (Some(&i.falsification), i.violence.as_ref()),
                None => (None, None),
            };
            let est = simulate_sender_value(sim.mu, dist, b, &sc, f, v)?;
            json!({
                "quantity": "value",
                "estimate": est.v_hat,
                "se": est.se,
                "exact": value_function(dist, b, cfg.instruments.as_ref())(sim.mu.value()),
                "mu": sim.mu,
                "with_instruments": f.is_some(),
                "n": sc.n(),
                "replications": sc.replications(),
                "seed": sc.seed(),
            })
        }
    };
    let path = write_json(out, "simulate.json", &record)?;
    Ok(done(
        format!(
            "simulate: {} estimate={} se={} -> {}",
            record["quantity"].as_str().unwrap_or_default(),
            record["estimate"],
            record["se"],
            path.display()
        ),
        vec![path],
    ))
}

fn sweep_result<R>(report: &SweepReport<R>, table: Table, out: &Path, label: &str) -> Result<RunResult> {
    let path = write_file(out.join("sweep.csv"), &table.to_csv())?;
    let mut warnings = report.warnings.clone();
    let mut summary = String::new();
    let _ = write!(summary, "sweep {label}: {} members, ", table.rows.len());
    let code = if !report.asserted {
        summary.push_str("report only");
        EXIT_OK
    } else if report.passed() {
        summary.push_str("all checks passed");
        EXIT_OK
    } else {
        let _ = write!(summary, "{} violations", report.violations.len());
        for v in &report.violations {
            warnings.push(format!(
                "{} at member {}: {} -> {} ({})",
                v.column, v.index, v.previous, v.current, v.detail
            ));
        }
        EXIT_ASSERTION
    };
    let _ = write!(summary, " -> {}", path.display());
    Ok(RunResult {
        code,
        summary,
        files: vec![path],
        warnings,
    })
}

fn sweep(cfg: &Config, out: &Path) -> Result<RunResult> {
    let (spec, kind) = cfg.sweep_spec()?;
    match kind {
        SweepKind::Silence => {
            let r = sweep_silence_posterior(&spec, spec.model.bias())?;
            let mut t = Table::new(&["index", "mu_s", "lambda", "error"]);
            for row in &r.rows {
                t.push(vec![
                    row.index.to_string(),
                    fmt_num(row.mu_s),
                    fmt_num(row.lambda),
                    text_cell(row.error.as_deref()),
                ]);
            }
            sweep_result(&r, t, out, "silence")
        }
        SweepKind::Design => {
            let r = sweep_design(&spec)?;
            let mut t = Table::new(&["index", "mu_l", "mu_h", "spread", "value", "error"]);
            for row in &r.rows {
                t.push(vec![
                    row.index.to_string(),
                    fmt_num(row.mu_l),
                    fmt_num(row.mu_h),
                    fmt_num(row.spread),
                    fmt_num(row.value),
                    text_cell(row.error.as_deref()),
                ]);
            }
            sweep_result(&r, t, out, "design")
        }
        SweepKind::Usage => {
            let r = sweep_instrument_usage(&spec)?;
            let mut t = Table::new(&["index", "falsification_mass", "violence_prob", "error"]);
            for row in &r.rows {
                t.push(vec![
                    row.index.to_string(),
                    fmt_num(row.falsification_mass),
                    fmt_num(row.violence_prob),
                    text_cell(row.error.as_deref()),
                ]);
            }
            sweep_result(&r, t, out, "usage")
        }
    }
}
