//! Executes one configuration and writes its artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dpp_core::certifier::{certify_region, CertifierSettings, Inequality};
use dpp_core::comparison::{default_params, ComparisonParams, DeskConstants, ParamMode, DESK_DEFAULTS};
use dpp_core::operators::{alpha_beta_from_p, required_strip_width};
use dpp_core::regularity::{default_c_prime_grid, fit_c_prime};
use dpp_core::rng::stream;
use dpp_core::simulate::{
    log_to_csv, EpisodeSettings, FieldGreedy, PullAway, PullToward, Stationary, TruncationPolicy,
};
use dpp_core::{
    estimate_value, holder_report, run_episode, solve_dpp, Alpha, Arena, GameKind, GameSpec, GridDomain, Shape,
    SolveDiagnostics, SolveSettings, Strategy, ValueField,
};
use serde::Serialize;

use crate::config::{runtime, CliError, Config};
use dpp_expr::Expr;

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: Option<u64>,
    config: &'a BTreeMap<String, String>,
    result: T,
}

struct Output {
    dir: PathBuf,
    subcommand: String,
    seed: Option<u64>,
    config: BTreeMap<String, String>,
    written: Vec<PathBuf>,
}

impl Output {
    fn json<T: Serialize>(&mut self, name: &str, result: T) -> Result<(), CliError> {
        let art = Artifact {
            tool: "dpplab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            seed: self.seed,
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&art).map_err(runtime)?;
        text.push('\n');
        self.file(name, &text)
    }

    fn file(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| runtime(format!("{}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

/// Reads, validates and runs the configuration at `path`; returns the
/// artifact paths.
pub fn run_file(path: &Path, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        file: name.clone(),
        line: 0,
        msg: e.to_string(),
    })?;
    let mut c = Config::parse(&name, &text)?;
    if let Some(s) = ov.seed {
        c.set("seed", s);
    }
    if let Some(o) = &ov.out {
        c.set("out", o.display());
    }
    run_config(&c)
}

pub fn run_config(c: &Config) -> Result<Vec<PathBuf>, CliError> {
    let sub = c.require_text("run")?;
    let job = match sub.as_str() {
        "solve" => Job::Solve(plan_solve(c)?),
        "simulate" => Job::Simulate(plan_simulate(c)?),
        "certify" => Job::Certify(plan_certify(c)?),
        "holder" => Job::Holder(plan_holder(c)?),
        other => {
            return Err(CliError::Schema(format!(
                "'run' must be one of solve, simulate, certify, holder; got '{other}'"
            )))
        }
    };
    let seed = match sub.as_str() {
        "solve" => c.get::<u64>("seed")?,
        _ => Some(c.require::<u64>("seed")?),
    };
    let dir = PathBuf::from(c.or("out", "dpplab-out".to_string())?);
    let config = c.finish()?;
    let mut out = Output {
        dir,
        subcommand: sub,
        seed,
        config,
        written: Vec::new(),
    };
    match job {
        Job::Solve(p) => exec_solve(p, &mut out)?,
        Job::Simulate(p) => exec_simulate(p, seed.unwrap_or(0), &mut out)?,
        Job::Certify(p) => exec_certify(p, seed.unwrap_or(0), &mut out)?,
        Job::Holder(p) => exec_holder(p, seed.unwrap_or(0), &mut out)?,
    }
    Ok(out.written)
}

enum Job {
    Solve(SolvePlan),
    Simulate(SimPlan),
    Certify(CertifyPlan),
    Holder(HolderPlan),
}

// shared pieces -----------------------------------------------------------

fn expression(c: &Config, key: &str, dim: usize) -> Result<Arc<Expr>, CliError> {
    let text = c.require_text(key)?;
    let e = Expr::parse(&text).map_err(|e| CliError::Schema(format!("'{key}' {e}")))?;
    if e.arity() > dim {
        return Err(CliError::Schema(format!(
            "'{key}' uses y{} but the dimension is {dim}",
            e.arity()
        )));
    }
    Ok(Arc::new(e))
}

fn game(c: &Config, dim: usize) -> Result<GameSpec, CliError> {
    let kind_text = c.require_text("game.kind")?;
    let kind = GameKind::parse(&kind_text)
        .ok_or_else(|| CliError::Schema(format!("unknown game.kind '{kind_text}'")))?;
    let eps: f64 = c.require("game.epsilon")?;
    let spec = match kind {
        GameKind::TugOfWar => GameSpec::tug_of_war(eps),
        GameKind::RandomWalk => GameSpec::random_walk(eps),
        GameKind::SpaceDependent => {
            let alpha = if c.has("game.p") {
                let p: f64 = c.require("game.p")?;
                let (a, _) = alpha_beta_from_p(p, dim).map_err(|e| CliError::Schema(e.to_string()))?;
                c.note("game.alpha", a);
                Alpha::Constant(a)
            } else {
                let text = c.require_text("game.alpha")?;
                match text.parse::<f64>() {
                    Ok(a) => Alpha::Constant(a),
                    Err(_) => {
                        let e = expression(c, "game.alpha", dim)?;
                        Alpha::function(text, move |y: &[f64]| e.eval(y))
                    }
                }
            };
            GameSpec::space_dependent(eps, alpha)
        }
        GameKind::DirectionalNoise => GameSpec::directional(eps, c.require("game.alpha")?),
    };
    spec.validate().map_err(|e| CliError::Schema(e.to_string()))?;
    if kind == GameKind::DirectionalNoise {
        c.note("game.directional_quadrature", format!("{:?}", spec.quadrature(dim)));
    }
    Ok(spec)
}

fn shape(c: &Config) -> Result<Shape, CliError> {
    let kind = c.or("domain.shape", "ball".to_string())?;
    match kind.as_str() {
        "ball" => {
            let dim: usize = c.or("domain.dim", 2)?;
            if dim < 1 {
                return Err(CliError::Schema("domain.dim must be positive".into()));
            }
            let center = c.vector("domain.center")?.unwrap_or_else(|| vec![0.0; dim]);
            if center.len() != dim {
                return Err(CliError::Schema(format!("domain.center must have {dim} entries")));
            }
            Ok(Shape::ball(center, c.or("domain.radius", 1.0)?))
        }
        "box" => {
            let lower = c
                .vector("domain.lower")?
                .ok_or_else(|| CliError::Schema("missing required key 'domain.lower'".into()))?;
            let upper = c
                .vector("domain.upper")?
                .ok_or_else(|| CliError::Schema("missing required key 'domain.upper'".into()))?;
            if lower.len() != upper.len() {
                return Err(CliError::Schema("domain.lower and domain.upper differ in length".into()));
            }
            Ok(Shape::cube(lower, upper))
        }
        other => Err(CliError::Schema(format!("domain.shape must be ball or box, got '{other}'"))),
    }
}

struct Problem {
    domain: Arc<GridDomain>,
    spec: GameSpec,
    data: Arc<Expr>,
    settings: SolveSettings,
}

fn problem(c: &Config, data_key: &str) -> Result<Problem, CliError> {
    let shape = shape(c)?;
    let dim = shape.dim();
    let spec = game(c, dim)?;
    let spacing = c.or("domain.spacing", spec.epsilon / 3.0)?;
    let strip = required_strip_width(&spec, dim, spacing);
    c.note("domain.strip_width", strip);
    let domain = GridDomain::with_strip(shape, spacing, spec.epsilon, strip).map_err(|e| CliError::Schema(e.to_string()))?;
    let data = expression(c, data_key, dim)?;
    let settings = SolveSettings {
        tol: Some(c.or("solve.tol", 1e-8)?),
        max_iter: c.or("solve.max_iter", 100_000)?,
        ..SolveSettings::default()
    };
    Ok(Problem {
        domain: Arc::new(domain),
        spec,
        data,
        settings,
    })
}

fn solve(p: &Problem) -> Result<(ValueField, SolveDiagnostics), CliError> {
    let data = p.data.clone();
    let boundary = ValueField::with_strip_data(p.domain.clone(), move |y| data.eval(y), 0.0).map_err(runtime)?;
    solve_dpp(&p.domain, &boundary, &p.spec, &p.settings, None).map_err(runtime)
}

fn field_csv(u: &ValueField) -> String {
    let d = u.domain();
    let mut out = String::new();
    let names: Vec<String> = (1..=d.dim()).map(|i| format!("x{i}")).collect();
    out.push_str(&names.join(","));
    out.push_str(",value\n");
    for (id, x) in d.points().enumerate() {
        for v in x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", u.get(id)));
    }
    out
}

#[derive(Serialize)]
struct GridSummary {
    spacing: f64,
    strip_width: f64,
    interior_points: usize,
    strip_points: usize,
}

fn grid_summary(d: &GridDomain) -> GridSummary {
    GridSummary {
        spacing: d.spacing(),
        strip_width: d.strip_width(),
        interior_points: d.interior_count(),
        strip_points: d.strip_count(),
    }
}

// solve -------------------------------------------------------------------

struct SolvePlan(Problem);

fn plan_solve(c: &Config) -> Result<SolvePlan, CliError> {
    Ok(SolvePlan(problem(c, "boundary")?))
}

fn exec_solve(p: SolvePlan, out: &mut Output) -> Result<(), CliError> {
    let (u, diag) = solve(&p.0)?;
    out.file("field.csv", &field_csv(&u))?;
    #[derive(Serialize)]
    struct R {
        grid: GridSummary,
        diagnostics: SolveDiagnostics,
    }
    out.json(
        "diagnostics.json",
        R {
            grid: grid_summary(&p.0.domain),
            diagnostics: diag,
        },
    )
}

// simulate ----------------------------------------------------------------

enum StrategySpec {
    Stationary,
    Toward(Vec<f64>),
    Away(Vec<f64>),
    Field(bool),
}

fn strategy(c: &Config, key: &str, dim: usize) -> Result<StrategySpec, CliError> {
    let text = c.or(key, "stationary".to_string())?;
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (text.trim(), None),
    };
    let point = |a: Option<&str>| -> Result<Vec<f64>, CliError> {
        let v: Result<Vec<f64>, _> = a.unwrap_or("").split(',').map(|s| s.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if v.len() == dim => Ok(v),
            _ => Err(CliError::Schema(format!("'{key}' needs a target with {dim} coordinates, got '{text}'"))),
        }
    };
    Ok(match name {
        "stationary" => StrategySpec::Stationary,
        "pull-toward" => StrategySpec::Toward(point(arg)?),
        "pull-away" => StrategySpec::Away(point(arg)?),
        "field-max" => StrategySpec::Field(true),
        "field-min" => StrategySpec::Field(false),
        _ => {
            return Err(CliError::Schema(format!(
                "'{key}' must be stationary, pull-toward:<point>, pull-away:<point>, field-max or field-min"
            )))
        }
    })
}

struct SimPlan {
    problem: Problem,
    lattice: bool,
    start: Vec<f64>,
    players: [StrategySpec; 2],
    episodes: usize,
    settings: EpisodeSettings,
    policy: TruncationPolicy,
    log_episode: Option<usize>,
}

fn plan_simulate(c: &Config) -> Result<SimPlan, CliError> {
    let problem = problem(c, "boundary")?;
    let dim = problem.domain.dim();
    let arena = c.or("sim.arena", "continuous".to_string())?;
    let lattice = match arena.as_str() {
        "continuous" => false,
        "lattice" => true,
        other => return Err(CliError::Schema(format!("sim.arena must be continuous or lattice, got '{other}'"))),
    };
    let start = c
        .vector("sim.start")?
        .ok_or_else(|| CliError::Schema("missing required key 'sim.start'".into()))?;
    if start.len() != dim {
        return Err(CliError::Schema(format!("sim.start must have {dim} entries")));
    }
    let players = [strategy(c, "sim.player1", dim)?, strategy(c, "sim.player2", dim)?];
    if problem.spec.kind == GameKind::DirectionalNoise && lattice {
        return Err(CliError::Schema("the directional game needs sim.arena = continuous".into()));
    }
    let policy = match c.or("sim.truncation", "exclude".to_string())?.as_str() {
        "exclude" => TruncationPolicy::Exclude,
        "sentinel" => TruncationPolicy::Sentinel,
        other => return Err(CliError::Schema(format!("sim.truncation must be exclude or sentinel, got '{other}'"))),
    };
    let settings = EpisodeSettings {
        max_steps: c.or("sim.max_steps", 1_000_000)?,
        sentinel: c.or("sim.sentinel", f64::NEG_INFINITY)?,
    };
    Ok(SimPlan {
        problem,
        lattice,
        start,
        players,
        episodes: c.or("sim.episodes", 1000)?,
        settings,
        policy,
        log_episode: c.get("sim.log_episode")?,
    })
}

fn exec_simulate(p: SimPlan, seed: u64, out: &mut Output) -> Result<(), CliError> {
    let needs_field = p.players.iter().any(|s| matches!(s, StrategySpec::Field(_)));
    let field = if needs_field { Some(Arc::new(solve(&p.problem)?.0)) } else { None };
    let build = |s: &StrategySpec| -> Box<dyn Strategy> {
        match s {
            StrategySpec::Stationary => Box::new(Stationary),
            StrategySpec::Toward(t) => Box::new(PullToward(t.clone())),
            StrategySpec::Away(t) => Box::new(PullAway(t.clone())),
            StrategySpec::Field(maximize) => Box::new(FieldGreedy {
                field: field.clone().expect("field solved above"),
                maximize: *maximize,
            }),
        }
    };
    let (s1, s2) = (build(&p.players[0]), build(&p.players[1]));
    let arena = if p.lattice {
        Arena::Lattice(p.problem.domain.clone())
    } else {
        Arena::Continuous(p.problem.domain.shape().clone())
    };
    let data = p.problem.data.clone();
    let payoff = move |y: &[f64]| data.eval(y);
    let spec = &p.problem.spec;
    let est = estimate_value(
        spec,
        s1.as_ref(),
        s2.as_ref(),
        &p.start,
        &arena,
        &payoff,
        p.episodes,
        seed,
        &p.settings,
        p.policy,
    )
    .map_err(runtime)?;
    if let Some(i) = p.log_episode {
        let mut rows = Vec::new();
        let mut r = stream(seed, i as u64);
        run_episode(spec, s1.as_ref(), s2.as_ref(), &p.start, &arena, &payoff, &mut r, &p.settings, Some(&mut rows))
            .map_err(runtime)?;
        out.file("episodes.csv", &log_to_csv(&rows))?;
    }
    #[derive(Serialize)]
    struct R {
        start: Vec<f64>,
        player1: String,
        player2: String,
        estimate: dpp_core::simulate::ValueEstimate,
    }
    out.json(
        "outcome.json",
        R {
            start: p.start.clone(),
            player1: s1.name(),
            player2: s2.name(),
            estimate: est,
        },
    )
}

// certify -----------------------------------------------------------------

struct CertifyPlan {
    params: ComparisonParams,
    inequalities: Vec<Inequality>,
    samples: usize,
    settings: CertifierSettings,
}

fn plan_certify(c: &Config) -> Result<CertifyPlan, CliError> {
    let n: usize = c.or("cmp.n", 2)?;
    let mode_text = c.or("cmp.mode", "desk".to_string())?;
    let mode = ParamMode::parse(&mode_text)
        .ok_or_else(|| CliError::Schema(format!("cmp.mode must be desk or paper-strict, got '{mode_text}'")))?;
    let params = match mode {
        ParamMode::DeskScale => {
            let d = DESK_DEFAULTS;
            ComparisonParams::desk(
                n,
                DeskConstants {
                    delta: c.or("cmp.delta", d.delta)?,
                    c: c.or("cmp.c", d.c)?,
                    n_annuli: c.or("cmp.n_annuli", d.n_annuli)?,
                    epsilon: c.or("cmp.epsilon", d.epsilon)?,
                    theta: c.or("cmp.theta", d.theta)?,
                    omega: c.or("cmp.omega", d.omega)?,
                },
            )
        }
        ParamMode::PaperStrict => {
            let mut p = default_params(n, mode, c.get("cmp.omega")?).map_err(|e| CliError::Schema(e.to_string()))?;
            if let Some(e) = c.get("cmp.epsilon")? {
                p.epsilon = e;
            }
            p
        }
    };
    params.validate().map_err(|e| CliError::Schema(e.to_string()))?;
    let list = c.or("certify.inequalities", "I,II,III,T".to_string())?;
    let inequalities = list
        .split(',')
        .map(|s| Inequality::parse(s).ok_or_else(|| CliError::Schema(format!("unknown inequality '{}'", s.trim()))))
        .collect::<Result<Vec<_>, _>>()?;
    let settings = match c.or("certify.budget", "sweep".to_string())?.as_str() {
        "sweep" => CertifierSettings::sweep(n),
        "reference" => CertifierSettings::reference(n),
        other => return Err(CliError::Schema(format!("certify.budget must be sweep or reference, got '{other}'"))),
    };
    Ok(CertifyPlan {
        params,
        inequalities,
        samples: c.or("certify.samples", 10_000)?,
        settings,
    })
}

fn exec_certify(p: CertifyPlan, seed: u64, out: &mut Output) -> Result<(), CliError> {
    let reports = certify_region(&p.params, &p.inequalities, p.samples, seed, &p.settings).map_err(runtime)?;
    #[derive(Serialize)]
    struct Summary {
        inequality: Inequality,
        min_margin: f64,
        negative_count: usize,
        all_positive: bool,
    }
    #[derive(Serialize)]
    struct R {
        summary: Vec<Summary>,
        reports: Vec<dpp_core::CertificateReport>,
    }
    let summary = reports
        .iter()
        .map(|r| Summary {
            inequality: r.inequality,
            min_margin: r.min_margin,
            negative_count: r.negative_count,
            all_positive: r.all_positive(),
        })
        .collect();
    out.json("certificate.json", R { summary, reports })
}

// holder ------------------------------------------------------------------

struct HolderPlan {
    problem: Problem,
    delta: f64,
    radius: f64,
    center: Vec<f64>,
    c_prime: Option<f64>,
    pairs: usize,
}

fn plan_holder(c: &Config) -> Result<HolderPlan, CliError> {
    let problem = problem(c, "boundary")?;
    let dim = problem.domain.dim();
    let center = c.vector("holder.center")?.unwrap_or_else(|| vec![0.0; dim]);
    if center.len() != dim {
        return Err(CliError::Schema(format!("holder.center must have {dim} entries")));
    }
    let c_prime = match c.or("holder.c_prime", "fit".to_string())?.as_str() {
        "fit" => None,
        v => Some(
            v.parse::<f64>()
                .map_err(|_| CliError::Schema(format!("holder.c_prime must be a number or 'fit', got '{v}'")))?,
        ),
    };
    Ok(HolderPlan {
        problem,
        delta: c.require("holder.delta")?,
        radius: c.require("holder.radius")?,
        center,
        c_prime,
        pairs: c.or("holder.pairs", 20_000)?,
    })
}

fn exec_holder(p: HolderPlan, seed: u64, out: &mut Output) -> Result<(), CliError> {
    let (u, diag) = solve(&p.problem)?;
    let eps = p.problem.spec.epsilon;
    let raw = holder_report(&u, p.delta, eps, p.radius, &p.center, p.c_prime.unwrap_or(0.0), p.pairs, seed)
        .map_err(runtime)?;
    let report = match p.c_prime {
        Some(_) => raw,
        None => fit_c_prime(&raw, &default_c_prime_grid()),
    };
    out.file("quotients.csv", &report.quotients_csv())?;
    #[derive(Serialize)]
    struct R {
        c_prime_fitted: bool,
        grid: GridSummary,
        diagnostics: SolveDiagnostics,
        report: dpp_core::HolderReport,
    }
    out.json(
        "holder.json",
        R {
            c_prime_fitted: p.c_prime.is_none(),
            grid: grid_summary(&p.problem.domain),
            diagnostics: diag,
            report,
        },
    )
}
