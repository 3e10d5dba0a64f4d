use std::collections::BTreeMap;
use std::sync::Arc;

use pqlap_core::brackets::{
    competitive_bracket, cooperative_bracket, growth_certificate, lemma_l2_check,
    lemma_l2_crossover, solve_singular_scalar, tune_lambda, zhang_w, Bracket,
};
use pqlap_core::grid::{Domain, Grid, SourcePart};
use pqlap_core::plap::{closed_form_unit_load, solve_dirichlet, PlapProblem};
use pqlap_core::system::{
    check_structure, fixed_point_solve, order_preservation_check, rho_estimate, system_operator,
    Mode, Start,
};
use pqlap_core::{BoundCertificate, Error, Field};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, RunMode};
use crate::refine::refine_study;
use crate::{RunError, SCHEMA_VERSION};

/// Tolerance on the maximum of constant-exponent unit-load solutions.
const CLOSED_FORM_TOL: f64 = 2e-3;
/// Starting and upper-start fixed points count as the same within this.
const DUAL_START_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A certificate or end check failed.
    Fail,
    /// A gating hypothesis is violated; nothing was solved.
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Rejected => "rejected",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Rejected => 2,
        }
    }
}

/// Result of a pipeline: the report body and what to dump next to it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    /// Names of failed certificates or checks.
    pub failures: Vec<String>,
    pub report: Value,
    pub fields: Vec<(String, Field)>,
    /// Column name and per-iteration values for `iterations.csv`.
    pub iterations: Option<(String, Vec<f64>)>,
}

struct Builder {
    body: Map<String, Value>,
    failures: Vec<String>,
    fields: Vec<(String, Field)>,
    iterations: Option<(String, Vec<f64>)>,
}

impl Builder {
    fn new(cfg: &RunConfig) -> Result<Self, RunError> {
        let mut body = Map::new();
        body.insert("schema_version".into(), json!(SCHEMA_VERSION));
        body.insert("mode".into(), json!(cfg.mode.as_str()));
        body.insert("scenario".into(), serde_json::to_value(cfg)?);
        if matches!(cfg.domain, Domain::Rectangle { .. }) {
            // the theory assumes a C^2 boundary; only constants near corners are affected
            body.insert(
                "domain_note".into(),
                json!("rectangle boundary has corners and is not C^2; constants fitted near corners are approximate"),
            );
        }
        Ok(Builder {
            body,
            failures: Vec::new(),
            fields: Vec::new(),
            iterations: None,
        })
    }

    fn put(&mut self, key: &str, value: impl serde::Serialize) -> Result<(), RunError> {
        self.body.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    fn certificates(&mut self, key: &str, certs: &[BoundCertificate]) -> Result<(), RunError> {
        for c in certs.iter().filter(|c| !c.satisfied) {
            self.failures.push(c.name.clone());
        }
        self.put(
            key,
            json!({
                "passed": certs.iter().all(|c| c.satisfied),
                "certificates": certs,
            }),
        )
    }

    fn field(&mut self, name: &str, f: &Field) {
        self.fields.push((name.into(), f.clone()));
    }

    fn finish(mut self, rejected: bool) -> Outcome {
        let status = if rejected {
            Status::Rejected
        } else if self.failures.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        self.body.insert("status".into(), json!(status.as_str()));
        self.body.insert("failures".into(), json!(self.failures));
        Outcome {
            status,
            failures: self.failures,
            report: Value::Object(self.body),
            fields: self.fields,
            iterations: self.iterations,
        }
    }
}

/// Execute the scenario. `seed` drives the randomized property checks.
pub fn run(cfg: &RunConfig, seed: u64) -> Result<Outcome, RunError> {
    cfg.validate()?;
    match cfg.mode {
        RunMode::Cooperative | RunMode::Competitive => run_system(cfg, seed),
        RunMode::Scalar => run_scalar(cfg),
        RunMode::LemmaL2 => run_lemma_l2(cfg),
        RunMode::Refine => run_refine(cfg, cfg.refine.levels),
    }
}

/// Refinement study of a scalar scenario with `levels` levels.
pub fn run_refine(cfg: &RunConfig, levels: usize) -> Result<Outcome, RunError> {
    let mut b = Builder::new(cfg)?;
    let study = refine_study(cfg, levels)?;
    if !study.passed {
        b.failures.push("refinement".into());
    }
    b.put("refinement", &study)?;
    Ok(b.finish(false))
}

fn run_system(cfg: &RunConfig, seed: u64) -> Result<Outcome, RunError> {
    let mut b = Builder::new(cfg)?;
    let grid = cfg.grid()?;
    let spec = cfg.problem_spec(&grid)?;
    let structure = check_structure(&spec, &grid)?;
    b.put("structure", &structure)?;
    if let Some(c) = structure.first_gating_failure() {
        log::error!("hypothesis {} violated: {}", c.name, c.detail);
        b.failures.push(c.name.clone());
        return Ok(b.finish(true));
    }

    let builder = match spec.mode {
        Mode::Cooperative => cooperative_bracket,
        Mode::Competitive => competitive_bracket,
    };
    let built = match cfg.lambda.value() {
        None => tune_lambda(builder, &spec, &grid, &cfg.bracket, 1.0),
        Some(l) => builder(&spec.with_lambda(l), &grid, &cfg.bracket).map(|br| (l, br)),
    };
    let (lambda, bracket) = match built {
        Ok(x) => x,
        Err(Error::LambdaBudget {
            doublings,
            certificate,
        }) => {
            b.put(
                "lambda_search",
                json!({ "doublings": doublings, "failing": certificate }),
            )?;
            b.failures.push(certificate);
            return Ok(b.finish(false));
        }
        Err(e) => return Err(e.into()),
    };
    let spec = spec.with_lambda(lambda);
    b.put("lambda_star", lambda)?;
    bracket_section(&mut b, &bracket)?;
    let mut constants: BTreeMap<String, f64> = BTreeMap::new();
    constants.insert("lambda_star".into(), lambda);
    let upper = match spec.mode {
        Mode::Cooperative => ["c2_u", "c2_v"],
        Mode::Competitive => ["c0_1", "c0_2"],
    };
    if let (Some(a), Some(c)) = (
        bracket.constants.get(upper[0]),
        bracket.constants.get(upper[1]),
    ) {
        constants.insert("C".into(), a.max(*c));
    }
    for k in ["theta1", "theta2"] {
        if let Some(&t) = bracket.constants.get(k) {
            constants.insert(k.into(), t);
        }
    }
    if !bracket.all_satisfied() {
        b.put("constants", &constants)?;
        return Ok(b.finish(false));
    }

    if spec.mode == Mode::Competitive {
        let est = rho_estimate(&spec, &bracket)?;
        b.put(
            "rho",
            json!({ "estimate": est, "used": spec.rho.unwrap_or(est.rho) }),
        )?;
    }
    let (u, v, report) = match fixed_point_solve(&spec, &bracket, &cfg.fixed_point, Start::Low) {
        Ok(x) => x,
        Err(e @ Error::Containment { .. }) => {
            b.put("fixed_point", json!({ "error": e.to_string() }))?;
            b.failures.push("containment".into());
            b.put("constants", &constants)?;
            return Ok(b.finish(false));
        }
        Err(e) => return Err(e.into()),
    };
    b.failures
        .extend(report.failures.iter().map(|f| format!("fixed_point: {f}")));
    constants.insert("c".into(), report.boundary_growth[0]);
    constants.insert("c_prime".into(), report.boundary_growth[1]);
    b.put("fixed_point", &report)?;
    b.iterations = Some(("sup_change".into(), report.sup_changes.clone()));
    b.field("u", &u);
    b.field("v", &v);

    if cfg.checks.dual_start {
        let dual = match fixed_point_solve(&spec, &bracket, &cfg.fixed_point, Start::High) {
            Ok((uh, vh, rh)) => {
                let dist = uh.sup_diff(&u)?.max(vh.sup_diff(&v)?);
                json!({
                    "converged": rh.success(),
                    "iterations": rh.iterations,
                    "sup_distance": dist,
                    "agree": dist <= DUAL_START_TOL,
                })
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        b.put("dual_start", dual)?;
    }
    if cfg.checks.order_trials > 0 {
        let op = system_operator(&spec, &bracket, &cfg.fixed_point.solver)?;
        let order = order_preservation_check(&op, cfg.checks.order_trials, seed)?;
        if order.preserved < order.trials {
            b.failures.push("order_preservation".into());
        }
        b.put("order_preservation", order)?;
    }
    b.put("constants", &constants)?;
    Ok(b.finish(false))
}

fn bracket_section(b: &mut Builder, br: &Bracket) -> Result<(), RunError> {
    let group = match br.mode {
        Mode::Cooperative => "lemma_L3",
        Mode::Competitive => "prop_P1",
    };
    let (grouped, rest): (Vec<_>, Vec<_>) = br
        .certificates
        .iter()
        .cloned()
        .partition(|c| c.name.starts_with(group));
    b.certificates(group, &grouped)?;
    b.certificates("bracket_certificates", &rest)?;
    b.put(
        "bracket",
        json!({
            "sigma": br.sigma,
            "sigma_bar": br.sigma_bar,
            "delta": br.delta,
            "constants": br.constants,
        }),
    )?;
    for (name, f) in [
        ("u_low", &br.u_low),
        ("v_low", &br.v_low),
        ("u_high", &br.u_high),
        ("v_high", &br.v_high),
        ("w1", &br.w1),
        ("w2", &br.w2),
    ] {
        b.field(name, f);
    }
    Ok(())
}

/// Constant `p` when the scenario is `-(|u'|^(p-2) u')' = 1` on `[0, 1]`.
pub(crate) fn unit_load_exponent(cfg: &RunConfig) -> Option<f64> {
    let unit = matches!(cfg.domain, Domain::Interval { a, b } if a == 0.0 && b == 1.0);
    let source = cfg.scalar.source.as_ref()?.as_constant()?;
    if unit && source == 1.0 && cfg.scalar.gamma.is_none() {
        cfg.exponents.p.as_constant()
    } else {
        None
    }
}

/// Solution of the scalar scenario on `grid`, with the inner iteration
/// history.
pub(crate) fn solve_scalar(
    cfg: &RunConfig,
    grid: &Arc<Grid>,
) -> Result<(Field, Vec<f64>), RunError> {
    let p = cfg.exponents.p.eval_on_grid(grid)?;
    match (&cfg.scalar.source, &cfg.scalar.gamma) {
        (Some(h), _) => {
            let prob = PlapProblem::smooth(p, h.eval_on_grid(grid)?)?;
            let (u, report) = solve_dirichlet(&prob, &cfg.solver, None)?;
            Ok((u, report.energy_history))
        }
        (None, Some(gamma)) => {
            let lambda = cfg.lambda.value().unwrap_or(1.0);
            let s = solve_singular_scalar(&p, gamma, lambda, cfg.delta, &cfg.bracket)?;
            Ok((s.u, s.changes))
        }
        (None, None) => Err(RunError::Config(
            "scalar problems need scalar.source or scalar.gamma".into(),
        )),
    }
}

fn run_scalar(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut b = Builder::new(cfg)?;
    let grid = cfg.grid()?;
    let p = cfg.exponents.p.eval_on_grid(&grid)?;
    let mut certs = Vec::new();
    let mut constants = BTreeMap::new();
    match (&cfg.scalar.source, &cfg.scalar.gamma) {
        (Some(h), _) => {
            let prob = PlapProblem::smooth(p, h.eval_on_grid(&grid)?)?;
            let (u, report) = solve_dirichlet(&prob, &cfg.solver, None)?;
            b.put("max_u", u.max())?;
            certs.push(BoundCertificate::exact(
                "weak_residual",
                cfg.fixed_point.residual_limit - report.weak_residual,
                None,
            ));
            if let Some(pc) = unit_load_exponent(cfg) {
                let exact = closed_form_unit_load(pc, 0.5);
                let err = (u.max() - exact).abs();
                b.put("closed_form", json!({ "max_u": exact, "max_error": err }))?;
                certs.push(BoundCertificate::exact(
                    "closed_form_max",
                    CLOSED_FORM_TOL - err,
                    None,
                ));
            }
            b.put("solve", &report)?;
            b.iterations = Some(("energy".into(), report.energy_history.clone()));
            b.field("u", &u);
        }
        (None, Some(gamma)) => {
            let lambda = cfg.lambda.value().unwrap_or(1.0);
            let s = solve_singular_scalar(&p, gamma, lambda, cfg.delta, &cfg.bracket)?;
            b.put("max_u", s.u.max())?;
            certs.extend(s.certificates.iter().cloned());
            if let Some(l2) = cfg.scalar.growth_lambda {
                let rate = 1.0 / (p.min() - 1.0);
                let c = s.u.max() / lambda.powf(rate);
                let big = solve_singular_scalar(&p, gamma, l2, cfg.delta, &cfg.bracket)?;
                constants.insert("C".to_string(), c);
                certs.push(growth_certificate("growth", c, l2, big.u.max(), rate));
            }
            b.put("inner_iterations", s.iterations)?;
            b.iterations = Some(("sup_change".into(), s.changes.clone()));
            b.field("u", &s.u);
            b.field("w", &zhang_w(&grid, &p, cfg.delta)?);
        }
        (None, None) => unreachable!("validated"),
    }
    b.certificates("certificates", &certs)?;
    b.put("constants", constants)?;
    Ok(b.finish(false))
}

fn run_lemma_l2(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut b = Builder::new(cfg)?;
    let grid = cfg.grid()?;
    let l2 = &cfg.lemma_l2;
    let p = cfg.exponents.p.eval_on_grid(&grid)?;
    let h = SourcePart::smooth(l2.h.eval_on_grid(&grid)?);
    let ht = SourcePart::smooth(l2.h_tilde.eval_on_grid(&grid)?);
    let out = lemma_l2_check(&p, &h, &ht, l2.eps, &cfg.solver)?;
    b.certificates("lemma_L2", std::slice::from_ref(&out.certificate))?;
    if let Some([lo, hi]) = l2.crossover {
        match lemma_l2_crossover(&p, &h, &ht, lo, hi, l2.bisection_steps, &cfg.solver) {
            Ok(eps) => b.put(
                "crossover",
                json!({ "eps_star": eps, "interval": [lo, hi] }),
            )?,
            Err(e) => {
                b.failures.push("crossover".into());
                b.put("crossover", json!({ "error": e.to_string() }))?;
            }
        }
    }
    b.field("u", &out.u);
    b.field("u_eps", &out.u_eps);
    Ok(b.finish(false))
}
