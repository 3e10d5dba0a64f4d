use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::operator::{rho_estimate, SystemOperator};
use super::{Mode, ProblemSpec};
use crate::brackets::Bracket;
use crate::certificate::min_over;
use crate::error::{Error, Result};
use crate::grid::{boundary_strip, Field};
use crate::plap::{
    default_test_fields, weak_residual, PlapProblem, SolverConfig, DEFAULT_TEST_SEED,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FixedPointConfig {
    pub solver: SolverConfig,
    /// Stop once the sup change of an iteration is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Give up when the best change has not improved for this many iterations.
    pub plateau_window: usize,
    /// Required weak residual of the system at the final pair.
    pub residual_limit: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            solver: SolverConfig::default(),
            tol: 1e-8,
            max_iter: 200,
            plateau_window: 30,
            residual_limit: 1e-6,
        }
    }
}

/// Which end of the bracket the iteration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Start {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointReport {
    pub iterations: usize,
    pub sup_changes: Vec<f64>,
    pub converged: bool,
    /// Nodes of the final pair outside the bracket by more than `10 h`.
    pub bracket_violations: usize,
    /// Weak residuals of the two equations at the final pair.
    pub weak_residuals: [f64; 2],
    /// `min u/d` and `min v/d` over the boundary strip.
    pub boundary_growth: [f64; 2],
    /// `min(u, v)` over interior nodes.
    pub interior_min: f64,
    /// Augmentation constant used, competitive only.
    pub rho: Option<f64>,
    /// Empty on success; otherwise the checks that failed.
    pub failures: Vec<String>,
}

impl FixedPointReport {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn containment(
    op: &SystemOperator,
    u: &Field,
    v: &Field,
) -> (usize, Option<(usize, &'static str)>) {
    let b = &op.bracket;
    let slack = 10.0 * op.grid().h();
    let mut count = 0;
    let mut first = None;
    for i in 0..u.len() {
        for (name, x, lo, hi) in [
            ("u", u.get(i), b.u_low.get(i), b.u_high.get(i)),
            ("v", v.get(i), b.v_low.get(i), b.v_high.get(i)),
        ] {
            if x < lo - slack || x > hi + slack {
                count += 1;
                first.get_or_insert((i, name));
            }
        }
    }
    (count, first)
}

/// Operator of the bracket's structure; competitive brackets use
/// `spec.rho`, or the estimate when absent.
pub fn system_operator(
    spec: &ProblemSpec,
    bracket: &Bracket,
    cfg: &SolverConfig,
) -> Result<SystemOperator> {
    match bracket.mode {
        Mode::Cooperative => SystemOperator::cooperative(spec, bracket, cfg),
        Mode::Competitive => {
            let est = rho_estimate(spec, bracket)?;
            let rho = match spec.rho {
                Some(r) => {
                    if r < est.rho {
                        log::warn!("rho {r} is below the estimate {}", est.rho);
                    }
                    r
                }
                None => est.rho,
            };
            SystemOperator::competitive(spec, bracket, rho, cfg)
        }
    }
}

/// Picard iteration `(u, v) <- T(u, v)` from one end of the bracket.
///
/// An iterate leaving the bracket is a contract breach and fails at once.
/// Non-convergence and failed end checks are listed in the report.
pub fn fixed_point_solve(
    spec: &ProblemSpec,
    bracket: &Bracket,
    cfg: &FixedPointConfig,
    start: Start,
) -> Result<(Field, Field, FixedPointReport)> {
    let op = system_operator(spec, bracket, &cfg.solver)?;
    let (mut u, mut v) = match start {
        Start::Low => (bracket.u_low.clone(), bracket.v_low.clone()),
        Start::High => (bracket.u_high.clone(), bracket.v_high.clone()),
    };
    let mut changes: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut failures = Vec::new();
    for k in 0..cfg.max_iter {
        let (nu, nv) = op.apply(&u, &v, Some((&u, &v)))?;
        let change = nu.sup_diff(&u)?.max(nv.sup_diff(&v)?);
        changes.push(change);
        if let (_, Some((node, component))) = containment(&op, &nu, &nv) {
            return Err(Error::Containment { node, component });
        }
        u = nu;
        v = nv;
        log::debug!("fixed-point iteration {}: change {change:e}", k + 1);
        if change < cfg.tol {
            converged = true;
            break;
        }
        let w = cfg.plateau_window;
        if w > 0 && changes.len() > w {
            let split = changes.len() - w;
            let before = changes[..split]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let recent = changes[split..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if recent >= before {
                failures.push(format!(
                    "sup change plateaued at {before:e} over {w} iterations"
                ));
                break;
            }
        }
    }
    if !converged && failures.is_empty() {
        failures.push(format!(
            "no convergence in {} iterations (last change {:e})",
            changes.len(),
            changes.last().copied().unwrap_or(f64::NAN)
        ));
    }

    let grid = op.grid();
    let (violations, _) = containment(&op, &u, &v);
    if violations > 0 {
        failures.push(format!("{violations} bracket violations"));
    }
    let (interior_min, _) = min_over(grid.interior_nodes(), |i| u.get(i).min(v.get(i)));
    let weak_residuals = if interior_min > 0.0 {
        let (f, g) = op.sources(&u, &v)?;
        let tests = default_test_fields(grid, DEFAULT_TEST_SEED);
        [
            weak_residual(&PlapProblem::new(op.exponents.p.clone(), f)?, &u, &tests)?,
            weak_residual(&PlapProblem::new(op.exponents.q.clone(), g)?, &v, &tests)?,
        ]
    } else {
        failures.push(format!("interior minimum {interior_min} is not positive"));
        [f64::INFINITY; 2]
    };
    for (name, r) in ["u", "v"].iter().zip(weak_residuals) {
        if !(r <= cfg.residual_limit) {
            failures.push(format!("weak residual of the {name} equation is {r:e}"));
        }
    }
    let mut strip = boundary_strip(grid, bracket.delta);
    if strip.is_empty() {
        strip = grid.interior_nodes().collect();
    }
    let growth = |f: &Field| min_over(strip.iter().copied(), |i| f.get(i) / grid.dist()[i]).0;
    let boundary_growth = [growth(&u), growth(&v)];
    if !(boundary_growth[0] > 0.0 && boundary_growth[1] > 0.0) {
        failures.push(format!(
            "boundary growth constants {boundary_growth:?} are not positive"
        ));
    }
    let report = FixedPointReport {
        iterations: changes.len(),
        sup_changes: changes,
        converged,
        bracket_violations: violations,
        weak_residuals,
        boundary_growth,
        interior_min,
        rho: (op.mode == Mode::Competitive).then_some(op.rho),
        failures,
    };
    Ok((u, v, report))
}
