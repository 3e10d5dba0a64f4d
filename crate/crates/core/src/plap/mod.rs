//! Scalar Dirichlet problems `-div(|grad u|^(p(x)-2) grad u) = h` on a grid.
//!
//! The problem is solved by minimizing the convex energy
//! `J(u) = int (1/p)(|grad u|^2 + eps^2)^(p/2) - int h u` with damped Newton
//! steps and Armijo backtracking. An optional nodal reaction
//! `c (|u|^(p-2) u - M)^+` is added to the operator; it is monotone, so the
//! energy stays convex.

mod assemble;
pub mod inequalities;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::certificate::{min_over, BoundCertificate};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Source};
use crate::math;
use crate::rng::Rng;

pub(crate) use assemble::Discrete;

/// Seed of the random bumps in the default weak-residual test set.
pub const DEFAULT_TEST_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    /// Gradient regularization `eps`.
    pub eps_reg: f64,
    /// Target for the sup norm of the energy gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking factor in `(0, 1)`.
    pub damping: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_reg: 1e-8,
            tol: 1e-10,
            max_iter: 500,
            damping: 0.5,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("solver config: {what}")));
        if !(self.eps_reg > 0.0) {
            return bad("eps_reg must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Zeroth-order term `coeff (|u|^(p-2) u - threshold)^+`, integrated with
/// the lumped mass.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub coeff: Field,
    pub threshold: Field,
}

#[derive(Debug, Clone)]
pub struct PlapProblem {
    pub grid: Arc<Grid>,
    pub p: Field,
    pub rhs: Source,
    pub penalty: Option<Penalty>,
}

impl PlapProblem {
    pub fn new(p: Field, rhs: Source) -> Result<Self> {
        let grid = Arc::clone(p.grid());
        if let Some((i, &v)) = p
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 1.0 && v.is_finite()))
        {
            return Err(Error::ExponentRange(format!(
                "p must be finite and above 1, got {v} at {}",
                crate::grid::describe_node(&grid, i)
            )));
        }
        for part in &rhs.parts {
            part.factor.check_grid(&grid)?;
            if let Some(e) = &part.exponent {
                e.check_grid(&grid)?;
                if !(e.min() > -1.0) {
                    return Err(Error::NonIntegrable(e.min()));
                }
            }
        }
        Ok(PlapProblem {
            grid,
            p,
            rhs,
            penalty: None,
        })
    }

    /// Problem with a smooth nodal right-hand side.
    pub fn smooth(p: Field, h: Field) -> Result<Self> {
        Self::new(p, Source::single(crate::grid::SourcePart::smooth(h)))
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Result<Self> {
        penalty.coeff.check_grid(&self.grid)?;
        penalty.threshold.check_grid(&self.grid)?;
        if penalty.coeff.min() < 0.0 {
            return Err(Error::InvalidParameter(
                "penalty coefficient must be nonnegative".into(),
            ));
        }
        self.penalty = Some(penalty);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub iterations: usize,
    pub final_energy: f64,
    pub grad_sup: f64,
    pub weak_residual: f64,
    /// `sup |u|`
    pub linf: f64,
    /// Iterations that used the steepest-descent fallback.
    pub fallback_steps: usize,
    /// Energy before each iteration and after the last.
    pub energy_history: Vec<f64>,
}

/// Discrete energy of `u`; `cfg.eps_reg` may be zero here.
pub fn energy(prob: &PlapProblem, u: &Field, cfg: &SolverConfig) -> Result<f64> {
    u.check_grid(&prob.grid)?;
    Ok(Discrete::new(prob)?.energy(u.values(), cfg.eps_reg))
}

fn sup_interior(v: &[f64], boundary: &[bool]) -> f64 {
    v.iter()
        .zip(boundary)
        .filter(|(_, b)| !**b)
        .fold(0.0, |m, (x, _)| m.max(x.abs()))
}

/// Start on the ray through the Laplacian solution, at the energy minimum.
fn default_start(disc: &Discrete, eps: f64) -> Vec<f64> {
    let n = disc.load.len();
    let mut rhs = disc.load.clone();
    for (r, &b) in rhs.iter_mut().zip(&disc.boundary) {
        if b {
            *r = 0.0;
        }
    }
    let Some(chol) = disc.laplacian(n).cholesky() else {
        return vec![0.0; n];
    };
    let w = chol.solve(&rhs);
    let along = |t: f64| {
        let u: Vec<f64> = w.iter().map(|v| t * v).collect();
        disc.energy(&u, eps)
    };
    let (mut best_t, mut best_j) = (0.0, along(0.0));
    let mut t = math::powf(2.0, -30.0);
    while t < math::powf(2.0, 30.0) {
        let j = along(t);
        if j < best_j {
            best_t = t;
            best_j = j;
        }
        t *= 2.0;
    }
    if best_t > 0.0 {
        // golden section on [t/2, 2t]
        let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
        let (mut a, mut b) = (0.5 * best_t, 2.0 * best_t);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (along(c), along(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = along(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = along(d);
            }
        }
        best_t = 0.5 * (a + b);
    }
    w.iter().map(|v| best_t * v).collect()
}

struct Stage {
    u: Vec<f64>,
    energy: f64,
    grad_sup: f64,
    iterations: usize,
    fallback_steps: usize,
    history: Vec<f64>,
    converged: bool,
}

fn jacobi_direction(neg: &[f64], diag: &[f64]) -> Vec<f64> {
    neg.iter()
        .zip(diag)
        .map(|(g, d)| g / d.max(f64::MIN_POSITIVE))
        .collect()
}

fn newton(
    disc: &Discrete,
    mut u: Vec<f64>,
    eps: f64,
    tol: f64,
    max_iter: usize,
    cfg: &SolverConfig,
) -> Stage {
    let mut j = disc.energy(&u, eps);
    let mut stage = Stage {
        u: Vec::new(),
        energy: j,
        grad_sup: 0.0,
        iterations: 0,
        fallback_steps: 0,
        history: vec![j],
        converged: false,
    };
    let mut grad = disc.gradient(&u, eps);
    let mut grad_sup = sup_interior(&grad, &disc.boundary);
    while grad_sup > tol && stage.iterations < max_iter {
        stage.iterations += 1;
        let hess = disc.hessian(&u, eps);
        let diag = hess.diagonal();
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut dir = match hess.cholesky().map(|c| c.solve(&neg)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => {
                stage.fallback_steps += 1;
                jacobi_direction(&neg, &diag)
            }
        };
        let mut slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            stage.fallback_steps += 1;
            dir = jacobi_direction(&neg, &diag);
            slope = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        }
        // below this the energy difference is lost in roundoff
        let resolvable = -slope > 1e-13 * (j.abs() + 1e-300);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let cand: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let jc = disc.energy(&cand, eps);
            if jc <= j + cfg.armijo * t * slope {
                accepted = Some((cand, jc));
                break;
            }
            if !resolvable {
                let gc = disc.gradient(&cand, eps);
                if sup_interior(&gc, &disc.boundary) < grad_sup {
                    accepted = Some((cand, jc));
                    break;
                }
            }
            t *= cfg.damping;
        }
        let Some((cand, jc)) = accepted else {
            break;
        };
        u = cand;
        j = jc;
        stage.history.push(j);
        grad = disc.gradient(&u, eps);
        grad_sup = sup_interior(&grad, &disc.boundary);
    }
    stage.converged = grad_sup <= tol;
    stage.u = u;
    stage.energy = j;
    stage.grad_sup = grad_sup;
    stage
}

/// Minimize the regularized energy; `u = 0` on boundary nodes exactly.
///
/// For `p < 2` somewhere the energy is close to non-smooth where the
/// gradient vanishes, so `eps` is first lowered from `1e-2` in decades,
/// warm-starting each stage.
pub fn solve_dirichlet(
    prob: &PlapProblem,
    cfg: &SolverConfig,
    init: Option<&Field>,
) -> Result<(Field, SolveReport)> {
    cfg.validate()?;
    let disc = Discrete::new(prob)?;
    let mut u = match init {
        Some(f) => {
            f.check_grid(&prob.grid)?;
            f.clone().with_zero_boundary().into_values()
        }
        None => default_start(&disc, cfg.eps_reg),
    };
    let mut iterations = 0;
    let mut fallback_steps = 0;
    if prob.p.min() < 2.0 {
        let mut eps = 1e-2;
        while eps > cfg.eps_reg && iterations < cfg.max_iter {
            let stage = newton(
                &disc,
                u,
                eps,
                cfg.tol.max(1e-8),
                cfg.max_iter - iterations,
                cfg,
            );
            iterations += stage.iterations;
            fallback_steps += stage.fallback_steps;
            u = stage.u;
            eps *= 0.1;
        }
    }
    let last = newton(
        &disc,
        u,
        cfg.eps_reg,
        cfg.tol,
        cfg.max_iter.saturating_sub(iterations),
        cfg,
    );
    iterations += last.iterations;
    fallback_steps += last.fallback_steps;
    if !last.converged {
        return Err(Error::NotConverged {
            iterations,
            grad_sup: last.grad_sup,
            energy: last.energy,
        });
    }
    let field = Field::new(Arc::clone(&prob.grid), last.u)?;
    let tests = default_test_fields(&prob.grid, DEFAULT_TEST_SEED);
    let weak = residual_against(&disc, &field, &tests);
    let report = SolveReport {
        iterations,
        final_energy: last.energy,
        grad_sup: last.grad_sup,
        weak_residual: weak,
        linf: field.sup_abs(),
        fallback_steps,
        energy_history: last.history,
    };
    Ok((field, report))
}

/// `integral |grad u|^(p-2) grad u . grad phi_i` for every node, unregularized.
pub fn flux_action(p: &Field, u: &Field) -> Result<Vec<f64>> {
    u.same_grid(p)?;
    let disc = Discrete::operator_only(p.grid(), p.values());
    Ok(disc.flux_action(u.values(), 0.0))
}

/// Unregularized weak residual vector `A(u)_i - b_i` (zero on boundary nodes).
pub fn residual_vector(prob: &PlapProblem, u: &Field) -> Result<Vec<f64>> {
    u.check_grid(&prob.grid)?;
    Ok(Discrete::new(prob)?.gradient(u.values(), 0.0))
}

fn residual_against(disc: &Discrete, u: &Field, tests: &[Field]) -> f64 {
    let r = disc.gradient(u.values(), 0.0);
    tests.iter().fold(0.0, |worst, phi| {
        let pairing: f64 = r.iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        let scale = 1.0 + assemble::max_gradient(&disc.points, phi);
        worst.max(pairing.abs() / scale)
    })
}

/// `max_phi |int |grad u|^(p-2) grad u . grad phi - int h phi| / (1 + sup |grad phi|)`.
pub fn weak_residual(prob: &PlapProblem, u: &Field, test_fields: &[Field]) -> Result<f64> {
    u.check_grid(&prob.grid)?;
    for phi in test_fields {
        phi.check_grid(&prob.grid)?;
    }
    let disc = Discrete::new(prob)?;
    Ok(residual_against(&disc, u, test_fields))
}

/// Hat functions of a grid about 16 cells per axis coarser, plus five
/// random smooth bumps `d (1 + sin(...)/2)`.
pub fn default_test_fields(grid: &Arc<Grid>, seed: u64) -> Vec<Field> {
    let n = grid.n();
    let k = ((n - 1) / 16).max(1);
    let centres: Vec<usize> = (1..n - 1).filter(|i| i % k == 0).collect();
    let hat = |i: usize, c: usize| (1.0 - (i as f64 - c as f64).abs() / k as f64).max(0.0);
    let mut out = Vec::new();
    if grid.dim() == 1 {
        for &c in &centres {
            out.push(Field::from_fn(grid, |i, _, _, _| hat(i, c)).with_zero_boundary());
        }
    } else {
        for &cy in &centres {
            for &cx in &centres {
                let phi = Field::from_fn(grid, |i, _, _, _| hat(i % n, cx) * hat(i / n, cy))
                    .with_zero_boundary();
                if phi.max() > 0.0 {
                    out.push(phi);
                }
            }
        }
    }
    let mut rng = Rng::new(seed);
    let two_pi = 2.0 * core::f64::consts::PI;
    for _ in 0..5 {
        let (a, b, c) = (
            rng.range(0.5, 3.0),
            rng.range(0.5, 3.0),
            rng.range(0.0, two_pi),
        );
        out.push(Field::from_fn(grid, |_, x, y, d| {
            d * (1.0 + 0.5 * math::sin(two_pi * (a * x + b * y) + c))
        }));
    }
    out
}

/// Solve both problems and certify `u1 <= u2` up to `10 h`.
pub fn comparison_check(
    prob1: &PlapProblem,
    prob2: &PlapProblem,
    cfg: &SolverConfig,
) -> Result<BoundCertificate> {
    prob2.p.check_grid(&prob1.grid)?;
    if prob1.p.values() != prob2.p.values() {
        return Err(Error::InvalidParameter(
            "comparison needs the same exponent p".into(),
        ));
    }
    let grid = &prob1.grid;
    for i in grid.interior_nodes() {
        let (h1, h2) = (prob1.rhs.value_at(i), prob2.rhs.value_at(i));
        if h1 > h2 {
            return Err(Error::InvalidParameter(format!(
                "right-hand sides are not ordered at {}: {h1} > {h2}",
                crate::grid::describe_node(grid, i)
            )));
        }
    }
    let (u1, _) = solve_dirichlet(prob1, cfg, None)?;
    let (u2, _) = solve_dirichlet(prob2, cfg, None)?;
    let (margin, at) = min_over(0..grid.node_count(), |i| u2.get(i) - u1.get(i));
    Ok(BoundCertificate::pointwise(
        "comparison",
        margin,
        at,
        grid.h(),
    ))
}

/// Closed-form solution of `-(|u'|^(p-2) u')' = 1` on `[0, 1]` with constant `p`.
pub fn closed_form_unit_load(p: f64, x: f64) -> f64 {
    let r = p / (p - 1.0);
    (p - 1.0) / p * (math::powf(0.5, r) - math::powf((0.5 - x).abs(), r))
}

#[cfg(test)]
mod tests;
