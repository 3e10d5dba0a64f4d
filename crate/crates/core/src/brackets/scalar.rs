use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{power_product, zhang_w, BracketConfig};
use crate::certificate::{min_over, BoundCertificate};
use crate::error::{Error, Result};
use crate::expr::ExprField;
use crate::grid::{Field, Region, Source, SourcePart};
use crate::math;
use crate::plap::{solve_dirichlet, PlapProblem, SolverConfig};

/// Solution of `-div(|grad u|^(p-2) grad u) = lambda u^gamma`, `u = 0` on the
/// boundary.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub u: Field,
    /// `lower_bound` (`u >= min{delta, d}`) and `floor` (`u >= w`).
    pub certificates: Vec<BoundCertificate>,
    pub iterations: usize,
    /// Sup change of each inner iteration.
    pub changes: Vec<f64>,
}

/// Solve the singular scalar problem for `-1 < gamma < 0`.
///
/// Each step solves with right-hand side `lambda max(u_k, w)^gamma`, where
/// `w` is [`zhang_w`], so the power is never taken below the known
/// subsolution. The map `u_k -> u_{k+1}` is order-reversing with slope about
/// `|gamma| / (p - 1)`; steps are relaxed by `1 / (1 + slope)` to damp the
/// resulting oscillation.
pub fn solve_singular_scalar(
    p: &Field,
    gamma: &ExprField,
    lambda: f64,
    delta: f64,
    cfg: &BracketConfig,
) -> Result<SingularSolution> {
    let grid = Arc::clone(p.grid());
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let g = gamma.eval_on_grid(&grid)?;
    let (lo, hi) = (g.min(), g.max());
    if !(lo > -1.0 && hi < 0.0) {
        return Err(Error::ExponentRange(format!(
            "singular exponent must lie in (-1, 0), got [{lo}, {hi}]"
        )));
    }
    let w = zhang_w(&grid, p, delta)?;
    let slope = -lo / (p.min() - 1.0);
    let omega = 1.0 / (1.0 + slope);

    let mut u = w.clone();
    let mut changes = Vec::new();
    let mut solution = None;
    for _ in 0..cfg.max_inner {
        let floored = u.zip_map(&w, f64::max)?;
        let rhs = Source::single(power_product(lambda, &[(&floored, &g)])?);
        let prob = PlapProblem::new(p.clone(), rhs)?;
        let (next, _) = solve_dirichlet(&prob, &cfg.solver, Some(&u))?;
        let change = next.sup_diff(&u)?;
        changes.push(change);
        if change < cfg.picard_tol {
            solution = Some(next);
            break;
        }
        u = u.zip_map(&next, |a, b| (1.0 - omega) * a + omega * b)?;
    }
    let Some(u) = solution else {
        return Err(Error::InnerIteration {
            iterations: changes.len(),
            last_change: changes.last().copied().unwrap_or(f64::NAN),
        });
    };
    log::debug!(
        "singular scalar problem converged in {} steps",
        changes.len()
    );

    let h = grid.h();
    let (m, at) = min_over(grid.interior_nodes(), |i| {
        u.get(i) - grid.dist()[i].min(delta)
    });
    let lower = BoundCertificate::pointwise("lower_bound", m, at, h);
    let (m, at) = min_over(grid.interior_nodes(), |i| u.get(i) - w.get(i));
    let floor = BoundCertificate::pointwise("floor", m, at, h);
    Ok(SingularSolution {
        u,
        certificates: alloc::vec![lower, floor],
        iterations: changes.len(),
        changes,
    })
}

/// Check `u_max <= 1.1 C lambda^rate`, with `C` fitted at a reference
/// parameter value.
pub fn growth_certificate(
    name: &str,
    c_ref: f64,
    lambda: f64,
    u_max: f64,
    rate: f64,
) -> BoundCertificate {
    let bound = 1.1 * c_ref * math::powf(lambda, rate);
    BoundCertificate::exact(name, bound - u_max, None).with_note(format!(
        "C = {c_ref}, lambda = {lambda}, bound {bound}, max {u_max}"
    ))
}

/// Base and perturbed solutions of a stability check.
#[derive(Debug, Clone)]
pub struct L2Outcome {
    pub certificate: BoundCertificate,
    pub u: Field,
    pub u_eps: Field,
}

fn check_nonnegative(h: &SourcePart) -> Result<()> {
    let grid = h.factor.grid();
    let mut positive = false;
    for i in grid.interior_nodes() {
        let v = h.value_at(i);
        if v < 0.0 {
            return Err(Error::Hypothesis {
                name: "nonnegative_rhs".into(),
                detail: format!("h = {v} at {}", crate::grid::describe_node(grid, i)),
            });
        }
        positive |= v > 0.0;
    }
    if !positive {
        return Err(Error::Hypothesis {
            name: "nonnegative_rhs".into(),
            detail: "h vanishes identically".into(),
        });
    }
    Ok(())
}

fn perturbed(
    p: &Field,
    h: &SourcePart,
    h_tilde: &SourcePart,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Field> {
    let rhs = Source::new()
        .with(h.clone().within(Region::OffStrip(eps)))
        .with(h_tilde.clone().within(Region::Strip(eps)));
    Ok(solve_dirichlet(&PlapProblem::new(p.clone(), rhs)?, cfg, None)?.0)
}

fn half_certificate(u: &Field, u_eps: &Field) -> BoundCertificate {
    let grid = u.grid();
    let (m, at) = min_over(grid.interior_nodes(), |i| u_eps.get(i) - 0.5 * u.get(i));
    BoundCertificate::pointwise("lemma_L2", m, at, grid.h())
}

/// Solve with source `h`, then with `h` replaced by `h_tilde` on the strip
/// `d < eps`, and certify `u_eps >= u / 2`.
pub fn lemma_l2_check(
    p: &Field,
    h: &SourcePart,
    h_tilde: &SourcePart,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<L2Outcome> {
    check_nonnegative(h)?;
    let base = Source::single(h.clone().within(Region::Everywhere));
    let (u, _) = solve_dirichlet(&PlapProblem::new(p.clone(), base)?, cfg, None)?;
    let u_eps = perturbed(p, h, h_tilde, eps, cfg)?;
    Ok(L2Outcome {
        certificate: half_certificate(&u, &u_eps),
        u,
        u_eps,
    })
}

/// Largest strip width in `[lo, hi]` for which the check passes, by
/// bisection; the check must pass at `lo` and fail at `hi`.
pub fn lemma_l2_crossover(
    p: &Field,
    h: &SourcePart,
    h_tilde: &SourcePart,
    lo: f64,
    hi: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    check_nonnegative(h)?;
    let base = Source::single(h.clone().within(Region::Everywhere));
    let (u, _) = solve_dirichlet(&PlapProblem::new(p.clone(), base)?, cfg, None)?;
    let passes = |eps: f64| -> Result<bool> {
        Ok(half_certificate(&u, &perturbed(p, h, h_tilde, eps, cfg)?).satisfied)
    };
    if !passes(lo)? {
        return Err(Error::InvalidParameter(format!(
            "check already fails at eps = {lo}"
        )));
    }
    if passes(hi)? {
        return Err(Error::InvalidParameter(format!(
            "check still passes at eps = {hi}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..steps {
        let mid = 0.5 * (a + b);
        if passes(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}
