use alloc::format;
use alloc::sync::Arc;

use super::{Exponents, Mode, ProblemSpec};
use crate::brackets::{power_product, Bracket};
use crate::certificate::min_over;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Source};
use crate::math;
use crate::plap::{solve_dirichlet, Penalty, PlapProblem, SolverConfig};
use crate::rng::Rng;

/// Pointwise `min{max{z, lower}, upper}`; `lower <= upper` is required.
pub fn truncate(z: &Field, lower: &Field, upper: &Field) -> Result<Field> {
    z.same_grid(lower)?;
    z.same_grid(upper)?;
    if let Some(i) = (0..z.len()).find(|&i| lower.get(i) > upper.get(i)) {
        return Err(Error::Ordering {
            node: i,
            lower: lower.get(i),
            upper: upper.get(i),
        });
    }
    Ok(clamp(z, lower, upper))
}

// The bracket ordering is only certified up to 10 h, so the operators use
// the same formula without the ordering check.
fn clamp(z: &Field, lower: &Field, upper: &Field) -> Field {
    Field::from_fn(z.grid(), |i, _, _, _| {
        z.get(i).max(lower.get(i)).min(upper.get(i))
    })
}

/// The truncated solution operator `T(z1, z2) = (u, v)` of a bracket.
///
/// `u` solves `-div(|grad u|^(p-2) grad u) = lambda z1^alpha1 z2^beta1` and
/// `v` the analogous problem with `q`, after `z1`, `z2` are clamped into
/// the bracket. With `rho > 0` the competitive augmentation
/// `rho z2 (|u|^(p-2) u - max{d^gamma1, z1^(p-1)})^+` is added to the `u`
/// equation, and symmetrically for `v`; at a fixed point inside the bracket
/// it vanishes.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    pub mode: Mode,
    pub lambda: f64,
    pub rho: f64,
    pub bracket: Bracket,
    pub exponents: Exponents,
    gamma: Option<(Field, Field)>,
    solver: SolverConfig,
}

impl SystemOperator {
    pub fn cooperative(spec: &ProblemSpec, bracket: &Bracket, cfg: &SolverConfig) -> Result<Self> {
        let grid = Arc::clone(bracket.grid());
        Ok(SystemOperator {
            mode: Mode::Cooperative,
            lambda: spec.lambda,
            rho: 0.0,
            bracket: bracket.clone(),
            exponents: spec.exponents(&grid)?,
            gamma: None,
            solver: *cfg,
        })
    }

    pub fn competitive(
        spec: &ProblemSpec,
        bracket: &Bracket,
        rho: f64,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho must be nonnegative, got {rho}"
            )));
        }
        let grid = Arc::clone(bracket.grid());
        let gamma = gamma_fields(spec, bracket)?;
        Ok(SystemOperator {
            mode: Mode::Competitive,
            lambda: spec.lambda,
            rho,
            bracket: bracket.clone(),
            exponents: spec.exponents(&grid)?,
            gamma: Some(gamma),
            solver: *cfg,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.bracket.grid()
    }

    /// Clamp into the bracket; boundary values are dropped since both
    /// components vanish there.
    pub fn truncated(&self, z1: &Field, z2: &Field) -> (Field, Field) {
        let b = &self.bracket;
        (
            clamp(z1, &b.u_low, &b.u_high).with_zero_boundary(),
            clamp(z2, &b.v_low, &b.v_high).with_zero_boundary(),
        )
    }

    /// `(f, g)` right-hand sides at a pair positive inside the domain.
    pub fn sources(&self, z1: &Field, z2: &Field) -> Result<(Source, Source)> {
        let ex = &self.exponents;
        let f = power_product(self.lambda, &[(z1, &ex.alpha1), (z2, &ex.beta1)])?;
        let g = power_product(self.lambda, &[(z1, &ex.alpha2), (z2, &ex.beta2)])?;
        Ok((Source::single(f), Source::single(g)))
    }

    pub fn apply(
        &self,
        z1: &Field,
        z2: &Field,
        init: Option<(&Field, &Field)>,
    ) -> Result<(Field, Field)> {
        let (t1, t2) = self.truncated(z1, z2);
        let (f, g) = self.sources(&t1, &t2)?;
        let ex = &self.exponents;
        let mut pu = PlapProblem::new(ex.p.clone(), f)?;
        let mut pv = PlapProblem::new(ex.q.clone(), g)?;
        if let (Some((g1, g2)), true) = (&self.gamma, self.rho > 0.0) {
            pu = pu.with_penalty(self.penalty(&t1, &t2, g1, &ex.p)?)?;
            pv = pv.with_penalty(self.penalty(&t2, &t1, g2, &ex.q)?)?;
        }
        let (u, _) = solve_dirichlet(&pu, &self.solver, init.map(|p| p.0))?;
        let (v, _) = solve_dirichlet(&pv, &self.solver, init.map(|p| p.1))?;
        Ok((u, v))
    }

    /// Coefficient `rho * other` and threshold `max{d^gamma, own^(p-1)}`.
    fn penalty(&self, own: &Field, other: &Field, gamma: &Field, p: &Field) -> Result<Penalty> {
        let grid = self.grid();
        let threshold = Field::from_fn(grid, |i, _, _, d| {
            if grid.is_boundary(i) {
                f64::INFINITY
            } else {
                math::powf(d, gamma.get(i)).max(math::signed_pow(own.get(i), p.get(i)))
            }
        });
        Ok(Penalty {
            coeff: other.scaled(self.rho),
            threshold,
        })
    }
}

/// `T` without augmentation.
pub fn operator_t_coop(
    spec: &ProblemSpec,
    bracket: &Bracket,
    z1: &Field,
    z2: &Field,
    cfg: &SolverConfig,
) -> Result<(Field, Field)> {
    SystemOperator::cooperative(spec, bracket, cfg)?.apply(z1, z2, None)
}

/// `T` with the augmentation constant `rho`; warns when `rho` is below
/// [`rho_estimate`].
pub fn operator_t_comp(
    spec: &ProblemSpec,
    bracket: &Bracket,
    z1: &Field,
    z2: &Field,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<(Field, Field)> {
    if let Ok(est) = rho_estimate(spec, bracket) {
        if rho < est.rho {
            log::warn!(
                "rho {rho} is below the estimate {}; order preservation is not guaranteed",
                est.rho
            );
        }
    }
    SystemOperator::competitive(spec, bracket, rho, cfg)?.apply(z1, z2, None)
}

/// Exponents of the augmentation: `spec.gamma1`/`gamma2` when given, else
/// `alpha1 + beta1 - theta2 (1 - beta1)` (and symmetrically) clipped to
/// `[-1, 0)`.
pub fn gamma_fields(spec: &ProblemSpec, bracket: &Bracket) -> Result<(Field, Field)> {
    let grid = Arc::clone(bracket.grid());
    let ex = spec.exponents(&grid)?;
    let theta = |k: &str| {
        bracket.constants.get(k).copied().ok_or_else(|| {
            Error::InvalidParameter(format!("bracket has no fitted {k}; augmentation needs it"))
        })
    };
    let clip = |g: f64| g.clamp(-1.0, -f64::EPSILON);
    let g1 = match &spec.gamma1 {
        Some(e) => e.eval_on_grid(&grid)?,
        None => {
            let t2 = theta("theta2")?;
            Field::from_fn(&grid, |i, _, _, _| {
                clip(ex.alpha1.get(i) + ex.beta1.get(i) - t2 * (1.0 - ex.beta1.get(i)))
            })
        }
    };
    let g2 = match &spec.gamma2 {
        Some(e) => e.eval_on_grid(&grid)?,
        None => {
            let t1 = theta("theta1")?;
            Field::from_fn(&grid, |i, _, _, _| {
                clip(ex.alpha2.get(i) + ex.beta2.get(i) - t1 * (1.0 - ex.alpha2.get(i)))
            })
        }
    };
    Ok((g1, g2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RhoEstimate {
    pub rho: f64,
    /// Part needed by the `u` equation.
    pub rho_u: f64,
    pub rho_v: f64,
}

/// Twice the largest ratio, over interior nodes and the bracket, of the
/// cross derivative `|df/dv|` to the augmentation envelope
/// `max{d^gamma1, u^(p-1)}`, and the same for `g`.
pub fn rho_estimate(spec: &ProblemSpec, bracket: &Bracket) -> Result<RhoEstimate> {
    if bracket.mode != Mode::Competitive {
        return Err(Error::ModeMismatch {
            requested: "competitive",
            detected: bracket.mode.as_str(),
        });
    }
    let grid = Arc::clone(bracket.grid());
    let ex = spec.exponents(&grid)?;
    let (g1, g2) = gamma_fields(spec, bracket)?;
    if !spec.gamma_alternative {
        for (gamma, theta_key, name) in [(&g1, "theta2", "gamma1"), (&g2, "theta1", "gamma2")] {
            let theta = bracket
                .constants
                .get(theta_key)
                .copied()
                .unwrap_or(f64::NAN);
            let (m, at) = min_over(grid.interior_nodes(), |i| gamma.get(i) + theta + 1.0);
            if !(m >= 0.0) {
                return Err(Error::Hypothesis {
                    name: "c5**".into(),
                    detail: format!(
                        "{name} + {theta_key} >= -1 fails by {m} at {}",
                        at.map(|i| crate::grid::describe_node(&grid, i))
                            .unwrap_or_default()
                    ),
                });
            }
        }
    }
    let (u0, v0) = (&bracket.u_low, &bracket.v_low);
    let lambda = spec.lambda;
    let mut rho_u: f64 = 0.0;
    let mut rho_v: f64 = 0.0;
    for i in grid.interior_nodes() {
        let d = grid.dist()[i];
        let (u, v) = (u0.get(i), v0.get(i));
        let (a1, b1, a2, b2) = (
            ex.alpha1.get(i),
            ex.beta1.get(i),
            ex.alpha2.get(i),
            ex.beta2.get(i),
        );
        if b1 != 0.0 {
            let num = lambda * b1.abs() * math::powf(u, a1) * math::powf(v, b1 - 1.0);
            let den = math::powf(d, g1.get(i)).max(math::powf(u, ex.p.get(i) - 1.0));
            rho_u = rho_u.max(2.0 * num / den);
        }
        if a2 != 0.0 {
            let num = lambda * a2.abs() * math::powf(u, a2 - 1.0) * math::powf(v, b2);
            let den = math::powf(d, g2.get(i)).max(math::powf(v, ex.q.get(i) - 1.0));
            rho_v = rho_v.max(2.0 * num / den);
        }
    }
    if !(rho_u.is_finite() && rho_v.is_finite()) {
        return Err(Error::Hypothesis {
            name: "c5**".into(),
            detail: "cross-derivative bound is unbounded over the bracket".into(),
        });
    }
    Ok(RhoEstimate {
        rho: rho_u.max(rho_v),
        rho_u,
        rho_v,
    })
}

/// Outcome of applying `T` to random ordered pairs inside the bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderReport {
    pub trials: usize,
    /// Trials with `T(z) <= T(z')` up to `10 h` in both components.
    pub preserved: usize,
    /// Smallest `T(z') - T(z)` seen.
    pub worst_margin: f64,
}

/// Draw `z <= z'` inside the bracket node by node and compare `T(z)` with
/// `T(z')`.
pub fn order_preservation_check(
    op: &SystemOperator,
    trials: usize,
    seed: u64,
) -> Result<OrderReport> {
    let b = &op.bracket;
    let grid = op.grid();
    let slack = 10.0 * grid.h();
    let mut rng = Rng::new(seed);
    let mut preserved = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let mut pair = |lo: &Field, hi: &Field| {
            let mut a = Field::zeros(grid);
            let mut c = Field::zeros(grid);
            for i in 0..grid.node_count() {
                let s = rng.uniform();
                let t = s + (1.0 - s) * rng.uniform();
                let (l, h) = (lo.get(i), hi.get(i).max(lo.get(i)));
                a.values_mut()[i] = l + s * (h - l);
                c.values_mut()[i] = l + t * (h - l);
            }
            (a, c)
        };
        let (z1, z1b) = pair(&b.u_low, &b.u_high);
        let (z2, z2b) = pair(&b.v_low, &b.v_high);
        let (u, v) = op.apply(&z1, &z2, None)?;
        let (ub, vb) = op.apply(&z1b, &z2b, Some((&u, &v)))?;
        let (mu, _) = min_over(0..grid.node_count(), |i| ub.get(i) - u.get(i));
        let (mv, _) = min_over(0..grid.node_count(), |i| vb.get(i) - v.get(i));
        let m = mu.min(mv);
        worst = worst.min(m);
        if m >= -slack {
            preserved += 1;
        }
    }
    Ok(OrderReport {
        trials,
        preserved,
        worst_margin: worst,
    })
}
