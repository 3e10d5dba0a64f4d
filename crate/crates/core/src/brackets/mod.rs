//! Ordered sub/supersolution pairs for the system and the scalar
//! constructions they are built from.
//!
//! Every constant in the bounds is fitted from the computed fields; a
//! certificate then checks the inequality on the grid, or its growth rate at
//! a second parameter value.

mod competitive;
mod cooperative;
mod scalar;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::certificate::{min_over, BoundCertificate};
use crate::error::{Error, Result};
use crate::grid::{lumped_mass, Field, Grid, Source, SourcePart};
use crate::math;
use crate::plap::{flux_action, SolverConfig};
use crate::system::{check_structure, Mode, ProblemSpec};

pub use competitive::competitive_bracket;
pub use cooperative::cooperative_bracket;
pub use scalar::{
    growth_certificate, lemma_l2_check, lemma_l2_crossover, solve_singular_scalar, L2Outcome,
    SingularSolution,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BracketConfig {
    pub solver: SolverConfig,
    /// Stop the floored inner iteration once the sup change is below this.
    pub picard_tol: f64,
    pub max_inner: usize,
    /// Padding of the enlarged domain, as a fraction of the diameter.
    pub pad_fraction: f64,
    pub max_doublings: usize,
    /// Default `sigma_bar` is the lower bound plus this offset.
    pub sigma_bar_offset: f64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig {
            solver: SolverConfig::default(),
            picard_tol: 1e-8,
            max_inner: 200,
            pad_fraction: 0.25,
            max_doublings: 30,
            sigma_bar_offset: 0.25,
        }
    }
}

/// Lower fields `(u_low, v_low)` below upper fields `(u_high, v_high)`.
///
/// Cooperative brackets have an upper pair solved on an enlarged domain, so
/// `u_high`, `v_high` stay positive on the boundary; all other fields vanish
/// there.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub mode: Mode,
    pub u_low: Field,
    pub v_low: Field,
    pub u_high: Field,
    pub v_high: Field,
    pub lambda: f64,
    pub sigma: f64,
    pub sigma_bar: Option<f64>,
    pub delta: f64,
    pub certificates: Vec<BoundCertificate>,
    /// Fitted constants by name, such as `c0` or `theta1`.
    pub constants: BTreeMap<String, f64>,
    /// Solutions of the singular scalar problems the bracket is built from.
    pub w1: Field,
    pub w2: Field,
}

impl Bracket {
    pub fn all_satisfied(&self) -> bool {
        self.certificates.iter().all(|c| c.satisfied)
    }

    pub fn first_failure(&self) -> Option<&BoundCertificate> {
        self.certificates.iter().find(|c| !c.satisfied)
    }

    pub fn certificate(&self, name: &str) -> Option<&BoundCertificate> {
        self.certificates.iter().find(|c| c.name == name)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u_low.grid()
    }
}

/// Piecewise subsolution: `d` below `delta`, then the integral of the wedge
/// `((2 delta - t) / delta)^(2 / (p- - 1))`, constant beyond `2 delta`.
pub fn zhang_w(grid: &Arc<Grid>, p: &Field, delta: f64) -> Result<Field> {
    p.check_grid(grid)?;
    let pm = p.min();
    if !(pm > 1.0) {
        return Err(Error::ExponentRange(format!("p- must exceed 1, got {pm}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if delta > 0.25 * grid.max_dist() {
        log::warn!(
            "delta {delta} exceeds a quarter of the largest boundary distance {}",
            grid.max_dist()
        );
    }
    let k = 2.0 / (pm - 1.0);
    Ok(Field::from_fn(grid, |_, _, _, d| {
        zhang_profile(d, delta, k)
    }))
}

fn zhang_profile(d: f64, delta: f64, k: f64) -> f64 {
    if d < delta {
        return d;
    }
    let s = (2.0 * delta - d.min(2.0 * delta)) / delta;
    delta + delta * (1.0 - math::powf(s, k + 1.0)) / (k + 1.0)
}

/// `max{(p- - 1)/(p- - 1 - alpha2+), (q- - 1)/(q- - 1 - beta1+)}`; any
/// `sigma_bar` above it makes the enlarged-domain pair a supersolution for
/// large `lambda`.
pub fn sigma_bar_lower_bound(
    p_minus: f64,
    q_minus: f64,
    alpha2_plus: f64,
    beta1_plus: f64,
) -> Result<f64> {
    let (a, b) = (p_minus - 1.0 - alpha2_plus, q_minus - 1.0 - beta1_plus);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Hypothesis {
            name: "h1".into(),
            detail: format!("need alpha2+ < p- - 1 and beta1+ < q- - 1, margins {a} and {b}"),
        });
    }
    Ok(((p_minus - 1.0) / a).max((q_minus - 1.0) / b))
}

/// `scale * prod z_k^(e_k)` as a source.
///
/// Factors vanishing on the boundary are written `(z/d)^e d^e`, so the
/// quadrature sees the singular power of `d`; the others must be positive
/// everywhere.
pub fn power_product(scale: f64, terms: &[(&Field, &Field)]) -> Result<SourcePart> {
    let Some((first, _)) = terms.first() else {
        return Err(Error::InvalidParameter("empty power product".into()));
    };
    let grid = Arc::clone(first.grid());
    let mut factor = Field::constant(&grid, scale);
    let mut exponent: Option<Field> = None;
    for &(z, e) in terms {
        z.same_grid(e)?;
        z.check_grid(&grid)?;
        if let Some(i) = grid.interior_nodes().find(|&i| !(z.get(i) > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "power of a nonpositive value {} at {}",
                z.get(i),
                crate::grid::describe_node(&grid, i)
            )));
        }
        let vanishing = (0..grid.node_count())
            .filter(|&i| grid.is_boundary(i))
            .all(|i| z.get(i) == 0.0);
        let base = if vanishing {
            exponent = Some(match exponent {
                None => e.clone(),
                Some(acc) => acc.zip_map(e, |a, b| a + b)?,
            });
            z.distance_ratio()
        } else {
            if let Some(i) = (0..grid.node_count()).find(|&i| !(z.get(i) > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "field is neither zero nor positive on the boundary at {}",
                    crate::grid::describe_node(&grid, i)
                )));
            }
            z.clone()
        };
        let pw = base.zip_map(e, math::powf)?;
        factor = factor.zip_map(&pw, |a, b| a * b)?;
    }
    Ok(match exponent {
        None => SourcePart::smooth(factor),
        Some(e) => SourcePart::power(factor, e),
    })
}

/// `(A(u)_i - b_i) / int phi_i` at interior nodes, the discrete
/// `-div(|grad u|^(p-2) grad u) - rhs` averaged against each hat function.
pub(crate) fn nodal_defect(p: &Field, u: &Field, rhs: &Source) -> Result<Vec<(usize, f64)>> {
    let grid = p.grid();
    let a = flux_action(p, u)?;
    let b = rhs.load_vector(grid)?;
    let mass = lumped_mass(grid);
    Ok(grid
        .interior_nodes()
        .map(|i| (i, (a[i] - b[i]) / mass[i]))
        .collect())
}

/// Weak-form subsolution (`upper == false`: defect <= 0) or supersolution
/// (defect >= 0) certificate with slack `10 h`.
pub(crate) fn weak_certificate(
    name: &str,
    p: &Field,
    u: &Field,
    rhs: &Source,
    supersolution: bool,
) -> Result<BoundCertificate> {
    let defect = nodal_defect(p, u, rhs)?;
    let sign = if supersolution { 1.0 } else { -1.0 };
    let (margin, at) = min_over(0..defect.len(), |k| sign * defect[k].1);
    Ok(BoundCertificate::pointwise(
        name,
        margin,
        at.map(|k| defect[k].0),
        p.grid().h(),
    ))
}

/// `lower <= upper` pointwise with slack `10 h`.
pub(crate) fn ordering_certificate(
    name: &str,
    lower: &Field,
    upper: &Field,
) -> Result<BoundCertificate> {
    lower.same_grid(upper)?;
    let grid = lower.grid();
    let (margin, at) = min_over(0..grid.node_count(), |i| upper.get(i) - lower.get(i));
    Ok(BoundCertificate::pointwise(name, margin, at, grid.h()))
}

/// Strict interior positivity, no slack.
pub(crate) fn positivity_certificate(name: &str, fields: &[&Field]) -> BoundCertificate {
    let grid = fields[0].grid();
    let (margin, at) = min_over(grid.interior_nodes(), |i| {
        fields
            .iter()
            .map(|f| f.get(i))
            .fold(f64::INFINITY, f64::min)
    });
    BoundCertificate::new(name, margin, at, 0.0).with_satisfied(margin > 0.0)
}

impl BoundCertificate {
    pub(crate) fn with_satisfied(mut self, satisfied: bool) -> Self {
        self.satisfied = satisfied;
        self
    }
}

/// Double `lambda` from `lambda0` until every certificate of the bracket
/// built by `builder` passes.
///
/// The structure hypotheses are checked first, so a problem that can never
/// pass is rejected before any solve.
pub fn tune_lambda<F>(
    builder: F,
    spec: &ProblemSpec,
    grid: &Arc<Grid>,
    cfg: &BracketConfig,
    lambda0: f64,
) -> Result<(f64, Bracket)>
where
    F: Fn(&ProblemSpec, &Arc<Grid>, &BracketConfig) -> Result<Bracket>,
{
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda0 must be positive, got {lambda0}"
        )));
    }
    check_structure(&spec.with_lambda(lambda0), grid)?.ensure()?;
    let mut lambda = lambda0;
    let mut last_failure = String::from("none");
    for doubling in 0..=cfg.max_doublings {
        match builder(&spec.with_lambda(lambda), grid, cfg) {
            Ok(b) if b.all_satisfied() => {
                log::info!("lambda {lambda} accepted after {doubling} doublings");
                return Ok((lambda, b));
            }
            Ok(b) => {
                let c = b
                    .first_failure()
                    .expect("a failing bracket has a failed certificate");
                log::info!("lambda {lambda}: {} fails with margin {}", c.name, c.margin);
                last_failure = c.name.clone();
            }
            Err(e) => {
                log::info!("lambda {lambda}: construction failed: {e}");
                last_failure = format!("{e}");
            }
        }
        lambda *= 2.0;
    }
    Err(Error::LambdaBudget {
        doublings: cfg.max_doublings,
        certificate: last_failure,
    })
}
