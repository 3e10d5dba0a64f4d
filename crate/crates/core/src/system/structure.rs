use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{ExprField, RangeSummary};
use crate::grid::{boundary_strip, Field, Grid};

/// Sign structure of the coupling exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// `alpha2, beta1 > 0`: each right-hand side increases in the other unknown.
    Cooperative,
    /// `alpha2, beta1 < 0`.
    Competitive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cooperative => "cooperative",
            Mode::Competitive => "competitive",
        }
    }
}

/// The system
/// `-div(|grad u|^(p-2) grad u) = lambda u^alpha1 v^beta1`,
/// `-div(|grad v|^(q-2) grad v) = lambda u^alpha2 v^beta2`,
/// `u, v > 0` inside and zero on the boundary.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemSpec {
    pub p: ExprField,
    pub q: ExprField,
    pub alpha1: ExprField,
    pub alpha2: ExprField,
    pub beta1: ExprField,
    pub beta2: ExprField,
    pub lambda: f64,
    /// Dimension `N` used by the hypothesis checks; may differ from the grid's.
    pub dimension: usize,
    pub mode: Mode,
    pub sigma: f64,
    /// Defaults to the lower bound plus the configured offset.
    pub sigma_bar: Option<f64>,
    /// Width of the boundary strip used by the bracket constructions.
    pub delta: f64,
    /// Competitive augmentation constant; estimated when absent.
    pub rho: Option<f64>,
    pub gamma1: Option<ExprField>,
    pub gamma2: Option<ExprField>,
    /// Assert `-1 <= gamma_i < 0` instead of the growth conditions that
    /// normally justify the augmentation exponents.
    pub gamma_alternative: bool,
}

/// The six exponent fields evaluated on one grid.
#[derive(Debug, Clone)]
pub struct Exponents {
    pub p: Field,
    pub q: Field,
    pub alpha1: Field,
    pub alpha2: Field,
    pub beta1: Field,
    pub beta2: Field,
}

impl ProblemSpec {
    pub fn exponents(&self, grid: &Arc<Grid>) -> Result<Exponents> {
        Ok(Exponents {
            p: self.p.eval_on_grid(grid)?,
            q: self.q.eval_on_grid(grid)?,
            alpha1: self.alpha1.eval_on_grid(grid)?,
            alpha2: self.alpha2.eval_on_grid(grid)?,
            beta1: self.beta1.eval_on_grid(grid)?,
            beta2: self.beta2.eval_on_grid(grid)?,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemSpec {
            lambda,
            ..self.clone()
        }
    }

    pub(crate) fn validate_scalars(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            ));
        }
        if self.dimension == 0 {
            return bad("dimension must be at least 1".to_string());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if let Some(rho) = self.rho {
            if !(rho >= 0.0 && rho.is_finite()) {
                return bad(format!("rho must be nonnegative, got {rho}"));
            }
        }
        Ok(())
    }
}

/// One named hypothesis with its worst slack; strict inequalities need a
/// positive margin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisCheck {
    pub name: String,
    pub satisfied: bool,
    pub margin: f64,
    /// Failing a gating check rejects the problem before any solve.
    pub gating: bool,
    pub detail: String,
}

/// Sampled `N * s(x)` over the boundary strip, standing in for the
/// boundary limit of a singular exponent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimitEstimate {
    pub name: String,
    pub inf: f64,
    pub sup: f64,
    /// Whether the sampled values stay inside `(-1, 0)`.
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StructureReport {
    pub mode: Mode,
    pub checks: Vec<HypothesisCheck>,
    pub ranges: BTreeMap<String, RangeSummary>,
    pub boundary_limits: Vec<LimitEstimate>,
}

impl StructureReport {
    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn first_gating_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.gating && !c.satisfied)
    }

    /// Error naming the first failed gating hypothesis.
    pub fn ensure(&self) -> Result<()> {
        match self.first_gating_failure() {
            None => Ok(()),
            Some(c) => Err(Error::Hypothesis {
                name: c.name.clone(),
                detail: c.detail.clone(),
            }),
        }
    }
}

fn strict(name: &str, gating: bool, terms: &[(&str, f64)]) -> HypothesisCheck {
    worst(name, gating, terms, false)
}

fn worst(name: &str, gating: bool, terms: &[(&str, f64)], inclusive: bool) -> HypothesisCheck {
    let (label, margin) =
        terms
            .iter()
            .copied()
            .fold(("", f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let satisfied = if inclusive {
        margin >= 0.0
    } else {
        margin > 0.0
    };
    let detail = if satisfied {
        format!("all conditions hold; tightest is {label} with margin {margin}")
    } else {
        format!("{label} fails with margin {margin}")
    };
    HypothesisCheck {
        name: name.to_string(),
        satisfied,
        margin,
        gating,
        detail,
    }
}

/// Evaluate the structural hypotheses of the system on the grid.
///
/// Fails only when the coupling signs are mixed or disagree with
/// `spec.mode`; violated hypotheses are reported, and [`StructureReport::ensure`]
/// turns a failed gating check into an error.
pub fn check_structure(spec: &ProblemSpec, grid: &Arc<Grid>) -> Result<StructureReport> {
    spec.validate_scalars()?;
    let mut ranges = BTreeMap::new();
    for (name, e) in [
        ("p", &spec.p),
        ("q", &spec.q),
        ("alpha1", &spec.alpha1),
        ("alpha2", &spec.alpha2),
        ("beta1", &spec.beta1),
        ("beta2", &spec.beta2),
    ] {
        ranges.insert(name.to_string(), e.range_on_grid(grid, false)?);
    }
    let lo = |k: &str| ranges[k].inf;
    let hi = |k: &str| ranges[k].sup;
    let n_inv = 1.0 / spec.dimension as f64;
    let (pm, qm) = (lo("p"), lo("q"));

    let mut checks = Vec::new();
    checks.push(strict(
        "exponent_range",
        true,
        &[("p- > 1", pm - 1.0), ("q- > 1", qm - 1.0)],
    ));
    let upper = strict(
        "exponent_upper",
        false,
        &[
            ("p+ < N", spec.dimension as f64 - hi("p")),
            ("q+ < N", spec.dimension as f64 - hi("q")),
        ],
    );
    if !upper.satisfied {
        log::warn!("upper exponent bound waived: {}", upper.detail);
    }
    checks.push(upper);

    let h3 = strict(
        "h3",
        false,
        &[("alpha2- > 0", lo("alpha2")), ("beta1- > 0", lo("beta1"))],
    );
    let h4 = strict(
        "h4",
        false,
        &[("alpha2+ < 0", -hi("alpha2")), ("beta1+ < 0", -hi("beta1"))],
    );
    let mode = match (h3.satisfied, h4.satisfied) {
        (true, _) => Mode::Cooperative,
        (_, true) => Mode::Competitive,
        _ => return Err(Error::MixedStructure),
    };
    if mode != spec.mode {
        return Err(Error::ModeMismatch {
            requested: spec.mode.as_str(),
            detected: mode.as_str(),
        });
    }
    checks.push(h3);
    checks.push(h4);

    match mode {
        Mode::Cooperative => checks.push(strict(
            "h1",
            true,
            &[
                ("alpha2+ < p- - 1", pm - 1.0 - hi("alpha2")),
                ("beta1+ < q- - 1", qm - 1.0 - hi("beta1")),
                ("alpha1+ < 0", -hi("alpha1")),
                ("beta2+ < 0", -hi("beta2")),
                ("alpha1- > -1/N", lo("alpha1") + n_inv),
                ("beta2- > -1/N", lo("beta2") + n_inv),
            ],
        )),
        Mode::Competitive => {
            checks.push(strict(
                "h2",
                true,
                &[
                    ("alpha1+ < 0", -hi("alpha1")),
                    ("alpha1- > -1/N", lo("alpha1") + n_inv),
                    ("alpha1- > -(p- - 1)", lo("alpha1") + pm - 1.0),
                    ("beta2+ < 0", -hi("beta2")),
                    ("beta2- > -1/N", lo("beta2") + n_inv),
                    ("beta2- > -(q- - 1)", lo("beta2") + qm - 1.0),
                ],
            ));
            checks.push(strict(
                "h4**",
                true,
                &[
                    (
                        "alpha1- + beta1- > -1/N",
                        lo("alpha1") + lo("beta1") + n_inv,
                    ),
                    (
                        "alpha2- + beta2- > -1/N",
                        lo("alpha2") + lo("beta2") + n_inv,
                    ),
                ],
            ));
            if spec.gamma_alternative {
                let mut terms = Vec::new();
                let mut labels = Vec::new();
                for (name, g) in [("gamma1", &spec.gamma1), ("gamma2", &spec.gamma2)] {
                    let Some(g) = g else {
                        return Err(Error::InvalidParameter(format!(
                            "the alternative gamma hypothesis needs {name}"
                        )));
                    };
                    let r = g.range_on_grid(grid, true)?;
                    labels.push((format!("{name}+ < 0"), format!("{name}- >= -1")));
                    terms.push((-r.sup, r.inf + 1.0));
                }
                // strict at the top, inclusive at the bottom
                let top = strict(
                    "gamma_range",
                    true,
                    &[(&labels[0].0, terms[0].0), (&labels[1].0, terms[1].0)],
                );
                let bottom = worst(
                    "gamma_range",
                    true,
                    &[(&labels[0].1, terms[0].1), (&labels[1].1, terms[1].1)],
                    true,
                );
                checks.push(if !bottom.satisfied { bottom } else { top });
            }
        }
    }

    // at least one layer of nodes even when delta < h
    let strip = boundary_strip(grid, spec.delta.max(1.5 * grid.h()));
    let mut boundary_limits = Vec::new();
    let names: &[&str] = match mode {
        Mode::Cooperative => &["alpha1", "beta2"],
        Mode::Competitive => &["alpha1", "beta2", "alpha1+beta1", "alpha2+beta2"],
    };
    let fields = spec.exponents(grid)?;
    for &name in names {
        let value = |i: usize| {
            let s = match name {
                "alpha1" => fields.alpha1.get(i),
                "beta2" => fields.beta2.get(i),
                "alpha1+beta1" => fields.alpha1.get(i) + fields.beta1.get(i),
                _ => fields.alpha2.get(i) + fields.beta2.get(i),
            };
            spec.dimension as f64 * s
        };
        let (inf, sup) = strip
            .iter()
            .map(|&i| value(i))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        if strip.is_empty() {
            continue;
        }
        let inside = inf > -1.0 && sup < 0.0;
        if !inside {
            log::warn!("N*{name} leaves (-1, 0) near the boundary: [{inf}, {sup}]");
        }
        boundary_limits.push(LimitEstimate {
            name: format!("N*{name}"),
            inf,
            sup,
            inside,
        });
    }

    Ok(StructureReport {
        mode,
        checks,
        ranges,
        boundary_limits,
    })
}
