//! Scenario files.
//!
//! A scenario is a TOML file. Exponents and sources are expression strings;
//! `lambda`, `sigma_bar` and `rho` take a number or `"auto"`.

use std::fmt;
use std::path::{Path, PathBuf};

use pqlap_core::brackets::BracketConfig;
use pqlap_core::expr::ExprField;
use pqlap_core::grid::{build_grid, Domain, Grid};
use pqlap_core::plap::SolverConfig;
use pqlap_core::system::{FixedPointConfig, Mode, ProblemSpec};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Cooperative,
    Competitive,
    Scalar,
    LemmaL2,
    Refine,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Cooperative => "cooperative",
            RunMode::Competitive => "competitive",
            RunMode::Scalar => "scalar",
            RunMode::LemmaL2 => "lemma-l2",
            RunMode::Refine => "refine",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A number, or `"auto"` to let the pipeline choose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Auto {
    #[default]
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl Serialize for Auto {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Auto {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Auto::Value(v)),
            Raw::Int(v) => Ok(Auto::Value(v as f64)),
            Raw::Text(t) if t == "auto" => Ok(Auto::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub p: ExprField,
    #[serde(default)]
    pub q: Option<ExprField>,
    #[serde(default)]
    pub alpha1: Option<ExprField>,
    #[serde(default)]
    pub alpha2: Option<ExprField>,
    #[serde(default)]
    pub beta1: Option<ExprField>,
    #[serde(default)]
    pub beta2: Option<ExprField>,
    #[serde(default)]
    pub gamma1: Option<ExprField>,
    #[serde(default)]
    pub gamma2: Option<ExprField>,
}

/// Scalar problems: a smooth `source`, or `lambda u^gamma` when `gamma` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarSection {
    pub source: Option<ExprField>,
    pub gamma: Option<ExprField>,
    /// Second lambda at which the growth bound fitted at `lambda` is checked.
    pub growth_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaL2Section {
    pub h: ExprField,
    pub h_tilde: ExprField,
    pub eps: f64,
    /// `[lo, hi]` for a bisection of the largest passing strip width.
    pub crossover: Option<[f64; 2]>,
    pub bisection_steps: usize,
}

impl Default for LemmaL2Section {
    fn default() -> Self {
        LemmaL2Section {
            h: ExprField::constant(1.0),
            h_tilde: ExprField::constant(-1.0),
            eps: 0.01,
            crossover: None,
            bisection_steps: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Random ordered pairs for the order-preservation check; 0 skips it.
    pub order_trials: usize,
    /// Also iterate from the upper pair and compare.
    pub dual_start: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            order_trials: 0,
            dual_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineSection {
    pub levels: usize,
}

impl Default for RefineSection {
    fn default() -> Self {
        RefineSection { levels: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: RunMode,
    pub domain: Domain,
    pub n: usize,
    pub exponents: Exponents,
    #[serde(default)]
    pub lambda: Auto,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub sigma_bar: Auto,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub rho: Auto,
    /// Use the alternative hypothesis on `gamma1`, `gamma2` in place of the
    /// `c5**` check.
    #[serde(default)]
    pub gamma_alternative: bool,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory; `--out` takes precedence.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub bracket: BracketConfig,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub scalar: ScalarSection,
    #[serde(default)]
    pub lemma_l2: LemmaL2Section,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub refine: RefineSection,
}

fn default_sigma() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    0.05
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        self.domain.validate()?;
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("sigma_bar", self.sigma_bar),
            ("rho", self.rho),
        ] {
            if let Some(x) = v.value() {
                if !x.is_finite() || x < 0.0 || (name == "lambda" && x == 0.0) {
                    return bad(format!("{name} must be positive and finite, got {x}"));
                }
            }
        }
        self.solver.validate()?;
        self.bracket.solver.validate()?;
        self.fixed_point.solver.validate()?;
        match self.mode {
            RunMode::Cooperative | RunMode::Competitive => {
                for (name, e) in [
                    ("q", &self.exponents.q),
                    ("alpha1", &self.exponents.alpha1),
                    ("alpha2", &self.exponents.alpha2),
                    ("beta1", &self.exponents.beta1),
                    ("beta2", &self.exponents.beta2),
                ] {
                    if e.is_none() {
                        return bad(format!("{} mode needs exponents.{name}", self.mode));
                    }
                }
            }
            RunMode::Scalar | RunMode::Refine => match (&self.scalar.source, &self.scalar.gamma) {
                (Some(_), Some(_)) => {
                    return bad("scalar.source and scalar.gamma are exclusive".into())
                }
                (None, None) => {
                    return bad("scalar problems need scalar.source or scalar.gamma".into())
                }
                (None, Some(_)) if self.lambda.value().is_none() => {
                    return bad("singular scalar problems need a numeric lambda".into())
                }
                _ => {}
            },
            RunMode::LemmaL2 => {
                let l2 = &self.lemma_l2;
                if !(l2.eps > 0.0) {
                    return bad(format!("lemma_l2.eps must be positive, got {}", l2.eps));
                }
                if let Some([lo, hi]) = l2.crossover {
                    if !(lo > 0.0 && lo < hi) {
                        return bad(format!(
                            "lemma_l2.crossover needs 0 < lo < hi, got [{lo}, {hi}]"
                        ));
                    }
                }
            }
        }
        if self.mode == RunMode::Refine && self.refine.levels < 2 {
            return bad(format!(
                "refine.levels must be at least 2, got {}",
                self.refine.levels
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>, RunError> {
        Ok(build_grid(self.domain, self.n)?)
    }

    /// The system description; `lambda` starts at 1 when automatic.
    pub fn problem_spec(&self, grid: &Grid) -> Result<ProblemSpec, RunError> {
        let mode = match self.mode {
            RunMode::Cooperative => Mode::Cooperative,
            RunMode::Competitive => Mode::Competitive,
            other => return Err(RunError::Config(format!("{other} mode has no system"))),
        };
        let e = &self.exponents;
        let req = |x: &Option<ExprField>| {
            x.clone()
                .ok_or_else(|| RunError::Config("missing exponent".into()))
        };
        Ok(ProblemSpec {
            p: e.p.clone(),
            q: req(&e.q)?,
            alpha1: req(&e.alpha1)?,
            alpha2: req(&e.alpha2)?,
            beta1: req(&e.beta1)?,
            beta2: req(&e.beta2)?,
            lambda: self.lambda.value().unwrap_or(1.0),
            dimension: grid.dim(),
            mode,
            sigma: self.sigma,
            sigma_bar: self.sigma_bar.value(),
            delta: self.delta,
            rho: self.rho.value(),
            gamma1: e.gamma1.clone(),
            gamma2: e.gamma2.clone(),
            gamma_alternative: self.gamma_alternative,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mode = "scalar"
n = 33
domain = { kind = "interval", a = 0.0, b = 1.0 }
exponents = { p = "3" }
scalar = { source = "1" }
"#;

    #[test]
    fn minimal_scalar_config() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.mode, RunMode::Scalar);
        assert_eq!(c.lambda, Auto::Auto);
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.scalar.source.unwrap().as_constant(), Some(1.0));
    }

    #[test]
    fn auto_accepts_numbers_and_keyword_only() {
        let parse = |v: &str| {
            toml::from_str::<std::collections::BTreeMap<String, Auto>>(&format!("k = {v}"))
        };
        assert_eq!(parse("\"auto\"").unwrap()["k"], Auto::Auto);
        assert_eq!(parse("4").unwrap()["k"], Auto::Value(4.0));
        assert_eq!(parse("2.5").unwrap()["k"], Auto::Value(2.5));
        assert!(parse("\"big\"").is_err());
    }

    #[test]
    fn rejects_invalid_settings() {
        let with = |extra: &str| RunConfig::from_toml(&format!("{extra}\n{MINIMAL}"));
        assert!(matches!(with("delta = -1.0"), Err(RunError::Config(_))));
        assert!(matches!(with("colour = 3"), Err(RunError::Config(_))));
        assert!(with("lambda = 0").is_err());
        let bad_expr = MINIMAL.replace("p = \"3\"", "p = \"3 +\"");
        assert!(RunConfig::from_toml(&bad_expr).is_err());
        let system = MINIMAL.replace("\"scalar\"", "\"cooperative\"");
        assert!(
            matches!(RunConfig::from_toml(&system), Err(RunError::Config(m)) if m.contains("exponents.q"))
        );
    }
}
