use alloc::string::{String, ToString};

/// Outcome of checking one inequality on the grid.
///
/// `margin` is the worst slack found (negative when violated) and
/// `satisfied` holds iff `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundCertificate {
    pub name: String,
    pub satisfied: bool,
    pub margin: f64,
    pub location: Option<usize>,
    pub tolerance: f64,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub note: Option<String>,
}

impl BoundCertificate {
    pub fn new(name: &str, margin: f64, location: Option<usize>, tolerance: f64) -> Self {
        BoundCertificate {
            name: name.to_string(),
            satisfied: margin >= -tolerance,
            margin,
            location,
            tolerance,
            note: None,
        }
    }

    /// Pointwise inequality on a grid of spacing `h`, with slack `10 h`.
    pub fn pointwise(name: &str, margin: f64, location: Option<usize>, h: f64) -> Self {
        Self::new(name, margin, location, 10.0 * h)
    }

    /// Parametric condition with no slack.
    pub fn exact(name: &str, margin: f64, location: Option<usize>) -> Self {
        Self::new(name, margin, location, 0.0)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Force failure, e.g. when the quantity could not be evaluated.
    pub fn failed(name: &str, note: impl Into<String>) -> Self {
        BoundCertificate {
            name: name.to_string(),
            satisfied: false,
            margin: f64::NEG_INFINITY,
            location: None,
            tolerance: 0.0,
            note: Some(note.into()),
        }
    }
}

/// `(min, argmin)` of `f(i)` over the given nodes.
pub(crate) fn min_over(
    nodes: impl Iterator<Item = usize>,
    mut f: impl FnMut(usize) -> f64,
) -> (f64, Option<usize>) {
    let mut best = (f64::INFINITY, None);
    for i in nodes {
        let v = f(i);
        if v < best.0 || best.1.is_none() {
            best = (v, Some(i));
        }
    }
    best
}
