//! Vector inequalities behind the strict monotonicity of `y -> |y|^(r-2) y`.
//!
//! For `1 < r < 2`:
//! `|y1-y2|^r <= 1/(r-1) [(|y1|^(r-2)y1 - |y2|^(r-2)y2).(y1-y2)]^(r/2) (|y1|^r + |y2|^r)^((2-r)/2)`,
//! and for `r >= 2`:
//! `|y1-y2|^r <= 2^r (|y1|^(r-2)y1 - |y2|^(r-2)y2).(y1-y2)`.
//!
//! Both are compared with a relative roundoff allowance of `1e-12`; the
//! first is tight as `r -> 2` for antiparallel vectors.

use alloc::vec::Vec;

use crate::math;
use crate::rng::Rng;

const ROUNDOFF: f64 = 1e-12;

fn norm(y: &[f64]) -> f64 {
    math::sqrt(y.iter().map(|v| v * v).sum())
}

/// `(|y1|^(r-2) y1 - |y2|^(r-2) y2) . (y1 - y2)`
pub fn monotonicity_pairing(y1: &[f64], y2: &[f64], r: f64) -> f64 {
    let (n1, n2) = (norm(y1), norm(y2));
    let s1 = if n1 > 0.0 {
        math::powf(n1, r - 2.0)
    } else {
        0.0
    };
    let s2 = if n2 > 0.0 {
        math::powf(n2, r - 2.0)
    } else {
        0.0
    };
    y1.iter()
        .zip(y2)
        .map(|(a, b)| (s1 * a - s2 * b) * (a - b))
        .sum()
}

/// Both sides `(lhs, rhs)` of the inequality for `1 < r < 2`.
pub fn subquadratic_sides(y1: &[f64], y2: &[f64], r: f64) -> (f64, f64) {
    let diff: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a - b).collect();
    let lhs = math::powf(norm(&diff), r);
    let pairing = monotonicity_pairing(y1, y2, r).max(0.0);
    let mass = math::powf(norm(y1), r) + math::powf(norm(y2), r);
    let rhs = math::powf(pairing, 0.5 * r) * math::powf(mass, 0.5 * (2.0 - r)) / (r - 1.0);
    (lhs, rhs)
}

/// Both sides `(lhs, rhs)` of the inequality for `r >= 2`.
pub fn superquadratic_sides(y1: &[f64], y2: &[f64], r: f64) -> (f64, f64) {
    let diff: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a - b).collect();
    let lhs = math::powf(norm(&diff), r);
    (lhs, math::powf(2.0, r) * monotonicity_pairing(y1, y2, r))
}

pub fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + ROUNDOFF)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `r` in `(1, 2)`
    Subquadratic,
    /// `r` in `[2, 4]`
    Superquadratic,
}

/// Sampled pairs and how many violated the inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` observed.
    pub worst_ratio: f64,
}

/// Check `trials` random pairs in dimension `dim`, with magnitudes spread
/// over six decades and a third of the pairs (anti)parallel.
pub fn sample(regime: Regime, dim: usize, trials: usize, seed: u64) -> SampleOutcome {
    let mut rng = Rng::new(seed);
    let mut out = SampleOutcome {
        trials,
        violations: 0,
        worst_ratio: 0.0,
    };
    for _ in 0..trials {
        let r = match regime {
            Regime::Subquadratic => 1.0 + rng.range(1e-6, 1.0 - 1e-6),
            Regime::Superquadratic => rng.range(2.0, 4.0),
        };
        let scale = math::powf(10.0, rng.range(-3.0, 3.0));
        let y1: Vec<f64> = (0..dim).map(|_| scale * rng.range(-1.0, 1.0)).collect();
        let y2: Vec<f64> = if rng.uniform() < 1.0 / 3.0 {
            let t = rng.range(-2.0, 2.0);
            y1.iter().map(|v| t * v).collect()
        } else {
            (0..dim).map(|_| scale * rng.range(-1.0, 1.0)).collect()
        };
        let (lhs, rhs) = match regime {
            Regime::Subquadratic => subquadratic_sides(&y1, &y2, r),
            Regime::Superquadratic => superquadratic_sides(&y1, &y2, r),
        };
        if !holds(lhs, rhs) {
            out.violations += 1;
        }
        if rhs > 0.0 {
            out.worst_ratio = out.worst_ratio.max(lhs / rhs);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_values() {
        // y1 = 1, y2 = -1, r = 3: lhs 8, pairing (1 + 1) * 2 = 4, rhs 32
        let (l, r) = superquadratic_sides(&[1.0], &[-1.0], 3.0);
        assert_abs_diff_eq!(l, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 32.0, epsilon = 1e-12);
        // r = 1.5, y1 = 1, y2 = 0: lhs 1, pairing 1, mass 1, rhs 2
        let (l, r) = subquadratic_sides(&[1.0], &[0.0], 1.5);
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_vectors_give_zero_sides() {
        let (l, r) = subquadratic_sides(&[0.3, -0.2], &[0.3, -0.2], 1.7);
        assert_eq!((l, r), (0.0, 0.0));
        assert!(holds(l, r));
    }

    #[test]
    fn no_violations_in_small_samples() {
        for dim in 1..=3 {
            for regime in [Regime::Subquadratic, Regime::Superquadratic] {
                let s = sample(regime, dim, 200, dim as u64);
                assert_eq!(s.violations, 0, "{regime:?} dim {dim}: {s:?}");
            }
        }
    }
}
