//! Grid refinement of scalar scenarios.
//!
//! Level `k` uses `(n - 1) 2^k + 1` nodes per axis so every coarse node is a
//! fine node. Errors are measured against the closed form when the scenario
//! is a constant-exponent unit load on `[0, 1]`, and against the finest
//! level otherwise.

use std::thread;

use pqlap_core::grid::{build_grid, Grid};
use pqlap_core::plap::closed_form_unit_load;
use pqlap_core::Field;
use serde::Serialize;

use crate::config::{RunConfig, RunMode};
use crate::pipeline::{solve_scalar, unit_load_exponent};
use crate::RunError;

/// Least observed order for a study to pass.
pub const MIN_ORDER: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineRow {
    pub n: usize,
    pub h: f64,
    pub max_u: f64,
    /// Absent for the finest level of a self-convergence study.
    pub error: Option<f64>,
    /// `log2` of the error ratio to the previous level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineReport {
    /// `closed_form` or `finest_level`.
    pub reference: &'static str,
    pub rows: Vec<RefineRow>,
    /// Least-squares slope of `log error` against `log h`.
    pub observed_order: f64,
    /// Errors decrease at every level.
    pub monotone: bool,
    pub passed: bool,
}

/// Largest deviation of the piecewise-linear interpolant from the closed
/// form, sampled at nodes and cell midpoints.
fn closed_form_error(u: &Field, p: f64) -> f64 {
    let g = u.grid();
    let mut worst: f64 = 0.0;
    for i in 0..g.node_count() {
        let x = g.coords(i).0;
        worst = worst.max((u.get(i) - closed_form_unit_load(p, x)).abs());
        if i + 1 < g.node_count() {
            let xm = 0.5 * (x + g.coords(i + 1).0);
            let um = 0.5 * (u.get(i) + u.get(i + 1));
            worst = worst.max((um - closed_form_unit_load(p, xm)).abs());
        }
    }
    worst
}

fn fine_index(coarse: &Grid, fine: &Grid, i: usize) -> usize {
    let r = (fine.n() - 1) / (coarse.n() - 1);
    if coarse.dim() == 1 {
        i * r
    } else {
        let (ix, iy) = (i % coarse.n(), i / coarse.n());
        iy * r * fine.n() + ix * r
    }
}

/// Solve the scalar scenario at `levels` nested resolutions; levels are
/// solved concurrently.
pub fn refine_study(cfg: &RunConfig, levels: usize) -> Result<RefineReport, RunError> {
    if !matches!(cfg.mode, RunMode::Scalar | RunMode::Refine) {
        return Err(RunError::Config(format!(
            "refinement needs a scalar scenario, got {} mode",
            cfg.mode
        )));
    }
    let oracle = unit_load_exponent(cfg);
    let min_levels = if oracle.is_some() { 2 } else { 3 };
    if levels < min_levels {
        return Err(RunError::Config(format!(
            "refinement needs at least {min_levels} levels here, got {levels}"
        )));
    }
    let sizes: Vec<usize> = (0..levels).map(|k| (cfg.n - 1) * (1 << k) + 1).collect();
    let solved: Vec<Result<Field, RunError>> = thread::scope(|s| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&n| {
                s.spawn(move || {
                    let grid = build_grid(cfg.domain, n)?;
                    Ok(solve_scalar(cfg, &grid)?.0)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("refinement level panicked"))
            .collect()
    });
    let fields = solved.into_iter().collect::<Result<Vec<_>, _>>()?;

    let finest = fields.last().expect("at least two levels");
    let errors: Vec<Option<f64>> = fields
        .iter()
        .enumerate()
        .map(|(k, u)| match oracle {
            Some(p) => Some(closed_form_error(u, p)),
            None if k + 1 == fields.len() => None,
            None => {
                let (gc, gf) = (u.grid(), finest.grid());
                Some(
                    (0..gc.node_count())
                        .map(|i| (u.get(i) - finest.get(fine_index(gc, gf, i))).abs())
                        .fold(0.0, f64::max),
                )
            }
        })
        .collect();

    let mut rows = Vec::new();
    for (k, u) in fields.iter().enumerate() {
        let order = match (k.checked_sub(1).and_then(|j| errors[j]), errors[k]) {
            (Some(prev), Some(e)) => Some((prev / e).log2()),
            _ => None,
        };
        rows.push(RefineRow {
            n: sizes[k],
            h: u.grid().h(),
            max_u: u.max(),
            error: errors[k],
            order,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.error.map(|e| (r.h.ln(), e.ln())))
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let observed_order = sxy / sxx;
    let errs: Vec<f64> = errors.iter().flatten().copied().collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    if !monotone {
        log::warn!("refinement errors do not decrease monotonically: {errs:?}");
    }
    Ok(RefineReport {
        reference: if oracle.is_some() {
            "closed_form"
        } else {
            "finest_level"
        },
        rows,
        observed_order,
        monotone,
        passed: monotone && observed_order >= MIN_ORDER,
    })
}
