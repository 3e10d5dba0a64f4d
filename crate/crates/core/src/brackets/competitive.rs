use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{
    ordering_certificate, positivity_certificate, power_product, solve_singular_scalar,
    weak_certificate, Bracket, BracketConfig,
};
use crate::certificate::{min_over, BoundCertificate};
use crate::error::{Error, Result};
use crate::grid::{boundary_strip, Field, Grid, Region, Source, SourcePart};
use crate::math;
use crate::plap::{solve_dirichlet, PlapProblem};
use crate::system::{check_structure, Mode, ProblemSpec};

/// Least-squares slope and intercept of `ln u` against `ln d` over `nodes`.
pub(crate) fn fit_power(u: &Field, nodes: &[usize]) -> Option<(f64, f64)> {
    let dist = u.grid().dist();
    let pts: Vec<(f64, f64)> = nodes
        .iter()
        .filter(|&&i| u.get(i) > 0.0 && dist[i] > 0.0)
        .map(|&i| (math::ln(dist[i]), math::ln(u.get(i))))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn theta_certificate(name: &str, theta: Option<f64>) -> BoundCertificate {
    match theta {
        None => BoundCertificate::failed(name, "fewer than two distinct distances in the strip"),
        Some(t) => BoundCertificate::exact(name, (t - 0.8).min(1.0 - t), None)
            .with_satisfied(t > 0.8 && t <= 1.0)
            .with_note(format!("fitted exponent {t}")),
    }
}

fn solve(p: &Field, rhs: Source, cfg: &BracketConfig) -> Result<Field> {
    Ok(solve_dirichlet(&PlapProblem::new(p.clone(), rhs)?, &cfg.solver, None)?.0)
}

/// Bracket for competitive exponents (`alpha2, beta1 < 0`), `sigma > 1`.
///
/// The upper pair solves with `lambda^sigma w^alpha` off the strip and
/// `lambda^sigma d^(alpha1 + beta1)` on it; the lower pair with `1` off the
/// strip and `-1` on it. Growth exponents of the upper pair at the boundary
/// are fitted on the strip.
pub fn competitive_bracket(
    spec: &ProblemSpec,
    grid: &Arc<Grid>,
    cfg: &BracketConfig,
) -> Result<Bracket> {
    if spec.mode != Mode::Competitive {
        return Err(Error::ModeMismatch {
            requested: "competitive",
            detected: spec.mode.as_str(),
        });
    }
    check_structure(spec, grid)?.ensure()?;
    if !(spec.sigma > 1.0) {
        return Err(Error::Hypothesis {
            name: "sigma > 1".into(),
            detail: format!("competitive brackets need sigma > 1, got {}", spec.sigma),
        });
    }
    let ex = spec.exponents(grid)?;
    let (lambda, delta) = (spec.lambda, spec.delta);
    let scale = math::powf(lambda, spec.sigma);

    let s1 = solve_singular_scalar(&ex.p, &spec.alpha1, scale, delta, cfg)?;
    let s2 = solve_singular_scalar(&ex.q, &spec.beta2, scale, delta, cfg)?;
    let (w1, w2) = (s1.u.clone(), s2.u.clone());

    let strip_power = |a: &Field, b: &Field| -> Result<SourcePart> {
        Ok(
            SourcePart::power(Field::constant(grid, scale), a.zip_map(b, |x, y| x + y)?)
                .within(Region::Strip(delta)),
        )
    };
    let u_high = solve(
        &ex.p,
        Source::new()
            .with(power_product(scale, &[(&w1, &ex.alpha1)])?.within(Region::OffStrip(delta)))
            .with(strip_power(&ex.alpha1, &ex.beta1)?),
        cfg,
    )?;
    let v_high = solve(
        &ex.q,
        Source::new()
            .with(power_product(scale, &[(&w2, &ex.beta2)])?.within(Region::OffStrip(delta)))
            .with(strip_power(&ex.alpha2, &ex.beta2)?),
        cfg,
    )?;
    let plus_minus = || {
        Source::new()
            .with(SourcePart::smooth(Field::constant(grid, 1.0)).within(Region::OffStrip(delta)))
            .with(SourcePart::smooth(Field::constant(grid, -1.0)).within(Region::Strip(delta)))
    };
    let u_low = solve(&ex.p, plus_minus(), cfg)?;
    let v_low = solve(&ex.q, plus_minus(), cfg)?;

    let h = grid.h();
    let mut certs = Vec::new();
    let mut constants = BTreeMap::new();
    for (tag, s) in [("w1", &s1), ("w2", &s2)] {
        for c in &s.certificates {
            let mut c = c.clone();
            c.name = format!("{tag}_{}", c.name);
            certs.push(c);
        }
    }
    for (name, high, w) in [
        ("u_high_above_half_w1", &u_high, &w1),
        ("v_high_above_half_w2", &v_high, &w2),
    ] {
        let (m, at) = min_over(0..grid.node_count(), |i| high.get(i) - 0.5 * w.get(i));
        certs.push(BoundCertificate::pointwise(name, m, at, h));
    }

    // u_high <= c d^theta on the strip, theta fitted away from corners over
    // at least three layers of nodes
    let strip: Vec<usize> = boundary_strip(grid, delta.max(3.5 * h))
        .into_iter()
        .filter(|&i| grid.away_from_corners(i))
        .collect();
    for (name, tag, high) in [
        ("theta1_range", "1", &u_high),
        ("theta2_range", "2", &v_high),
    ] {
        let fit = fit_power(high, &strip);
        certs.push(theta_certificate(name, fit.map(|f| f.0)));
        if let Some((theta, _)) = fit {
            let c = strip
                .iter()
                .map(|&i| high.get(i) / math::powf(grid.dist()[i], theta))
                .fold(0.0, f64::max);
            constants.insert(format!("theta{tag}"), theta);
            constants.insert(format!("c0_{tag}"), c);
        }
    }

    // c3 min{delta, d} <= u_low <= c4 with c3 fitted
    for (name, tag, low) in [
        ("u_low_distance_bound", "u", &u_low),
        ("v_low_distance_bound", "v", &v_low),
    ] {
        let (c3, at) = min_over(grid.interior_nodes(), |i| {
            low.get(i) / grid.dist()[i].min(delta)
        });
        constants.insert(format!("c3_{tag}"), c3);
        constants.insert(format!("c4_{tag}"), low.max());
        certs.push(BoundCertificate::exact(name, c3, at).with_satisfied(c3 > 0.0));
    }

    certs.push(ordering_certificate("ordering_u", &u_low, &u_high)?);
    certs.push(ordering_certificate("ordering_v", &v_low, &v_high)?);
    certs.push(positivity_certificate("positivity", &[&u_low, &v_low]));

    let f = |u: &Field, v: &Field| -> Result<Source> {
        Ok(Source::single(power_product(
            lambda,
            &[(u, &ex.alpha1), (v, &ex.beta1)],
        )?))
    };
    let g = |u: &Field, v: &Field| -> Result<Source> {
        Ok(Source::single(power_product(
            lambda,
            &[(u, &ex.alpha2), (v, &ex.beta2)],
        )?))
    };
    if certs.iter().any(|c| c.name == "positivity" && !c.satisfied) {
        for name in ["prop_P1_sub_u", "prop_P1_sub_v"] {
            certs.push(BoundCertificate::failed(name, "lower pair is not positive"));
        }
    } else {
        certs.push(weak_certificate(
            "prop_P1_sub_u",
            &ex.p,
            &u_low,
            &f(&u_low, &v_low)?,
            false,
        )?);
        certs.push(weak_certificate(
            "prop_P1_sub_v",
            &ex.q,
            &v_low,
            &g(&u_low, &v_low)?,
            false,
        )?);
    }
    certs.push(weak_certificate(
        "prop_P1_super_u",
        &ex.p,
        &u_high,
        &f(&u_high, &v_high)?,
        true,
    )?);
    certs.push(weak_certificate(
        "prop_P1_super_v",
        &ex.q,
        &v_high,
        &g(&u_high, &v_high)?,
        true,
    )?);

    Ok(Bracket {
        mode: Mode::Competitive,
        u_low,
        v_low,
        u_high,
        v_high,
        lambda,
        sigma: spec.sigma,
        sigma_bar: None,
        delta,
        certificates: certs,
        constants,
        w1,
        w2,
    })
}
