use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{
    growth_certificate, ordering_certificate, positivity_certificate, power_product,
    sigma_bar_lower_bound, solve_singular_scalar, weak_certificate, Bracket, BracketConfig,
};
use crate::certificate::{min_over, BoundCertificate};
use crate::error::{Error, Result};
use crate::expr::ExprField;
use crate::grid::{Embedding, Field, Grid, Region, Source};
use crate::math;
use crate::plap::{solve_dirichlet, PlapProblem};
use crate::system::{check_structure, Mode, ProblemSpec};

/// Lower field: `-div(|grad u|^(p-2) grad u) = scale w^e` off the strip and
/// `-w^e` on it.
fn lower_field(
    p: &Field,
    w: &Field,
    e: &Field,
    scale: f64,
    delta: f64,
    cfg: &BracketConfig,
) -> Result<Field> {
    let rhs = Source::new()
        .with(power_product(scale, &[(w, e)])?.within(Region::OffStrip(delta)))
        .with(power_product(-1.0, &[(w, e)])?.within(Region::Strip(delta)));
    Ok(solve_dirichlet(&PlapProblem::new(p.clone(), rhs)?, &cfg.solver, None)?.0)
}

/// Solution of `-div(|grad u|^(p-2) grad u) = load` on the enlarged domain,
/// restricted to the original grid.
fn upper_field(emb: &Embedding, p: &ExprField, load: f64, cfg: &BracketConfig) -> Result<Field> {
    let p_out = p.eval_on_grid(&emb.outer)?;
    let prob = PlapProblem::smooth(p_out, Field::constant(&emb.outer, load))?;
    emb.restrict(&solve_dirichlet(&prob, &cfg.solver, None)?.0)
}

fn sandwich(name: &str, low: &Field, w: &Field) -> BoundCertificate {
    let grid = low.grid();
    let (m, at) = min_over(0..grid.node_count(), |i| {
        (low.get(i) - 0.5 * w.get(i)).min(w.get(i) - low.get(i))
    });
    BoundCertificate::pointwise(name, m, at, grid.h())
}

fn renamed(mut c: BoundCertificate, name: &str) -> BoundCertificate {
    c.name = name.to_string();
    c
}

/// Bracket for cooperative exponents (`alpha2, beta1 > 0`).
///
/// `w1`, `w2` solve the singular scalar problems with parameter
/// `lambda^sigma`; the lower pair switches their right-hand sides to
/// `-w^alpha` on the strip `d < delta`; the upper pair solves
/// `-div(|grad u|^(p-2) grad u) = lambda^sigma_bar` on a padded domain. The
/// weak sub/supersolution inequalities are checked at the bracket corners
/// where they are tightest.
pub fn cooperative_bracket(
    spec: &ProblemSpec,
    grid: &Arc<Grid>,
    cfg: &BracketConfig,
) -> Result<Bracket> {
    if spec.mode != Mode::Cooperative {
        return Err(Error::ModeMismatch {
            requested: "cooperative",
            detected: spec.mode.as_str(),
        });
    }
    check_structure(spec, grid)?.ensure()?;
    let ex = spec.exponents(grid)?;
    let (lambda, delta) = (spec.lambda, spec.delta);
    let (pm, qm) = (ex.p.min(), ex.q.min());
    let bound = sigma_bar_lower_bound(pm, qm, ex.alpha2.max(), ex.beta1.max())?;
    let sigma_bar = spec.sigma_bar.unwrap_or(bound + cfg.sigma_bar_offset);
    if !(sigma_bar > bound) {
        return Err(Error::InvalidParameter(alloc::format!(
            "sigma_bar {sigma_bar} must exceed its lower bound {bound}"
        )));
    }
    let scale = math::powf(lambda, spec.sigma);

    let s1 = solve_singular_scalar(&ex.p, &spec.alpha1, scale, delta, cfg)?;
    let s2 = solve_singular_scalar(&ex.q, &spec.beta2, scale, delta, cfg)?;
    let (w1, w2) = (s1.u.clone(), s2.u.clone());
    let u_low = lower_field(&ex.p, &w1, &ex.alpha1, scale, delta, cfg)?;
    let v_low = lower_field(&ex.q, &w2, &ex.beta2, scale, delta, cfg)?;

    let emb = grid.padded(cfg.pad_fraction)?;
    let load = math::powf(lambda, sigma_bar);
    let u_high = upper_field(&emb, &spec.p, load, cfg)?;
    let v_high = upper_field(&emb, &spec.q, load, cfg)?;
    let load2 = math::powf(2.0 * lambda, sigma_bar);
    let u_high2 = upper_field(&emb, &spec.p, load2, cfg)?;
    let v_high2 = upper_field(&emb, &spec.q, load2, cfg)?;

    let mut certs = Vec::new();
    let mut constants = BTreeMap::new();
    for (tag, s) in [("w1", &s1), ("w2", &s2)] {
        for c in &s.certificates {
            certs.push(renamed(c.clone(), &alloc::format!("{tag}_{}", c.name)));
        }
    }
    certs.push(sandwich("u_low_sandwich", &u_low, &w1));
    certs.push(sandwich("v_low_sandwich", &v_low, &w2));

    // c0 delta <= min(u_high, v_high), checked again at 2 lambda
    let floor_of = |a: &Field, b: &Field| {
        (0..grid.node_count())
            .map(|i| a.get(i).min(b.get(i)))
            .fold(f64::INFINITY, f64::min)
    };
    let c0 = floor_of(&u_high, &v_high) / delta;
    constants.insert("c0".to_string(), c0);
    certs
        .push(BoundCertificate::exact("upper_positive", c0 * delta, None).with_satisfied(c0 > 0.0));
    let (m, at) = min_over(0..grid.node_count(), |i| {
        u_high2.get(i).min(v_high2.get(i)) - c0 * delta
    });
    certs.push(BoundCertificate::exact("upper_floor_at_2lambda", m, at));

    // u_high <= c2 lambda^(sigma_bar / (p- - 1)), fitted at lambda, checked at 2 lambda
    for (name, key, high, high2, m) in [
        ("u_high_growth", "c2_u", &u_high, &u_high2, pm),
        ("v_high_growth", "c2_v", &v_high, &v_high2, qm),
    ] {
        let rate = sigma_bar / (m - 1.0);
        let c2 = high.max() / math::powf(lambda, rate);
        constants.insert(key.to_string(), c2);
        certs.push(growth_certificate(
            name,
            c2,
            2.0 * lambda,
            high2.max(),
            rate,
        ));
    }

    certs.push(ordering_certificate("ordering_u", &u_low, &u_high)?);
    certs.push(ordering_certificate("ordering_v", &v_low, &v_high)?);
    certs.push(positivity_certificate("positivity", &[&u_low, &v_low]));

    // f increases in the other component, so the sub inequalities are
    // tightest against the lower pair and the super ones against the upper
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
        for name in ["lemma_L3_sub_u", "lemma_L3_sub_v"] {
            certs.push(BoundCertificate::failed(name, "lower pair is not positive"));
        }
    } else {
        certs.push(weak_certificate(
            "lemma_L3_sub_u",
            &ex.p,
            &u_low,
            &f(&u_low, &v_low)?,
            false,
        )?);
        certs.push(weak_certificate(
            "lemma_L3_sub_v",
            &ex.q,
            &v_low,
            &g(&u_low, &v_low)?,
            false,
        )?);
    }
    certs.push(weak_certificate(
        "lemma_L3_super_u",
        &ex.p,
        &u_high,
        &f(&u_high, &v_high)?,
        true,
    )?);
    certs.push(weak_certificate(
        "lemma_L3_super_v",
        &ex.q,
        &v_high,
        &g(&u_high, &v_high)?,
        true,
    )?);

    constants.insert("sigma_bar_bound".to_string(), bound);
    Ok(Bracket {
        mode: Mode::Cooperative,
        u_low,
        v_low,
        u_high,
        v_high,
        lambda,
        sigma: spec.sigma,
        sigma_bar: Some(sigma_bar),
        delta,
        certificates: certs,
        constants,
        w1,
        w2,
    })
}
