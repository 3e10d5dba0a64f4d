use super::*;
use crate::expr::parse;
use crate::grid::{build_grid, Domain, SourcePart};
use crate::rng::Rng;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn unit(n: usize) -> Arc<Grid> {
    build_grid(Domain::Interval { a: 0.0, b: 1.0 }, n).unwrap()
}

fn constant_problem(g: &Arc<Grid>, p: f64, h: f64) -> PlapProblem {
    PlapProblem::smooth(Field::constant(g, p), Field::constant(g, h)).unwrap()
}

// independent oracle: -(|u'|^(p-2) u')' = 1 integrates to |u'|^(p-2) u' = 1/2 - x
fn oracle(p: f64, x: f64) -> f64 {
    let k = 1.0 / (p - 1.0);
    let a = 0.5f64.powf(k + 1.0) / (k + 1.0);
    a - (0.5 - x).abs().powf(k + 1.0) / (k + 1.0)
}

#[test]
fn oracle_values() {
    assert_abs_diff_eq!(oracle(3.0, 0.5), 0.235_702, epsilon = 1e-6);
    assert_abs_diff_eq!(oracle(1.5, 0.5), 0.041_667, epsilon = 1e-6);
    assert_abs_diff_eq!(oracle(2.0, 0.5), 0.125, epsilon = 1e-15);
    for &x in &[0.1, 0.37, 0.5, 0.8] {
        assert_abs_diff_eq!(
            closed_form_unit_load(2.5, x),
            oracle(2.5, x),
            epsilon = 1e-14
        );
    }
}

#[test]
fn energy_of_zero_field_is_negligible() {
    let g = unit(65);
    let prob = constant_problem(&g, 2.0, 0.0);
    let j = energy(&prob, &Field::zeros(&g), &SolverConfig::default()).unwrap();
    assert!(j.abs() <= 1e-16, "{j}");
}

#[test]
fn energy_of_quadratic_minimizer() {
    // -1/24 + h^2/24 at h = 0.1
    let g = unit(11);
    let prob = constant_problem(&g, 2.0, 1.0);
    let u = Field::from_fn(&g, |_, x, _, _| x * (1.0 - x) / 2.0);
    let cfg = SolverConfig {
        eps_reg: 0.0,
        ..SolverConfig::default()
    };
    assert_abs_diff_eq!(energy(&prob, &u, &cfg).unwrap(), -0.04125, epsilon = 1e-14);
}

#[test]
fn linear_case_at_centre() {
    let g = unit(1025);
    let (u, rep) = solve_dirichlet(
        &constant_problem(&g, 2.0, 1.0),
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    assert_abs_diff_eq!(u.get(512), 0.125, epsilon = 2e-3);
    assert!(rep.grad_sup <= 1e-10);
    assert_eq!(u.get(0), 0.0);
    assert_eq!(u.get(1024), 0.0);
}

#[test]
fn constant_p_closed_form_maxima() {
    let g = unit(1025);
    for (p, expected) in [(3.0, 0.235_702), (1.5, 0.041_667)] {
        let (u, rep) = solve_dirichlet(
            &constant_problem(&g, p, 1.0),
            &SolverConfig::default(),
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(u.max(), expected, epsilon = 2e-3);
        assert!(rep.grad_sup <= 1e-10, "p = {p}: {rep:?}");
    }
}

#[test]
fn energy_decreases_every_accepted_step() {
    let g = unit(257);
    let p = parse("2.2 + 0.3*x").unwrap().eval_on_grid(&g).unwrap();
    let prob = PlapProblem::smooth(p, Field::constant(&g, 1.0)).unwrap();
    let (_, rep) =
        solve_dirichlet(&prob, &SolverConfig::default(), Some(&Field::zeros(&g))).unwrap();
    for w in rep.energy_history.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-14 * w[0].abs(),
            "{:?}",
            rep.energy_history
        );
    }
}

#[test]
fn converged_solution_has_small_weak_residual() {
    let g = unit(257);
    let tol = SolverConfig::default().tol;
    for p in [2.0, 3.0] {
        let prob = constant_problem(&g, p, 1.0);
        let (u, rep) = solve_dirichlet(&prob, &SolverConfig::default(), None).unwrap();
        assert!(
            rep.weak_residual <= 10.0 * tol,
            "p = {p}: {}",
            rep.weak_residual
        );
        let tests = default_test_fields(&g, 1);
        assert!(weak_residual(&prob, &u, &tests).unwrap() <= 10.0 * tol);
    }
}

#[test]
fn zero_field_is_not_a_solution() {
    let g = unit(129);
    let prob = constant_problem(&g, 2.0, 1.0);
    let tests = default_test_fields(&g, 3);
    let r = weak_residual(&prob, &Field::zeros(&g), &tests).unwrap();
    // oracle: max over tests of int phi / (1 + sup |phi'|), computed directly
    let mass = crate::grid::lumped_mass(&g);
    let expected = tests
        .iter()
        .map(|phi| {
            let int: f64 = phi.values().iter().zip(&mass).map(|(a, b)| a * b).sum();
            let slope = phi
                .values()
                .windows(2)
                .fold(0.0f64, |m, w| m.max(((w[1] - w[0]) / g.h()).abs()));
            int / (1.0 + slope)
        })
        .fold(0.0f64, f64::max);
    assert!(r > 0.0);
    assert_abs_diff_eq!(r, expected, epsilon = 1e-12);
}

#[test]
fn sampled_closed_form_residual_is_first_order() {
    let mut last = f64::INFINITY;
    let mut residuals = Vec::new();
    for n in [65, 129, 257, 513] {
        let g = unit(n);
        let prob = constant_problem(&g, 3.0, 1.0);
        let u = Field::from_fn(&g, |_, x, _, _| oracle(3.0, x));
        let r = weak_residual(&prob, &u, &default_test_fields(&g, 0)).unwrap();
        assert!(r < last, "{residuals:?} then {r}");
        residuals.push(r);
        last = r;
    }
    // residual ratio per halving is at least 2^0.9
    for w in residuals.windows(2) {
        assert!(w[0] / w[1] >= 2f64.powf(0.9), "{residuals:?}");
    }
}

#[test]
fn homogeneity_in_the_load() {
    let g = unit(257);
    let cfg = SolverConfig::default();
    for p in [1.5, 2.0, 3.0] {
        let (u1, _) = solve_dirichlet(&constant_problem(&g, p, 1.0), &cfg, None).unwrap();
        for t in [2.0f64, 10.0] {
            let (ut, _) =
                solve_dirichlet(&constant_problem(&g, p, t.powf(p - 1.0)), &cfg, None).unwrap();
            let rel = ut.sup_diff(&u1.scaled(t)).unwrap() / (t * u1.sup_abs());
            assert!(rel <= 1e-6, "p = {p}, t = {t}: {rel}");
        }
    }
}

#[test]
fn unique_minimizer_from_different_starts() {
    let g = unit(257);
    let p = parse("2.5 + 0.2*sin(pi*x)")
        .unwrap()
        .eval_on_grid(&g)
        .unwrap();
    let prob = PlapProblem::smooth(p, Field::constant(&g, 1.0)).unwrap();
    let cfg = SolverConfig::default();
    let (a, _) = solve_dirichlet(&prob, &cfg, Some(&Field::zeros(&g))).unwrap();
    let mut rng = Rng::new(11);
    let noise = Field::from_fn(&g, |_, _, _, _| rng.range(0.0, 1.0));
    let (b, _) = solve_dirichlet(&prob, &cfg, Some(&noise)).unwrap();
    assert!(a.sup_diff(&b).unwrap() <= 1e-8);
}

#[test]
fn lemma_l1_bound_is_stable_under_refinement() {
    // h = d^-gamma with gamma = 0.3 / N, N = 1
    let sup = |n: usize| {
        let g = unit(n);
        let part = SourcePart::power(Field::constant(&g, 1.0), Field::constant(&g, -0.3));
        let prob = PlapProblem::new(Field::constant(&g, 2.0), Source::single(part)).unwrap();
        solve_dirichlet(&prob, &SolverConfig::default(), None)
            .unwrap()
            .1
            .linf
    };
    let (coarse, fine) = (sup(257), sup(513));
    assert!(
        fine / coarse <= 1.05 && coarse / fine <= 1.05,
        "{coarse} {fine}"
    );
}

#[test]
fn comparison_examples() {
    let g = unit(257);
    let cfg = SolverConfig::default();
    let one = constant_problem(&g, 2.0, 1.0);
    let two = constant_problem(&g, 2.0, 2.0);
    let cert = comparison_check(&one, &two, &cfg).unwrap();
    let (u1, _) = solve_dirichlet(&one, &cfg, None).unwrap();
    assert!(cert.satisfied);
    assert_abs_diff_eq!(cert.margin, u1.min(), epsilon = 1e-12);

    let same = comparison_check(&one, &one, &cfg).unwrap();
    assert!(same.satisfied);
    assert!(same.margin.abs() <= 1e-12);

    assert!(comparison_check(&two, &one, &cfg).is_err());

    let p = Field::constant(&g, 2.5);
    let smooth = PlapProblem::smooth(p.clone(), Field::constant(&g, 1.0)).unwrap();
    let singular = PlapProblem::new(
        p.clone(),
        Source::new()
            .with(SourcePart::smooth(Field::constant(&g, 1.0)))
            .with(SourcePart::power(
                Field::constant(&g, 1.0),
                Field::constant(&g, -0.3),
            )),
    )
    .unwrap();
    assert!(
        comparison_check(&smooth, &singular, &cfg)
            .unwrap()
            .satisfied
    );
}

#[test]
fn inactive_penalty_changes_nothing() {
    let g = unit(129);
    let cfg = SolverConfig::default();
    let base = constant_problem(&g, 2.5, 1.0);
    let (u, _) = solve_dirichlet(&base, &cfg, None).unwrap();
    let pen = base
        .clone()
        .with_penalty(Penalty {
            coeff: Field::constant(&g, 3.0),
            threshold: Field::constant(&g, 100.0),
        })
        .unwrap();
    let (v, _) = solve_dirichlet(&pen, &cfg, None).unwrap();
    assert!(u.sup_diff(&v).unwrap() <= 1e-10);
}

#[test]
fn active_penalty_lowers_the_solution_and_solves_its_equation() {
    let g = unit(129);
    let cfg = SolverConfig::default();
    let base = constant_problem(&g, 2.0, 1.0);
    let (u, _) = solve_dirichlet(&base, &cfg, None).unwrap();
    let pen = base
        .clone()
        .with_penalty(Penalty {
            coeff: Field::constant(&g, 50.0),
            threshold: Field::constant(&g, 0.05),
        })
        .unwrap();
    let (v, rep) = solve_dirichlet(&pen, &cfg, None).unwrap();
    assert!(v.max() < u.max());
    // -v'' + 50 (v - 0.05)^+ = 1 at the centre, discretely with lumped mass
    let r = residual_vector(&pen, &v).unwrap();
    assert!(r.iter().all(|x| x.abs() <= 1e-10), "{}", rep.grad_sup);
}

#[test]
fn two_dimensional_poisson_is_symmetric_and_accurate() {
    let g = build_grid(
        Domain::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        },
        33,
    )
    .unwrap();
    let (u, _) = solve_dirichlet(
        &constant_problem(&g, 2.0, 1.0),
        &SolverConfig::default(),
        None,
    )
    .unwrap();
    let n = g.n();
    for iy in 0..n {
        for ix in 0..n {
            let a = u.get(iy * n + ix);
            assert!((a - u.get(ix * n + iy)).abs() < 1e-12);
            assert!((a - u.get(iy * n + (n - 1 - ix))).abs() < 1e-12);
        }
    }
    // series value of the torsion function at the centre of the unit square
    assert_abs_diff_eq!(u.get(16 * n + 16), 0.073_671, epsilon = 5e-4);
}

#[test]
fn rejects_bad_exponent() {
    let g = unit(9);
    assert!(matches!(
        PlapProblem::smooth(Field::constant(&g, 1.0), Field::constant(&g, 1.0)),
        Err(Error::ExponentRange(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn symmetric_data_gives_symmetric_solution(a in 0.0f64..0.5, b in 1.8f64..3.0, c in 0.5f64..2.0) {
        let g = unit(129);
        let p = Field::from_fn(&g, |_, x, _, _| b + a * (core::f64::consts::PI * x).sin());
        let h = Field::from_fn(&g, |_, x, _, _| c + (x - 0.5).powi(2));
        let (u, _) = solve_dirichlet(&PlapProblem::smooth(p, h).unwrap(), &SolverConfig::default(), None).unwrap();
        let v = u.values();
        for i in 0..v.len() {
            prop_assert!((v[i] - v[v.len() - 1 - i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn solution_minimizes_energy(seed in 0u64..1000, size in 1e-6f64..1e-1) {
        let g = unit(65);
        let prob = constant_problem(&g, 2.7, 1.0);
        let cfg = SolverConfig::default();
        let (u, rep) = solve_dirichlet(&prob, &cfg, None).unwrap();
        let mut rng = Rng::new(seed);
        let w = Field::from_fn(&g, |_, _, _, _| size * rng.range(-1.0, 1.0)).with_zero_boundary();
        let other = u.zip_map(&w, |a, b| a + b).unwrap();
        prop_assert!(energy(&prob, &other, &cfg).unwrap() >= rep.final_energy);
    }
}
