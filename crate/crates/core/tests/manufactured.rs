use proptest::prelude::*;
use specsolve_core::cheb::{adaptive_approx, cc_integrate, cheb_points};
use specsolve_core::collocation::{solve_collocation, CollocationOptions};
use specsolve_core::prelude::*;

fn constraints_for(m: usize) -> ConstraintSet {
    let f = match m {
        1 => vec![ConstraintFunctional::dirichlet(-1.0)],
        2 => vec![ConstraintFunctional::dirichlet(-1.0), ConstraintFunctional::dirichlet(1.0)],
        _ => vec![
            ConstraintFunctional::dirichlet(-1.0),
            ConstraintFunctional::dirichlet(1.0),
            ConstraintFunctional::neumann(1.0),
        ],
    };
    ConstraintSet::new(f)
}

/// Problem whose exact solution is `u`: the rhs is `L u` and the constraint
/// values are `B u`.
fn manufactured(coeffs: Vec<ChebSeries>, u: &ChebSeries) -> OdeProblem {
    let set = constraints_for(coeffs.len());
    let m = coeffs.len();
    let homogeneous = OdeProblem::new(coeffs, ChebSeries::zero(), set.clone(), vec![0.0; m]).unwrap();
    let rhs = homogeneous.residual_series(u).unwrap();
    homogeneous.with_rhs(rhs, set.apply(u.coeffs())).unwrap()
}

fn max_deviation(a: &ChebSeries, b: &ChebSeries) -> f64 {
    (0..=200)
        .map(|i| -1.0 + i as f64 / 100.0)
        .map(|x| (a.eval(x).unwrap() - b.eval(x).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn problem_data() -> impl Strategy<Value = (Vec<ChebSeries>, ChebSeries)> {
    (1usize..=3).prop_flat_map(|m| {
        let coeff = prop::collection::vec(-0.2f64..0.2, 1..5)
            .prop_map(|c| ChebSeries::chebyshev(c).unwrap());
        let u = prop::collection::vec(-1.0f64..1.0, 24).prop_map(|c| {
            let scaled = c.iter().enumerate().map(|(j, v)| v * 0.5f64.powi(j as i32)).collect();
            ChebSeries::chebyshev(scaled).unwrap()
        });
        (prop::collection::vec(coeff, m), u)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_method_recovers_manufactured_solution((coeffs, u) in problem_data()) {
        let p = manufactured(coeffs, &u);
        let n = 64;
        let cs = solve_cs(&p, &CsOptions::fixed(n)).unwrap().u;
        prop_assert!(max_deviation(&cs, &u) < 1e-12, "cs {}", max_deviation(&cs, &u));
        for variant in [UsVariant::Plain, UsVariant::Preconditioned] {
            let us = solve_us(&p, &UsOptions::fixed(n, variant)).unwrap().u;
            prop_assert!(max_deviation(&us, &u) < 1e-11, "{:?} {}", variant, max_deviation(&us, &u));
        }
        let colloc = solve_collocation(&p, &CollocationOptions::new(n - p.order())).unwrap().u;
        prop_assert!(max_deviation(&colloc, &u) < 1e-11, "colloc {}", max_deviation(&colloc, &u));
    }

    #[test]
    fn adaptive_cs_solution_satisfies_constraints((coeffs, u) in problem_data()) {
        let p = manufactured(coeffs, &u);
        let sol = solve_cs(&p, &CsOptions::adaptive()).unwrap();
        let got = p.constraints().apply(sol.u.coeffs());
        for (g, want) in got.iter().zip(p.targets()) {
            prop_assert!((g - want).abs() < 1e-12, "{} vs {}", g, want);
        }
        let r = p.residual_series(&sol.u).unwrap();
        prop_assert!(r.l1_norm() < 1e-11, "residual {}", r.l1_norm());
    }
}

/// `I_k(1)` by its power series.
fn bessel_i(k: usize) -> f64 {
    let mut term = 0.5f64.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
    let mut sum = 0.0;
    for j in 0..40 {
        sum += term;
        term *= 0.25 / ((j + 1) as f64 * (j + 1 + k) as f64);
    }
    sum
}

#[test]
fn exponential_coefficients_are_modified_bessel_values() {
    let s = adaptive_approx(f64::exp, 1e-15).unwrap();
    assert!((13..=18).contains(&s.len()), "length {}", s.len());
    for (k, c) in s.coeffs().iter().enumerate() {
        let want = if k == 0 { bessel_i(0) } else { 2.0 * bessel_i(k) };
        assert!((c - want).abs() < 4e-16, "k={k}: {c} vs {want}");
    }
}

#[test]
fn clenshaw_curtis_integrates_exponential() {
    let grid = cheb_points(32, GridKind::GaussLobatto).unwrap();
    let vals: Vec<f64> = grid.points().iter().map(|x| x.exp()).collect();
    let want = 1f64.exp() - (-1f64).exp();
    assert!((cc_integrate(&vals).unwrap() - want).abs() < 1e-15);
}

#[test]
fn integral_constraint_fixes_mean() {
    // u'' = 6x, u'(1) = 3 + c leaves u = x^3 + c x + d; ∫u = 2d
    let set = ConstraintSet::new(vec![ConstraintFunctional::neumann(1.0), ConstraintFunctional::integral()]);
    let p = OdeProblem::new(
        vec![ChebSeries::zero(), ChebSeries::zero()],
        ChebSeries::chebyshev(vec![0.0, 6.0]).unwrap(),
        set,
        vec![5.0, 1.0],
    )
    .unwrap();
    let u = solve_cs(&p, &CsOptions::fixed(16)).unwrap().u;
    for x in [-1.0, -0.3, 0.0, 0.8] {
        let want = x * x * x + 2.0 * x + 0.5;
        assert!((u.eval(x).unwrap() - want).abs() < 1e-14, "x={x}");
    }
}

#[test]
fn integrated_identity_is_perfectly_conditioned() {
    use specsolve_core::integral::assemble_cs;
    use specsolve_core::solvers::cond2_svd;
    let p = OdeProblem::new(
        vec![ChebSeries::zero()],
        ChebSeries::constant(1.0),
        ConstraintSet::new(vec![ConstraintFunctional::dirichlet(-1.0)]),
        vec![0.0],
    )
    .unwrap();
    for n in [8, 64, 256] {
        let a = assemble_cs(&p, n).unwrap().matrix.to_dense();
        let k = cond2_svd(a.as_ref()).unwrap();
        assert!((k - 1.0).abs() <= 10.0 * f64::EPSILON, "n={n}: {k}");
    }
}

#[test]
fn cs_pattern_is_boundary_block_plus_band() {
    use specsolve_core::integral::assemble_cs;
    use specsolve_core::operators::SparsityPattern;
    // u' + x^3 u: x^3 = (3 T_1 + T_3) / 4
    let p = OdeProblem::new(
        vec![ChebSeries::chebyshev(vec![0.0, 0.75, 0.0, 0.25]).unwrap()],
        ChebSeries::constant(1.0),
        ConstraintSet::new(vec![ConstraintFunctional::dirichlet(-1.0)]),
        vec![0.0],
    )
    .unwrap();
    let n = 50;
    let pat = SparsityPattern::from_almost_banded(&assemble_cs(&p, n).unwrap().matrix, None);
    let mut dense_rows = 0;
    let mut band = 0;
    for i in 0..n {
        let cols: Vec<usize> = (0..n).filter(|&j| pat.is_nonzero(i, j)).collect();
        let spread = cols.iter().map(|&j| j.abs_diff(i)).max().unwrap_or(0);
        if spread > 8 {
            dense_rows = i + 1;
        } else {
            band = band.max(spread);
        }
    }
    assert!(dense_rows <= 4, "dense block height {dense_rows}");
    assert!(band <= 4, "bandwidth {band}");
}
