use nalgebra::DVector;
use proptest::prelude::*;

use dp_conic::apps::{self, PowerNetwork};
use dp_conic::conic::build_simple_lp;
use dp_conic::dp::{calibrate_gaussian, calibrate_laplace, NoiseSpec};
use dp_conic::ldr::{privatize, ChanceSpec, QueryConstraint};
use dp_conic::risk::{cvar_and_var, cvar_empirical};
use dp_conic::SolverSettings;

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cvar_between_mean_and_max(v in losses(), q in 0.0..0.99f64) {
        let c = cvar_empirical(&v, q).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * (1.0 + max.abs());
        prop_assert!(c >= mean - tol && c <= max + tol, "{mean} ≤ {c} ≤ {max}");
    }

    #[test]
    fn cvar_grows_with_q(v in losses(), a in 0.0..0.99f64, b in 0.0..0.99f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let tol = 1e-9 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        prop_assert!(cvar_empirical(&v, lo).unwrap() <= cvar_empirical(&v, hi).unwrap() + tol);
    }

    #[test]
    fn cvar_matches_sorted_tail(v in losses(), k in 1usize..10) {
        // when (1 − q)·S is an integer the estimate is the mean of the top k
        let n = v.len().max(k);
        let v: Vec<f64> = v.iter().cycle().take(n).copied().collect();
        let q = 1.0 - k as f64 / n as f64;
        let mut s = v.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        let top = s[..k].iter().sum::<f64>() / k as f64;
        let r = cvar_and_var(&v, q).unwrap();
        prop_assert!((r.cvar - top).abs() <= 1e-9 * (1.0 + top.abs()), "{} vs {top}", r.cvar);
        prop_assert!(v.contains(&r.var));
    }

    #[test]
    fn cvar_shift_and_scale(v in losses(), q in 0.0..0.95f64, a in 0.1..10.0f64, b in -50.0..50.0f64) {
        let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        let lhs = cvar_empirical(&w, q).unwrap();
        let rhs = a * cvar_empirical(&v, q).unwrap() + b;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()));
    }

    #[test]
    fn laplace_scale(d in 1e-3..1e3f64, eps in 1e-2..10.0f64, k in 1usize..6) {
        let n = calibrate_laplace(d, eps, k).unwrap();
        prop_assert_eq!(n.dim, k);
        prop_assert!((n.scale - d / eps).abs() <= 1e-12 * (d / eps));
    }

    #[test]
    fn gaussian_scale_decreases_in_delta(d in 1e-3..1e3f64, eps in 1e-2..10.0f64, a in 1e-6..0.5f64, b in 1e-6..0.5f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = calibrate_gaussian(d, eps, lo, 1).unwrap().scale;
        let s_hi = calibrate_gaussian(d, eps, hi, 1).unwrap().scale;
        prop_assert!(s_hi <= s_lo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The vertex method enforces every constraint at each corner of the box.
    #[test]
    fn vertex_rule_feasible_on_box(lower in -50.0..50.0f64, width in 40.0..100.0f64, scale in 0.1..2.0f64, seed in 0u64..1000) {
        let lp = build_simple_lp(1.0, lower, lower + width).unwrap();
        let noise = NoiseSpec::laplace(1, scale).unwrap();
        let pv = privatize(&lp, &noise, &QueryConstraint::identity(1), &ChanceSpec::vertex(0.05, 0.01), seed).unwrap();
        let (rule, _) = pv.solve(&SolverSettings::default()).unwrap();
        let corners = pv.vertices.as_ref().unwrap();
        for r in 0..corners.nrows() {
            let x = rule.eval(&corners.row(r).transpose());
            prop_assert!(lp.is_feasible(&x, 1e-6 * (1.0 + width.abs())).unwrap(), "corner {r}: {x}");
        }
    }

    /// The noise increment released by a private OPF rule does not depend on the demand.
    #[test]
    fn release_independent_of_demand(f in prop::collection::vec(0.8..1.0f64, 5), seed in 0u64..50) {
        let base = PowerNetwork::bundled("net5").unwrap();
        let scaled = base.with_demand(base.d.iter().zip(&f).map(|(d, s)| d * s).collect());
        let query = QueryConstraint::Sum { support: vec![0, 1] };
        let noise = calibrate_laplace(3.0, 1.0, 1).unwrap();
        let chance = ChanceSpec::vertex(0.05, 0.01);
        let settings = SolverSettings::default();
        let run = |net: &PowerNetwork| {
            apps::privatize_opf_with(net, apps::Balance::Equality, &noise, &query, &chance, seed, &settings).unwrap()
        };
        let (a, b) = (run(&base), run(&scaled));
        prop_assert_eq!(&a.release.increment, &b.release.increment);
        let zeta = DVector::from_element(1, 1.7);
        let realised = query.value(&b.rule.eval(&zeta)) - query.value(&b.rule.xbar);
        prop_assert!((realised[0] - 1.7).abs() <= 1e-9);
    }
}
