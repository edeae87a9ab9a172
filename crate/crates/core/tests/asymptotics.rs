mod common;

use common::*;
use explab::asymptotics::*;
use explab::prob::{enumerate_joint_types, mutual_information};
use explab::*;
use proptest::prelude::*;

#[test]
fn tail_against_exact_rational_sum() {
    let exact = binomial_tail_exact(20, 3, 10, 10.0);
    let v = binomial_tail_prob(20, 0.3, 10.0);
    assert!(((v - exact) / exact).abs() < 1e-12, "{v} vs {exact}");
    for (m, num, den, t) in [(50, 1, 4, 20.0), (200, 1, 2, 130.5), (120, 7, 10, 60.0), (300, 1, 100, 9.0)] {
        let exact = binomial_tail_exact(m, num, den, t);
        let v = binomial_tail_prob(m, num as f64 / den as f64, t);
        assert!(((v - exact) / exact).abs() < 1e-11, "m={m} t={t}: {v} vs {exact}");
    }
    assert_eq!(binomial_tail_prob(30, 0.4, 0.0), 1.0);
    assert_eq!(binomial_tail_prob(30, 0.4, 30.5), 0.0);
}

#[test]
fn integral_exponent_converges() {
    let closed: f64 = integral_exponent_closed_form(&IntegralParams { a: 0.2, b: 0.5, c: 0.3, l: 1, n: 1 });
    assert!((closed - 0.6).abs() < 1e-15);
    let gaps: Vec<f64> = [50, 100, 200]
        .iter()
        .map(|&n| {
            let v = integral_exponent_numeric(&IntegralParams { a: 0.2, b: 0.5, c: 0.3, l: 1, n }).unwrap();
            (v - closed).abs()
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.05);
    // e^{50} trials exceed the 2^63 − 1 cap and are refused, not approximated.
    let big = IntegralParams { a: 0.5, b: 0.2, c: 0.4, l: 2, n: 100 };
    assert!(matches!(integral_exponent_numeric(&big), Err(Error::ResourceCap(_))));
    let certain = IntegralParams { a: 0.0, b: 0.0, c: -1.0, l: 2, n: 100 };
    assert!((integral_exponent_numeric(&certain).unwrap() - 200f64.ln() / 100.0).abs() < 1e-12);
}

#[test]
fn atom_sum_agrees_with_quadrature() {
    for (a, b, c, l, n) in [(0.1, 0.2, 0.1, 1, 40), (0.15, 0.05, 0.2, 3, 30), (0.05, 0.3, 0.2, 2, 60)] {
        let atoms = log_integral(a, b, c, l, n).unwrap();
        let quad = integral_by_quadrature(a, b, c, l, n, 1e-9 * atoms.exp()).unwrap().ln();
        assert!((atoms - quad).abs() < 1e-6, "{atoms} vs {quad}");
    }
}

#[test]
fn closed_form_examples() {
    let f = |a: f64, b: f64, c: f64, l| integral_exponent_closed_form(&IntegralParams { a, b, c, l, n: 1 });
    assert_eq!(f(1.0, 0.0, 0.5, 2), 0.0);
    assert!((f(0.0, 0.0, 0.4, 3) - 1.2).abs() < 1e-15);
    let t = |r: f64, i: f64, c: f64| binomial_tail_exponent(&TailQuery { rate: r, information: i, threshold: c });
    assert_eq!(t(0.5, 0.2, 0.1), 0.0);
    assert!((t(0.2, 0.5, 0.0) - 0.3).abs() < 1e-15);
    assert_eq!(t(0.2, 0.5, 0.1), f64::INFINITY);
}

#[test]
fn xi_star_and_lambert() {
    let xi = xi_star(10.0).unwrap();
    assert!(xi >= 1.0 - 10f64.ln() / 10.0 && xi <= 10.0 / 11.0);
    assert!((xi.powi(10) + xi - 1.0).abs() < 1e-13);
    assert!((xi_star(2.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    assert!(xi_star(0.5).is_err());
    assert!(xi_star(1e9).unwrap() > 0.999_999);
    assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
    assert!(lambert_w0(10.0).unwrap() <= 10f64.ln());
    assert!(lambert_w0(-1.0).is_err());
}

#[test]
fn xl_lemma_on_nine_atoms() {
    let atoms: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let weights = vec![1.0 / 9.0; 9];
    let (lhs, rhs) = verify_xl_lemma(&atoms, &weights, 5).unwrap();
    let direct_lhs: f64 = atoms.iter().map(|a| a.powi(5)).sum::<f64>() / 9.0;
    let mean = 0.5;
    let direct_rhs = (0..=10_000)
        .map(|k| {
            let xi = k as f64 * 1e-4;
            xi.powi(4) * mean + atoms.iter().filter(|&&a| a > xi).count() as f64 / 9.0
        })
        .fold(f64::INFINITY, f64::min);
    assert!((lhs - direct_lhs).abs() < 1e-15);
    assert!((rhs - direct_rhs).abs() < 1e-12);
    assert!(rhs - lhs > 0.01);
}

#[test]
fn e_hat_b_against_type_grid() {
    let cfg = SolverConfig::default();
    let u = Dist::uniform(2).unwrap();
    let half = TypeDist::from_counts(vec![100, 100]).unwrap();
    for g in [MetricSpec::Mismatched(Dmc::bsc(0.2).unwrap()), MetricSpec::Matched(Dmc::bsc(0.1).unwrap())] {
        let grid = enumerate_joint_types(2, 2, 200, Some(&half), Some(&half))
            .unwrap()
            .map(|t| {
                let p: JointDist = t.to_joint();
                mutual_information(&p) - eval_metric(&g, &p).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let v = e_hat_b(&u, &u, &g, &cfg).unwrap();
        assert!(v <= grid + 1e-12 && grid - v < 1e-3, "{v} vs {grid}");
    }
    let py = Dist::new(vec![0.3, 0.7]).unwrap();
    assert_eq!(e_hat_b(&u, &py, &MetricSpec::Mmi, &cfg).unwrap(), 0.0);
}

fn joint2() -> impl Strategy<Value = J> {
    prop::collection::vec(0.01f64..1.0, 4).prop_map(|v| {
        let z: f64 = v.iter().sum();
        [v[0] / z, v[1] / z, v[2] / z, v[3] / z]
    })
}

proptest! {
    #[test]
    fn e_hat_a_matches_restated_formula(p in joint2(), pt in joint2(), r in 0.0f64..0.5, l in 1u32..6, va in 0.05f64..0.5, vb in 0.05f64..0.5) {
        let v = [1.0 - va, va, vb, 1.0 - vb];
        let to_joint = |j: &J| JointDist::new(2, 2, j.to_vec()).unwrap();
        let chan = Dmc::from_rows(&[vec![v[0], v[1]], vec![v[2], v[3]]]).unwrap();
        for (lib, oracle) in [
            (MetricSpec::Mismatched(chan), Metric::Additive(v)),
            (MetricSpec::Mmi, Metric::Mmi),
            (MetricSpec::Constant(0.7), Metric::Constant(0.7)),
        ] {
            let got = explab::asymptotics::e_hat_a(&to_joint(&p), &to_joint(&pt), r, l, &lib).unwrap();
            let want = common::e_hat_a(&p, &pt, r, l as f64, &oracle);
            prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
        }
    }

    #[test]
    fn tail_matches_rational_sum(m in 1u64..120, num in 1i64..20, t in -2.0f64..130.0) {
        let p = num as f64 / 20.0;
        let exact = binomial_tail_exact(m, num, 20, t);
        let v = binomial_tail_prob(m, p, t);
        if exact > 1e-290 {
            prop_assert!(((v - exact) / exact).abs() < 1e-11, "{} vs {}", v, exact);
        } else {
            prop_assert!(v < 1e-280);
        }
    }

    #[test]
    fn chernoff_upper_bound(m in 1u64..400, p in 0.01f64..0.99, s in 0.0f64..1.0) {
        let r = p + (1.0 - p) * s;
        let lt = log_tail(m, p, r * m as f64);
        prop_assert!(lt <= -(m as f64) * explab::prob::binary_divergence(r, p) + 1e-12);
    }

    #[test]
    fn unit_list_closed_form(a in 0.0f64..2.0, b in 0.0f64..2.0, c in -2.0f64..2.0) {
        let v = integral_exponent_closed_form(&IntegralParams { a, b, c, l: 1, n: 1 });
        prop_assert!((v - (b - a + c.max(0.0)).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn xi_star_increasing(l in 1.0f64..1e6, step in 0.01f64..100.0) {
        let a = xi_star(l).unwrap();
        let b = xi_star(l + step).unwrap();
        prop_assert!(b > a);
        prop_assert!(a <= l / (l + 1.0) + 1e-15);
    }

    #[test]
    fn xl_lemma_random(atoms in prop::collection::vec(0.0f64..=1.0, 1..8), l in 1u32..17) {
        let w = vec![1.0 / atoms.len() as f64; atoms.len()];
        let (lhs, rhs) = verify_xl_lemma(&atoms, &w, l).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }
}
