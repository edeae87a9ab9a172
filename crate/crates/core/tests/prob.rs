use explab::prob::{
    binary_divergence, entropy, enumerate_joint_types, kl, kl_to_channel, mutual_information,
    mutual_information_via_kl, parse_channel, parse_dist, quantize_to_type,
};
use explab::{eval_metric, metric_gap, Dist, Dmc, JointDist, MetricSpec, TypeDist};
use proptest::prelude::*;

// Reference values, computed independently with 50-digit decimal arithmetic.
const H_09: f64 = 0.325_082_973_391_448_3;
const D_05_09: f64 = 0.510_825_623_765_990_7;
const I_BSC01: f64 = 0.368_064_207_168_497_07;
const D_02_01: f64 = 0.044_403_007_586_882_3;
// g(P) − g(Q×P_Y) for the matched BSC(0.1) metric at P = Q·W: ln(10/3) − H(0.9).
const GAP_BSC01: f64 = 0.878_889_830_934_487_9;

fn joint_strategy(nx: usize, ny: usize) -> impl Strategy<Value = JointDist> {
    prop::collection::vec(0.0f64..1.0, nx * ny).prop_filter_map("nonzero mass", move |w| {
        let z: f64 = w.iter().sum();
        (z > 1e-3).then(|| JointDist::new(nx, ny, w.iter().map(|v| v / z).collect()).unwrap())
    })
}

fn dist_strategy(k: usize) -> impl Strategy<Value = Dist> {
    prop::collection::vec(0.001f64..1.0, k).prop_map(|w| {
        let z: f64 = w.iter().sum();
        Dist::new(w.iter().map(|v| v / z).collect()).unwrap()
    })
}

#[test]
fn scalar_reference_values() {
    let d = Dist::new(vec![0.9, 0.1]).unwrap();
    assert!((entropy(&d) - H_09).abs() < 1e-15);
    let p = Dist::new(vec![0.5, 0.5]).unwrap();
    assert!((kl(&p, &d).unwrap() - D_05_09).abs() < 1e-15);
    assert!((binary_divergence(0.5, 0.1) - D_05_09).abs() < 1e-15);
    let q = Dist::uniform(2).unwrap();
    let j = JointDist::through_channel(&q, &Dmc::bsc(0.1).unwrap()).unwrap();
    assert!((mutual_information(&j) - I_BSC01).abs() < 1e-15);
    assert!((I_BSC01 - (std::f64::consts::LN_2 - H_09)).abs() < 1e-15);
    let pv = JointDist::through_channel(&q, &Dmc::bsc(0.2).unwrap()).unwrap();
    let direct = kl_to_channel(&pv, &q, &Dmc::bsc(0.1).unwrap()).unwrap();
    assert!((direct - D_02_01).abs() < 1e-15);
    assert!((binary_divergence(0.2, 0.1) - D_02_01).abs() < 1e-15);
}

#[test]
fn divergence_edges() {
    let a = Dist::new(vec![1.0, 0.0]).unwrap();
    let u = Dist::uniform(2).unwrap();
    assert!((kl(&a, &u).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(kl(&u, &a).unwrap(), f64::INFINITY);
    assert!(kl(&u, &Dist::uniform(3).unwrap()).is_err());
    assert!((binary_divergence(1.0, 0.3) + 0.3f64.ln()).abs() < 1e-15);
    assert_eq!(binary_divergence(0.4, 0.4), 0.0);
    assert_eq!(binary_divergence(0.4, 0.0), f64::INFINITY);
    // Mass on a zero of W.
    let p = JointDist::new(2, 2, vec![0.25; 4]).unwrap();
    assert_eq!(kl_to_channel(&p, &u, &Dmc::noiseless(2).unwrap()).unwrap(), f64::INFINITY);
}

#[test]
fn type_enumeration_counts() {
    let single: Vec<_> = enumerate_joint_types(1, 2, 2, None, None).unwrap().collect();
    assert_eq!(
        single.iter().map(|t| t.counts().to_vec()).collect::<Vec<_>>(),
        vec![vec![0, 2], vec![1, 1], vec![2, 0]]
    );
    assert_eq!(enumerate_joint_types(2, 2, 2, None, None).unwrap().count(), 10);
    let half = TypeDist::from_counts(vec![2, 2]).unwrap();
    assert_eq!(enumerate_joint_types(2, 2, 4, Some(&half), Some(&half)).unwrap().count(), 3);
    let bad = TypeDist::from_counts(vec![3, 2]).unwrap();
    assert_eq!(enumerate_joint_types(2, 2, 4, Some(&bad), None).unwrap().count(), 0);
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Every `nx × ny` nonnegative integer table with total `n`, by brute force.
fn brute_tables(nx: usize, ny: usize, n: u64) -> Vec<Vec<u64>> {
    let cells = nx * ny;
    let mut out = Vec::new();
    let mut cur = vec![0u64; cells];
    fn rec(i: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    out
}

#[test]
fn enumeration_matches_brute_force() {
    for nx in 1..=3usize {
        for ny in 1..=3usize {
            for n in 1..=8u64 {
                let all = brute_tables(nx, ny, n);
                let got: Vec<Vec<u64>> = enumerate_joint_types(nx, ny, n, None, None)
                    .unwrap()
                    .map(|t| t.counts().to_vec())
                    .collect();
                assert_eq!(got.len() as u64, binomial(n + (nx * ny) as u64 - 1, n));
                let mut sorted = all.clone();
                sorted.sort();
                assert_eq!(got, sorted, "{nx}x{ny} n={n}");
                // Both margins fixed, at the margins of a sample table.
                let probe = &all[all.len() / 2];
                let rows: Vec<u64> = (0..nx).map(|x| probe[x * ny..(x + 1) * ny].iter().sum()).collect();
                let cols: Vec<u64> = (0..ny).map(|y| (0..nx).map(|x| probe[x * ny + y]).sum()).collect();
                let want = all
                    .iter()
                    .filter(|t| {
                        (0..nx).all(|x| t[x * ny..(x + 1) * ny].iter().sum::<u64>() == rows[x])
                            && (0..ny).all(|y| (0..nx).map(|x| t[x * ny + y]).sum::<u64>() == cols[y])
                    })
                    .count();
                let rt = TypeDist::from_counts(rows).unwrap();
                let ct = TypeDist::from_counts(cols).unwrap();
                let got = enumerate_joint_types(nx, ny, n, Some(&rt), Some(&ct)).unwrap().count();
                assert_eq!(got, want, "{nx}x{ny} n={n} fixed margins");
            }
        }
    }
}

#[test]
fn quantization_examples() {
    let half = Dist::uniform(2).unwrap();
    assert_eq!(quantize_to_type(&half, 3).unwrap().counts(), &[2, 1]);
    let d = Dist::new(vec![0.3, 0.7]).unwrap();
    assert_eq!(quantize_to_type(&d, 10).unwrap().counts(), &[3, 7]);
    let t = Dist::new(vec![0.25, 0.5, 0.25]).unwrap();
    assert_eq!(quantize_to_type(&t, 8).unwrap().counts(), &[2, 4, 2]);
    let sparse = Dist::new(vec![0.98, 0.01, 0.01]).unwrap();
    assert!(quantize_to_type(&sparse, 2).is_err());
}

#[test]
fn parsing() {
    let w: Dmc = parse_channel("bsc:0.1").unwrap();
    assert_eq!(w, Dmc::bsc(0.1).unwrap());
    let json = r#"{"x_size":2,"y_size":3,"rows":[[0.5,0.25,0.25],[0.0,0.0,1.0]]}"#;
    let v: Dmc = parse_channel(json).unwrap();
    assert_eq!(v.y_size(), 3);
    assert!(parse_channel::<f64>("bsc:1.5").is_err());
    assert!(parse_channel::<f64>(r#"{"x_size":1,"y_size":2,"rows":[[0.5,0.6]]}"#).is_err());
    let u: Dist = parse_dist("uniform", 4).unwrap();
    assert_eq!(u.probs(), &[0.25; 4]);
}

#[test]
fn metric_reference_values() {
    let q = Dist::uniform(2).unwrap();
    let w = Dmc::bsc(0.1).unwrap();
    let p = JointDist::through_channel(&q, &w).unwrap();
    let matched = MetricSpec::Matched(w.clone());
    assert!((eval_metric(&matched, &p).unwrap() + H_09).abs() < 1e-15);
    let indep = p.independent_coupling();
    assert!((metric_gap(&matched, &p, &indep).unwrap() - GAP_BSC01).abs() < 1e-15);
    assert_eq!(eval_metric(&MetricSpec::Mmi, &indep).unwrap(), 0.0);
    assert_eq!(eval_metric(&MetricSpec::Constant(0.0), &p).unwrap(), 0.0);
    assert_eq!(metric_gap(&MetricSpec::Constant(2.5), &p, &indep).unwrap(), 0.0);
    // Mass on a zero of the metric channel.
    let hard = MetricSpec::Mismatched(Dmc::noiseless(2).unwrap());
    assert_eq!(eval_metric(&hard, &indep).unwrap(), f64::NEG_INFINITY);
    assert!(metric_gap(&hard, &indep, &indep).is_err());
}

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_on_diagonal(p in dist_strategy(4), q in dist_strategy(4)) {
        let d = kl(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(kl(&p, &p).unwrap().abs() < 1e-12);
        if d < 1e-12 {
            for (a, b) in p.probs().iter().zip(q.probs()) {
                prop_assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn mutual_information_two_paths(p in joint_strategy(3, 2)) {
        let a = mutual_information(&p);
        prop_assert!((a - mutual_information_via_kl(&p)).abs() < 1e-12);
        let prod = p.independent_coupling();
        prop_assert!((a - kl(&p, &prod).unwrap()).abs() < 1e-12);
        prop_assert!(a <= entropy(&p.x_marginal()).min(entropy(&p.y_marginal())) + 1e-12);
    }

    #[test]
    fn quantization_contract(p in dist_strategy(5), n in 5u64..200) {
        let t = match quantize_to_type(&p, n) {
            Ok(t) => t,
            Err(_) => {
                // Any valid type needs c_i ≥ max(1, ⌊n p_i⌋); refusal must mean these overflow n.
                let need: u64 = p.probs().iter().map(|&v| ((v * n as f64).floor() as u64).max(1)).sum();
                prop_assert!(need > n);
                return Ok(());
            }
        };
        prop_assert_eq!(t.denominator(), n);
        for (&c, &v) in t.counts().iter().zip(p.probs()) {
            prop_assert!((c as f64 / n as f64 - v).abs() <= 1.0 / n as f64 + 1e-15);
            prop_assert!(c > 0);
        }
    }

    #[test]
    fn matched_metric_through_its_channel(q in dist_strategy(2), t in 0.0f64..1.0) {
        let w = Dmc::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let g = MetricSpec::Matched(w.clone());
        let p = JointDist::through_channel(&q, &w).unwrap();
        let lhs = eval_metric(&g, &p).unwrap();
        prop_assert!((lhs - (mutual_information(&p) - entropy(&p.y_marginal()))).abs() < 1e-12);
        // The MMI gap is the information gap for any pair.
        let ind = p.independent_coupling();
        let mixed: Vec<f64> = p.probs().iter().zip(ind.probs()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let pt = JointDist::new(2, 3, mixed).unwrap();
        let mmi = metric_gap(&MetricSpec::Mmi, &p, &pt).unwrap();
        prop_assert!((mmi - (mutual_information(&p) - mutual_information(&pt))).abs() < 1e-12);
    }
}
