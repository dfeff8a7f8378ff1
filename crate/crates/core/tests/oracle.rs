//! Estimators and survival curves against straightforward re-implementations
//! that use explicit products and powers instead of cumulative log sums.

use censtail::estimators::box_cox;
use censtail::{rank, CensoredSample64, TailSample64};
use proptest::prelude::*;

/// Top-first view: `z[i-1] = Z_{n−i+1:n}`.
struct Top {
    z: Vec<f64>,
    d: Vec<bool>,
}

fn top(sample: &CensoredSample64) -> Top {
    let mut pairs: Vec<(f64, bool)> = sample
        .z()
        .iter()
        .copied()
        .zip(sample.delta().iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.reverse();
    Top {
        z: pairs.iter().map(|p| p.0).collect(),
        d: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `F̄(Z_{n−i:n}) / F̄(Z_{n−k:n})` as an explicit product.
fn ratio(t: &Top, i: usize, k: usize, nelson_aalen: bool) -> f64 {
    let mut r = 1.0;
    for j in i + 1..=k {
        if t.d[j - 1] {
            r *= if nelson_aalen {
                (-1.0 / j as f64).exp()
            } else {
                1.0 - 1.0 / j as f64
            };
        }
    }
    r
}

fn p_hat(t: &Top, k: usize) -> f64 {
    t.d[..k].iter().filter(|&&d| d).count() as f64 / k as f64
}

fn weighted(t: &Top, k: usize, beta: f64, na: bool) -> f64 {
    let a = beta / p_hat(t, k);
    let mut s = 0.0;
    for i in 1..=k {
        if t.d[i - 1] {
            s += ratio(t, i, k, na).powf(a) / i as f64 * (t.z[i - 1] / t.z[k]).ln();
        }
    }
    a * a * s
}

fn bw_stat(t: &Top, k: usize, beta: f64) -> f64 {
    let kappa = |u: f64| {
        if beta == 0.0 {
            u.ln()
        } else {
            (1.0 - u.powf(-beta)) / beta
        }
    };
    (2..=k)
        .map(|i| ratio(t, i, k, false) * (kappa(t.z[i - 1] / t.z[k]) - kappa(t.z[i] / t.z[k])))
        .sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn sample_strategy() -> impl Strategy<Value = CensoredSample64> {
    (6usize..120).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.01f64..1e4, n),
            proptest::collection::vec(proptest::bool::weighted(0.6), n),
        )
            .prop_map(|(z, d)| CensoredSample64::new(z, d).unwrap())
    })
}

proptest! {
    #[test]
    fn survival_curves_match_products(s in sample_strategy()) {
        let r = rank(&s);
        let n = r.n();
        let km = censtail::km_curve(&r).values();
        let na = censtail::na_curve(&r).values();
        let (mut pk, mut pn) = (1.0f64, 1.0f64);
        for m in 1..=n {
            if r.delta_concomitant()[m - 1] {
                pk *= 1.0 - 1.0 / (n - m + 1) as f64;
                pn *= (-1.0 / (n - m + 1) as f64).exp();
            }
            prop_assert!((km[m - 1] - pk).abs() <= 1e-12);
            prop_assert!((na[m - 1] - pn).abs() <= 1e-12);
        }
    }

    #[test]
    fn estimators_match_direct_formulas(s in sample_strategy(), kf in 0.0f64..1.0, beta in 0.3f64..3.0) {
        let tail = TailSample64::from_sample(&s);
        let t = top(&s);
        let n = tail.n();
        let k = 2 + ((n - 3) as f64 * kf) as usize;
        let hill: f64 = (1..=k).map(|i| (t.z[i - 1] / t.z[k]).ln()).sum::<f64>() / k as f64;
        prop_assert!(rel_close(tail.hill(k).unwrap(), hill, 1e-12));
        prop_assert_eq!(tail.p_hat(k).unwrap(), p_hat(&t, k));
        if p_hat(&t, k) > 0.0 {
            prop_assert!(rel_close(tail.efg(k).unwrap(), hill / p_hat(&t, k), 1e-12));
            prop_assert!(rel_close(tail.weighted_na(k, beta).unwrap(), weighted(&t, k, beta, true), 1e-10));
            prop_assert!(rel_close(tail.weighted_km(k, beta).unwrap(), weighted(&t, k, beta, false), 1e-10));
            let mns = weighted(&t, k, p_hat(&t, k), true);
            prop_assert!(rel_close(tail.mns_na(k).unwrap(), mns, 1e-10));
        } else {
            prop_assert!(tail.efg(k).is_err());
            prop_assert!(tail.weighted_na(k, beta).is_err());
        }
        let bw_beta = beta - 1.0;
        let oracle = bw_stat(&t, k, bw_beta);
        let got = tail.bw_statistic(k, bw_beta).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{} vs {}", got, oracle);
    }
}

#[test]
fn hill_ladder() {
    let e = std::f64::consts::E;
    let s = CensoredSample64::new(vec![0.5, 1.0, e, e * e], vec![true; 4]).unwrap();
    assert!((TailSample64::from_sample(&s).hill(2).unwrap() - 1.5).abs() < 1e-15);
}

#[test]
fn box_cox_matches_closed_form() {
    for &u in &[1.0, 1.5, 10.0, 1e6] {
        for &b in &[-0.7, 0.25, 2.0] {
            let direct = (1.0 - f64::powf(u, -b)) / b;
            assert!((box_cox(u, b).unwrap() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
        assert_eq!(box_cox(u, 0.0).unwrap(), f64::ln(u));
    }
}

#[test]
fn bw_with_zero_beta_and_no_censoring_is_hill_type() {
    // κ₀ = log and R_KM(i,k) = i/k; summing by parts gives Hill with the
    // largest observation replaced by the second largest
    let z: Vec<f64> = (1..=40).map(|i| (i as f64).powf(1.3)).collect();
    let s = CensoredSample64::new(z, vec![true; 40]).unwrap();
    let tail = TailSample64::from_sample(&s);
    let t = top(&s);
    let k = 15;
    let direct: f64 = (2..=k)
        .map(|i| i as f64 / k as f64 * (t.z[i - 1] / t.z[i]).ln())
        .sum();
    let hill_tail: f64 = ((2..=k).map(|i| (t.z[i - 1] / t.z[k]).ln()).sum::<f64>()
        + (t.z[1] / t.z[k]).ln())
        / k as f64;
    assert!((tail.bw(k, 0.0).unwrap() - direct).abs() < 1e-12);
    assert!((direct - hill_tail).abs() < 1e-12);
}
