mod common;

use common::oracle;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survmdn::data::{simulate_crossing, SurvivalRecord};
use survmdn::mdn::{MdnConfig, TrainedModel};
use survmdn::metrics::{
    bll, brier, concordance_td, evaluate, integrate_metric, kaplan_meier, km_censoring, MixturePredictor,
    SurvivalPredictor, DEFAULT_LEVELS,
};

/// Small dataset with tied times and a predictor with tied rates.
fn instance(seed: u64, n: usize) -> (Vec<SurvivalRecord>, Vec<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| SurvivalRecord {
            features: vec![0.0],
            time: f64::from(r.random_range(1u8..=5)) * 0.5,
            event: r.random_bool(0.6),
        })
        .collect();
    let rates = (0..n).map(|_| f64::from(r.random_range(1u8..=4)) * 0.3).collect();
    (records, rates)
}

fn km_of(rs: &[SurvivalRecord]) -> survmdn::metrics::KmCurve {
    let t: Vec<f64> = rs.iter().map(|r| r.time).collect();
    let e: Vec<bool> = rs.iter().map(|r| r.event).collect();
    km_censoring(&t, &e).unwrap()
}

#[test]
fn matches_brute_force_on_small_datasets() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 7);
        let (rs, rates) = instance(seed, n);
        let s = |t: f64, j: usize| (-rates[j] * t).exp();
        let km = km_of(&rs);
        for t in [0.25, 0.5, 1.0, 1.3, 2.0, 2.6] {
            assert_eq!(km.value(t), oracle::g_hat(&rs, t, false));
            assert_eq!(km.left_limit(t), oracle::g_hat(&rs, t, true));
            if oracle::g_hat(&rs, t, false) > 0.0 {
                assert!((brier(t, &rs, &s, &km).unwrap() - oracle::brier(&rs, &s, t)).abs() < 1e-12);
                assert!((bll(t, &rs, &s, &km).unwrap() - oracle::bll(&rs, &s, t)).abs() < 1e-12);
            }
        }
        for tau in [1.0, 2.0, 10.0] {
            match oracle::concordance(&rs, &s, tau) {
                Some(c) => assert!((concordance_td(&rs, &s, &km, tau).unwrap() - c).abs() < 1e-12),
                None => assert!(concordance_td(&rs, &s, &km, tau).is_err()),
            }
        }
    }
}

#[test]
fn four_record_mixed_censoring_instance() {
    let rs: Vec<SurvivalRecord> = [(1.0, true), (2.0, false), (3.0, true), (4.0, false)]
        .iter()
        .map(|&(time, event)| SurvivalRecord {
            features: vec![0.0],
            time,
            event,
        })
        .collect();
    let s = [0.3, 0.9, 0.5, 0.5];
    let p = |_t: f64, j: usize| s[j];
    let km = km_of(&rs);
    // pairs: (0,1),(0,2),(0,3) with Ĝ(1⁻)=1; (2,3) with Ĝ(3⁻)=2/3
    let w = 1.0 / (2.0f64 / 3.0).powi(2);
    let want = (3.0 + 0.5 * w) / (3.0 + w);
    let got = concordance_td(&rs, &p, &km, 10.0).unwrap();
    assert!((got - want).abs() < 1e-15);
    assert!((got - oracle::concordance(&rs, &p, 10.0).unwrap()).abs() < 1e-15);
}

#[test]
fn integration_grid_refinement_on_a_trained_like_model() {
    let data = simulate_crossing(300, 3).unwrap();
    let cfg = MdnConfig {
        num_components: 4,
        ..MdnConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mdn = survmdn::mdn::SurvivalMdn::new(1, &cfg, &mut rng).unwrap();
    mdn.perturb_params(&mut rng, 0.1);
    let model = TrainedModel::new(mdn, survmdn::data::Standardizer::identity(1), vec!["x_0".into()]).unwrap();
    let pred = MixturePredictor::new(&model, &data.records).unwrap();
    let km = km_of(&data.records);
    let tau = 1.5;
    let ibs = |g| integrate_metric(|t| brier(t, &data.records, &pred, &km), tau, g).unwrap();
    let ibll = |g| integrate_metric(|t| bll(t, &data.records, &pred, &km), tau, g).unwrap();
    assert!((ibs(100) - ibs(1000)).abs() < 5e-3);
    assert!((ibll(100) - ibll(1000)).abs() < 5e-3);
    let report = evaluate(&data.records, &pred, &DEFAULT_LEVELS, 100).unwrap();
    for l in &report.levels {
        assert!((0.0..=1.0).contains(&l.concordance));
        assert!((0.0..=1.0).contains(&l.ibs));
        assert!(l.ibll <= 0.0);
    }
}

fn arb_instance() -> impl Strategy<Value = (Vec<SurvivalRecord>, Vec<f64>)> {
    (1usize..12, any::<u64>()).prop_map(|(n, seed)| instance(seed, n))
}

proptest! {
    #[test]
    fn role_swap_gives_event_kaplan_meier((rs, _) in arb_instance()) {
        let t: Vec<f64> = rs.iter().map(|r| r.time).collect();
        let e: Vec<bool> = rs.iter().map(|r| r.event).collect();
        let flipped: Vec<bool> = e.iter().map(|x| !x).collect();
        prop_assert_eq!(km_censoring(&t, &flipped).unwrap(), kaplan_meier(&t, &e).unwrap());
        let km = km_censoring(&t, &e).unwrap();
        prop_assert!(km.values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(km.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn concordance_ignores_increasing_transforms((rs, rates) in arb_instance()) {
        let km = km_of(&rs);
        let s = |t: f64, j: usize| (-rates[j] * t).exp();
        let cubed = |t: f64, j: usize| s(t, j).powi(3) * 7.0 - 2.0;
        let a = concordance_td(&rs, &s, &km, 10.0);
        let b = concordance_td(&rs, &cubed, &km, 10.0);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "defined for one predictor only"),
        }
    }

    #[test]
    fn metrics_do_not_depend_on_record_order((rs, rates) in arb_instance(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..rs.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<SurvivalRecord> = order.iter().map(|&i| rs[i].clone()).collect();
        let shuffled_rates: Vec<f64> = order.iter().map(|&i| rates[i]).collect();
        let s = |t: f64, j: usize| (-rates[j] * t).exp();
        let s2 = |t: f64, j: usize| (-shuffled_rates[j] * t).exp();
        let (k1, k2) = (km_of(&rs), km_of(&shuffled));
        prop_assert_eq!(&k1, &k2);
        for t in [0.5, 1.2, 2.4] {
            prop_assert_eq!(brier(t, &rs, &s, &k1).ok(), brier(t, &shuffled, &s2, &k2).ok());
            prop_assert_eq!(bll(t, &rs, &s, &k1).ok(), bll(t, &shuffled, &s2, &k2).ok());
        }
        prop_assert_eq!(
            concordance_td(&rs, &s, &k1, 10.0).ok(),
            concordance_td(&shuffled, &s2, &k2, 10.0).ok()
        );
    }

    #[test]
    fn brier_is_bounded_without_censoring((mut rs, rates) in arb_instance(), t in 0.1..3.0f64) {
        rs.iter_mut().for_each(|r| r.event = true);
        let km = km_of(&rs);
        let s = |t: f64, j: usize| (-rates[j] * t).exp();
        let b = brier(t, &rs, &s, &km).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
    }
}

#[test]
fn predictor_trait_accepts_closures() {
    fn takes(p: &dyn SurvivalPredictor) -> f64 {
        p.survival(1.0, 0)
    }
    assert_eq!(takes(&|_t: f64, _j: usize| 0.25), 0.25);
}
