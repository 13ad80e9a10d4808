mod common;

use common::{quick_model, FnModel, KINDS};
use proptest::prelude::*;
use shapreg::data::{untreated_background, BackgroundSet, Provenance};
use shapreg::models::{learning_curve, ModelSpec, SampleSource};
use shapreg::shapley::{shapley_taylor, shapley_values, Coalition, Universe};
use shapreg::treatment::*;
use shapreg::{Error, Matrix, Predict};

fn sim(m: usize, seed: u64) -> shapreg::Dataset {
    simulate_dgp(&SimConfig {
        m,
        seed,
        ..SimConfig::default()
    })
    .unwrap()
}

fn all_rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn degenerate_dgp_is_the_treatment() {
    let ds = simulate_dgp(&SimConfig {
        m: 200,
        beta: [1.0, 0.0, 0.0, 0.0],
        noise_ratio: 0.0,
        seed: 3,
    })
    .unwrap();
    assert_eq!(ds.treatment_index(), Some(0));
    assert_eq!(ds.names(), ["t", "x1", "x2"]);
    for i in 0..200 {
        assert_eq!(ds.target()[i], ds.features().get(i, 0));
    }
}

#[test]
fn simulation_is_seeded() {
    assert_eq!(sim(50, 1), sim(50, 1));
    assert_ne!(sim(50, 1), sim(50, 2));
    assert!(simulate_dgp(&SimConfig {
        m: 0,
        ..SimConfig::default()
    })
    .is_err());
    assert!(simulate_dgp(&SimConfig {
        noise_ratio: -0.1,
        ..SimConfig::default()
    })
    .is_err());
}

#[test]
fn simulated_moments() {
    let cfg = SimConfig {
        m: 100_000,
        seed: 11,
        ..SimConfig::default()
    };
    let ds = simulate_dgp(&cfg).unwrap();
    let y = ds.target();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - (cfg.beta[0] / 2.0 + cfg.beta[3])).abs() < 3.0 * se, "{mean}");

    // The signal variance is b1^2/4 + b2^2/2 + b3^2 = 1.75 for the default betas.
    assert!((cfg.signal_sd().powi(2) - 1.75).abs() < 1e-15);
    let surface = cfg.surface();
    let psi = surface.predict(ds.features()).unwrap();
    let pm = psi.iter().sum::<f64>() / n;
    let pv = psi.iter().map(|v| (v - pm).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((pv - 1.75).abs() < 0.05, "{pv}");
    let noise: Vec<f64> = y.iter().zip(&psi).map(|(a, b)| a - b).collect();
    let nv = noise.iter().map(|v| v * v).sum::<f64>() / n;
    assert!((nv.sqrt() / cfg.noise_sd() - 1.0).abs() < 0.02);
    let treated = ds.features().column(0).iter().filter(|&&t| t == 1.0).count() as f64 / n;
    assert!((treated - 0.5).abs() < 0.01);
}

#[test]
fn sum_identity_for_every_model_kind() {
    let ds = sim(300, 4);
    let rows = all_rows(300);
    let bg = untreated_background(&ds, &rows[..150]).unwrap();
    let eval = ds.features().select_rows(&rows[150..]);
    for (k, kind) in KINDS.iter().enumerate() {
        let model = quick_model(*kind, &ds, k as u64);
        for keep in [vec![1, 2], vec![1], vec![]] {
            let tf = treatment_function_eval(&model, &eval, &bg, &keep, 0).unwrap();
            assert!(
                tf.reconstruction_gap() < 1e-10,
                "{kind:?} {keep:?}: {}",
                tf.reconstruction_gap()
            );
            assert_eq!(tf.interactions.ncols(), tf.universe.len() - 1);
        }
    }
}

#[test]
fn untreated_rows_carry_no_treatment_terms() {
    let ds = sim(300, 5);
    let rows = all_rows(300);
    let bg = untreated_background(&ds, &rows[..200]).unwrap();
    let eval = ds.features().select_rows(&rows[200..]);
    for (k, kind) in KINDS.iter().enumerate() {
        let model = quick_model(*kind, &ds, k as u64);
        let tf = treatment_function_eval(&model, &eval, &bg, &[1, 2], 0).unwrap();
        assert!(tf.treated.iter().any(|t| *t) && tf.treated.iter().any(|t| !*t));
        for i in (0..tf.n_rows()).filter(|&i| !tf.treated[i]) {
            assert!(tf.bare_t[i].abs() < 1e-10, "{kind:?}");
            assert!(tf.interactions.row(i).iter().all(|v| v.abs() < 1e-10), "{kind:?}");
        }
    }
}

#[test]
fn additive_model_has_no_interactions() {
    let model = FnModel {
        n: 3,
        f: |r: &[f64]| 2.0 * r[0] + r[1].sin() + r[2] * r[2],
    };
    let ds = sim(120, 6);
    let bg = untreated_background(&ds, &all_rows(60)).unwrap();
    let rows = ds.features().select_rows(&(60..120).collect::<Vec<_>>());
    let analysis = treatment_analysis(&model, &rows, &bg, &[1, 2], 0).unwrap();
    let tf = &analysis.tf;
    let phi_t = analysis.h1.term_values(Coalition::from_players(&[0])).unwrap();
    for i in 0..tf.n_rows() {
        assert!(tf.interactions.row(i).iter().all(|v| v.abs() < 1e-12));
        assert!((tf.bare_t[i] - phi_t[i]).abs() < 1e-12);
        assert!((tf.bare_t[i] - 2.0 * rows.get(i, 0)).abs() < 1e-12);
    }
}

#[test]
fn constant_model_is_all_baseline() {
    let model = FnModel {
        n: 3,
        f: |_: &[f64]| 4.25,
    };
    let ds = sim(40, 7);
    let bg = untreated_background(&ds, &all_rows(40)).unwrap();
    let tf = treatment_function_eval(&model, ds.features(), &bg, &[1, 2], 0).unwrap();
    assert!((tf.phi00 - 4.25).abs() < 1e-12);
    for i in 0..40 {
        assert!(tf.bare_t[i].abs() < 1e-12);
        assert!(tf.phi_z[i].abs() < 1e-12);
        assert!(tf.interactions.row(i).iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn true_surface_matches_closed_form() {
    // With t = 0 in the background and background mean m1 of x1:
    //   phi_t1 = b2 t (x1 - m1), phi_t2 = 0,
    //   bare_t + sum_k 2 phi_kt = b1 t + b2 t (1.5 x1 - 0.5 m1).
    let cfg = SimConfig {
        beta: [0.7, 1.3, -0.4, 2.0],
        ..SimConfig::default()
    };
    let surface = cfg.surface();
    let ds = sim(400, 8);
    let bg = untreated_background(&ds, &all_rows(200)).unwrap();
    let m1 = bg.weighted_mean()[1];
    let rows = ds.features().select_rows(&(200..400).collect::<Vec<_>>());
    let analysis = treatment_analysis(&surface, &rows, &bg, &[1, 2], 0).unwrap();
    let tf = &analysis.tf;
    let t1 = tf.interaction(1).unwrap();
    let t2 = tf.interaction(2).unwrap();
    let st_t1 = analysis.h2.term_values(Coalition::from_players(&[0, 1])).unwrap();
    let (b1, b2) = (cfg.beta[0], cfg.beta[1]);
    let mut expected_ate = 0.0;
    let mut treated = 0.0;
    for i in 0..rows.nrows() {
        let (t, x1) = (rows.get(i, 0), rows.get(i, 1));
        assert!((st_t1[i] - b2 * t * (x1 - m1)).abs() < 1e-10);
        assert!((t1[i] - 2.0 * b2 * t * (x1 - m1)).abs() < 1e-10);
        assert!(t2[i].abs() < 1e-10);
        let effect = b1 * t + b2 * t * (1.5 * x1 - 0.5 * m1);
        assert!((tf.effect(i) - effect).abs() < 1e-10);
        if t == 1.0 {
            expected_ate += effect;
            treated += 1.0;
        }
    }
    assert!((ate(tf).unwrap() - expected_ate / treated).abs() < 1e-10);
    assert_eq!(tf.interaction_labels(ds.names()), ["t:x1", "t:x2"]);
}

#[test]
fn ate_of_handmade_functions() {
    let mk = |bare: Vec<f64>, inter: Vec<f64>, treated: Vec<bool>| {
        let p = bare.len();
        TreatmentFunction {
            phi00: 0.0,
            universe: Universe::all(2),
            t_player: 0,
            covariates: vec![1],
            interactions: Matrix::from_row_major(p, 1, inter).unwrap(),
            phi_z: vec![0.0; p],
            predictions: bare.clone(),
            row_ids: (0..p).collect(),
            bare_t: bare,
            treated,
        }
    };
    let constant = mk(vec![1.0, 1.0, 0.0], vec![0.0; 3], vec![true, true, false]);
    assert_eq!(ate(&constant).unwrap(), 1.0);
    let null = mk(vec![0.0; 3], vec![0.0; 3], vec![true, false, true]);
    assert_eq!(ate(&null).unwrap(), 0.0);
    let mixed = mk(vec![1.0, 3.0], vec![0.5, -0.5], vec![true, true]);
    assert_eq!(ate(&mixed).unwrap(), 2.0);
    let none = mk(vec![1.0], vec![0.0], vec![false]);
    assert!(matches!(ate(&none), Err(Error::NoTreated)));
    assert!(matches!(confounding_gap(&mixed), Err(Error::NoUntreated)));
}

#[test]
fn ols_recovers_homogeneous_effect() {
    let ds = simulate_dgp(&SimConfig {
        m: 500,
        beta: [1.5, 0.0, 0.0, 0.3],
        noise_ratio: 0.0,
        seed: 9,
    })
    .unwrap();
    let model = ModelSpec::Linear.fit(&ds).unwrap();
    let rows = all_rows(500);
    let bg = untreated_background(&ds, &rows).unwrap();
    let tf = treatment_function_eval(&model, ds.features(), &bg, &[1, 2], 0).unwrap();
    assert!((ate(&tf).unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn mismatched_decompositions_rejected() {
    let ds = sim(60, 10);
    let model = quick_model(shapreg::ModelKind::Linear, &ds, 0);
    let bg = untreated_background(&ds, &all_rows(30)).unwrap();
    let other_bg = BackgroundSet::uniform(ds.features().select_rows(&[0, 1]), Provenance::Custom).unwrap();
    let u = Universe::all(3);
    let rows = ds.features();
    let treated: Vec<bool> = rows.rows().map(|r| r[0] == 1.0).collect();
    let h1 = shapley_values(&model, rows, &bg, &u).unwrap();
    let h2 = shapley_taylor(&model, rows, &bg, &u, 2).unwrap();
    assert!(treatment_decompose(&h1, &h2, 0, &treated).is_ok());
    assert!(treatment_decompose(&h2, &h1, 0, &treated).is_err());
    let h2_bg = shapley_taylor(&model, rows, &other_bg, &u, 2).unwrap();
    assert!(matches!(
        treatment_decompose(&h1, &h2_bg, 0, &treated),
        Err(Error::Incompatible(_))
    ));
    let h2_rows = h2.clone().with_row_ids((100..160).collect()).unwrap();
    assert!(treatment_decompose(&h1, &h2_rows, 0, &treated).is_err());
    let surface = SimConfig::default().surface();
    let h2_model = shapley_taylor(&surface, rows, &bg, &u, 2).unwrap();
    assert!(treatment_decompose(&h1, &h2_model, 0, &treated).is_err());
    assert!(treatment_decompose(&h1, &h2, 0, &treated[1..]).is_err());
}

#[test]
fn tf_csv_layout() {
    let ds = sim(30, 12);
    let model = quick_model(shapreg::ModelKind::Linear, &ds, 0);
    let bg = untreated_background(&ds, &all_rows(30)).unwrap();
    let tf = treatment_function_eval(&model, ds.features(), &bg, &[1, 2], 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tf.csv");
    tf.write_csv(&path, ds.names()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "row_id,treated,phi00,bare_t,t:x1,t:x2,phi_z");
    assert_eq!(lines.count(), 30);
}

#[test]
fn curve_exact_fits() {
    let x: Vec<f64> = (0..20).map(|i| -2.0 + 0.2 * i as f64).collect();
    let treated = vec![true; 20];
    let c = interaction_curve(&vec![0.4; 20], &x, &treated, 4).unwrap();
    assert!((c[0] - 0.4).abs() < 1e-10 && c[1..].iter().all(|v| v.abs() < 1e-10));
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let c = interaction_curve(&sq, &x, &treated, 4).unwrap();
    for (got, want) in c.iter().zip([0.0, 0.0, 1.0, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-8);
    }
    assert!((polyval(&c, 1.5) - 2.25).abs() < 1e-8);
}

#[test]
fn curve_uses_treated_rows_only() {
    let x: Vec<f64> = (0..12).map(|i| i as f64 / 3.0).collect();
    let treated: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&treated)
        .map(|(v, t)| if *t { 1.0 + 2.0 * v } else { 100.0 })
        .collect();
    let c = interaction_curve(&y, &x, &treated, 1).unwrap();
    assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10);
    assert!(interaction_curve(&y, &x, &treated, 5).is_err());
    assert!(interaction_curve(&y, &x[1..], &treated, 1).is_err());
    assert!(interaction_curve(&[1.0; 8], &[2.0; 8], &[true; 8], 2).is_err());
}

#[test]
fn fresh_draws_for_learning_curves() {
    let src = DgpSource {
        config: SimConfig::default(),
        test_size: 50,
    };
    let mut r = common::rng(1);
    let (train, test) = src.draw(20, &mut r).unwrap();
    assert_eq!((train.n_rows(), test.n_rows()), (20, 50));
    assert_ne!(train.features().row(0), test.features().row(0));
    let curve = learning_curve(&ModelSpec::Linear, &src, &[30, 100, 300], 3, 0).unwrap();
    assert_eq!(curve.sizes, [30, 100, 300]);
    assert!(src.draw(0, &mut r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identity_on_random_polynomials(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let model = FnModel {
            n: 4,
            f: move |r: &[f64]| a * r[0] * r[1] + b * r[0] * r[2] * r[3] + c * (r[1] - r[3]).powi(2) + r[0],
        };
        let mut rng = common::rng(seed);
        let mut x = common::normal_matrix(30, 4, &mut rng);
        for i in 0..30 {
            x.set(i, 0, (i % 2) as f64);
        }
        let untreated: Vec<usize> = (0..30).filter(|i| i % 2 == 0).collect();
        let bg = BackgroundSet::uniform(x.select_rows(&untreated[..8]), Provenance::UntreatedTrain).unwrap();
        let tf = treatment_function_eval(&model, &x, &bg, &[1, 3], 0).unwrap();
        prop_assert!(tf.reconstruction_gap() < 1e-10);
        for i in (0..30).filter(|i| i % 2 == 0) {
            prop_assert!(tf.effect(i).abs() < 1e-10);
        }
    }
}
