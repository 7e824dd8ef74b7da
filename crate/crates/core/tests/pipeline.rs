use nalgebra::DMatrix;

use rpls::admm::{self, Admm, RplsConfig};
use rpls::baselines::MethodTag;
use rpls::datagen::{self, OutlierSpec, SynthSpec};
use rpls::eval::{self, ExperimentData, MethodSettings, Split};
use rpls::io::SavedModel;
use rpls::linalg::add_row;
use rpls::projection::ProjectionRegressor;

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn training_fit_satisfies_the_shared_score_constraint() {
    let data = datagen::generate(&SynthSpec::default()).unwrap();
    let c = datagen::inject(&data.x, &data.y, &OutlierSpec::sparse(3)).unwrap();
    let cfg = RplsConfig::for_data(&c.x, &c.y, 5);
    let model = admm::fit(&c.x, &c.y, &cfg).unwrap();
    assert!(model.converged);
    let reg = ProjectionRegressor::from_rpls(&model).unwrap();

    // Inputs stripped of their sparse parts, in original units.
    let x_clean = add_row(&(model.low_rank_x()), &model.x_means);
    let y_clean = add_row(&(model.low_rank_y()), &model.y_means);
    let gap = (reg.predict(&x_clean).unwrap() - &y_clean).norm();
    let y_scale = model.y_scales.iter().cloned().fold(0.0, f64::max);
    assert!(
        gap < 100.0 * cfg.tol * y_scale,
        "gap {gap}, tol {}",
        cfg.tol
    );
}

#[test]
fn huge_sparse_thresholds_reduce_to_a_low_rank_fit() {
    let spec = SynthSpec {
        noise_sigma: 0.0,
        ..SynthSpec::default()
    };
    let data = datagen::generate(&spec).unwrap();
    let mut cfg = RplsConfig::for_data(&data.x, &data.y, 5);
    cfg.alpha1_0 = 1e-12;
    cfg.alpha2_0 = 1e-12;
    cfg.rho = 1.0;
    cfg.max_iter = 3;
    cfg.lambda1 = 1e-12;
    cfg.lambda2 = 1e-12;
    let mut admm = Admm::new(data.x.clone(), data.y.clone(), cfg).unwrap();
    for _ in 0..3 {
        admm.step().unwrap();
        assert!(admm.state().delta_x.iter().all(|v| *v == 0.0));
        assert!(admm.state().delta_y.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn every_iterate_keeps_orthonormal_scores() {
    let g = datagen::low_rank_plus_sparse(40, 12, 3, 4, 0.05, 8.0, 11).unwrap();
    let mut cfg = RplsConfig::for_data(&g.x, &g.y, 4);
    cfg.max_iter = 200;
    let mut admm = Admm::new(g.x.clone(), g.y.clone(), cfg).unwrap();
    let mut last = (0.0, 0.0);
    while admm.state().iter < 200 {
        admm.step().unwrap();
        let s = admm.state();
        assert!(s.orthonormality_error() < 1e-8);
        assert!(s.alpha1 >= last.0 && s.alpha2 >= last.1);
        last = (s.alpha1, s.alpha2);
    }
}

#[test]
fn saved_rpls_model_predicts_like_the_live_regressor() {
    let data = datagen::generate(&SynthSpec {
        n: 60,
        ..SynthSpec::default()
    })
    .unwrap();
    let cfg = RplsConfig::for_data(&data.x, &data.y, 4);
    let model = admm::fit(&data.x, &data.y, &cfg).unwrap();
    let live = ProjectionRegressor::from_rpls(&model)
        .unwrap()
        .predict(&data.x)
        .unwrap();
    let saved = SavedModel::Rpls(model);
    let back = SavedModel::from_json(&saved.to_json().unwrap()).unwrap();
    assert_eq!(back.predict(&data.x).unwrap(), live);
}

#[test]
fn clean_synthetic_experiment_is_accurate_for_every_method() {
    let spec = SynthSpec {
        noise_sigma: 0.0,
        ..SynthSpec::default()
    };
    let data = datagen::generate(&spec).unwrap();
    let split = Split::shuffled(spec.n, 0.8, 1).unwrap();
    let report = eval::run_experiment(
        &ExperimentData::new(data.x.clone(), data.y.clone()),
        &split,
        &MethodTag::ALL,
        &MethodSettings::with_k(5),
        "clean",
    )
    .unwrap();
    assert!(report.nmse(MethodTag::Mlr).unwrap() < 1e-8);
    for tag in MethodTag::ALL {
        let e = report.nmse(tag).unwrap();
        assert!(e < 0.05, "{tag}: {e}");
    }
    let y_hat = &report.outcome(MethodTag::Mlr).unwrap().predictions;
    assert!(rel(y_hat, &report.y_test) < 1e-8);
}
