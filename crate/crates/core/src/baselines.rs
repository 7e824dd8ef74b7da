//! Classical regressors: MLR (ordinary least squares), PCR and PLS.
//!
//! All of them center the data, optionally scale predictors to unit
//! variance, and return a [`LinearModel`] whose coefficients act on raw
//! (uncentered, unscaled) predictors.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    column_means, ensure_finite, ensure_nonempty, pseudo_inverse, subtract_row, svd, RANK_RCOND,
};
use crate::{DenseMatrix, Error, Result};

/// Which procedure produced a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "MLR")]
    Mlr,
    #[serde(rename = "PCR")]
    Pcr,
    /// Classical PLS regression equation `W (Pᵀ W)⁻¹ Cᵀ`.
    #[serde(rename = "PLSR")]
    Plsr,
    /// Projection regression on classical PLS loadings.
    #[serde(rename = "PLS_PROJ")]
    PlsProj,
    /// Projection regression on RPLS loadings.
    #[serde(rename = "RPLS_PROJ")]
    RplsProj,
}

impl MethodTag {
    pub const ALL: [MethodTag; 5] = [
        MethodTag::Mlr,
        MethodTag::Pcr,
        MethodTag::PlsProj,
        MethodTag::Plsr,
        MethodTag::RplsProj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Mlr => "MLR",
            MethodTag::Pcr => "PCR",
            MethodTag::Plsr => "PLSR",
            MethodTag::PlsProj => "PLS_PROJ",
            MethodTag::RplsProj => "RPLS_PROJ",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    /// Accepts the tag names as well as the CLI spellings
    /// `mlr`, `pcr`, `plsr`, `pls-proj`, `rpls`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mlr" => Ok(MethodTag::Mlr),
            "pcr" => Ok(MethodTag::Pcr),
            "plsr" => Ok(MethodTag::Plsr),
            "pls-proj" | "pls" => Ok(MethodTag::PlsProj),
            "rpls" | "rpls-proj" => Ok(MethodTag::RplsProj),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Linear predictor `ŷ = (x - x_means) θ + y_means`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `p × r` coefficients.
    pub theta: DenseMatrix,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    pub method: MethodTag,
    /// Latent components used (0 for MLR).
    pub n_components: usize,
    /// Set when a pseudoinverse had to drop singular values.
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn n_predictors(&self) -> usize {
        self.theta.nrows()
    }

    pub fn n_responses(&self) -> usize {
        self.theta.ncols()
    }
}

/// Predicts responses for the rows of `x_new`.
pub fn predict(model: &LinearModel, x_new: &DenseMatrix) -> Result<DenseMatrix> {
    if x_new.ncols() != model.n_predictors() {
        return Err(Error::Config(format!(
            "model expects {} predictors, got {}",
            model.n_predictors(),
            x_new.ncols()
        )));
    }
    ensure_finite(x_new, "X")?;
    let centered = subtract_row(x_new, &model.x_means);
    Ok(crate::linalg::add_row(
        &(centered * &model.theta),
        &model.y_means,
    ))
}

/// Preprocessing shared by the baselines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Scale centered predictors to unit sample standard deviation.
    pub scale: bool,
}

struct Prepared {
    xs: DenseMatrix,
    yc: DenseMatrix,
    x_means: Vec<f64>,
    y_means: Vec<f64>,
    x_scales: Vec<f64>,
}

fn prepare(x: &DenseMatrix, y: &DenseMatrix, opts: &FitOptions) -> Result<Prepared> {
    ensure_nonempty(x, "X")?;
    ensure_nonempty(y, "Y")?;
    if x.nrows() != y.nrows() {
        return Err(Error::Config(format!(
            "X has {} rows but Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    ensure_finite(x, "X")?;
    ensure_finite(y, "Y")?;
    let x_means = column_means(x);
    let y_means = column_means(y);
    let mut xs = subtract_row(x, &x_means);
    let yc = subtract_row(y, &y_means);
    let mut x_scales = vec![1.0; x.ncols()];
    if opts.scale && x.nrows() > 1 {
        let dof = (x.nrows() - 1) as f64;
        for (j, scale) in x_scales.iter_mut().enumerate() {
            let sd = (xs.column(j).norm_squared() / dof).sqrt();
            if sd > 0.0 {
                *scale = sd;
                xs.column_mut(j).scale_mut(1.0 / sd);
            }
        }
    }
    Ok(Prepared {
        xs,
        yc,
        x_means,
        y_means,
        x_scales,
    })
}

/// `θ_raw = diag(1/s) θ_scaled`.
fn unscale(mut theta: DenseMatrix, scales: &[f64]) -> DenseMatrix {
    for (i, s) in scales.iter().enumerate() {
        theta.row_mut(i).scale_mut(1.0 / s);
    }
    theta
}

fn check_components(k: usize, n: usize, p: usize) -> Result<()> {
    if k == 0 || k > n.min(p) {
        return Err(Error::Config(format!(
            "number of components must lie in 1..={}, got {k}",
            n.min(p)
        )));
    }
    Ok(())
}

/// Ordinary least squares `θ = X⁺ Y` on centered data.
pub fn fit_mlr(x: &DenseMatrix, y: &DenseMatrix) -> Result<LinearModel> {
    fit_mlr_with(x, y, &FitOptions::default())
}

pub fn fit_mlr_with(x: &DenseMatrix, y: &DenseMatrix, opts: &FitOptions) -> Result<LinearModel> {
    let prep = prepare(x, y, opts)?;
    let (pinv, rank_deficient) = pseudo_inverse(&prep.xs)?;
    if rank_deficient {
        warn!("MLR: predictor matrix is rank deficient, using the pseudoinverse");
    }
    Ok(LinearModel {
        theta: unscale(pinv * &prep.yc, &prep.x_scales),
        x_means: prep.x_means,
        y_means: prep.y_means,
        method: MethodTag::Mlr,
        n_components: 0,
        rank_deficient,
    })
}

/// Principal component scores `U_k S_k` of the centered predictors.
pub fn principal_scores(x: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    check_components(k, x.nrows(), x.ncols())?;
    let xc = subtract_row(x, &column_means(x));
    let f = svd(&xc)?;
    let mut t = f.u.columns(0, k).into_owned();
    for j in 0..k {
        t.column_mut(j).scale_mut(f.s[j]);
    }
    Ok(t)
}

/// Principal component regression on the top `k` components.
pub fn fit_pcr(x: &DenseMatrix, y: &DenseMatrix, k: usize) -> Result<LinearModel> {
    fit_pcr_with(x, y, k, &FitOptions::default())
}

pub fn fit_pcr_with(
    x: &DenseMatrix,
    y: &DenseMatrix,
    k: usize,
    opts: &FitOptions,
) -> Result<LinearModel> {
    check_components(k, x.nrows(), x.ncols())?;
    let prep = prepare(x, y, opts)?;
    let f = svd(&prep.xs)?;
    let smax = f.s.iter().copied().fold(0.0, f64::max);
    // θ = V_k S_k⁻¹ U_kᵀ Y, the scores T = U_k S_k regressed on Y and folded back
    let mut v_scaled = f.v.columns(0, k).into_owned();
    let mut rank_deficient = false;
    for j in 0..k {
        let sigma = f.s[j];
        if sigma > RANK_RCOND * smax && sigma > 0.0 {
            v_scaled.column_mut(j).scale_mut(1.0 / sigma);
        } else {
            rank_deficient = true;
            v_scaled.column_mut(j).fill(0.0);
        }
    }
    if rank_deficient {
        warn!("PCR: requested {k} components but some carry no variance");
    }
    let theta = v_scaled * (f.u.columns(0, k).transpose() * &prep.yc);
    Ok(LinearModel {
        theta: unscale(theta, &prep.x_scales),
        x_means: prep.x_means,
        y_means: prep.y_means,
        method: MethodTag::Pcr,
        n_components: k,
        rank_deficient,
    })
}

/// Latent factors of a PLS fit, in centered (and, if requested, scaled)
/// predictor coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsFactors {
    /// `n × a` scores `T`.
    pub scores: DenseMatrix,
    /// `p × a` unit-norm weights `W`.
    pub weights: DenseMatrix,
    /// `p × a` predictor loadings `P`.
    pub x_loadings: DenseMatrix,
    /// `r × a` response loadings `C`.
    pub y_loadings: DenseMatrix,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    /// Predictor scales (all ones unless scaling was requested).
    pub x_scales: Vec<f64>,
}

impl PlsFactors {
    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }
}

/// Iterative PLS with deflation.
///
/// Each round takes the weight `w` as the leading singular vector of the
/// residual cross-covariance `Xᵣᵀ Yᵣ`, forms the score `t = Xᵣ w` and
/// loadings `p = Xᵣᵀ t / tᵀt`, `c = Yᵣᵀ t / tᵀt`, and deflates both residuals
/// by `t pᵀ` and `t cᵀ`. Stops early, with fewer components, once the
/// cross-covariance vanishes.
pub fn fit_pls_nipals(
    x: &DenseMatrix,
    y: &DenseMatrix,
    k: usize,
) -> Result<(PlsFactors, LinearModel)> {
    fit_pls_nipals_with(x, y, k, &FitOptions::default())
}

pub fn fit_pls_nipals_with(
    x: &DenseMatrix,
    y: &DenseMatrix,
    k: usize,
    opts: &FitOptions,
) -> Result<(PlsFactors, LinearModel)> {
    check_components(k, x.nrows(), x.ncols())?;
    let prep = prepare(x, y, opts)?;
    let (n, p) = prep.xs.shape();
    let r = prep.yc.ncols();

    let mut xr = prep.xs.clone();
    let mut yr = prep.yc.clone();
    let mut t_cols = Vec::with_capacity(k);
    let mut w_cols = Vec::with_capacity(k);
    let mut p_cols = Vec::with_capacity(k);
    let mut c_cols = Vec::with_capacity(k);
    let initial_cov = (prep.xs.transpose() * &prep.yc).norm();

    for a in 0..k {
        let cross = xr.transpose() * &yr;
        if cross.norm() <= 1e-12 * initial_cov || initial_cov == 0.0 {
            warn!("PLS: cross-covariance vanished after {a} of {k} components");
            break;
        }
        let w = svd(&cross)?.u.column(0).into_owned();
        let t = &xr * &w;
        let tt = t.norm_squared();
        if tt <= f64::MIN_POSITIVE {
            warn!("PLS: zero score vector after {a} of {k} components");
            break;
        }
        let p_load = xr.transpose() * &t / tt;
        let c_load = yr.transpose() * &t / tt;
        xr -= &t * p_load.transpose();
        yr -= &t * c_load.transpose();
        t_cols.push(t);
        w_cols.push(w);
        p_cols.push(p_load);
        c_cols.push(c_load);
    }

    let a = w_cols.len();
    let stack = |cols: &[nalgebra::DVector<f64>], rows: usize| {
        if cols.is_empty() {
            DenseMatrix::zeros(rows, 0)
        } else {
            DenseMatrix::from_columns(cols)
        }
    };
    let factors = PlsFactors {
        scores: stack(&t_cols, n),
        weights: stack(&w_cols, p),
        x_loadings: stack(&p_cols, p),
        y_loadings: stack(&c_cols, r),
        x_means: prep.x_means.clone(),
        y_means: prep.y_means.clone(),
        x_scales: prep.x_scales.clone(),
    };

    let (theta, rank_deficient) = if a == 0 {
        (DenseMatrix::zeros(p, r), false)
    } else {
        let ptw = factors.x_loadings.transpose() * &factors.weights;
        let (inv, deficient) = pseudo_inverse(&ptw)?;
        (
            &factors.weights * inv * factors.y_loadings.transpose(),
            deficient,
        )
    };
    let model = LinearModel {
        theta: unscale(theta, &prep.x_scales),
        x_means: prep.x_means,
        y_means: prep.y_means,
        method: MethodTag::Plsr,
        n_components: a,
        rank_deficient,
    };
    Ok((factors, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::StreamRng;

    fn well_conditioned(n: usize, p: usize, r: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
        let mut rng = StreamRng::new(seed);
        let x = rng.normal_matrix(n, p);
        let theta = rng.normal_matrix(p, r);
        let y = &x * theta + rng.normal_matrix(n, r) * 0.1;
        (x, y)
    }

    #[test]
    fn method_tags_parse_and_print() {
        for tag in MethodTag::ALL {
            assert_eq!(tag.as_str().parse::<MethodTag>().unwrap(), tag);
        }
        assert_eq!("pls-proj".parse::<MethodTag>().unwrap(), MethodTag::PlsProj);
        assert_eq!("rpls".parse::<MethodTag>().unwrap(), MethodTag::RplsProj);
        assert!("ridge".parse::<MethodTag>().is_err());
    }

    #[test]
    fn mlr_recovers_exact_coefficients() {
        let mut rng = StreamRng::new(1);
        let x = rng.normal_matrix(30, 4);
        let theta = rng.normal_matrix(4, 2);
        let y = &x * &theta;
        let m = fit_mlr(&x, &y).unwrap();
        assert!((&m.theta - &theta).amax() < 1e-8);
        assert!(!m.rank_deficient);
    }

    #[test]
    fn mlr_with_orthonormal_centered_columns_is_xty() {
        let mut rng = StreamRng::new(2);
        let raw = rng.normal_matrix(20, 3);
        let centered = subtract_row(&raw, &column_means(&raw));
        let x = crate::linalg::procrustes_orthonormal(&centered).unwrap();
        let y = rng.normal_matrix(20, 2);
        let m = fit_mlr(&x, &y).unwrap();
        let yc = subtract_row(&y, &column_means(&y));
        assert!((&m.theta - x.transpose() * yc).amax() < 1e-10);
    }

    #[test]
    fn mlr_matches_normal_equations_oracle() {
        let (x, y) = well_conditioned(40, 6, 3, 3);
        let m = fit_mlr(&x, &y).unwrap();
        let xc = subtract_row(&x, &column_means(&x));
        let yc = subtract_row(&y, &column_means(&y));
        // independent route: Cholesky on XᵀX
        let chol = (xc.transpose() * &xc).cholesky().unwrap();
        let oracle = chol.solve(&(xc.transpose() * &yc));
        assert!((&m.theta - oracle).amax() < 1e-10);
        let ortho = (xc.transpose() * (&yc - &xc * &m.theta)).norm();
        assert!(ortho < 1e-8 * xc.norm() * yc.norm());
    }

    #[test]
    fn mlr_flags_rank_deficiency() {
        let mut rng = StreamRng::new(4);
        let mut x = rng.normal_matrix(20, 3);
        let dup = x.column(0) * 2.0;
        x.column_mut(2).copy_from(&dup);
        let y = rng.normal_matrix(20, 1);
        assert!(fit_mlr(&x, &y).unwrap().rank_deficient);
    }

    #[test]
    fn full_rank_pcr_equals_mlr() {
        let (x, y) = well_conditioned(50, 6, 2, 5);
        let mlr = predict(&fit_mlr(&x, &y).unwrap(), &x).unwrap();
        let pcr = predict(&fit_pcr(&x, &y, 6).unwrap(), &x).unwrap();
        assert!((mlr - pcr).amax() < 1e-6);
    }

    #[test]
    fn pcr_single_dominant_direction() {
        let mut rng = StreamRng::new(6);
        let latent = rng.normal_matrix(80, 1);
        let dir = rng.normal_matrix(1, 8);
        let x = &latent * &dir * 5.0 + rng.normal_matrix(80, 8) * 1e-4;
        let y = &latent * 3.0 + DenseMatrix::from_element(80, 1, 10.0);
        let m = fit_pcr(&x, &y, 1).unwrap();
        let pred = predict(&m, &x).unwrap();
        assert!((&y - pred).norm() / y.norm() < 1e-3);
    }

    #[test]
    fn pcr_scores_are_orthogonal() {
        let (x, _) = well_conditioned(30, 5, 1, 7);
        let t = principal_scores(&x, 3).unwrap();
        let g = t.transpose() * &t;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(g[(i, j)].abs() < 1e-8 * g[(i, i)]);
                }
            }
        }
    }

    #[test]
    fn pcr_residual_nonincreasing_in_k() {
        let (x, y) = well_conditioned(40, 7, 2, 8);
        let mut last = f64::INFINITY;
        for k in 1..=7 {
            let resid = (&y - predict(&fit_pcr(&x, &y, k).unwrap(), &x).unwrap()).norm();
            assert!(resid <= last + 1e-10);
            last = resid;
        }
    }

    #[test]
    fn component_counts_are_checked() {
        let (x, y) = well_conditioned(10, 4, 1, 9);
        assert!(matches!(fit_pcr(&x, &y, 0), Err(Error::Config(_))));
        assert!(matches!(fit_pcr(&x, &y, 5), Err(Error::Config(_))));
        assert!(fit_pls_nipals(&x, &y, 5).is_err());
    }

    #[test]
    fn pls_single_collinear_predictor() {
        let mut rng = StreamRng::new(10);
        let x = rng.normal_matrix(60, 5);
        let y = x.column(2) * 3.0 + DenseMatrix::from_element(60, 1, 1.0).column(0);
        let y = DenseMatrix::from_column_slice(60, 1, y.as_slice());
        // make the other columns uncorrelated with column 2 so the weight is exact
        let xc = subtract_row(&x, &column_means(&x));
        let mut x_orth = xc.clone();
        let c2 = xc.column(2).into_owned();
        for j in [0, 1, 3, 4] {
            let proj = c2.dot(&xc.column(j)) / c2.norm_squared();
            let col = xc.column(j) - &c2 * proj;
            x_orth.column_mut(j).copy_from(&col);
        }
        let (f, m) = fit_pls_nipals(&x_orth, &y, 1).unwrap();
        let w = f.weights.column(0);
        assert!((w[2].abs() - 1.0).abs() < 1e-10);
        let pred = predict(&m, &x_orth).unwrap();
        assert!((&y - pred).norm() / y.norm() < 1e-10);
    }

    #[test]
    fn pls_weights_are_unit_norm_and_full_rank_matches_mlr() {
        let (x, y) = well_conditioned(60, 8, 3, 11);
        let (f, m) = fit_pls_nipals(&x, &y, 8).unwrap();
        assert_eq!(f.n_components(), 8);
        for w in f.weights.column_iter() {
            assert!((w.norm() - 1.0).abs() < 1e-10);
        }
        let mlr = predict(&fit_mlr(&x, &y).unwrap(), &x).unwrap();
        assert!((predict(&m, &x).unwrap() - mlr).amax() < 1e-6);
    }

    #[test]
    fn pls_first_weight_maximizes_covariance() {
        let (x, y) = well_conditioned(50, 6, 2, 12);
        let (f, _) = fit_pls_nipals(&x, &y, 2).unwrap();
        let xc = subtract_row(&x, &column_means(&x));
        let yc = subtract_row(&y, &column_means(&y));
        let cov = |v: &DenseMatrix| (yc.transpose() * &xc * v).norm();
        let w1 = f.weights.columns(0, 1).into_owned();
        let best = cov(&w1);
        let mut rng = StreamRng::new(13);
        for _ in 0..1000 {
            let v = rng.normal_matrix(6, 1).normalize();
            assert!(cov(&v) <= best + 1e-9);
        }
    }

    #[test]
    fn pls_stops_early_when_covariance_vanishes() {
        let mut rng = StreamRng::new(14);
        let x = rng.normal_matrix(30, 5);
        let zero_y = DenseMatrix::from_element(30, 1, 4.0);
        let (f, m) = fit_pls_nipals(&x, &zero_y, 3).unwrap();
        assert_eq!(f.n_components(), 0);
        assert_eq!(m.n_components, 0);
        assert!((predict(&m, &x).unwrap() - zero_y).amax() < 1e-12);
    }

    #[test]
    fn predict_examples() {
        let (x, y) = well_conditioned(25, 3, 2, 15);
        let m = fit_mlr(&x, &y).unwrap();
        let all = predict(&m, &x).unwrap();
        for i in 0..x.nrows() {
            let single = predict(&m, &x.rows(i, 1).into_owned()).unwrap();
            assert_eq!(single.row(0), all.row(i));
        }
        let zero = LinearModel {
            theta: DenseMatrix::zeros(3, 2),
            ..m.clone()
        };
        let pred = predict(&zero, &x).unwrap();
        for i in 0..x.nrows() {
            assert_eq!(pred[(i, 0)], m.y_means[0]);
            assert_eq!(pred[(i, 1)], m.y_means[1]);
        }
        assert!(matches!(
            predict(&m, &DenseMatrix::zeros(2, 4)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scaling_leaves_ols_predictions_unchanged() {
        let (mut x, y) = well_conditioned(40, 4, 1, 16);
        x.column_mut(1).scale_mut(1000.0);
        let plain = predict(&fit_mlr(&x, &y).unwrap(), &x).unwrap();
        let scaled = predict(
            &fit_mlr_with(&x, &y, &FitOptions { scale: true }).unwrap(),
            &x,
        )
        .unwrap();
        assert!((plain - scaled).amax() < 1e-8);
    }
}
