//! Regression by projection onto a latent space.
//!
//! A sample is mapped to latent scores by least squares against the
//! predictor loadings, `q = x_c Λx (Λxᵀ Λx)⁻¹`, and the response is read
//! off the response loadings, `ŷ = q Λyᵀ + ȳ`. Equivalently
//! `Θ = (Λxᵀ)⁺ Λyᵀ`, the minimum-norm solution of `Λxᵀ Θ = Λyᵀ`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::admm::RplsModel;
use crate::baselines::{LinearModel, MethodTag, PlsFactors};
use crate::linalg::{add_row, ensure_finite, pseudo_inverse, subtract_row};
use crate::{DenseMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionSource {
    #[serde(rename = "RPLS")]
    Rpls,
    #[serde(rename = "PLS")]
    Pls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRegressor {
    /// `p × k` predictor loadings.
    pub lambda_x: DenseMatrix,
    /// `r × k` response loadings.
    pub lambda_y: DenseMatrix,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    /// Predictor scales applied after centering.
    pub x_scales: Vec<f64>,
    /// Response scales; predictions are `q Λyᵀ diag(y_scales) + ȳ`.
    pub y_scales: Vec<f64>,
    pub source: ProjectionSource,
    /// `(Λxᵀ)⁺`, `p × k`.
    projector: DenseMatrix,
    /// Set when `Λx` is column-rank deficient and the pseudoinverse dropped
    /// directions.
    pub rank_deficient: bool,
}

impl ProjectionRegressor {
    pub fn new(
        lambda_x: DenseMatrix,
        lambda_y: DenseMatrix,
        x_means: Vec<f64>,
        y_means: Vec<f64>,
        x_scales: Vec<f64>,
        source: ProjectionSource,
    ) -> Result<Self> {
        let (p, k) = lambda_x.shape();
        if lambda_y.ncols() != k
            || x_means.len() != p
            || x_scales.len() != p
            || y_means.len() != lambda_y.nrows()
        {
            return Err(Error::Dimension(format!(
                "loadings {}x{} / {}x{} do not match offsets ({} x-means, {} x-scales, {} y-means)",
                p,
                k,
                lambda_y.nrows(),
                lambda_y.ncols(),
                x_means.len(),
                x_scales.len(),
                y_means.len()
            )));
        }
        ensure_finite(&lambda_x, "predictor loadings")?;
        ensure_finite(&lambda_y, "response loadings")?;
        let (projector, rank_deficient) = if k == 0 {
            (DenseMatrix::zeros(p, 0), false)
        } else {
            pseudo_inverse(&lambda_x.transpose())?
        };
        if rank_deficient {
            warn!("projection: predictor loadings are rank deficient, using the pseudoinverse");
        }
        let y_scales = vec![1.0; lambda_y.nrows()];
        Ok(ProjectionRegressor {
            lambda_x,
            lambda_y,
            x_means,
            y_means,
            x_scales,
            y_scales,
            source,
            projector,
            rank_deficient,
        })
    }

    pub fn with_y_scales(mut self, y_scales: Vec<f64>) -> Result<Self> {
        if y_scales.len() != self.lambda_y.nrows() {
            return Err(Error::Dimension(format!(
                "{} response scales for {} responses",
                y_scales.len(),
                self.lambda_y.nrows()
            )));
        }
        if y_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput(
                "response scales must be positive".into(),
            ));
        }
        self.y_scales = y_scales;
        Ok(self)
    }

    /// Uses the RPLS loadings `Λx`, `Λy` and the model's offsets and scales.
    pub fn from_rpls(model: &RplsModel) -> Result<Self> {
        ProjectionRegressor::new(
            model.state.lambda_x.clone(),
            model.state.lambda_y.clone(),
            model.x_means.clone(),
            model.y_means.clone(),
            model.x_scales.clone(),
            ProjectionSource::Rpls,
        )?
        .with_y_scales(model.y_scales.clone())
    }

    /// Uses the classical PLS loadings `P` and `C`.
    pub fn from_pls(factors: &PlsFactors) -> Result<Self> {
        ProjectionRegressor::new(
            factors.x_loadings.clone(),
            factors.y_loadings.clone(),
            factors.x_means.clone(),
            factors.y_means.clone(),
            factors.x_scales.clone(),
            ProjectionSource::Pls,
        )
    }

    pub fn n_predictors(&self) -> usize {
        self.lambda_x.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.lambda_x.ncols()
    }

    fn preprocess(&self, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        if x_new.ncols() != self.n_predictors() {
            return Err(Error::Config(format!(
                "regressor expects {} predictors, got {}",
                self.n_predictors(),
                x_new.ncols()
            )));
        }
        ensure_finite(x_new, "X")?;
        let mut xc = subtract_row(x_new, &self.x_means);
        for (j, s) in self.x_scales.iter().enumerate() {
            if *s != 1.0 {
                xc.column_mut(j).scale_mut(1.0 / s);
            }
        }
        Ok(xc)
    }

    /// Latent scores of the rows of `x_new`: the least-squares solution of
    /// `q Λxᵀ ≈ x_c`.
    pub fn project(&self, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.preprocess(x_new)? * &self.projector)
    }

    /// `ŷ = project(x_new) Λyᵀ + ȳ`.
    pub fn predict(&self, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        let q = self.project(x_new)?;
        let mut yc = q * self.lambda_y.transpose();
        for (j, s) in self.y_scales.iter().enumerate() {
            if *s != 1.0 {
                yc.column_mut(j).scale_mut(*s);
            }
        }
        Ok(add_row(&yc, &self.y_means))
    }

    /// Coefficients `Θ = (Λxᵀ)⁺ Λyᵀ` acting on raw predictors.
    pub fn theta(&self) -> DenseMatrix {
        let mut theta = &self.projector * self.lambda_y.transpose();
        for (i, s) in self.x_scales.iter().enumerate() {
            theta.row_mut(i).scale_mut(1.0 / s);
        }
        for (j, s) in self.y_scales.iter().enumerate() {
            theta.column_mut(j).scale_mut(*s);
        }
        theta
    }

    /// The same predictor as an explicit [`LinearModel`].
    pub fn to_linear_model(&self) -> LinearModel {
        LinearModel {
            theta: self.theta(),
            x_means: self.x_means.clone(),
            y_means: self.y_means.clone(),
            method: match self.source {
                ProjectionSource::Rpls => MethodTag::RplsProj,
                ProjectionSource::Pls => MethodTag::PlsProj,
            },
            n_components: self.n_components(),
            rank_deficient: self.rank_deficient,
        }
    }
}

/// Free-function form of [`ProjectionRegressor::project`].
pub fn project(reg: &ProjectionRegressor, x_new: &DenseMatrix) -> Result<DenseMatrix> {
    reg.project(x_new)
}

/// Free-function form of [`ProjectionRegressor::predict`].
pub fn predict_projection(reg: &ProjectionRegressor, x_new: &DenseMatrix) -> Result<DenseMatrix> {
    reg.predict(x_new)
}
