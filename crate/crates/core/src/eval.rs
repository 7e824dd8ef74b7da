//! NMSE, train/test experiments and 95% confidence ellipses for score plots.

use std::collections::BTreeMap;

use log::info;

use crate::admm::{self, RplsOverrides};
use crate::baselines::{self, FitOptions, MethodTag};
use crate::datagen::StreamRng;
use crate::linalg::{column_means, ensure_finite, subtract_row};
use crate::projection::ProjectionRegressor;
use crate::{DenseMatrix, Error, Result};

/// `‖y_true - y_est‖_F / ‖y_true‖_F`.
pub fn nmse(y_true: &DenseMatrix, y_est: &DenseMatrix) -> Result<f64> {
    if y_true.shape() != y_est.shape() {
        return Err(Error::Dimension(format!(
            "nmse needs equal shapes, got {}x{} and {}x{}",
            y_true.nrows(),
            y_true.ncols(),
            y_est.nrows(),
            y_est.ncols()
        )));
    }
    let denom = y_true.norm();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric(
            "nmse is undefined for an all-zero reference".into(),
        ));
    }
    Ok((y_true - y_est).norm() / denom)
}

/// Disjoint, sorted train and test row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Split {
    /// Sorts both index sets; rejects overlaps and duplicates.
    pub fn new(mut train: Vec<usize>, mut test: Vec<usize>) -> Result<Self> {
        train.sort_unstable();
        test.sort_unstable();
        let dup = |v: &[usize]| v.windows(2).any(|w| w[0] == w[1]);
        if dup(&train) || dup(&test) {
            return Err(Error::Config("split indices contain duplicates".into()));
        }
        if let Some(i) = train.iter().find(|i| test.binary_search(i).is_ok()) {
            return Err(Error::Config(format!(
                "row {i} is in both train and test sets"
            )));
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Config(
                "train and test sets must both be nonempty".into(),
            ));
        }
        Ok(Split { train, test })
    }

    /// Seeded shuffle of `0..n`; the first `round(train_fraction · n)` rows
    /// train, the rest test.
    pub fn shuffled(n: usize, train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        StreamRng::new(seed).shuffle(&mut order);
        let n_train = (train_fraction * n as f64).round() as usize;
        let test = order.split_off(n_train.min(n));
        Split::new(order, test)
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    fn check(&self, n: usize) -> Result<()> {
        let max = self
            .train
            .iter()
            .chain(&self.test)
            .copied()
            .max()
            .unwrap_or(0);
        if max >= n {
            return Err(Error::Config(format!(
                "split references row {max} but the data has {n} rows"
            )));
        }
        Ok(())
    }
}

/// Copies the listed rows.
pub fn select_rows(m: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    m.select_rows(rows.iter())
}

/// Data for a train/test experiment. Models are fitted on the `*_fit`
/// matrices restricted to training rows and scored on the `*_eval` matrices
/// restricted to test rows, so outliers can be confined to the fitting
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub x_fit: DenseMatrix,
    pub y_fit: DenseMatrix,
    pub x_eval: DenseMatrix,
    pub y_eval: DenseMatrix,
}

impl ExperimentData {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Self {
        ExperimentData {
            x_fit: x.clone(),
            y_fit: y.clone(),
            x_eval: x,
            y_eval: y,
        }
    }

    pub fn with_clean_reference(
        x_fit: DenseMatrix,
        y_fit: DenseMatrix,
        x_eval: DenseMatrix,
        y_eval: DenseMatrix,
    ) -> Self {
        ExperimentData {
            x_fit,
            y_fit,
            x_eval,
            y_eval,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.x_fit.nrows();
        let p = self.x_fit.ncols();
        let r = self.y_fit.ncols();
        if self.y_fit.nrows() != n || self.x_eval.shape() != (n, p) || self.y_eval.shape() != (n, r)
        {
            return Err(Error::Dimension(
                "fit and evaluation matrices must share row counts and widths".into(),
            ));
        }
        ensure_finite(&self.x_fit, "X")?;
        ensure_finite(&self.y_fit, "Y")?;
        ensure_finite(&self.x_eval, "X (evaluation)")?;
        ensure_finite(&self.y_eval, "Y (evaluation)")?;
        Ok(())
    }
}

/// Per-method settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodSettings {
    /// Latent components for PCR, PLS and RPLS.
    pub k: usize,
    pub baseline: FitOptions,
    /// Applied on top of the training-data defaults.
    pub rpls: RplsOverrides,
}

impl MethodSettings {
    pub fn with_k(k: usize) -> Self {
        MethodSettings {
            k,
            ..Default::default()
        }
    }
}

/// One method's test-set outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub predictions: DenseMatrix,
    pub nmse: f64,
    /// The fitted predictor in explicit linear form.
    pub model: baselines::LinearModel,
    /// First two latent score columns on the training rows, when the method
    /// has a latent space of dimension ≥ 2.
    pub train_scores: Option<DenseMatrix>,
    /// RPLS only.
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset_tag: String,
    pub split: Split,
    /// Reference responses on the test rows.
    pub y_test: DenseMatrix,
    pub results: BTreeMap<MethodTag, std::result::Result<MethodOutcome, String>>,
}

impl ExperimentReport {
    pub fn nmse(&self, method: MethodTag) -> Option<f64> {
        self.results.get(&method)?.as_ref().ok().map(|o| o.nmse)
    }

    pub fn outcome(&self, method: MethodTag) -> Option<&MethodOutcome> {
        self.results.get(&method)?.as_ref().ok()
    }
}

fn first_two(scores: &DenseMatrix) -> Option<DenseMatrix> {
    (scores.ncols() >= 2).then(|| scores.columns(0, 2).into_owned())
}

fn fit_one(
    method: MethodTag,
    x_train: &DenseMatrix,
    y_train: &DenseMatrix,
    x_test: &DenseMatrix,
    y_test: &DenseMatrix,
    settings: &MethodSettings,
) -> Result<MethodOutcome> {
    let k = settings.k;
    let (model, train_scores, converged) = match method {
        MethodTag::Mlr => (
            baselines::fit_mlr_with(x_train, y_train, &settings.baseline)?,
            None,
            None,
        ),
        MethodTag::Pcr => {
            let model = baselines::fit_pcr_with(x_train, y_train, k, &settings.baseline)?;
            let scores = first_two(&baselines::principal_scores(x_train, k)?);
            (model, scores, None)
        }
        MethodTag::Plsr => {
            let (f, model) =
                baselines::fit_pls_nipals_with(x_train, y_train, k, &settings.baseline)?;
            (model, first_two(&f.scores), None)
        }
        MethodTag::PlsProj => {
            let (f, _) = baselines::fit_pls_nipals_with(x_train, y_train, k, &settings.baseline)?;
            let reg = ProjectionRegressor::from_pls(&f)?;
            (reg.to_linear_model(), first_two(&f.scores), None)
        }
        MethodTag::RplsProj => {
            let cfg = settings.rpls.resolve(x_train, y_train, k);
            let fitted = admm::fit(x_train, y_train, &cfg)?;
            let reg = ProjectionRegressor::from_rpls(&fitted)?;
            (
                reg.to_linear_model(),
                first_two(&fitted.state.q),
                Some(fitted.converged),
            )
        }
    };
    let predictions = baselines::predict(&model, x_test)?;
    let score = nmse(y_test, &predictions)?;
    Ok(MethodOutcome {
        predictions,
        nmse: score,
        model,
        train_scores,
        converged,
    })
}

/// Fits every requested method on the training rows and scores it on the
/// test rows. A failing method is recorded and the others still run.
pub fn run_experiment(
    data: &ExperimentData,
    split: &Split,
    methods: &[MethodTag],
    settings: &MethodSettings,
    dataset_tag: &str,
) -> Result<ExperimentReport> {
    data.validate()?;
    split.check(data.x_fit.nrows())?;
    let x_train = select_rows(&data.x_fit, split.train());
    let y_train = select_rows(&data.y_fit, split.train());
    let x_test = select_rows(&data.x_eval, split.test());
    let y_test = select_rows(&data.y_eval, split.test());

    let mut methods: Vec<MethodTag> = methods.to_vec();
    methods.sort_unstable();
    methods.dedup();

    let results: BTreeMap<_, _> = std::thread::scope(|scope| {
        let handles: Vec<_> = methods
            .iter()
            .map(|&method| {
                let (xt, yt, xs, ys) = (&x_train, &y_train, &x_test, &y_test);
                let handle = scope.spawn(move || fit_one(method, xt, yt, xs, ys, settings));
                (method, handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(method, handle)| {
                let outcome = match handle.join() {
                    Ok(Ok(o)) => Ok(o),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(_) => Err(format!("{method} panicked")),
                };
                (method, outcome)
            })
            .collect()
    });

    for (method, outcome) in &results {
        match outcome {
            Ok(o) => info!("{dataset_tag}: {method} NMSE {:.6}", o.nmse),
            Err(e) => info!("{dataset_tag}: {method} failed: {e}"),
        }
    }
    Ok(ExperimentReport {
        dataset_tag: dataset_tag.to_string(),
        split: split.clone(),
        y_test,
        results,
    })
}

/// Chi-square quantile with two degrees of freedom, `-2 ln(1 - coverage)`.
pub fn chi2_2dof_quantile(coverage: f64) -> f64 {
    -2.0 * (1.0 - coverage).ln()
}

/// Coverage ellipse of a bivariate Gaussian fitted to 2-D scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceEllipse {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the first coordinate axis, radians.
    pub rotation_angle: f64,
}

impl ConfidenceEllipse {
    pub fn contains(&self, point: [f64; 2]) -> bool {
        let dx = point[0] - self.center[0];
        let dy = point[1] - self.center[1];
        let (s, c) = self.rotation_angle.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.semi_axes[0]).powi(2) + (v / self.semi_axes[1]).powi(2) <= 1.0
    }

    /// `count` points on the boundary, for plotting.
    pub fn boundary(&self, count: usize) -> Vec<[f64; 2]> {
        let (s, c) = self.rotation_angle.sin_cos();
        (0..count)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                let u = self.semi_axes[0] * t.cos();
                let v = self.semi_axes[1] * t.sin();
                [
                    self.center[0] + c * u - s * v,
                    self.center[1] + s * u + c * v,
                ]
            })
            .collect()
    }
}

/// Ellipse from the sample mean and covariance of an `n × 2` score matrix,
/// scaled by the two-dof chi-square quantile at `coverage`.
pub fn confidence_ellipse(scores_2d: &DenseMatrix, coverage: f64) -> Result<ConfidenceEllipse> {
    if scores_2d.ncols() != 2 {
        return Err(Error::Dimension(format!(
            "confidence ellipse needs two score columns, got {}",
            scores_2d.ncols()
        )));
    }
    let n = scores_2d.nrows();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "confidence ellipse needs at least 3 points, got {n}"
        )));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::InvalidInput(format!(
            "coverage must lie in (0, 1), got {coverage}"
        )));
    }
    ensure_finite(scores_2d, "scores")?;
    let means = column_means(scores_2d);
    let c = subtract_row(scores_2d, &means);
    let dof = (n - 1) as f64;
    let a = c.column(0).norm_squared() / dof;
    let d = c.column(1).norm_squared() / dof;
    let b = c.column(0).dot(&c.column(1)) / dof;

    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let major = mid + rad;
    let minor = mid - rad;
    if major.is_nan() || major <= 0.0 || minor <= 1e-12 * major {
        return Err(Error::DegenerateEllipse(format!(
            "score covariance is singular (eigenvalues {major:e}, {minor:e})"
        )));
    }
    let q = chi2_2dof_quantile(coverage);
    Ok(ConfidenceEllipse {
        center: [means[0], means[1]],
        semi_axes: [(q * major).sqrt(), (q * minor).sqrt()],
        rotation_angle: 0.5 * (2.0 * b).atan2(a - d),
    })
}
