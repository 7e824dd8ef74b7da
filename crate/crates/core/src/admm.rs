//! RPLS solver: non-convex ADMM on the joint low-rank plus sparse
//! decomposition
//!
//! ```text
//! min ‖Δx‖₁ + ‖Δy‖₁ + λ1 ‖Q Λxᵀ‖_* + λ2 ‖Q Λyᵀ‖_*
//! s.t. X = Q Λxᵀ + Δx,  Y = Q Λyᵀ + Δy,  QᵀQ = I
//! ```
//!
//! Each iteration updates, in order, `Q`, `Λx`, `Λy`, `Δx`, `Δy`, the
//! multipliers `L` and `M`, and the penalties `α1`, `α2`, then checks the
//! primal residual against `tol`.

use log::{debug, info, trace};
use serde::{Deserialize, Serialize};

use crate::linalg::{
    column_means, ensure_finite, ensure_nonempty, inner, nuclear_norm, procrustes_orthonormal,
    singular_value_threshold, soft_threshold, subtract_row,
};
use crate::{DenseMatrix, Error, Result};

/// ADMM hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RplsConfig {
    /// Weight on `‖Λx‖_*`.
    pub lambda1: f64,
    /// Weight on `‖Λy‖_*`.
    pub lambda2: f64,
    pub alpha1_0: f64,
    pub alpha2_0: f64,
    /// Geometric growth factor of both penalties.
    pub rho: f64,
    pub alpha_max: f64,
    /// Absolute threshold on `‖X - X̂‖_F + ‖Y - Ŷ‖_F`.
    pub tol: f64,
    /// Latent dimension (upper bound on the recovered rank).
    pub k: usize,
    pub max_iter: usize,
    /// Mean-center predictors and responses before decomposing.
    #[serde(default = "default_true")]
    pub center: bool,
    /// Scale every column to unit sample standard deviation (after
    /// centering) before decomposing.
    #[serde(default = "default_true")]
    pub scale: bool,
}

fn default_true() -> bool {
    true
}

/// Data as the ADMM loop sees it, with the offsets and scales removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    pub x_scales: Vec<f64>,
    pub y_scales: Vec<f64>,
}

/// Sample standard deviation of each column around `offsets`; columns with
/// zero spread (or fewer than two rows) get scale 1.
fn column_scales(x: &DenseMatrix, offsets: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    x.column_iter()
        .zip(offsets)
        .map(|(c, m)| {
            if n < 2 {
                return 1.0;
            }
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

fn scale_columns(x: &mut DenseMatrix, scales: &[f64]) {
    for (j, s) in scales.iter().enumerate() {
        if *s != 1.0 {
            x.column_mut(j).scale_mut(1.0 / s);
        }
    }
}

/// Centers and scales `x` and `y` as requested.
pub fn preprocess(x: &DenseMatrix, y: &DenseMatrix, center: bool, scale: bool) -> Preprocessed {
    let (x_means, y_means) = if center {
        (column_means(x), column_means(y))
    } else {
        (vec![0.0; x.ncols()], vec![0.0; y.ncols()])
    };
    let (x_scales, y_scales) = if scale {
        (column_scales(x, &x_means), column_scales(y, &y_means))
    } else {
        (vec![1.0; x.ncols()], vec![1.0; y.ncols()])
    };
    let mut xc = subtract_row(x, &x_means);
    let mut yc = subtract_row(y, &y_means);
    scale_columns(&mut xc, &x_scales);
    scale_columns(&mut yc, &y_scales);
    Preprocessed {
        x: xc,
        y: yc,
        x_means,
        y_means,
        x_scales,
        y_scales,
    }
}

impl RplsConfig {
    /// Data-scaled defaults: `λ1 = λ2 = 1/√max(n, p)`, `α0 = 1`, `ρ = 1.1`,
    /// `α_max = 1e6`, `tol = 1e-6 (‖X‖_F + ‖Y‖_F)` on the centered and
    /// scaled data, `max_iter = 500`.
    pub fn for_data(x: &DenseMatrix, y: &DenseMatrix, k: usize) -> Self {
        RplsConfig::for_data_with(x, y, k, true, true)
    }

    /// As [`RplsConfig::for_data`] with explicit preprocessing flags; `tol`
    /// is measured on the data as preprocessed with these flags.
    pub fn for_data_with(
        x: &DenseMatrix,
        y: &DenseMatrix,
        k: usize,
        center: bool,
        scale: bool,
    ) -> Self {
        let (n, p) = x.shape();
        let lambda = 1.0 / (n.max(p).max(1) as f64).sqrt();
        let (xn, yn) = if x.nrows() > 0 && x.nrows() == y.nrows() {
            let pre = preprocess(x, y, center, scale);
            (pre.x.norm(), pre.y.norm())
        } else {
            (0.0, 0.0)
        };
        RplsConfig {
            lambda1: lambda,
            lambda2: lambda,
            alpha1_0: 1.0,
            alpha2_0: 1.0,
            rho: 1.1,
            alpha_max: 1e6,
            tol: (1e-6 * (xn + yn)).max(f64::MIN_POSITIVE),
            k,
            max_iter: 500,
            center,
            scale,
        }
    }

    /// Checks the hyperparameter invariants and, when dimensions are given,
    /// that `1 ≤ k ≤ min(n, p)`.
    pub fn validate(&self, dims: Option<(usize, usize)>) -> Result<()> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha1_0", self.alpha1_0),
            ("alpha2_0", self.alpha2_0),
            ("alpha_max", self.alpha_max),
            ("tol", self.tol),
        ];
        for (name, value) in positive {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !self.rho.is_finite() || self.rho < 1.0 {
            return Err(Error::Config(format!("rho must be >= 1, got {}", self.rho)));
        }
        if self.alpha_max < self.alpha1_0 || self.alpha_max < self.alpha2_0 {
            return Err(Error::Config(format!(
                "alpha_max ({}) must be at least alpha1_0 ({}) and alpha2_0 ({})",
                self.alpha_max, self.alpha1_0, self.alpha2_0
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if let Some((n, p)) = dims {
            if self.k > n.min(p) {
                return Err(Error::Config(format!(
                    "k = {} exceeds min(n, p) = {}",
                    self.k,
                    n.min(p)
                )));
            }
        }
        Ok(())
    }
}

/// Partial hyperparameter set layered on top of data-derived defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RplsOverrides {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub alpha1_0: Option<f64>,
    pub alpha2_0: Option<f64>,
    pub rho: Option<f64>,
    pub alpha_max: Option<f64>,
    pub tol: Option<f64>,
    pub k: Option<usize>,
    pub max_iter: Option<usize>,
    pub center: Option<bool>,
    pub scale: Option<bool>,
}

impl RplsOverrides {
    /// Fields set in `other` win.
    pub fn merge(self, other: RplsOverrides) -> RplsOverrides {
        RplsOverrides {
            lambda1: other.lambda1.or(self.lambda1),
            lambda2: other.lambda2.or(self.lambda2),
            alpha1_0: other.alpha1_0.or(self.alpha1_0),
            alpha2_0: other.alpha2_0.or(self.alpha2_0),
            rho: other.rho.or(self.rho),
            alpha_max: other.alpha_max.or(self.alpha_max),
            tol: other.tol.or(self.tol),
            k: other.k.or(self.k),
            max_iter: other.max_iter.or(self.max_iter),
            center: other.center.or(self.center),
            scale: other.scale.or(self.scale),
        }
    }

    pub fn apply(&self, mut cfg: RplsConfig) -> RplsConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        take!(
            lambda1, lambda2, alpha1_0, alpha2_0, rho, alpha_max, tol, k, max_iter, center, scale
        );
        cfg
    }

    /// Defaults for `(x, y)` with these overrides applied; `k` falls back to
    /// `default_k` when unset.
    pub fn resolve(&self, x: &DenseMatrix, y: &DenseMatrix, default_k: usize) -> RplsConfig {
        let k = self.k.unwrap_or(default_k);
        let center = self.center.unwrap_or(true);
        let scale = self.scale.unwrap_or(true);
        self.apply(RplsConfig::for_data_with(x, y, k, center, scale))
    }
}

/// Iterate of the ADMM loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RplsState {
    /// `n × k` scores with orthonormal columns.
    pub q: DenseMatrix,
    /// `p × k` predictor loadings.
    pub lambda_x: DenseMatrix,
    /// `r × k` response loadings.
    pub lambda_y: DenseMatrix,
    /// `n × p` sparse predictor errors.
    pub delta_x: DenseMatrix,
    /// `n × r` sparse response errors.
    pub delta_y: DenseMatrix,
    /// Multipliers for the predictor constraint.
    pub l: DenseMatrix,
    /// Multipliers for the response constraint.
    pub m: DenseMatrix,
    pub alpha1: f64,
    pub alpha2: f64,
    pub iter: usize,
}

impl RplsState {
    /// `Q = eye(n, k)`, every other block zero, penalties at their initial
    /// values.
    pub fn initial(n: usize, p: usize, r: usize, cfg: &RplsConfig) -> Self {
        let k = cfg.k;
        RplsState {
            q: DenseMatrix::identity(n, k),
            lambda_x: DenseMatrix::zeros(p, k),
            lambda_y: DenseMatrix::zeros(r, k),
            delta_x: DenseMatrix::zeros(n, p),
            delta_y: DenseMatrix::zeros(n, r),
            l: DenseMatrix::zeros(n, p),
            m: DenseMatrix::zeros(n, r),
            alpha1: cfg.alpha1_0,
            alpha2: cfg.alpha2_0,
            iter: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.q.nrows(),
            self.lambda_x.nrows(),
            self.lambda_y.nrows(),
            self.q.ncols(),
        )
    }

    /// `‖QᵀQ - I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.q.ncols();
        (self.q.transpose() * &self.q - DenseMatrix::identity(k, k)).norm()
    }

    fn check_against(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        let (n, p, r, k) = self.dims();
        let ok = x.shape() == (n, p)
            && y.shape() == (n, r)
            && self.lambda_x.ncols() == k
            && self.lambda_y.ncols() == k
            && self.delta_x.shape() == (n, p)
            && self.delta_y.shape() == (n, r)
            && self.l.shape() == (n, p)
            && self.m.shape() == (n, r);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "state (n={n}, p={p}, r={r}, k={k}) does not match data X {}x{}, Y {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )))
        }
    }

    /// `B = L/α1 + X - Δx`.
    fn b(&self, x: &DenseMatrix) -> DenseMatrix {
        &self.l / self.alpha1 + x - &self.delta_x
    }

    /// `A = M/α2 + Y - Δy`.
    fn a(&self, y: &DenseMatrix) -> DenseMatrix {
        &self.m / self.alpha2 + y - &self.delta_y
    }

    /// `X - Q Λxᵀ - Δx`.
    pub fn residual_x(&self, x: &DenseMatrix) -> DenseMatrix {
        x - &self.q * self.lambda_x.transpose() - &self.delta_x
    }

    /// `Y - Q Λyᵀ - Δy`.
    pub fn residual_y(&self, y: &DenseMatrix) -> DenseMatrix {
        y - &self.q * self.lambda_y.transpose() - &self.delta_y
    }
}

/// Q-update: polar factor of `D = α1 B Λx + α2 A Λy`.
pub fn update_q(state: &RplsState, x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    state.check_against(x, y)?;
    let d =
        state.b(x) * &state.lambda_x * state.alpha1 + state.a(y) * &state.lambda_y * state.alpha2;
    procrustes_orthonormal(&d)
}

/// Λ-updates: `Λx = SVT(Bᵀ Q, λ1/α1)`, `Λy = SVT(Aᵀ Q, λ2/α2)`, using the
/// `Q` already stored in `state`.
pub fn update_loadings(
    state: &RplsState,
    x: &DenseMatrix,
    y: &DenseMatrix,
    cfg: &RplsConfig,
) -> Result<(DenseMatrix, DenseMatrix)> {
    state.check_against(x, y)?;
    let lambda_x = singular_value_threshold(
        &(state.b(x).transpose() * &state.q),
        cfg.lambda1 / state.alpha1,
    )?;
    let lambda_y = singular_value_threshold(
        &(state.a(y).transpose() * &state.q),
        cfg.lambda2 / state.alpha2,
    )?;
    Ok((lambda_x, lambda_y))
}

/// Δ-updates: `Δx = S_{1/α1}(X - Q Λxᵀ + L/α1)` and the analogue for `Δy`.
pub fn update_sparse(
    state: &RplsState,
    x: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    state.check_against(x, y)?;
    let kx = x - &state.q * state.lambda_x.transpose() + &state.l / state.alpha1;
    let ky = y - &state.q * state.lambda_y.transpose() + &state.m / state.alpha2;
    Ok((
        soft_threshold(&kx, 1.0 / state.alpha1)?,
        soft_threshold(&ky, 1.0 / state.alpha2)?,
    ))
}

/// Multiplier ascent: `L + α1 Rx`, `M + α2 Ry`.
pub fn update_multipliers(
    state: &RplsState,
    x: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    state.check_against(x, y)?;
    Ok((
        &state.l + state.residual_x(x) * state.alpha1,
        &state.m + state.residual_y(y) * state.alpha2,
    ))
}

/// `α ← min(ρ α, α_max)` for both penalties.
pub fn update_penalties(alpha1: f64, alpha2: f64, cfg: &RplsConfig) -> (f64, f64) {
    (
        (cfg.rho * alpha1).min(cfg.alpha_max),
        (cfg.rho * alpha2).min(cfg.alpha_max),
    )
}

/// `‖X - Q Λxᵀ - Δx‖_F + ‖Y - Q Λyᵀ - Δy‖_F`.
///
/// Panics if the state and data dimensions disagree.
pub fn primal_residual(state: &RplsState, x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    state.residual_x(x).norm() + state.residual_y(y).norm()
}

/// Partial augmented Lagrangian at `state`, with the current penalties.
pub fn augmented_lagrangian(
    state: &RplsState,
    x: &DenseMatrix,
    y: &DenseMatrix,
    cfg: &RplsConfig,
) -> Result<f64> {
    state.check_against(x, y)?;
    let rx = state.residual_x(x);
    let ry = state.residual_y(y);
    let l1 = |m: &DenseMatrix| m.iter().map(|v| v.abs()).sum::<f64>();
    Ok(l1(&state.delta_x)
        + l1(&state.delta_y)
        + cfg.lambda1 * nuclear_norm(&state.lambda_x)?
        + cfg.lambda2 * nuclear_norm(&state.lambda_y)?
        + inner(&state.l, &rx)
        + 0.5 * state.alpha1 * rx.norm_squared()
        + inner(&state.m, &ry)
        + 0.5 * state.alpha2 * ry.norm_squared())
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub residual: f64,
    /// Penalties after this iteration's update.
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Step-wise ADMM driver over data that has already been preprocessed.
///
/// [`fit`] wraps this; use it directly to observe every iterate.
#[derive(Debug, Clone)]
pub struct Admm {
    x: DenseMatrix,
    y: DenseMatrix,
    cfg: RplsConfig,
    state: RplsState,
    trace: Vec<TraceEntry>,
}

impl Admm {
    pub fn new(x: DenseMatrix, y: DenseMatrix, cfg: RplsConfig) -> Result<Self> {
        ensure_nonempty(&x, "X")?;
        ensure_nonempty(&y, "Y")?;
        if x.nrows() != y.nrows() {
            return Err(Error::Config(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        ensure_finite(&x, "X")?;
        ensure_finite(&y, "Y")?;
        cfg.validate(Some((x.nrows(), x.ncols())))?;
        let state = RplsState::initial(x.nrows(), x.ncols(), y.ncols(), &cfg);
        Admm::from_state(x, y, cfg, state)
    }

    /// Resumes from an arbitrary iterate, e.g. a saved model's state.
    pub fn from_state(
        x: DenseMatrix,
        y: DenseMatrix,
        cfg: RplsConfig,
        state: RplsState,
    ) -> Result<Self> {
        ensure_nonempty(&x, "X")?;
        ensure_nonempty(&y, "Y")?;
        ensure_finite(&x, "X")?;
        ensure_finite(&y, "Y")?;
        cfg.validate(Some((x.nrows(), x.ncols())))?;
        state.check_against(&x, &y)?;
        if state.q.ncols() != cfg.k {
            return Err(Error::Config(format!(
                "state has {} components but k = {}",
                state.q.ncols(),
                cfg.k
            )));
        }
        if !(state.alpha1 > 0.0 && state.alpha2 > 0.0) {
            return Err(Error::Config("state penalties must be positive".into()));
        }
        Ok(Admm {
            x,
            y,
            cfg,
            state,
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &RplsState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn config(&self) -> &RplsConfig {
        &self.cfg
    }

    /// Runs one full sweep and returns the primal residual after it.
    pub fn step(&mut self) -> Result<f64> {
        let (x, y, cfg) = (&self.x, &self.y, &self.cfg);
        let s = &mut self.state;

        s.q = update_q(s, x, y)?;
        let (lambda_x, lambda_y) = update_loadings(s, x, y, cfg)?;
        s.lambda_x = lambda_x;
        s.lambda_y = lambda_y;
        let (delta_x, delta_y) = update_sparse(s, x, y)?;
        s.delta_x = delta_x;
        s.delta_y = delta_y;
        let (l, m) = update_multipliers(s, x, y)?;
        s.l = l;
        s.m = m;
        let (alpha1, alpha2) = update_penalties(s.alpha1, s.alpha2, cfg);
        s.alpha1 = alpha1;
        s.alpha2 = alpha2;
        s.iter += 1;

        let residual = primal_residual(s, x, y);
        if !residual.is_finite() {
            return Err(Error::Solver(format!(
                "primal residual became non-finite at iteration {}",
                s.iter
            )));
        }
        trace!(
            "iter {} residual {:e} alpha1 {:e} alpha2 {:e}",
            s.iter,
            residual,
            alpha1,
            alpha2
        );
        self.trace.push(TraceEntry {
            iter: s.iter,
            residual,
            alpha1,
            alpha2,
        });
        Ok(residual)
    }

    /// Iterates until the residual drops below `tol` or `max_iter` sweeps
    /// have run. Returns whether it converged.
    pub fn run(&mut self) -> Result<bool> {
        while self.state.iter < self.cfg.max_iter {
            if self.step()? < self.cfg.tol {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn into_parts(self) -> (RplsState, RplsConfig, Vec<TraceEntry>) {
        (self.state, self.cfg, self.trace)
    }
}

/// A fitted RPLS decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RplsModel {
    pub state: RplsState,
    pub config: RplsConfig,
    pub converged: bool,
    pub residual_trace: Vec<TraceEntry>,
    /// Column offsets removed before decomposing (zeros when centering is
    /// off).
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    /// Column scales divided out after centering (ones when scaling is off).
    pub x_scales: Vec<f64>,
    pub y_scales: Vec<f64>,
}

impl RplsModel {
    pub fn n_samples(&self) -> usize {
        self.state.q.nrows()
    }

    pub fn n_predictors(&self) -> usize {
        self.state.lambda_x.nrows()
    }

    pub fn n_responses(&self) -> usize {
        self.state.lambda_y.nrows()
    }

    pub fn iterations(&self) -> usize {
        self.state.iter
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().map_or(f64::NAN, |t| t.residual)
    }

    /// Low-rank predictor part `Q Λxᵀ`, rescaled to centered coordinates.
    pub fn low_rank_x(&self) -> DenseMatrix {
        unscale_columns(
            &self.state.q * self.state.lambda_x.transpose(),
            &self.x_scales,
        )
    }

    /// Low-rank response part `Q Λyᵀ`, rescaled to centered coordinates.
    pub fn low_rank_y(&self) -> DenseMatrix {
        unscale_columns(
            &self.state.q * self.state.lambda_y.transpose(),
            &self.y_scales,
        )
    }

    /// Sparse predictor part `Δx`, rescaled to centered coordinates.
    pub fn sparse_x(&self) -> DenseMatrix {
        unscale_columns(self.state.delta_x.clone(), &self.x_scales)
    }

    /// Sparse response part `Δy`, rescaled to centered coordinates.
    pub fn sparse_y(&self) -> DenseMatrix {
        unscale_columns(self.state.delta_y.clone(), &self.y_scales)
    }
}

fn unscale_columns(mut m: DenseMatrix, scales: &[f64]) -> DenseMatrix {
    for (j, s) in scales.iter().enumerate() {
        if *s != 1.0 {
            m.column_mut(j).scale_mut(*s);
        }
    }
    m
}

/// Fits the RPLS decomposition of `x` (`n × p`) and `y` (`n × r`).
///
/// Reaching `max_iter` is not an error: the model comes back with
/// `converged = false`.
pub fn fit(x: &DenseMatrix, y: &DenseMatrix, cfg: &RplsConfig) -> Result<RplsModel> {
    ensure_nonempty(x, "X")?;
    ensure_nonempty(y, "Y")?;
    ensure_finite(x, "X")?;
    ensure_finite(y, "Y")?;
    if x.nrows() != y.nrows() {
        return Err(Error::Config(format!(
            "X has {} rows but Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let Preprocessed {
        x: xc,
        y: yc,
        x_means,
        y_means,
        x_scales,
        y_scales,
    } = preprocess(x, y, cfg.center, cfg.scale);

    let mut admm = Admm::new(xc, yc, cfg.clone())?;
    let converged = admm.run()?;
    let (state, config, residual_trace) = admm.into_parts();
    if converged {
        info!(
            "rpls converged after {} iterations (residual {:e} < tol {:e})",
            state.iter,
            residual_trace.last().map_or(0.0, |t| t.residual),
            config.tol
        );
    } else {
        info!(
            "rpls stopped at max_iter = {} without converging (residual {:e}, tol {:e})",
            config.max_iter,
            residual_trace.last().map_or(0.0, |t| t.residual),
            config.tol
        );
    }
    debug!(
        "final penalties alpha1 {:e} alpha2 {:e}",
        state.alpha1, state.alpha2
    );
    Ok(RplsModel {
        state,
        config,
        converged,
        residual_trace,
        x_means,
        y_means,
        x_scales,
        y_scales,
    })
}
