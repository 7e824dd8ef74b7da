//! Synthetic data and outlier injection.
//!
//! All randomness comes from [`StreamRng`], a ChaCha20 stream (the
//! `rand_chacha` construction, seeded through `SeedableRng::seed_from_u64`).
//! Derived draws are defined on top of its raw `u64` outputs so other
//! implementations can reproduce them:
//!
//! * uniform `[0, 1)`: `(next_u64 >> 11) · 2⁻⁵³`
//! * standard normal: Box-Muller cosine branch, `√(-2 ln(1 - u1)) · cos(2π u2)`
//!   with two fresh uniforms per draw
//! * index below `n`: `⌊uniform · n⌋`
//! * matrices are filled row by row

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::procrustes_orthonormal;
use crate::{DenseMatrix, Error, Result};

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng {
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }

    /// Fisher-Yates shuffle, swapping position `i` (from the back) with
    /// `below(i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..n).collect();
        // partial Fisher-Yates from the front
        for i in 0..count.min(n) {
            let j = i + self.below(n - i);
            all.swap(i, j);
        }
        all.truncate(count.min(n));
        all
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        DenseMatrix::from_row_slice(rows, cols, &data)
    }
}

/// Synthetic regression problem with a low-dimensional latent structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    pub r: usize,
    pub k_true: usize,
    /// Predictors built as random linear combinations of the others.
    pub n_collinear: usize,
    /// Standard deviation of the Gaussian noise on the independent
    /// predictors and on the responses.
    pub noise_sigma: f64,
    /// Number of predictors feeding each response.
    pub predictors_per_response: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 150,
            p: 40,
            r: 4,
            k_true: 5,
            n_collinear: 10,
            noise_sigma: 0.01,
            predictors_per_response: 5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.r == 0 || self.k_true == 0 {
            return Err(Error::Config(
                "n, p, r and k_true must all be at least 1".into(),
            ));
        }
        if self.k_true > self.p {
            return Err(Error::Config(format!(
                "k_true = {} exceeds p = {}",
                self.k_true, self.p
            )));
        }
        if self.n_collinear >= self.p {
            return Err(Error::Config(format!(
                "n_collinear = {} must be below p = {}",
                self.n_collinear, self.p
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be finite and nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if self.predictors_per_response == 0 || self.predictors_per_response > self.p {
            return Err(Error::Config(format!(
                "predictors_per_response must lie in 1..={}, got {}",
                self.p, self.predictors_per_response
            )));
        }
        Ok(())
    }
}

/// Ground truth behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    /// `n × k_true` latent factors with orthonormal columns.
    pub q_true: DenseMatrix,
    /// `p × k_true` noise-free predictor loadings, `X_clean = q_true loadingsᵀ`.
    pub loadings: DenseMatrix,
    /// `p × r` coefficients, `Y = X θ + noise`.
    pub theta_true: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub truth: SynthTruth,
}

/// Generates `X` from `k_true` standard normal latent factors with loadings
/// drawn `N(0, 1/k_true)`, plus noise on the independent columns. The last
/// `n_collinear` columns are random linear combinations of the independent
/// ones. Each response is a linear function of `predictors_per_response`
/// randomly selected predictors, plus noise.
pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let SynthSpec {
        n, p, r, k_true, ..
    } = *spec;
    let n_indep = p - spec.n_collinear;
    let mut rng = StreamRng::new(spec.seed);

    let factors = rng.normal_matrix(n, k_true);
    let scale = 1.0 / (k_true as f64).sqrt();
    let base_loadings = rng.normal_matrix(n_indep, k_true) * scale;
    // Each collinear column mixes two to four independent columns.
    let mut mixing = DenseMatrix::zeros(n_indep, spec.n_collinear);
    for c in 0..spec.n_collinear {
        let terms = 2 + rng.below(3).min(n_indep.saturating_sub(2));
        for idx in rng.sample_indices(n_indep, terms.min(n_indep)) {
            mixing[(idx, c)] = rng.normal();
        }
    }
    let noise = rng.normal_matrix(n, n_indep) * spec.noise_sigma;
    let x_indep = &factors * base_loadings.transpose() + noise;
    let x_collinear = &x_indep * &mixing;
    let mut x = DenseMatrix::zeros(n, p);
    x.columns_mut(0, n_indep).copy_from(&x_indep);
    x.columns_mut(n_indep, spec.n_collinear)
        .copy_from(&x_collinear);

    let mut theta_true = DenseMatrix::zeros(p, r);
    for j in 0..r {
        for idx in rng.sample_indices(p, spec.predictors_per_response) {
            theta_true[(idx, j)] = rng.normal();
        }
    }
    let y = &x * &theta_true + rng.normal_matrix(n, r) * spec.noise_sigma;

    // Express the noise-free predictors through orthonormal factors.
    let mut loadings = DenseMatrix::zeros(p, k_true);
    loadings.rows_mut(0, n_indep).copy_from(&base_loadings);
    let collinear_loadings = mixing.transpose() * &base_loadings;
    loadings
        .rows_mut(n_indep, spec.n_collinear)
        .copy_from(&collinear_loadings);
    let q_true = procrustes_orthonormal(&factors)?;
    // factors = q_true · R with R = q_trueᵀ factors
    let r_factor = q_true.transpose() * &factors;
    let loadings = loadings * r_factor.transpose();

    Ok(SynthData {
        x,
        y,
        truth: SynthTruth {
            q_true,
            loadings,
            theta_true,
        },
    })
}

/// Outlier regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierKind {
    /// Random entries of `X` and `Y` shifted by `±magnitude · column_std`.
    SparseRandom,
    /// The smallest responses in each column multiplied by `tail_multiplier`.
    LowTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub kind: OutlierKind,
    /// Fraction of entries hit (sparse regime).
    pub fraction: f64,
    /// Amplitude in units of the column standard deviation (sparse regime).
    pub magnitude: f64,
    /// Fraction of rows per response column (low-tail regime).
    pub tail_fraction: f64,
    pub tail_multiplier: f64,
    pub seed: u64,
}

impl OutlierSpec {
    pub fn sparse(seed: u64) -> Self {
        OutlierSpec {
            kind: OutlierKind::SparseRandom,
            fraction: 0.02,
            magnitude: 10.0,
            tail_fraction: 0.10,
            tail_multiplier: 10.0,
            seed,
        }
    }

    pub fn low_tail(seed: u64) -> Self {
        OutlierSpec {
            kind: OutlierKind::LowTail,
            ..OutlierSpec::sparse(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fraction", self.fraction),
            ("tail_fraction", self.tail_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.tail_multiplier == 0.0 || !self.tail_multiplier.is_finite() {
            return Err(Error::Config(
                "tail_multiplier must be finite and nonzero".into(),
            ));
        }
        if !self.magnitude.is_finite() {
            return Err(Error::Config("magnitude must be finite".into()));
        }
        Ok(())
    }
}

/// Boolean mask of corrupted entries, same shape as the matrix it indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionMask {
    rows: usize,
    cols: usize,
    hit: Vec<bool>,
}

impl CorruptionMask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        CorruptionMask {
            rows,
            cols,
            hit: vec![false; rows * cols],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.hit[i * self.cols + j] = true;
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.hit[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.hit.iter().filter(|&&h| h).count()
    }

    /// Corrupted `(row, col)` pairs in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.hit
            .iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .map(move |(idx, _)| (idx / cols, idx % cols))
    }
}

fn column_std(m: &DenseMatrix, j: usize) -> f64 {
    let col = m.column(j);
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    var.sqrt()
}

fn corrupt_sparse(
    m: &DenseMatrix,
    spec: &OutlierSpec,
    rng: &mut StreamRng,
) -> (DenseMatrix, CorruptionMask) {
    let (rows, cols) = m.shape();
    let total = rows * cols;
    let count = (spec.fraction * total as f64).round() as usize;
    let stds: Vec<f64> = (0..cols).map(|j| column_std(m, j)).collect();
    let mut out = m.clone();
    let mut mask = CorruptionMask::empty(rows, cols);
    for idx in rng.sample_indices(total, count) {
        let (i, j) = (idx / cols, idx % cols);
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        out[(i, j)] += sign * spec.magnitude * stds[j];
        mask.set(i, j);
    }
    (out, mask)
}

/// Result of an outlier injection on `X` and `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub x_mask: CorruptionMask,
    pub y_mask: CorruptionMask,
}

/// Shifts `round(fraction · entries)` uniformly chosen entries of `x`, and
/// independently of `y`, by `±magnitude` times their column's standard
/// deviation.
pub fn inject_sparse(x: &DenseMatrix, y: &DenseMatrix, spec: &OutlierSpec) -> Result<Corrupted> {
    spec.validate()?;
    if spec.kind != OutlierKind::SparseRandom {
        return Err(Error::Config(
            "inject_sparse needs a sparse_random outlier spec".into(),
        ));
    }
    let mut rng = StreamRng::new(spec.seed);
    let (x_out, x_mask) = corrupt_sparse(x, spec, &mut rng);
    let (y_out, y_mask) = corrupt_sparse(y, spec, &mut rng);
    Ok(Corrupted {
        x: x_out,
        y: y_out,
        x_mask,
        y_mask,
    })
}

/// Multiplies, in every column of `y`, the `⌊tail_fraction · n⌋` smallest
/// values by `tail_multiplier`. Ties go to the lower row index.
pub fn inject_low_tail(
    y: &DenseMatrix,
    spec: &OutlierSpec,
) -> Result<(DenseMatrix, CorruptionMask)> {
    spec.validate()?;
    if spec.kind != OutlierKind::LowTail {
        return Err(Error::Config(
            "inject_low_tail needs a low_tail outlier spec".into(),
        ));
    }
    let (n, r) = y.shape();
    let count = (spec.tail_fraction * n as f64).floor() as usize;
    let mut out = y.clone();
    let mut mask = CorruptionMask::empty(n, r);
    for j in 0..r {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[(a, j)].total_cmp(&y[(b, j)]).then(a.cmp(&b)));
        for &i in order.iter().take(count) {
            out[(i, j)] *= spec.tail_multiplier;
            mask.set(i, j);
        }
    }
    Ok((out, mask))
}

/// Applies either regime. The low-tail regime leaves `x` untouched.
pub fn inject(x: &DenseMatrix, y: &DenseMatrix, spec: &OutlierSpec) -> Result<Corrupted> {
    match spec.kind {
        OutlierKind::SparseRandom => inject_sparse(x, y, spec),
        OutlierKind::LowTail => {
            let (y_out, y_mask) = inject_low_tail(y, spec)?;
            Ok(Corrupted {
                x: x.clone(),
                y: y_out,
                x_mask: CorruptionMask::empty(x.nrows(), x.ncols()),
                y_mask,
            })
        }
    }
}

/// Exact low-rank plus sparse instance `X = Q* Λx*ᵀ + Δx*`,
/// `Y = Q* Λy*ᵀ + Δy*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSparse {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub q: DenseMatrix,
    pub lambda_x: DenseMatrix,
    pub lambda_y: DenseMatrix,
    pub delta_x: DenseMatrix,
    pub delta_y: DenseMatrix,
}

impl LowRankSparse {
    pub fn low_rank_x(&self) -> DenseMatrix {
        &self.q * self.lambda_x.transpose()
    }

    pub fn low_rank_y(&self) -> DenseMatrix {
        &self.q * self.lambda_y.transpose()
    }
}

/// Orthonormal `Q*` from a Gaussian matrix, loadings `N(0, n/k)` so the
/// low-rank entries have unit variance, and `fraction` of the entries of
/// each matrix shifted by `±magnitude` times that matrix's entry standard
/// deviation.
pub fn low_rank_plus_sparse(
    n: usize,
    p: usize,
    r: usize,
    k: usize,
    fraction: f64,
    magnitude: f64,
    seed: u64,
) -> Result<LowRankSparse> {
    if k == 0 || k > n.min(p) {
        return Err(Error::Config(format!("k = {k} must lie in 1..=min(n, p)")));
    }
    let mut rng = StreamRng::new(seed);
    let q = procrustes_orthonormal(&rng.normal_matrix(n, k))?;
    let scale = (n as f64 / k as f64).sqrt();
    let lambda_x = rng.normal_matrix(p, k) * scale;
    let lambda_y = rng.normal_matrix(r, k) * scale;
    let lx = &q * lambda_x.transpose();
    let ly = &q * lambda_y.transpose();

    let mut sparse = |low: &DenseMatrix| {
        let (rows, cols) = low.shape();
        let total = rows * cols;
        let mean = low.sum() / total as f64;
        let sigma = (low.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / total as f64).sqrt();
        let mut delta = DenseMatrix::zeros(rows, cols);
        let count = (fraction * total as f64).round() as usize;
        for idx in rng.sample_indices(total, count) {
            let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            delta[(idx / cols, idx % cols)] = sign * magnitude * sigma;
        }
        delta
    };
    let delta_x = sparse(&lx);
    let delta_y = sparse(&ly);
    Ok(LowRankSparse {
        x: &lx + &delta_x,
        y: &ly + &delta_y,
        q,
        lambda_x,
        lambda_y,
        delta_x,
        delta_y,
    })
}
