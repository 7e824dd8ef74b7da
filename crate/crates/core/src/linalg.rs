//! Proximal operators and the orthogonal Procrustes solver.
//!
//! Every ADMM block update reduces to one of the kernels in this module:
//! entrywise soft thresholding (prox of the ℓ1 norm), singular value
//! thresholding (prox of the nuclear norm) and the polar factor `U Vᵀ` of a
//! thin SVD (maximizer of `⟨D, Q⟩` over matrices with orthonormal columns).

use nalgebra::DVector;

use crate::{DenseMatrix, Error, Result};

/// Relative cutoff below which singular values count as zero when forming
/// pseudoinverses.
pub const RANK_RCOND: f64 = 1e-12;

/// Thin singular value decomposition `a = u · diag(s) · vᵀ`.
///
/// `s` is sorted nonincreasing. Signs are fixed so that the entry of
/// largest magnitude in each column of `u` is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: DVector<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, sigma) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.transpose()
    }

    /// Number of singular values above `RANK_RCOND · σ_max`.
    pub fn numerical_rank(&self) -> usize {
        let smax = self.s.iter().copied().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > RANK_RCOND * smax).count()
    }
}

pub(crate) fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        // column-major storage
        let (row, col) = (pos % m.nrows(), pos / m.nrows());
        return Err(Error::InvalidInput(format!(
            "{what} has a non-finite entry at ({row}, {col})"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_nonempty(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput(format!(
            "{what} is empty ({}x{})",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Scalar soft-thresholding operator.
#[inline]
pub fn shrink(value: f64, eps: f64) -> f64 {
    if value > eps {
        value - eps
    } else if value < -eps {
        value + eps
    } else {
        0.0
    }
}

/// Entrywise soft thresholding `S_eps(k)`, the proximal operator of
/// `eps · ‖·‖₁`.
///
/// The lower branch is `k_ij + eps` for `k_ij < -eps`. Any entry in
/// `[-eps, eps]` maps to zero.
pub fn soft_threshold(k: &DenseMatrix, eps: f64) -> Result<DenseMatrix> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidInput(format!(
            "soft-threshold level must be finite and nonnegative, got {eps}"
        )));
    }
    ensure_finite(k, "soft-threshold input")?;
    Ok(k.map(|v| shrink(v, eps)))
}

/// Thin SVD with `min(rows, cols)` singular triplets.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    ensure_nonempty(a, "svd input")?;
    ensure_finite(a, "svd input")?;
    let (m, n) = a.shape();
    let r = m.min(n);

    if a.iter().all(|&v| v == 0.0) {
        return Ok(SvdFactors {
            u: DenseMatrix::identity(m, r),
            s: DVector::zeros(r),
            v: DenseMatrix::identity(n, r),
        });
    }

    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let decomposition = fa
        .thin_svd()
        .map_err(|e| Error::Solver(format!("svd did not converge on a {m}x{n} matrix: {e:?}")))?;
    let (fu, fv) = (decomposition.U(), decomposition.V());
    let fs = decomposition.S().column_vector();
    let mut factors = SvdFactors {
        u: DenseMatrix::from_fn(m, r, |i, j| fu[(i, j)]),
        s: DVector::from_fn(r, |i, _| fs[i]),
        v: DenseMatrix::from_fn(n, r, |i, j| fv[(i, j)]),
    };
    let scale = a.norm();
    if (factors.reconstruct() - a).norm() > 1e-8 * scale {
        return Err(Error::Solver(format!(
            "svd of a {m}x{n} matrix failed to reconstruct its input"
        )));
    }
    fix_signs(&mut factors);
    Ok(factors)
}

fn fix_signs(f: &mut SvdFactors) {
    for j in 0..f.u.ncols() {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &value in f.u.column(j).iter() {
            if value.abs() > best {
                best = value.abs();
                sign = if value < 0.0 { -1.0 } else { 1.0 };
            }
        }
        if sign < 0.0 {
            f.u.column_mut(j).neg_mut();
            f.v.column_mut(j).neg_mut();
        }
    }
}

/// Singular value thresholding `Ũ S_tau(Σ̃) Ṽᵀ`, the proximal operator of
/// `tau · ‖·‖_*`.
pub fn singular_value_threshold(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidInput(format!(
            "singular value threshold must be finite and nonnegative, got {tau}"
        )));
    }
    let mut f = svd(a)?;
    f.s.apply(|s| *s = (*s - tau).max(0.0));
    Ok(f.reconstruct())
}

/// Solves `max ⟨d, Q⟩` subject to `QᵀQ = I` for an `n × k` target `d`
/// (`n ≥ k`). The maximizer is `U Vᵀ` from the thin SVD `d = U S Vᵀ`.
pub fn procrustes_orthonormal(d: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, k) = d.shape();
    if n < k {
        return Err(Error::Dimension(format!(
            "procrustes target must have at least as many rows as columns, got {n}x{k}"
        )));
    }
    let f = svd(d)?;
    Ok(&f.u * f.v.transpose())
}

/// Moore-Penrose pseudoinverse. Singular values at or below
/// `RANK_RCOND · σ_max` are dropped; the flag reports whether any were.
pub fn pseudo_inverse(a: &DenseMatrix) -> Result<(DenseMatrix, bool)> {
    let f = svd(a)?;
    let smax = f.s.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_RCOND * smax;
    let mut rank_deficient = false;
    let mut vs = f.v.clone();
    for (j, &sigma) in f.s.iter().enumerate() {
        if sigma > cutoff && sigma > 0.0 {
            vs.column_mut(j).scale_mut(1.0 / sigma);
        } else {
            rank_deficient = true;
            vs.column_mut(j).fill(0.0);
        }
    }
    Ok((vs * f.u.transpose(), rank_deficient))
}

/// Sum of singular values.
pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.s.sum())
}

/// Column means of `x`.
pub fn column_means(x: &DenseMatrix) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

/// `x - 1 · offsetsᵀ`.
pub fn subtract_row(x: &DenseMatrix, offsets: &[f64]) -> DenseMatrix {
    assert_eq!(
        x.ncols(),
        offsets.len(),
        "offset length must match column count"
    );
    DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - offsets[j])
}

/// `x + 1 · offsetsᵀ`.
pub fn add_row(x: &DenseMatrix, offsets: &[f64]) -> DenseMatrix {
    assert_eq!(
        x.ncols(),
        offsets.len(),
        "offset length must match column count"
    );
    DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] + offsets[j])
}

/// Frobenius inner product `⟨a, b⟩ = trace(aᵀ b)`.
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
    }

    fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&dmatrix![3.0], 1.0).unwrap(), dmatrix![2.0]);
        assert_eq!(
            soft_threshold(&dmatrix![0.5, -0.5], 1.0).unwrap(),
            dmatrix![0.0, 0.0]
        );
        assert_eq!(
            soft_threshold(&dmatrix![-3.0], 1.0).unwrap(),
            dmatrix![-2.0]
        );
        let k = dmatrix![1.5, -2.0; 0.0, 7.25];
        assert_eq!(soft_threshold(&k, 0.0).unwrap(), k);
    }

    #[test]
    fn soft_threshold_rejects_nan_and_negative_eps() {
        assert!(matches!(
            soft_threshold(&dmatrix![f64::NAN], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            soft_threshold(&dmatrix![f64::INFINITY], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(soft_threshold(&dmatrix![1.0], -0.1).is_err());
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&DenseMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.s.as_slice(), &[1.0, 1.0, 1.0]);

        let f = svd(&dmatrix![5.0, 0.0; 0.0, 3.0]).unwrap();
        assert!((f.s[0] - 5.0).abs() < 1e-14 && (f.s[1] - 3.0).abs() < 1e-14);
        for j in 0..2 {
            assert!((f.u[(j, j)].abs() - 1.0).abs() < 1e-14);
            assert!((f.v[(j, j)].abs() - 1.0).abs() < 1e-14);
        }
        // sign convention: largest entry of every u column is nonnegative
        assert!(f.u[(0, 0)] > 0.0 && f.u[(1, 1)] > 0.0);
    }

    #[test]
    fn svd_random_reconstruction_and_orthonormality() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for &(m, n) in &[(10, 4), (4, 10), (1, 6), (6, 1), (20, 15)] {
            let a = gaussian(m, n, &mut rng);
            let f = svd(&a).unwrap();
            let r = m.min(n);
            assert_eq!(f.s.len(), r);
            assert!(rel_err(&f.reconstruct(), &a) < 1e-8);
            assert!((f.u.transpose() * &f.u - DenseMatrix::identity(r, r)).norm() < 1e-10);
            assert!((f.v.transpose() * &f.v - DenseMatrix::identity(r, r)).norm() < 1e-10);
            assert!(f.s.iter().all(|&s| s >= 0.0));
            assert!(f.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
            for j in 0..r {
                let col = f.u.column(j);
                let imax = col.iamax();
                assert!(col[imax] >= 0.0);
            }
        }
    }

    #[test]
    fn svd_of_zero_matrix_is_identity_padded() {
        let f = svd(&DenseMatrix::zeros(4, 2)).unwrap();
        assert_eq!(f.s.as_slice(), &[0.0, 0.0]);
        assert_eq!(f.u, DenseMatrix::identity(4, 2));
        assert_eq!(f.v, DenseMatrix::identity(2, 2));
    }

    #[test]
    fn svt_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = gaussian(6, 4, &mut rng);
        assert!(rel_err(&singular_value_threshold(&a, 0.0).unwrap(), &a) < 1e-8);

        // rank one: 5 u vᵀ shrinks to 3 u vᵀ
        let u = gaussian(6, 1, &mut rng).normalize();
        let v = gaussian(4, 1, &mut rng).normalize();
        let a = &u * v.transpose() * 5.0;
        let out = singular_value_threshold(&a, 2.0).unwrap();
        assert!(rel_err(&out, &(&u * v.transpose() * 3.0)) < 1e-10);

        let a = dmatrix![2.0, 0.0; 0.0, 1.0];
        assert_eq!(singular_value_threshold(&a, 3.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn procrustes_examples() {
        let q = procrustes_orthonormal(&DenseMatrix::identity(3, 3)).unwrap();
        assert!((q - DenseMatrix::identity(3, 3)).norm() < 1e-14);

        let mut d = DenseMatrix::zeros(4, 2);
        d[(0, 0)] = 4.0;
        d[(1, 1)] = 2.0;
        let q = procrustes_orthonormal(&d).unwrap();
        assert!((q - DenseMatrix::identity(4, 2)).norm() < 1e-14);

        let q = procrustes_orthonormal(&DenseMatrix::zeros(5, 3)).unwrap();
        assert_eq!(q, DenseMatrix::identity(5, 3));

        assert!(matches!(
            procrustes_orthonormal(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pseudo_inverse_flags_rank_deficiency() {
        let a = dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0];
        let (pinv, deficient) = pseudo_inverse(&a).unwrap();
        assert!(deficient);
        // Penrose condition a · a⁺ · a = a
        assert!(rel_err(&(&a * &pinv * &a), &a) < 1e-12);

        let a = dmatrix![2.0, 0.0; 0.0, 4.0];
        let (pinv, deficient) = pseudo_inverse(&a).unwrap();
        assert!(!deficient);
        assert!((pinv - dmatrix![0.5, 0.0; 0.0, 0.25]).norm() < 1e-15);
    }

    #[test]
    fn kernels_are_deterministic() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = gaussian(9, 4, &mut rng);
        assert_eq!(svd(&a).unwrap(), svd(&a).unwrap());
        assert_eq!(
            procrustes_orthonormal(&a).unwrap(),
            procrustes_orthonormal(&a).unwrap()
        );
    }
}
