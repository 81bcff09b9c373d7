//! Widely linear precoding `x = B1 d + B2 conj(d)`.
//!
//! For a proper unit-covariance symbol vector `d`, the pair `(B1, B2)` built
//! here yields `E[x x^H] = C` and `E[x x^T] = Ct`. The factor comes from the
//! real symmetric eigendecomposition of the real-composite covariance, so it
//! exists for every valid strategy including rank-deficient ones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::signal_model::{SignalStrategy, PSD_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum WidelyLinearError {
    #[error("augmented covariance has eigenvalue {0} below tolerance")]
    Indefinite(f64),
    #[error("symbol vector has length {got}, precoder expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Conjugate-structured square root of an augmented covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct WidelyLinearFactor {
    pub b1: DMatrix<Complex64>,
    pub b2: DMatrix<Complex64>,
    /// Eigenvalues of the real-composite matrix, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal eigenvector matrix, columns in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

/// The unitary `T = 1/sqrt(2) [[I, iI], [I, -iI]]` of size `2m`.
pub fn unitary_t(m: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        t[(i, i)] = Complex64::new(s, 0.0);
        t[(i, i + m)] = Complex64::new(0.0, s);
        t[(i + m, i)] = Complex64::new(s, 0.0);
        t[(i + m, i + m)] = Complex64::new(0.0, -s);
    }
    t
}

/// `[[Re(C + Ct), Im(Ct - C)], [Im(C + Ct), Re(C - Ct)]]`, twice the
/// covariance of `[Re x; Im x]`.
fn real_composite(s: &SignalStrategy) -> DMatrix<f64> {
    let m = s.dim();
    let (c, ct) = (s.cov(), s.pseudo());
    DMatrix::from_fn(2 * m, 2 * m, |r, col| {
        let (i, j) = (r % m, col % m);
        match (r < m, col < m) {
            (true, true) => (c[(i, j)] + ct[(i, j)]).re,
            (true, false) => (ct[(i, j)] - c[(i, j)]).im,
            (false, true) => (c[(i, j)] + ct[(i, j)]).im,
            (false, false) => (c[(i, j)] - ct[(i, j)]).re,
        }
    })
}

/// Builds `(B1, B2)` from the real factor `A = V Lambda^{1/2}`.
pub fn augmented_sqrt(s: &SignalStrategy) -> Result<WidelyLinearFactor, WidelyLinearError> {
    let m = s.dim();
    let mut r = real_composite(s);
    // round-off can leave r slightly asymmetric
    r = (&r + r.transpose()) * 0.5;
    let eig = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut values = Vec::with_capacity(2 * m);
    for &i in &order {
        let l = eig.eigenvalues[i];
        if l < -PSD_TOL * scale {
            return Err(WidelyLinearError::Indefinite(l));
        }
        values.push(l.max(0.0));
    }
    let vectors = DMatrix::from_fn(2 * m, 2 * m, |row, col| eig.eigenvectors[(row, order[col])]);
    let mut a = vectors.clone();
    for (j, l) in values.iter().enumerate() {
        a.column_mut(j).scale_mut(l.sqrt());
    }
    let half = |x: f64| 0.5 * x;
    let b1 = DMatrix::from_fn(m, m, |i, j| {
        Complex64::new(
            half(a[(i, j)] + a[(i + m, j + m)]),
            half(a[(i + m, j)] - a[(i, j + m)]),
        )
    });
    let b2 = DMatrix::from_fn(m, m, |i, j| {
        Complex64::new(
            half(a[(i, j)] - a[(i + m, j + m)]),
            half(a[(i + m, j)] + a[(i, j + m)]),
        )
    });
    Ok(WidelyLinearFactor {
        b1,
        b2,
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

impl WidelyLinearFactor {
    pub fn dim(&self) -> usize {
        self.b1.nrows()
    }

    /// `B1 B1^H + B2 B2^H`.
    pub fn covariance(&self) -> DMatrix<Complex64> {
        &self.b1 * self.b1.adjoint() + &self.b2 * self.b2.adjoint()
    }

    /// `B1 B2^T + B2 B1^T`.
    pub fn pseudo_covariance(&self) -> DMatrix<Complex64> {
        &self.b1 * self.b2.transpose() + &self.b2 * self.b1.transpose()
    }

    /// `T (V Lambda^{1/2}) T^H`, whose blocks are `[[B1, B2], [conj B2, conj B1]]`.
    pub fn augmented_root(&self) -> DMatrix<Complex64> {
        let m = self.dim();
        let mut a = self.eigenvectors.map(|x| Complex64::new(x, 0.0));
        for (j, l) in self.eigenvalues.iter().enumerate() {
            a.column_mut(j).scale_mut(l.sqrt());
        }
        let t = unitary_t(m);
        &t * a * t.adjoint()
    }
}

/// `B1 d + B2 conj(d)`.
pub fn precode(
    f: &WidelyLinearFactor,
    d: &DVector<Complex64>,
) -> Result<DVector<Complex64>, WidelyLinearError> {
    if d.len() != f.dim() {
        return Err(WidelyLinearError::DimensionMismatch {
            expected: f.dim(),
            got: d.len(),
        });
    }
    Ok(&f.b1 * d + &f.b2 * d.conjugate())
}

/// Real `2M x 2M` matrix mapping `[Re d; Im d]` to `[Re x; Im x]`.
pub fn real_representation(f: &WidelyLinearFactor) -> DMatrix<f64> {
    let m = f.dim();
    let (b1, b2) = (&f.b1, &f.b2);
    DMatrix::from_fn(2 * m, 2 * m, |r, c| {
        let (i, j) = (r % m, c % m);
        match (r < m, c < m) {
            (true, true) => (b1[(i, j)] + b2[(i, j)]).re,
            (true, false) => (b2[(i, j)] - b1[(i, j)]).im,
            (false, true) => (b2[(i, j)] + b1[(i, j)]).im,
            (false, false) => (b1[(i, j)] - b2[(i, j)]).re,
        }
    })
}

/// Draws `n` transmit vectors with second-order statistics `s`.
///
/// Symbols are circular with unit variance per entry; the caller owns the
/// generator so the output is reproducible under a fixed seed.
pub fn sample_improper<R: Rng + ?Sized>(
    s: &SignalStrategy,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DVector<Complex64>>, WidelyLinearError> {
    let f = augmented_sqrt(s)?;
    let m = f.dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Ok((0..n)
        .map(|_| {
            let d = DVector::from_fn(m, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            });
            &f.b1 * &d + &f.b2 * d.conjugate()
        })
        .collect())
}
