//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! Tolerances are always taken relative to a trace or a Frobenius norm:
//! large-scale fading spans many orders of magnitude, so absolute
//! thresholds would be meaningless.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance on the smallest eigenvalue (scaled by the trace) below
/// which a matrix is rejected as not positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Relative pivot threshold (scaled by `trace / dim`) of [`Cholesky`].
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Eigendecomposition `A = U diag(λ) U^H` of a Hermitian matrix, with the
/// eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) U^H`.
    pub fn reconstruct(&self) -> CMatrix {
        self.map_eigenvalues(|l| l)
    }

    /// `U diag(f(λ)) U^H`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from(f(self.eigenvalues[j]));
        }
        scaled * self.eigenvectors.adjoint()
    }
}

pub fn ensure_square(a: &CMatrix, context: &'static str) -> Result<usize> {
    if a.is_square() {
        Ok(a.nrows())
    } else {
        Err(Error::dimension(
            context,
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ))
    }
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::from(0.5)
}

pub fn real_trace(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first,
/// so small asymmetries from accumulated rounding are harmless.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    ensure_square(a, "hermitian_eig")?;
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    let eig = hermitian_eig(a)?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Checks `λ_min(a) ≥ -PSD_TOLERANCE · trace(a)`.
pub fn check_psd(a: &CMatrix) -> Result<()> {
    let tolerance = PSD_TOLERANCE * real_trace(a).abs();
    let min_eigenvalue = min_eigenvalue(a)?;
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue,
            tolerance,
        });
    }
    Ok(())
}

/// Lower-triangular factor `A = L L^H` of a Hermitian positive-definite
/// matrix. Only the lower triangle of the input is read.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = ensure_square(a, "cholesky")?;
        let threshold = if n == 0 {
            0.0
        } else {
            PIVOT_TOLERANCE * real_trace(a) / n as f64
        };
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)].re;
            for k in 0..j {
                pivot -= l[(j, k)].norm_sqr();
            }
            if !(pivot > threshold) || !pivot.is_finite() {
                return Err(Error::Singular {
                    index: j,
                    pivot,
                    threshold,
                });
            }
            let diag = pivot.sqrt();
            l[(j, j)] = Complex64::from(diag);
            for i in (j + 1)..n {
                let mut acc = a[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc / diag;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &CMatrix {
        &self.l
    }

    /// `b <- L^{-1} b`.
    pub fn forward_in_place(&self, b: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let l = self.l.as_slice();
        // Column-major storage: l[i + j n] = L(i, j).
        for j in 0..n {
            let xj = b[j] / l[j + j * n].re;
            b[j] = xj;
            let col = &l[j * n + j + 1..(j + 1) * n];
            for (bi, lij) in b[j + 1..].iter_mut().zip(col) {
                *bi -= lij * xj;
            }
        }
    }

    /// `b <- L^{-H} b`.
    pub fn backward_in_place(&self, b: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let l = self.l.as_slice();
        for j in (0..n).rev() {
            let col = &l[j * n + j + 1..(j + 1) * n];
            let mut acc = b[j];
            for (bi, lij) in b[j + 1..].iter().zip(col) {
                acc -= lij.conj() * bi;
            }
            b[j] = acc / l[j + j * n].re;
        }
    }

    /// `L x`.
    pub fn lower_mul(&self, x: &CVector) -> CVector {
        let n = self.dim();
        let l = self.l.as_slice();
        let mut out = CVector::zeros(n);
        for (j, xj) in x.iter().enumerate() {
            for (oi, lij) in out.as_mut_slice()[j..].iter_mut().zip(&l[j * n + j..(j + 1) * n]) {
                *oi += lij * xj;
            }
        }
        out
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve_matrix(&CMatrix::identity(self.dim(), self.dim()))
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn solve_pd(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let n = ensure_square(a, "solve_pd")?;
    if b.len() != n {
        return Err(Error::dimension("solve_pd rhs", n, b.len()));
    }
    Ok(Cholesky::new(a)?.solve(b))
}

/// Hermitian square root of a PSD matrix. Eigenvalues in
/// `[-PSD_TOLERANCE · trace, 0)` are clamped to zero.
pub fn psd_sqrt(cov: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(cov, "psd_sqrt")?;
    let is_diagonal = (0..n).all(|j| (0..n).all(|i| i == j || cov[(i, j)] == Complex64::default()));
    if is_diagonal {
        let trace = real_trace(cov).abs();
        let mut root = CMatrix::zeros(n, n);
        for i in 0..n {
            let d = cov[(i, i)].re;
            if d < -PSD_TOLERANCE * trace {
                return Err(Error::NotPsd {
                    min_eigenvalue: d,
                    tolerance: PSD_TOLERANCE * trace,
                });
            }
            root[(i, i)] = Complex64::from(d.max(0.0).sqrt());
        }
        return Ok(root);
    }
    let eig = hermitian_eig(cov)?;
    let tolerance = PSD_TOLERANCE * eig.eigenvalues.iter().sum::<f64>().abs();
    let min_eigenvalue = eig.eigenvalues[n - 1];
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue,
            tolerance,
        });
    }
    Ok(eig.map_eigenvalues(|l| l.max(0.0).sqrt()))
}

/// Draws a vector of i.i.d. CN(0, 1) entries. Each entry consumes two normal
/// draws (real part first).
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Reusable sampler for CN(0, cov): precomputes `cov^{1/2}` once.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    root: CMatrix,
}

impl GaussianSampler {
    pub fn new(cov: &CMatrix) -> Result<Self> {
        Ok(GaussianSampler {
            root: psd_sqrt(cov)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn root(&self) -> &CMatrix {
        &self.root
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let w = standard_complex_normal(rng, self.dim());
        &self.root * w
    }
}

/// One draw from CN(0, cov), computed as `cov^{1/2} w`.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(cov: &CMatrix, rng: &mut R) -> Result<CVector> {
    Ok(GaussianSampler::new(cov)?.sample(rng))
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

/// Relative Frobenius distance `‖a - b‖_F / ‖b‖_F` (absolute if `b = 0`).
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
