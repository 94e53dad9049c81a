//! Spatial correlation matrices from the Gaussian local scattering model.
//!
//! An array is a `rows × cols` grid with uniform spacing (in wavelengths).
//! Element `n = r·cols + c` sits at horizontal offset `c·s` and vertical
//! offset `r·s`; its response to a plane wave from azimuth `φ` and
//! elevation `θ` is `exp(j2π(c·s·sin φ cos θ + r·s·sin θ))`.
//!
//! For a nominal direction `(φ̄, θ̄)` the correlation matrix is
//! `R = β E[a(φ̄+δφ, θ̄+δθ) a^H(φ̄+δφ, θ̄+δθ)]` with independent zero-mean
//! Gaussian deviations of equal standard deviation. `R` is block-Toeplitz,
//! so only the `(2 rows - 1)(2 cols - 1)` distinct element offsets are
//! integrated; the expectation is evaluated with a tensor Gauss-Hermite
//! rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::config::{CorrelationModel, SimConfig};
use crate::linalg::{CMatrix, CVector};
use crate::network::{direction, Direction, Position};

/// Uniform planar grid of array elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayLayout {
    pub rows: usize,
    pub cols: usize,
    /// Spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayLayout {
    pub fn new(rows: usize, cols: usize, spacing: f64) -> Self {
        ArrayLayout { rows, cols, spacing }
    }

    pub fn linear(len: usize, spacing: f64) -> Self {
        ArrayLayout::new(1, len, spacing)
    }

    /// The RIS grid of a configuration.
    pub fn ris(cfg: &SimConfig) -> Self {
        ArrayLayout::new(cfg.ris_rows, cfg.ris_cols, cfg.element_spacing)
    }

    /// The active antenna grid of a configuration.
    pub fn antennas(cfg: &SimConfig) -> Self {
        let (rows, cols) = cfg.antenna_grid();
        ArrayLayout::new(rows, cols, cfg.antenna_spacing)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (row, col) of element `n`.
    pub fn coords(&self, n: usize) -> (usize, usize) {
        (n / self.cols, n % self.cols)
    }

    pub fn steering(&self, dir: Direction) -> CVector {
        let (u, v) = spatial_frequencies(dir.azimuth, dir.elevation);
        CVector::from_fn(self.len(), |n, _| {
            let (r, c) = self.coords(n);
            let phase = 2.0 * PI * self.spacing * (c as f64 * u + r as f64 * v);
            Complex64::from_polar(1.0, phase)
        })
    }
}

fn spatial_frequencies(azimuth: f64, elevation: f64) -> (f64, f64) {
    (azimuth.sin() * elevation.cos(), elevation.sin())
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule for a standard
/// normal weight (weights sum to one), via the Golub-Welsch eigenproblem.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Builds correlation matrices for one correlation model; the quadrature
/// rule is computed once and reused.
#[derive(Clone, Debug)]
pub struct CorrelationBuilder {
    model: CorrelationModel,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CorrelationBuilder {
    pub fn new(model: CorrelationModel, quadrature_nodes: usize) -> Self {
        let (nodes, weights) = match model {
            CorrelationModel::LocalScattering { angular_std_deg } if angular_std_deg > 0.0 => {
                gauss_hermite(quadrature_nodes.max(1))
            }
            _ => (Vec::new(), Vec::new()),
        };
        CorrelationBuilder {
            model,
            nodes,
            weights,
        }
    }

    pub fn from_config(cfg: &SimConfig) -> Self {
        CorrelationBuilder::new(cfg.correlation, cfg.quadrature_nodes)
    }

    /// `N × N` correlation matrix with trace `N · beta`.
    pub fn build(&self, layout: &ArrayLayout, dir: Direction, beta: f64) -> CMatrix {
        let n = layout.len();
        let std_rad = match self.model {
            CorrelationModel::Uncorrelated => {
                return CMatrix::identity(n, n) * Complex64::from(beta);
            }
            CorrelationModel::LocalScattering { angular_std_deg } => angular_std_deg.to_radians(),
        };
        if std_rad == 0.0 {
            let a = layout.steering(dir);
            return (&a * a.adjoint()) * Complex64::from(beta);
        }
        let table = self.offset_table(layout, dir, std_rad);
        let (rows, cols) = (layout.rows as isize, layout.cols as isize);
        CMatrix::from_fn(n, n, |i, j| {
            let (ri, ci) = layout.coords(i);
            let (rj, cj) = layout.coords(j);
            let dr = ri as isize - rj as isize;
            let dc = ci as isize - cj as isize;
            let idx = ((dr + rows - 1) * (2 * cols - 1) + (dc + cols - 1)) as usize;
            table[idx] * beta
        })
    }

    /// `E[exp(j2πs(dc·u + dr·v))]` for every offset `(dr, dc)`, stored
    /// row-major over `dr ∈ [-(rows-1), rows-1]`, `dc ∈ [-(cols-1), cols-1]`.
    fn offset_table(&self, layout: &ArrayLayout, dir: Direction, std_rad: f64) -> Vec<Complex64> {
        let (rows, cols) = (layout.rows, layout.cols);
        let width = 2 * cols - 1;
        let mut table = vec![Complex64::default(); (2 * rows - 1) * width];
        let mut powers_u = vec![Complex64::default(); cols];
        for (&xa, &wa) in self.nodes.iter().zip(&self.weights) {
            let az = dir.azimuth + std_rad * xa;
            for (&xe, &we) in self.nodes.iter().zip(&self.weights) {
                let el = dir.elevation + std_rad * xe;
                let (u, v) = spatial_frequencies(az, el);
                let w = wa * we;
                let step_u = Complex64::from_polar(1.0, 2.0 * PI * layout.spacing * u);
                let step_v = Complex64::from_polar(1.0, 2.0 * PI * layout.spacing * v);
                powers_u[0] = Complex64::from(w);
                for c in 1..cols {
                    powers_u[c] = powers_u[c - 1] * step_u;
                }
                // Non-negative row offsets; negative ones follow by symmetry.
                let mut pv = Complex64::from(1.0);
                for dr in 0..rows {
                    let row = (dr + rows - 1) * width;
                    for (dc, pu) in powers_u.iter().enumerate() {
                        let term = pv * pu;
                        table[row + cols - 1 + dc] += term;
                        if dc > 0 {
                            table[row + cols - 1 - dc] += pv * pu.conj();
                        }
                    }
                    pv *= step_v;
                }
            }
        }
        // Weights sum to one up to rounding; pin the zero offset exactly.
        let center = table[(rows - 1) * width + cols - 1].re;
        for t in table.iter_mut() {
            *t /= center;
        }
        for dr in 1..rows {
            for dc in 0..width {
                let src = (dr + rows - 1) * width + dc;
                let dst = (rows - 1 - dr) * width + (width - 1 - dc);
                table[dst] = table[src].conj();
            }
        }
        table
    }
}

/// Correlation matrix for the channel from `ue` to an array at `ap`.
pub fn build_spatial_correlation(
    ue: &Position,
    ap: &Position,
    beta: f64,
    layout: &ArrayLayout,
    cfg: &SimConfig,
) -> CMatrix {
    CorrelationBuilder::from_config(cfg).build(layout, direction(ap, ue, cfg), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{check_psd, real_trace, rel_frobenius};

    fn dir(az_deg: f64, el_deg: f64) -> Direction {
        Direction {
            azimuth: az_deg.to_radians(),
            elevation: el_deg.to_radians(),
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let moment = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!(moment(1).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn uncorrelated_model_is_scaled_identity() {
        let b = CorrelationBuilder::new(CorrelationModel::Uncorrelated, 10);
        let r = b.build(&ArrayLayout::new(6, 6, 0.5), dir(30.0, -5.0), 2.5);
        assert_eq!(r, CMatrix::identity(36, 36) * Complex64::from(2.5));
    }

    #[test]
    fn zero_spread_is_rank_one_steering() {
        let layout = ArrayLayout::new(6, 6, 0.5);
        let b = CorrelationBuilder::new(
            CorrelationModel::LocalScattering {
                angular_std_deg: 0.0,
            },
            10,
        );
        let d = dir(40.0, -10.0);
        let r = b.build(&layout, d, 3.0);
        let a = layout.steering(d);
        assert!(rel_frobenius(&r, &((&a * a.adjoint()) * Complex64::from(3.0))) < 1e-14);
        let eig = crate::linalg::hermitian_eig(&r).unwrap();
        assert!(eig.eigenvalues[1].abs() < 1e-10 * eig.eigenvalues[0]);
    }

    #[test]
    fn local_scattering_diagonal_trace_and_bounds() {
        let layout = ArrayLayout::new(6, 6, 0.5);
        let b = CorrelationBuilder::new(
            CorrelationModel::LocalScattering {
                angular_std_deg: 15.0,
            },
            40,
        );
        let beta = 1e-9;
        let r = b.build(&layout, dir(-70.0, -3.0), beta);
        for i in 0..36 {
            assert!((r[(i, i)].re - beta).abs() <= 1e-10 * beta);
            assert!(r[(i, i)].im.abs() <= 1e-10 * beta);
            for j in 0..36 {
                assert!(r[(i, j)].norm() <= beta * (1.0 + 1e-12));
                assert!((r[(i, j)] - r[(j, i)].conj()).norm() <= 1e-15 * beta);
            }
        }
        assert!((real_trace(&r) - 36.0 * beta).abs() <= 1e-10 * 36.0 * beta);
        check_psd(&r).unwrap();
    }

    #[test]
    fn linear_layout_matches_planar_single_row() {
        let b = CorrelationBuilder::new(
            CorrelationModel::LocalScattering {
                angular_std_deg: 10.0,
            },
            30,
        );
        let r1 = b.build(&ArrayLayout::linear(4, 0.5), dir(20.0, -2.0), 1.0);
        let r2 = b.build(&ArrayLayout::new(1, 4, 0.5), dir(20.0, -2.0), 1.0);
        assert_eq!(r1, r2);
        assert_eq!(r1.nrows(), 4);
    }
}
