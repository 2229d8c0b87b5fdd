//! Exact finite-state view of a kernel: a row-stochastic matrix on a 1-D
//! grid, plus every diagnostic the perturbation analysis needs (total
//! variation, Wasserstein, mixing times, curvature, eccentricity, drift,
//! trace chains and the certificate calculators).
//!
//! Everything here is deterministic linear algebra on the computed matrix.
//! Matrices built with inner Monte Carlo carry that provenance so downstream
//! certificates can flag the sampling uncertainty.

mod analysis;
mod build;
mod certify;
mod drift;
mod wasserstein;

pub use analysis::{
    curvature, eccentricity, kernel_delta, mixing_time, stationary, trace_kernel, tv_distance,
    PairScope, DEFAULT_T_MAX,
};
pub use build::{discretize, discretize_gaussian_target, Inner};
pub use certify::{certify_perturbation, Certificate, CertificateReport, CertifyOptions, Status};
pub use drift::{
    drift_concentration_check, drift_like_report, verify_drift, DriftFit, DriftLikeReport,
    DriftReport, Lyapunov,
};
pub use wasserstein::{wasserstein, MetricSpec};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math;
use crate::model::PosteriorParams;

/// Uniform cell grid on `[lo, hi]` with `cells` midpoint centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    cells: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter("grid needs finite lo < hi".into()));
        }
        if cells < 2 {
            return Err(Error::Parameter("grid needs at least 2 cells".into()));
        }
        Ok(Grid { lo, hi, cells })
    }

    /// Grid covering `±k_sd` standard deviations of a Gaussian reference.
    pub fn around(p: &PosteriorParams, k_sd: f64, cells: usize) -> Result<Self> {
        Grid::new(p.mean - k_sd * p.sd(), p.mean + k_sd * p.sd(), cells)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Cell width.
    #[inline]
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    /// Midpoint of cell `g`.
    #[inline]
    pub fn center(&self, g: usize) -> f64 {
        self.lo + (g as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|g| self.center(g)).collect()
    }

    /// Mass a Gaussian reference puts inside `[lo, hi]`.
    pub fn coverage(&self, p: &PosteriorParams) -> f64 {
        math::norm_cdf((self.hi - p.mean) / p.sd()) - math::norm_cdf((self.lo - p.mean) / p.sd())
    }

    /// Normalize a nonnegative density sampled at the centers into a
    /// distribution vector.
    pub fn normalize_log_density(&self, log_density: impl Fn(f64) -> f64) -> Result<DistVector> {
        let logs: Vec<f64> = self.centers().iter().map(|&c| log_density(c)).collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NumericOverflow { what: "log density on grid", at: max });
        }
        let mut w: Vec<f64> = logs.iter().map(|&l| math::exp(l - max)).collect();
        let z: f64 = w.iter().sum();
        for v in &mut w {
            *v /= z;
        }
        DistVector::new(*self, w)
    }
}

/// How the subsample marginalization inside a matrix was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnerKind {
    /// Closed form or full enumeration; no sampling noise.
    Exact,
    /// Shared Monte Carlo subset draws; entries carry O(draws^{-1/2}) noise.
    MonteCarlo { draws: u32, seed: u64 },
}

/// Row-stochastic one-step law on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    mat: Mat,
    grid: Grid,
    inner: InnerKind,
    /// Proposal rows when built by the discretizer; lets certificates split
    /// entries back into proposal × acceptance.
    proposal: Option<Mat>,
}

pub(crate) const ROW_SUM_TOL: f64 = 1e-10;

impl TransitionMatrix {
    pub fn from_parts(mat: Mat, grid: Grid, inner: InnerKind) -> Result<Self> {
        if mat.n() != grid.cells() {
            return Err(Error::GridMismatch);
        }
        for g in 0..mat.n() {
            let row = mat.row(g);
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::Parameter(alloc::format!("negative entry in row {g}")));
            }
            let sum: f64 = row.iter().sum();
            if math::abs(sum - 1.0) > ROW_SUM_TOL {
                return Err(Error::Parameter(alloc::format!(
                    "row {g} sums to {sum}, outside 1±{ROW_SUM_TOL}"
                )));
            }
        }
        Ok(TransitionMatrix { mat, grid, inner, proposal: None })
    }

    pub(crate) fn set_proposal(&mut self, q: Mat) {
        self.proposal = Some(q);
    }

    /// Proposal rows recorded by the discretizer, if any.
    pub fn proposal_rows(&self) -> Option<&Mat> {
        self.proposal.as_ref()
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    #[inline]
    pub fn row(&self, g: usize) -> &[f64] {
        self.mat.row(g)
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn inner(&self) -> InnerKind {
        self.inner
    }

    /// Whether any entry carries Monte Carlo noise.
    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.inner, InnerKind::MonteCarlo { .. })
    }

    /// One-step law from cell `g` as a distribution vector.
    pub fn row_dist(&self, g: usize) -> DistVector {
        DistVector { grid: self.grid, w: self.mat.row(g).to_vec() }
    }
}

/// Probability vector over the grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistVector {
    grid: Grid,
    w: Vec<f64>,
}

impl DistVector {
    pub fn new(grid: Grid, w: Vec<f64>) -> Result<Self> {
        if w.len() != grid.cells() {
            return Err(Error::GridMismatch);
        }
        if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Parameter("distribution entries must be finite and nonnegative".into()));
        }
        let sum: f64 = w.iter().sum();
        if math::abs(sum - 1.0) > ROW_SUM_TOL {
            return Err(Error::Parameter(alloc::format!(
                "distribution sums to {sum}, outside 1±{ROW_SUM_TOL}"
            )));
        }
        Ok(DistVector { grid, w })
    }

    /// Point mass at cell `g`.
    pub fn point_mass(grid: Grid, g: usize) -> Self {
        let mut w = alloc::vec![0.0; grid.cells()];
        w[g] = 1.0;
        DistVector { grid, w }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// E[f(θ)] under this distribution.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.w.iter().enumerate().map(|(g, &p)| p * f(self.grid.center(g))).sum()
    }

    /// Variance of f(θ).
    pub fn variance(&self, f: impl Fn(f64) -> f64 + Copy) -> f64 {
        let m = self.expect(f);
        let m2 = self.expect(|t| {
            let v = f(t);
            v * v
        });
        (m2 - m * m).max(0.0)
    }

    /// One step of the chain: `μP`.
    pub fn step(&self, p: &TransitionMatrix) -> Result<DistVector> {
        if p.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(DistVector { grid: self.grid, w: p.mat.vec_mat(&self.w) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_centers_and_width() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert!((g.h() - 0.25).abs() < 1e-15);
        assert!((g.center(0) - 0.125).abs() < 1e-15);
        assert!((g.center(3) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn coverage_of_wide_grid_is_near_one() {
        let p = PosteriorParams { mean: 0.0, variance: 1.0 };
        let g = Grid::around(&p, 6.0, 100).unwrap();
        assert!(g.coverage(&p) >= 1.0 - 1e-6);
    }

    #[test]
    fn dist_vector_validation() {
        let g = Grid::new(-1.0, 1.0, 2).unwrap();
        assert!(DistVector::new(g, alloc::vec![0.5, 0.5]).is_ok());
        assert!(DistVector::new(g, alloc::vec![0.7, 0.5]).is_err());
        assert!(DistVector::new(g, alloc::vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn normalized_log_density_sums_to_one() {
        let g = Grid::new(-8.0, 8.0, 200).unwrap();
        let d = g.normalize_log_density(|t| -0.5 * t * t).unwrap();
        let total: f64 = d.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // integrates the grid-normalized tempered density to 1 within 1e-8
        assert!(d.weights()[100] > d.weights()[150]);
    }
}
