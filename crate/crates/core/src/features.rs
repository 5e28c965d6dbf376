//! Feature extraction: a forward 4-cycle moving mean followed by PCA.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ensure_valid, StSignal};

/// Forward window length of the moving mean.
pub const WINDOW: usize = 4;

/// Smoothed signal, one value per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

/// Forward moving mean over [`WINDOW`] cycles; the last windows are truncated
/// so the output keeps one value per cycle.
pub fn moving_mean(cycles: &[f64]) -> Vec<f64> {
    let n = cycles.len();
    (0..n)
        .map(|i| {
            let window = &cycles[i..(i + WINDOW).min(n)];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

pub fn extract_features(signal: &StSignal) -> Result<FeatureVector> {
    ensure_valid(signal)?;
    Ok(FeatureVector(moving_mean(&signal.cycles)))
}

/// Principal axes of a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub n_features: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    /// `k` rows of length `n_features`, row-major.
    pub components: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Sum of all covariance eigenvalues (total variance).
    pub total_variance: f64,
}

impl PcaModel {
    /// Fits on the rows of `data`, keeping `k` components.
    ///
    /// Components are sorted by decreasing eigenvalue of the sample covariance
    /// (normalized by N - 1); each is signed so its largest-magnitude entry is
    /// positive.
    pub fn fit(data: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::Precondition(format!("PCA needs at least 2 rows, got {n}")));
        }
        let d = data[0].len();
        if let Some(row) = data.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        let max_k = (n - 1).min(d);
        if k < 1 || k > max_k {
            return Err(Error::Precondition(format!(
                "PCA dimension must lie in 1..={max_k} for {n} rows of {d} features, got {k}"
            )));
        }

        let mut mean = vec![0.0; d];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let centered = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);
        let mut cov = centered.transpose() * &centered;
        cov /= (n - 1) as f64;
        // Exact symmetry for the eigensolver.
        let cov = (&cov + cov.transpose()) * 0.5;
        let eigen = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .total_cmp(&eigen.eigenvalues[a])
                .then(a.cmp(&b))
        });

        let total_variance = eigen.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut components = Vec::with_capacity(k * d);
        let mut eigenvalues = Vec::with_capacity(k);
        for &c in order.iter().take(k) {
            let col = eigen.eigenvectors.column(c);
            let pivot = (0..d)
                .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
                .expect("d > 0");
            let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
            components.extend(col.iter().map(|v| sign * v));
            eigenvalues.push(eigen.eigenvalues[c].max(0.0));
        }
        Ok(PcaModel {
            n_features: d,
            k,
            mean,
            components,
            eigenvalues,
            total_variance,
        })
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Coordinates of `x - mean` along the kept components.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok((0..self.k)
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (v, m))| c * (v - m))
                    .sum()
            })
            .collect())
    }

    /// `mean + componentsᵀ · reduced`.
    pub fn reconstruct(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: reduced.len(),
            });
        }
        let mut out = self.mean.clone();
        for (i, r) in reduced.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(i)) {
                *o += r * c;
            }
        }
        Ok(out)
    }

    /// Fraction of total variance explained by each kept component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.k];
        }
        self.eigenvalues
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }
}
