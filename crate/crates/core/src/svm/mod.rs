//! Multi-class maximum-margin classifier for outlier categories.
//!
//! One weight vector and bias per class, trained jointly with a hinge penalty
//! for every (point, wrong class) pair; prediction takes the class with the
//! largest decision value `g_m(x) = Σ_n c_{n,m} k(x_n, x) - b_m`.

mod kernel;
mod solver;

pub use kernel::{default_rbf_gamma, kernel_eval, Kernel, KernelKind, KernelSpec};
pub use solver::{solve, DualSolution, SolverOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients at or below this magnitude are treated as zero.
pub const SUPPORT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Class labels, ascending; decision values follow this order.
    pub classes: Vec<u32>,
    pub kernel: Kernel,
    /// Penalty weight per slack.
    pub regularization: f64,
    pub n_features: usize,
    /// Row index of each support vector in the training set.
    pub support_indices: Vec<usize>,
    pub support_vectors: Vec<Vec<f64>>,
    /// `dual_coeffs[s][m]`: coefficient of support vector `s` in class `m`.
    pub dual_coeffs: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Optimality violation reached by the solver.
    pub violation: f64,
}

/// Trains on `features` with class labels `labels` (at least two distinct).
pub fn train_multiclass_svm(
    features: &[Vec<f64>],
    labels: &[u32],
    gamma: f64,
    kernel: &KernelSpec,
) -> Result<SvmModel> {
    train_multiclass_svm_with(features, labels, gamma, kernel, &SolverOptions::default())
        .map(|(m, _)| m)
}

pub fn train_multiclass_svm_with(
    features: &[Vec<f64>],
    labels: &[u32],
    gamma: f64,
    kernel: &KernelSpec,
    options: &SolverOptions,
) -> Result<(SvmModel, DualSolution)> {
    if features.len() < 2 {
        return Err(Error::Precondition(format!(
            "SVM training needs at least 2 examples, got {}",
            features.len()
        )));
    }
    if labels.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let n_features = features[0].len();
    if let Some(row) = features.iter().find(|r| r.len() != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            actual: row.len(),
        });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Precondition(
            "SVM training needs at least two distinct labels".into(),
        ));
    }
    let index: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label from the same list"))
        .collect();
    let resolved = kernel.resolve(features)?;
    let sol = solve(features, &index, classes.len(), gamma, &resolved, options)?;

    let mut support_indices = Vec::new();
    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for (i, c) in sol.coef.iter().enumerate() {
        if c.iter().any(|v| v.abs() > SUPPORT_EPS) {
            support_indices.push(i);
            support_vectors.push(features[i].clone());
            dual_coeffs.push(c.clone());
        }
    }
    let model = SvmModel {
        classes,
        kernel: resolved,
        regularization: gamma,
        n_features,
        support_indices,
        support_vectors,
        dual_coeffs,
        biases: sol.biases.clone(),
        converged: sol.converged,
        iterations: sol.iterations,
        violation: sol.violation,
    };
    Ok((model, sol))
}

impl SvmModel {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `g_m(x)` for every class, in `classes` order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g: Vec<f64> = self.biases.iter().map(|b| -b).collect();
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coeffs) {
            let k = self.kernel.apply(sv, x);
            for (gm, c) in g.iter_mut().zip(coef) {
                *gm += c * k;
            }
        }
        Ok(g)
    }

    /// `g_1(x) - g_0(x)` for two-class models; positive means `classes[1]`.
    pub fn binary_decision(&self, x: &[f64]) -> Result<f64> {
        if self.classes.len() != 2 {
            return Err(Error::Precondition(format!(
                "binary decision needs a two-class model, this one has {}",
                self.classes.len()
            )));
        }
        let g = self.decision_values(x)?;
        Ok(g[1] - g[0])
    }

    /// Label with the largest decision value; ties go to the lower label.
    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        let g = self.decision_values(x)?;
        let mut best = 0;
        for (m, v) in g.iter().enumerate().skip(1) {
            if *v > g[best] {
                best = m;
            }
        }
        Ok(self.classes[best])
    }

    /// Largest violation of the optimality conditions of the training problem
    /// on `(features, labels)`: box constraints on the dual variables, the
    /// per-class equality constraints, and complementary slackness of every
    /// margin constraint (with optimal slacks, primal feasibility holds).
    pub fn kkt_residual(&self, features: &[Vec<f64>], labels: &[u32]) -> Result<f64> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        let l = self.classes.len();
        let mut coef = vec![vec![0.0; l]; features.len()];
        for ((&i, sv), c) in self
            .support_indices
            .iter()
            .zip(&self.support_vectors)
            .zip(&self.dual_coeffs)
        {
            if features.get(i) != Some(sv) {
                return Err(Error::Precondition(format!(
                    "support vector {i} does not match the given training data"
                )));
            }
            coef[i].clone_from(c);
        }
        let class_of = |label: u32| {
            self.classes
                .binary_search(&label)
                .map_err(|_| Error::Domain(format!("label {label} is not a model class")))
        };
        let mut residual: f64 = 0.0;
        for m in 0..l {
            residual = residual.max(coef.iter().map(|c| c[m]).sum::<f64>().abs());
        }
        for ((x, &label), c) in features.iter().zip(labels).zip(&coef) {
            let d = class_of(label)?;
            let g = self.decision_values(x)?;
            let mut alpha_sum = 0.0;
            for m in (0..l).filter(|&m| m != d) {
                let alpha = -c[m];
                alpha_sum += alpha;
                residual = residual
                    .max(-alpha)
                    .max(alpha - self.regularization);
                let shortfall = 1.0 - (g[d] - g[m]);
                if alpha < self.regularization {
                    residual = residual.max(shortfall);
                }
                if alpha > 0.0 {
                    residual = residual.max(-shortfall);
                }
            }
            residual = residual.max((c[d] - alpha_sum).abs());
        }
        Ok(residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_canonical_margin() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = train_multiclass_svm(&x, &[2, 3], 1e3, &KernelSpec::linear()).unwrap();
        assert!(m.converged);
        assert_eq!(m.classes, vec![2, 3]);
        assert!((m.binary_decision(&[1.0]).unwrap() - 1.0).abs() < 1e-6);
        assert!((m.binary_decision(&[-1.0]).unwrap() + 1.0).abs() < 1e-6);
        assert!(m.binary_decision(&[0.0]).unwrap().abs() < 1e-6);
        assert_eq!(m.predict(&[0.5]).unwrap(), 3);
        assert_eq!(m.predict(&[-1.0]).unwrap(), 2);
        assert!(m.kkt_residual(&x, &[2, 3]).unwrap() <= 1e-3);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_multiclass_svm(&x, &[2, 2], 1.0, &KernelSpec::linear()).is_err());
        assert!(train_multiclass_svm(&x, &[2, 3], 0.0, &KernelSpec::linear()).is_err());
        assert!(train_multiclass_svm(&x[..1], &[2], 1.0, &KernelSpec::linear()).is_err());
    }

    #[test]
    fn zero_coefficient_vector_changes_nothing() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.2], vec![2.0, 2.0], vec![3.0, 1.0]];
        let y = [2, 2, 3, 3];
        let m = train_multiclass_svm(&x, &y, 1.0, &KernelSpec::linear()).unwrap();
        let mut padded = m.clone();
        padded.support_vectors.push(vec![9.0, -4.0]);
        padded.dual_coeffs.push(vec![0.0, 0.0]);
        padded.support_indices.push(99);
        for p in [[0.5, 0.5], [2.5, 0.0], [-3.0, 7.0]] {
            assert_eq!(m.predict(&p).unwrap(), padded.predict(&p).unwrap());
        }
    }

    #[test]
    fn zeroed_model_violates_kkt() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.2], vec![2.0, 2.0], vec![3.0, 1.0]];
        let y = [2, 2, 3, 3];
        let mut m = train_multiclass_svm(&x, &y, 1.0, &KernelSpec::linear()).unwrap();
        assert!(m.kkt_residual(&x, &y).unwrap() <= 1e-3);
        m.dual_coeffs.iter_mut().flatten().for_each(|c| *c = 0.0);
        let r = m.kkt_residual(&x, &y).unwrap();
        assert!(r > 1e-3, "{r}");
    }
}
