//! Linear least squares via ridge-regularized normal equations.
//!
//! The tiny ridge term keeps one-hot designs and other collinear inputs
//! solvable without changing the minimizer in well-posed problems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge weight applied to every non-intercept coefficient.
pub const RIDGE: f64 = 1e-8;

/// A fitted linear model `y ≈ intercept + Σ coeff · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub columns: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearFit {
    /// Solve (XᵀX + λI')θ = Xᵀy where X carries a leading intercept column
    /// that the ridge penalty skips.
    ///
    /// `rows` is row-major without the intercept column; `target_name` labels
    /// error messages.
    pub fn fit(
        columns: Vec<String>,
        rows: &[Vec<f64>],
        targets: &[f64],
        target_name: &str,
    ) -> Result<LinearFit> {
        let n = rows.len();
        let p = columns.len();
        if n == 0 || n != targets.len() {
            return Err(Error::InvalidInput(format!(
                "fit of `{target_name}`: need equally many rows and targets, got {n} and {}",
                targets.len()
            )));
        }
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::SchemaMismatch(format!(
                "fit of `{target_name}`: design rows must have {p} columns"
            )));
        }

        let d = p + 1;
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let mut moment = DVector::<f64>::zeros(d);
        let mut z = vec![0.0; d];
        for (row, y) in rows.iter().zip(targets) {
            z[0] = 1.0;
            z[1..].copy_from_slice(row);
            for a in 0..d {
                moment[a] += z[a] * y;
                for b in a..d {
                    gram[(a, b)] += z[a] * z[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        for a in 1..d {
            gram[(a, a)] += RIDGE;
        }

        let theta = gram
            .lu()
            .solve(&moment)
            .ok_or_else(|| Error::SingularSystem(target_name.to_string()))?;
        if theta.iter().any(|c| !c.is_finite()) {
            return Err(Error::SingularSystem(target_name.to_string()));
        }

        Ok(LinearFit {
            columns,
            intercept: theta[0],
            coefficients: theta.as_slice()[1..].to_vec(),
        })
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.coefficients.len() {
            return Err(Error::SchemaMismatch(format!(
                "linear model expects {} inputs, got {}",
                self.coefficients.len(),
                features.len()
            )));
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(features)
                .map(|(c, x)| c * x)
                .sum::<f64>())
    }
}

/// Solve a small symmetric linear system `A θ = b` by LU decomposition.
pub(crate) fn solve_system(a: DMatrix<f64>, b: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem(what.to_string()))?;
    if solution.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularSystem(what.to_string()));
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_data_recovered() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let fit = LinearFit::fit(vec!["x".into()], &rows, &targets, "y").unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-8);
        assert!(fit.intercept.abs() < 1e-8);
    }

    #[test]
    fn collinear_design_still_solves() {
        // Duplicate column: unregularized normal equations are singular.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let targets: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 + 1.0).collect();
        let fit = LinearFit::fit(vec!["a".into(), "b".into()], &rows, &targets, "y").unwrap();
        let pred = fit.predict(&[4.0, 4.0]).unwrap();
        assert!((pred - 9.0).abs() < 1e-6);
    }

    #[test]
    fn predict_rejects_wrong_arity() {
        let fit = LinearFit {
            columns: vec!["x".into()],
            intercept: 0.0,
            coefficients: vec![1.0],
        };
        assert!(fit.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn refitting_is_bit_identical() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64).sin(), (i as f64).cos()])
            .collect();
        let targets: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - r[1] + 0.5).collect();
        let a = LinearFit::fit(vec!["s".into(), "c".into()], &rows, &targets, "y").unwrap();
        let b = LinearFit::fit(vec!["s".into(), "c".into()], &rows, &targets, "y").unwrap();
        assert_eq!(a, b);
    }
}
