use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Asymptotic covariance of the scaled (quantile, moment) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma2<T> {
    pub g11: T,
    pub g22: T,
    pub g12: T,
    /// `r E[(X - mu)^(r-1) sgn(X - mu)^r]`
    pub a_r: T,
}

/// `Gamma = A Sigma A^T` with `A = [[0, 0, 1], [-a_r, 1, 0]]`, the rows of
/// `Sigma` ordered (U, V, W).
pub fn gamma_from_trivariate<T: Scalar>(sigma: &[[T; 3]; 3], a_r: T) -> Gamma2<T> {
    let a = a_r;
    let g11 = sigma[2][2].clone();
    let g22 = a.clone() * a.clone() * sigma[0][0].clone()
        - a.clone() * sigma[0][1].clone()
        - a.clone() * sigma[1][0].clone()
        + sigma[1][1].clone();
    let g12 = sigma[2][1].clone() - a.clone() * sigma[2][0].clone();
    let g21 = sigma[1][2].clone() - a.clone() * sigma[0][2].clone();
    let g12 = if g12 == g21 {
        g12
    } else {
        (g12 + g21) / T::from_count(2)
    };
    Gamma2 { g11, g22, g12, a_r: a }
}

impl<T: Scalar> Gamma2<T> {
    pub fn matrix(&self) -> [[T; 2]; 2] {
        [
            [self.g11.clone(), self.g12.clone()],
            [self.g12.clone(), self.g22.clone()],
        ]
    }
}

impl Gamma2<f64> {
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.g11 + self.g22;
        let disc = ((self.g11 - self.g22).powi(2) + 4.0 * self.g12 * self.g12).sqrt();
        (0.5 * (tr - disc), 0.5 * (tr + disc))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues().0 >= -tol
    }

    /// Smallest eigenvalue at most `1e-8` in absolute terms or relative to
    /// the largest.
    pub fn near_singular(&self) -> bool {
        let (lo, hi) = self.eigenvalues();
        lo <= 1e-8 * hi.abs().max(1.0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.g11,
            (1, 1) => self.g22,
            _ => self.g12,
        }
    }
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending.
pub fn sym3_eigenvalues(s: &[[f64; 3]; 3]) -> [f64; 3] {
    let m = nalgebra::Matrix3::from_fn(|i, j| 0.5 * (s[i][j] + s[j][i]));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[1], ev[2]]
}
