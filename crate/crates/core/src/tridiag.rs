//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Tridiagonal system in row form. `sub[0]` and `sup[n-1]` are unused and
/// kept at zero.
#[derive(Debug, Clone)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert_eq!(sub.len(), diag.len());
        assert_eq!(sup.len(), diag.len());
        Self { sub, diag, sup }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal > 0 and off-diagonals <= 0.
    pub fn is_m_matrix_sign_pattern(&self) -> bool {
        let n = self.n();
        self.diag.iter().all(|&d| d > 0.0)
            && self.sub[1..].iter().all(|&a| a <= 0.0)
            && self.sup[..n - 1].iter().all(|&c| c <= 0.0)
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Precompute the forward-elimination coefficients; `solve` then costs
    /// one forward and one backward sweep per right-hand side.
    pub fn factor(&self) -> Result<TridiagonalFactor> {
        let n = self.n();
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 {
            return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
        }
        inv_denom[0] = 1.0 / denom;
        c_prime[0] = self.sup[0] * inv_denom[0];
        for i in 1..n {
            denom = self.diag[i] - self.sub[i] * c_prime[i - 1];
            if denom == 0.0 {
                return Err(Error::Singular(format!("zero pivot at row {i}")));
            }
            inv_denom[i] = 1.0 / denom;
            if i + 1 < n {
                c_prime[i] = self.sup[i] * inv_denom[i];
            }
        }
        Ok(TridiagonalFactor {
            sub: self.sub.clone(),
            c_prime,
            inv_denom,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factor()?.solve(rhs))
    }
}

/// Reusable forward-sweep coefficients of a Thomas factorization.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    sub: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn n(&self) -> usize {
        self.sub.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        let mut x = vec![0.0; n];
        x[0] = rhs[0] * self.inv_denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.sub[i] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
        x
    }
}
