use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances a physical state must satisfy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTolerance {
    pub trace: f64,
    pub hermiticity: f64,
    /// Lower bound on the smallest eigenvalue (a small negative number).
    pub min_eigenvalue: f64,
}

impl Default for InvariantTolerance {
    fn default() -> Self {
        InvariantTolerance {
            trace: 1e-9,
            hermiticity: 1e-10,
            min_eigenvalue: -1e-8,
        }
    }
}

/// Reduced density matrix in the truncated number basis, `entries[(m, n)] = ⟨m|ρ|n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub entries: DMatrix<Complex64>,
    /// In units of `1/Ω₀`.
    pub time: f64,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>, time: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(DensityMatrix { entries, time })
    }

    /// `|n⟩⟨n|`.
    pub fn number_state(dim: usize, n: usize) -> Self {
        assert!(n < dim);
        let mut entries = DMatrix::zeros(dim, dim);
        entries[(n, n)] = Complex64::new(1.0, 0.0);
        DensityMatrix { entries, time: 0.0 }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let entries = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
        DensityMatrix { entries, time: 0.0 }
    }

    /// Diagonal state with the given populations (not renormalized).
    pub fn diagonal(populations: &[f64]) -> Self {
        let dim = populations.len();
        let mut entries = DMatrix::zeros(dim, dim);
        for (i, &p) in populations.iter().enumerate() {
            entries[(i, i)] = Complex64::new(p, 0.0);
        }
        DensityMatrix { entries, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Tr ρ²`, computed as `Σ |ρ_mn|²` (exact for Hermitian ρ).
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.entries[(n, n)].re).collect()
    }

    /// `⟨n̂⟩ = Σ n ρ_nn`.
    pub fn mean_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_coherence(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Checks trace, Hermiticity and positivity, reporting the first breach.
    pub fn check(&self, tol: &InvariantTolerance) -> Result<()> {
        let drift = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        if drift > tol.trace {
            return Err(self.breach("trace drift", drift));
        }
        let herm = self.hermiticity_error();
        if herm > tol.hermiticity {
            return Err(self.breach("hermiticity error", herm));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < tol.min_eigenvalue {
            return Err(self.breach("negative eigenvalue", min_ev));
        }
        Ok(())
    }

    fn breach(&self, what: &str, magnitude: f64) -> Error {
        Error::Integration {
            time: self.time,
            what: what.to_string(),
            magnitude,
        }
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purity_of_reference_states() {
        assert!((DensityMatrix::number_state(15, 3).purity() - 1.0).abs() < 1e-12);
        assert!((DensityMatrix::maximally_mixed(15).purity() - 1.0 / 15.0).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed(15).purity() - 0.066667).abs() < 1e-6);
    }

    #[test]
    fn invariants_detect_breaches() {
        let tol = InvariantTolerance::default();
        let ok = DensityMatrix::maximally_mixed(4);
        ok.check(&tol).unwrap();
        assert!((ok.min_eigenvalue() - 0.25).abs() < 1e-14);

        let mut bad = ok.clone();
        bad.entries[(0, 0)].re += 1e-6;
        assert!(matches!(bad.check(&tol), Err(Error::Integration { .. })));

        let mut skew = ok.clone();
        skew.entries[(0, 1)] = Complex64::new(0.0, 1e-6);
        assert!(skew.check(&tol).unwrap_err().to_string().contains("hermiticity"));

        let neg = DensityMatrix::diagonal(&[1.1, -0.1]);
        assert!(neg.check(&tol).unwrap_err().to_string().contains("negative eigenvalue"));
    }

    #[test]
    fn complex_hermitian_eigenvalues() {
        // [[1/2, i/2], [-i/2, 1/2]] is the pure state (|0> - i|1>)/√2
        let mut rho = DensityMatrix::maximally_mixed(2);
        rho.entries[(0, 1)] = Complex64::new(0.0, 0.5);
        rho.entries[(1, 0)] = Complex64::new(0.0, -0.5);
        assert!(rho.min_eigenvalue().abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }
}
