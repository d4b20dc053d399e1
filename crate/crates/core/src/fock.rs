//! Truncated f-deformed oscillator algebra in the number basis.
//!
//! The deformed ladder operators act as `A|n> = f(n)√n |n-1>` and
//! `A†|n> = f(n+1)√(n+1) |n+1>`. The Hamiltonian
//! `H = (ħΩ₀/2)(A†A + AA†)` is diagonal, and `[H, A] = -ħΩ(n̂)A` with the
//! level-dependent gap `Ω(n) = (Ω₀/2)[(n+2)f²(n+2) - n f²(n)]`.
//!
//! Units: ħ = 1, energies and frequencies in the same unit as `omega0`.
//! Identities that touch the truncation edge are only meaningful on the
//! interior block `0..dim-1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type LevelFn = dyn Fn(usize) -> f64 + Send + Sync;

/// The map `n ↦ f²(n)` defining the nonlinear algebra.
#[derive(Clone)]
pub struct DeformationFunction {
    f_squared: Arc<LevelFn>,
    label: String,
}

impl DeformationFunction {
    pub fn new<F>(label: impl Into<String>, f_squared: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        DeformationFunction {
            f_squared: Arc::new(f_squared),
            label: label.into(),
        }
    }

    /// `f² ≡ 1`.
    pub fn harmonic() -> Self {
        Self::new("harmonic", |_| 1.0)
    }

    /// Tabulated values; levels past the end of the table evaluate to the
    /// last entry.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self::new(label, move |n| values[n.min(values.len() - 1)])
    }

    pub fn f_squared(&self, n: usize) -> f64 {
        (self.f_squared)(n)
    }

    /// `f(n) = √f²(n)`; NaN if `f²(n) < 0`.
    pub fn f(&self, n: usize) -> f64 {
        self.f_squared(n).sqrt()
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for DeformationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeformationFunction")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// Deformed oscillator truncated to the levels `0..dim`.
#[derive(Clone, Debug)]
pub struct OscillatorModel {
    omega0: f64,
    dim: usize,
    deformation: DeformationFunction,
}

impl OscillatorModel {
    /// Fails if `dim < 2`, `omega0` is not positive, or `f²(n)` is negative or
    /// non-finite for any retained level.
    pub fn new(omega0: f64, dim: usize, deformation: DeformationFunction) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain(format!("truncation dimension must be >= 2, got {dim}")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::domain(format!("omega0 must be positive and finite, got {omega0}")));
        }
        for n in 0..dim {
            let v = deformation.f_squared(n);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "deformation `{}` has f^2({n}) = {v}, outside the physical ladder",
                    deformation.label()
                )));
            }
        }
        Ok(OscillatorModel {
            omega0,
            dim,
            deformation,
        })
    }

    pub fn harmonic(omega0: f64, dim: usize) -> Result<Self> {
        Self::new(omega0, dim, DeformationFunction::harmonic())
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn deformation(&self) -> &DeformationFunction {
        &self.deformation
    }

    /// `⟨n-1|A|n⟩ = f(n)√n`.
    pub fn lowering_element(&self, n: usize) -> f64 {
        self.deformation.f(n) * (n as f64).sqrt()
    }

    /// Diagonal entry `H_nn = (Ω₀/2)[(n+1)f²(n+1) + n f²(n)]`.
    pub fn energy(&self, n: usize) -> f64 {
        let f2 = |k: usize| self.deformation.f_squared(k);
        0.5 * self.omega0 * ((n + 1) as f64 * f2(n + 1) + n as f64 * f2(n))
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.energy(n)).collect()
    }
}

/// Dense operator in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub entries: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            entries: self.entries.adjoint(),
        }
    }

    fn diagonal(values: impl ExactSizeIterator<Item = f64>) -> FockOperator {
        let n = values.len();
        let mut entries = DMatrix::zeros(n, n);
        for (i, v) in values.enumerate() {
            entries[(i, i)] = Complex64::new(v, 0.0);
        }
        FockOperator { entries }
    }
}

/// Returns `(A, A†)`.
pub fn ladder_pair(model: &OscillatorModel) -> (FockOperator, FockOperator) {
    let dim = model.dim();
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new(model.lowering_element(n), 0.0);
    }
    let a = FockOperator { entries: a };
    let a_dag = a.adjoint();
    (a, a_dag)
}

pub fn hamiltonian(model: &OscillatorModel) -> FockOperator {
    FockOperator::diagonal(model.energies().into_iter())
}

/// Gap between levels `n+1` and `n`. Meaningful for `n <= dim - 2`; larger
/// `n` evaluates the deformation past the truncation.
pub fn gap_frequency(model: &OscillatorModel, n: usize) -> f64 {
    let f2 = |k: usize| model.deformation().f_squared(k);
    0.5 * model.omega0() * ((n + 2) as f64 * f2(n + 2) - n as f64 * f2(n))
}

/// `Ω(n̂)` as a diagonal operator.
pub fn gap_operator(model: &OscillatorModel) -> FockOperator {
    FockOperator::diagonal((0..model.dim()).map(|n| gap_frequency(model, n)))
}

/// Max-norm of `[H, A] + Ω(n̂)A` on the interior block.
pub fn eigenoperator_residual(model: &OscillatorModel) -> f64 {
    let (a, _) = ladder_pair(model);
    let h = hamiltonian(model).entries;
    let omega = gap_operator(model).entries;
    let a = a.entries;
    let r = &h * &a - &a * &h + &omega * &a;
    let k = model.dim() - 1;
    r.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
