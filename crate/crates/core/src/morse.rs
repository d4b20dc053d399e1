//! The Morse-like oscillator: deformation `f²(n) = 1 - χₐn` with
//! `χₐ = 1/(2N+1)` for `N` bound states, its spectrum, the dimensionless
//! dipole coupling function `η(n)` and the bound-state wavefunctions.
//!
//! Positions are measured in units of `1/β`; with the default `β = 1` the
//! Morse variable is `ξ(r) = (2N+1) e^{-r}`.

use crate::error::{Error, Result};
use crate::fock::{DeformationFunction, OscillatorModel};
use crate::special::{laguerre, ln_factorial, ln_gamma_int};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorseParams {
    n_bound: usize,
    chi: f64,
    omega0: f64,
    beta: f64,
}

impl MorseParams {
    pub fn new(n_bound: usize, omega0: f64, beta: f64) -> Result<Self> {
        if n_bound < 2 {
            return Err(Error::domain(format!("Morse model needs at least 2 bound states, got {n_bound}")));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!(
                "omega0 and beta must be positive, got omega0 = {omega0}, beta = {beta}"
            )));
        }
        Ok(MorseParams {
            n_bound,
            chi: 1.0 / (2 * n_bound + 1) as f64,
            omega0,
            beta,
        })
    }

    /// `N` bound states with `Ω₀ = β = 1`.
    pub fn with_bound_states(n_bound: usize) -> Result<Self> {
        Self::new(n_bound, 1.0, 1.0)
    }

    pub fn n_bound(&self) -> usize {
        self.n_bound
    }

    /// Anharmonicity `χₐ = 1/(2N+1)`.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `k = 2N + 1`.
    pub fn k(&self) -> u64 {
        2 * self.n_bound as u64 + 1
    }

    /// The deformed oscillator restricted to the bound ladder (`dim = N`).
    pub fn oscillator(&self) -> OscillatorModel {
        OscillatorModel::new(self.omega0, self.n_bound, morse_deformation(self))
            .expect("Morse deformation is positive on the bound ladder")
    }

    fn check_level(&self, n: usize, max: usize) -> Result<()> {
        if n > max {
            return Err(Error::domain(format!(
                "level {n} outside 0..={max} for N = {}",
                self.n_bound
            )));
        }
        Ok(())
    }

    /// `ξ(r) = (2N+1) e^{-βr}`.
    pub fn morse_variable(&self, r: f64) -> f64 {
        self.k() as f64 * (-self.beta * r).exp()
    }

    /// `ln N_n` with `N_n = [β n! (k-2n-1) / Γ(k-n)]^{1/2}`.
    pub fn ln_norm(&self, n: usize) -> f64 {
        let k = self.k();
        let n64 = n as u64;
        0.5 * (self.beta.ln() + ln_factorial(n64) + ((k - 2 * n64 - 1) as f64).ln() - ln_gamma_int(k - n64))
    }
}

/// `n ↦ 1 - χₐ n`.
pub fn morse_deformation(params: &MorseParams) -> DeformationFunction {
    let chi = params.chi();
    DeformationFunction::new(format!("morse(N={})", params.n_bound()), move |n| 1.0 - chi * n as f64)
}

/// `E_n = ħω_e(n+½) - ħω_e/(2N+1) (n+½)²` with `ω_e = Ω₀`.
pub fn morse_energy(params: &MorseParams, n: usize) -> Result<f64> {
    params.check_level(n, params.n_bound() - 1)?;
    let x = n as f64 + 0.5;
    Ok(params.omega0() * (x - params.chi() * x * x))
}

/// `η(n) = (N+½) √((N-n)(N-n-1)) / ((N-n/2)(N-n-½))`; vanishes on the top
/// bound state.
pub fn eta(params: &MorseParams, n: usize) -> Result<f64> {
    params.check_level(n, params.n_bound() - 1)?;
    let big = params.n_bound() as f64;
    let n = n as f64;
    Ok((big + 0.5) * ((big - n) * (big - n - 1.0)).sqrt() / ((big - n / 2.0) * (big - n - 0.5)))
}

/// `η(n)` for every bound level.
pub fn eta_values(params: &MorseParams) -> Vec<f64> {
    (0..params.n_bound())
        .map(|n| eta(params, n).expect("in range"))
        .collect()
}

/// `⟨n+1|r|n⟩ = β⁻² N_n N_{n+1} Γ(k-n-1) / ((k-2n-2) n!)`, the adjacent-level
/// dipole element. Evaluated in log space.
pub fn dipole_element(params: &MorseParams, n: usize) -> Result<f64> {
    params.check_level(n, params.n_bound() - 2)?;
    let k = params.k();
    let n64 = n as u64;
    // sign (-1)^{α'+1} with α' = 1 is +1
    let ln = -2.0 * params.beta().ln() + params.ln_norm(n) + params.ln_norm(n + 1) + ln_gamma_int(k - n64 - 1)
        - ((k - 2 * n64 - 2) as f64).ln()
        - ln_factorial(n64);
    let value = ln.exp();
    if !value.is_finite() {
        return Err(Error::domain(format!("dipole element for n = {n} overflows (ln = {ln})")));
    }
    Ok(value)
}

/// Bound-state wavefunction `ψ_n(r) = N_n e^{-ξ/2} ξ^{N-n} L_n^{2N-2n}(ξ)`.
///
/// Levels outside the bound ladder are a caller bug and panic.
pub fn morse_wavefunction(params: &MorseParams, n: usize, r: f64) -> f64 {
    assert!(n < params.n_bound(), "level {n} is not bound");
    let xi = params.morse_variable(r);
    let s = (params.n_bound() - n) as f64;
    let ln_envelope = params.ln_norm(n) - 0.5 * xi + s * xi.ln();
    if ln_envelope < -745.0 {
        return 0.0;
    }
    let poly = laguerre(n, 2.0 * s, xi);
    if !poly.is_finite() {
        return 0.0;
    }
    ln_envelope.exp() * poly
}

/// Wavefunctions of all bound levels sampled on a sorted grid.
#[derive(Clone, Debug)]
pub struct MorseWavefunctionTable {
    pub grid_r: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl MorseWavefunctionTable {
    /// Fails unless every level decays below `1e-8` of its peak at both grid
    /// ends.
    pub fn new(params: &MorseParams, grid_r: Vec<f64>) -> Result<Self> {
        if grid_r.len() < 3 || grid_r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("wavefunction grid must be strictly increasing with >= 3 points"));
        }
        let values: Vec<Vec<f64>> = (0..params.n_bound())
            .map(|n| grid_r.iter().map(|&r| morse_wavefunction(params, n, r)).collect())
            .collect();
        for (n, psi) in values.iter().enumerate() {
            let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tail = psi[0].abs().max(psi[psi.len() - 1].abs());
            if tail > 1e-8 * peak {
                return Err(Error::domain(format!(
                    "grid [{}, {}] too small: level {n} tail/peak = {:.2e}",
                    grid_r[0],
                    grid_r[grid_r.len() - 1],
                    tail / peak
                )));
            }
        }
        Ok(MorseWavefunctionTable { grid_r, values })
    }

    pub fn uniform(params: &MorseParams, r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        let h = (r_max - r_min) / (points - 1) as f64;
        Self::new(params, (0..points).map(|i| r_min + h * i as f64).collect())
    }

    /// Trapezoid-rule overlap `∫ψ_n ψ_m dr` on the grid.
    pub fn overlap(&self, n: usize, m: usize) -> f64 {
        let (a, b) = (&self.values[n], &self.values[m]);
        self.grid_r
            .windows(2)
            .enumerate()
            .map(|(i, w)| 0.5 * (w[1] - w[0]) * (a[i] * b[i] + a[i + 1] * b[i + 1]))
            .sum()
    }

    /// Largest `|∫ψ_nψ_m - δ_nm|` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let levels = self.values.len();
        let mut worst = 0.0f64;
        for n in 0..levels {
            for m in n..levels {
                let target = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((self.overlap(n, m) - target).abs());
            }
        }
        worst
    }

    /// Number of sign changes of level `n` on the grid, ignoring samples below
    /// `1e-10` of the peak.
    pub fn sign_changes(&self, n: usize) -> usize {
        let psi = &self.values[n];
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = 0.0f64;
        let mut changes = 0;
        for &v in psi {
            if v.abs() < 1e-10 * peak {
                continue;
            }
            if last != 0.0 && last.signum() != v.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }
}
