//! Wigner function of a Morse-oscillator density matrix.
//!
//! [`wigner_closed`] evaluates the finite Laguerre/Bessel expansion
//!
//! ```text
//! W(r, p) = 2/(πħβ) Σ_{n,m} ρ_nm N_n N_m ξ^{2N-n-m}
//!           Σ_{j≤m, k≤n} C(2N-m, m-j) C(2N-n, n-k) (-ξ)^{j+k} / (j! k!)
//!           K_{j+n-(k+m) - 2ip/ħβ}(ξ),        ξ = ξ(r)
//! ```
//!
//! and [`wigner_direct_oracle`] integrates `ρ(r + y/2, r - y/2) e^{-ipy}`
//! numerically. Units: `ħ = 1`, `r` in `1/β`.
//!
//! Writing `u = n - k`, `v = m - j`, the inner sums factor as
//! `B = Aᵀ ρ A` with `A[n][u] = N_n ξ^{N-u} C(2N-n, u) (-1)^{n-u} / (n-u)!`,
//! and the Bessel order becomes `u - v - 2ip/β`. Each `r` row therefore needs
//! only the diagonal sums `D(a) = Σ_{u-v=a} B(u, v)` and one family of
//! `N` Bessel values per momentum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel::{self, bessel_k_integer_family_scaled};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::morse::{morse_wavefunction, MorseParams};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{ln_binomial, ln_factorial};

/// Rectangular phase-space window. Both axes are uniform and include their
/// endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: -2.0,
            r_max: 10.0,
            n_r: 121,
            p_min: -20.0,
            p_max: 20.0,
            n_p: 201,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo.is_finite() && hi.is_finite() && hi > lo && n >= 2;
        if !ok(self.r_min, self.r_max, self.n_r) || !ok(self.p_min, self.p_max, self.n_p) {
            return Err(Error::domain(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    /// Same window, different resolution.
    pub fn with_points(self, n_r: usize, n_p: usize) -> Self {
        GridSpec { n_r, n_p, ..self }
    }

    pub fn r_axis(&self) -> Vec<f64> {
        linspace(self.r_min, self.r_max, self.n_r)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.n_p)
    }
}

/// Real Wigner values, row-major: `values[i * n_p + j] = W(r_i, p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub r_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |W - other|`; grids must share axes.
    pub fn max_difference(&self, other: &WignerGrid) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn step(axis: &[f64]) -> f64 {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }

    /// Trapezoid-weighted `∬ g(W) dr dp`.
    fn integrate_with(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (nr, np) = (self.r_axis.len(), self.p_axis.len());
        let weight = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for i in 0..nr {
            let mut row = 0.0;
            for j in 0..np {
                row += weight(j, np) * g(self.at(i, j));
            }
            total += weight(i, nr) * row;
        }
        total * Self::step(&self.r_axis) * Self::step(&self.p_axis)
    }
}

fn check_dims(rho: &DensityMatrix, params: &MorseParams) -> Result<()> {
    if rho.dim() != params.n_bound() {
        return Err(Error::domain(format!(
            "density matrix dim {} does not match N = {}",
            rho.dim(),
            params.n_bound()
        )));
    }
    Ok(())
}

/// Diagonal sums `D(a)`, `a = -(N-1)..=N-1`, stored at `a + N - 1`.
fn diagonal_sums(rho: &DMatrix<Complex64>, params: &MorseParams, xi: f64) -> Vec<Complex64> {
    let big = params.n_bound();
    let ln_xi = xi.ln();
    let two_n = 2 * big as u64;
    let a = DMatrix::from_fn(big, big, |n, u| {
        if u > n {
            return Complex64::new(0.0, 0.0);
        }
        let k = n - u;
        let ln = params.ln_norm(n) + (big - u) as f64 * ln_xi + ln_binomial(two_n - n as u64, u as u64)
            - ln_factorial(k as u64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * ln.exp(), 0.0)
    });
    let b = a.transpose() * (rho * &a);
    let mut d = vec![Complex64::new(0.0, 0.0); 2 * big - 1];
    for u in 0..big {
        for v in 0..big {
            d[u + big - 1 - v] += b[(u, v)];
        }
    }
    d
}

/// Closed-form Wigner function on the grid.
///
/// Rows are evaluated in parallel; every grid value depends only on its own
/// inputs, so the result does not depend on the thread count.
pub fn wigner_closed(rho: &DensityMatrix, params: &MorseParams, spec: &GridSpec) -> Result<WignerGrid> {
    check_dims(rho, params)?;
    spec.validate()?;
    let big = params.n_bound();
    let beta = params.beta();
    let pref = 2.0 / (PI * beta);
    let r_axis = spec.r_axis();
    let p_axis = spec.p_axis();

    // (value, Σ|D(a)| ∫|K integrand|) per grid point
    let rows: Vec<Vec<(Complex64, f64)>> = r_axis
        .par_iter()
        .map(|&r| {
            let xi = params.morse_variable(r);
            let d = diagonal_sums(&rho.entries, params, xi);
            p_axis
                .iter()
                .map(|&p| {
                    let (k, l1) = bessel_k_integer_family_scaled(big - 1, -2.0 * p / beta, xi).map_err(|e| Error::GridPoint {
                        r,
                        p,
                        source: Box::new(e),
                    })?;
                    let mut s = d[big - 1] * k[0];
                    let mut scale = d[big - 1].norm() * l1[0];
                    for a in 1..big {
                        s += d[big - 1 + a] * k[a] + d[big - 1 - a] * k[a].conj();
                        scale += (d[big - 1 + a].norm() + d[big - 1 - a].norm()) * l1[a];
                    }
                    Ok((s * pref, scale * pref))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    // imaginary part relative to the scale the Bessel values are accurate to
    let mut worst = (0.0f64, 0usize, 0usize);
    for (i, row) in rows.iter().enumerate() {
        for (j, (z, scale)) in row.iter().enumerate() {
            let rel = if *scale > 0.0 { z.im.abs() / scale } else { 0.0 };
            if rel > worst.0 {
                worst = (rel, i, j);
            }
        }
    }
    if worst.0 > 10.0 * bessel::TARGET {
        return Err(Error::ImaginaryResidue {
            residue: worst.0,
            r: r_axis[worst.1],
            p: p_axis[worst.2],
        });
    }
    Ok(WignerGrid {
        values: rows.iter().flatten().map(|(z, _)| z.re).collect(),
        r_axis,
        p_axis,
        time: rho.time,
    })
}

/// `[r_lo, r_hi]` outside of which `Σ √ρ_nn |ψ_n| < 1e-12`.
fn support(rho: &DensityMatrix, params: &MorseParams) -> (f64, f64) {
    let weights: Vec<f64> = rho.populations().iter().map(|p| p.max(0.0).sqrt()).collect();
    let envelope = |r: f64| -> f64 {
        weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(n, w)| w * morse_wavefunction(params, n, r).abs())
            .sum()
    };
    let step = 0.01 / params.beta();
    let (start, stop) = (-10.0 / params.beta(), 80.0 / params.beta());
    let count = ((stop - start) / step) as usize;
    let mut lo = None;
    let mut hi = start;
    for i in 0..=count {
        let r = start + step * i as f64;
        if envelope(r) > 1e-12 {
            lo.get_or_insert(r);
            hi = r;
        }
    }
    let lo = lo.unwrap_or(0.0);
    (lo - step, hi + step)
}

/// Reference Wigner function from the defining integral, by adaptive
/// quadrature at every grid point. Slow; meant for validation.
pub fn wigner_direct_oracle(rho: &DensityMatrix, params: &MorseParams, spec: &GridSpec) -> Result<WignerGrid> {
    check_dims(rho, params)?;
    spec.validate()?;
    let big = params.n_bound();
    let (lo, hi) = support(rho, params);
    let r_axis = spec.r_axis();
    let p_axis = spec.p_axis();
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-11,
        max_intervals: 4000,
    };
    let rows: Vec<Vec<f64>> = r_axis
        .par_iter()
        .map(|&r| {
            let reach = 2.0 * (r - lo).min(hi - r);
            p_axis
                .iter()
                .map(|&p| {
                    if reach <= 0.0 {
                        return Ok(0.0);
                    }
                    let mut plus = vec![0.0; big];
                    let mut minus = vec![0.0; big];
                    let integrand = |y: f64| {
                        for n in 0..big {
                            plus[n] = morse_wavefunction(params, n, r + 0.5 * y);
                            minus[n] = morse_wavefunction(params, n, r - 0.5 * y);
                        }
                        let mut g = Complex64::new(0.0, 0.0);
                        for m in 0..big {
                            let mut col = Complex64::new(0.0, 0.0);
                            for n in 0..big {
                                col += rho.entries[(n, m)] * plus[n];
                            }
                            g += col * minus[m];
                        }
                        (g * Complex64::from_polar(1.0, -p * y)).re
                    };
                    integrate(integrand, 0.0, reach, tol)
                        .map(|e| e.value / PI)
                        .map_err(|e| Error::GridPoint {
                            r,
                            p,
                            source: Box::new(e),
                        })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(WignerGrid {
        values: rows.concat(),
        r_axis,
        p_axis,
        time: rho.time,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerDiagnostics {
    /// `∬ W dr dp`.
    pub norm: f64,
    /// `2πħ ∬ W² dr dp`.
    pub purity_w: f64,
    /// `Tr ρ²`.
    pub purity_m: f64,
    pub min_w: f64,
    pub max_w: f64,
    /// `(r, p)` of the minimum.
    pub min_w_location: (f64, f64),
}

pub fn wigner_diagnostics(grid: &WignerGrid, rho: &DensityMatrix) -> WignerDiagnostics {
    let np = grid.p_axis.len();
    let (mut min_w, mut max_w, mut at) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for (idx, &v) in grid.values.iter().enumerate() {
        if v < min_w {
            min_w = v;
            at = idx;
        }
        max_w = max_w.max(v);
    }
    WignerDiagnostics {
        norm: grid.integrate_with(|w| w),
        purity_w: 2.0 * PI * grid.integrate_with(|w| w * w),
        purity_m: rho.purity(),
        min_w,
        max_w,
        min_w_location: (grid.r_axis[at / np], grid.p_axis[at % np]),
    }
}
