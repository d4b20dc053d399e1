//! Nonlinear coherent states of the deformed oscillator.
//!
//! * AOCS: `c_n ∝ αⁿ / (√(n!) f(n)!)`, an approximate eigenstate of `A`.
//! * DOCS: `c_n ∝ C(2N, n)^{1/2} ζⁿ` with `ζ = e^{iφ} tan(|α| χₐ)`.
//! * Even cat: `∝ |α, f⟩ + |-α, f⟩`.
//!
//! All three are truncated to the retained ladder and renormalized there.
//! Coefficients are built in log space and shifted by their maximum before
//! exponentiation, so large `|α|` does not overflow.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fock::OscillatorModel;
use crate::morse::MorseParams;
use crate::special::{ln_binomial, ln_factorial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateKind {
    Aocs,
    Docs,
    EvenCat,
}

impl StateKind {
    pub const ALL: [StateKind; 3] = [StateKind::Aocs, StateKind::Docs, StateKind::EvenCat];

    pub fn as_str(&self) -> &'static str {
        match self {
            StateKind::Aocs => "aocs",
            StateKind::Docs => "docs",
            StateKind::EvenCat => "even_cat",
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aocs" => Ok(StateKind::Aocs),
            "docs" => Ok(StateKind::Docs),
            "even_cat" => Ok(StateKind::EvenCat),
            other => Err(Error::domain(format!("unknown state kind `{other}`"))),
        }
    }
}

/// Pure state over the retained ladder; unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub label: StateKind,
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Builds a normalized vector from `(ln|c_n|, arg c_n)` pairs. Entries with
/// `ln|c_n| = -inf` are exact zeros.
fn from_log_polar(terms: Vec<(f64, f64)>, label: StateKind) -> StateVector {
    let peak = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let mut amplitudes: Vec<Complex64> = terms
        .iter()
        .map(|&(ln_mag, phase)| {
            if ln_mag == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar((ln_mag - peak).exp(), phase)
            }
        })
        .collect();
    let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amplitudes {
        *c /= norm;
    }
    StateVector { amplitudes, label }
}

fn vacuum(dim: usize, label: StateKind) -> StateVector {
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    StateVector { amplitudes, label }
}

/// `ln(√(n!) f(1)···f(n))` for every retained level. `f(0)` is a common
/// factor of all coefficients and cancels under normalization.
fn aocs_ln_denominators(model: &OscillatorModel) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(model.dim());
    let mut ln_f_fact = 0.0;
    for n in 0..model.dim() {
        if n > 0 {
            let f2 = model.deformation().f_squared(n);
            if f2 <= 0.0 {
                return Err(Error::domain(format!("f({n}) = 0: coherent-state coefficients undefined")));
            }
            ln_f_fact += 0.5 * f2.ln();
        }
        out.push(0.5 * ln_factorial(n as u64) + ln_f_fact);
    }
    Ok(out)
}

fn aocs_terms(alpha: Complex64, model: &OscillatorModel) -> Result<Vec<(f64, f64)>> {
    let den = aocs_ln_denominators(model)?;
    let ln_a = alpha.norm().ln();
    let phi = alpha.arg();
    Ok(den
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let ln_pow = if n == 0 { 0.0 } else { n as f64 * ln_a };
            (ln_pow - d, n as f64 * phi)
        })
        .collect())
}

/// Annihilation-operator coherent state `|α, f⟩`.
pub fn aocs(alpha: Complex64, model: &OscillatorModel) -> Result<StateVector> {
    aocs_ln_denominators(model)?;
    if alpha.norm() == 0.0 {
        return Ok(vacuum(model.dim(), StateKind::Aocs));
    }
    Ok(from_log_polar(aocs_terms(alpha, model)?, StateKind::Aocs))
}

/// `ζ = e^{iφ} tan(|α| χₐ)` for `α = |α| e^{iφ}`.
pub fn zeta_from_alpha(alpha: Complex64, chi: f64) -> Complex64 {
    Complex64::from_polar((alpha.norm() * chi).tan(), alpha.arg())
}

/// Inverse of [`zeta_from_alpha`] on the principal branch.
pub fn alpha_from_zeta(zeta: Complex64, chi: f64) -> Complex64 {
    Complex64::from_polar(zeta.norm().atan() / chi, zeta.arg())
}

/// Deformed-displacement-operator coherent state `|ζ⟩`.
pub fn docs(zeta: Complex64, params: &MorseParams) -> StateVector {
    let dim = params.n_bound();
    if zeta.norm() == 0.0 {
        return vacuum(dim, StateKind::Docs);
    }
    let two_n = 2 * dim as u64;
    let ln_z = zeta.norm().ln();
    let phi = zeta.arg();
    let terms = (0..dim)
        .map(|n| {
            let ln_pow = if n == 0 { 0.0 } else { n as f64 * ln_z };
            (0.5 * ln_binomial(two_n, n as u64) + ln_pow, n as f64 * phi)
        })
        .collect();
    from_log_polar(terms, StateKind::Docs)
}

/// Normalized `|α, f⟩ + |-α, f⟩`; odd levels are exactly zero.
pub fn even_cat(alpha: Complex64, model: &OscillatorModel) -> Result<StateVector> {
    aocs_ln_denominators(model)?;
    if alpha.norm() == 0.0 {
        return Ok(vacuum(model.dim(), StateKind::EvenCat));
    }
    let terms = aocs_terms(alpha, model)?
        .into_iter()
        .enumerate()
        // (1 + (-1)^n) doubles even levels; the uniform factor 2 cancels
        .map(|(n, t)| if n % 2 == 0 { t } else { (f64::NEG_INFINITY, 0.0) })
        .collect();
    Ok(from_log_polar(terms, StateKind::EvenCat))
}

/// Builds `kind` for a real, non-negative size parameter `alpha`.
pub fn build_state(kind: StateKind, alpha: f64, params: &MorseParams) -> Result<StateVector> {
    let model = params.oscillator();
    let a = Complex64::new(alpha, 0.0);
    match kind {
        StateKind::Aocs => aocs(a, &model),
        StateKind::Docs => Ok(docs(zeta_from_alpha(a, params.chi()), params)),
        StateKind::EvenCat => even_cat(a, &model),
    }
}

/// Result of [`alpha_for_mean_n`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeSolution {
    pub alpha: f64,
    /// Set for DOCS.
    pub zeta: Option<f64>,
    pub mean_n: f64,
}

/// Finds the real `α >= 0` for which the state built by `kind` has
/// `⟨n̂⟩ = target` (to 1e-6), by bracket doubling and bisection.
///
/// DOCS is parametrized by `ζ` during the search, since `α ↦ tan(αχₐ)` is
/// only monotone below `π/(2χₐ)`.
pub fn alpha_for_mean_n(target: f64, kind: StateKind, params: &MorseParams) -> Result<SizeSolution> {
    let dim = params.n_bound();
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::domain(format!("target mean excitation must be >= 0, got {target}")));
    }
    if target == 0.0 {
        return Ok(SizeSolution {
            alpha: 0.0,
            zeta: (kind == StateKind::Docs).then_some(0.0),
            mean_n: 0.0,
        });
    }
    let model = params.oscillator();
    let mean_at = |x: f64| -> Result<f64> {
        let a = Complex64::new(x, 0.0);
        Ok(match kind {
            StateKind::Aocs => aocs(a, &model)?.mean_number(),
            StateKind::Docs => docs(a, params).mean_number(),
            StateKind::EvenCat => even_cat(a, &model)?.mean_number(),
        })
    };
    let top = match kind {
        StateKind::EvenCat => ((dim - 1) / 2 * 2) as f64,
        _ => (dim - 1) as f64,
    };
    let unreachable = |best: f64| {
        Error::domain(format!(
            "target <n> = {target} unreachable for {kind} with N = {dim}: max attainable {best:.6} (supremum {top})"
        ))
    };
    if target >= top {
        return Err(unreachable(top));
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut m_hi = mean_at(hi)?;
    let mut doublings = 0;
    while m_hi < target {
        lo = hi;
        hi *= 2.0;
        m_hi = mean_at(hi)?;
        doublings += 1;
        if doublings > 1000 || !hi.is_finite() {
            return Err(unreachable(m_hi));
        }
    }
    let mut x = hi;
    let mut m = m_hi;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m_mid = mean_at(mid)?;
        x = mid;
        m = m_mid;
        if (m_mid - target).abs() < 1e-12 {
            break;
        }
        if m_mid < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (m - target).abs() >= 1e-6 {
        return Err(unreachable(m));
    }
    Ok(match kind {
        StateKind::Docs => SizeSolution {
            alpha: alpha_from_zeta(Complex64::new(x, 0.0), params.chi()).re,
            zeta: Some(x),
            mean_n: m,
        },
        _ => SizeSolution {
            alpha: x,
            zeta: None,
            mean_n: m,
        },
    })
}

/// `ρ = c c†`.
pub fn to_density(state: &StateVector) -> DensityMatrix {
    let d = state.dim();
    let entries = DMatrix::from_fn(d, d, |m, n| state.amplitudes[m] * state.amplitudes[n].conj());
    DensityMatrix { entries, time: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ladder_pair;
    use crate::special::binomial;

    fn n15() -> MorseParams {
        MorseParams::with_bound_states(15).unwrap()
    }

    #[test]
    fn vacuum_cases() {
        let p = n15();
        let model = p.oscillator();
        let zero = Complex64::new(0.0, 0.0);
        for s in [
            aocs(zero, &model).unwrap(),
            docs(zero, &p),
            even_cat(zero, &model).unwrap(),
        ] {
            assert_eq!(s.amplitudes[0], Complex64::new(1.0, 0.0));
            assert!(s.amplitudes[1..].iter().all(|c| c.norm() == 0.0));
        }
        let tiny = even_cat(Complex64::new(1e-9, 0.0), &model).unwrap();
        assert!((tiny.amplitudes[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_aocs_matches_glauber() {
        let model = OscillatorModel::harmonic(1.0, 30).unwrap();
        let alpha = Complex64::from_polar(1.0, 0.7);
        let s = aocs(alpha, &model).unwrap();
        let mut fact = 1.0;
        for n in 0..30 {
            if n > 0 {
                fact *= n as f64;
            }
            let glauber = (-alpha.norm_sqr() / 2.0).exp() * alpha.powu(n as u32) / fact.sqrt();
            assert!((s.amplitudes[n] - glauber).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn aocs_is_approximate_eigenstate() {
        let p = n15();
        let sol = alpha_for_mean_n(2.0, StateKind::Aocs, &p).unwrap();
        let a = Complex64::new(sol.alpha, 0.0);
        let s = aocs(a, &p.oscillator()).unwrap();
        let (lower, _) = ladder_pair(&p.oscillator());
        let v = nalgebra::DVector::from_vec(s.amplitudes.clone());
        let residual = (&lower.entries * &v - v * a).norm();
        assert!(residual < 0.05, "residual {residual}");
    }

    #[test]
    fn docs_peak_and_normalization() {
        let p = n15();
        let sol = alpha_for_mean_n(2.0, StateKind::Docs, &p).unwrap();
        let zeta = sol.zeta.unwrap();
        assert!((zeta_from_alpha(Complex64::new(sol.alpha, 0.0), p.chi()).re - zeta).abs() < 1e-12);
        let s = docs(Complex64::new(zeta, 0.0), &p);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let pops = s.populations();
        let peak = (0..15).max_by(|&a, &b| pops[a].total_cmp(&pops[b])).unwrap();
        assert!(peak == 1 || peak == 2, "peak at {peak}");
        for n in 1..15 {
            if n <= peak {
                assert!(pops[n] > pops[n - 1], "not single-peaked at {n}");
            } else {
                assert!(pops[n] < pops[n - 1], "not single-peaked at {n}");
            }
        }
    }

    #[test]
    fn docs_coefficients_follow_binomials() {
        let p = n15();
        let zeta = 0.3;
        let s = docs(Complex64::new(zeta, 0.0), &p);
        for n in 1..15 {
            let ratio = s.amplitudes[n].re / s.amplitudes[0].re;
            let expect = binomial(30, n as u64).sqrt() * zeta.powi(n as i32);
            assert!((ratio / expect - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn even_cat_parity_and_purity() {
        let p = n15();
        let sol = alpha_for_mean_n(2.0, StateKind::EvenCat, &p).unwrap();
        let s = even_cat(Complex64::new(sol.alpha, 0.0), &p.oscillator()).unwrap();
        for n in (1..15).step_by(2) {
            assert!(s.amplitudes[n].norm() < 1e-14);
        }
        assert!((to_density(&s).purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_number_solver_hits_target() {
        let p = n15();
        for kind in StateKind::ALL {
            let sol = alpha_for_mean_n(2.0, kind, &p).unwrap();
            let s = build_state(kind, sol.alpha, &p).unwrap();
            assert!((s.mean_number() - 2.0).abs() < 1e-6, "{kind}: {}", s.mean_number());
            assert_eq!(alpha_for_mean_n(0.0, kind, &p).unwrap().alpha, 0.0);
        }
    }

    #[test]
    fn mean_number_is_monotone_in_size() {
        let p = n15();
        for kind in StateKind::ALL {
            let hi = alpha_for_mean_n(10.0, kind, &p).unwrap().alpha;
            let mut last = -1.0;
            for i in 0..=200 {
                let a = hi * i as f64 / 200.0;
                let m = build_state(kind, a, &p).unwrap().mean_number();
                assert!(m > last, "{kind}: not increasing at alpha = {a}");
                last = m;
            }
        }
    }

    #[test]
    fn unreachable_target_reports_maximum() {
        let p = n15();
        let err = alpha_for_mean_n(14.0, StateKind::Aocs, &p).unwrap_err();
        assert!(err.to_string().contains("max attainable"), "{err}");
        assert!(alpha_for_mean_n(-1.0, StateKind::Aocs, &p).is_err());
    }

    #[test]
    fn density_of_pure_states() {
        let p = n15();
        let rho = to_density(&docs(Complex64::new(0.0, 0.0), &p));
        assert_eq!(rho.entries[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(rho.entries.iter().filter(|z| z.norm() != 0.0).count(), 1);
        let s = aocs(Complex64::from_polar(1.3, -0.4), &p.oscillator()).unwrap();
        let rho = to_density(&s);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_error() == 0.0);
    }
}
