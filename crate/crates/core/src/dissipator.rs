//! Thermal-reservoir master equation in the number basis.
//!
//! With the jump amplitude `g(n) = ⟨n+1|F†|n⟩ = η(n) f(n+1) √(n+1)`, the
//! generator reads
//!
//! ```text
//! ρ̇_mn = -i (E_m - E_n) ρ_mn
//!        - [K₁(m) g(m-1)² + K₂(m) g(m)² + K₁(n) g(n-1)² + K₂(n) g(n)²] ρ_mn
//!        + [K₃(m) + K₃(n)] g(m-1) g(n-1) ρ_{m-1,n-1}
//!        + [K₄(m) + K₄(n)] g(m) g(n) ρ_{m+1,n+1}
//! ```
//!
//! plus the optional commutator terms of the frequency shifts `δ₁..δ₄`.
//! For the Morse deformation `g(m)g(n)` in the `K₄` line contains the factor
//! `√((m+1)(n+1))`; the equation is commonly printed without it, but it is
//! required for `Tr ρ` to be conserved.
//!
//! The top retained level has `g(dim-1) = 0`: nothing couples out of the
//! truncated ladder. For the Morse model this coincides with `η(N-1) = 0`.
//!
//! Frequencies are in units of `Ω₀`; `theta = ħΩ₀/k_BT`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{DensityMatrix, InvariantTolerance};
use crate::error::{Error, Result};
use crate::fock::{gap_frequency, OscillatorModel};
use crate::quadrature::{integrate as quad, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReservoirParams {
    /// `ħΩ₀ / k_B T`.
    pub theta: f64,
    /// Dimensionless damping prefactor: `γ(n) = gamma_scale (Ω(n)/Ω₀)³ Ω₀`.
    pub gamma_scale: f64,
    pub shifts_enabled: bool,
    /// UV cutoff `ω_c / Ω₀` for the shift integrals.
    pub shift_cutoff: f64,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        ReservoirParams {
            theta: 4.0,
            gamma_scale: 0.1,
            shifts_enabled: false,
            shift_cutoff: 10.0,
        }
    }
}

impl ReservoirParams {
    pub fn new(theta: f64, gamma_scale: f64) -> Result<Self> {
        let p = ReservoirParams {
            theta,
            gamma_scale,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_shifts(mut self, cutoff: f64) -> Self {
        self.shifts_enabled = true;
        self.shift_cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::domain(format!("theta must be > 0, got {}", self.theta)));
        }
        if !(self.gamma_scale >= 0.0) || !self.gamma_scale.is_finite() {
            return Err(Error::domain(format!("gamma_scale must be >= 0, got {}", self.gamma_scale)));
        }
        Ok(())
    }
}

/// Thermal occupation `1/(e^{θω} - 1)` at frequency `omega` (units of `Ω₀`).
/// `θ = ∞` gives zero.
pub fn planck_nbar(omega: f64, reservoir: &ReservoirParams) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("thermal occupation needs omega > 0, got {omega}")));
    }
    Ok(1.0 / (reservoir.theta * omega).exp_m1())
}

/// `γ(n) = gamma_scale (Ω(n)/Ω₀)³`, in units of `Ω₀` times `Ω₀`.
pub fn gamma_of_n(n: usize, model: &OscillatorModel, reservoir: &ReservoirParams) -> f64 {
    let w = gap_frequency(model, n) / model.omega0();
    reservoir.gamma_scale * w.powi(3) * model.omega0()
}

/// Per-level dissipative coefficients and frequency shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
    pub k4: Vec<f64>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub delta3: Vec<f64>,
    pub delta4: Vec<f64>,
}

impl RateTable {
    pub fn dim(&self) -> usize {
        self.k1.len()
    }
}

/// `K₁(n) = γ(n-1)/2 [n̄(Ω(n-1)) + 1]`, `K₂(n) = γ(n)/2 n̄(Ω(n))`,
/// `K₃(n) = γ(n-1)/2 n̄(Ω(n-1))`, `K₄(n) = γ(n)/2 [n̄(Ω(n)) + 1]`.
///
/// `K₁(0)` and `K₃(0)` reference `Ω(-1)` and are zero. `K₂` and `K₄` on the
/// top level reference the gap out of the truncation; they are evaluated when
/// that gap is positive and zero otherwise (they only multiply `g(dim-1) = 0`).
/// Shifts are filled in when the reservoir enables them.
pub fn rate_table(model: &OscillatorModel, reservoir: &ReservoirParams) -> Result<RateTable> {
    reservoir.validate()?;
    let dim = model.dim();
    let omega0 = model.omega0();
    for n in 0..dim - 1 {
        let w = gap_frequency(model, n);
        if !(w > 0.0) {
            return Err(Error::domain(format!("non-positive gap Omega({n}) = {w} inside the ladder")));
        }
    }
    // (γ/2 · n̄, γ/2 · (n̄ + 1)) for the gap above level n
    let half_rates = |n: usize| -> Result<(f64, f64)> {
        let w = gap_frequency(model, n) / omega0;
        if w <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let half_gamma = 0.5 * gamma_of_n(n, model, reservoir);
        let nbar = planck_nbar(w, reservoir)?;
        Ok((half_gamma * nbar, half_gamma * (nbar + 1.0)))
    };
    let up: Vec<(f64, f64)> = (0..dim).map(half_rates).collect::<Result<_>>()?;
    let mut t = RateTable {
        k1: vec![0.0; dim],
        k2: vec![0.0; dim],
        k3: vec![0.0; dim],
        k4: vec![0.0; dim],
        delta1: vec![0.0; dim],
        delta2: vec![0.0; dim],
        delta3: vec![0.0; dim],
        delta4: vec![0.0; dim],
    };
    for n in 0..dim {
        t.k2[n] = up[n].0;
        t.k4[n] = up[n].1;
        if n > 0 {
            t.k3[n] = up[n - 1].0;
            t.k1[n] = up[n - 1].1;
        }
    }
    if reservoir.shifts_enabled {
        let [d1, d2, d3, d4] = shift_table(model, reservoir)?;
        t.delta1 = d1;
        t.delta2 = d2;
        t.delta3 = d3;
        t.delta4 = d4;
    }
    Ok(t)
}

/// `P∫₀^c h(ω)/(Ω - ω) dω` with the pole removed by pairing `Ω ± s`.
fn principal_value<F: Fn(f64) -> f64>(h: F, pole: f64, cutoff: f64) -> Result<f64> {
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_intervals: 4000,
    };
    let half_width = pole.min(cutoff - pole);
    let paired = quad(|s| (h(pole - s) - h(pole + s)) / s, 0.0, half_width, tol)?;
    let rest = if pole < cutoff - pole {
        quad(|w| h(w) / (pole - w), 2.0 * pole, cutoff, tol)?
    } else {
        quad(|w| h(w) / (pole - w), 0.0, 2.0 * pole - cutoff, tol)?
    };
    Ok(paired.value + rest.value)
}

/// Frequency shifts `[δ₁, δ₂, δ₃, δ₄]` per level, in units of `Ω₀`.
///
/// The integrals over the reservoir spectrum are cut off at
/// `reservoir.shift_cutoff`; the `(n̄ + 1)` integrals grow with the cutoff.
/// Returns zeros when shifts are disabled.
pub fn shift_table(model: &OscillatorModel, reservoir: &ReservoirParams) -> Result<[Vec<f64>; 4]> {
    let dim = model.dim();
    let mut out = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    if !reservoir.shifts_enabled {
        return Ok(out);
    }
    let cutoff = reservoir.shift_cutoff;
    let theta = reservoir.theta;
    let thermal = move |w: f64| if w <= 0.0 { 0.0 } else { w.powi(3) / (theta * w).exp_m1() };
    let vacuum_plus_thermal = move |w: f64| thermal(w) + w.powi(3);
    let pref = reservoir.gamma_scale * model.omega0() / (2.0 * PI);

    // integrals for the gap above each level
    let mut with_vacuum = vec![0.0; dim];
    let mut thermal_only = vec![0.0; dim];
    for n in 0..dim {
        let pole = gap_frequency(model, n) / model.omega0();
        if pole <= 0.0 {
            continue;
        }
        if cutoff <= pole {
            return Err(Error::domain(format!(
                "shift cutoff {cutoff} must exceed the gap Omega({n})/Omega0 = {pole}"
            )));
        }
        with_vacuum[n] = principal_value(vacuum_plus_thermal, pole, cutoff)?;
        thermal_only[n] = principal_value(thermal, pole, cutoff)?;
    }
    for n in 0..dim {
        if n > 0 {
            out[0][n] = pref * with_vacuum[n - 1];
            out[2][n] = pref * thermal_only[n - 1];
        }
        out[1][n] = -pref * thermal_only[n];
        out[3][n] = -pref * with_vacuum[n];
    }
    Ok(out)
}

/// `max |δ(2ω_c) - δ(ω_c)|` over all four shift arrays.
pub fn shift_cutoff_sensitivity(model: &OscillatorModel, reservoir: &ReservoirParams) -> Result<f64> {
    let base = shift_table(model, reservoir)?;
    let mut doubled = *reservoir;
    doubled.shift_cutoff *= 2.0;
    let wide = shift_table(model, &doubled)?;
    Ok(base
        .iter()
        .zip(wide.iter())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

/// Precomputed number-basis generator `ρ ↦ ρ̇`.
#[derive(Clone, Debug)]
pub struct Generator {
    dim: usize,
    // column-major coefficient planes, same layout as nalgebra storage
    diag: Vec<Complex64>,
    from_below: Vec<Complex64>,
    from_above: Vec<Complex64>,
}

impl Generator {
    /// `eta` holds `η(n)` for every retained level (all ones for the plain
    /// deformed oscillator).
    pub fn new(model: &OscillatorModel, rates: &RateTable, eta: &[f64]) -> Result<Self> {
        let dim = model.dim();
        if rates.dim() != dim || eta.len() != dim {
            return Err(Error::domain(format!(
                "dimension mismatch: model {dim}, rates {}, eta {}",
                rates.dim(),
                eta.len()
            )));
        }
        let energies = model.energies();
        let g: Vec<f64> = (0..dim)
            .map(|n| {
                if n + 1 < dim {
                    eta[n] * model.lowering_element(n + 1)
                } else {
                    0.0
                }
            })
            .collect();
        let below = |n: usize| if n == 0 { 0.0 } else { g[n - 1] };
        let loss: Vec<f64> = (0..dim)
            .map(|n| rates.k1[n] * below(n).powi(2) + rates.k2[n] * g[n].powi(2))
            .collect();
        let level_shift: Vec<f64> = (0..dim)
            .map(|n| rates.delta1[n] * below(n).powi(2) + rates.delta2[n] * g[n].powi(2))
            .collect();

        let mut diag = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut from_below = diag.clone();
        let mut from_above = diag.clone();
        for n in 0..dim {
            for m in 0..dim {
                let idx = m + n * dim;
                let freq = (energies[m] - energies[n]) + (level_shift[m] - level_shift[n]);
                diag[idx] = Complex64::new(-(loss[m] + loss[n]), -freq);
                if m > 0 && n > 0 {
                    let w = g[m - 1] * g[n - 1];
                    let re = rates.k3[m] + rates.k3[n];
                    let im = rates.delta3[m] - rates.delta3[n];
                    from_below[idx] = Complex64::new(w * re, -(w * im));
                }
                if m + 1 < dim && n + 1 < dim {
                    let w = g[m] * g[n];
                    let re = rates.k4[m] + rates.k4[n];
                    let im = rates.delta4[m] - rates.delta4[n];
                    from_above[idx] = Complex64::new(w * re, -(w * im));
                }
            }
        }
        Ok(Generator {
            dim,
            diag,
            from_below,
            from_above,
        })
    }

    /// Generator for the Morse model with its closed-form `η(n)`.
    pub fn morse(params: &crate::morse::MorseParams, reservoir: &ReservoirParams) -> Result<Self> {
        let model = params.oscillator();
        let rates = rate_table(&model, reservoir)?;
        Self::new(&model, &rates, &crate::morse::eta_values(params))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `L(rho)` into `out`.
    pub fn apply_into(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let d = self.dim;
        assert_eq!(rho.shape(), (d, d));
        assert_eq!(out.shape(), (d, d));
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for n in 0..d {
            for m in 0..d {
                let idx = m + n * d;
                let mut acc = self.diag[idx] * r[idx];
                if m > 0 && n > 0 {
                    acc += self.from_below[idx] * r[idx - 1 - d];
                }
                if m + 1 < d && n + 1 < d {
                    acc += self.from_above[idx] * r[idx + 1 + d];
                }
                o[idx] = acc;
            }
        }
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.apply_into(rho, &mut out);
        out
    }
}

/// One-shot `ρ̇` for the given model, rates and coupling function.
pub fn liouvillian_apply(
    rho: &DensityMatrix,
    model: &OscillatorModel,
    rates: &RateTable,
    eta: &[f64],
) -> Result<DMatrix<Complex64>> {
    let gen = Generator::new(model, rates, eta)?;
    if rho.dim() != gen.dim() {
        return Err(Error::domain(format!(
            "density matrix is {0}x{0}, model has dim {1}",
            rho.dim(),
            gen.dim()
        )));
    }
    Ok(gen.apply(&rho.entries))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Checked on every emitted snapshot.
    pub snapshot_tolerance: InvariantTolerance,
    /// Run aborts once `|Tr ρ - 1|` exceeds this between snapshots.
    pub max_trace_drift: f64,
    /// Steps between step-doubling error estimates.
    pub monitor_every: usize,
    /// When false, snapshots with eigenvalues below
    /// `snapshot_tolerance.min_eigenvalue` are recorded instead of rejected.
    /// Trace and Hermiticity are always enforced.
    pub enforce_positivity: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            snapshot_tolerance: InvariantTolerance::default(),
            max_trace_drift: 1e-7,
            monitor_every: 100,
            enforce_positivity: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<DensityMatrix>,
    /// Smallest eigenvalue of each snapshot.
    pub min_eigenvalues: Vec<f64>,
    pub steps: usize,
    /// Largest step-doubling (Richardson) local error estimate, max-norm.
    pub max_local_error: f64,
}

struct Rk4 {
    k1: DMatrix<Complex64>,
    k2: DMatrix<Complex64>,
    k3: DMatrix<Complex64>,
    k4: DMatrix<Complex64>,
    tmp: DMatrix<Complex64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        let z = DMatrix::zeros(dim, dim);
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, gen: &Generator, y: &mut DMatrix<Complex64>, h: f64) {
        fn axpy(out: &mut DMatrix<Complex64>, y: &DMatrix<Complex64>, a: f64, k: &DMatrix<Complex64>) {
            for ((o, yv), kv) in out.iter_mut().zip(y.iter()).zip(k.iter()) {
                *o = yv + kv * a;
            }
        }
        gen.apply_into(y, &mut self.k1);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k1);
        gen.apply_into(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k2);
        gen.apply_into(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, h, &self.k3);
        gen.apply_into(&self.tmp, &mut self.k4);
        let w = h / 6.0;
        for (i, v) in y.iter_mut().enumerate() {
            *v += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

/// Classical RK4 with fixed steps, emitting a snapshot at each sample time.
///
/// Each interval between samples is split into `ceil(Δt/dt)` equal steps, so
/// snapshots land exactly on the requested times. Sample times must be sorted
/// and not earlier than `rho0.time`.
pub fn integrate(
    rho0: &DensityMatrix,
    gen: &Generator,
    sample_times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(cfg.dt > 0.0) {
        return Err(Error::domain(format!("dt must be > 0, got {}", cfg.dt)));
    }
    if rho0.dim() != gen.dim() {
        return Err(Error::domain("initial state and generator dimensions differ"));
    }
    if sample_times.iter().any(|&t| !(t >= rho0.time)) || sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("sample times must be sorted and >= the initial time"));
    }
    let tolerance = if cfg.enforce_positivity {
        cfg.snapshot_tolerance
    } else {
        InvariantTolerance {
            min_eigenvalue: f64::NEG_INFINITY,
            ..cfg.snapshot_tolerance
        }
    };
    rho0.check(&tolerance)?;

    let mut y = rho0.entries.clone();
    let mut t = rho0.time;
    let mut rk = Rk4::new(gen.dim());
    let mut probe = y.clone();
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut min_eigenvalues = Vec::with_capacity(sample_times.len());
    let mut steps = 0usize;
    let mut max_local_error = 0.0f64;

    for &target in sample_times {
        let span = target - t;
        let n_steps = if span > 0.0 { (span / cfg.dt - 1e-9).ceil().max(1.0) as usize } else { 0 };
        let h = if n_steps > 0 { span / n_steps as f64 } else { 0.0 };
        let mut i = 0;
        while i < n_steps {
            let monitor = cfg.monitor_every > 0 && steps % cfg.monitor_every == 0 && i + 1 < n_steps;
            if monitor {
                probe.copy_from(&y);
                rk.step(gen, &mut probe, 2.0 * h);
            }
            rk.step(gen, &mut y, h);
            i += 1;
            steps += 1;
            if monitor {
                rk.step(gen, &mut y, h);
                i += 1;
                steps += 1;
                let diff = y.iter().zip(probe.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                max_local_error = max_local_error.max(diff / 15.0);
            }
            let drift = (y.trace() - Complex64::new(1.0, 0.0)).norm();
            if drift > cfg.max_trace_drift || !drift.is_finite() {
                return Err(Error::Integration {
                    time: t + h * i as f64,
                    what: "trace drift during integration".into(),
                    magnitude: drift,
                });
            }
        }
        t = target;
        let snap = DensityMatrix {
            entries: y.clone(),
            time: t,
        };
        snap.check(&tolerance)?;
        min_eigenvalues.push(snap.min_eigenvalue());
        snapshots.push(snap);
    }
    Ok(Trajectory {
        snapshots,
        min_eigenvalues,
        steps,
        max_local_error,
    })
}

/// Integrates from `rho0.time` to `t_final`, returning `[ρ(t₀), ρ(t_final)]`.
pub fn integrate_to(rho0: &DensityMatrix, gen: &Generator, t_final: f64, dt: f64) -> Result<Trajectory> {
    integrate(rho0, gen, &[rho0.time, t_final], &IntegratorConfig::with_dt(dt))
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Stationary state of the generator.
///
/// Populations obey a closed birth–death process, so the stationary
/// populations follow from zero net flux across every rung:
/// `p_{n+1} W(n→n+1) ... ` balanced against `W(n+1→n)`. The rates are read off
/// the generator itself. Coherences are damped by the loss terms and vanish.
/// The result is accepted only if `max |L(ρ)| < 1e-12`.
pub fn steady_state(gen: &Generator) -> Result<DensityMatrix> {
    let d = gen.dim();
    // transfer[(i, j)] = d p_i / d p_j
    let mut transfer = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let lj = gen.apply(&DensityMatrix::number_state(d, j).entries);
        for i in 0..d {
            transfer[(i, j)] = lj[(i, i)].re;
        }
    }
    for i in 0..d {
        for j in 0..d {
            if i.abs_diff(j) > 1 && transfer[(i, j)] != 0.0 {
                return Err(Error::domain("population dynamics is not nearest-neighbour"));
            }
        }
    }
    let mut pops = vec![1.0f64; d];
    for n in 0..d - 1 {
        let up = transfer[(n + 1, n)];
        let down = transfer[(n, n + 1)];
        if !(down > 0.0) {
            return Err(Error::NotConverged {
                residual: f64::NAN,
                time: 0.0,
            });
        }
        pops[n + 1] = pops[n] * up / down;
    }
    let total: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|p| *p /= total);
    let rho = DensityMatrix::diagonal(&pops);
    let residual = max_abs(&gen.apply(&rho.entries));
    if residual >= 1e-12 {
        return Err(Error::NotConverged { residual, time: 0.0 });
    }
    Ok(rho)
}

/// Evolves `rho0` until `max |ρ̇| < tol`, checking every `check_every` steps.
pub fn relax(rho0: &DensityMatrix, gen: &Generator, dt: f64, tol: f64, max_time: f64) -> Result<DensityMatrix> {
    let mut y = rho0.entries.clone();
    let mut rk = Rk4::new(gen.dim());
    let check_every = ((1.0 / dt).ceil() as usize).max(1);
    let mut t = rho0.time;
    let mut residual = max_abs(&gen.apply(&y));
    while residual >= tol {
        if t - rho0.time > max_time {
            return Err(Error::NotConverged { residual, time: t });
        }
        for _ in 0..check_every {
            rk.step(gen, &mut y, dt);
        }
        t += dt * check_every as f64;
        residual = max_abs(&gen.apply(&y));
    }
    Ok(DensityMatrix { entries: y, time: t })
}
