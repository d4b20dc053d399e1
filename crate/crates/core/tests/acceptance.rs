//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are evaluated exactly like the others
//! and fail for the reason given next to them (see also the README). The run
//! succeeds when every other criterion passes and the known ones still fail;
//! a change in either direction makes the target fail.

use std::fs;
use std::time::Instant;

use deformed_lindblad::bessel::bessel_k_complex_order;
use deformed_lindblad::coherent::{alpha_for_mean_n, aocs, build_state, to_density};
use deformed_lindblad::dissipator::{integrate, planck_nbar, rate_table, steady_state, Generator, IntegratorConfig};
use deformed_lindblad::fock::{gap_frequency, OscillatorModel};
use deformed_lindblad::scenario::{run_scenario, write_outputs, Scenario, SimulationConfig};
use deformed_lindblad::wigner::{wigner_closed, wigner_direct_oracle};
use deformed_lindblad::{Complex64, DensityMatrix, GridSpec, MorseParams, ReservoirParams, StateKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_FAILING: &[(u32, &str)] = &[
    (1, "the K(m)+K(n) coherence transfer is not completely positive; eigenvalues dip to about -6e-4"),
    (6, "anharmonic free rotation makes W negative (-0.43 max at t=4 without damping); gamma_scale=0.1 does not wash it out"),
    (7, "at gamma_scale=0.1 the cat purity is 0.807 at t=1 and first falls below 0.7 at t=1.93"),
];

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn morse() -> MorseParams {
    MorseParams::with_bound_states(15).unwrap()
}

fn initial(kind: StateKind, params: &MorseParams) -> DensityMatrix {
    let sol = alpha_for_mean_n(2.0, kind, params).unwrap();
    to_density(&build_state(kind, sol.alpha, params).unwrap())
}

fn dense_times(t_final: f64, step: f64) -> Vec<f64> {
    let n = (t_final / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Evolution under the default reservoir with positivity recorded, not enforced.
fn evolve(rho0: &DensityMatrix, params: &MorseParams, times: &[f64]) -> deformed_lindblad::dissipator::Trajectory {
    let gen = Generator::morse(params, &ReservoirParams::default()).unwrap();
    let cfg = IntegratorConfig {
        enforce_positivity: false,
        ..IntegratorConfig::with_dt(1e-3)
    };
    integrate(rho0, &gen, times, &cfg).unwrap()
}

fn invariants_suite() -> Outcome {
    let params = morse();
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    let mut worst_at = String::new();
    for scenario in [Scenario::Docs, Scenario::Aocs, Scenario::EvenCat] {
        let mut times = dense_times(4.0, 0.1);
        times.extend(scenario.default_samples());
        times.sort_by(f64::total_cmp);
        times.dedup();
        let rho0 = initial(scenario.state_kind().unwrap(), &params);
        let tr = evolve(&rho0, &params, &times);
        for (rho, &ev) in tr.snapshots.iter().zip(&tr.min_eigenvalues) {
            worst.0 = worst.0.max((rho.trace() - Complex64::new(1.0, 0.0)).norm());
            worst.1 = worst.1.max(rho.hermiticity_error());
            if ev < worst.2 {
                worst.2 = ev;
                worst_at = format!("{scenario} t={}", rho.time);
            }
        }
    }
    verdict(
        worst.0 < 1e-9 && worst.1 < 1e-10 && worst.2 >= -1e-8,
        format!(
            "max trace drift {:.2e}, max hermiticity error {:.2e}, min eigenvalue {:.3e} ({worst_at})",
            worst.0, worst.1, worst.2
        ),
    )
}

fn harmonic_limit() -> Outcome {
    let dim = 30;
    let model = OscillatorModel::harmonic(1.0, dim).unwrap();
    let reservoir = ReservoirParams::default();
    let gen = Generator::new(&model, &rate_table(&model, &reservoir).unwrap(), &vec![1.0; dim]).unwrap();
    let state = aocs(Complex64::new(2f64.sqrt(), 0.0), &model).unwrap();
    let rho0 = to_density(&state);
    let times = dense_times(40.0, 0.5);
    let tr = integrate(&rho0, &gen, &times, &IntegratorConfig::with_dt(1e-3)).unwrap();
    let nbar = planck_nbar(1.0, &reservoir).unwrap();
    let n0 = rho0.mean_number();
    let worst = tr
        .snapshots
        .iter()
        .map(|rho| {
            let expect = nbar + (n0 - nbar) * (-reservoir.gamma_scale * rho.time).exp();
            (rho.mean_number() / expect - 1.0).abs()
        })
        .fold(0.0, f64::max);
    verdict(worst < 1e-4, format!("<n>(0) = {n0:.6}, worst relative error {worst:.2e} over t in [0, 40]"))
}

fn detailed_balance() -> Outcome {
    let params = morse();
    let reservoir = ReservoirParams::default();
    let model = params.oscillator();
    let ss = steady_state(&Generator::morse(&params, &reservoir).unwrap()).unwrap();
    let p = ss.populations();
    let worst = (0..14)
        .map(|n| {
            let expect = (-reservoir.theta * gap_frequency(&model, n) / model.omega0()).exp();
            (p[n + 1] / p[n] / expect - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let coherence = ss.max_coherence();
    verdict(
        worst < 1e-6 && coherence < 1e-10,
        format!("worst rung ratio error {worst:.2e}, max off-diagonal {coherence:.1e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let params = morse();
    let spec = GridSpec::default().with_points(41, 41);
    let states = [
        ("|0>", DensityMatrix::number_state(15, 0)),
        ("|3>", DensityMatrix::number_state(15, 3)),
        ("aocs", initial(StateKind::Aocs, &params)),
        ("docs", initial(StateKind::Docs, &params)),
        ("even_cat", initial(StateKind::EvenCat, &params)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, rho) in &states {
        let closed = wigner_closed(rho, &params, &spec).unwrap();
        let direct = wigner_direct_oracle(rho, &params, &spec).unwrap();
        let rel = closed.max_difference(&direct) / direct.max_abs();
        ok &= rel < 1e-6;
        parts.push(format!("{name} {rel:.1e}"));
    }
    verdict(ok, format!("relative max-norm difference: {}", parts.join(", ")))
}

fn docs_defaults() -> SimulationConfig {
    SimulationConfig::default()
}

fn purity_consistency() -> Outcome {
    let res = run_scenario(&docs_defaults()).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for s in &res.series {
        let d = (s.wigner.purity_w - s.wigner.purity_m).abs();
        worst = worst.max(d);
        parts.push(format!("t={} {:.4}/{:.4}", s.time, s.wigner.purity_w, s.wigner.purity_m));
    }
    verdict(worst < 1e-2, format!("worst |2pi∬W² - Tr rho²| = {worst:.2e} ({})", parts.join(", ")))
}

fn docs_damping() -> Outcome {
    let params = morse();
    let res = run_scenario(&docs_defaults()).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in res.series.iter().filter(|s| [1.0, 2.0, 4.0].contains(&s.time)) {
        let ratio = s.wigner.min_w / s.wigner.max_w;
        ok &= ratio >= -0.01;
        parts.push(format!("t={} min/max {ratio:.2e}", s.time));
    }
    // populations obey a closed rate equation, so a dense trace is cheap
    let rho0 = initial(StateKind::Docs, &params);
    let tr = evolve(&rho0, &params, &dense_times(4.0, 0.05));
    let means: Vec<f64> = tr.snapshots.iter().map(DensityMatrix::mean_number).collect();
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    let ss = steady_state(&Generator::morse(&params, &ReservoirParams::default()).unwrap()).unwrap();
    let floor = ss.mean_number();
    let above = means.iter().all(|&m| m > floor);
    ok &= monotone && above;
    verdict(
        ok,
        format!(
            "{}; <n> {:.4} -> {:.4} (steady {:.4}), monotone: {monotone}",
            parts.join(", "),
            means[0],
            means[means.len() - 1],
            floor
        ),
    )
}

fn cat_decoherence() -> Outcome {
    let params = morse();
    let times = dense_times(2.5, 0.1);
    let purities = |kind| -> Vec<f64> {
        evolve(&initial(kind, &params), &params, &times)
            .snapshots
            .iter()
            .map(DensityMatrix::purity)
            .collect()
    };
    let aocs = purities(StateKind::Aocs);
    let docs = purities(StateKind::Docs);
    let cat = purities(StateKind::EvenCat);
    let min_aocs = aocs.iter().copied().fold(f64::INFINITY, f64::min);
    let min_docs = docs.iter().copied().fold(f64::INFINITY, f64::min);
    let below_matched = times
        .iter()
        .zip(cat.iter().zip(&aocs))
        .filter(|(t, _)| **t > 0.0)
        .all(|(_, (c, a))| c < a);
    let at_one = times.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
    let ok = min_aocs > 0.85 && min_docs > 0.85 && below_matched && cat[at_one] < 0.7;
    verdict(
        ok,
        format!(
            "min purity aocs {min_aocs:.4}, docs {min_docs:.4}; cat below aocs at all t>0: {below_matched}; cat purity at t=1 {:.4}",
            cat[at_one]
        ),
    )
}

fn special_functions() -> Outcome {
    let half = bessel_k_complex_order(Complex64::new(0.5, 0.0), 1.0).unwrap();
    let mut ok = (half.re - 0.4610685).abs() < 1e-8 && half.im == 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_501);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let nu = Complex64::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let x = rng.random_range(0.01..50.0);
        let k = bessel_k_complex_order(nu, x).unwrap();
        let even = bessel_k_complex_order(-nu, x).unwrap();
        let conj = bessel_k_complex_order(nu.conj(), x).unwrap();
        let scale = k.norm();
        worst = worst.max((k - even).norm() / scale).max((k.conj() - conj).norm() / scale);
    }
    ok &= worst < 1e-10;
    verdict(ok, format!("K_1/2(1) = {:.10}, worst symmetry defect {worst:.1e} over 20 samples", half.re))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut parts = Vec::new();
    for scenario in [Scenario::Docs, Scenario::EvenCat] {
        for threads in [1, 4] {
            let cfg = SimulationConfig {
                scenario,
                ..Default::default()
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let res = pool.install(|| run_scenario(&cfg)).unwrap();
            let out = dir.path().join(format!("{scenario}-{threads}"));
            let manifest = write_outputs(&res, &out).unwrap();
            let files: Vec<(String, Vec<u8>)> = manifest
                .files
                .iter()
                .map(|(name, _)| (name.display().to_string(), fs::read(out.join(name)).unwrap()))
                .collect();
            outputs.push((scenario, files));
        }
        let n = outputs.len();
        let same = outputs[n - 1].1 == outputs[n - 2].1;
        parts.push(format!("{scenario}: {} files identical across 1/4 threads: {same}", outputs[n - 1].1.len()));
    }
    let ok = outputs.chunks(2).all(|pair| pair[0].1 == pair[1].1);
    verdict(ok, parts.join("; "))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "trace/hermiticity/positivity", invariants_suite),
        (2, "harmonic limit", harmonic_limit),
        (3, "detailed-balance steady state", detailed_balance),
        (4, "wigner oracle equivalence", oracle_equivalence),
        (5, "purity consistency", purity_consistency),
        (6, "damped DOCS: no negativity, monotone <n>", docs_damping),
        (7, "purity: single states vs even cat", cat_decoherence),
        (8, "special functions", special_functions),
        (9, "determinism", determinism),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILING.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        match (&outcome, known.is_some()) {
            (Ok(detail), false) => println!("PASS {id} {name}: {detail} [{secs:.1}s]"),
            (Err(detail), true) => println!("FAIL {id} {name}: {detail} [{secs:.1}s] (known: {})", known.unwrap()),
            (Err(detail), false) => {
                unexpected += 1;
                println!("FAIL {id} {name}: {detail} [{secs:.1}s]");
            }
            (Ok(detail), true) => {
                unexpected += 1;
                println!("PASS {id} {name}: {detail} [{secs:.1}s] (listed as known failing; update the list)");
            }
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria deviated from their expected outcome");
        std::process::exit(1);
    }
}
