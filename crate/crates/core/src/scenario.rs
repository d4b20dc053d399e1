//! Scenario configuration, orchestration and CSV output.
//!
//! Configuration is a flat `key = value` document with `#` comments. Every key
//! is optional; unknown keys are rejected.
//!
//! | key | default |
//! |---|---|
//! | `scenario` | `docs` (`docs`, `aocs`, `even_cat`, `custom_rho`) |
//! | `n_bound` | 15 |
//! | `theta` | 4.0 |
//! | `gamma_scale` | 0.1 |
//! | `target_mean_n` | 2.0 |
//! | `t_samples` | per scenario, comma separated |
//! | `dt` | 1e-3 |
//! | `r_min`, `r_max`, `n_r` | -2, 10, 121 |
//! | `p_min`, `p_max`, `n_p` | -20, 20, 201 |
//! | `shifts_enabled` | false |
//! | `shift_cutoff` | 10.0 |
//! | `strict_positivity` | false; abort when a snapshot has an eigenvalue below -1e-8 |
//! | `output_dir` | none |
//! | `rho_file` | none; required by `custom_rho` |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coherent::{alpha_for_mean_n, build_state, to_density, StateKind};
use crate::density::{DensityMatrix, InvariantTolerance};
use crate::dissipator::{integrate, shift_cutoff_sensitivity, Generator, IntegratorConfig, ReservoirParams};
use crate::error::{Error, Result};
use crate::morse::MorseParams;
use crate::wigner::{wigner_closed, wigner_diagnostics, GridSpec, WignerDiagnostics, WignerGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Docs,
    Aocs,
    EvenCat,
    CustomRho,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Docs => "docs",
            Scenario::Aocs => "aocs",
            Scenario::EvenCat => "even_cat",
            Scenario::CustomRho => "custom_rho",
        }
    }

    pub fn default_samples(&self) -> Vec<f64> {
        match self {
            Scenario::Docs | Scenario::CustomRho => vec![0.0, 1.0, 2.0, 4.0],
            Scenario::Aocs | Scenario::EvenCat => vec![0.0, 0.2, 1.0, 2.5],
        }
    }

    pub fn state_kind(&self) -> Option<StateKind> {
        match self {
            Scenario::Docs => Some(StateKind::Docs),
            Scenario::Aocs => Some(StateKind::Aocs),
            Scenario::EvenCat => Some(StateKind::EvenCat),
            Scenario::CustomRho => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "docs" => Ok(Scenario::Docs),
            "aocs" => Ok(Scenario::Aocs),
            "even_cat" => Ok(Scenario::EvenCat),
            "custom_rho" => Ok(Scenario::CustomRho),
            other => Err(format!("unknown scenario `{other}` (expected docs, aocs, even_cat or custom_rho)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub n_bound: usize,
    pub theta: f64,
    pub gamma_scale: f64,
    pub target_mean_n: f64,
    /// `None` means the scenario's default timeline.
    pub t_samples: Option<Vec<f64>>,
    pub dt: f64,
    pub grid: GridSpec,
    pub shifts_enabled: bool,
    pub shift_cutoff: f64,
    pub strict_positivity: bool,
    pub output_dir: Option<PathBuf>,
    pub rho_file: Option<PathBuf>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let reservoir = ReservoirParams::default();
        SimulationConfig {
            scenario: Scenario::Docs,
            n_bound: 15,
            theta: reservoir.theta,
            gamma_scale: reservoir.gamma_scale,
            target_mean_n: 2.0,
            t_samples: None,
            dt: 1e-3,
            grid: GridSpec::default(),
            shifts_enabled: reservoir.shifts_enabled,
            shift_cutoff: reservoir.shift_cutoff,
            strict_positivity: false,
            output_dir: None,
            rho_file: None,
        }
    }
}

fn config_err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(line, key, format!("expected {what}, got `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(line, key, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_times(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    let inner = value.trim_start_matches('[').trim_end_matches(']');
    let times = inner
        .split(',')
        .map(|s| parse_value::<f64>(line, key, s.trim(), "a list of numbers"))
        .collect::<Result<Vec<_>>>()?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(config_err(line, key, "sample times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(config_err(line, key, "sample times must be sorted"));
    }
    Ok(times)
}

/// Parses a flat `key = value` document. Missing keys keep their defaults.
pub fn parse_config(source: &str) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let Some((key, value)) = text.split_once('=') else {
            return Err(config_err(line, text, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(config_err(line, key, "missing key before `=`"));
        }
        if seen.iter().any(|k| k == key) {
            return Err(config_err(line, key, "duplicate key"));
        }
        seen.push(key.to_string());
        let positive = |v: f64, what: &str| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(config_err(line, key, format!("{what} must be positive, got {v}")))
            }
        };
        match key {
            "scenario" => cfg.scenario = value.parse().map_err(|e: String| config_err(line, key, e))?,
            "n_bound" => {
                cfg.n_bound = parse_value(line, key, value, "an integer")?;
                if cfg.n_bound < 2 {
                    return Err(config_err(line, key, "at least 2 bound states are needed"));
                }
            }
            "theta" => cfg.theta = positive(parse_value(line, key, value, "a number")?, "theta")?,
            "gamma_scale" => {
                let g: f64 = parse_value(line, key, value, "a number")?;
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(config_err(line, key, "gamma_scale must be >= 0"));
                }
                cfg.gamma_scale = g;
            }
            "target_mean_n" => {
                cfg.target_mean_n = positive(parse_value(line, key, value, "a number")?, "target_mean_n")?
            }
            "t_samples" => cfg.t_samples = Some(parse_times(line, key, value)?),
            "dt" => cfg.dt = positive(parse_value(line, key, value, "a number")?, "dt")?,
            "r_min" => cfg.grid.r_min = parse_value(line, key, value, "a number")?,
            "r_max" => cfg.grid.r_max = parse_value(line, key, value, "a number")?,
            "p_min" => cfg.grid.p_min = parse_value(line, key, value, "a number")?,
            "p_max" => cfg.grid.p_max = parse_value(line, key, value, "a number")?,
            "n_r" => cfg.grid.n_r = parse_value(line, key, value, "an integer")?,
            "n_p" => cfg.grid.n_p = parse_value(line, key, value, "an integer")?,
            "shifts_enabled" => cfg.shifts_enabled = parse_bool(line, key, value)?,
            "shift_cutoff" => cfg.shift_cutoff = positive(parse_value(line, key, value, "a number")?, "shift_cutoff")?,
            "strict_positivity" => cfg.strict_positivity = parse_bool(line, key, value)?,
            "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
            "rho_file" => cfg.rho_file = Some(PathBuf::from(value)),
            _ => return Err(config_err(line, key, "unknown key")),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl SimulationConfig {
    /// Document-level checks; reported with line 0.
    pub fn validate(&self) -> Result<()> {
        if self.grid.validate().is_err() {
            return Err(config_err(0, "grid", format!("invalid phase-space window {:?}", self.grid)));
        }
        if self.scenario == Scenario::CustomRho && self.rho_file.is_none() {
            return Err(config_err(0, "rho_file", "required for scenario custom_rho"));
        }
        if self.shifts_enabled && self.shift_cutoff <= 1.0 {
            return Err(config_err(0, "shift_cutoff", "must exceed the largest gap (1.0)"));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.t_samples
            .clone()
            .unwrap_or_else(|| self.scenario.default_samples())
    }

    pub fn reservoir(&self) -> ReservoirParams {
        ReservoirParams {
            theta: self.theta,
            gamma_scale: self.gamma_scale,
            shifts_enabled: self.shifts_enabled,
            shift_cutoff: self.shift_cutoff,
        }
    }

    /// Every resolved setting as `key = value` lines; parses back to `self`.
    pub fn to_text(&self) -> String {
        let times: Vec<String> = self.sample_times().iter().map(|t| t.to_string()).collect();
        let g = &self.grid;
        let mut out = format!(
            "scenario = {}\nn_bound = {}\ntheta = {}\ngamma_scale = {}\ntarget_mean_n = {}\n\
             t_samples = {}\ndt = {}\nr_min = {}\nr_max = {}\nn_r = {}\np_min = {}\np_max = {}\nn_p = {}\n\
             shifts_enabled = {}\nshift_cutoff = {}\nstrict_positivity = {}\n",
            self.scenario,
            self.n_bound,
            self.theta,
            self.gamma_scale,
            self.target_mean_n,
            times.join(", "),
            self.dt,
            g.r_min,
            g.r_max,
            g.n_r,
            g.p_min,
            g.p_max,
            g.n_p,
            self.shifts_enabled,
            self.shift_cutoff,
            self.strict_positivity
        );
        if let Some(dir) = &self.output_dir {
            out.push_str(&format!("output_dir = {}\n", dir.display()));
        }
        if let Some(file) = &self.rho_file {
            out.push_str(&format!("rho_file = {}\n", file.display()));
        }
        out
    }
}

/// Reads a density matrix from CSV lines `m,n,re,im` (header required,
/// absent entries are zero).
pub fn read_density_csv(path: &Path, dim: usize) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.replace(' ', "") == "m,n,re,im" => {}
        _ => return Err(config_err(0, "rho_file", format!("{}: expected header m,n,re,im", path.display()))),
    }
    let mut entries = DMatrix::zeros(dim, dim);
    for (idx, line) in lines {
        let bad = || config_err(idx + 1, "rho_file", format!("{}: malformed entry `{line}`", path.display()));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let m: usize = fields[0].parse().map_err(|_| bad())?;
        let n: usize = fields[1].parse().map_err(|_| bad())?;
        let re: f64 = fields[2].parse().map_err(|_| bad())?;
        let im: f64 = fields[3].parse().map_err(|_| bad())?;
        if m >= dim || n >= dim {
            return Err(config_err(idx + 1, "rho_file", format!("index ({m}, {n}) outside dim {dim}")));
        }
        entries[(m, n)] = Complex64::new(re, im);
    }
    let rho = DensityMatrix { entries, time: 0.0 };
    rho.check(&InvariantTolerance::default())
        .map_err(|e| config_err(0, "rho_file", format!("{}: not a valid density matrix: {e}", path.display())))?;
    Ok(rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub time: f64,
    pub trace: f64,
    pub purity: f64,
    pub mean_n: f64,
    pub min_eigenvalue: f64,
    pub populations: Vec<f64>,
    pub wigner: WignerDiagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    /// Ordered `key = value` pairs for metadata.txt.
    pub metadata: Vec<(String, String)>,
    pub series: Vec<SampleRecord>,
    pub grids: Vec<WignerGrid>,
    pub snapshots: Vec<DensityMatrix>,
}

impl ScenarioResult {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

const FACTOR_NOTICE: &str = "the K4 gain term carries the factor sqrt((m+1)(n+1)) required for trace conservation";

/// Builds the model and initial state, evolves it and evaluates the Wigner
/// function at every sample time.
pub fn run_scenario(config: &SimulationConfig) -> Result<ScenarioResult> {
    run_inner(config).map_err(|e| Error::Scenario {
        scenario: config.scenario.to_string(),
        source: Box::new(e),
    })
}

fn run_inner(config: &SimulationConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let params = MorseParams::with_bound_states(config.n_bound)?;
    let reservoir = config.reservoir();
    let times = config.sample_times();

    let mut metadata: Vec<(String, String)> = vec![
        ("code_version".into(), crate::VERSION.into()),
        ("scenario".into(), config.scenario.to_string()),
    ];
    let rho0 = match config.scenario.state_kind() {
        Some(kind) => {
            let sol = alpha_for_mean_n(config.target_mean_n, kind, &params)?;
            metadata.push(("alpha".into(), format_sig(sol.alpha)));
            metadata.push((
                "zeta".into(),
                sol.zeta.map(format_sig).unwrap_or_else(|| "none".into()),
            ));
            metadata.push(("initial_mean_n".into(), format_sig(sol.mean_n)));
            to_density(&build_state(kind, sol.alpha, &params)?)
        }
        None => {
            let path = config.rho_file.as_ref().expect("validated");
            metadata.push(("rho_file".into(), path.display().to_string()));
            read_density_csv(path, params.n_bound())?
        }
    };

    let generator = Generator::morse(&params, &reservoir)?;
    let integrator = IntegratorConfig {
        enforce_positivity: config.strict_positivity,
        ..IntegratorConfig::with_dt(config.dt)
    };
    let trajectory = integrate(&rho0, &generator, &times, &integrator)?;
    metadata.push(("integrator_steps".into(), trajectory.steps.to_string()));
    metadata.push(("max_local_error".into(), format_sig(trajectory.max_local_error)));
    if reservoir.shifts_enabled {
        let sens = shift_cutoff_sensitivity(&params.oscillator(), &reservoir)?;
        metadata.push(("shift_cutoff_doubling_change".into(), format_sig(sens)));
    }

    let mut series = Vec::with_capacity(times.len());
    let mut grids = Vec::with_capacity(times.len());
    for (rho, &min_eigenvalue) in trajectory.snapshots.iter().zip(&trajectory.min_eigenvalues) {
        let grid = wigner_closed(rho, &params, &config.grid)?;
        let diag = wigner_diagnostics(&grid, rho);
        series.push(SampleRecord {
            time: rho.time,
            trace: rho.trace().re,
            purity: rho.purity(),
            mean_n: rho.mean_number(),
            min_eigenvalue,
            populations: rho.populations(),
            wigner: diag,
        });
        grids.push(grid);
    }

    let frames: Vec<String> = times
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}:{}", (b'a' + i as u8) as char, t))
        .collect();
    metadata.push(("frame_times".into(), frames.join(" ")));
    let eigen: Vec<String> = series
        .iter()
        .map(|s| format!("{}:{}", s.time, format_sig(s.min_eigenvalue)))
        .collect();
    metadata.push(("min_eigenvalues".into(), eigen.join(" ")));
    metadata.push(("gain_factor".into(), FACTOR_NOTICE.into()));
    for line in config.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            metadata.push((format!("config.{k}"), v.to_string()));
        }
    }
    Ok(ScenarioResult {
        metadata,
        series,
        grids,
        snapshots: trajectory.snapshots,
    })
}

/// Decimal text with 12 significant digits, like C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Name of the Wigner file for sample time `t`.
pub fn wigner_file_name(t: f64) -> String {
    format!("wigner_t{t}.csv")
}

/// Files written, with their sizes in bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub files: Vec<(PathBuf, u64)>,
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (path, bytes) in &self.files {
            writeln!(f, "{}\t{bytes}", path.display())?;
        }
        Ok(())
    }
}

pub fn series_csv(result: &ScenarioResult) -> String {
    let dim = result.series.first().map_or(0, |s| s.populations.len());
    let mut out = String::from("t,trace,purity,min_w");
    for n in 0..dim {
        out.push_str(&format!(",p{n}"));
    }
    out.push('\n');
    for s in &result.series {
        let mut row = vec![
            format_sig(s.time),
            format_sig(s.trace),
            format_sig(s.purity),
            format_sig(s.wigner.min_w),
        ];
        row.extend(s.populations.iter().map(|&p| format_sig(p)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn wigner_csv(grid: &WignerGrid) -> String {
    let mut out = String::with_capacity(40 * grid.values.len());
    out.push_str("r,p,w\n");
    for (i, r) in grid.r_axis.iter().enumerate() {
        for (j, p) in grid.p_axis.iter().enumerate() {
            out.push_str(&format_sig(*r));
            out.push(',');
            out.push_str(&format_sig(*p));
            out.push(',');
            out.push_str(&format_sig(grid.at(i, j)));
            out.push('\n');
        }
    }
    out
}

pub fn metadata_text(result: &ScenarioResult) -> String {
    result
        .metadata
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

/// Writes series.csv, one wigner_t{T}.csv per sample and metadata.txt.
pub fn write_outputs(result: &ScenarioResult, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        files.push((PathBuf::from(name), body.len() as u64));
        Ok(())
    };
    emit("series.csv".into(), series_csv(result))?;
    for grid in &result.grids {
        emit(wigner_file_name(grid.time), wigner_csv(grid))?;
    }
    emit("metadata.txt".into(), metadata_text(result))?;
    Ok(Manifest { files })
}

/// Outcome of one named self-check.
#[derive(Debug)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Result<String>,
}

fn ensure(cond: bool, what: String) -> Result<String> {
    if cond {
        Ok(what)
    } else {
        Err(Error::Integration {
            time: 0.0,
            what,
            magnitude: f64::NAN,
        })
    }
}

/// Fast invariant checks exercised by `deformed-lindblad selftest`.
pub fn selftest() -> Vec<Check> {
    use crate::bessel::bessel_k_complex_order;
    use crate::dissipator::{rate_table, steady_state};
    use crate::fock::{gap_frequency, OscillatorModel};

    let mut checks = Vec::new();
    checks.push(Check {
        name: "bessel_half_order",
        outcome: bessel_k_complex_order(Complex64::new(0.5, 0.0), 1.0).and_then(|k| {
            let err = (k.re - (std::f64::consts::FRAC_PI_2).sqrt() * (-1.0f64).exp()).abs();
            ensure(err < 1e-12, format!("|K_1/2(1) - sqrt(pi/2)/e| = {err:.2e}"))
        }),
    });
    checks.push(Check {
        name: "harmonic_trace_and_rate",
        outcome: (|| {
            let model = OscillatorModel::harmonic(1.0, 20)?;
            let r = ReservoirParams::default();
            let gen = Generator::new(&model, &rate_table(&model, &r)?, &[1.0; 20])?;
            let rho = DensityMatrix::number_state(20, 3);
            let d = gen.apply(&rho.entries);
            let dn: f64 = (0..20).map(|n| n as f64 * d[(n, n)].re).sum();
            let nbar = 1.0 / (r.theta).exp_m1();
            let err = (dn + r.gamma_scale * (3.0 - nbar)).abs();
            ensure(d.trace().norm() < 1e-14 && err < 1e-12, format!("d<n>/dt error {err:.2e}"))
        })(),
    });
    checks.push(Check {
        name: "morse_detailed_balance",
        outcome: (|| {
            let params = MorseParams::with_bound_states(15)?;
            let r = ReservoirParams::default();
            let ss = steady_state(&Generator::morse(&params, &r)?)?;
            let p = ss.populations();
            let model = params.oscillator();
            let worst = (0..14)
                .map(|n| ((p[n + 1] / p[n]) / (-r.theta * gap_frequency(&model, n)).exp() - 1.0).abs())
                .fold(0.0, f64::max);
            ensure(worst < 1e-6, format!("worst ratio error {worst:.2e}"))
        })(),
    });
    checks.push(Check {
        name: "docs_short_run",
        outcome: (|| {
            let cfg = SimulationConfig {
                t_samples: Some(vec![0.0, 0.5]),
                grid: GridSpec::default().with_points(25, 41),
                ..Default::default()
            };
            let res = run_scenario(&cfg)?;
            let last = res.series.last().expect("two samples");
            ensure(
                (last.trace - 1.0).abs() < 1e-9 && (res.series[0].purity - 1.0).abs() < 1e-12,
                format!("trace drift {:.2e}", (last.trace - 1.0).abs()),
            )
        })(),
    });
    checks
}
