//! Run orchestration behind the command-line tool: initial data, time
//! integration, output files, exit codes and run-directory summaries.
//!
//! A run directory holds `config.echo`, `monitors.csv`, `identity.csv`,
//! `outcome.toml` and optional `snap_<step>_<field>.bin` files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{InitKind, Mode, Precision, RunConfig};
use crate::error::{Error, Result};
use crate::flow::{self, FlowKind, FlowSettings, GridState};
use crate::grid::{self, GridSpec};
use crate::harness::{self, IdentityReport};
use crate::homogeneous::{self, InvariantStructure, LieAlgebraData, Preset};
use crate::monitor::{self, MonitorRecord};
use crate::scalar::Scalar;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

/// What a finished invocation left behind, also written as `outcome.toml`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub steps: usize,
    pub t: f64,
    /// Reason the run was stopped by the blow-up guard.
    pub blow_up: Option<String>,
    pub checks: usize,
    pub failed_checks: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.blow_up.is_some() {
            EXIT_BLOW_UP
        } else if self.failed_checks > 0 {
            EXIT_RUNTIME
        } else {
            EXIT_OK
        }
    }
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(o) => o.exit_code(),
        Err(Error::Config(_)) => EXIT_CONFIG,
        Err(_) => EXIT_RUNTIME,
    }
}

pub fn snapshot_path(dir: &Path, step: usize, field: &str) -> PathBuf {
    dir.join(format!("snap_{step:06}_{field}.bin"))
}

/// Runs a validated config, writing into `cfg.output`. The identity
/// self-check on the Kodaira-Thurston preset runs first and aborts on
/// failure.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let conventions = harness::conventions_check()?;
    let dir = cfg.output.as_path();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.echo"), cfg.echo())?;
    let (outcome, monitors, mut reports) = match cfg.mode {
        Mode::Scf | Mode::Ahcf => match (cfg.torus_dim(), cfg.precision) {
            (Some(4), Precision::F64) => grid_run::<f64, 4>(cfg)?,
            (Some(4), Precision::F32) => grid_run::<f32, 4>(cfg)?,
            (Some(6), Precision::F64) => grid_run::<f64, 6>(cfg)?,
            (Some(6), Precision::F32) => grid_run::<f32, 6>(cfg)?,
            _ => unreachable!("validated"),
        },
        Mode::Homogeneous => match cfg.preset().expect("validated") {
            Preset::Abelian4 => {
                let (l, s) = homogeneous::abelian4_preset::<f64>();
                ode_run(cfg, &l, &s)?
            }
            Preset::KodairaThurston => {
                let (l, s) = homogeneous::kodaira_thurston_preset::<f64>();
                ode_run(cfg, &l, &s)?
            }
            Preset::Iwasawa => {
                let (l, s) = homogeneous::iwasawa_preset::<f64>();
                ode_run(cfg, &l, &s)?
            }
        },
        Mode::Verify => {
            let mut r = harness::verify_presets()?;
            r.extend(harness::verify_grid(cfg.m, cfg.order, cfg.amplitude, cfg.seed)?);
            (Outcome::default(), None, r)
        }
    };
    if cfg.mode != Mode::Verify {
        reports.splice(0..0, conventions);
    }
    if let Some(m) = monitors {
        monitor::write_csv(BufWriter::new(File::create(dir.join("monitors.csv"))?), &m)?;
    }
    harness::write_reports(&mut BufWriter::new(File::create(dir.join("identity.csv"))?), &reports)?;
    let outcome = Outcome {
        checks: reports.len(),
        failed_checks: reports.iter().filter(|r| !r.pass).count(),
        ..outcome
    };
    fs::write(dir.join("outcome.toml"), toml::to_string(&outcome).expect("outcome serializes"))?;
    Ok(outcome)
}

type RunParts = (Outcome, Option<Vec<MonitorRecord>>, Vec<IdentityReport>);

fn initial_state<T: Scalar, const N: usize>(cfg: &RunConfig, spec: GridSpec) -> Result<GridState<T>> {
    match cfg.init {
        InitKind::Flat => Ok(GridState::flat::<N>(spec)),
        InitKind::Kahler => flow::kahler_initial::<T, N>(spec, cfg.amplitude, cfg.seed, cfg.modes),
        InitKind::AlmostKahler => flow::almost_kahler_initial::<T, N>(spec, cfg.amplitude, cfg.seed, cfg.modes),
        InitKind::Snapshot => {
            let prefix = cfg.restart.as_ref().expect("validated");
            let load = |field: &str| grid::read_snapshot::<T>(Path::new(&format!("{}_{field}.bin", prefix.display())));
            let s = GridState { g: load("g")?, j: load("j")?, t: 0.0 };
            if s.g.spec != spec || s.j.spec != spec || s.g.variance != flow::FORM || s.j.variance != flow::ENDO {
                return Err(Error::Config(format!("snapshot {} does not match the configured grid", prefix.display())));
            }
            Ok(s)
        }
    }
}

fn grid_run<T: Scalar, const N: usize>(cfg: &RunConfig) -> Result<RunParts> {
    let spec = GridSpec::new(N, cfg.m, cfg.order)?;
    let s0 = initial_state::<T, N>(cfg, spec)?;
    let kind = if cfg.mode == Mode::Ahcf { FlowKind::Ahcf } else { FlowKind::Scf };
    let settings = FlowSettings {
        kind,
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        max_steps: cfg.max_steps,
        monitor_every: cfg.monitor_every,
        blow_up: cfg.blow_up,
        projection: cfg.projection,
        fixed_dt: cfg.dt,
    };
    let dir = cfg.output.clone();
    let tr = flow::run::<T, N>(s0, &settings, |step, s, _| {
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            grid::write_snapshot(&snapshot_path(&dir, step, "g"), &s.g)?;
            grid::write_snapshot(&snapshot_path(&dir, step, "j"), &s.j)?;
        }
        Ok(())
    })?;
    let mut reports = Vec::new();
    if tr.blow_up.is_none() {
        // compatibility of the last tendency, against the truncation scale h^order
        let k = match kind {
            FlowKind::Scf => flow::scf_tendency::<T, N>(&tr.final_state)?,
            FlowKind::Ahcf => flow::ahcf_tendency::<T, N>(&tr.final_state)?,
        };
        let tol = spec.h().powi(cfg.order as i32);
        reports.push(harness::check_variation_compat::<T, N>(&k, &tr.final_state, tol));
    }
    let outcome = Outcome {
        steps: tr.steps,
        t: tr.final_state.t,
        blow_up: tr.blow_up.map(|e| e.to_string()),
        ..Default::default()
    };
    Ok((outcome, Some(tr.monitors), reports))
}

fn ode_run<const N: usize>(
    cfg: &RunConfig,
    l: &LieAlgebraData<f64, N>,
    s: &InvariantStructure<f64, N>,
) -> Result<RunParts> {
    let dt = cfg.dt.expect("validated");
    let tr = homogeneous::ode_run(s, l, dt, cfg.t_end, cfg.monitor_every, cfg.blow_up)?;
    let last = tr.states.last().expect("initial state is kept");
    let (dg, dj) = homogeneous::invariant_scf_rhs(last, l)?;
    let (a, b) = harness::variation_residuals(&last.g, &last.j, &dg, &dj);
    let tol = crate::tol::DEFAULT.identity_exact;
    let mut reports = harness::preset_reports(cfg.preset().expect("validated"), tol)?;
    let v = a.max(b);
    reports.push(IdentityReport::new(harness::Identity::VariationCompat.name(), "final invariant tendency", v, v, tol));
    let outcome = Outcome {
        steps: tr.states.len() - 1,
        t: last.t,
        blow_up: tr.blow_up,
        ..Default::default()
    };
    Ok((outcome, Some(tr.monitors), reports))
}

/// Summary of a run directory.
#[derive(Clone, Debug)]
pub struct Report {
    pub dir: PathBuf,
    pub mode: Option<Mode>,
    pub outcome: Option<Outcome>,
    pub last: Option<MonitorRecord>,
    /// Least-squares slope of `ln L²|Ric|` against `t` over the final half.
    pub ric_decay_rate: Option<f64>,
    pub identities: Vec<IdentityReport>,
}

pub fn report(dir: &Path) -> Result<Report> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a run directory", dir.display())));
    }
    let read = |name: &str| fs::read_to_string(dir.join(name)).ok();
    let cfg = read("config.echo").map(|t| crate::config::parse_config(&t, &[])).transpose()?;
    let outcome = read("outcome.toml")
        .map(|t| toml::from_str::<Outcome>(&t).map_err(|e| Error::Config(format!("outcome.toml: {e}"))))
        .transpose()?;
    let monitors = match read("monitors.csv") {
        Some(t) => monitor::read_csv(&t).ok_or_else(|| Error::Config("monitors.csv is malformed".into()))?,
        None => Vec::new(),
    };
    let identities = match read("identity.csv") {
        Some(t) => parse_reports(&t)?,
        None => Vec::new(),
    };
    let tail = &monitors[monitors.len() / 2..];
    let pts: Vec<(f64, f64)> = tail.iter().filter(|m| m.l2_ric > 0.0).map(|m| (m.t, m.l2_ric.ln())).collect();
    Ok(Report {
        dir: dir.to_path_buf(),
        mode: cfg.map(|c| c.mode),
        outcome,
        last: monitors.last().cloned(),
        ric_decay_rate: slope(&pts),
        identities,
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn parse_reports(text: &str) -> Result<Vec<IdentityReport>> {
    let mut lines = text.lines();
    if lines.next() != Some(harness::REPORT_COLUMNS.join(",").as_str()) {
        return Err(Error::Config("identity.csv has an unexpected header".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("identity.csv: bad number {s:?}")));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != harness::REPORT_COLUMNS.len() {
                return Err(Error::Config(format!("identity.csv: bad row {l:?}")));
            }
            Ok(IdentityReport {
                identity: f[0].into(),
                input: f[1].into(),
                sup: num(f[2])?,
                l2: num(f[3])?,
                tolerance: num(f[4])?,
                order: if f[5].is_empty() { None } else { Some(num(f[5])?) },
                pass: f[6] == "true",
            })
        })
        .collect()
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = format!("run directory: {}\n", self.dir.display());
        if let Some(m) = self.mode {
            let _ = writeln!(s, "mode: {m:?}");
        }
        if let Some(o) = &self.outcome {
            let _ = writeln!(s, "steps: {}  t: {:.6}", o.steps, o.t);
            let _ = writeln!(s, "blow-up: {}", o.blow_up.as_deref().unwrap_or("no"));
        }
        if let Some(m) = &self.last {
            let _ = writeln!(s, "final sup|Rm|: {:.6e}  sup|DJ|^2: {:.6e}", m.sup_rm, m.sup_dj2);
            let _ = writeln!(s, "final |dω|: {:.3e}  |J²+1|: {:.3e}  compat: {:.3e}", m.domega_inf, m.j2_inf, m.compat);
            let _ = writeln!(s, "final |P - λω|: {:.3e}  |Ric^-J|: {:.3e}  λ: {:.6e}", m.static_p, m.static_ric, m.lambda);
        }
        if let Some(r) = self.ric_decay_rate {
            let _ = writeln!(s, "d ln L²|Ric| / dt over final half: {r:.4}");
        }
        let failed = self.identities.iter().filter(|r| !r.pass).count();
        let _ = writeln!(s, "identity checks: {} ({} failed)", self.identities.len(), failed);
        for r in self.identities.iter().filter(|r| r.order.is_some()) {
            let _ = writeln!(s, "  order {:<18} {:<20} {:.3}", r.identity, r.input, r.order.unwrap_or(f64::NAN));
        }
        for r in self.identities.iter().filter(|r| !r.pass) {
            let _ = writeln!(s, "  FAILED {} on {}: {:.3e}", r.identity, r.input, r.sup);
        }
        f.write_str(&s)
    }
}
