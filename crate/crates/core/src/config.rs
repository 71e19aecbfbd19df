//! Run configuration: TOML key-value text with every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogeneous::Preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Scf,
    Ahcf,
    Homogeneous,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Flat,
    Kahler,
    AlmostKahler,
    /// Reload `snap_<step>_g.bin` / `snap_<step>_j.bin` from `restart`.
    Snapshot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// `torus4`, `torus6`, or a preset name for `homogeneous`.
    pub manifold: String,
    /// Points per direction, 8 to 256.
    pub m: usize,
    /// Stencil order, 2 or 4.
    pub order: usize,
    pub init: InitKind,
    pub amplitude: f64,
    pub seed: u64,
    /// Fourier modes in the random initial data, 1 to 16.
    pub modes: usize,
    pub precision: Precision,
    /// `dt = cfl·h² / max(1, sup|Rm| + sup|DJ|²)`, in (0, 1].
    pub cfl: f64,
    /// Fixed step; replaces the adaptive rule. Required step for `homogeneous`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub max_steps: usize,
    /// Snapshot every this many steps; 0 disables. Must be a multiple of `monitor_every`.
    pub snapshot_every: usize,
    pub monitor_every: usize,
    pub projection: bool,
    /// sup|Rm| above which a run is stopped as a blow-up.
    pub blow_up: f64,
    /// Snapshot prefix for `init = "snapshot"`, e.g. `out/snap_000100`.
    pub restart: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Scf,
            manifold: "torus4".into(),
            m: 16,
            order: 4,
            init: InitKind::AlmostKahler,
            amplitude: 0.1,
            seed: 1,
            modes: 3,
            precision: Precision::F64,
            cfl: 0.1,
            dt: None,
            t_end: 1.0,
            max_steps: 1000,
            snapshot_every: 0,
            monitor_every: 10,
            projection: false,
            blow_up: 1e6,
            restart: None,
            output: "akflow-out".into(),
        }
    }
}

impl RunConfig {
    /// Grid dimension, or the preset for homogeneous runs.
    pub fn torus_dim(&self) -> Option<usize> {
        match self.manifold.as_str() {
            "torus4" => Some(4),
            "torus6" => Some(6),
            _ => None,
        }
    }

    pub fn preset(&self) -> Option<Preset> {
        Preset::from_name(&self.manifold)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.mode {
            Mode::Homogeneous if self.preset().is_none() => {
                return bad(format!("mode homogeneous needs a preset manifold, got {:?}", self.manifold))
            }
            Mode::Scf | Mode::Ahcf if self.torus_dim().is_none() => {
                return bad(format!("mode {:?} needs manifold torus4 or torus6, got {:?}", self.mode, self.manifold))
            }
            Mode::Verify if self.manifold != "torus4" => return bad("mode verify refines on torus4".into()),
            _ => {}
        }
        if !(8..=256).contains(&self.m) {
            return bad(format!("m = {} outside 8..=256", self.m));
        }
        if self.order != 2 && self.order != 4 {
            return bad(format!("order = {} must be 2 or 4", self.order));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude = {} must be finite and non-negative", self.amplitude));
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed = {} does not fit a TOML integer", self.seed));
        }
        if !(1..=16).contains(&self.modes) {
            return bad(format!("modes = {} outside 1..=16", self.modes));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl = {} outside (0, 1]", self.cfl));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt = {dt} must be positive"));
            }
        }
        if self.mode == Mode::Homogeneous && self.dt.is_none() {
            return bad("mode homogeneous needs a fixed dt".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be finite and non-negative", self.t_end));
        }
        if self.monitor_every == 0 {
            return bad("monitor_every must be at least 1".into());
        }
        if self.snapshot_every % self.monitor_every != 0 {
            return bad(format!(
                "snapshot_every = {} is not a multiple of monitor_every = {}",
                self.snapshot_every, self.monitor_every
            ));
        }
        if !(self.blow_up > 0.0) {
            return bad(format!("blow_up = {} must be positive", self.blow_up));
        }
        if (self.init == InitKind::Snapshot) != self.restart.is_some() {
            return bad("init = \"snapshot\" and restart must be given together".into());
        }
        Ok(())
    }

    /// Fully resolved config as TOML, written to every run directory.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses TOML text, applies `key=value` overrides (values in TOML syntax,
/// bare words taken as strings) and validates.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        let value = match format!("x = {v}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("x").expect("parsed key"),
            Err(_) => toml::Value::String(v.to_string()),
        };
        table.insert(k.to_string(), value);
    }
    let cfg: RunConfig = RunConfig::deserialize(table).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("mode = \"scf\"\nm = 8\n", &[]).unwrap();
        assert_eq!(c, RunConfig { m: 8, ..Default::default() });
        let back = parse_config(&c.echo(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_take_precedence() {
        let c = parse_config("m = 8", &["m=12".into(), "init=kahler".into(), "dt = 0.01".into()]).unwrap();
        assert_eq!((c.m, c.init, c.dt), (12, InitKind::Kahler, Some(0.01)));
        assert!(parse_config("", &["m".into()]).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "mode = \"homogeneous\"\nmanifold = \"torus4\"\ndt = 0.1",
            "mode = \"scf\"\nmanifold = \"kodaira-thurston\"",
            "m = 4",
            "order = 6",
            "cfl = 0",
            "colour = 3",
            "monitor_every = 3\nsnapshot_every = 4",
            "init = \"snapshot\"",
            "mode = \"homogeneous\"\nmanifold = \"iwasawa\"",
            "m = \"sixteen\"",
        ] {
            assert!(matches!(parse_config(text, &[]), Err(Error::Config(_))), "{text}");
        }
        let e = parse_config("m = 8\ncolour = 3\n", &[]).unwrap_err().to_string();
        assert!(e.contains("colour"), "{e}");
        let e = parse_config("m = 8\nm = 9\n", &[]).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(parse_config("mode = \"homogeneous\"\nmanifold = \"iwasawa\"\ndt = 0.01", &[]).is_ok());
    }
}
