//! Run configuration: a TOML file with one section per concern, plus
//! `section.key=value` overrides from the command line.
//!
//! ```toml
//! [pulse]
//! shape = "rect-spectrum"
//! delta = 0.6
//! w_red = 0.4
//! w_blue = 0.4
//! area_pi = 10.0
//!
//! [engine]
//! kind = "path-integral"
//!
//! [pathint]
//! dt = 0.4
//! memory_k = 8
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{BlochState, DissipationParams};
use crate::error::{Error, Result};
use crate::pathint::PathIntConfig;
use crate::phonon::{hex, PhononParams};
use crate::photonstats::HistogramKind;
use crate::pulse::{PulseShape, PulseSpec, SincWindow};
use crate::scan::{Engine, ScanConfig};

/// Environment variable naming the influence-coefficient cache directory.
pub const CACHE_DIR_ENV: &str = "DPE_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub shape: PulseShape,
    /// meV
    pub delta: f64,
    /// meV
    pub w_red: f64,
    /// meV
    pub w_blue: f64,
    /// Pulse area in units of π.
    pub area_pi: f64,
    /// ps
    pub t0: f64,
    /// meV
    pub carrier_detuning: f64,
    pub window: SincWindow,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            shape: PulseShape::RectSpectrum,
            delta: 0.6,
            w_red: 0.4,
            w_blue: 0.4,
            area_pi: 1.0,
            t0: 0.0,
            carrier_detuning: 0.0,
            window: SincWindow::default(),
        }
    }
}

impl PulseSection {
    pub fn spec(&self) -> PulseSpec {
        PulseSpec {
            shape: self.shape,
            delta: self.delta,
            w_red: self.w_red,
            w_blue: self.w_blue,
            area: self.area_pi * std::f64::consts::PI,
            t0: self.t0,
            carrier_detuning: self.carrier_detuning,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub kind: Engine,
    /// Largest RK4 step (ps) for the closed and Lindblad engines.
    pub max_step: Option<f64>,
    /// Output spacing of the trajectory (ps) for the closed and Lindblad engines.
    pub output_spacing: f64,
    pub initial: BlochState,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            kind: Engine::Closed,
            max_step: None,
            output_spacing: 0.1,
            initial: BlochState::ground(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DissipationSection {
    /// ps; absent disables radiative decay.
    pub t1: Option<f64>,
    /// 1/ps
    pub gamma_star: f64,
}

impl Default for DissipationSection {
    fn default() -> Self {
        Self { t1: None, gamma_star: 0.0 }
    }
}

impl DissipationSection {
    pub fn params(&self) -> DissipationParams {
        DissipationParams { t1: self.t1, gamma_star: self.gamma_star }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathIntSection {
    /// ps
    pub dt: f64,
    pub memory_k: usize,
    /// Propagation continues this long (ps) past the end of the pulse.
    pub tail: f64,
    pub compensate_polaron_shift: bool,
    /// ps
    pub system_substep: f64,
    pub prune_threshold: f64,
    pub max_entries: usize,
    pub max_steps: usize,
}

impl Default for PathIntSection {
    fn default() -> Self {
        let d = PathIntConfig::default();
        Self {
            dt: d.dt,
            memory_k: d.memory_k,
            tail: 2.0,
            compensate_polaron_shift: d.compensate_polaron_shift,
            system_substep: d.system_substep,
            prune_threshold: d.prune_threshold,
            max_entries: d.max_entries,
            max_steps: d.max_steps,
        }
    }
}

impl PathIntSection {
    /// Propagation settings over `[t_start, t_end]`.
    pub fn config(&self, t_start: f64, t_end: f64, initial: BlochState) -> PathIntConfig {
        PathIntConfig {
            dt: self.dt,
            memory_k: self.memory_k,
            t_start,
            t_end,
            initial,
            max_steps: self.max_steps,
            max_entries: self.max_entries,
            compensate_polaron_shift: self.compensate_polaron_shift,
            system_substep: self.system_substep,
            prune_threshold: self.prune_threshold,
        }
    }
}

/// Either an explicit list or an inclusive `start..=stop` range with `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            Axis::List(ref v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                    return Err(Error::Config(format!(
                        "axis range needs finite start <= stop and step > 0 (got {start}, {stop}, {step})"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(Error::Config(format!("axis range has {n} points; use a larger step")));
                }
                Ok((0..=n).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub areas_pi: Axis,
    pub contrasts: Axis,
    /// Worker threads; zero uses all cores.
    pub workers: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            areas_pi: Axis::Range { start: 0.0, stop: 20.0, step: 0.5 },
            contrasts: Axis::Range { start: -1.0, stop: 1.0, step: 0.1 },
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Histogram CSV to fit.
    pub input: Option<PathBuf>,
    /// Expected histogram kind; the file's `# kind:` line must agree.
    pub kind: Option<HistogramKind>,
    /// ns
    pub irf_fwhm: f64,
    /// Fix T₁ (ns) in coincidence-dip fits.
    pub fixed_t1: Option<f64>,
    /// Reference g⊥ histogram for integration-window visibilities.
    pub g_perp: Option<PathBuf>,
    /// Integration windows (ns).
    pub windows: Vec<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            input: None,
            kind: None,
            irf_fwhm: 0.168,
            fixed_t1: None,
            g_perp: None,
            windows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    /// Memory window (ps) held fixed while the step is refined.
    pub window: f64,
    /// Memory depths for the step study; `dt = window / K`.
    pub k_list: Vec<usize>,
    /// Step (ps) for the memory-depth study.
    pub saturation_dt: f64,
    /// Memory depths for the memory-depth study.
    pub saturation_k: Vec<usize>,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            window: 3.2,
            k_list: vec![7, 8, 9, 10],
            saturation_dt: 0.4,
            saturation_k: vec![8, 9, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Output directory; created if missing.
    pub output_dir: PathBuf,
    /// Influence-coefficient cache. Falls back to `$DPE_CACHE_DIR`, then to
    /// `<output_dir>/eta-cache`.
    pub cache_dir: Option<PathBuf>,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { output_dir: PathBuf::from("out"), cache_dir: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pulse: PulseSection,
    pub engine: EngineSection,
    pub dissipation: DissipationSection,
    pub phonon: PhononParams,
    pub pathint: PathIntSection,
    pub scan: ScanSection,
    pub fit: FitSection,
    pub converge: ConvergeSection,
    pub paths: PathsSection,
}

/// Splits `a.b.c=value` and parses the value as TOML, falling back to a
/// plain string.
fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{raw}' is not of the form section.key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override '{raw}' has an empty key segment")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((path, parsed))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("cannot override inside '{p}': it is not a section")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, applies overrides and validates.
    pub fn from_toml_str(text: &str, origin: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
            Error::Parse { path: origin.to_string(), line, msg: e.message().to_string() }
        })?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            apply_override(&mut table, &path, value)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{origin}: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml_str(&text, &p.display().to_string(), overrides)
            }
            None => Self::from_toml_str("", "<defaults>", overrides),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let config_err = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        };
        self.pulse.spec().validate().map_err(config_err)?;
        self.dissipation.params().validate().map_err(config_err)?;
        self.phonon.validate().map_err(config_err)?;
        self.engine.initial.validate().map_err(config_err)?;
        if !(self.engine.output_spacing > 0.0) {
            return Err(Error::Config("engine.output_spacing must be > 0".into()));
        }
        if let Some(h) = self.engine.max_step {
            if !(h > 0.0) {
                return Err(Error::Config("engine.max_step must be > 0".into()));
            }
        }
        if !(self.pathint.tail >= 0.0) {
            return Err(Error::Config("pathint.tail must be >= 0".into()));
        }
        self.pathint
            .config(0.0, 1.0, self.engine.initial)
            .validate()
            .map_err(config_err)?;
        self.scan.areas_pi.values()?;
        self.scan.contrasts.values()?;
        if !(self.fit.irf_fwhm >= 0.0) {
            return Err(Error::Config("fit.irf_fwhm must be >= 0".into()));
        }
        if !(self.converge.window > 0.0) || !(self.converge.saturation_dt > 0.0) {
            return Err(Error::Config("converge.window and converge.saturation_dt must be > 0".into()));
        }
        Ok(())
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let (a, b) = (0.0, 1.0);
        let cfg = ScanConfig {
            areas: self.scan.areas_pi.values()?,
            contrasts: self.scan.contrasts.values()?,
            pulse: self.pulse.spec(),
            engine: self.engine.kind,
            dissipation: self.dissipation.params(),
            phonon: self.phonon,
            pathint: self.pathint.config(a, b, self.engine.initial),
            workers: self.scan.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cache directory: config, then `$DPE_CACHE_DIR`, then under the output
    /// directory.
    pub fn cache_dir(&self) -> PathBuf {
        if let Some(d) = &self.paths.cache_dir {
            return d.clone();
        }
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.paths.output_dir.join("eta-cache"),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }

    /// Hash of the fields that influence physics results (paths excluded).
    pub fn physics_hash(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsSection::default();
        c.hash()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("", "x", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml_str("[pulse]\nshape = \"gaussian\"\ndelta = 0.3\nw_red = 0.4\nw_blue = 0.4\narea_pi = 1\ncolour = 1\n", "x", &[]);
        assert!(matches!(e, Err(Error::Config(ref m)) if m.contains("colour")), "{e:?}");
        let e = RunConfig::from_toml_str("[bogus]\na = 1\n", "x", &[]);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        match RunConfig::from_toml_str("[pulse]\ndelta = = 3\n", "bad.toml", &[]) {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(path, "bad.toml");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_apply_with_types() {
        let c = RunConfig::from_toml_str(
            "",
            "x",
            &[
                "pulse.area_pi=5".into(),
                "engine.kind=path-integral".into(),
                "pathint.memory_k = 10".into(),
                "scan.areas_pi=[1.0, 2.0]".into(),
                "phonon.temperature=0".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.pulse.area_pi, 5.0);
        assert_eq!(c.engine.kind, Engine::PathIntegral);
        assert_eq!(c.pathint.memory_k, 10);
        assert_eq!(c.scan.areas_pi.values().unwrap(), vec![1.0, 2.0]);
        assert_eq!(c.phonon.temperature, 0.0);
        assert!(RunConfig::from_toml_str("", "x", &["pulse.area_pi".into()]).is_err());
        assert!(RunConfig::from_toml_str("", "x", &["pulse.delta=-1".into()]).is_err());
    }

    #[test]
    fn axis_range_is_inclusive() {
        let a = Axis::Range { start: -1.0, stop: 1.0, step: 0.1 };
        let v = a.values().unwrap();
        assert_eq!(v.len(), 21);
        assert!((v[20] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_physics_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.paths.output_dir = "elsewhere".into();
        assert_eq!(a.physics_hash(), b.physics_hash());
        b.phonon.temperature = 5.0;
        assert_ne!(a.physics_hash(), b.physics_hash());
    }

    #[test]
    fn round_trips_through_toml() {
        let a = RunConfig::default();
        let b = RunConfig::from_toml_str(&a.to_toml(), "x", &[]).unwrap();
        assert_eq!(a, b);
    }
}
