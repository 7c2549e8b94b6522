//! Sweeps over pulse area and pulse contrast.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    default_grid, evolve_closed, evolve_lindblad, final_occupation, BlochTrajectory, DissipationParams,
    EvolveOptions,
};
use crate::error::{Error, Result};
use crate::pathint::{propagate, PathIntConfig};
use crate::phonon::{hex, InfluenceCoefficients, PhononParams};
use crate::pulse::{widths_for_contrast, DichromaticPulse, PulseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Closed,
    Lindblad,
    PathIntegral,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Closed => "closed",
            Engine::Lindblad => "lindblad",
            Engine::PathIntegral => "path-integral",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Engine::Closed),
            "lindblad" => Ok(Engine::Lindblad),
            "path-integral" | "pathint" => Ok(Engine::PathIntegral),
            other => Err(Error::Config(format!(
                "unknown engine '{other}' (expected closed, lindblad or path-integral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Pulse areas in units of π.
    pub areas: Vec<f64>,
    /// Pulse contrasts in [-1, 1].
    pub contrasts: Vec<f64>,
    /// Shape, detuning, window and carrier of every pulse. The wider of its
    /// two widths is the reference width for [`widths_for_contrast`]; its area
    /// is replaced by each grid value.
    pub pulse: PulseSpec,
    pub engine: Engine,
    /// Used by the Lindblad engine.
    pub dissipation: DissipationParams,
    /// Used by the path-integral engine.
    pub phonon: PhononParams,
    /// Path-integral settings; `t_start` and `t_end` are replaced by the
    /// support of each pulse (plus a 2 ps tail).
    pub pathint: PathIntConfig,
    /// Worker threads; zero uses all available cores.
    pub workers: usize,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("areas", &self.areas), ("contrasts", &self.contrasts)] {
            if axis.is_empty() {
                return Err(Error::Config(format!("scan {name} must not be empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("scan {name} must be finite")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(format!("scan {name} must be strictly increasing")));
            }
        }
        if self.areas[0] < 0.0 {
            return Err(Error::Config("scan areas must be >= 0".into()));
        }
        if self.contrasts.iter().any(|c| c.abs() > 1.0) {
            return Err(Error::Config("scan contrasts must lie in [-1, 1]".into()));
        }
        if self.reference_width() <= 0.0 {
            return Err(Error::Config("pulse template needs a non-zero width".into()));
        }
        self.dissipation.validate()?;
        self.phonon.validate()?;
        Ok(())
    }

    pub fn reference_width(&self) -> f64 {
        self.pulse.w_red.max(self.pulse.w_blue)
    }

    /// Pulse for one grid cell.
    pub fn pulse_at(&self, area_pi: f64, contrast: f64) -> Result<DichromaticPulse> {
        let (w_red, w_blue) = widths_for_contrast(contrast, self.reference_width())?;
        DichromaticPulse::new(PulseSpec {
            w_red,
            w_blue,
            area: area_pi * std::f64::consts::PI,
            ..self.pulse
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plain struct serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        }
    }
}

/// Final occupations on the contrast × area grid, indexed `[contrast][area]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationMap {
    pub areas: Vec<f64>,
    pub contrasts: Vec<f64>,
    pub n_final: Vec<Vec<f64>>,
    pub status: Vec<Vec<CellStatus>>,
    pub engine: Engine,
    pub metadata: BTreeMap<String, String>,
}

/// A completed grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub contrast_index: usize,
    pub area_index: usize,
    pub n_final: f64,
    pub status: CellStatus,
}

/// Runs the configured engine for one pulse and returns the trajectory.
pub fn run_engine(
    cfg: &ScanConfig,
    pulse: &DichromaticPulse,
    coeffs: Option<&InfluenceCoefficients>,
) -> Result<BlochTrajectory> {
    match cfg.engine {
        Engine::Closed => {
            let grid = default_grid(pulse, 0.5);
            evolve_closed(pulse, &grid, &EvolveOptions::default())
        }
        Engine::Lindblad => {
            let grid = default_grid(pulse, 0.5);
            evolve_lindblad(pulse, &cfg.dissipation, &grid, &EvolveOptions::default())
        }
        Engine::PathIntegral => {
            let coeffs = coeffs.ok_or_else(|| {
                Error::Contract("the path-integral engine needs influence coefficients".into())
            })?;
            let (a, b) = pulse.support();
            let pcfg = PathIntConfig {
                t_start: a,
                t_end: b + 2.0,
                ..cfg.pathint
            };
            propagate(pulse, coeffs, &pcfg)
        }
    }
}

fn cell_value(cfg: &ScanConfig, coeffs: Option<&InfluenceCoefficients>, area: f64, contrast: f64) -> Result<f64> {
    let pulse = cfg.pulse_at(area, contrast)?;
    let traj = run_engine(cfg, &pulse, coeffs)?;
    match cfg.engine {
        Engine::PathIntegral => Ok(traj.states.last().map_or(f64::NAN, |s| s.occupation())),
        _ => Ok(final_occupation(&traj)?.value),
    }
}

/// Computes every cell not present in `done`. `on_cell` sees each newly
/// finished cell (from worker threads, in completion order).
pub fn area_contrast_map_resumable(
    cfg: &ScanConfig,
    coeffs: Option<&InfluenceCoefficients>,
    done: &[Cell],
    on_cell: &(dyn Fn(&Cell) + Sync),
) -> Result<OccupationMap> {
    cfg.validate()?;
    if cfg.engine == Engine::PathIntegral && coeffs.is_none() {
        return Err(Error::Contract("the path-integral engine needs influence coefficients".into()));
    }
    let nc = cfg.contrasts.len();
    let na = cfg.areas.len();
    let mut n_final = vec![vec![f64::NAN; na]; nc];
    let mut status = vec![vec![CellStatus::Failed; na]; nc];
    let mut pending = vec![true; nc * na];
    for cell in done {
        if cell.contrast_index < nc && cell.area_index < na {
            n_final[cell.contrast_index][cell.area_index] = cell.n_final;
            status[cell.contrast_index][cell.area_index] = cell.status;
            pending[cell.contrast_index * na + cell.area_index] = false;
        }
    }
    let todo: Vec<usize> = (0..nc * na).filter(|&i| pending[i]).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    let results = Mutex::new(Vec::with_capacity(todo.len()));
    pool.install(|| {
        todo.par_iter().for_each(|&i| {
            let (ci, ai) = (i / na, i % na);
            let (c, a) = (cfg.contrasts[ci], cfg.areas[ai]);
            let cell = match cell_value(cfg, coeffs, a, c) {
                Ok(n) => Cell { contrast_index: ci, area_index: ai, n_final: n, status: CellStatus::Ok },
                Err(e) => {
                    log::error!("cell C = {c}, A = {a}π failed: {e}");
                    Cell { contrast_index: ci, area_index: ai, n_final: f64::NAN, status: CellStatus::Failed }
                }
            };
            on_cell(&cell);
            results.lock().expect("no panics while holding the lock").push(cell);
        })
    });
    for cell in results.into_inner().expect("pool finished") {
        n_final[cell.contrast_index][cell.area_index] = cell.n_final;
        status[cell.contrast_index][cell.area_index] = cell.status;
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("engine".to_string(), cfg.engine.name().to_string());
    metadata.insert("config_hash".to_string(), cfg.hash());
    if cfg.engine == Engine::PathIntegral {
        let c = coeffs.expect("checked above");
        metadata.insert("dt_ps".to_string(), cfg.pathint.dt.to_string());
        metadata.insert("memory_k".to_string(), cfg.pathint.memory_k.to_string());
        metadata.insert("eta_hash".to_string(), c.hash());
    }
    Ok(OccupationMap {
        areas: cfg.areas.clone(),
        contrasts: cfg.contrasts.clone(),
        n_final,
        status,
        engine: cfg.engine,
        metadata,
    })
}

/// Final occupation on the full area × contrast grid. Failed cells hold NaN.
pub fn area_contrast_map(cfg: &ScanConfig, coeffs: Option<&InfluenceCoefficients>) -> Result<OccupationMap> {
    area_contrast_map_resumable(cfg, coeffs, &[], &|_| {})
}

/// Trajectory for a single grid point.
pub fn bloch_trace(
    cfg: &ScanConfig,
    area_pi: f64,
    contrast: f64,
    coeffs: Option<&InfluenceCoefficients>,
) -> Result<BlochTrajectory> {
    let pulse = cfg.pulse_at(area_pi, contrast)?;
    run_engine(cfg, &pulse, coeffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineCut {
    /// Contrast of the map row actually used.
    pub contrast: f64,
    /// The requested contrast was not on the axis and was snapped.
    pub snapped: bool,
    pub areas: Vec<f64>,
    pub n_final: Vec<f64>,
}

/// Row of the map at the contrast nearest to `c`.
pub fn line_cut(map: &OccupationMap, c: f64) -> Result<LineCut> {
    if map.contrasts.is_empty() || map.areas.is_empty() {
        return Err(Error::InvalidParameter("empty occupation map".into()));
    }
    let (idx, &used) = map
        .contrasts
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
        .expect("non-empty");
    let snapped = used != c;
    if snapped {
        log::info!("line cut at C = {c} snapped to the map row C = {used}");
    }
    Ok(LineCut {
        contrast: used,
        snapped,
        areas: map.areas.clone(),
        n_final: map.n_final[idx].clone(),
    })
}

/// `max_C |n(C) - n(-C)|` at the area nearest to `area_pi`, over contrast
/// pairs present on the axis.
pub fn asymmetry(map: &OccupationMap, area_pi: f64) -> Result<f64> {
    if map.areas.is_empty() {
        return Err(Error::InvalidParameter("empty occupation map".into()));
    }
    let ai = map
        .areas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - area_pi).abs().total_cmp(&(b.1 - area_pi).abs()))
        .map(|(i, _)| i)
        .expect("non-empty");
    let mut worst: f64 = 0.0;
    for (i, &c) in map.contrasts.iter().enumerate() {
        if let Some(j) = map.contrasts.iter().position(|&d| (d + c).abs() < 1e-12) {
            worst = worst.max((map.n_final[i][ai] - map.n_final[j][ai]).abs());
        }
    }
    Ok(worst)
}

/// Index of the first interior local maximum of `values` that exceeds
/// `floor`, or `None`.
pub fn first_local_max(values: &[f64], floor: f64) -> Option<usize> {
    (1..values.len().saturating_sub(1))
        .find(|&i| values[i] > floor && values[i] >= values[i - 1] && values[i] > values[i + 1])
}

impl OccupationMap {
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        out.push_str(&format!("# areas_pi = {}\n", join(&self.areas)));
        out.push_str(&format!("# contrasts = {}\n", join(&self.contrasts)));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str("# units: area in units of pi rad; contrast and n_final dimensionless\n");
        out.push_str("contrast,area_pi,n_final,status\n");
        for (ci, c) in self.contrasts.iter().enumerate() {
            for (ai, a) in self.areas.iter().enumerate() {
                out.push_str(&format!(
                    "{c},{a},{:.9},{}\n",
                    self.n_final[ci][ai],
                    self.status[ci][ai].as_str()
                ));
            }
        }
        out
    }

    pub fn from_csv(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: path.to_string(), line, msg };
        let parse_list = |line: usize, v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| err(line, format!("bad axis value '{x}': {e}"))))
                .collect()
        };
        let mut areas = None;
        let mut contrasts = None;
        let mut metadata = BTreeMap::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "areas_pi" => areas = Some(parse_list(lineno, v)?),
                        "contrasts" => contrasts = Some(parse_list(lineno, v)?),
                        _ => {
                            metadata.insert(k.to_string(), v.to_string());
                        }
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "contrast,area_pi,n_final,status" {
                    return Err(err(lineno, format!("expected header 'contrast,area_pi,n_final,status', found '{line}'")));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err(lineno, format!("expected 4 fields, found {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(lineno, format!("bad number '{s}': {e}")));
            let status = match f[3].trim() {
                "ok" => CellStatus::Ok,
                "failed" => CellStatus::Failed,
                other => return Err(err(lineno, format!("unknown status '{other}'"))),
            };
            rows.push((lineno, num(f[0])?, num(f[1])?, num(f[2])?, status));
        }
        let areas = areas.ok_or_else(|| err(0, "missing '# areas_pi = ...' header".into()))?;
        let contrasts = contrasts.ok_or_else(|| err(0, "missing '# contrasts = ...' header".into()))?;
        let engine: Engine = metadata
            .get("engine")
            .ok_or_else(|| err(0, "missing '# engine = ...' header".into()))?
            .parse()?;
        let mut n_final = vec![vec![f64::NAN; areas.len()]; contrasts.len()];
        let mut status = vec![vec![CellStatus::Failed; areas.len()]; contrasts.len()];
        let mut seen = vec![vec![false; areas.len()]; contrasts.len()];
        for (lineno, c, a, n, s) in rows {
            let ci = contrasts.iter().position(|&x| x == c).ok_or_else(|| err(lineno, format!("contrast {c} not on the axis")))?;
            let ai = areas.iter().position(|&x| x == a).ok_or_else(|| err(lineno, format!("area {a} not on the axis")))?;
            n_final[ci][ai] = n;
            status[ci][ai] = s;
            seen[ci][ai] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(err(0, "map is missing grid cells".into()));
        }
        Ok(Self { areas, contrasts, n_final, status, engine, metadata })
    }

    /// Completed cells, for resuming a scan.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for ci in 0..self.contrasts.len() {
            for ai in 0..self.areas.len() {
                out.push(Cell {
                    contrast_index: ci,
                    area_index: ai,
                    n_final: self.n_final[ci][ai],
                    status: self.status[ci][ai],
                });
            }
        }
        out
    }
}

/// `contrast_index,area_index,n_final,status` line used in progress logs.
pub fn cell_log_line(cell: &Cell) -> String {
    format!(
        "{},{},{:e},{}\n",
        cell.contrast_index,
        cell.area_index,
        cell.n_final,
        cell.status.as_str()
    )
}

pub fn parse_cell_log(text: &str) -> Vec<Cell> {
    text.lines()
        .filter_map(|line| {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 4 {
                return None;
            }
            let status = match f[3] {
                "ok" => CellStatus::Ok,
                "failed" => CellStatus::Failed,
                _ => return None,
            };
            Some(Cell {
                contrast_index: f[0].parse().ok()?,
                area_index: f[1].parse().ok()?,
                n_final: f[2].parse().ok()?,
                status,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn closed_config(areas: Vec<f64>, contrasts: Vec<f64>) -> ScanConfig {
        ScanConfig {
            areas,
            contrasts,
            pulse: PulseSpec::rect(0.6, 0.4, 0.4, std::f64::consts::PI),
            engine: Engine::Closed,
            dissipation: DissipationParams::none(),
            phonon: PhononParams::default(),
            pathint: PathIntConfig::default(),
            workers: 1,
        }
    }

    #[test]
    fn validates_axes() {
        assert!(closed_config(vec![], vec![0.0]).validate().is_err());
        assert!(closed_config(vec![1.0, 0.5], vec![0.0]).validate().is_err());
        assert!(closed_config(vec![1.0], vec![0.0, 1.5]).validate().is_err());
        assert!(closed_config(vec![1.0, 2.0], vec![-1.0, 1.0]).validate().is_ok());
    }

    #[test]
    fn csv_round_trip_and_cut() {
        let cfg = closed_config(vec![0.0, 2.0, 4.0], vec![-0.5, 0.0, 0.5]);
        let map = area_contrast_map(&cfg, None).unwrap();
        let text = map.to_csv();
        let back = OccupationMap::from_csv(&text, "map.csv").unwrap();
        assert_eq!(back.areas, map.areas);
        for ci in 0..3 {
            for ai in 0..3 {
                assert!((back.n_final[ci][ai] - map.n_final[ci][ai]).abs() < 1e-9);
            }
        }
        let cut = line_cut(&map, 0.1).unwrap();
        assert!(cut.snapped);
        assert_eq!(cut.contrast, 0.0);
        assert!(line_cut(&map, 0.5).map(|c| !c.snapped).unwrap());
        assert!(OccupationMap::from_csv("contrast,area_pi,n_final,status\n", "x").is_err());
    }

    #[test]
    fn path_integral_needs_coefficients() {
        let mut cfg = closed_config(vec![1.0], vec![0.0]);
        cfg.engine = Engine::PathIntegral;
        assert!(matches!(area_contrast_map(&cfg, None), Err(Error::Contract(_))));
    }

    #[test]
    fn failed_cells_are_nan() {
        let mut cfg = closed_config(vec![0.0, 1.0], vec![0.0]);
        cfg.engine = Engine::PathIntegral;
        // Coefficients with the wrong dt make every cell fail.
        let coeffs = InfluenceCoefficients::zero(0.123, 8);
        let map = area_contrast_map(&cfg, Some(&coeffs)).unwrap();
        assert!(map.n_final[0].iter().all(|n| n.is_nan()));
        assert!(map.status[0].iter().all(|s| *s == CellStatus::Failed));
    }

    #[test]
    fn resume_skips_done_cells() {
        let cfg = closed_config(vec![0.0, 1.0], vec![0.0]);
        let done = [Cell { contrast_index: 0, area_index: 1, n_final: 0.25, status: CellStatus::Ok }];
        let count = std::sync::atomic::AtomicUsize::new(0);
        let map = area_contrast_map_resumable(&cfg, None, &done, &|_| {
            count.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        })
        .unwrap();
        assert_eq!(count.into_inner(), 1);
        assert_eq!(map.n_final[0][1], 0.25);
    }

    #[test]
    fn cell_log_round_trip() {
        let c = Cell { contrast_index: 3, area_index: 7, n_final: 0.123456789, status: CellStatus::Ok };
        assert_eq!(parse_cell_log(&cell_log_line(&c)), vec![c]);
        assert!(parse_cell_log("garbage\n1,2\n").is_empty());
    }

    #[test]
    fn local_max_detection() {
        assert_eq!(first_local_max(&[0.0, 0.01, 0.0, 0.5, 0.9, 0.7], 0.05), Some(4));
        assert_eq!(first_local_max(&[0.0, 0.1, 0.2], 0.05), None);
    }
}
