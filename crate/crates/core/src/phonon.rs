//! Deformation-potential coupling to longitudinal acoustic phonons.
//!
//! Material constants are given in SI-friendly units (nm, m/s, kg/m³, eV, K)
//! and converted once, at [`Bath::new`], to the internal ps / rad-per-ps
//! system:
//!
//! * `J(ω) = P ω³ (D_e e^{-ω²a_e²/4c²} - D_h e^{-ω²a_h²/4c²})²` in rad/ps, with
//!   `P = e² / (4π² ρ ħ c⁵)` evaluated in SI (units s², deformation
//!   potentials in eV) and scaled by `1e24` to ps².
//! * `c` in nm/ps is `c_s[m/s] × 1e-3`.
//!
//! The bath correlation is `C(τ) = ∫ J(ω)[coth(ħω/2k_BT) cos ωτ - i sin ωτ] dω`
//! in 1/ps², and the influence coefficients `η_m` are its double time
//! integrals over pairs of time steps separated by `m` steps.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate_with_breaks, uniform_breaks, QuadSettings};
use crate::units::{EV_SI, HBAR, HBAR_SI, K_B};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhononParams {
    /// Electron confinement radius, nm.
    pub a_e: f64,
    /// Hole confinement radius, nm.
    pub a_h: f64,
    /// Longitudinal sound velocity, m/s.
    pub c_s: f64,
    /// Mass density, kg/m³.
    pub rho: f64,
    /// Electron deformation potential, eV.
    pub d_e: f64,
    /// Hole deformation potential, eV.
    pub d_h: f64,
    /// Bath temperature, K. Zero selects the vacuum correlation.
    pub temperature: f64,
}

impl Default for PhononParams {
    /// GaAs quantum dot at 4 K.
    fn default() -> Self {
        Self {
            a_e: 3.0,
            a_h: 3.0 / 1.15,
            c_s: 5110.0,
            rho: 5370.0,
            d_e: 7.0,
            d_h: -3.5,
            temperature: 4.0,
        }
    }
}

impl PhononParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_e", self.a_e),
            ("a_h", self.a_h),
            ("c_s", self.c_s),
            ("rho", self.rho),
            ("d_e", self.d_e),
            ("d_h", self.d_h),
            ("temperature", self.temperature),
        ] {
            ensure_finite(name, v)?;
        }
        for (name, v) in [("a_e", self.a_e), ("a_h", self.a_h), ("c_s", self.c_s), ("rho", self.rho)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.temperature < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Same material with the coupling switched off.
    pub fn uncoupled(mut self) -> Self {
        self.d_e = 0.0;
        self.d_h = 0.0;
        self
    }

    /// Hex SHA-256 of the canonical JSON form; used to key cached tables.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plain struct serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }

    /// `P` in ps² per eV², i.e. `1 / (4π² ρ ħ c⁵)` with the eV → J factor.
    pub fn prefactor_ps2(&self) -> f64 {
        EV_SI * EV_SI / (4.0 * PI * PI * self.rho * HBAR_SI * self.c_s.powi(5)) * 1e24
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Phonon bath with precomputed unit conversions and quadrature cut-off.
#[derive(Debug, Clone)]
pub struct Bath {
    params: PhononParams,
    prefactor: f64,
    ke: f64,
    kh: f64,
    /// `ħ / 2k_BT` in ps; zero at T = 0.
    half_beta: f64,
    omega_peak: f64,
    j_peak: f64,
    omega_max: f64,
}

impl Bath {
    pub fn new(params: PhononParams) -> Result<Self> {
        params.validate()?;
        let c = params.c_s * 1e-3;
        let half_beta = if params.temperature > 0.0 {
            HBAR / (2.0 * K_B * params.temperature)
        } else {
            0.0
        };
        let mut bath = Self {
            params,
            prefactor: params.prefactor_ps2(),
            ke: params.a_e * params.a_e / (4.0 * c * c),
            kh: params.a_h * params.a_h / (4.0 * c * c),
            half_beta,
            omega_peak: 0.0,
            j_peak: 0.0,
            omega_max: 0.0,
        };
        // The form factor cuts J off on the scale c/a; scan well past it.
        let scale = c / params.a_e.min(params.a_h);
        let step = scale * 1e-3;
        let mut best = (0.0, 0.0);
        let mut w = step;
        while w < 20.0 * scale {
            let j = bath.j(w);
            if j > best.1 {
                best = (w, j);
            }
            w += step;
        }
        bath.omega_peak = best.0;
        bath.j_peak = best.1;
        let mut w = best.0.max(step);
        if best.1 > 0.0 {
            while bath.j(w) >= 1e-10 * best.1 {
                w += step;
            }
        }
        bath.omega_max = w;
        Ok(bath)
    }

    pub fn params(&self) -> &PhononParams {
        &self.params
    }

    pub fn is_uncoupled(&self) -> bool {
        self.j_peak == 0.0
    }

    /// `(argmax J, max J)`, rad/ps.
    pub fn peak(&self) -> (f64, f64) {
        (self.omega_peak, self.j_peak)
    }

    /// Quadrature cut-off where `J` falls below `1e-10` of its peak, rad/ps.
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    #[inline]
    fn j(&self, w: f64) -> f64 {
        let w2 = w * w;
        let form = self.params.d_e * (-w2 * self.ke).exp() - self.params.d_h * (-w2 * self.kh).exp();
        self.prefactor * w2 * w * form * form
    }

    /// Spectral density `J(ω)` in rad/ps for `ω ≥ 0` in rad/ps.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::InvalidParameter(format!("spectral density needs omega >= 0, got {omega}")));
        }
        Ok(self.j(omega))
    }

    /// `coth(ħω / 2k_BT)`, tending to one at zero temperature.
    #[inline]
    fn coth(&self, w: f64) -> f64 {
        if self.half_beta == 0.0 {
            return 1.0;
        }
        let x = self.half_beta * w;
        if x > 20.0 {
            1.0
        } else {
            1.0 / x.tanh()
        }
    }

    fn quad_settings() -> QuadSettings {
        QuadSettings::default().with_rel_tol(1e-10).with_abs_tol(1e-15)
    }

    /// Integrates `g(ω)` over `[0, ω_max]` with panels no wider than
    /// `π / freq` so each starting panel spans at most half a period.
    fn integrate_omega<T, F>(&self, g: F, freq: f64) -> Result<T>
    where
        T: crate::quad::QuadValue,
        F: Fn(f64) -> T,
    {
        let max_width = if freq > 0.0 { PI / freq } else { f64::INFINITY };
        let breaks = uniform_breaks(0.0, self.omega_max, max_width, 16);
        Ok(integrate_with_breaks(g, &breaks, Self::quad_settings())?.value)
    }

    /// Bath correlation function `C(τ)` in 1/ps².
    pub fn correlation(&self, tau: f64) -> Result<Complex64> {
        ensure_finite("tau", tau)?;
        if self.is_uncoupled() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.integrate_omega(
            |w| {
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let j = self.j(w);
                let (s, c) = (w * tau).sin_cos();
                Complex64::new(j * self.coth(w) * c, -j * s)
            },
            tau.abs(),
        )
    }

    /// Polaron shift `∫ J(ω)/ω dω` as an angular frequency, rad/ps. The
    /// coupled transition sits this much below the bare one.
    pub fn polaron_shift(&self) -> Result<f64> {
        if self.is_uncoupled() {
            return Ok(0.0);
        }
        self.integrate_omega(|w| if w == 0.0 { 0.0 } else { self.j(w) / w }, 0.0)
    }

    /// Independent-boson exponent
    /// `φ(t) = ∫ J/ω² [coth (1 - cos ωt) + i (sin ωt - ωt)] dω`.
    pub fn independent_boson_phi(&self, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
        }
        if self.is_uncoupled() || t == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.integrate_omega(
            |w| {
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let jw = self.j(w) / (w * w);
                let x = w * t;
                let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
                Complex64::new(jw * self.coth(w) * one_minus_cos, jw * (x.sin() - x))
            },
            t,
        )
    }

    /// Undriven coherence `ρ_eg(t)/ρ_eg(0) = e^{-φ(t)}` in the frame of the
    /// bare transition; `ρ_ge` evolves with the complex conjugate.
    pub fn independent_boson_coherence(&self, t: f64) -> Result<Complex64> {
        Ok((-self.independent_boson_phi(t)?).exp())
    }

    /// Franck–Condon factor `e^{-Re φ(∞)}` with `Re φ(∞) = ∫ J coth / ω² dω`.
    pub fn franck_condon(&self) -> Result<f64> {
        if self.is_uncoupled() {
            return Ok(1.0);
        }
        let s = self.integrate_omega(
            |w| if w == 0.0 { 0.0 } else { self.j(w) * self.coth(w) / (w * w) },
            0.0,
        )?;
        Ok((-s).exp())
    }

    /// Memory time: the last `τ` on a 0.01 ps grid up to `horizon` where
    /// `|C(τ)| ≥ threshold · C(0)`.
    pub fn memory_time(&self, threshold: f64, horizon: f64) -> Result<f64> {
        if self.is_uncoupled() {
            return Ok(0.0);
        }
        let c0 = self.correlation(0.0)?.re;
        let n = (horizon / 0.01).ceil() as usize;
        let values: Vec<(f64, f64)> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let tau = i as f64 * 0.01;
                self.correlation(tau).map(|c| (tau, c.norm()))
            })
            .collect::<Result<_>>()?;
        let last = values
            .iter()
            .rev()
            .find(|(_, c)| *c >= threshold * c0)
            .map_or(0.0, |(t, _)| *t);
        if last >= horizon - 0.01 {
            return Err(Error::Quadrature(format!(
                "bath correlation still above {threshold} C(0) at the {horizon} ps horizon"
            )));
        }
        Ok(last)
    }

    /// Influence coefficients for step `dt` and lags `0..=memory_k`.
    pub fn eta_coefficients(&self, dt: f64, memory_k: usize) -> Result<InfluenceCoefficients> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if memory_k < 1 {
            return Err(Error::InvalidParameter("memory_k must be >= 1".into()));
        }
        let eta: Vec<Complex64> = if self.is_uncoupled() {
            vec![Complex64::new(0.0, 0.0); memory_k + 1]
        } else {
            (0..=memory_k)
                .into_par_iter()
                .map(|m| self.eta(dt, m))
                .collect::<Result<_>>()?
        };
        Ok(InfluenceCoefficients {
            dt,
            memory_k,
            eta,
            polaron_shift: self.polaron_shift()?,
            params_hash: self.params.hash(),
        })
    }

    fn eta(&self, dt: f64, m: usize) -> Result<Complex64> {
        if m == 0 {
            return self.integrate_omega(
                |w| {
                    if w == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let jw = self.j(w) / (w * w);
                    let x = w * dt;
                    let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
                    Complex64::new(jw * self.coth(w) * one_minus_cos, jw * (x.sin() - x))
                },
                dt,
            );
        }
        let mf = m as f64;
        self.integrate_omega(
            |w| {
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let window = 4.0 * (0.5 * w * dt).sin().powi(2) / (w * w);
                let (s, c) = (mf * w * dt).sin_cos();
                let j = self.j(w) * window;
                Complex64::new(j * self.coth(w) * c, -j * s)
            },
            (mf + 1.0) * dt,
        )
    }
}

/// Discretised influence functional: `η_m` for lags `m = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceCoefficients {
    pub dt: f64,
    pub memory_k: usize,
    pub eta: Vec<Complex64>,
    /// `∫ J/ω dω`, rad/ps.
    pub polaron_shift: f64,
    pub params_hash: String,
}

impl InfluenceCoefficients {
    /// Coefficients of an uncoupled bath.
    pub fn zero(dt: f64, memory_k: usize) -> Self {
        Self {
            dt,
            memory_k,
            eta: vec![Complex64::new(0.0, 0.0); memory_k + 1],
            polaron_shift: 0.0,
            params_hash: String::from("uncoupled"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eta.iter().all(|e| *e == Complex64::new(0.0, 0.0))
    }

    /// Hex SHA-256 of the table, for run manifests.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.dt.to_le_bytes());
        h.update((self.memory_k as u64).to_le_bytes());
        for e in &self.eta {
            h.update(e.re.to_le_bytes());
            h.update(e.im.to_le_bytes());
        }
        h.update(self.polaron_shift.to_le_bytes());
        h.update(self.params_hash.as_bytes());
        hex(&h.finalize())
    }

    /// File name used inside a cache directory.
    pub fn cache_file_name(params_hash: &str, dt: f64, memory_k: usize) -> String {
        format!("eta_{}_dt{}_k{}.csv", &params_hash[..16.min(params_hash.len())], dt, memory_k)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("# dt_ps = {}\n", self.dt));
        out.push_str(&format!("# memory_k = {}\n", self.memory_k));
        out.push_str(&format!("# params_hash = {}\n", self.params_hash));
        out.push_str(&format!("# polaron_shift_rad_per_ps = {:e}\n", self.polaron_shift));
        out.push_str("m,re_eta,im_eta\n");
        for (m, e) in self.eta.iter().enumerate() {
            out.push_str(&format!("{m},{:e},{:e}\n", e.re, e.im));
        }
        crate::io::write_atomic(path, out.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let display = path.display().to_string();
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: display.clone(),
            line,
            msg,
        };
        let mut dt = None;
        let mut memory_k = None;
        let mut params_hash = None;
        let mut polaron_shift = None;
        let mut eta = Vec::new();
        let mut saw_header = false;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.split_once('=') else { continue };
                let value = value.trim();
                let num = |v: &str| v.parse::<f64>().map_err(|e| parse_err(lineno, e.to_string()));
                match key.trim() {
                    "dt_ps" => dt = Some(num(value)?),
                    "memory_k" => {
                        memory_k = Some(value.parse::<usize>().map_err(|e| parse_err(lineno, e.to_string()))?)
                    }
                    "params_hash" => params_hash = Some(value.to_string()),
                    "polaron_shift_rad_per_ps" => polaron_shift = Some(num(value)?),
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                if line != "m,re_eta,im_eta" {
                    return Err(parse_err(lineno, format!("expected header 'm,re_eta,im_eta', found '{line}'")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(parse_err(lineno, format!("expected 3 fields, found {}", fields.len())));
            }
            let m: usize = fields[0].trim().parse().map_err(|e: std::num::ParseIntError| parse_err(lineno, e.to_string()))?;
            if m != eta.len() {
                return Err(parse_err(lineno, format!("lag {m} out of order")));
            }
            let re: f64 = fields[1].trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(lineno, e.to_string()))?;
            let im: f64 = fields[2].trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(lineno, e.to_string()))?;
            eta.push(Complex64::new(re, im));
        }
        let missing = |what: &str| parse_err(0, format!("missing '# {what} = ...' header"));
        let coeffs = Self {
            dt: dt.ok_or_else(|| missing("dt_ps"))?,
            memory_k: memory_k.ok_or_else(|| missing("memory_k"))?,
            params_hash: params_hash.ok_or_else(|| missing("params_hash"))?,
            polaron_shift: polaron_shift.ok_or_else(|| missing("polaron_shift_rad_per_ps"))?,
            eta,
        };
        if coeffs.eta.len() != coeffs.memory_k + 1 {
            return Err(parse_err(
                0,
                format!("expected {} rows for memory_k = {}, found {}", coeffs.memory_k + 1, coeffs.memory_k, coeffs.eta.len()),
            ));
        }
        Ok(coeffs)
    }
}

/// Loads `η` from `cache_dir` when a table for the same parameters, `dt` and
/// `K` exists, otherwise computes and stores it.
pub fn cached_eta_coefficients(
    bath: &Bath,
    dt: f64,
    memory_k: usize,
    cache_dir: Option<&Path>,
) -> Result<InfluenceCoefficients> {
    let Some(dir) = cache_dir else {
        return bath.eta_coefficients(dt, memory_k);
    };
    let hash = bath.params().hash();
    let path: PathBuf = dir.join(InfluenceCoefficients::cache_file_name(&hash, dt, memory_k));
    if path.exists() {
        match InfluenceCoefficients::read_csv(&path) {
            Ok(c) if c.params_hash == hash && c.dt == dt && c.memory_k == memory_k => {
                log::info!("loaded influence coefficients from {}", path.display());
                return Ok(c);
            }
            Ok(_) => log::warn!("cache entry {} does not match; recomputing", path.display()),
            Err(e) => log::warn!("ignoring unreadable cache entry: {e}"),
        }
    }
    let coeffs = bath.eta_coefficients(dt, memory_k)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    coeffs.write_csv(&path)?;
    Ok(coeffs)
}

/// Writes `omega_rad_per_ps, energy_mev, j_rad_per_ps` rows on a uniform grid
/// up to the cut-off.
pub fn write_spectral_density_csv(bath: &Bath, points: usize, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<spectral density output>", e);
    writeln!(out, "# temperature_k = {}", bath.params().temperature).map_err(io)?;
    writeln!(out, "omega_rad_per_ps,energy_mev,j_rad_per_ps").map_err(io)?;
    let n = points.max(2);
    for i in 0..n {
        let w = bath.omega_max() * i as f64 / (n - 1) as f64;
        writeln!(out, "{w:e},{:e},{:e}", w * HBAR, bath.j(w)).map_err(io)?;
    }
    Ok(())
}
