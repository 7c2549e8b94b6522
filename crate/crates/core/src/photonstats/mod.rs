//! Photon-statistics models and fits: HOM visibility, coincidence dips
//! convolved with a Gaussian instrument response, lifetime and linewidth
//! fits, delay-scan coherence and integration-window visibility.
//!
//! Times are in ns and energies in μeV. Coincidence histograms are expected
//! to be normalised so that uncorrelated side peaks average 1.

pub mod nelder_mead;

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use nelder_mead::{minimize, NelderMeadSettings};

/// `ħ` in μeV·ns (numerically equal to meV·ps).
pub const HBAR_UEV_NS: f64 = crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramKind {
    G2,
    Lifetime,
    Spectrum,
    DeltaScan,
}

impl HistogramKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HistogramKind::G2 => "g2",
            HistogramKind::Lifetime => "lifetime",
            HistogramKind::Spectrum => "spectrum",
            HistogramKind::DeltaScan => "delta-scan",
        }
    }
}

impl std::str::FromStr for HistogramKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g2" => Ok(HistogramKind::G2),
            "lifetime" => Ok(HistogramKind::Lifetime),
            "spectrum" => Ok(HistogramKind::Spectrum),
            "delta-scan" => Ok(HistogramKind::DeltaScan),
            other => Err(Error::Config(format!(
                "unknown histogram kind '{other}' (expected g2, lifetime, spectrum or delta-scan)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin centres: ns for time histograms and delay scans, μeV for spectra.
    pub bin_centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub kind: HistogramKind,
}

impl Histogram {
    pub fn new(bin_centers: Vec<f64>, counts: Vec<f64>, kind: HistogramKind) -> Result<Self> {
        let h = Self { bin_centers, counts, kind };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_centers.len() != self.counts.len() {
            return Err(Error::InvalidParameter("bin_centers and counts differ in length".into()));
        }
        if self.bin_centers.len() < 2 {
            return Err(Error::InvalidParameter("histogram needs at least two bins".into()));
        }
        if self.bin_centers.iter().chain(&self.counts).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("histogram contains non-finite values".into()));
        }
        if self.bin_centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("bin centres must be strictly increasing".into()));
        }
        if self.kind != HistogramKind::DeltaScan && self.counts.iter().any(|c| *c < 0.0) {
            return Err(Error::InvalidParameter("histogram counts must be non-negative".into()));
        }
        if matches!(self.kind, HistogramKind::G2 | HistogramKind::Lifetime) {
            uniform_step(&self.bin_centers)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let unit = match self.kind {
            HistogramKind::Spectrum => "ueV",
            _ => "ns",
        };
        let mut out = format!("# kind: {}\n# units: bin_center in {unit}\nbin_center,counts\n", self.kind.as_str());
        for (x, c) in self.bin_centers.iter().zip(&self.counts) {
            out.push_str(&format!("{x:e},{c:e}\n"));
        }
        out
    }

    pub fn from_csv(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: path.to_string(), line, msg };
        let mut kind = None;
        let mut header = false;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(k) = c.trim().strip_prefix("kind:") {
                    kind = Some(k.trim().parse::<HistogramKind>().map_err(|e| err(lineno, e.to_string()))?);
                }
                continue;
            }
            if !header {
                if line != "bin_center,counts" {
                    return Err(err(lineno, format!("expected header 'bin_center,counts', found '{line}'")));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 2 {
                return Err(err(lineno, format!("expected 2 fields, found {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(lineno, format!("bad number '{s}': {e}")));
            xs.push(num(f[0])?);
            ys.push(num(f[1])?);
        }
        let kind = kind.ok_or_else(|| err(1, "missing '# kind: ...' header line".into()))?;
        Histogram::new(xs, ys, kind).map_err(|e| err(0, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    /// One-standard-deviation uncertainties; infinite when the curvature
    /// matrix is singular.
    pub uncertainties: BTreeMap<String, f64>,
    /// Quantities derived from the fitted parameters (e.g. `t2_star`).
    pub derived: BTreeMap<String, f64>,
    /// Sum of squared residuals.
    pub residual: f64,
    pub converged: bool,
    /// Parameters are poorly determined by the data.
    pub ill_conditioned: bool,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }
}

/// `V = 1 - g∥/g⊥`.
pub fn hom_visibility(g_par: f64, g_perp: f64) -> Result<f64> {
    if g_perp == 0.0 || !g_perp.is_finite() || !g_par.is_finite() {
        return Err(Error::InvalidParameter(format!("g_perp must be finite and non-zero, got {g_perp}")));
    }
    Ok(1.0 - g_par / g_perp)
}

/// Central-peak HOM dip `0.5 e^{-|τ|/T₁} (1 - V e^{-|τ|/τ_c})`.
pub fn g2_dip_model(tau: f64, t1: f64, v: f64, tau_c: f64) -> f64 {
    let a = tau.abs();
    0.5 * (-a / t1).exp() * (1.0 - v * (-a / tau_c).exp())
}

/// `g²∥(0, δ) = 0.5 (1 - V e^{-|δ|/T₂})`.
pub fn delta_scan_model(delta: f64, t2: f64, v: f64) -> f64 {
    0.5 * (1.0 - v * (-delta.abs() / t2).exp())
}

/// Lorentzian with full width `fwhm` and peak height `amp` on a background.
pub fn lorentzian_model(x: f64, amp: f64, center: f64, fwhm: f64, bg: f64) -> f64 {
    let hw = 0.5 * fwhm;
    amp * hw * hw / ((x - center).powi(2) + hw * hw) + bg
}

/// Single exponential decay of initial height `amp` starting at `t0`,
/// convolved with a unit-area Gaussian of width `irf_fwhm`, plus background.
pub fn lifetime_model(t: f64, amp: f64, t0: f64, t1: f64, irf_fwhm: f64, bg: f64) -> f64 {
    let x = t - t0;
    if irf_fwhm <= 0.0 {
        return if x >= 0.0 { amp * (-x / t1).exp() + bg } else { bg };
    }
    let s = irf_fwhm / (2.0 * (2.0 * LN_2).sqrt());
    let arg = (s / t1 - x / s) / std::f64::consts::SQRT_2;
    // Use the scaled form for large arguments to avoid 0 * inf.
    let val = if arg > 5.0 {
        let z = arg;
        0.5 * (-(x * x) / (2.0 * s * s)).exp() * erfcx(z)
    } else {
        0.5 * (s * s / (2.0 * t1 * t1) - x / t1).exp() * libm::erfc(arg)
    };
    amp * val + bg
}

/// `e^{z²} erfc(z)` for `z > 5` from the asymptotic series.
fn erfcx(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / (2.0 * z2);
        sum += term;
    }
    sum / (z * PI.sqrt())
}

/// Lifetime-limited linewidth `ħ/T₁` in μeV for `T₁` in ns.
pub fn transform_limited_linewidth(t1_ns: f64) -> f64 {
    HBAR_UEV_NS / t1_ns
}

fn uniform_step(x: &[f64]) -> Result<f64> {
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let tol = 1e-6 * dx.abs();
    if x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > tol) {
        return Err(Error::InvalidParameter("time histograms need uniformly spaced bins".into()));
    }
    Ok(dx)
}

/// Discrete Gaussian kernel with unit sum for grid step `dx`.
fn irf_kernel(dx: f64, irf_fwhm: f64) -> Result<Vec<f64>> {
    let sigma = irf_fwhm / (2.0 * (2.0 * LN_2).sqrt());
    let half = (6.0 * sigma / dx).ceil() as usize;
    if half > 1_000_000 {
        return Err(Error::InvalidParameter(format!(
            "IRF of {irf_fwhm} ns needs {half} kernel points per side at step {dx}; use a coarser grid"
        )));
    }
    let mut k: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * dx;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    Ok(k)
}

/// Convolves samples on a uniform grid of step `dx` with a normalised
/// Gaussian of full width `irf_fwhm`; values beyond the grid repeat the
/// edge samples.
pub fn convolve_irf(values: &[f64], dx: f64, irf_fwhm: f64) -> Result<Vec<f64>> {
    if !(dx > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step must be > 0, got {dx}")));
    }
    if !(irf_fwhm >= 0.0) || !irf_fwhm.is_finite() {
        return Err(Error::InvalidParameter(format!("irf_fwhm must be >= 0, got {irf_fwhm}")));
    }
    if irf_fwhm == 0.0 || values.is_empty() {
        return Ok(values.to_vec());
    }
    let kernel = irf_kernel(dx, irf_fwhm)?;
    let half = (kernel.len() / 2) as isize;
    let n = values.len() as isize;
    Ok((0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let idx = (i + j as isize - half).clamp(0, n - 1);
                acc += w * values[idx as usize];
            }
            acc
        })
        .collect())
}

/// IRF-convolved dip evaluated at `taus` (uniform grid). The model is built
/// on a grid extended by the kernel width so edges are not padded with
/// truncated data.
pub fn g2_dip_convolved(taus: &[f64], t1: f64, v: f64, tau_c: f64, irf_fwhm: f64) -> Result<Vec<f64>> {
    if taus.len() < 2 {
        return Ok(taus.iter().map(|&t| g2_dip_model(t, t1, v, tau_c)).collect());
    }
    let dx = uniform_step(taus)?;
    if irf_fwhm == 0.0 {
        return Ok(taus.iter().map(|&t| g2_dip_model(t, t1, v, tau_c)).collect());
    }
    let kernel = irf_kernel(dx, irf_fwhm)?;
    let pad = kernel.len() / 2;
    let start = taus[0] - pad as f64 * dx;
    let ext: Vec<f64> = (0..taus.len() + 2 * pad)
        .map(|i| g2_dip_model(start + i as f64 * dx, t1, v, tau_c))
        .collect();
    Ok((0..taus.len())
        .map(|i| kernel.iter().enumerate().map(|(j, w)| w * ext[i + j]).sum())
        .collect())
}

/// Shared fit driver: bounded Nelder–Mead on the squared residuals, then
/// uncertainties from a finite-difference Hessian, `cov = 2 s² H⁻¹` with
/// `s² = SSR / (N - p)`.
fn fit_model<M>(
    names: &[&str],
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    y: &[f64],
    model: M,
) -> Result<FitResult>
where
    M: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = names.len();
    if y.len() <= p {
        return Err(Error::Fit(format!("{} data points cannot determine {p} parameters", y.len())));
    }
    let (ymin, ymax) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if ymax - ymin <= 1e-12 * ymax.abs().max(1e-300) {
        return Err(Error::Fit("data are flat; nothing to fit".into()));
    }
    let ssr = |params: &[f64]| -> f64 {
        match model(params) {
            Ok(m) => m.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let settings = NelderMeadSettings::default();
    let best = minimize(ssr, start, lower, upper, &settings);
    if !best.f.is_finite() {
        return Err(Error::Fit("objective is not finite at any trial point".into()));
    }
    if !best.converged {
        return Err(Error::Fit(format!(
            "simplex did not converge within {} evaluations (best residual {:e})",
            best.evaluations, best.f
        )));
    }

    // Finite-difference Hessian of the SSR at the optimum.
    let h: Vec<f64> = best
        .x
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| {
            let scale = if v != 0.0 { v.abs() } else { (hi - lo).abs().min(1.0) };
            1e-4 * scale
        })
        .collect();
    let f0 = best.f;
    let at = |d: &[(usize, f64)]| {
        let mut q = best.x.clone();
        for &(i, s) in d {
            q[i] += s;
        }
        ssr(&q)
    };
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let fp = at(&[(i, h[i])]);
        let fm = at(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = at(&[(i, h[i]), (j, h[j])]);
            let fpm = at(&[(i, h[i]), (j, -h[j])]);
            let fmp = at(&[(i, -h[i]), (j, h[j])]);
            let fmm = at(&[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let s2 = f0 / (y.len() - p) as f64;
    let mut ill = false;
    let sv = hess.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &v| (a.max(v), b.min(v)));
    if !(smin > 0.0) || smax / smin > 1e12 {
        ill = true;
    }
    let cov = hess.try_inverse();
    let mut params = BTreeMap::new();
    let mut uncertainties = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        params.insert(name.to_string(), best.x[i]);
        let var = cov.as_ref().map_or(f64::INFINITY, |c| 2.0 * s2 * c[(i, i)]);
        let sd = if var.is_finite() && var >= 0.0 { var.sqrt() } else { f64::INFINITY };
        if !sd.is_finite() {
            ill = true;
        }
        uncertainties.insert(name.to_string(), sd);
    }
    Ok(FitResult {
        params,
        uncertainties,
        derived: BTreeMap::new(),
        residual: f0,
        converged: best.converged,
        ill_conditioned: ill,
    })
}

fn require_kind(hist: &Histogram, kind: HistogramKind) -> Result<()> {
    hist.validate()?;
    if hist.kind != kind {
        return Err(Error::Config(format!(
            "expected a '{}' histogram, got '{}'",
            kind.as_str(),
            hist.kind.as_str()
        )));
    }
    Ok(())
}

/// Options for [`fit_g2`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct G2FitOptions {
    /// Fix `T₁` (ns), e.g. from an independent lifetime fit.
    pub fixed_t1: Option<f64>,
}

/// Fits `t1`, `v_hom` and `tau_c` of the IRF-convolved dip. Also reports
/// `t2_star = 2 tau_c`.
pub fn fit_g2(hist: &Histogram, irf_fwhm: f64, options: &G2FitOptions) -> Result<FitResult> {
    require_kind(hist, HistogramKind::G2)?;
    let taus = &hist.bin_centers;
    let span = taus[taus.len() - 1].min(-taus[0]);
    if span < 1.5 {
        return Err(Error::Fit("g2 histogram must cover at least ±1.5 ns around zero delay".into()));
    }
    let y = &hist.counts;
    // Start values: T₁ from the decay of the wings, V from the dip depth.
    let v0 = {
        let i0 = taus.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|p| p.0).unwrap_or(0);
        (1.0 - 2.0 * y[i0]).clamp(0.05, 0.95)
    };
    let t1_0 = options.fixed_t1.unwrap_or(0.7);
    let mut result = match options.fixed_t1 {
        Some(t1) => {
            let mut r = fit_model(
                &["v_hom", "tau_c"],
                &[v0, 0.3],
                &[0.0, 1e-4],
                &[1.0, 50.0],
                y,
                |p| g2_dip_convolved(taus, t1, p[0], p[1], irf_fwhm),
            )?;
            r.params.insert("t1".into(), t1);
            r.uncertainties.insert("t1".into(), 0.0);
            r
        }
        None => fit_model(
            &["t1", "v_hom", "tau_c"],
            &[t1_0, v0, 0.3],
            &[1e-3, 0.0, 1e-4],
            &[100.0, 1.0, 50.0],
            y,
            |p| g2_dip_convolved(taus, p[0], p[1], p[2], irf_fwhm),
        )?,
    };
    result.params.insert("irf_fwhm".into(), irf_fwhm);
    let tc = result.param("tau_c");
    result.derived.insert("t2_star".into(), 2.0 * tc);
    Ok(result)
}

/// Fits `amp`, `t0`, `t1` and `bg` of an IRF-convolved single exponential.
/// Flags the fit as ill-conditioned when the IRF is more than three times
/// longer than the fitted lifetime.
pub fn fit_lifetime(hist: &Histogram, irf_fwhm: f64) -> Result<FitResult> {
    require_kind(hist, HistogramKind::Lifetime)?;
    let t = &hist.bin_centers;
    let y = &hist.counts;
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = t[t.len() - 1] - t[0];
    // Lifetime guess from the 1/e point after the maximum.
    let target = ymin + (ymax - ymin) / std::f64::consts::E;
    let t1_0 = t[imax..]
        .iter()
        .zip(&y[imax..])
        .find(|(_, &v)| v <= target)
        .map_or(0.25 * span, |(&ti, _)| (ti - t[imax]).max(1e-3));
    let mut result = fit_model(
        &["amp", "t0", "t1", "bg"],
        &[ymax - ymin, t[imax] - 0.5 * irf_fwhm, t1_0, ymin.max(0.0)],
        &[0.0, t[0] - span, 1e-4, 0.0],
        &[10.0 * ymax.max(1e-300), t[t.len() - 1], 10.0 * span, ymax.max(1e-300)],
        y,
        |p| Ok(t.iter().map(|&ti| lifetime_model(ti, p[0], p[1], p[2], irf_fwhm, p[3])).collect()),
    )?;
    result.params.insert("irf_fwhm".into(), irf_fwhm);
    if irf_fwhm > 3.0 * result.param("t1") {
        result.ill_conditioned = true;
    }
    result.derived.insert(
        "transform_limited_linewidth_ueV".into(),
        transform_limited_linewidth(result.param("t1")),
    );
    Ok(result)
}

/// Fits `amp`, `center`, `gamma_fwhm` (μeV) and `bg` of a Lorentzian.
pub fn fit_lorentzian(spectrum: &Histogram) -> Result<FitResult> {
    require_kind(spectrum, HistogramKind::Spectrum)?;
    let x = &spectrum.bin_centers;
    let y = &spectrum.counts;
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = ymin + 0.5 * (ymax - ymin);
    let left = (0..=imax).rev().find(|&i| y[i] < half).map_or(x[0], |i| x[i]);
    let right = (imax..y.len()).find(|&i| y[i] < half).map_or(x[x.len() - 1], |i| x[i]);
    let span = x[x.len() - 1] - x[0];
    let fwhm0 = (right - left).max(span / x.len() as f64);
    fit_model(
        &["amp", "center", "gamma_fwhm", "bg"],
        &[ymax - ymin, x[imax], fwhm0, ymin.max(0.0)],
        &[0.0, x[0], 1e-6 * span, 0.0],
        &[10.0 * ymax.max(1e-300), x[x.len() - 1], 10.0 * span, ymax.max(1e-300)],
        y,
        |p| Ok(x.iter().map(|&xi| lorentzian_model(xi, p[0], p[1], p[2], p[3])).collect()),
    )
}

/// Fits `t2` (ns) and `v` of `g²∥(0, δ) = 0.5 (1 - V e^{-|δ|/T₂})`.
pub fn fit_delta_scan(points: &Histogram) -> Result<FitResult> {
    require_kind(points, HistogramKind::DeltaScan)?;
    let d = &points.bin_centers;
    let y = &points.counts;
    if d.len() < 5 || d[0] >= 0.0 || d[d.len() - 1] <= 0.0 {
        return Err(Error::Fit("delay scan needs at least 5 points on both sides of zero".into()));
    }
    let i0 = d.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |p| p.0);
    let v0 = (1.0 - 2.0 * y[i0]).clamp(0.05, 0.95);
    let span = d[d.len() - 1] - d[0];
    fit_model(
        &["t2", "v"],
        &[0.25 * span, v0],
        &[1e-4, 0.0],
        &[100.0 * span, 1.0],
        y,
        |p| Ok(d.iter().map(|&x| delta_scan_model(x, p[0], p[1])).collect()),
    )
}

/// `V(w) = 1 - Σ_{|τ|<w/2} g∥ / Σ_{|τ|<w/2} g⊥` for each window `w` (ns).
pub fn windowed_visibility(g_par: &Histogram, g_perp: &Histogram, windows: &[f64]) -> Result<Vec<(f64, f64)>> {
    g_par.validate()?;
    g_perp.validate()?;
    if g_par.bin_centers != g_perp.bin_centers {
        return Err(Error::InvalidParameter("g∥ and g⊥ histograms must share bin centres".into()));
    }
    windows
        .iter()
        .map(|&w| {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut any = false;
            for ((&t, &a), &b) in g_par.bin_centers.iter().zip(&g_par.counts).zip(&g_perp.counts) {
                if t.abs() < 0.5 * w {
                    num += a;
                    den += b;
                    any = true;
                }
            }
            if !any {
                return Err(Error::InvalidParameter(format!("window {w} ns contains no bins")));
            }
            Ok((w, hom_visibility(num, den)?))
        })
        .collect()
}

/// Uniform delay grid `[-half_span, half_span]` with step `dx`.
pub fn delay_grid(half_span: f64, dx: f64) -> Vec<f64> {
    let n = (half_span / dx).round() as i64;
    (-n..=n).map(|i| i as f64 * dx).collect()
}
