//! Dichromatic drive fields in the frame rotating at the emitter transition.
//!
//! The field is `f(t) = e^{iδ(t-t0)} [ε_R(t) e^{-iΔ(t-t0)} + ε_B(t) e^{iΔ(t-t0)}]`
//! with real envelopes `ε_R`, `ε_B` in rad/ps, red/blue detuning `±Δ` and an
//! optional common carrier offset `δ`. The phase reference is the pulse
//! centre `t0`, so both sidebands are in phase at `t0` (transform-limited
//! spectrum with flat spectral phase).
//!
//! Rectangular-spectrum components use the sinc envelope
//! `ε(t) = (A/π) sin(W (t-t0) / 2ħ) / (t-t0)`. Every such component has the
//! same spectral height `A`, so its time integral is `A` and its intensity
//! grows linearly with the width `W`. Because the sinc tails decay only as
//! `1/t`, the envelope is cut to `t0 ± half_width` with a cosine-squared roll
//! off over the outer `taper_fraction` of the window; the resonant spectral
//! overlap caused by the cut is reported by [`DichromaticPulse::resonant_overlap`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate_with_breaks, uniform_breaks, QuadSettings};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    RectSpectrum,
    Gaussian,
}

/// Truncation window applied to sinc envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SincWindow {
    /// Half width of the window around `t0`, ps.
    pub half_width: f64,
    /// Fraction of the half width used for the cosine-squared roll off.
    /// Zero gives a hard cut.
    pub taper_fraction: f64,
}

impl Default for SincWindow {
    fn default() -> Self {
        Self {
            half_width: 60.0,
            taper_fraction: 0.5,
        }
    }
}

impl SincWindow {
    fn weight(&self, tau: f64) -> f64 {
        let x = tau.abs();
        if x >= self.half_width {
            return 0.0;
        }
        let flat = self.half_width * (1.0 - self.taper_fraction);
        if x <= flat {
            return 1.0;
        }
        let u = (x - flat) / (self.half_width - flat);
        let c = (0.5 * PI * u).cos();
        c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShape,
    /// Detuning of each sideband from the pair centre, meV. Zero merges the
    /// pair into one resonant band of the wider width carrying the full area.
    pub delta: f64,
    /// Spectral width of the red sideband, meV. Zero removes it.
    pub w_red: f64,
    /// Spectral width of the blue sideband, meV. Zero removes it.
    pub w_blue: f64,
    /// Pulse area in radians: the rotation angle a single resonant component
    /// would produce on a bare two-level system.
    pub area: f64,
    /// Pulse centre, ps.
    pub t0: f64,
    /// Offset of the pair centre from the transition, meV.
    #[serde(default)]
    pub carrier_detuning: f64,
    #[serde(default)]
    pub window: SincWindow,
}

impl PulseSpec {
    /// Rectangular-spectrum pair centred at `t0 = 0`.
    pub fn rect(delta: f64, w_red: f64, w_blue: f64, area: f64) -> Self {
        Self {
            shape: PulseShape::RectSpectrum,
            delta,
            w_red,
            w_blue,
            area,
            t0: 0.0,
            carrier_detuning: 0.0,
            window: SincWindow::default(),
        }
    }

    /// Gaussian pair centred at `t0 = 0`; widths are bandwidth parameters
    /// (see [`gaussian_sigma`]).
    pub fn gaussian(delta: f64, w_red: f64, w_blue: f64, area: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            ..Self::rect(delta, w_red, w_blue, area)
        }
    }

    pub fn with_window(mut self, window: SincWindow) -> Self {
        self.window = window;
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("w_red", self.w_red),
            ("w_blue", self.w_blue),
            ("area", self.area),
            ("t0", self.t0),
            ("carrier_detuning", self.carrier_detuning),
            ("window.half_width", self.window.half_width),
            ("window.taper_fraction", self.window.taper_fraction),
        ] {
            ensure_finite(name, v)?;
        }
        if self.w_red < 0.0 || self.w_blue < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spectral widths must be non-negative (w_red = {}, w_blue = {})",
                self.w_red, self.w_blue
            )));
        }
        if self.w_red == 0.0 && self.w_blue == 0.0 {
            return Err(Error::InvalidParameter("at least one sideband must have a non-zero width".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.area < 0.0 {
            return Err(Error::InvalidParameter(format!("area must be >= 0, got {}", self.area)));
        }
        if self.shape == PulseShape::RectSpectrum {
            if self.window.half_width <= 0.0 {
                return Err(Error::InvalidParameter("window.half_width must be > 0".into()));
            }
            if !(0.0..=1.0).contains(&self.window.taper_fraction) {
                return Err(Error::InvalidParameter("window.taper_fraction must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Widths are equal and the pair is centred on the transition.
    pub fn is_symmetric(&self) -> bool {
        self.w_red == self.w_blue && self.carrier_detuning == 0.0
    }
}

/// Temporal standard deviation (ps) of a Gaussian component with bandwidth
/// parameter `w` (meV): `σ_t = 4 ħ ln2 / w`.
pub fn gaussian_sigma(w: f64) -> f64 {
    4.0 * HBAR * std::f64::consts::LN_2 / w
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Envelope {
    Zero,
    /// `(A/π) sin(k τ)/τ`, `k = W/2ħ`.
    Sinc { area: f64, k: f64, window: SincWindow },
    /// `amp exp(-τ²/2σ²)`.
    Gauss { amp: f64, sigma: f64 },
}

impl Envelope {
    fn eval(&self, tau: f64) -> f64 {
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Sinc { area, k, window } => {
                let w = window.weight(tau);
                if w == 0.0 {
                    0.0
                } else {
                    w * sinc_envelope(area, k, tau)
                }
            }
            Envelope::Gauss { amp, sigma } => amp * (-0.5 * (tau / sigma).powi(2)).exp(),
        }
    }

    fn eval_untruncated(&self, tau: f64) -> f64 {
        match *self {
            Envelope::Sinc { area, k, .. } => sinc_envelope(area, k, tau),
            _ => self.eval(tau),
        }
    }

    fn peak(&self) -> f64 {
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Sinc { area, k, .. } => area * k / PI,
            Envelope::Gauss { amp, .. } => amp,
        }
    }

    /// `∫ ε² dt` over the whole real line for the untruncated envelope.
    fn full_intensity(&self) -> f64 {
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Sinc { area, k, .. } => area * area * k / PI,
            Envelope::Gauss { amp, sigma } => amp * amp * sigma * PI.sqrt(),
        }
    }

    /// Value of the envelope's Fourier transform `∫ ε(τ) e^{-iωτ} dτ` for the
    /// untruncated envelope.
    fn spectrum_at(&self, omega: f64) -> f64 {
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Sinc { area, k, .. } => {
                let x = omega.abs();
                if x < k {
                    area
                } else if x == k {
                    0.5 * area
                } else {
                    0.0
                }
            }
            Envelope::Gauss { amp, sigma } => {
                amp * sigma * (2.0 * PI).sqrt() * (-0.5 * (omega * sigma).powi(2)).exp()
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Envelope::Zero)
    }
}

#[inline]
fn sinc_envelope(area: f64, k: f64, tau: f64) -> f64 {
    let x = k * tau;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    area / PI * k * sinc
}

/// A validated dichromatic pulse that can be sampled at arbitrary times.
#[derive(Debug, Clone, PartialEq)]
pub struct DichromaticPulse {
    spec: PulseSpec,
    red: Envelope,
    blue: Envelope,
    /// Δ/ħ, rad/ps.
    omega_delta: f64,
    /// δ/ħ, rad/ps.
    omega_carrier: f64,
}

/// Builds the rectangular-spectrum (sinc envelope) pair.
pub fn make_rect_dichromatic(spec: PulseSpec) -> Result<DichromaticPulse> {
    if spec.shape != PulseShape::RectSpectrum {
        return Err(Error::InvalidParameter("make_rect_dichromatic needs shape = rect-spectrum".into()));
    }
    DichromaticPulse::new(spec)
}

/// Builds the Gaussian pair. The area `A` is shared equally among the
/// sidebands that are present.
pub fn make_gaussian_dichromatic(spec: PulseSpec) -> Result<DichromaticPulse> {
    if spec.shape != PulseShape::Gaussian {
        return Err(Error::InvalidParameter("make_gaussian_dichromatic needs shape = gaussian".into()));
    }
    DichromaticPulse::new(spec)
}

impl DichromaticPulse {
    pub fn new(spec: PulseSpec) -> Result<Self> {
        spec.validate()?;
        let make = |w: f64, share: f64| -> Envelope {
            if w == 0.0 || spec.area == 0.0 {
                return Envelope::Zero;
            }
            match spec.shape {
                PulseShape::RectSpectrum => Envelope::Sinc {
                    area: spec.area,
                    k: w / (2.0 * HBAR),
                    window: spec.window,
                },
                PulseShape::Gaussian => {
                    let sigma = gaussian_sigma(w);
                    Envelope::Gauss {
                        amp: share / (sigma * (2.0 * PI).sqrt()),
                        sigma,
                    }
                }
            }
        };
        // At zero detuning the two equal-height bands coincide and form a
        // single resonant band of the wider width.
        let (w_red, w_blue) = if spec.delta == 0.0 {
            (spec.w_red.max(spec.w_blue), 0.0)
        } else {
            (spec.w_red, spec.w_blue)
        };
        let present = (w_red > 0.0) as usize + (w_blue > 0.0) as usize;
        let share = spec.area / present as f64;
        Ok(Self {
            red: make(w_red, share),
            blue: make(w_blue, share),
            omega_delta: spec.delta / HBAR,
            omega_carrier: spec.carrier_detuning / HBAR,
            spec,
        })
    }

    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn envelope_red(&self, t: f64) -> f64 {
        self.red.eval(t - self.spec.t0)
    }

    pub fn envelope_blue(&self, t: f64) -> f64 {
        self.blue.eval(t - self.spec.t0)
    }

    /// Complex rotating-frame drive `f(t)` in rad/ps.
    pub fn field(&self, t: f64) -> Complex64 {
        let tau = t - self.spec.t0;
        let er = self.red.eval(tau);
        let eb = self.blue.eval(tau);
        self.combine(tau, er, eb)
    }

    /// The drive without the sinc truncation window.
    pub fn field_untruncated(&self, t: f64) -> Complex64 {
        let tau = t - self.spec.t0;
        let er = self.red.eval_untruncated(tau);
        let eb = self.blue.eval_untruncated(tau);
        self.combine(tau, er, eb)
    }

    #[inline]
    fn combine(&self, tau: f64, er: f64, eb: f64) -> Complex64 {
        if er == 0.0 && eb == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (s, c) = (self.omega_delta * tau).sin_cos();
        let base = Complex64::new((er + eb) * c, (eb - er) * s);
        if self.omega_carrier == 0.0 {
            base
        } else {
            base * Complex64::from_polar(1.0, self.omega_carrier * tau)
        }
    }

    /// Precession axis `Ω = (Re f, Im f, 0)`, rad/ps.
    pub fn precession_axis(&self, t: f64) -> [f64; 3] {
        let f = self.field(t);
        [f.re, f.im, 0.0]
    }

    /// Time interval outside which the drive vanishes (sinc window) or is
    /// below `e^{-32}` of its peak (Gaussian).
    pub fn support(&self) -> (f64, f64) {
        let t0 = self.spec.t0;
        match self.spec.shape {
            PulseShape::RectSpectrum => (t0 - self.spec.window.half_width, t0 + self.spec.window.half_width),
            PulseShape::Gaussian => {
                let sigma = [self.red, self.blue]
                    .iter()
                    .filter_map(|e| match e {
                        Envelope::Gauss { sigma, .. } => Some(*sigma),
                        _ => None,
                    })
                    .fold(0.0, f64::max);
                let half = if sigma > 0.0 { 8.0 * sigma } else { 1.0 };
                (t0 - half, t0 + half)
            }
        }
    }

    /// Upper bound on `|f(t)|`, rad/ps.
    pub fn peak_amplitude(&self) -> f64 {
        self.red.peak() + self.blue.peak()
    }

    pub fn is_symmetric(&self) -> bool {
        self.spec.is_symmetric()
    }

    pub fn is_zero(&self) -> bool {
        self.red.is_zero() && self.blue.is_zero()
    }

    /// Full-line intensities `(I_R, I_B) = ∫ ε² dt` of the declared (untruncated)
    /// sidebands, rad²/ps.
    pub fn intensities(&self) -> (f64, f64) {
        (self.red.full_intensity(), self.blue.full_intensity())
    }

    /// Intensities integrated over the truncated envelopes actually used in
    /// simulations.
    pub fn windowed_intensities(&self) -> Result<(f64, f64)> {
        let (a, b) = self.support();
        let breaks = uniform_breaks(a, b, 2.0, 8);
        let settings = QuadSettings::default().with_rel_tol(1e-10);
        let ir = integrate_with_breaks(|t| self.envelope_red(t).powi(2), &breaks, settings)?;
        let ib = integrate_with_breaks(|t| self.envelope_blue(t).powi(2), &breaks, settings)?;
        Ok((ir.value, ib.value))
    }

    /// Resonant overlap `∫ f(t) dt` over the support: the spectral amplitude of
    /// the simulated drive at the transition frequency, in radians.
    pub fn resonant_overlap(&self) -> Result<Complex64> {
        let (a, b) = self.support();
        let max_omega = self.omega_delta + self.omega_carrier.abs() + 1.0;
        let breaks = uniform_breaks(a, b, (PI / max_omega).min(2.0), 8);
        let r = integrate_with_breaks(
            |t| self.field(t),
            &breaks,
            QuadSettings::default().with_rel_tol(1e-12).with_abs_tol(1e-13),
        )?;
        Ok(r.value)
    }

    /// Spectral amplitude of the declared (untruncated) pulse at the
    /// transition frequency; zero when no sideband overlaps the transition.
    pub fn declared_resonant_overlap(&self) -> Complex64 {
        // f = e^{iδτ}[ε_R e^{-iΔτ} + ε_B e^{iΔτ}]; ∫f dτ = ε̃_R(Δ-δ) + ε̃_B(-Δ-δ).
        let red = self.red.spectrum_at(self.omega_delta - self.omega_carrier);
        let blue = self.blue.spectrum_at(-self.omega_delta - self.omega_carrier);
        Complex64::new(red + blue, 0.0)
    }

    /// Difference between the simulated and the declared resonant overlap,
    /// caused by truncating the envelopes.
    pub fn truncation_residue(&self) -> Result<Complex64> {
        Ok(self.resonant_overlap()? - self.declared_resonant_overlap())
    }

    /// Pulse contrast `(I_B - I_R)/(I_B + I_R)` of the declared sidebands.
    pub fn contrast(&self) -> Result<f64> {
        contrast(self)
    }

    /// Sampled spectral intensities of both sidebands of the untruncated
    /// pulse, normalised so that `∫ S(E) dE = ∫ ε² dt`.
    pub fn spectrum(&self, half_width: f64, n: usize) -> Result<PulseSpectrum> {
        if !(half_width > 0.0) || n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "spectrum needs half_width > 0 and a power-of-two sample count >= 16".into(),
            ));
        }
        let dt = 2.0 * half_width / n as f64;
        let t_start = self.spec.t0 - half_width;
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let transform = |component: &dyn Fn(f64) -> Complex64| -> Vec<f64> {
            let mut buf: Vec<Complex64> = (0..n).map(|i| component(t_start + i as f64 * dt)).collect();
            fft.process(&mut buf);
            // Reorder to ascending frequency and normalise to S(E) = |F(ω)|²/(2πħ).
            let mut out = vec![0.0; n];
            for (k, v) in buf.iter().enumerate() {
                let idx = (k + n / 2) % n;
                out[idx] = (v * dt).norm_sqr() / (2.0 * PI * HBAR);
            }
            out
        };
        let tau_phase = |t: f64| t - self.spec.t0;
        let red = transform(&|t| {
            let tau = tau_phase(t);
            self.combine(tau, self.red.eval_untruncated(tau), 0.0)
        });
        let blue = transform(&|t| {
            let tau = tau_phase(t);
            self.combine(tau, 0.0, self.blue.eval_untruncated(tau))
        });
        let d_omega = 2.0 * PI / (n as f64 * dt);
        let energies = (0..n)
            .map(|i| (i as f64 - (n / 2) as f64) * d_omega * HBAR)
            .collect();
        Ok(PulseSpectrum { energies, red, blue })
    }
}

/// Spectral intensities on an ascending energy grid (meV).
#[derive(Debug, Clone)]
pub struct PulseSpectrum {
    pub energies: Vec<f64>,
    pub red: Vec<f64>,
    pub blue: Vec<f64>,
}

impl PulseSpectrum {
    /// Integrated intensities `(I_R, I_B)`.
    pub fn integrated(&self) -> (f64, f64) {
        let de = if self.energies.len() > 1 {
            self.energies[1] - self.energies[0]
        } else {
            0.0
        };
        (self.red.iter().sum::<f64>() * de, self.blue.iter().sum::<f64>() * de)
    }

    pub fn contrast(&self) -> f64 {
        let (r, b) = self.integrated();
        (b - r) / (b + r)
    }
}

/// `C = (I_B - I_R)/(I_B + I_R)` using the full-line intensities of the
/// declared sidebands.
pub fn contrast(pulse: &DichromaticPulse) -> Result<f64> {
    let (ir, ib) = pulse.intensities();
    if ir + ib <= 0.0 {
        return Err(Error::InvalidParameter("contrast undefined: both sidebands vanish".into()));
    }
    Ok((ib - ir) / (ib + ir))
}

/// Sideband widths `(w_red, w_blue)` realising contrast `c` when the wider
/// sideband has width `w_ref`. Intensity is linear in width for both pulse
/// shapes, so the narrower width is `w_ref (1-|c|)/(1+|c|)`.
pub fn widths_for_contrast(c: f64, w_ref: f64) -> Result<(f64, f64)> {
    if !c.is_finite() || c.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!("contrast must lie in [-1, 1], got {c}")));
    }
    if !(w_ref > 0.0) || !w_ref.is_finite() {
        return Err(Error::InvalidParameter(format!("w_ref must be > 0, got {w_ref}")));
    }
    let narrow = w_ref * (1.0 - c.abs()) / (1.0 + c.abs());
    Ok(if c >= 0.0 { (narrow, w_ref) } else { (w_ref, narrow) })
}

/// Evaluates `f(t)` on a grid.
pub fn sample_field(pulse: &DichromaticPulse, t_grid: &[f64]) -> Vec<Complex64> {
    t_grid.iter().map(|&t| pulse.field(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_rect(area: f64) -> PulseSpec {
        PulseSpec::rect(0.6, 0.4, 0.4, area)
    }

    #[test]
    fn sinc_peak_is_the_analytic_limit() {
        let p = make_rect_dichromatic(reference_rect(PI)).unwrap();
        let expected = PI * 0.4 / (2.0 * PI * HBAR);
        assert!((p.envelope_red(0.0) - expected).abs() < 1e-14);
        assert!((expected - 0.3039).abs() < 1e-4);
        // Continuity across the removable singularity.
        assert!((p.envelope_red(1e-7) - expected).abs() < 1e-12);
        assert!((p.envelope_red(-3e-5) - p.envelope_red(3e-5)).abs() < 1e-15);
    }

    #[test]
    fn zero_width_sideband_gives_single_drive() {
        let p = make_rect_dichromatic(PulseSpec::rect(0.6, 0.0, 0.4, PI)).unwrap();
        for &t in &[-3.0, 0.0, 1.7, 12.0] {
            assert_eq!(p.envelope_red(t), 0.0);
            let expected = Complex64::from_polar(p.envelope_blue(t), 0.6 / HBAR * t);
            assert!((p.field(t) - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_rect_dichromatic(PulseSpec::rect(0.6, -0.1, 0.4, PI)).is_err());
        assert!(make_rect_dichromatic(PulseSpec::rect(0.6, 0.0, 0.0, PI)).is_err());
        assert!(make_rect_dichromatic(PulseSpec::rect(f64::NAN, 0.4, 0.4, PI)).is_err());
        assert!(make_rect_dichromatic(PulseSpec::gaussian(0.6, 0.4, 0.4, PI)).is_err());
        assert!(make_gaussian_dichromatic(PulseSpec::rect(0.6, 0.4, 0.4, PI)).is_err());
        // Degenerate monochromatic pair is accepted.
        assert!(make_rect_dichromatic(PulseSpec::rect(0.0, 0.4, 0.4, PI)).is_ok());
    }

    #[test]
    fn zero_area_gives_zero_field() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.6, 0.4, 0.4, 0.0)).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.field(0.3), Complex64::new(0.0, 0.0));
        assert!(p.contrast().is_err());
    }

    #[test]
    fn symmetric_pulse_is_real_cosine() {
        let p = make_rect_dichromatic(reference_rect(5.0 * PI)).unwrap();
        for i in 0..200 {
            let t = -50.0 + 0.5 * i as f64;
            let f = p.field(t);
            let expected = 2.0 * p.envelope_red(t) * (0.6 / HBAR * t).cos();
            assert!(f.im.abs() <= 1e-12 * p.peak_amplitude());
            assert!((f.re - expected).abs() <= 1e-12 * p.peak_amplitude());
            assert_eq!(p.precession_axis(t)[1], f.im);
        }
    }

    #[test]
    fn conjugate_field_swaps_sideband_phases() {
        let p = DichromaticPulse::new(PulseSpec::rect(0.6, 0.2, 0.4, PI).with_t0(3.0)).unwrap();
        for i in 0..=100 {
            let t = 3.0 - 40.0 + 0.8 * i as f64;
            let tau = t - 3.0;
            let swapped = Complex64::from_polar(p.envelope_red(t), 0.6 / HBAR * tau)
                + Complex64::from_polar(p.envelope_blue(t), -0.6 / HBAR * tau);
            assert!((swapped - p.field(t).conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn field_vanishes_outside_support() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.6, 0.4, 0.2, PI)).unwrap();
        let peak = p.peak_amplitude();
        let far = 20.0 * HBAR / 0.2;
        for &t in &[-far - 1.0, far + 1.0, 2.0 * far] {
            assert!(p.field(t).norm() < 1e-6 * peak);
        }
        let r = make_rect_dichromatic(reference_rect(PI)).unwrap();
        let (a, b) = r.support();
        assert_eq!(r.field(a - 0.1), Complex64::new(0.0, 0.0));
        assert_eq!(r.field(b + 0.1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn contrast_of_simple_cases() {
        let sym = make_rect_dichromatic(reference_rect(PI)).unwrap();
        assert_eq!(sym.contrast().unwrap(), 0.0);
        let blue = make_rect_dichromatic(PulseSpec::rect(0.6, 0.0, 0.4, PI)).unwrap();
        assert_eq!(blue.contrast().unwrap(), 1.0);
        let red = make_gaussian_dichromatic(PulseSpec::gaussian(0.6, 0.4, 0.0, PI)).unwrap();
        assert_eq!(red.contrast().unwrap(), -1.0);
    }

    #[test]
    fn widths_for_contrast_cases() {
        assert_eq!(widths_for_contrast(0.0, 0.4).unwrap(), (0.4, 0.4));
        assert_eq!(widths_for_contrast(1.0, 0.4).unwrap(), (0.0, 0.4));
        assert_eq!(widths_for_contrast(-1.0, 0.4).unwrap(), (0.4, 0.0));
        let (r, b) = widths_for_contrast(1.0 / 3.0, 0.4).unwrap();
        assert!((r - 0.2).abs() < 1e-15 && b == 0.4);
        assert!(widths_for_contrast(1.01, 0.4).is_err());
        assert!(widths_for_contrast(0.5, 0.0).is_err());
    }

    #[test]
    fn window_weight_profile() {
        let w = SincWindow { half_width: 60.0, taper_fraction: 0.5 };
        assert_eq!(w.weight(0.0), 1.0);
        assert_eq!(w.weight(30.0), 1.0);
        assert!((w.weight(45.0) - 0.5).abs() < 1e-12);
        assert_eq!(w.weight(60.0), 0.0);
        let hard = SincWindow { half_width: 60.0, taper_fraction: 0.0 };
        assert_eq!(hard.weight(59.999), 1.0);
        assert_eq!(hard.weight(60.0), 0.0);
    }
}
