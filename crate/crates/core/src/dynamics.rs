//! Phonon-free evolution of the driven two-level system.
//!
//! States are stored as pseudo-spin vectors `s = (Re ρ_ge, Im ρ_ge, (ρ_ee - ρ_gg)/2)`
//! with basis index 0 = |g⟩, 1 = |e⟩, so the occupation is `n = 1/2 + s_z`.
//! The Hamiltonian `H = (ħ/2)(f* |e⟩⟨g| + f |g⟩⟨e|)` gives `ds/dt = Ω × s`
//! with `Ω = (Re f, Im f, 0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::DichromaticPulse;
use crate::quad::{integrate_with_breaks, uniform_breaks, QuadSettings};

/// Two-level density matrix `ρ[i][j] = ⟨i|ρ|j⟩`, index 0 = |g⟩, 1 = |e⟩.
pub type DensityMatrix = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub s: [f64; 3],
}

impl BlochState {
    pub fn ground() -> Self {
        Self { s: [0.0, 0.0, -0.5] }
    }

    pub fn excited() -> Self {
        Self { s: [0.0, 0.0, 0.5] }
    }

    /// `(|g⟩ + e^{iφ}|e⟩)/√2`.
    pub fn equator(phi: f64) -> Self {
        // ρ_ge = ⟨g|ψ⟩⟨ψ|e⟩ = e^{-iφ}/2.
        Self {
            s: [0.5 * phi.cos(), -0.5 * phi.sin(), 0.0],
        }
    }

    pub fn from_rho(rho: &DensityMatrix) -> Self {
        Self {
            s: [
                rho[0][1].re,
                rho[0][1].im,
                0.5 * (rho[1][1].re - rho[0][0].re),
            ],
        }
    }

    pub fn to_rho(&self) -> DensityMatrix {
        let ge = Complex64::new(self.s[0], self.s[1]);
        [
            [Complex64::new(0.5 - self.s[2], 0.0), ge],
            [ge.conj(), Complex64::new(0.5 + self.s[2], 0.0)],
        ]
    }

    pub fn occupation(&self) -> f64 {
        0.5 + self.s[2]
    }

    /// `ρ_ge = ⟨g|ρ|e⟩`.
    pub fn coherence(&self) -> Complex64 {
        Complex64::new(self.s[0], self.s[1])
    }

    pub fn norm(&self) -> f64 {
        (self.s[0] * self.s[0] + self.s[1] * self.s[1] + self.s[2] * self.s[2]).sqrt()
    }

    /// Smallest eigenvalue of the density matrix, `1/2 - |s|`.
    pub fn min_eigenvalue(&self) -> f64 {
        0.5 - self.norm()
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("Bloch vector must be finite".into()));
        }
        if self.norm() > 0.5 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector length {} exceeds 1/2",
                self.norm()
            )));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a Hermitian 2x2 matrix.
pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let a = rho[0][0].re;
    let d = rho[1][1].re;
    let b = rho[0][1];
    let half_tr = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    half_tr - r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<BlochState>,
}

impl BlochTrajectory {
    pub fn occupation(&self) -> Vec<f64> {
        self.states.iter().map(BlochState::occupation).collect()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &BlochState)> {
        Some((*self.t.last()?, self.states.last()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalOccupation {
    pub value: f64,
    /// `|dn/dt| < 1e-5 / ps` over the last 10 % of the trajectory.
    pub stationary: bool,
}

pub fn final_occupation(traj: &BlochTrajectory) -> Result<FinalOccupation> {
    let (_, last) = traj
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    let n = traj.len();
    let t_end = traj.t[n - 1];
    let t_tail = t_end - 0.1 * (t_end - traj.t[0]);
    let mut stationary = true;
    for i in 1..n {
        if traj.t[i] <= t_tail {
            continue;
        }
        let dt = traj.t[i] - traj.t[i - 1];
        let dn = traj.states[i].occupation() - traj.states[i - 1].occupation();
        if dt > 0.0 && (dn / dt).abs() >= 1e-5 {
            stationary = false;
            break;
        }
    }
    if !stationary {
        log::warn!("occupation still changing over the last 10% of the trajectory");
    }
    Ok(FinalOccupation {
        value: last.occupation(),
        stationary,
    })
}

/// Integration step that resolves both the sideband beat and the Rabi
/// frequency: `min(0.02, 2πħ/(50Δ), 0.03/|f|_max)` ps.
pub fn default_step(pulse: &DichromaticPulse) -> f64 {
    let spec = pulse.spec();
    let mut dt: f64 = 0.02;
    let beat = spec.delta + spec.carrier_detuning.abs();
    if beat > 0.0 {
        dt = dt.min(2.0 * std::f64::consts::PI * crate::units::HBAR / (50.0 * beat));
    }
    let peak = pulse.peak_amplitude();
    if peak > 0.0 {
        dt = dt.min(0.03 / peak);
    }
    dt
}

/// Uniform grid from the start of the pulse support to 15 % of the support
/// length past its end, spaced by at most `spacing`.
pub fn default_grid(pulse: &DichromaticPulse, spacing: f64) -> Vec<f64> {
    let (a, b) = pulse.support();
    let end = b + 0.15 * (b - a);
    let n = ((end - a) / spacing).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (end - a) * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub initial: BlochState,
    /// Largest internal RK4 step; grid intervals are subdivided to respect it.
    /// `None` uses [`default_step`].
    pub max_step: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            initial: BlochState::ground(),
            max_step: None,
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid contains non-finite values".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

fn substeps(h: f64, max_step: f64) -> usize {
    ((h / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[inline]
fn cross(o: [f64; 3], s: [f64; 3]) -> [f64; 3] {
    [
        o[1] * s[2] - o[2] * s[1],
        o[2] * s[0] - o[0] * s[2],
        o[0] * s[1] - o[1] * s[0],
    ]
}

#[inline]
fn axpy(s: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

/// Integrates `ds/dt = Ω(t) × s` with fixed-step RK4, recording the state at
/// every grid point.
pub fn evolve_closed(
    pulse: &DichromaticPulse,
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<BlochTrajectory> {
    check_grid(t_grid)?;
    options.initial.validate()?;
    let max_step = options.max_step.unwrap_or_else(|| default_step(pulse));
    if !(max_step > 0.0) {
        return Err(Error::InvalidParameter(format!("max_step must be > 0, got {max_step}")));
    }
    let norm0 = options.initial.norm();
    let mut s = options.initial.s;
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(options.initial);
    let mut worst_drift: f64 = 0.0;
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        let h = (w[1] - w[0]) / n as f64;
        let mut t = w[0];
        let mut f0 = pulse.precession_axis(t);
        for _ in 0..n {
            let fm = pulse.precession_axis(t + 0.5 * h);
            let f1 = pulse.precession_axis(t + h);
            let k1 = cross(f0, s);
            let k2 = cross(fm, axpy(s, 0.5 * h, k1));
            let k3 = cross(fm, axpy(s, 0.5 * h, k2));
            let k4 = cross(f1, axpy(s, h, k3));
            for i in 0..3 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
            f0 = f1;
        }
        let state = BlochState { s };
        let drift = (state.norm() - norm0).abs();
        worst_drift = worst_drift.max(drift);
        if drift > 1e-6 {
            return Err(Error::StepTooLarge(format!(
                "Bloch vector norm drifted by {drift:.2e} at t = {} ps with step {h:.3e} ps; use a smaller step",
                w[1]
            )));
        }
        states.push(state);
    }
    log::debug!("closed evolution: worst norm drift {worst_drift:.2e}");
    Ok(BlochTrajectory {
        t: t_grid.to_vec(),
        states,
    })
}

/// Occupation of a symmetric pulse from the accumulated rotation angle,
/// `n(t) = ½[1 - cos θ(t)]` with `θ(t) = ∫ f(t') dt'` from the start of the
/// support. For equal sidebands and no carrier offset the drive is real, so
/// the Bloch vector rotates about a fixed axis.
pub fn analytic_occupation(pulse: &DichromaticPulse, t_grid: &[f64]) -> Result<Vec<f64>> {
    Ok(rotation_angle(pulse, t_grid)?
        .into_iter()
        .map(|theta| 0.5 * (1.0 - theta.cos()))
        .collect())
}

/// Cumulative rotation angle `θ(t)` on `t_grid` for a symmetric pulse.
pub fn rotation_angle(pulse: &DichromaticPulse, t_grid: &[f64]) -> Result<Vec<f64>> {
    if !pulse.is_symmetric() {
        return Err(Error::Contract(
            "analytic occupation needs equal sideband widths and no carrier offset".into(),
        ));
    }
    check_grid(t_grid)?;
    let (a, b) = pulse.support();
    let omega = pulse.spec().delta / crate::units::HBAR;
    let max_width = if omega > 0.0 { (std::f64::consts::PI / omega).min(2.0) } else { 2.0 };
    let settings = QuadSettings::default().with_rel_tol(1e-12).with_abs_tol(1e-13);
    let integrand = |t: f64| pulse.field(t).re;
    let mut out = Vec::with_capacity(t_grid.len());
    // Start of the accumulation: the earlier of the grid start and the support start.
    let mut acc = 0.0;
    let mut prev = t_grid[0].min(a);
    for &t in t_grid {
        let lo = prev.max(a);
        let hi = t.min(b);
        if hi > lo {
            let breaks = uniform_breaks(lo, hi, max_width, 1);
            acc += integrate_with_breaks(integrand, &breaks, settings)?.value;
        }
        prev = prev.max(t);
        out.push(acc);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationParams {
    /// Radiative lifetime T₁ in ps; `None` disables decay.
    pub t1: Option<f64>,
    /// Pure dephasing rate γ*, 1/ps.
    pub gamma_star: f64,
}

impl DissipationParams {
    pub fn none() -> Self {
        Self { t1: None, gamma_star: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t1) = self.t1 {
            if !(t1 > 0.0) || !t1.is_finite() {
                return Err(Error::InvalidParameter(format!("t1 must be > 0, got {t1}")));
            }
        }
        if !(self.gamma_star >= 0.0) || !self.gamma_star.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma_star must be >= 0, got {}",
                self.gamma_star
            )));
        }
        Ok(())
    }

    fn decay_rate(&self) -> f64 {
        self.t1.map_or(0.0, |t1| 1.0 / t1)
    }
}

/// Lindblad generator for `H/ħ = ½(f* |e⟩⟨g| + f |g⟩⟨e|)`, decay `σ₋` at rate
/// `1/T₁` and dephasing `(γ*/2) D[σ_z]`.
fn lindblad_rhs(f: Complex64, gamma1: f64, gamma_star: f64, rho: &DensityMatrix) -> DensityMatrix {
    let i = Complex64::i();
    let h01 = 0.5 * f;
    let h10 = h01.conj();
    let (gg, ge, eg, ee) = (rho[0][0], rho[0][1], rho[1][0], rho[1][1]);
    // -i[H, ρ] with H = [[0, h01], [h10, 0]].
    let c_gg = -i * (h01 * eg - ge * h10);
    let c_ge = -i * (h01 * ee - gg * h01);
    let c_ee = -i * (h10 * ge - eg * h01);
    let d_gg = c_gg + gamma1 * ee;
    let d_ee = c_ee - gamma1 * ee;
    let d_ge = c_ge - (0.5 * gamma1 + gamma_star) * ge;
    [[d_gg, d_ge], [d_ge.conj(), d_ee]]
}

#[inline]
fn rho_axpy(r: &DensityMatrix, a: f64, k: &DensityMatrix) -> DensityMatrix {
    [
        [r[0][0] + k[0][0] * a, r[0][1] + k[0][1] * a],
        [r[1][0] + k[1][0] * a, r[1][1] + k[1][1] * a],
    ]
}

/// Density-matrix RK4 integration of the Lindblad master equation.
pub fn evolve_lindblad(
    pulse: &DichromaticPulse,
    dissipation: &DissipationParams,
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<BlochTrajectory> {
    check_grid(t_grid)?;
    dissipation.validate()?;
    options.initial.validate()?;
    let mut max_step = options.max_step.unwrap_or_else(|| default_step(pulse));
    let total_rate = dissipation.decay_rate() + dissipation.gamma_star;
    if total_rate > 0.0 {
        max_step = max_step.min(0.1 / total_rate);
    }
    if !(max_step > 0.0) {
        return Err(Error::InvalidParameter(format!("max_step must be > 0, got {max_step}")));
    }
    let gamma1 = dissipation.decay_rate();
    let gs = dissipation.gamma_star;
    let mut rho = options.initial.to_rho();
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(options.initial);
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        let h = (w[1] - w[0]) / n as f64;
        let mut t = w[0];
        let mut f0 = pulse.field(t);
        for _ in 0..n {
            let fm = pulse.field(t + 0.5 * h);
            let f1 = pulse.field(t + h);
            let k1 = lindblad_rhs(f0, gamma1, gs, &rho);
            let k2 = lindblad_rhs(fm, gamma1, gs, &rho_axpy(&rho, 0.5 * h, &k1));
            let k3 = lindblad_rhs(fm, gamma1, gs, &rho_axpy(&rho, 0.5 * h, &k2));
            let k4 = lindblad_rhs(f1, gamma1, gs, &rho_axpy(&rho, h, &k3));
            for a in 0..2 {
                for b in 0..2 {
                    rho[a][b] += (k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]) * (h / 6.0);
                }
            }
            t += h;
            f0 = f1;
        }
        let trace = (rho[0][0] + rho[1][1]).re;
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::StepTooLarge(format!(
                "trace drifted to {trace} at t = {} ps",
                w[1]
            )));
        }
        let lam = min_eigenvalue(&rho);
        if lam < -1e-6 {
            return Err(Error::StepTooLarge(format!(
                "density matrix eigenvalue {lam:.2e} < 0 at t = {} ps with step {h:.3e} ps; use a smaller step",
                w[1]
            )));
        }
        states.push(BlochState::from_rho(&rho));
    }
    Ok(BlochTrajectory {
        t: t_grid.to_vec(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_gaussian_dichromatic, make_rect_dichromatic, PulseSpec};
    use std::f64::consts::PI;

    #[test]
    fn rho_round_trip() {
        let s = BlochState { s: [0.1, -0.2, 0.3] };
        let back = BlochState::from_rho(&s.to_rho());
        for i in 0..3 {
            assert!((s.s[i] - back.s[i]).abs() < 1e-15);
        }
        let eq = BlochState::equator(0.7);
        assert!((eq.norm() - 0.5).abs() < 1e-15);
        assert!((min_eigenvalue(&eq.to_rho())).abs() < 1e-15);
        assert!((eq.occupation() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_field_leaves_state_constant() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.6, 0.4, 0.4, 0.0)).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| -5.0 + 0.2 * i as f64).collect();
        let init = BlochState { s: [0.2, 0.1, -0.3] };
        let traj = evolve_closed(&p, &grid, &EvolveOptions { initial: init, max_step: None }).unwrap();
        assert!(traj.states.iter().all(|s| *s == init));
        let fin = final_occupation(&traj).unwrap();
        assert!(fin.stationary);
        assert_eq!(fin.value, init.occupation());
    }

    #[test]
    fn resonant_real_drive_rotates_about_x() {
        // Positive real f rotates |g⟩ towards +s_y.
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.0, 0.4, 0.0, PI / 2.0)).unwrap();
        let grid = default_grid(&p, 0.1);
        let traj = evolve_closed(&p, &grid, &EvolveOptions::default()).unwrap();
        let (_, s) = traj.last().unwrap();
        assert!((s.s[1] - 0.5).abs() < 1e-6, "{:?}", s.s);
        assert!(s.s[0].abs() < 1e-9 && s.s[2].abs() < 1e-6);
    }

    #[test]
    fn analytic_requires_symmetric_pulse() {
        let p = make_rect_dichromatic(PulseSpec::rect(0.6, 0.2, 0.4, PI)).unwrap();
        assert!(matches!(analytic_occupation(&p, &[0.0, 1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn coarse_step_is_reported() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.0, 0.4, 0.0, 10.0 * PI)).unwrap();
        let grid = default_grid(&p, 0.5);
        let res = evolve_closed(&p, &grid, &EvolveOptions { max_step: Some(0.5), ..Default::default() });
        assert!(matches!(res, Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn rejects_bad_grids() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.0, 0.4, 0.0, PI)).unwrap();
        let o = EvolveOptions::default();
        assert!(evolve_closed(&p, &[], &o).is_err());
        assert!(evolve_closed(&p, &[0.0, 0.0], &o).is_err());
        assert!(evolve_closed(&p, &[0.0, f64::NAN], &o).is_err());
        let bad = DissipationParams { t1: Some(-1.0), gamma_star: 0.0 };
        assert!(evolve_lindblad(&p, &bad, &[0.0, 1.0], &o).is_err());
    }

    #[test]
    fn lindblad_dephasing_and_decay_rates() {
        let p = make_gaussian_dichromatic(PulseSpec::gaussian(0.0, 0.4, 0.0, 0.0)).unwrap();
        let d = DissipationParams { t1: Some(10.0), gamma_star: 0.3 };
        let init = BlochState::equator(0.0);
        let grid = [0.0, 2.0];
        let traj = evolve_lindblad(&p, &d, &grid, &EvolveOptions { initial: init, max_step: Some(0.01) }).unwrap();
        let s = traj.states[1];
        let expected_coh = 0.5 * (-(0.05 + 0.3) * 2.0f64).exp();
        assert!((s.coherence().re - expected_coh).abs() < 1e-10);
        let expected_n = 0.5 * (-0.2f64).exp();
        assert!((s.occupation() - expected_n).abs() < 1e-10);
    }
}
