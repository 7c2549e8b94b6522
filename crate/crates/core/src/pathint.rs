//! Real-time path integral for the driven two-level system coupled to the
//! phonon bath, using a memory-truncated augmented density tensor (ADT).
//!
//! Time is split into steps of length `dt`. Within step `k`
//! (`[t_{k-1}, t_k]`) the system propagator is applied for half a step, the
//! bath acts once at the midpoint through the influence functional, and the
//! second half step follows. Each bath kick carries a Liouville path variable
//! `α = 2i + j` (`i` the ket and `j` the bra occupation of |e⟩) and couples to
//! the `K` preceding kicks through
//! `exp(-(s⁺_k - s⁻_k)(η_m s⁺_{k-m} - η_m* s⁻_{k-m}))`, `m = 0..=K`.
//!
//! The tensor keeps one base-4 digit per retained path variable, with the
//! newest variable in the most significant digit, and is stored sparsely as a
//! key-sorted list. Entries that a vanishing propagator element would create
//! are never generated, so an undriven run keeps only four entries however
//! long the memory is.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{min_eigenvalue, BlochState, BlochTrajectory, DensityMatrix};
use crate::error::{Error, Result};
use crate::phonon::{Bath, InfluenceCoefficients};
use crate::pulse::DichromaticPulse;

/// Largest memory depth representable with 64-bit keys.
pub const MAX_MEMORY_K: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathIntConfig {
    /// Time step, ps.
    pub dt: f64,
    /// Number of past steps the influence functional reaches back.
    pub memory_k: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: BlochState,
    pub max_steps: usize,
    /// Upper bound on stored tensor entries.
    pub max_entries: usize,
    /// Shift the excited state up by the polaron shift so that drive
    /// detunings refer to the phonon-dressed transition.
    pub compensate_polaron_shift: bool,
    /// Largest sub-step used to build the system propagator of each half step;
    /// the drive is sampled at every sub-step midpoint.
    pub system_substep: f64,
    /// Entries with modulus below this are dropped. Zero keeps everything.
    pub prune_threshold: f64,
}

impl Default for PathIntConfig {
    fn default() -> Self {
        Self {
            dt: 0.4,
            memory_k: 8,
            t_start: -60.0,
            t_end: 62.0,
            initial: BlochState::ground(),
            max_steps: 200_000,
            max_entries: 1 << 22,
            compensate_polaron_shift: true,
            system_substep: 0.01,
            prune_threshold: 0.0,
        }
    }
}

impl PathIntConfig {
    /// Defaults spanning the pulse support plus a short tail.
    pub fn for_pulse(pulse: &DichromaticPulse, dt: f64, memory_k: usize) -> Self {
        let (a, b) = pulse.support();
        Self {
            dt,
            memory_k,
            t_start: a,
            t_end: b + 2.0,
            ..Self::default()
        }
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.memory_k < 1 {
            return Err(Error::InvalidParameter("memory_k must be >= 1".into()));
        }
        if self.memory_k > MAX_MEMORY_K {
            return Err(Error::Resource(format!(
                "memory_k = {} exceeds the supported maximum {MAX_MEMORY_K}; use a larger dt",
                self.memory_k
            )));
        }
        if !self.t_start.is_finite() || !self.t_end.is_finite() || self.t_end <= self.t_start {
            return Err(Error::InvalidParameter(format!(
                "need finite t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.steps() > self.max_steps {
            return Err(Error::Resource(format!(
                "{} steps exceed max_steps = {}",
                self.steps(),
                self.max_steps
            )));
        }
        if !(self.system_substep > 0.0) {
            return Err(Error::InvalidParameter("system_substep must be > 0".into()));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(Error::InvalidParameter("prune_threshold must be >= 0".into()));
        }
        self.initial.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathIntResult {
    pub trajectory: BlochTrajectory,
    /// Largest number of tensor entries held at once.
    pub peak_entries: usize,
    /// Smallest density-matrix eigenvalue seen.
    pub min_eigenvalue: f64,
    /// Largest `|tr ρ - 1|` seen.
    pub max_trace_error: f64,
}

type Mat2 = [[Complex64; 2]; 2];
type Liouville = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `exp(-i M h)` for `M = [[0, f/2], [f*/2, δ]]`.
fn step_unitary(f: Complex64, delta: f64, h: f64) -> Mat2 {
    let c0 = 0.5 * delta;
    let b = [
        [Complex64::new(-0.5 * delta, 0.0), 0.5 * f],
        [0.5 * f.conj(), Complex64::new(0.5 * delta, 0.0)],
    ];
    let r = (0.25 * delta * delta + 0.25 * f.norm_sqr()).sqrt();
    let (sin_rh, cos_rh) = (r * h).sin_cos();
    let sinc = if r * h < 1e-8 { h } else { sin_rh / r };
    let phase = Complex64::from_polar(1.0, -c0 * h);
    let mut u = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { cos_rh } else { 0.0 };
            u[i][j] = phase * (Complex64::new(id, 0.0) - Complex64::i() * sinc * b[i][j]);
        }
    }
    u
}

/// Propagator from `t0` to `t1` built from sub-steps no longer than
/// `max_sub`, each using the drive at its midpoint.
fn propagator(pulse: &DichromaticPulse, delta: f64, t0: f64, t1: f64, max_sub: f64) -> Mat2 {
    let n = ((t1 - t0) / max_sub - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut u = [[ONE, ZERO], [ZERO, ONE]];
    for s in 0..n {
        let tm = t0 + (s as f64 + 0.5) * h;
        u = mat_mul(&step_unitary(pulse.field(tm), delta, h), &u);
    }
    u
}

/// Liouville form `G[(i,j)][(k,l)] = U_ik U*_jl` of `ρ → U ρ U†`.
fn liouville(u: &Mat2) -> Liouville {
    let mut g = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    g[2 * i + j][2 * k + l] = u[i][k] * u[j][l].conj();
                }
            }
        }
    }
    g
}

fn rho_to_vec(rho: &DensityMatrix) -> [Complex64; 4] {
    [rho[0][0], rho[0][1], rho[1][0], rho[1][1]]
}

fn apply(g: &Liouville, v: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [ZERO; 4];
    for a in 0..4 {
        out[a] = g[a][0] * v[0] + g[a][1] * v[1] + g[a][2] * v[2] + g[a][3] * v[3];
    }
    out
}

fn vec_to_rho(v: &[Complex64; 4]) -> DensityMatrix {
    // Symmetrise to remove rounding-level anti-Hermitian parts.
    let ge = 0.5 * (v[1] + v[2].conj());
    [
        [Complex64::new(v[0].re, 0.0), ge],
        [ge.conj(), Complex64::new(v[3].re, 0.0)],
    ]
}

#[inline]
fn ket(a: usize) -> f64 {
    (a >> 1) as f64
}

#[inline]
fn bra(a: usize) -> f64 {
    (a & 1) as f64
}

/// `η s⁺ - η* s⁻` for the earlier path variable `b`.
#[inline]
fn x_term(eta: Complex64, b: usize) -> Complex64 {
    eta * ket(b) - eta.conj() * bra(b)
}

/// Lookup tables of the influence phase for the `eg` variable: for every
/// group of four digits, `exp(-Σ x_term(η_lag, digit))`. The `ge` variable
/// uses the reciprocal; diagonal variables feel no influence.
struct InfluenceTables {
    eg: Vec<[Complex64; 256]>,
    ge: Vec<[Complex64; 256]>,
}

impl InfluenceTables {
    fn new(eta: &[Complex64], len: usize) -> Self {
        let chunks = len.div_ceil(4);
        let mut eg = vec![[ONE; 256]; chunks];
        let mut ge = vec![[ONE; 256]; chunks];
        for c in 0..chunks {
            for v in 0..256usize {
                let mut sum = ZERO;
                for q in 0..4 {
                    let d = 4 * c + q;
                    if d >= len {
                        break;
                    }
                    let digit = (v >> (2 * q)) & 3;
                    // Digit d holds the variable `len - d` steps in the past.
                    sum += x_term(eta[len - d], digit);
                }
                eg[c][v] = (-sum).exp();
                ge[c][v] = sum.exp();
            }
        }
        Self { eg, ge }
    }

    #[inline]
    fn factor(&self, table: &[[Complex64; 256]], key: u64) -> Complex64 {
        let mut f = ONE;
        let mut k = key;
        for t in table {
            f *= t[(k & 255) as usize];
            k >>= 8;
        }
        f
    }
}

#[derive(Default)]
struct Tensor {
    keys: Vec<u64>,
    vals: Vec<Complex64>,
    /// Number of path variables (base-4 digits) per key.
    len: usize,
}

impl Tensor {
    fn marginal(&self) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        if self.len == 0 {
            return out;
        }
        let shift = 2 * (self.len - 1);
        for (k, v) in self.keys.iter().zip(&self.vals) {
            out[((k >> shift) & 3) as usize] += *v;
        }
        out
    }
}

/// Runs one bath kick for the new path variable `a` over all entries.
#[allow(clippy::too_many_arguments)]
fn kick_run(
    a: usize,
    tensor: &Tensor,
    g_row: &[Complex64; 4],
    self_factor: Complex64,
    tables: &InfluenceTables,
    full: bool,
    prune: f64,
) -> (Vec<u64>, Vec<Complex64>) {
    let mut keys = Vec::new();
    let mut vals = Vec::new();
    if g_row.iter().all(|g| *g == ZERO) {
        return (keys, vals);
    }
    let len = tensor.len;
    let newest_shift = 2 * (len - 1);
    let table = match a {
        1 => Some(&tables.ge),
        2 => Some(&tables.eg),
        _ => None,
    };
    let prefix = if full {
        (a as u64) << (2 * (len - 1))
    } else {
        (a as u64) << (2 * len)
    };
    keys.reserve(tensor.keys.len());
    vals.reserve(tensor.keys.len());
    for (&key, &val) in tensor.keys.iter().zip(&tensor.vals) {
        let g = g_row[((key >> newest_shift) & 3) as usize];
        if g == ZERO {
            continue;
        }
        let mut c = g * val * self_factor;
        if let Some(t) = table {
            c *= tables.factor(t, key);
        }
        let new_key = if full { prefix | (key >> 2) } else { prefix | key };
        if keys.last() == Some(&new_key) {
            *vals.last_mut().expect("paired with keys") += c;
        } else {
            keys.push(new_key);
            vals.push(c);
        }
    }
    if prune > 0.0 {
        let mut w = 0;
        for r in 0..keys.len() {
            if vals[r].norm() >= prune {
                keys[w] = keys[r];
                vals[w] = vals[r];
                w += 1;
            }
        }
        keys.truncate(w);
        vals.truncate(w);
    }
    (keys, vals)
}

/// Propagates the reduced density matrix and records it at every step
/// boundary `t_start + k dt`.
pub fn propagate(
    pulse: &DichromaticPulse,
    coeffs: &InfluenceCoefficients,
    cfg: &PathIntConfig,
) -> Result<BlochTrajectory> {
    Ok(propagate_with_diagnostics(pulse, coeffs, cfg)?.trajectory)
}

pub fn propagate_with_diagnostics(
    pulse: &DichromaticPulse,
    coeffs: &InfluenceCoefficients,
    cfg: &PathIntConfig,
) -> Result<PathIntResult> {
    cfg.validate()?;
    if (coeffs.dt - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::Contract(format!(
            "influence coefficients were built for dt = {} but the run uses dt = {}",
            coeffs.dt, cfg.dt
        )));
    }
    if coeffs.memory_k < cfg.memory_k || coeffs.eta.len() < cfg.memory_k + 1 {
        return Err(Error::Contract(format!(
            "influence coefficients hold {} lags but the run needs {}",
            coeffs.memory_k, cfg.memory_k
        )));
    }
    let k_mem = cfg.memory_k;
    let eta = &coeffs.eta[..=k_mem];
    let eta_scale = eta.iter().map(|e| e.norm()).fold(0.0, f64::max);
    if eta_scale > 0.0 && eta[k_mem].norm() > 1e-2 * eta_scale {
        log::warn!(
            "|eta_K| = {:.2e} is not small against max |eta| = {:.2e}: memory window {} ps may truncate the bath memory",
            eta[k_mem].norm(),
            eta_scale,
            k_mem as f64 * cfg.dt
        );
    }

    let delta = if cfg.compensate_polaron_shift { coeffs.polaron_shift } else { 0.0 };
    let dt = cfg.dt;
    let n_steps = cfg.steps();
    let half = |k: usize, second: bool| -> Mat2 {
        let t0 = cfg.t_start + (k as f64 - 1.0) * dt + if second { 0.5 * dt } else { 0.0 };
        propagator(pulse, delta, t0, t0 + 0.5 * dt, cfg.system_substep)
    };

    let self_eg = (-eta[0]).exp();
    let self_ge = (-eta[0].conj()).exp();
    let self_factor = |a: usize| match a {
        1 => self_ge,
        2 => self_eg,
        _ => ONE,
    };

    let rho0 = cfg.initial.to_rho();
    let mut t = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    t.push(cfg.t_start);
    states.push(cfg.initial);

    let mut min_eig = min_eigenvalue(&rho0);
    let mut max_trace_err: f64 = 0.0;
    let mut peak_entries = 0usize;
    let mut tensor = Tensor::default();
    let mut tables = InfluenceTables::new(eta, 0);
    let mut tables_len = 0;
    let mut prev_second_half: Option<Mat2> = None;

    for k in 1..=n_steps {
        let first = half(k, false);
        let second = half(k, true);
        if k == 1 {
            // First kick: no history yet.
            let v = apply(&liouville(&first), &rho_to_vec(&rho0));
            for (a, va) in v.iter().enumerate() {
                if *va != ZERO {
                    tensor.keys.push(a as u64);
                    tensor.vals.push(*va * self_factor(a));
                }
            }
            tensor.len = 1;
        } else {
            let g = liouville(&mat_mul(&first, prev_second_half.as_ref().expect("set after step 1")));
            let full = tensor.len == k_mem;
            if tables_len != tensor.len {
                tables = InfluenceTables::new(eta, tensor.len);
                tables_len = tensor.len;
            }
            let prune = cfg.prune_threshold;
            let runs: Vec<(Vec<u64>, Vec<Complex64>)> = (0..4usize)
                .into_par_iter()
                .map(|a| kick_run(a, &tensor, &g[a], self_factor(a), &tables, full, prune))
                .collect();
            let total: usize = runs.iter().map(|r| r.0.len()).sum();
            if total > cfg.max_entries {
                let suggested = ((cfg.max_entries as f64).ln() / 4f64.ln()).floor() as usize;
                return Err(Error::Resource(format!(
                    "augmented density tensor needs {total} entries, above max_entries = {}; \
                     use memory_k <= {suggested} (with a larger dt) or raise max_entries",
                    cfg.max_entries
                )));
            }
            let mut next = Tensor {
                keys: Vec::with_capacity(total),
                vals: Vec::with_capacity(total),
                len: if full { k_mem } else { tensor.len + 1 },
            };
            for (keys, vals) in runs {
                next.keys.extend(keys);
                next.vals.extend(vals);
            }
            tensor = next;
        }
        peak_entries = peak_entries.max(tensor.keys.len());
        prev_second_half = Some(second);

        let rho_v = apply(&liouville(&second), &tensor.marginal());
        let trace = (rho_v[0] + rho_v[3]).re;
        max_trace_err = max_trace_err.max((trace - 1.0).abs());
        if (trace - 1.0).abs() > 1e-7 {
            return Err(Error::StepTooLarge(format!(
                "trace drifted to {trace} at step {k}; check dt and the influence coefficients"
            )));
        }
        let rho = vec_to_rho(&rho_v);
        min_eig = min_eig.min(min_eigenvalue(&rho));
        t.push(cfg.t_start + k as f64 * dt);
        states.push(BlochState::from_rho(&rho));
    }
    if min_eig < -1e-6 {
        log::warn!("density matrix eigenvalue reached {min_eig:.2e}; refine dt or increase memory_k");
    }
    Ok(PathIntResult {
        trajectory: BlochTrajectory { t, states },
        peak_entries,
        min_eigenvalue: min_eig,
        max_trace_error: max_trace_err,
    })
}

/// Occupation at the end of a propagation.
pub fn propagate_final(
    pulse: &DichromaticPulse,
    coeffs: &InfluenceCoefficients,
    cfg: &PathIntConfig,
) -> Result<f64> {
    let traj = propagate(pulse, coeffs, cfg)?;
    Ok(traj.states.last().map_or(f64::NAN, BlochState::occupation))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub memory_k: usize,
    pub n_final: f64,
    /// Change relative to the previous row; NaN for the first row.
    pub delta_prev: f64,
    pub converged: bool,
}

/// Threshold on `|delta_prev|` below which a refinement counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 5e-3;

/// Final occupations for each `(dt, K)` pair, in order.
pub fn convergence_scan(
    pulse: &DichromaticPulse,
    bath: &Bath,
    pairs: &[(f64, usize)],
    base: &PathIntConfig,
) -> Result<Vec<ConvergenceRow>> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("convergence scan needs at least one (dt, K) pair".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(pairs.len());
    for &(dt, k) in pairs {
        let coeffs = bath.eta_coefficients(dt, k)?;
        let cfg = PathIntConfig { dt, memory_k: k, ..*base };
        let n = propagate_final(pulse, &coeffs, &cfg)?;
        let delta_prev = rows.last().map_or(f64::NAN, |r| n - r.n_final);
        log::info!("convergence: dt = {dt} ps, K = {k}: n = {n:.6}");
        rows.push(ConvergenceRow {
            dt,
            memory_k: k,
            n_final: n,
            delta_prev,
            converged: delta_prev.abs() < CONVERGENCE_TOLERANCE,
        });
    }
    Ok(rows)
}

/// `(dt, ceil(window/dt))` pairs: time-step refinement at a fixed memory window.
pub fn dt_study_pairs(dt_list: &[f64], window: f64) -> Vec<(f64, usize)> {
    dt_list
        .iter()
        .map(|&dt| (dt, ((window / dt) - 1e-9).ceil().max(1.0) as usize))
        .collect()
}

/// `(W/K, K)` pairs: time-step refinement at the fixed memory window `W`.
pub fn window_study_pairs(k_list: &[usize], window: f64) -> Vec<(f64, usize)> {
    k_list.iter().map(|&k| (window / k as f64, k)).collect()
}

/// Convergence order `p` implied by the last three rows under the model
/// `n(dt) = n₀ + c dtᵖ`, found by bisection on
/// `(n₁ - n₂)/(n₂ - n₃) = (dt₁ᵖ - dt₂ᵖ)/(dt₂ᵖ - dt₃ᵖ)` for `p ∈ [0.1, 8]`.
pub fn observed_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let n = rows.len();
    if n < 3 {
        return None;
    }
    let (r1, r2, r3) = (&rows[n - 3], &rows[n - 2], &rows[n - 1]);
    if !(r1.dt > r2.dt && r2.dt > r3.dt) {
        return None;
    }
    let d12 = r1.n_final - r2.n_final;
    let d23 = r2.n_final - r3.n_final;
    if d23 == 0.0 || d12 * d23 <= 0.0 {
        return None;
    }
    let target = d12 / d23;
    let ratio = |p: f64| (r1.dt.powf(p) - r2.dt.powf(p)) / (r2.dt.powf(p) - r3.dt.powf(p));
    // The ratio is monotone in p for a decreasing dt sequence.
    let (mut lo, mut hi) = (0.1, 8.0);
    let increasing = ratio(hi) > ratio(lo);
    let g = |p: f64| (ratio(p) - target) * if increasing { 1.0 } else { -1.0 };
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Writes the convergence report `dt, K, n_final, delta_prev`.
pub fn convergence_csv(rows: &[ConvergenceRow], meta: &[(&str, String)]) -> String {
    let mut out = crate::io::comment_header(meta);
    out.push_str("# units: dt in ps, n_final dimensionless\n");
    out.push_str("dt,K,n_final,delta_prev\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.9},{:.3e}\n", r.dt, r.memory_k, r.n_final, r.delta_prev));
    }
    out
}
