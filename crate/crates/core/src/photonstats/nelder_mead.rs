//! Box-constrained Nelder–Mead minimisation.
//!
//! Trial points are clamped into the box before evaluation. A run restarts
//! from deterministic perturbations of the start and keeps the best result.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadSettings {
    /// Convergence when the simplex spread in `f` falls below
    /// `ftol * |f_best| + f_abs` and every vertex lies within
    /// `xtol * max(|x_best|, 1e-12)` of the best one, per coordinate.
    pub ftol: f64,
    /// Absolute floor of the `f` criterion, needed when the minimum is zero.
    pub f_abs: f64,
    pub xtol: f64,
    pub max_evaluations: usize,
    /// Number of starting points (the given start plus jittered copies).
    pub starts: usize,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self {
            ftol: 1e-9,
            f_abs: 1e-20,
            xtol: 1e-7,
            max_evaluations: 20_000,
            starts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Deterministic jitter factors for restart `k`.
fn jitter(k: usize, i: usize) -> f64 {
    const PATTERN: [f64; 7] = [0.13, -0.17, 0.07, -0.11, 0.19, -0.05, 0.15];
    1.0 + PATTERN[(3 * k + 5 * i) % PATTERN.len()] * if k == 0 { 0.0 } else { 1.0 }
}

fn single_run<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &NelderMeadSettings,
) -> Minimum {
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut x = x0.clone();
        let range = upper[i] - lower[i];
        let mut step = if x[i] != 0.0 { 0.1 * x[i].abs() } else { 0.05 * range.min(1.0) };
        if !step.is_finite() || step == 0.0 {
            step = 1e-3;
        }
        if x[i] + step > upper[i] {
            step = -step;
        }
        x[i] += step;
        clamp(&mut x, lower, upper);
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut evaluations = n + 1;
    let mut converged = false;

    while evaluations < settings.max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let f_ok = (worst - best).abs() <= settings.ftol * best.abs() + settings.f_abs;
        let x_ok = simplex[1..].iter().all(|v| {
            v.iter()
                .zip(&simplex[0])
                .all(|(a, b)| (a - b).abs() <= settings.xtol * b.abs().max(1e-12))
        });
        if f_ok && x_ok {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let toward = |coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + coef * (simplex[n][i] - centroid[i])).collect();
            clamp(&mut x, lower, upper);
            x
        };

        let xr = toward(-1.0);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = toward(-2.0);
            let fe = eval(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = toward(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = toward(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for k in 1..=n {
            let mut x: Vec<f64> = (0..n).map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i])).collect();
            clamp(&mut x, lower, upper);
            values[k] = eval(&x);
            simplex[k] = x;
        }
        evaluations += n;
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty simplex");
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        converged,
        evaluations,
    }
}

/// Minimises `f` inside `[lower, upper]`, starting from `start` and from
/// `settings.starts - 1` jittered copies; the best result is polished by one
/// more run started at it.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &NelderMeadSettings,
) -> Minimum {
    assert_eq!(start.len(), lower.len());
    assert_eq!(start.len(), upper.len());
    let mut best: Option<Minimum> = None;
    let mut evaluations = 0;
    for k in 0..settings.starts.max(1) {
        let x: Vec<f64> = start.iter().enumerate().map(|(i, v)| v * jitter(k, i)).collect();
        let m = single_run(&f, &x, lower, upper, settings);
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let first = best.expect("at least one start");
    let polished = single_run(&f, &first.x, lower, upper, settings);
    evaluations += polished.evaluations;
    let mut result = if polished.f <= first.f { polished } else { first };
    result.evaluations = evaluations;
    result
}
