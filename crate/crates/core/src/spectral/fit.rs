//! Least-squares fits of decay models to correlation series.
//!
//! Only `b^{-c}` is identifiable in `a b^{-ct}`, so `b` is fixed to `e` and
//! reported as such. Fits start from the better of a log-space regression
//! (where the data signs allow it) and a scan over the decay rate with the
//! amplitudes solved linearly, then Levenberg-Marquardt polishes the raw-space
//! residual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::CorrelationSeries;
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `a b^{-ct}`
    PureExp,
    /// `a t b^{-ct}`
    LinearExp,
    /// `(a1 t + a2 t^2) b^{-ct}`
    QuadExp,
    /// `A1 l1^t + A2 l2^t`
    TwoMode,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::PureExp,
        ModelKind::LinearExp,
        ModelKind::QuadExp,
        ModelKind::TwoMode,
    ];

    /// Number of identifiable parameters.
    pub fn free_params(self) -> usize {
        match self {
            ModelKind::PureExp | ModelKind::LinearExp => 2,
            ModelKind::QuadExp => 3,
            ModelKind::TwoMode => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PureExp => "pure_exp",
            ModelKind::LinearExp => "linear_exp",
            ModelKind::QuadExp => "quad_exp",
            ModelKind::TwoMode => "two_mode",
        }
    }

    /// Polynomial prefactor powers for the single-rate models.
    fn powers(self) -> &'static [i32] {
        match self {
            ModelKind::PureExp => &[0],
            ModelKind::LinearExp => &[1],
            ModelKind::QuadExp => &[1, 2],
            ModelKind::TwoMode => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    /// pure/linear: `[a, b, c]`; quad: `[a1, a2, b, c]`; two_mode: `[A1, l1, A2, l2]`.
    pub params: Vec<f64>,
    pub residual_rms: f64,
    pub r_squared: f64,
    pub iterations: usize,
}

impl FitResult {
    /// `b^{-c}` for the single-rate models.
    pub fn decay_factor(&self) -> Option<f64> {
        match self.model {
            ModelKind::TwoMode => None,
            _ => {
                let n = self.params.len();
                Some(self.params[n - 2].powf(-self.params[n - 1]))
            }
        }
    }

    pub fn predict(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.model {
            ModelKind::PureExp => p[0] * (-p[2] * t).exp(),
            ModelKind::LinearExp => p[0] * t * (-p[2] * t).exp(),
            ModelKind::QuadExp => (p[0] * t + p[1] * t * t) * (-p[3] * t).exp(),
            ModelKind::TwoMode => p[0] * p[1].powf(t) + p[2] * p[3].powf(t),
        }
    }
}

/// Internal parameter vectors: single-rate models `[amps.., c]`, two_mode `[A1, l1, A2, l2]`.
fn eval(model: ModelKind, p: &[f64], t: f64) -> f64 {
    match model {
        ModelKind::TwoMode => p[0] * powt(p[1], t) + p[2] * powt(p[3], t),
        _ => {
            let c = p[p.len() - 1];
            let poly: f64 = model
                .powers()
                .iter()
                .zip(p)
                .map(|(&k, a)| a * t.powi(k))
                .sum();
            poly * (-c * t).exp()
        }
    }
}

fn powt(l: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        l.powi(t as i32)
    }
}

fn grad(model: ModelKind, p: &[f64], t: f64, out: &mut [f64]) {
    match model {
        ModelKind::TwoMode => {
            out[0] = powt(p[1], t);
            out[1] = if t == 0.0 {
                0.0
            } else {
                p[0] * t * powt(p[1], t - 1.0)
            };
            out[2] = powt(p[3], t);
            out[3] = if t == 0.0 {
                0.0
            } else {
                p[2] * t * powt(p[3], t - 1.0)
            };
        }
        _ => {
            let e = (-p[p.len() - 1] * t).exp();
            for (k, &pw) in model.powers().iter().enumerate() {
                out[k] = t.powi(pw) * e;
            }
            out[p.len() - 1] = -t * eval(model, p, t);
        }
    }
}

fn sse(model: ModelKind, p: &[f64], ts: &[f64], ys: &[f64]) -> f64 {
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| (eval(model, p, t) - y).powi(2))
        .sum()
}

/// Amplitudes minimizing the residual for fixed basis functions.
fn linear_amplitudes(basis: &DMatrix<f64>, ys: &[f64]) -> Option<Vec<f64>> {
    let y = DVector::from_column_slice(ys);
    let svd = basis.clone().svd(true, true);
    svd.solve(&y, 1e-14)
        .ok()
        .map(|x| x.iter().copied().collect())
}

fn projected(model: ModelKind, c: f64, ts: &[f64], ys: &[f64]) -> Option<(Vec<f64>, f64)> {
    let pw = model.powers();
    let basis = DMatrix::from_fn(ts.len(), pw.len(), |i, k| {
        ts[i].powi(pw[k]) * (-c * ts[i]).exp()
    });
    let mut p = linear_amplitudes(&basis, ys)?;
    p.push(c);
    let e = sse(model, &p, ts, ys);
    e.is_finite().then_some((p, e))
}

fn log_space_start(model: ModelKind, ts: &[f64], ys: &[f64]) -> Option<Vec<f64>> {
    let k = match model {
        ModelKind::PureExp => 0,
        ModelKind::LinearExp => 1,
        _ => return None,
    };
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, _)| k == 0 || **t > 0.0)
        .map(|(&t, &y)| (t, y))
        .collect();
    let sign = pts.first()?.1.signum();
    if pts.len() < 2 || pts.iter().any(|&(_, y)| y == 0.0 || y.signum() != sign) {
        return None;
    }
    let n = pts.len() as f64;
    let (xs, ls): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .map(|&(t, y)| (t, (y.abs() / t.powi(k)).ln()))
        .unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let ml = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = xs
        .iter()
        .zip(&ls)
        .map(|(x, l)| (x - mx) * (l - ml))
        .sum::<f64>()
        / sxx;
    let intercept = ml - slope * mx;
    Some(vec![sign * intercept.exp(), -slope])
}

fn single_rate_start(model: ModelKind, ts: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |cand: Option<(Vec<f64>, f64)>| {
        if let Some((p, e)) = cand {
            if best.as_ref().is_none_or(|(_, b)| e < *b) {
                best = Some((p, e));
            }
        }
    };
    for k in 0..=700 {
        let c = -1.0 + 0.01 * k as f64;
        consider(projected(model, c, ts, ys));
    }
    if let Some(p) = log_space_start(model, ts, ys) {
        let e = sse(model, &p, ts, ys);
        consider(e.is_finite().then_some((p.clone(), e)));
        consider(projected(model, p[1], ts, ys));
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| Error::FitFailed(format!("{}: no finite starting point", model.name())))
}

/// Prony estimate of two real modes, amplitudes solved linearly.
fn two_mode_start(ts: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = ys.len();
    let a = DMatrix::from_fn(n - 2, 2, |i, k| ys[i + 1 - k]);
    let b = &ys[2..];
    let coef = linear_amplitudes(&a, b).unwrap_or_else(|| vec![0.5, 0.0]);
    let (p1, p0) = (coef[0], coef[1]);
    let disc = p1 * p1 + 4.0 * p0;
    let (l1, l2) = if disc >= 0.0 {
        ((p1 + disc.sqrt()) / 2.0, (p1 - disc.sqrt()) / 2.0)
    } else {
        let m = (-p0).sqrt();
        (m, -m)
    };
    let l2 = if (l1 - l2).abs() < 1e-6 { l2 * 0.9 } else { l2 };
    let basis = DMatrix::from_fn(n, 2, |i, k| powt(if k == 0 { l1 } else { l2 }, ts[i]));
    let amps = linear_amplitudes(&basis, ys)
        .ok_or_else(|| Error::FitFailed("two_mode: singular mode basis".into()))?;
    Ok(vec![amps[0], l1, amps[1], l2])
}

struct Lm {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

const EXACT_FIT: f64 = 1e-26;

fn levenberg_marquardt(model: ModelKind, start: Vec<f64>, ts: &[f64], ys: &[f64]) -> Lm {
    let np = start.len();
    let mut p = start;
    let mut cost = sse(model, &p, ts, ys);
    let scale: f64 = ys.iter().map(|y| y * y).sum();
    let mut mu = 1e-3;
    let mut g = vec![0.0; np];
    for it in 0..MAX_ITER {
        if cost <= EXACT_FIT * scale {
            return Lm {
                params: p,
                cost,
                iterations: it,
                converged: true,
            };
        }
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for (&t, &y) in ts.iter().zip(ys) {
            grad(model, &p, t, &mut g);
            let r = eval(model, &p, t) - y;
            for i in 0..np {
                jtr[i] += g[i] * r;
                for j in 0..np {
                    jtj[(i, j)] += g[i] * g[j];
                }
            }
        }
        // Scale-free stationarity test: gradient measured against column norm and residual.
        let stationary = (0..np)
            .all(|i| jtr[i].abs() <= 1e-11 * (jtj[(i, i)] * cost).sqrt() || jtj[(i, i)] == 0.0);
        if stationary {
            return Lm {
                params: p,
                cost,
                iterations: it,
                converged: true,
            };
        }
        let dmax = (0..np).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12 * dmax);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tc = sse(model, &trial, ts, ys);
            if tc.is_finite() && tc < cost {
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, x)| s.abs() <= 1e-13 * (1.0 + x.abs()));
                p = trial;
                cost = tc;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if small_step {
                    return Lm {
                        params: p,
                        cost,
                        iterations: it + 1,
                        converged: true,
                    };
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            // No descent direction left at working precision: a stationary point.
            return Lm {
                params: p,
                cost,
                iterations: it + 1,
                converged: true,
            };
        }
    }
    // Exact data can leave LM creeping at round-off level without meeting the step tests.
    let converged = cost <= 1e-24 * scale;
    Lm {
        params: p,
        cost,
        iterations: MAX_ITER,
        converged,
    }
}

pub fn fit_decay(series: &CorrelationSeries, model: ModelKind) -> Result<FitResult> {
    let ts: Vec<f64> = series.times.iter().map(|&t| t as f64).collect();
    let ys = &series.values;
    let need = 2 * model.free_params();
    if ys.len() < need {
        return Err(Error::InvalidInput(format!(
            "{} needs at least {need} points, series has {}",
            model.name(),
            ys.len()
        )));
    }
    if ys.iter().all(|&y| y == 0.0) {
        return Err(Error::InvalidInput(
            "cannot fit an identically zero series".into(),
        ));
    }
    let start = match model {
        ModelKind::TwoMode => two_mode_start(&ts, ys)?,
        _ => single_rate_start(model, &ts, ys)?,
    };
    let lm = levenberg_marquardt(model, start, &ts, ys);
    if !lm.converged || !lm.cost.is_finite() {
        return Err(Error::FitFailed(format!(
            "{}: no convergence after {} iterations (sse {:.3e}, params {:?})",
            model.name(),
            lm.iterations,
            lm.cost,
            lm.params
        )));
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - lm.cost / ss_tot
    } else if lm.cost == 0.0 {
        1.0
    } else {
        0.0
    };
    let params = match model {
        ModelKind::TwoMode => lm.params,
        _ => {
            let mut p = lm.params;
            let c = p.pop().expect("rate parameter");
            p.extend([std::f64::consts::E, c]);
            p
        }
    };
    Ok(FitResult {
        model,
        params,
        residual_rms: (lm.cost / n).sqrt(),
        r_squared,
        iterations: lm.iterations,
    })
}
