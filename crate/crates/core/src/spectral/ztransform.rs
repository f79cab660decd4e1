//! Unilateral Z-transform `Z[C](z) = sum_{t>=0} C(t) z^{-t}` of correlation
//! series, closed forms for the EP families, pole structure and Fourier profiles
//! `f(w) = Z[C](exp(-2iw))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CorrelationSeries;
use crate::error::{Error, Result};
use crate::families::{Family, FamilyDerived};

/// Minimum distance from a pole at which closed forms are evaluated.
pub const POLE_TOL: f64 = 1e-12;
/// Cap for `log10 |Z|` in rendered output.
pub const LOG10_CAP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
    pub truncation: u32,
    /// Per point: geometric tail estimate plus a summation round-off allowance.
    pub tail_bounds: Vec<f64>,
    /// Grid points dropped for sitting on a declared pole.
    pub excluded: Vec<Complex64>,
}

impl ZGrid {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_z,im_z,re_val,im_val,tail_bound\n");
        for ((z, v), b) in self.points.iter().zip(&self.values).zip(&self.tail_bounds) {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?}\n",
                z.re, z.im, v.re, v.im, b
            ));
        }
        s
    }
}

/// Points on a circle of radius `radius`, offset by half a step so none sits on the real axis.
pub fn circle_grid(radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            Complex64::from_polar(radius, th)
        })
        .collect()
}

fn grid_spacing(grid: &[Complex64]) -> f64 {
    let s = grid
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if s.is_finite() {
        s
    } else {
        POLE_TOL
    }
}

/// Decay-rate estimate of the series envelope from the later half of the samples.
fn envelope_rate(values: &[f64]) -> (f64, f64) {
    let k = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if k == 0.0 || values.len() < 2 {
        return (0.0, k);
    }
    let n = values.len() - 1;
    let rate = (n / 2..=n)
        .filter(|&t| t > 0)
        .map(|t| (values[t].abs() / k).powf(1.0 / t as f64))
        .fold(0.0, f64::max);
    (rate, k)
}

/// Partial sums up to `t_max` on `grid`, skipping points within one grid step of `poles`.
pub fn z_numeric(
    series: &CorrelationSeries,
    grid: &[Complex64],
    t_max: u32,
    poles: &[Complex64],
) -> Result<ZGrid> {
    if series.times.first() != Some(&0) {
        return Err(Error::InvalidInput(
            "Z-transform needs a series starting at t = 0".into(),
        ));
    }
    if series
        .times
        .iter()
        .enumerate()
        .any(|(i, &t)| t as usize != i)
    {
        return Err(Error::InvalidInput(
            "Z-transform needs consecutive times".into(),
        ));
    }
    let last = (t_max as usize).min(series.len() - 1);
    let values = &series.values[..=last];
    let (rate, k) = envelope_rate(values);
    let spacing = grid_spacing(grid);
    let mut out = ZGrid {
        points: Vec::new(),
        values: Vec::new(),
        truncation: last as u32,
        tail_bounds: Vec::new(),
        excluded: Vec::new(),
    };
    for &z in grid {
        if poles.iter().any(|p| (z - p).norm() < spacing) {
            out.excluded.push(z);
            continue;
        }
        let inv = z.inv();
        let mut pw = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for &c in values {
            sum += pw * c;
            abs_sum += (pw * c).norm();
            pw *= inv;
        }
        let q = rate / z.norm();
        let tail = if q >= 1.0 {
            f64::INFINITY
        } else {
            k * q.powi(last as i32 + 1) / (1.0 - q)
        };
        let rounding = 8.0 * (last as f64 + 1.0) * f64::EPSILON * abs_sum;
        out.points.push(z);
        out.values.push(sum);
        out.tail_bounds.push(tail + rounding);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub location: Complex64,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub family: Family,
    pub delta: f64,
    pub poles: Vec<Pole>,
}

impl PoleReport {
    pub fn count(&self) -> usize {
        self.poles.len()
    }

    pub fn real_count(&self) -> usize {
        self.poles.iter().filter(|p| p.location.im == 0.0).count()
    }

    pub fn max_order(&self) -> u32 {
        self.poles.iter().map(|p| p.order).max().unwrap_or(0)
    }

    pub fn locations(&self) -> Vec<Complex64> {
        self.poles.iter().map(|p| p.location).collect()
    }

    /// Largest pole modulus; the transform converges outside this radius.
    pub fn spectral_radius(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| p.location.norm())
            .fold(0.0, f64::max)
    }
}

/// Pole structure of `Z[C^{xz}]`, read off the closed forms.
pub fn pole_report(d: &FamilyDerived) -> PoleReport {
    let c = |x: f64| Complex64::new(x, 0.0);
    let poles = match d {
        FamilyDerived::Ep2(e) => match &e.spectrum {
            None => vec![Pole {
                location: c(e.r1 * e.r1),
                order: 2,
            }],
            Some(s) => s.e[..2]
                .iter()
                .map(|x| Pole {
                    location: x * x,
                    order: 1,
                })
                .collect(),
        },
        FamilyDerived::Ep3(e) => match &e.detuned {
            None => vec![Pole {
                location: c(e.r * e.r),
                order: 3,
            }],
            Some(s) => s.e[..3]
                .iter()
                .map(|x| Pole {
                    location: x * x,
                    order: 1,
                })
                .collect(),
        },
    };
    PoleReport {
        family: d.family(),
        delta: d.delta(),
        poles,
    }
}

/// Exact value of `Z[C^{xz}](z)`.
pub fn z_closed(d: &FamilyDerived, z: Complex64) -> Result<Complex64> {
    for p in pole_report(d).poles {
        let dist = (z - p.location).norm();
        if dist <= POLE_TOL {
            return Err(Error::PoleProximity {
                z,
                pole: p.location,
                distance: dist,
            });
        }
    }
    let one = |x: Complex64| (z - x).inv();
    Ok(match d {
        FamilyDerived::Ep2(e) => match &e.spectrum {
            None => {
                let p = e.r1 * e.r1;
                z * (2.0 * e.l * e.r1) / ((z - p) * (z - p))
            }
            Some(s) => {
                let (e1, e2) = (s.e[0] * s.e[0], s.e[1] * s.e[1]);
                z * s.l_prime / s.delta_cap * (one(e1) - one(e2))
            }
        },
        FamilyDerived::Ep3(e) => match &e.detuned {
            None => {
                let p = e.r * e.r;
                let w = z - p;
                z * (2.0 * e.l2 * e.r) / (w * w) + z * (z + 3.0 * p) * (e.l1 * e.l1) / (w * w * w)
            }
            Some(s) => {
                z * (0..3)
                    .map(|i| s.a[i] * one(s.e[i] * s.e[i]))
                    .sum::<Complex64>()
            }
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierProfile {
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub amplitudes: Vec<f64>,
}

impl FourierProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,re_f,im_f,abs_f,log10_abs_f\n");
        for ((w, v), a) in self.omegas.iter().zip(&self.values).zip(&self.amplitudes) {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?}\n",
                w,
                v.re,
                v.im,
                a,
                capped_log10(*a)
            ));
        }
        s
    }
}

/// `n` equally spaced frequencies on `[0, pi)`.
pub fn default_omegas(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}

/// `log10 |v|`, capped at [`LOG10_CAP`] so divergences stay finite in tables.
pub fn capped_log10(abs: f64) -> f64 {
    if abs == 0.0 {
        -LOG10_CAP
    } else {
        abs.log10().clamp(-LOG10_CAP, LOG10_CAP)
    }
}

pub fn fourier_point(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * omega)
}

/// `f(w) = Z[C^{xz}](exp(-2iw))`; requires every decay mode inside the unit circle.
pub fn dft_profile(d: &FamilyDerived, omegas: &[f64]) -> Result<FourierProfile> {
    let rho = pole_report(d).spectral_radius();
    if rho >= 1.0 {
        return Err(Error::NonConvergent(format!(
            "pole of modulus {rho} on or outside the unit circle"
        )));
    }
    let values = omegas
        .iter()
        .map(|&w| z_closed(d, fourier_point(w)))
        .collect::<Result<Vec<_>>>()?;
    let amplitudes = values.iter().map(|v| v.norm()).collect();
    Ok(FourierProfile {
        omegas: omegas.to_vec(),
        values,
        amplitudes,
    })
}
