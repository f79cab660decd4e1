//! Gates whose `M+` carries a 2x2 Jordan block, and their detuned variants.
//!
//! `U = (ry(Phi) (x) ry(Phi)) V[J] (ry(phi) (x) ry(phi))` with
//! `phi = Phi - pi/4 - delta` and `J = asin(tan^2 2Phi) / 2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_gate, csqrt, EXCLUSION_TOL, SELF_CHECK_TOL, WINDOW_SLACK};
use crate::error::{Error, Result};
use crate::gates::{assemble, ry, Gate2Q, GateParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ep2Config {
    pub phi_big: f64,
    pub delta: f64,
}

impl Ep2Config {
    pub fn new(phi_big: f64, delta: f64) -> Self {
        Ep2Config { phi_big, delta }
    }

    /// Admissibility of `Phi` and of the derived `phi`.
    pub fn validate(&self) -> Result<()> {
        let (p, d) = (self.phi_big, self.delta);
        if !p.is_finite() || !d.is_finite() {
            return Err(Error::InvalidInput("angles must be finite".into()));
        }
        let k = (p / FRAC_PI_4).round();
        if (p - k * FRAC_PI_4).abs() < EXCLUSION_TOL {
            return Err(Error::Constraint(format!(
                "Phi != n*pi/4 is required (Phi = {p} is {k}*pi/4 within {EXCLUSION_TOL:e})"
            )));
        }
        let m = p.rem_euclid(FRAC_PI_2);
        if m > FRAC_PI_8 + WINDOW_SLACK && m < 3.0 * FRAC_PI_8 - WINDOW_SLACK {
            return Err(Error::Constraint(format!(
                "Phi mod pi/2 must lie in (0, pi/8] or [3pi/8, pi/2) so that |tan 2Phi| <= 1 \
                 (Phi mod pi/2 = {m})"
            )));
        }
        let phi = p - FRAC_PI_4 - d;
        let (cp, cs) = ((2.0 * p).cos().abs(), (2.0 * phi).cos().abs());
        if cp + WINDOW_SLACK < cs {
            return Err(Error::Constraint(format!(
                "|cos 2Phi| >= |cos 2phi| is required (|cos 2Phi| = {cp}, |cos 2phi| = {cs})"
            )));
        }
        Ok(())
    }
}

/// Spectrum of the detuned matrix; `e[3] = 1` is the identity channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ep2Spectrum {
    pub e: [Complex64; 4],
    pub delta_cap: Complex64,
    pub l_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ep2Derived {
    pub phi_big: f64,
    pub delta: f64,
    pub phi_small: f64,
    pub j: f64,
    /// Values at the exceptional point (`delta = 0`).
    pub r1: f64,
    pub r2: f64,
    pub l: f64,
    /// Populated when `delta != 0`.
    pub spectrum: Option<Ep2Spectrum>,
    /// Closed-form `M+` at the configured detuning.
    pub matrix: [[f64; 4]; 4],
}

impl Ep2Derived {
    pub fn is_detuned(&self) -> bool {
        self.delta != 0.0
    }

    pub fn gate_params(&self) -> GateParams {
        GateParams::symmetric(ry(self.phi_big), ry(self.phi_small), self.j)
    }
}

fn closed_matrix(phi_big: f64, delta: f64, j: f64) -> [[f64; 4]; 4] {
    let c2 = (2.0 * phi_big).cos().powi(2);
    let t2 = (2.0 * phi_big).tan();
    let (s2d, c2d) = (2.0 * delta).sin_cos();
    let s4 = (4.0 * phi_big).sin();
    let l_prime = (-(4.0 * phi_big - 2.0 * delta).cos() + 0.5 * s2d * s4) / c2;
    let zz = ((4.0 * phi_big - 2.0 * delta).sin() - 0.5 * c2d * s4) / c2;
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, t2 * c2d, 0.0, l_prime],
        [0.0, 0.0, (2.0 * j).sin(), 0.0],
        [0.0, t2 * s2d, 0.0, zz],
    ]
}

pub fn solve_ep2(cfg: &Ep2Config) -> Result<Ep2Derived> {
    cfg.validate()?;
    let (p, d) = (cfg.phi_big, cfg.delta);
    let r1 = (2.0 * p).tan();
    let j = 0.5 * (r1 * r1).clamp(-1.0, 1.0).asin();
    let matrix = closed_matrix(p, d, j);
    let spectrum = (d != 0.0).then(|| {
        let c2 = (2.0 * p).cos().powi(2);
        let delta_cap = csqrt(-(2.0 * d).sin() * (8.0 * p - 2.0 * d).sin()) / c2;
        let mid = Complex64::new((4.0 * p - 2.0 * d).sin() / (2.0 * c2), 0.0);
        Ep2Spectrum {
            e: [
                mid + delta_cap * 0.5,
                mid - delta_cap * 0.5,
                Complex64::new((2.0 * j).sin(), 0.0),
                Complex64::new(1.0, 0.0),
            ],
            delta_cap,
            l_prime: matrix[1][3],
        }
    });
    let derived = Ep2Derived {
        phi_big: p,
        delta: d,
        phi_small: p - FRAC_PI_4 - d,
        j,
        r1,
        r2: (2.0 * j).sin(),
        l: r1 * r1 - 1.0,
        spectrum,
        matrix,
    };
    ep2_gate(&derived, cfg)?;
    Ok(derived)
}

/// The family gate; its `M+` is checked against the closed form.
pub fn ep2_gate(d: &Ep2Derived, cfg: &Ep2Config) -> Result<Gate2Q> {
    if d.phi_big != cfg.phi_big || d.delta != cfg.delta {
        return Err(Error::InvalidInput(
            "derived parameters do not belong to this configuration".into(),
        ));
    }
    let gate = assemble(&d.gate_params())?;
    check_gate(&gate, &d.matrix, SELF_CHECK_TOL)?;
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{jordan_structure, transfer_plus};
    use std::f64::consts::PI;

    #[test]
    fn boundary_phi_pi_over_8() {
        let d = solve_ep2(&Ep2Config::new(PI / 8.0, 0.0)).unwrap();
        assert!((d.r1 - 1.0).abs() < 1e-12);
        assert!(d.l.abs() < 1e-12);
        assert!((d.j - PI / 4.0).abs() < 1e-7);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.7854 is the rounded user input on purpose
    fn window_rejections_name_the_inequality() {
        let e = solve_ep2(&Ep2Config::new(PI / 4.0, 0.0)).unwrap_err();
        assert!(e.to_string().contains("n*pi/4"), "{e}");
        let e = solve_ep2(&Ep2Config::new(0.7854, 0.0)).unwrap_err();
        assert!(e.to_string().contains("n*pi/4"), "{e}");
        let e = solve_ep2(&Ep2Config::new(PI / 4.0 - 0.1, 0.0)).unwrap_err();
        assert!(e.to_string().contains("tan 2Phi"), "{e}");
        // phi pushed outside the window by a large detuning.
        let e = solve_ep2(&Ep2Config::new(PI / 8.0, -0.05)).unwrap_err();
        assert!(e.to_string().contains("cos 2phi"), "{e}");
    }

    #[test]
    fn detuned_below_gives_ordered_real_pair() {
        let cfg = Ep2Config::new(5.0 * PI / 48.0, -0.05);
        let d = solve_ep2(&cfg).unwrap();
        let s = d.spectrum.as_ref().unwrap();
        assert!(s.delta_cap.im == 0.0 && s.delta_cap.re > 0.0);
        assert!(s.e[0].re > s.e[1].re);
        assert!((s.e[0] * s.e[1]).im.abs() < 1e-15);
        let m = transfer_plus(&ep2_gate(&d, &cfg).unwrap()).unwrap();
        let mut num = m.eigenvalues();
        num.sort_by(|a, b| b.re.total_cmp(&a.re));
        let mut want = s.e.to_vec();
        want.sort_by(|a, b| b.re.total_cmp(&a.re));
        for (a, b) in num.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10, "{num:?} vs {want:?}");
        }
    }

    #[test]
    fn detuned_above_is_diagonalizable_complex_pair() {
        let cfg = Ep2Config::new(5.0 * PI / 48.0, 0.05);
        let d = solve_ep2(&cfg).unwrap();
        let s = d.spectrum.as_ref().unwrap();
        assert!(s.delta_cap.re == 0.0 && s.delta_cap.im != 0.0);
        assert!((s.e[0] - s.e[1].conj()).norm() < 1e-15);
        let m = transfer_plus(&ep2_gate(&d, &cfg).unwrap()).unwrap();
        assert!(jordan_structure(&m, 1e-8).is_diagonalizable());
    }

    #[test]
    fn self_check_grid() {
        let mut n = 0;
        for k in 1..=24 {
            let base = PI / 8.0 * k as f64 / 25.0;
            for phi in [base, base + 3.0 * PI / 8.0] {
                for delta in [-0.1, -0.01, 0.0, 0.01, 0.1] {
                    let cfg = Ep2Config::new(phi, delta);
                    if cfg.validate().is_err() {
                        continue;
                    }
                    solve_ep2(&cfg).unwrap();
                    n += 1;
                }
            }
        }
        assert!(n >= 100, "only {n} admissible points");
    }
}
