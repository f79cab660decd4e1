//! Exact evolution of a brickwork ring of `2L` qubits, infinite-temperature
//! correlators, and the kicked-XXZ Floquet period.
//!
//! Sites are qubits `0..2L`; a half-integer site label `x` maps to
//! qubit `2x mod 2L`. The odd layer couples `(0,1), (2,3), ...`, the even layer
//! `(1,2), ..., (2L-1, 0)`; one brickwork step applies the odd layer first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Family, FamilyDerived};
use crate::gates::{build_v, ry, rz, Gate2Q};
use crate::linalg::{CMat, PauliIndex};
use crate::transfer::Direction;

pub const MAX_HALF_SITES: usize = 7;
/// Bound on `|D|` used when validating series.
pub const VALUE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSpec {
    half_sites: usize,
}

impl RingSpec {
    pub fn new(half_sites: usize) -> Result<Self> {
        if (1..=MAX_HALF_SITES).contains(&half_sites) {
            Ok(RingSpec { half_sites })
        } else {
            Err(Error::RingTooLarge(half_sites))
        }
    }

    pub fn half_sites(&self) -> usize {
        self.half_sites
    }

    pub fn qubits(&self) -> usize {
        2 * self.half_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    /// Light-cone edges do not wrap onto each other for `2t <= L`.
    pub fn wrap_free(&self, t: u32) -> bool {
        2 * t as usize <= self.half_sites
    }

    /// Qubit index of a half-integer site label.
    pub fn qubit_of_label(&self, x: f64) -> Result<usize> {
        let twice = 2.0 * x;
        if (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "site label {x} is not a multiple of 1/2"
            )));
        }
        Ok((twice.round() as i64).rem_euclid(self.qubits() as i64) as usize)
    }

    /// Site reached from `y` after `t` steps along an edge.
    pub fn edge_site(&self, y: usize, t: u32, direction: Direction) -> usize {
        let n = self.qubits() as i64;
        let shift = 2 * t as i64;
        let x = match direction {
            Direction::Plus => y as i64 + shift,
            Direction::Minus => y as i64 - shift,
        };
        x.rem_euclid(n) as usize
    }

    fn check_site(&self, q: usize) -> Result<()> {
        if q < self.qubits() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                site: q,
                qubits: self.qubits(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalOp {
    One {
        q: usize,
        g: CMat,
    },
    /// `g` acts on `|q_a q_b>` with `q_a` as the left factor.
    Two {
        a: usize,
        b: usize,
        g: CMat,
    },
}

/// A sequence of local gates in time order (first entry applied first).
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredCircuit {
    qubits: usize,
    ops: Vec<LocalOp>,
}

/// Which bond layer a two-qubit layer uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Odd,
    Even,
}

impl LayeredCircuit {
    pub fn new(qubits: usize) -> Self {
        LayeredCircuit {
            qubits,
            ops: Vec::new(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn ops(&self) -> &[LocalOp] {
        &self.ops
    }

    pub fn push(&mut self, op: LocalOp) -> Result<()> {
        match &op {
            LocalOp::One { q, g } => {
                if *q >= self.qubits || g.rows() != 2 || g.cols() != 2 {
                    return Err(Error::InvalidInput("bad single-qubit op".into()));
                }
            }
            LocalOp::Two { a, b, g } => {
                if *a >= self.qubits
                    || *b >= self.qubits
                    || a == b
                    || g.rows() != 4
                    || g.cols() != 4
                {
                    return Err(Error::InvalidInput("bad two-qubit op".into()));
                }
            }
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn push_layer(&mut self, layer: Layer, g: &CMat) -> Result<()> {
        let n = self.qubits;
        let start = match layer {
            Layer::Odd => 0,
            Layer::Even => 1,
        };
        for a in (start..n).step_by(2) {
            self.push(LocalOp::Two {
                a,
                b: (a + 1) % n,
                g: g.clone(),
            })?;
        }
        Ok(())
    }

    pub fn push_kick(&mut self, g: &CMat) -> Result<()> {
        for q in 0..self.qubits {
            self.push(LocalOp::One { q, g: g.clone() })?;
        }
        Ok(())
    }

    /// `w <- C w` where `C` is the circuit unitary.
    pub fn apply_left(&self, w: &mut CMat) -> Result<()> {
        let dim = 1usize << self.qubits;
        if w.rows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "circuit on {} qubits applied to {} rows",
                self.qubits,
                w.rows()
            )));
        }
        for op in &self.ops {
            match op {
                LocalOp::One { q, g } => apply_one(w, self.qubits, *q, g),
                LocalOp::Two { a, b, g } => apply_two(w, self.qubits, *a, *b, g),
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> CMat {
        let mut w = CMat::identity(1 << self.qubits);
        self.apply_left(&mut w).expect("matching dimension");
        w
    }
}

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn apply_one(w: &mut CMat, n: usize, q: usize, g: &CMat) {
    let cols = w.cols();
    let m = bit(n, q);
    let g = g.as_slice();
    let data = w.as_mut_slice();
    for r0 in 0..(1usize << n) {
        if r0 & m != 0 {
            continue;
        }
        let r1 = r0 | m;
        for c in 0..cols {
            let (v0, v1) = (data[r0 * cols + c], data[r1 * cols + c]);
            data[r0 * cols + c] = g[0] * v0 + g[1] * v1;
            data[r1 * cols + c] = g[2] * v0 + g[3] * v1;
        }
    }
}

fn apply_two(w: &mut CMat, n: usize, a: usize, b: usize, g: &CMat) {
    let cols = w.cols();
    let (ma, mb) = (bit(n, a), bit(n, b));
    let g = g.as_slice();
    let data = w.as_mut_slice();
    let mut v = [Complex64::new(0.0, 0.0); 4];
    for base in 0..(1usize << n) {
        if base & (ma | mb) != 0 {
            continue;
        }
        let idx = [base, base | mb, base | ma, base | ma | mb];
        for c in 0..cols {
            for k in 0..4 {
                v[k] = data[idx[k] * cols + c];
            }
            for k in 0..4 {
                let row = &g[4 * k..4 * k + 4];
                data[idx[k] * cols + c] =
                    row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }
}

/// One brickwork step: odd layer, then even layer.
pub fn brickwork_circuit(gate: &Gate2Q, ring: RingSpec) -> LayeredCircuit {
    let mut c = LayeredCircuit::new(ring.qubits());
    c.push_layer(Layer::Odd, gate.matrix())
        .expect("valid layer");
    c.push_layer(Layer::Even, gate.matrix())
        .expect("valid layer");
    c
}

/// `U_e U_o` on `2L` qubits with periodic wrap.
pub fn brickwork_unitary(gate: &Gate2Q, ring: RingSpec) -> Result<CMat> {
    if gate.matrix().unitarity_residual() > 1e-10 {
        return Err(Error::NotUnitary(gate.matrix().unitarity_residual()));
    }
    Ok(brickwork_circuit(gate, ring).to_dense())
}

/// A single-site Pauli as a signed permutation: row `i` has its entry in column `i ^ flip`.
#[derive(Debug, Clone, Copy)]
struct Monomial {
    flip: usize,
    kind: PauliIndex,
    mask: usize,
}

impl Monomial {
    fn new(p: PauliIndex, q: usize, n: usize) -> Self {
        let mask = bit(n, q);
        let flip = if p == PauliIndex::X || p == PauliIndex::Y {
            mask
        } else {
            0
        };
        Monomial {
            flip,
            kind: p,
            mask,
        }
    }

    fn phase(&self, row: usize) -> Complex64 {
        let set = row & self.mask != 0;
        match self.kind {
            PauliIndex::X | PauliIndex::I => Complex64::new(1.0, 0.0),
            PauliIndex::Y => Complex64::new(0.0, if set { 1.0 } else { -1.0 }),
            _ => Complex64::new(if set { -1.0 } else { 1.0 }, 0.0),
        }
    }
}

/// One correlator value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeValue {
    pub value: f64,
    pub imag_residual: f64,
    /// False when the light cone has wrapped around the ring.
    pub wrap_free: bool,
}

/// `D^{ab}(x, y, t) = 2^{-2L} tr[s^a_x W^dag s^b_y W]` for the current `W = step^t`.
fn trace_corr(
    w: &CMat,
    n: usize,
    alpha: PauliIndex,
    x: usize,
    beta: PauliIndex,
    y: usize,
) -> Complex64 {
    let dim = 1usize << n;
    let a = Monomial::new(alpha, x, n);
    let b = Monomial::new(beta, y, n);
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..dim {
        let wm = w.row(m);
        let wb = w.row(m ^ b.flip);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            s += a.phase(i) * wm[i ^ a.flip].conj() * wb[i];
        }
        total += b.phase(m) * s;
    }
    total / dim as f64
}

/// All `D^{ab}(x, y, t)` for fixed `(b, y)`: `out[x][a]`.
fn trace_profile(w: &CMat, n: usize, beta: PauliIndex, y: usize) -> Vec<[Complex64; 4]> {
    let dim = 1usize << n;
    let b = Monomial::new(beta, y, n);
    let zero = Complex64::new(0.0, 0.0);
    // acc[0][i] = X[i, i], acc[q+1][i] = X[i ^ bit(q), i] with X = W^dag B W.
    let mut acc = vec![vec![zero; dim]; n + 1];
    for m in 0..dim {
        let wm = w.row(m);
        let wb = w.row(m ^ b.flip);
        let pb = b.phase(m);
        for (k, row) in acc.iter_mut().enumerate() {
            let flip = if k == 0 { 0 } else { bit(n, k - 1) };
            for i in 0..dim {
                row[i] += pb * wm[i ^ flip].conj() * wb[i];
            }
        }
    }
    let norm = 1.0 / dim as f64;
    (0..n)
        .map(|x| {
            let mut out = [zero; 4];
            for p in PauliIndex::ALL {
                let a = Monomial::new(p, x, n);
                let row = if a.flip == 0 { &acc[0] } else { &acc[x + 1] };
                let s: Complex64 = (0..dim).map(|i| a.phase(i) * row[i]).sum();
                out[p.index()] = s * norm;
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone)]
enum Stepper {
    Dense(CMat),
    Layered(LayeredCircuit),
}

/// Holds `W = step^t` and advances it one period at a time.
#[derive(Debug, Clone)]
pub struct Evolution {
    ring: RingSpec,
    step: Stepper,
    w: CMat,
    t: u32,
}

impl Evolution {
    pub fn from_circuit(step: LayeredCircuit, ring: RingSpec) -> Result<Self> {
        if step.qubits() != ring.qubits() {
            return Err(Error::DimensionMismatch(
                "circuit and ring sizes differ".into(),
            ));
        }
        Ok(Evolution {
            ring,
            step: Stepper::Layered(step),
            w: CMat::identity(ring.dim()),
            t: 0,
        })
    }

    pub fn from_dense(step: CMat, ring: RingSpec) -> Result<Self> {
        if step.rows() != ring.dim() || !step.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "step unitary is {}x{}, ring needs {}",
                step.rows(),
                step.cols(),
                ring.dim()
            )));
        }
        Ok(Evolution {
            ring,
            step: Stepper::Dense(step),
            w: CMat::identity(ring.dim()),
            t: 0,
        })
    }

    pub fn time(&self) -> u32 {
        self.t
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn propagator(&self) -> &CMat {
        &self.w
    }

    pub fn advance(&mut self) -> Result<()> {
        match &self.step {
            Stepper::Dense(u) => self.w = u.matmul(&self.w)?,
            Stepper::Layered(c) => c.apply_left(&mut self.w)?,
        }
        self.t += 1;
        Ok(())
    }

    pub fn advance_to(&mut self, t: u32) -> Result<()> {
        if t < self.t {
            return Err(Error::InvalidInput(format!(
                "cannot rewind evolution from t = {} to {t}",
                self.t
            )));
        }
        while self.t < t {
            self.advance()?;
        }
        Ok(())
    }

    pub fn corr(
        &self,
        alpha: PauliIndex,
        x: usize,
        beta: PauliIndex,
        y: usize,
    ) -> Result<SpaceTimeValue> {
        self.ring.check_site(x)?;
        self.ring.check_site(y)?;
        let z = trace_corr(&self.w, self.ring.qubits(), alpha, x, beta, y);
        Ok(SpaceTimeValue {
            value: z.re,
            imag_residual: z.im.abs(),
            wrap_free: self.ring.wrap_free(self.t),
        })
    }

    /// `out[x][a] = D^{ab}(x, y, t)` for every site `x` and Pauli `a`.
    pub fn profile(&self, beta: PauliIndex, y: usize) -> Result<Vec<[SpaceTimeValue; 4]>> {
        self.ring.check_site(y)?;
        let wrap_free = self.ring.wrap_free(self.t);
        Ok(trace_profile(&self.w, self.ring.qubits(), beta, y)
            .into_iter()
            .map(|row| {
                row.map(|z| SpaceTimeValue {
                    value: z.re,
                    imag_residual: z.im.abs(),
                    wrap_free,
                })
            })
            .collect())
    }
}

/// Infinite-temperature correlator for an explicit dense step unitary (`W = u_step^t`).
pub fn spatiotemporal_corr(
    u_step: &CMat,
    ring: RingSpec,
    alpha: PauliIndex,
    beta: PauliIndex,
    x: usize,
    y: usize,
    t: u32,
) -> Result<SpaceTimeValue> {
    ring.check_site(x)?;
    ring.check_site(y)?;
    if u_step.rows() != ring.dim() || !u_step.is_square() {
        return Err(Error::DimensionMismatch(
            "step unitary does not match ring".into(),
        ));
    }
    let w = u_step.pow(t)?;
    let z = trace_corr(&w, ring.qubits(), alpha, x, beta, y);
    Ok(SpaceTimeValue {
        value: z.re,
        imag_residual: z.im.abs(),
        wrap_free: ring.wrap_free(t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloquetFamily {
    Jordan2,
    Jordan3,
}

/// Kick and coupling angles; `psi` and `varphi` are unused for `Jordan2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetAngles {
    pub psi: f64,
    pub phi_big: f64,
    pub phi_small: f64,
    pub varphi: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetSpec {
    pub family: FloquetFamily,
    pub angles: FloquetAngles,
    pub ring: RingSpec,
    /// When false all single-site kicks are dropped, leaving the bare XXZ layers.
    pub kicks: bool,
}

impl FloquetSpec {
    pub fn from_derived(d: &FamilyDerived, ring: RingSpec) -> Self {
        let (family, angles) = match d {
            FamilyDerived::Ep2(e) => (
                FloquetFamily::Jordan2,
                FloquetAngles {
                    psi: 0.0,
                    phi_big: e.phi_big,
                    phi_small: e.phi_small,
                    varphi: 0.0,
                    j: e.j,
                },
            ),
            FamilyDerived::Ep3(e) => (
                FloquetFamily::Jordan3,
                FloquetAngles {
                    psi: e.psi,
                    phi_big: e.phi_big,
                    phi_small: e.phi_small,
                    varphi: e.varphi,
                    j: e.j,
                },
            ),
        };
        FloquetSpec {
            family,
            angles,
            ring,
            kicks: true,
        }
    }

    pub fn source_family(&self) -> Family {
        match self.family {
            FloquetFamily::Jordan2 => Family::Ep2,
            FloquetFamily::Jordan3 => Family::Ep3,
        }
    }

    /// Start of the `M+` light-cone edge: the even layer runs first here, so
    /// operators on even sites move right.
    pub fn plus_edge_origin(&self) -> usize {
        0
    }

    /// One period in time order. Jordan2: `U2 Ue U3 U2 Uo U3`; Jordan3:
    /// `U1 U2 Ue U3 U4 U1 U2 Uo U3 U4`, each read left to right as applied.
    pub fn period_circuit(&self) -> LayeredCircuit {
        let a = &self.angles;
        let n = self.ring.qubits();
        let v = build_v(a.j).into_matrix();
        let kick = |g: CMat, c: &mut LayeredCircuit| {
            if self.kicks {
                c.push_kick(&g).expect("valid kick");
            }
        };
        let mut c = LayeredCircuit::new(n);
        for layer in [Layer::Even, Layer::Odd] {
            if self.family == FloquetFamily::Jordan3 {
                kick(rz(a.varphi), &mut c);
            }
            kick(ry(a.phi_small), &mut c);
            c.push_layer(layer, &v).expect("valid layer");
            kick(ry(a.phi_big), &mut c);
            if self.family == FloquetFamily::Jordan3 {
                kick(rz(a.psi), &mut c);
            }
        }
        c
    }
}

/// Period unitary `U_T` of the kicked XXZ chain.
pub fn kicked_xxz_period(spec: &FloquetSpec) -> Result<CMat> {
    Ok(spec.period_circuit().to_dense())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesSource {
    Analytic,
    Circuit,
    Floquet,
}

/// Which `(x, y)` pair a series samples at each `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SiteProbe {
    Fixed {
        x: usize,
        y: usize,
    },
    /// `x = y +- 2t`.
    Edge {
        y: usize,
        direction: Direction,
    },
}

impl SiteProbe {
    pub fn sites(&self, ring: RingSpec, t: u32) -> (usize, usize) {
        match *self {
            SiteProbe::Fixed { x, y } => (x, y),
            SiteProbe::Edge { y, direction } => (ring.edge_site(y, t, direction), y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub alpha: PauliIndex,
    pub beta: PauliIndex,
    pub times: Vec<u32>,
    pub values: Vec<f64>,
    pub source: SeriesSource,
    pub family: Option<Family>,
    pub delta: Option<f64>,
    /// Last `t` before the light cone wraps, for circuit-derived series.
    pub wrap_free_until: Option<u32>,
}

impl CorrelationSeries {
    pub fn new(
        alpha: PauliIndex,
        beta: PauliIndex,
        times: Vec<u32>,
        values: Vec<f64>,
        source: SeriesSource,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(
                "times and values differ in length".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || v.abs() > 1.0 + VALUE_SLACK)
        {
            return Err(Error::InvalidInput(format!(
                "correlator value {v} exceeds 1"
            )));
        }
        Ok(CorrelationSeries {
            alpha,
            beta,
            times,
            values,
            source,
            family: None,
            delta: None,
            wrap_free_until: None,
        })
    }

    /// Series from a closure over `t = 0..=t_max`.
    pub fn from_fn(
        alpha: PauliIndex,
        beta: PauliIndex,
        t_max: u32,
        source: SeriesSource,
        f: impl FnMut(u32) -> Result<f64>,
    ) -> Result<Self> {
        let times: Vec<u32> = (0..=t_max).collect();
        let values = times.iter().copied().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(alpha, beta, times, values, source)
    }

    pub fn with_family(mut self, family: Family, delta: f64) -> Self {
        self.family = Some(family);
        self.delta = Some(delta);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{t},{v:?}\n"));
        }
        s
    }
}

/// `C^{ab}` of the kicked chain, sampled along `probe` for `t = 0..=t_max`.
pub fn floquet_corr(
    spec: &FloquetSpec,
    alpha: PauliIndex,
    beta: PauliIndex,
    probe: SiteProbe,
    t_max: u32,
) -> Result<CorrelationSeries> {
    let ring = spec.ring;
    let mut evo = Evolution::from_circuit(spec.period_circuit(), ring)?;
    let mut values = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        evo.advance_to(t)?;
        let (x, y) = probe.sites(ring, t);
        values.push(evo.corr(alpha, x, beta, y)?.value);
    }
    let mut s = CorrelationSeries::new(
        alpha,
        beta,
        (0..=t_max).collect(),
        values,
        SeriesSource::Floquet,
    )?;
    s.family = Some(spec.source_family());
    s.delta = Some(0.0);
    s.wrap_free_until = Some((ring.half_sites() / 2) as u32);
    Ok(s)
}
