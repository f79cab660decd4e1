use std::f64::consts::PI;
use std::fmt::Write as _;

use dualep_core::circuit::brickwork_circuit;
use dualep_core::gates::random_params;
use dualep_core::spectral::{circle_grid, default_omegas, Pole};
use dualep_core::transfer::{DEFAULT_JORDAN_TOL, DUAL_UNITARY_TOL};
use dualep_core::{
    analytic_corr, assemble, classify, detuned_corr, dft_profile, fit_decay, floquet_corr,
    is_dual_unitary, jordan_structure, lightcone_corr, pole_report, transfer_minus, transfer_plus,
    z_closed, z_numeric, Complex64, CorrelationSeries, Direction, ErgodicityClass, Error,
    Evolution, Family, FamilyDerived, FitResult, FloquetSpec, FourierProfile, Gate2Q, JordanReport,
    ModelKind, PauliIndex, PoleReport, RingSpec, SeriesSource, SiteProbe, TransferMatrix, ZGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{cell, emit, json, sidecar, CliError, CliResult};
use crate::{AngleArgs, CheckArgs, CorrelateArgs, FloquetArgs, Format, SolveArgs, SpectralArgs};

/// Eigenvalues within this distance of the unit circle count as non-decaying.
const CLASSIFY_TOL: f64 = 1e-8;

fn angle(a: &AngleArgs) -> CliResult<f64> {
    match (a.phi, &a.pi_frac) {
        (Some(p), None) => Ok(p),
        (None, Some(s)) => parse_pi_frac(s).map(|f| f * PI),
        _ => Err(CliError::Usage(
            "give exactly one of --phi and --pi-frac".into(),
        )),
    }
}

fn parse_pi_frac(s: &str) -> CliResult<f64> {
    let bad = || {
        CliError::Usage(format!(
            "--pi-frac expects p/q with integers p, q > 0, got '{s}'"
        ))
    };
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: i64 = p.parse().map_err(|_| bad())?;
    let q: i64 = q.parse().map_err(|_| bad())?;
    if q <= 0 {
        return Err(bad());
    }
    Ok(p as f64 / q as f64)
}

fn solve_family(family: Family, a: &AngleArgs, delta: f64) -> CliResult<FamilyDerived> {
    Ok(FamilyDerived::solve(family, angle(a)?, delta)?)
}

// ---------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveBundle<'a> {
    derived: &'a FamilyDerived,
    gate: &'a Gate2Q,
    transfer_matrix: &'a TransferMatrix,
    eigenvalues: Vec<Complex64>,
    jordan: &'a JordanReport,
    ergodicity_class: ErgodicityClass,
}

fn solve_summary(
    d: &FamilyDerived,
    m: &TransferMatrix,
    jordan: &JordanReport,
    class: ErgodicityClass,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "family      {}", d.family());
    let _ = writeln!(s, "Phi         {:.10}", d.phi_big());
    let _ = writeln!(s, "delta       {:.10}", d.delta());
    match d {
        FamilyDerived::Ep2(e) => {
            let _ = writeln!(s, "phi         {:.10}", e.phi_small);
            let _ = writeln!(s, "J           {:.10}", e.j);
            let _ = writeln!(s, "r1 r2       {:.10} {:.10}", e.r1, e.r2);
            let _ = writeln!(s, "l           {:.10}", e.l);
        }
        FamilyDerived::Ep3(e) => {
            let _ = writeln!(s, "Psi         {:.10}", e.psi);
            let _ = writeln!(s, "phi         {:.10}", e.phi_small);
            let _ = writeln!(s, "varphi      {:.10}", e.varphi);
            let _ = writeln!(s, "J           {:.10}", e.j);
            let _ = writeln!(s, "r           {:.10}", e.r);
            let _ = writeln!(s, "l1 l2       {:.10} {:.10}", e.l1, e.l2);
        }
    }
    let _ = writeln!(s, "M+ rows");
    for row in &m.entries {
        let _ = writeln!(
            s,
            "  {:>14.10} {:>14.10} {:>14.10} {:>14.10}",
            row[0], row[1], row[2], row[3]
        );
    }
    let _ = writeln!(
        s,
        "Jordan (tol {:e}{})",
        jordan.tolerance_used,
        if jordan.ambiguous { ", ambiguous" } else { "" }
    );
    for c in &jordan.clusters {
        let _ = writeln!(
            s,
            "  lambda {:.10}{:+.10}i  mult {}  blocks {:?}",
            c.eigenvalue.re, c.eigenvalue.im, c.algebraic_mult, c.block_sizes
        );
    }
    let _ = writeln!(s, "class       {class}");
    s
}

pub fn solve(a: &SolveArgs) -> CliResult<()> {
    let d = solve_family(a.family.family, &a.family.angle, a.delta)?;
    let gate = d.gate()?;
    let m = transfer_plus(&gate)?;
    let jordan = jordan_structure(&m, DEFAULT_JORDAN_TOL);
    let class = classify(&m, CLASSIFY_TOL);
    let bundle = SolveBundle {
        derived: &d,
        gate: &gate,
        transfer_matrix: &m,
        eigenvalues: m.eigenvalues(),
        jordan: &jordan,
        ergodicity_class: class,
    };
    let body = json("solve", &bundle)?;
    let summary = solve_summary(&d, &m, &jordan, class);
    match &a.output {
        Some(p) => {
            emit(Some(p), &body)?;
            print!("{summary}");
        }
        None => {
            eprint!("{summary}");
            emit(None, &body)?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------ correlate

fn parse_channels(s: &str) -> CliResult<Vec<(PauliIndex, PauliIndex)>> {
    if s.trim().eq_ignore_ascii_case("all") {
        let mut v = Vec::new();
        for a in PauliIndex::NONTRIVIAL {
            for b in PauliIndex::NONTRIVIAL {
                v.push((a, b));
            }
        }
        return Ok(v);
    }
    s.split(',')
        .map(|c| {
            let c = c.trim();
            let mut it = c.chars();
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((
                    PauliIndex::parse(&a.to_string())?,
                    PauliIndex::parse(&b.to_string())?,
                )),
                _ => Err(CliError::Usage(format!(
                    "channel '{c}' should be two Pauli labels like xz"
                ))),
            }
        })
        .collect()
}

/// Closed-form value on the `M+` edge, if one exists for this channel.
fn closed_form(d: &FamilyDerived, a: PauliIndex, b: PauliIndex, t: u32) -> CliResult<Option<f64>> {
    let r = if !d.is_detuned() {
        analytic_corr(d, a, b, t)
    } else if (a, b) == (PauliIndex::X, PauliIndex::Z) {
        detuned_corr(d, t)
    } else {
        return Ok(None);
    };
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UnsupportedChannel(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct CorrRow {
    t: u32,
    alpha: PauliIndex,
    beta: PauliIndex,
    x: usize,
    y: usize,
    analytic: Option<f64>,
    transfer: f64,
    circuit: f64,
    abs_diff: f64,
    wrap_free: bool,
}

#[derive(Serialize)]
struct CorrTable<'a> {
    family: Family,
    phi_big: f64,
    delta: f64,
    ring_l: usize,
    direction: Direction,
    rows: &'a [CorrRow],
}

pub fn correlate(a: &CorrelateArgs) -> CliResult<()> {
    let ring = RingSpec::new(a.ring_l)?;
    if a.t_max as usize >= a.ring_l {
        return Err(CliError::Usage(format!(
            "circuit column needs 2*t_max < 2L (t_max = {}, L = {})",
            a.t_max, a.ring_l
        )));
    }
    let channels = parse_channels(&a.channels)?;
    let d = solve_family(a.family.family, &a.family.angle, a.delta)?;
    let y = ring.qubit_of_label(a.y)?;
    let gate = d.gate()?;
    // The odd layer acts first, so odd sites ride the M+ edge and even sites the M- edge.
    let direction = if y % 2 == 1 {
        Direction::Plus
    } else {
        Direction::Minus
    };
    let m = match direction {
        Direction::Plus => transfer_plus(&gate)?,
        Direction::Minus => transfer_minus(&gate)?,
    };
    let mut evo = Evolution::from_circuit(brickwork_circuit(&gate, ring), ring)?;
    let mut rows = Vec::new();
    for t in 0..=a.t_max {
        evo.advance_to(t)?;
        let x = ring.edge_site(y, t, direction);
        for &(al, be) in &channels {
            let circuit = evo.corr(al, x, be, y)?;
            let transfer = lightcone_corr(&m, al, be, t);
            let analytic = match direction {
                Direction::Plus => closed_form(&d, al, be, t)?,
                Direction::Minus => None,
            };
            rows.push(CorrRow {
                t,
                alpha: al,
                beta: be,
                x,
                y,
                analytic,
                transfer,
                circuit: circuit.value,
                abs_diff: (analytic.unwrap_or(transfer) - circuit.value).abs(),
                wrap_free: circuit.wrap_free,
            });
        }
    }
    let worst = |pred: &dyn Fn(&CorrRow) -> bool| {
        rows.iter()
            .filter(|r| pred(r))
            .map(|r| r.abs_diff)
            .fold(0.0, f64::max)
    };
    eprintln!(
        "max |reference - circuit|: {:.3e} wrap-free, {:.3e} overall",
        worst(&|r| r.wrap_free),
        worst(&|_| true)
    );
    let body = match a.format {
        Format::Csv => {
            let mut s =
                String::from("t,alpha,beta,x,y,analytic,transfer,circuit,abs_diff,wrap_free\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{:?},{:?},{:?},{}",
                    r.t,
                    r.alpha,
                    r.beta,
                    r.x,
                    r.y,
                    cell(r.analytic),
                    r.transfer,
                    r.circuit,
                    r.abs_diff,
                    r.wrap_free
                );
            }
            s
        }
        Format::Json => json(
            "correlate",
            &CorrTable {
                family: d.family(),
                phi_big: d.phi_big(),
                delta: d.delta(),
                ring_l: a.ring_l,
                direction,
                rows: &rows,
            },
        )?,
    };
    emit(a.output.as_deref(), &body)
}

// ------------------------------------------------------------- spectral

fn xz_series(d: &FamilyDerived, t_max: u32) -> CliResult<CorrelationSeries> {
    let s = CorrelationSeries::from_fn(
        PauliIndex::X,
        PauliIndex::Z,
        t_max,
        SeriesSource::Analytic,
        |t| {
            if d.is_detuned() {
                detuned_corr(d, t)
            } else {
                analytic_corr(d, PauliIndex::X, PauliIndex::Z, t)
            }
        },
    )?;
    Ok(s.with_family(d.family(), d.delta()))
}

#[derive(Serialize)]
struct SpectralBlock {
    label: &'static str,
    delta: f64,
    zgrid: ZGrid,
    closed: Vec<Complex64>,
    fourier: FourierProfile,
    #[serde(skip)]
    poles: PoleReport,
}

#[derive(Serialize)]
struct SpectralDoc<'a> {
    family: Family,
    phi_big: f64,
    blocks: &'a [SpectralBlock],
}

#[derive(Serialize)]
struct PoleEntry<'a> {
    label: &'static str,
    delta: f64,
    count: usize,
    real_count: usize,
    max_order: u32,
    poles: &'a [Pole],
}

#[derive(Serialize)]
struct PoleDoc<'a> {
    family: Family,
    phi_big: f64,
    reports: Vec<PoleEntry<'a>>,
}

pub fn spectral(a: &SpectralArgs) -> CliResult<()> {
    let mag = a.delta.abs();
    if mag == 0.0 || !mag.is_finite() {
        return Err(CliError::Usage(
            "spectral needs a nonzero finite --delta".into(),
        ));
    }
    if a.points == 0 || a.omegas == 0 || !a.radius.is_finite() || a.radius <= 0.0 {
        return Err(CliError::Usage(
            "--points, --omegas and --radius must be positive".into(),
        ));
    }
    let phi = angle(&a.family.angle)?;
    let grid = circle_grid(a.radius, a.points);
    let omegas = default_omegas(a.omegas);
    let mut blocks = Vec::new();
    for (label, delta) in [("below", -mag), ("at", 0.0), ("above", mag)] {
        let d = FamilyDerived::solve(a.family.family, phi, delta)?;
        let poles = pole_report(&d);
        let series = xz_series(&d, a.t_max)?;
        let zgrid = z_numeric(&series, &grid, a.t_max, &poles.locations())?;
        let closed = zgrid
            .points
            .iter()
            .map(|&z| z_closed(&d, z))
            .collect::<Result<Vec<_>, _>>()?;
        for ((z, v), (c, b)) in zgrid
            .points
            .iter()
            .zip(&zgrid.values)
            .zip(closed.iter().zip(&zgrid.tail_bounds))
        {
            if (v - c).norm() > *b {
                return Err(CliError::Numerical(format!(
                    "{label} block: numeric Z-sum at z = {z} misses the closed form by {:.3e} (bound {b:.3e})",
                    (v - c).norm()
                )));
            }
        }
        let fourier = dft_profile(&d, &omegas)?;
        blocks.push(SpectralBlock {
            label,
            delta,
            zgrid,
            closed,
            fourier,
            poles,
        });
    }
    let body = match a.format {
        Format::Csv => spectral_csv(&blocks),
        Format::Json => json(
            "spectral",
            &SpectralDoc {
                family: a.family.family,
                phi_big: phi,
                blocks: &blocks,
            },
        )?,
    };
    let poles = PoleDoc {
        family: a.family.family,
        phi_big: phi,
        reports: blocks
            .iter()
            .map(|b| PoleEntry {
                label: b.label,
                delta: b.delta,
                count: b.poles.count(),
                real_count: b.poles.real_count(),
                max_order: b.poles.max_order(),
                poles: &b.poles.poles,
            })
            .collect(),
    };
    emit(Some(&a.output), &body)?;
    emit(
        Some(&sidecar(&a.output, "poles.json")),
        &json("poles", &poles)?,
    )
}

fn spectral_csv(blocks: &[SpectralBlock]) -> String {
    let mut s = String::from(
        "block,delta,kind,omega,re_z,im_z,re_numeric,im_numeric,re_closed,im_closed,log10_abs_closed,tail_bound\n",
    );
    for b in blocks {
        let g = &b.zgrid;
        for i in 0..g.points.len() {
            let (z, v, c) = (g.points[i], g.values[i], b.closed[i]);
            let _ = writeln!(
                s,
                "{},{:?},zgrid,,{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                b.label,
                b.delta,
                z.re,
                z.im,
                v.re,
                v.im,
                c.re,
                c.im,
                dualep_core::spectral::capped_log10(c.norm()),
                g.tail_bounds[i]
            );
        }
        let f = &b.fourier;
        for i in 0..f.omegas.len() {
            let z = dualep_core::spectral::fourier_point(f.omegas[i]);
            let _ = writeln!(
                s,
                "{},{:?},fourier,{:?},{:?},{:?},,,{:?},{:?},{:?},",
                b.label,
                b.delta,
                f.omegas[i],
                z.re,
                z.im,
                f.values[i].re,
                f.values[i].im,
                dualep_core::spectral::capped_log10(f.amplitudes[i])
            );
        }
    }
    s
}

// -------------------------------------------------------------- floquet

#[derive(Serialize)]
struct FitEntry {
    model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FitDoc<'a> {
    spec: &'a FloquetSpec,
    alpha: PauliIndex,
    beta: PauliIndex,
    t_max: u32,
    fits: Vec<FitEntry>,
    best: Option<ModelKind>,
}

#[derive(Serialize)]
struct FloquetDoc<'a> {
    spec: &'a FloquetSpec,
    probe: SiteProbe,
    series: &'a CorrelationSeries,
}

pub fn floquet(a: &FloquetArgs) -> CliResult<()> {
    let ring = RingSpec::new(a.ring_l)?;
    let d = solve_family(a.family.family, &a.family.angle, a.delta)?;
    let mut spec = FloquetSpec::from_derived(&d, ring);
    spec.kicks = !a.kicks_off;
    let probe = SiteProbe::Edge {
        y: spec.plus_edge_origin(),
        direction: Direction::Plus,
    };
    let series = floquet_corr(&spec, a.alpha, a.beta, probe, a.t_max)?;

    let fits: Vec<FitEntry> = [
        ModelKind::PureExp,
        ModelKind::LinearExp,
        ModelKind::QuadExp,
        ModelKind::TwoMode,
    ]
    .into_iter()
    .map(|model| match fit_decay(&series, model) {
        Ok(f) => FitEntry {
            model,
            fit: Some(f),
            error: None,
        },
        Err(e) => FitEntry {
            model,
            fit: None,
            error: Some(e.to_string()),
        },
    })
    .collect();
    let best = fits
        .iter()
        .filter_map(|e| e.fit.as_ref())
        .min_by(|x, y| x.residual_rms.total_cmp(&y.residual_rms))
        .map(|f| f.model);
    for e in &fits {
        match &e.fit {
            Some(f) => eprintln!(
                "{:<10} rms {:.4e}  params {:?}",
                e.model.name(),
                f.residual_rms,
                f.params
            ),
            None => eprintln!(
                "{:<10} failed: {}",
                e.model.name(),
                e.error.as_deref().unwrap_or("")
            ),
        }
    }

    let body = match a.format {
        Format::Csv => {
            let mut s = String::from("t,x,y,value,wrap_free\n");
            for (&t, v) in series.times.iter().zip(&series.values) {
                let (x, y) = probe.sites(ring, t);
                let _ = writeln!(s, "{t},{x},{y},{v:?},{}", ring.wrap_free(t));
            }
            s
        }
        Format::Json => json(
            "floquet",
            &FloquetDoc {
                spec: &spec,
                probe,
                series: &series,
            },
        )?,
    };
    let fit_doc = FitDoc {
        spec: &spec,
        alpha: a.alpha,
        beta: a.beta,
        t_max: a.t_max,
        fits,
        best,
    };
    emit(Some(&a.output), &body)?;
    emit(
        Some(&sidecar(&a.output, "fits.json")),
        &json("fits", &fit_doc)?,
    )
}

// ---------------------------------------------------------------- check

#[derive(Serialize, Default)]
struct CheckReport {
    seed: u64,
    samples: usize,
    random_gates: usize,
    max_dual_unitarity_residual: f64,
    max_correlator_abs: f64,
    family_points: usize,
    failures: Vec<String>,
}

const CHECK_T_MAX: u32 = 6;

fn check_gate(g: &Gate2Q, rep: &mut CheckReport, tag: &str) {
    let du = is_dual_unitary(g, DUAL_UNITARY_TOL);
    rep.max_dual_unitarity_residual = rep.max_dual_unitarity_residual.max(du.max_residual());
    if !du.dual_unitary {
        rep.failures.push(format!(
            "{tag}: dual-unitarity residual {:.3e}",
            du.max_residual()
        ));
        return;
    }
    for m in [transfer_plus(g), transfer_minus(g)] {
        let m = match m {
            Ok(m) => m,
            Err(e) => {
                rep.failures.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let e = &m.entries;
        let unital = (e[0][0] - 1.0).abs() < 1e-12
            && (1..4).all(|k| e[0][k].abs() < 1e-12 && e[k][0].abs() < 1e-12);
        if !unital {
            rep.failures
                .push(format!("{tag}: transfer matrix is not unital"));
        }
        for t in 0..=CHECK_T_MAX {
            for a in PauliIndex::NONTRIVIAL {
                for b in PauliIndex::NONTRIVIAL {
                    let c = lightcone_corr(&m, a, b, t).abs();
                    rep.max_correlator_abs = rep.max_correlator_abs.max(c);
                    if c > 1.0 + 1e-12 {
                        rep.failures.push(format!("{tag}: |C^{a}{b}({t})| = {c}"));
                    }
                }
            }
        }
    }
}

pub fn check(a: &CheckArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rep = CheckReport {
        seed: a.seed,
        samples: a.samples,
        ..Default::default()
    };
    for i in 0..a.samples {
        let g = assemble(&random_params(&mut rng))?;
        check_gate(&g, &mut rep, &format!("random gate {i}"));
        rep.random_gates += 1;
    }
    for i in 0..a.samples {
        let (family, hi, size) = if i % 2 == 0 {
            (Family::Ep2, PI / 8.0, 2)
        } else {
            (Family::Ep3, 3.0 * PI / 20.0, 3)
        };
        let phi = rng.random_range(0.05..hi - 0.02);
        let delta = if i % 4 < 2 {
            0.0
        } else {
            rng.random_range(0.01..0.05) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
        };
        let tag = format!("{family} Phi={phi} delta={delta}");
        let g = match FamilyDerived::solve(family, phi, delta).and_then(|d| d.gate()) {
            Ok(g) => g,
            Err(e) => {
                rep.failures.push(format!("{tag}: {e}"));
                continue;
            }
        };
        check_gate(&g, &mut rep, &tag);
        if let Ok(m) = transfer_plus(&g) {
            let j = jordan_structure(&m, DEFAULT_JORDAN_TOL);
            let want = if delta == 0.0 { size } else { 1 };
            if j.max_block_size() != want {
                rep.failures.push(format!(
                    "{tag}: largest Jordan block {} (expected {want})",
                    j.max_block_size()
                ));
            }
        }
        rep.family_points += 1;
    }
    let body = json("check", &rep)?;
    emit(a.output.as_deref(), &body)?;
    if rep.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} property check(s) failed",
            rep.failures.len()
        )))
    }
}
