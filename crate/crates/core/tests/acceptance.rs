//! End-to-end acceptance run. One line per criterion; exits non-zero if any fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use interfall::grid::{ComplexField1D, UniformGrid};
use interfall::math::fresnel;
use interfall::nonmarkov::{causal_break_experiment, CausalBreakConfig, SpinMemory};
use interfall::oracle::{split_step_evolve, Absorber, EvolutionSpec, Grid1D};
use interfall::propagators::{branch_masses, codata, cow_phase, PhysicalConfig};
use interfall::slit::{self, multi_slit_wavefunction, pointwise_relative_error, SlitGeometry};
use interfall::spin::{
    controlled_evolve, incoherent_invariance_check, reduced_position_density, reduced_spin_state, JointState,
    KernelPropagator, OutputGrid, PureJointState,
};
use interfall::wavepacket::{gaussian_packet_wavefunction, DoubleSlitSource, Frame, GaussianEvolution, GaussianPacket};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "equivalence-principle invariance", budget: Some(Duration::from_secs(10)), run: equivalence },
        Criterion { id: 2, name: "split-step oracle equivalence", budget: Some(Duration::from_secs(60)), run: oracle_equivalence },
        Criterion { id: 3, name: "single-slit peak displacement", budget: Some(Duration::from_secs(10)), run: peak_displacement },
        Criterion { id: 4, name: "visibility revival and overlap", budget: Some(Duration::from_secs(300)), run: visibility_sweep },
        Criterion { id: 5, name: "causal break", budget: Some(Duration::from_secs(300)), run: causal_break },
        Criterion { id: 6, name: "incoherent-operation invariance", budget: None, run: incoherent },
        Criterion { id: 7, name: "rest-mass phase irrelevance", budget: None, run: rest_mass },
        Criterion { id: 8, name: "branch kinematics", budget: None, run: kinematics },
        Criterion { id: 9, name: "COW phase", budget: None, run: cow },
        Criterion { id: 10, name: "Fresnel integrals", budget: None, run: fresnel_accuracy },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(b) = c.budget {
            if elapsed > b {
                pass = false;
                detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
            }
        }
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<34} {} [{:.2} s]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn neutron(g: f64, lambda: f64) -> PhysicalConfig {
    PhysicalConfig::neutron(g, lambda, 0.0).unwrap()
}

/// `−g m² λ² (L² + LD) / 2h²`, written out independently of the library.
fn expected_displacement(cfg: &PhysicalConfig, d: f64, l: f64) -> f64 {
    -cfg.g * cfg.mass * cfg.mass * cfg.lambda * cfg.lambda * (l * l + l * d) / (2.0 * cfg.h * cfg.h)
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let cfg = neutron(rng.gen_range(1.0..20.0), rng.gen_range(1e-10..2e-9));
        let a = rng.gen_range(2e-6..2e-5);
        let (d, l) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..10.0));
        let geom = if k % 2 == 0 {
            SlitGeometry::single(d, l, a, rng.gen_range(-a..a))
        } else {
            SlitGeometry::double(d, l, a, rng.gen_range(1.5 * a..4.0 * a))
        }
        .map_err(e)?;
        let grid = slit::screen_grid(&geom, &cfg).map_err(e)?;
        let with_g = multi_slit_wavefunction(&geom, &cfg, grid).map_err(e)?;
        let xc = expected_displacement(&cfg, d, l);
        let free = multi_slit_wavefunction(&geom, &cfg.with_g(0.0), grid.shifted(-xc)).map_err(e)?;
        worst = worst.max(pointwise_relative_error(&with_g.density(), &free.density()));
    }
    Ok((worst < 1e-9, format!("20 geometries, max pointwise rel. error {worst:.2e} (tol 1e-9)")))
}

/// Narrow Gaussian source evolved to the slit plane, cut by hard apertures,
/// propagated to the screen by split-step and compared with the closed-form
/// pattern. Scaled units: `m = ħ = 1`, `a = 1`, `λ = 0.01`.
fn oracle_case(geom: &SlitGeometry, cfg: &PhysicalConfig) -> Result<f64, String> {
    let n = 8192;
    let dx = 0.02;
    let grid = Grid1D::new(n, -0.5 * n as f64 * dx, 0.5 * n as f64 * dx).map_err(e)?;
    let u = grid.uniform();
    let t_source = cfg.mass * cfg.lambda * geom.d / cfg.h;
    let t_screen = cfg.mass * cfg.lambda * geom.l / cfg.h;
    let source = GaussianPacket::new(cfg.lambda / 10.0, 0.0, 0.0).map_err(e)?;
    let incident = GaussianEvolution::new(source, cfg.mass, cfg.hbar(), cfg.g, t_source, Frame::Lab).map_err(e)?;
    let tol = 1e-9 * dx;
    let mask = |x: f64| {
        geom.centers
            .iter()
            .map(|b| {
                let (lo, hi) = (b - geom.a, b + geom.a);
                if (x - lo).abs() < tol || (x - hi).abs() < tol {
                    0.5
                } else if x > lo && x < hi {
                    1.0
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };
    let psi0 = ComplexField1D::from_fn(u, |x| incident.value(x) * mask(x)).normalized().map_err(e)?;
    let k_max = grid.k_max();
    let dt_max = 0.8 * FRAC_PI_4 * 2.0 * cfg.mass / (cfg.hbar() * k_max * k_max);
    let steps = (t_screen / dt_max).ceil() as usize;
    let spec = EvolutionSpec {
        grid,
        mass: cfg.mass,
        g: cfg.g,
        hbar: cfg.hbar(),
        dt: t_screen / steps as f64,
        steps,
        absorber: Some(Absorber { fraction: 0.2, strength: 50.0 }),
    };
    let out = split_step_evolve(&psi0, &spec).map_err(e)?;

    let xc = expected_displacement(cfg, geom.d, geom.l);
    let half_window = 12.0 * geom.a + geom.centers.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let lo = ((xc - half_window - u.start()) / dx).floor() as usize;
    let len = (2.0 * half_window / dx) as usize + 1;
    let window = UniformGrid::new(u.x(lo), dx, len).map_err(e)?;
    let analytic = multi_slit_wavefunction(geom, cfg, window).map_err(e)?.density();
    let numeric: Vec<f64> = out.values[lo..lo + len].iter().map(|v| v.norm_sqr()).collect();
    let (sa, sn) = (analytic.iter().sum::<f64>(), numeric.iter().sum::<f64>());
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in analytic.iter().zip(&numeric) {
        diff += (a / sa - b / sn).powi(2);
        norm += (a / sa).powi(2);
    }
    Ok((diff / norm).sqrt())
}

fn oracle_equivalence() -> Outcome {
    let cfg = PhysicalConfig::new(1.0, 10.0, 2.0 * PI, 1e6, 0.01, 0.0).map_err(e)?;
    let single = SlitGeometry::single(200.0, 200.0, 1.0, 0.0).map_err(e)?;
    let double = SlitGeometry::double(300.0, 300.0, 1.0, 1.5).map_err(e)?;
    let (es, ed) = (oracle_case(&single, &cfg)?, oracle_case(&double, &cfg)?);
    Ok((
        es < 1e-2 && ed < 1e-2,
        format!("rel. L2 density error single (D=L=200a) {es:.2e}, double (D=L=300a) {ed:.2e} (tol 1e-2)"),
    ))
}

fn peak_displacement() -> Outcome {
    let cfg = neutron(9.8, 1e-9);
    let mut report = Vec::new();
    let mut ok = true;
    let mut last = 0.0;
    for l in [1.0, 3.0, 8.0] {
        let geom = SlitGeometry::single(2.0, l, 1e-5, 0.0).map_err(e)?;
        let grid = slit::screen_grid(&geom, &cfg).map_err(e)?;
        let rho = multi_slit_wavefunction(&geom, &cfg, grid).map_err(e)?.density();
        let peak = common::peak_position(&grid.points(), &rho);
        let want = expected_displacement(&cfg, 2.0, l);
        let width = cfg.lambda * l / geom.a;
        let err = (peak - want).abs() / width;
        ok &= err < 0.02 && peak.abs() > last;
        last = peak.abs();
        report.push(format!("L={l}: {peak:.4e} m vs {want:.4e} m ({:.1e} envelopes)", err));
    }
    Ok((ok, format!("{}; |shift| increasing in L (tol 0.02 envelopes)", report.join(", "))))
}

fn visibility_sweep() -> Outcome {
    let src = DoubleSlitSource::reference().map_err(e)?;
    let zs: Vec<f64> = (1..=25).map(|k| 2.0 * k as f64).collect();
    let mut vis = Vec::new();
    let mut ov = Vec::new();
    for &z in &zs {
        let s = src.screen(z).map_err(e)?;
        vis.push(s.visibility.map_err(e)?);
        ov.push(s.overlap.norm());
    }
    let at = |z: f64| vis[zs.iter().position(|v| *v == z).unwrap()];
    let (v10, v30, v50) = (at(10.0), at(30.0), at(50.0));
    let rho = common::spearman(&ov, &vis);
    Ok((
        v30 < v10 && v50 > v30 && rho > 0.9,
        format!("V(10)={v10:.3} V(30)={v30:.3} V(50)={v50:.3}; Spearman(|overlap|, V) over 25 z = {rho:.3} (tol > 0.9)"),
    ))
}

fn causal_break() -> Outcome {
    let mut cfg = CausalBreakConfig::reference().map_err(e)?;
    let r = causal_break_experiment(&cfg).map_err(e)?;
    let (wu, wd) = r.white.spin.populations();
    let (bu, bd) = r.black.spin.populations();
    cfg.memory = SpinMemory::Erased;
    let ablated = causal_break_experiment(&cfg).map_err(e)?.distinguishability;
    let pops_ok = (wu - 0.8).abs() <= 0.08 && (wd - 0.2).abs() <= 0.08 && (bu - 0.2).abs() <= 0.08 && (bd - 0.8).abs() <= 0.08;
    Ok((
        pops_ok && r.distinguishability > 0.05 && ablated < 1e-6,
        format!(
            "white ({wu:.3}, {wd:.3}), black ({bu:.3}, {bd:.3}) (tol ±0.08); distinguishability {:.3} (> 0.05); ablation {ablated:.1e} (< 1e-6)",
            r.distinguishability
        ),
    ))
}

fn scaled(g: f64, delta_e: f64) -> PhysicalConfig {
    PhysicalConfig::new(1.0, g, 2.0 * PI, 100.0, 0.01, delta_e).unwrap()
}

fn incoherent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = UniformGrid::centered(0.0, 10.0, 2001).map_err(e)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = rng.gen_range(0.0..1.0);
        let cfg = scaled(rng.gen_range(0.0..5.0), rng.gen_range(0.1..50.0));
        let pkt = GaussianPacket::new(rng.gen_range(0.3..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)).map_err(e)?;
        let ext = gaussian_packet_wavefunction(&pkt, grid, 1.0).map_err(e)?;
        let t = rng.gen_range(0.2..1.0);
        let prop = KernelPropagator::new(&cfg, OutputGrid::CoFalling);
        let s = incoherent_invariance_check(q, &ext, &cfg, t, &prop).map_err(e)?;
        let d = (s.rho[0][0].re - q).abs().max((s.rho[1][1].re - 1.0 + q).abs()).max(s.rho[0][1].norm());
        worst = worst.max(d);
    }
    Ok((worst <= 1e-10, format!("20 (q, packet, t) draws, max deviation from diag(q, 1-q) {worst:.1e} (tol 1e-10)")))
}

fn wrap(phase: f64) -> f64 {
    phase.rem_euclid(2.0 * PI)
}

fn rest_mass() -> Outcome {
    let grid = UniformGrid::centered(0.0, 10.0, 2001).map_err(e)?;
    let mut worst_l1: f64 = 0.0;
    let mut worst_phase: f64 = 0.0;
    let delta_e = 3.0;
    for t in [0.3, 0.7, 1.3] {
        let mut on = scaled(2.0, delta_e);
        on.rest_mass_phase = true;
        let off = PhysicalConfig { rest_mass_phase: false, ..on };
        let left = gaussian_packet_wavefunction(&GaussianPacket::new(0.5, 1.0, -0.5).unwrap(), grid, 1.0).map_err(e)?;
        let right = gaussian_packet_wavefunction(&GaussianPacket::new(0.7, -1.0, 0.4).unwrap(), grid, 1.0).map_err(e)?;
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let state = JointState::Pure(PureJointState::new(s, s, left, right).map_err(e)?);
        let prop = KernelPropagator::new(&on, OutputGrid::CoFalling);
        let a = controlled_evolve(&state, &on, t, &prop).map_err(e)?;
        let b = controlled_evolve(&state, &off, t, &prop).map_err(e)?;
        worst_l1 = worst_l1.max(reduced_position_density(&a).map_err(e)?.l1_distance(&reduced_position_density(&b).map_err(e)?).map_err(e)?);
        let shift = reduced_spin_state(&a).map_err(e)?.coherence().arg() - reduced_spin_state(&b).map_err(e)?.coherence().arg();
        let predicted = delta_e * t / on.hbar();
        worst_phase = worst_phase.max((wrap(shift) - wrap(predicted)).abs() / wrap(predicted));
    }
    let src = DoubleSlitSource::reference().map_err(e)?;
    let mut quiet = src.clone();
    quiet.cfg.rest_mass_phase = !src.cfg.rest_mass_phase;
    let (x, y) = (src.screen(30.0).map_err(e)?, quiet.screen(30.0).map_err(e)?);
    worst_l1 = worst_l1.max(x.averaged.l1_distance(&y.averaged).map_err(e)?);
    Ok((
        worst_l1 < 1e-12 && worst_phase < 1e-6,
        format!("max density L1 change {worst_l1:.1e} (tol 1e-12); off-diagonal phase rel. error {worst_phase:.1e} (tol 1e-6)"),
    ))
}

fn kinematics() -> Outcome {
    let cfg = scaled(0.0, 10.0);
    let masses = branch_masses(&cfg).map_err(e)?;
    let p = 2.0;
    let grid = UniformGrid::linspace(-20.0, 30.0, 5001).map_err(e)?;
    let ext = gaussian_packet_wavefunction(&GaussianPacket::new(1.0, p, 0.0).unwrap(), grid, 1.0).map_err(e)?;
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let state = JointState::Pure(PureJointState::product(s, s, ext).map_err(e)?);
    let prop = KernelPropagator::new(&cfg, OutputGrid::Same);
    let means = |t: f64| -> Result<(f64, f64), String> {
        let JointState::Pure(out) = controlled_evolve(&state, &cfg, t, &prop).map_err(e)? else { unreachable!() };
        Ok((out.up.to_distribution().map_err(e)?.mean(), out.down.to_distribution().map_err(e)?.mean()))
    };
    let (t1, t2) = (1.0, 3.0);
    let (a, b) = (means(t1)?, means(t2)?);
    let v_up = (b.0 - a.0) / (t2 - t1);
    let v_down = (b.1 - a.1) / (t2 - t1);
    let err_up = (v_up - p / masses.up()).abs() / (p / masses.up());
    let err_down = (v_down - p / masses.down()).abs() / (p / masses.down());
    let first_order = p * cfg.delta_e / (cfg.mass * cfg.mass * cfg.c * cfg.c);
    let err_diff = ((v_up - v_down) - first_order).abs() / first_order;
    Ok((
        err_up < 1e-8 && err_down < 1e-8 && err_diff < 1e-4,
        format!("speed rel. errors {err_up:.1e}, {err_down:.1e} (tol 1e-8); difference vs p dE/(m c)^2 {err_diff:.1e} (tol 1e-4)"),
    ))
}

fn cow() -> Outcome {
    let m = codata::NEUTRON_MASS;
    let h = codata::PLANCK;
    let hbar = h / (2.0 * PI);
    let (g, area, lambda) = (9.8, 1e-3, 1.4e-10);
    // Phase = m g A sin(θ) / (ħ v) with the de Broglie speed v = h / (m λ).
    let v = h / (m * lambda);
    let full = cow_phase(m, m, g, area, lambda, FRAC_PI_2, h).map_err(e)?;
    let independent = m * g * area / (hbar * v);
    let mut worst = (full - independent).abs() / independent;
    let mut worst_sin: f64 = 0.0;
    for k in 0..10 {
        let tilt = FRAC_PI_2 * k as f64 / 9.0;
        let phi = cow_phase(m, m, g, area, lambda, tilt, h).map_err(e)?;
        worst_sin = worst_sin.max((phi / full - tilt.sin()).abs());
        if k > 0 {
            worst = worst.max((phi - independent * tilt.sin()).abs() / (independent * tilt.sin()));
        }
    }
    Ok((
        worst < 1e-12 && worst_sin < 1e-12,
        format!("phase {full:.6} rad, rel. error vs recomputation {worst:.1e} (tol 1e-12); sin scaling error {worst_sin:.1e} at 10 tilts"),
    ))
}

fn fresnel_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut us: Vec<f64> = (0..500).map(|k| -100.0 + 200.0 * (k as f64 + 0.5) / 500.0).collect();
    us.extend((0..500).map(|k| {
        let mag = 10f64.powf(rng.gen_range(-3.0..2.0));
        if k % 2 == 0 { mag } else { -mag }
    }));
    let oracle = common::FresnelOracle::new().evaluate(&us);
    let mut worst: f64 = 0.0;
    for (u, (c, s)) in us.iter().zip(oracle) {
        let f = fresnel(*u).map_err(e)?;
        worst = worst.max((f.c - c).abs()).max((f.s - s).abs());
    }
    Ok((worst < 1e-12, format!("1000 points in |u| <= 100, max abs. error {worst:.1e} (tol 1e-12)")))
}
