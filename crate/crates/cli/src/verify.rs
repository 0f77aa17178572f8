//! Self-checks run by `interfall verify`, all at fixed parameters.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use interfall::grid::{ComplexField1D, UniformGrid};
use interfall::math::fresnel;
use interfall::oracle::{split_step_evolve, Absorber, EvolutionSpec, Grid1D};
use interfall::propagators::{branch_masses, PhysicalConfig};
use interfall::slit::{classical_displacement, multi_slit_wavefunction, pointwise_relative_error, screen_grid, SlitGeometry};
use interfall::spin::{
    controlled_evolve, reduced_position_density, reduced_spin_state, JointState, KernelPropagator, OutputGrid,
    PureJointState, SpinState2,
};
use interfall::wavepacket::{gaussian_packet_wavefunction, Branch, DoubleSlitSource, Frame, GaussianEvolution, GaussianPacket};
use num_complex::Complex64;

use crate::config::{Fault, VerifyBlock};
use crate::output::Check;

type CheckFn = fn(&VerifyBlock) -> interfall::Result<Check>;

const ORACLE_CHECKS: [(&str, CheckFn); 2] =
    [("oracle_slit_equivalence", oracle_slit_equivalence), ("oracle_gaussian_fall", oracle_gaussian_fall)];

const CHECKS: [(&str, CheckFn); 6] = [
    ("fresnel_derivative", fresnel_derivative),
    ("equivalence_principle", equivalence_principle),
    ("incoherent_invariance", incoherent_invariance),
    ("rest_mass_phase", rest_mass_phase),
    ("visibility_revival", visibility_revival),
    ("visibility_phase", visibility_phase),
];

pub fn run_checks(block: VerifyBlock) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, f) in CHECKS {
        out.push(f(&block).unwrap_or_else(|e| Check::error(name, e)));
    }
    for (name, f) in ORACLE_CHECKS {
        if block.oracle {
            out.push(f(&block).unwrap_or_else(|e| Check::error(name, e)));
        } else {
            out.push(Check::skipped(name, "oracle disabled"));
        }
    }
    out
}

fn scaled(g: f64, delta_e: f64) -> interfall::Result<PhysicalConfig> {
    PhysicalConfig::new(1.0, g, 2.0 * PI, 100.0, 0.01, delta_e)
}

fn source(block: &VerifyBlock) -> interfall::Result<DoubleSlitSource> {
    let src = DoubleSlitSource::reference()?;
    Ok(match block.fault {
        Fault::None => src,
        Fault::BranchFlip => src.with_swapped_branches(),
    })
}

fn fresnel_derivative(_: &VerifyBlock) -> interfall::Result<Check> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for u in [0.3, 1.2, 1.6, 4.0, 11.5] {
        let (a, b) = (fresnel(u + h)?, fresnel(u - h)?);
        let phase = FRAC_PI_2 * u * u;
        worst = worst
            .max(((a.c - b.c) / (2.0 * h) - phase.cos()).abs())
            .max(((a.s - b.s) / (2.0 * h) - phase.sin()).abs());
    }
    Ok(Check::below("fresnel_derivative", worst, 1e-6, "central difference of C, S against the integrand"))
}

fn equivalence_principle(_: &VerifyBlock) -> interfall::Result<Check> {
    let cfg = PhysicalConfig::neutron(9.8, 1e-9, 0.0)?;
    let geoms = [
        SlitGeometry::single(2.0, 1.0, 1e-5, 0.0)?,
        SlitGeometry::double(1.0, 3.0, 5e-6, 2e-5)?,
        SlitGeometry::single(2.5, 6.0, 1.5e-5, 3e-5)?,
    ];
    let mut worst: f64 = 0.0;
    for geom in &geoms {
        let grid = screen_grid(geom, &cfg)?;
        let rho = multi_slit_wavefunction(geom, &cfg, grid)?.density();
        let shifted = grid.shifted(-classical_displacement(geom, &cfg));
        let free = multi_slit_wavefunction(geom, &cfg.with_g(0.0), shifted)?.density();
        worst = worst.max(pointwise_relative_error(&rho, &free));
    }
    Ok(Check::below("equivalence_principle", worst, 1e-9, "falling pattern against the shifted g = 0 pattern"))
}

fn incoherent_invariance(_: &VerifyBlock) -> interfall::Result<Check> {
    let cfg = scaled(2.0, 30.0)?;
    let grid = UniformGrid::centered(0.0, 10.0, 2001)?;
    let prop = KernelPropagator::new(&cfg, OutputGrid::CoFalling);
    let mut worst: f64 = 0.0;
    for (q, p, t) in [(0.2, 0.0, 0.4), (0.7, 0.8, 1.0)] {
        let psi = gaussian_packet_wavefunction(&GaussianPacket::new(0.6, p, 0.0)?, grid, 1.0)?;
        let out = reduced_spin_state(&controlled_evolve(&JointState::incoherent(q, psi)?, &cfg, t, &prop)?)?;
        worst = worst.max(out.max_abs_diff(&SpinState2::diagonal(q)?));
    }
    Ok(Check::below("incoherent_invariance", worst, 1e-10, "energy-diagonal spin state after controlled evolution"))
}

fn rest_mass_phase(_: &VerifyBlock) -> interfall::Result<Check> {
    let on = scaled(1.0, 10.0)?;
    let off = PhysicalConfig { rest_mass_phase: false, ..on };
    let grid = UniformGrid::centered(0.0, 10.0, 2001)?;
    let psi = gaussian_packet_wavefunction(&GaussianPacket::new(0.6, 0.0, 0.0)?, grid, 1.0)?;
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let state = JointState::Pure(PureJointState::product(s, s, psi)?);
    let prop = KernelPropagator::new(&on, OutputGrid::CoFalling);
    let t = 0.4;
    let (a, b) = (controlled_evolve(&state, &on, t, &prop)?, controlled_evolve(&state, &off, t, &prop)?);
    let l1 = reduced_position_density(&a)?.l1_distance(&reduced_position_density(&b)?)?;
    let ratio = reduced_spin_state(&a)?.coherence() / reduced_spin_state(&b)?.coherence();
    let predicted = on.delta_e * t / on.hbar();
    let phase_err = (ratio / Complex64::from_polar(1.0, predicted)).arg().abs() / predicted;
    Ok(Check::judged(
        "rest_mass_phase",
        l1 < 1e-12 && phase_err < 1e-6,
        Some(l1),
        Some(1e-12),
        format!("density L1 change {l1:.2e} (tol 1e-12); coherence phase rel. error {phase_err:.2e} (tol 1e-6)"),
    ))
}

fn visibility_revival(block: &VerifyBlock) -> interfall::Result<Check> {
    let src = source(block)?;
    let v = |z: f64| src.screen(z)?.visibility;
    let (v10, v30, v50) = (v(10.0)?, v(30.0)?, v(50.0)?);
    Ok(Check::judged(
        "visibility_revival",
        v30 < v10 && v50 > v30,
        Some(v30),
        None,
        format!("V(10) = {v10:.3}, V(30) = {v30:.3}, V(50) = {v50:.3}; need a dip at 30 m"),
    ))
}

/// The lighter (upper) branch pattern must sit above the heavier one by the
/// separation predicted from the mass assignment `m_up = m − ΔE/2c²`.
fn visibility_phase(block: &VerifyBlock) -> interfall::Result<Check> {
    let src = source(block)?;
    let z = 30.0;
    let cfg = src.cfg;
    let m = branch_masses(&cfg)?;
    let (tu, td) = (cfg.flight_time(z, m.m_minus), cfg.flight_time(z, m.m_plus));
    let predicted = 0.5 * cfg.g * (td * td - tu * tu);
    let measured = src.averaged_density(z, Branch::Up)?.mean() - src.averaged_density(z, Branch::Down)?.mean();
    let err = (measured / predicted - 1.0).abs();
    Ok(Check::below("visibility_phase", err, 0.05, format!("branch pattern offset {measured:.4e} m, predicted {predicted:.4e} m")))
}

/// Hard apertures lit by a narrow Gaussian, propagated by split-step and
/// compared with the closed-form single-slit pattern. Scaled units.
fn oracle_slit_equivalence(_: &VerifyBlock) -> interfall::Result<Check> {
    let cfg = PhysicalConfig::new(1.0, 10.0, 2.0 * PI, 1e6, 0.01, 0.0)?;
    let geom = SlitGeometry::single(200.0, 200.0, 1.0, 0.0)?;
    let (n, dx) = (8192, 0.02);
    let grid = Grid1D::new(n, -0.5 * n as f64 * dx, 0.5 * n as f64 * dx)?;
    let u = grid.uniform();
    let t_source = cfg.mass * cfg.lambda * geom.d / cfg.h;
    let t_screen = cfg.mass * cfg.lambda * geom.l / cfg.h;
    let incident =
        GaussianEvolution::new(GaussianPacket::new(cfg.lambda / 10.0, 0.0, 0.0)?, cfg.mass, cfg.hbar(), cfg.g, t_source, Frame::Lab)?;
    let edge = 1e-9 * dx;
    let mask = |x: f64| {
        let d = x.abs() - geom.a;
        if d.abs() < edge {
            0.5
        } else if d < 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let psi0 = ComplexField1D::from_fn(u, |x| incident.value(x) * mask(x)).normalized()?;
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
    let out = split_step_evolve(&psi0, &spec)?;
    let xc = classical_displacement(&geom, &cfg);
    let half = 12.0 * geom.a;
    let lo = ((xc - half - u.start()) / dx).floor() as usize;
    let len = (2.0 * half / dx) as usize + 1;
    let window = UniformGrid::new(u.x(lo), dx, len)?;
    let analytic = multi_slit_wavefunction(&geom, &cfg, window)?.density();
    let numeric: Vec<f64> = out.values[lo..lo + len].iter().map(|v| v.norm_sqr()).collect();
    let (sa, sn) = (analytic.iter().sum::<f64>(), numeric.iter().sum::<f64>());
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in analytic.iter().zip(&numeric) {
        diff += (a / sa - b / sn).powi(2);
        norm += (a / sa).powi(2);
    }
    Ok(Check::below("oracle_slit_equivalence", (diff / norm).sqrt(), 1e-2, "relative L2 density error, split-step against closed form"))
}

fn oracle_gaussian_fall(_: &VerifyBlock) -> interfall::Result<Check> {
    let (g, t) = (2.0, 4.0);
    let grid = Grid1D::new(512, -40.0, 20.0)?;
    let pkt = GaussianPacket::new(1.0, 0.0, 0.0)?;
    let psi0 = gaussian_packet_wavefunction(&pkt, grid.uniform(), 1.0)?;
    let steps = 8000;
    let spec = EvolutionSpec { grid, mass: 1.0, g, hbar: 1.0, dt: t / steps as f64, steps, absorber: None };
    let out = split_step_evolve(&psi0, &spec)?;
    let exact = GaussianEvolution::new(pkt, 1.0, 1.0, g, t, Frame::Lab)?.field(grid.uniform());
    let err = out.l2_distance(&exact)?;
    Ok(Check::below("oracle_gaussian_fall", err, 1e-6, "split-step against the closed-form falling Gaussian"))
}
