use interfall::grid::ScreenDistribution;
use interfall::nonmarkov::{causal_break_experiment, CausalBreakConfig, SpinMemory};
use interfall::propagators::{cow_phase, PhysicalConfig};
use interfall::slit::{
    classical_displacement, fringe_spacing, multi_slit_wavefunction, pointwise_relative_error, screen_grid, SlitGeometry,
    FREEFALL_RTOL,
};
use interfall::spin::eigenvalues_from_overlap;
use interfall::wavepacket::{calibrated_half_separation, fringe_visibility, DoubleSlitSource, GaussianPacket};
use interfall::Error;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Kind, SlitBlock, SourceBlock};
use crate::output::{csv, distance_tag, svg_plot, Check, Report, Series};
use crate::verify;

/// Exit-code classes: configuration problems versus failures while computing.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Physics(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => RunError::Config(msg),
            other => RunError::Physics(other),
        }
    }
}

pub struct Outcome {
    pub report: Report,
    pub csv: Vec<(String, String)>,
    pub svg: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self { report: Report::new(cfg.kind.name(), &cfg.entries), csv: Vec::new(), svg: Vec::new(), warnings: Vec::new() }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    match cfg.kind {
        Kind::Diffract | Kind::Interfere => run_slit(cfg),
        Kind::Decohere => run_decohere(cfg),
        Kind::CausalBreak => run_causal_break(cfg),
        Kind::Cow => run_cow(cfg),
        Kind::Verify => {
            let mut out = Outcome::new(cfg);
            out.report.checks = verify::run_checks(cfg.verify.expect("verify block is always built"));
            Ok(out)
        }
    }
}

struct SlitPattern {
    x: Vec<f64>,
    density: Vec<f64>,
    control: Vec<f64>,
    displacement: f64,
    spacing: Option<f64>,
}

fn slit_geometry(s: &SlitBlock, l: f64) -> interfall::Result<SlitGeometry> {
    if s.slits == 2 {
        SlitGeometry::double(s.d, l, s.a, s.b)
    } else {
        SlitGeometry::single(s.d, l, s.a, s.b)
    }
}

fn slit_pattern(phys: &PhysicalConfig, s: &SlitBlock, l: f64) -> interfall::Result<SlitPattern> {
    let geom = slit_geometry(s, l)?;
    let grid = screen_grid(&geom, phys)?;
    let density = multi_slit_wavefunction(&geom, phys, grid)?.density();
    let displacement = classical_displacement(&geom, phys);
    let control = multi_slit_wavefunction(&geom, &phys.with_g(0.0), grid.shifted(-displacement))?.density();
    Ok(SlitPattern { x: grid.points(), density, control, displacement, spacing: fringe_spacing(&geom, phys) })
}

fn run_slit(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let phys = cfg.physics.expect("physics block");
    let slit = cfg.slit.expect("slit block");
    let kind = cfg.kind.name();
    let mut out = Outcome::new(cfg);
    let patterns: Vec<_> = cfg.distances.par_iter().map(|&l| slit_pattern(&phys, &slit, l)).collect();
    for (&l, p) in cfg.distances.iter().zip(patterns) {
        let p = p?;
        let tag = distance_tag(l);
        let err = pointwise_relative_error(&p.density, &p.control);
        out.report.metric(format!("peak_displacement_{tag}"), p.displacement);
        out.report.checks.push(Check::below(
            &format!("freefall_control_{tag}"),
            err,
            FREEFALL_RTOL,
            "max pointwise relative difference between the pattern and the shifted g = 0 pattern",
        ));
        if let Some(spacing) = p.spacing {
            out.report.metric(format!("fringe_spacing_{tag}"), spacing);
            let grid = interfall::grid::UniformGrid::new(p.x[0], p.x[1] - p.x[0], p.x.len())?;
            let d = ScreenDistribution::from_unnormalized(grid, p.density.clone())?;
            let v = fringe_visibility(&d, 2.0 * spacing).unwrap_or(f64::NAN);
            out.report.metric(format!("visibility_{tag}"), v);
        }
        let name = format!("{kind}_{tag}");
        out.csv.push((
            format!("{name}.csv"),
            csv(&["x_m", "density_per_m", "density_g0_shifted"], &[&p.x, &p.density, &p.control]),
        ));
        let plot = svg_plot(
            &format!("{kind}, L = {l} m"),
            "x [m]",
            &[Series { label: "g", x: &p.x, y: &p.density }, Series { label: "g = 0, shifted", x: &p.x, y: &p.control }],
        );
        out.svg.push((format!("{name}.svg"), plot));
    }
    Ok(out)
}

pub fn build_source(phys: PhysicalConfig, s: &SourceBlock) -> Result<DoubleSlitSource, RunError> {
    let (a, b) = match (s.a, s.b) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let b = calibrated_half_separation(&phys, s.calibrate_z)?;
            (0.25 * b, b)
        }
    };
    let t = phys.flight_time(s.calibrate_z, phys.mass);
    let sigma_z = s.sigma_z.unwrap_or_else(|| (phys.hbar() * t / phys.mass).sqrt());
    let packet = GaussianPacket::at_rest(s.packet_sigma.unwrap_or(5.0 * b))?;
    Ok(DoubleSlitSource::new(phys, a, b, packet, sigma_z, s.window_samples)?)
}

fn source_params(report: &mut Report, src: &DoubleSlitSource) {
    report.param("derived.a", src.a);
    report.param("derived.b", src.b);
    report.param("derived.packet_sigma", src.packet.sigma);
    report.param("derived.sigma_z", src.sigma_z);
}

fn entropy_bits(overlap_abs: f64) -> f64 {
    let (lo, hi) = eigenvalues_from_overlap(0.5, 0.5, overlap_abs.min(1.0));
    [lo, hi].iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for k in i..=j {
            r[idx[k]] = 0.5 * (i + j) as f64;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn run_decohere(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let phys = cfg.physics.expect("physics block");
    let src = build_source(phys, cfg.source.as_ref().expect("source block"))?;
    let mut out = Outcome::new(cfg);
    source_params(&mut out.report, &src);
    let slices: Vec<_> = cfg.distances.par_iter().map(|&z| src.screen(z)).collect();
    let (mut vis, mut overlap, mut entropy) = (Vec::new(), Vec::new(), Vec::new());
    for (&z, slice) in cfg.distances.iter().zip(slices) {
        let s = slice?;
        let v = match &s.visibility {
            Ok(v) => *v,
            Err(Error::VisibilityUndefined(msg)) => {
                out.warnings.push(format!("visibility undefined at z = {z} m: {msg}"));
                f64::NAN
            }
            Err(e) => return Err(e.clone().into()),
        };
        let ov = s.overlap.norm();
        vis.push(v);
        overlap.push(ov);
        entropy.push(entropy_bits(ov));

        let frame = src.frame(z);
        let x: Vec<f64> = s.up.grid.points().iter().map(|xi| frame.to_lab(*xi, phys.g)).collect();
        let tag = distance_tag(z);
        out.csv.push((
            format!("pattern_{tag}.csv"),
            csv(
                &["x_m", "density_up", "density_down", "density_averaged"],
                &[&x, &s.up.density, &s.down.density, &s.averaged.density],
            ),
        ));
        let plot = svg_plot(
            &format!("z = {z} m, V = {v:.3}"),
            "x [m]",
            &[
                Series { label: "averaged", x: &x, y: &s.averaged.density },
                Series { label: "up", x: &x, y: &s.up.density },
                Series { label: "down", x: &x, y: &s.down.density },
            ],
        );
        out.svg.push((format!("pattern_{tag}.svg"), plot));
    }
    let finite: Vec<usize> = (0..vis.len()).filter(|&i| vis[i].is_finite()).collect();
    if finite.len() >= 3 {
        let pick = |v: &[f64]| finite.iter().map(|&i| v[i]).collect::<Vec<_>>();
        out.report.metric("overlap_visibility_spearman", spearman(&pick(&overlap), &pick(&vis)));
    }
    for (k, &z) in cfg.distances.iter().enumerate() {
        out.report.metric(format!("visibility_{}", distance_tag(z)), vis[k]);
    }
    out.csv.insert(
        0,
        ("decohere.csv".into(), csv(&["z_m", "visibility", "overlap_abs", "entropy_bits"], &[&cfg.distances, &vis, &overlap, &entropy])),
    );
    let plot = svg_plot(
        "visibility and branch overlap",
        "z [m]",
        &[Series { label: "visibility", x: &cfg.distances, y: &vis }, Series { label: "|overlap|", x: &cfg.distances, y: &overlap }],
    );
    out.svg.insert(0, ("decohere.svg".into(), plot));
    Ok(out)
}

fn run_causal_break(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let phys = cfg.physics.expect("physics block");
    let f = cfg.filter.expect("filter block");
    let src = build_source(phys, cfg.source.as_ref().expect("source block"))?;
    let mut out = Outcome::new(cfg);
    source_params(&mut out.report, &src);
    let mut cb = CausalBreakConfig::new(src, f.z_filter, f.z_screen, f.reprep_sigma)?;
    cb.filter = f.filter;
    cb.memory = f.memory;
    cb.downstream_coupling = f.downstream_coupling;
    cb.alpha = Complex64::new(f.alpha2.sqrt(), 0.0);
    cb.beta = Complex64::new((1.0 - f.alpha2).sqrt(), 0.0);
    cb.validate()?;
    let ablation = CausalBreakConfig { memory: SpinMemory::EqualPopulations, downstream_coupling: false, ..cb.clone() };
    let (main, control) = rayon::join(|| causal_break_experiment(&cb), || causal_break_experiment(&ablation));
    let (r, control) = (main?, control?);

    let m = &mut out.report;
    for (arm, a) in [("white", &r.white), ("black", &r.black)] {
        let (pu, pd) = a.spin.populations();
        m.metric(format!("{arm}_population_up"), pu);
        m.metric(format!("{arm}_population_down"), pd);
        m.metric(format!("{arm}_transmitted"), a.filter.transmitted(&r.filter_up.density) * f.alpha2
            + a.filter.transmitted(&r.filter_down.density) * (1.0 - f.alpha2));
    }
    m.metric("distinguishability", r.distinguishability);
    m.metric("ablation_distinguishability", control.distinguishability);
    m.checks.push(Check::below(
        "memory_ablation",
        control.distinguishability,
        1e-6,
        "distinguishability with equal carried populations and no downstream spin coupling",
    ));

    let filter_frame = cb.source.frame(f.z_filter);
    let xf: Vec<f64> = r.filter_up.grid.points().iter().map(|xi| filter_frame.to_lab(*xi, phys.g)).collect();
    out.csv.push((
        "causal_break_filter.csv".into(),
        csv(
            &["x_m", "density_up", "density_down", "transmission_white"],
            &[&xf, &r.filter_up.density, &r.filter_down.density, &r.white.filter.transmission],
        ),
    ));
    r.screen_up.grid.check_matches(&r.white.screen.grid)?;
    let xs = r.white.screen.grid.points();
    out.csv.push((
        "causal_break_screen.csv".into(),
        csv(
            &["x_rel_m", "density_white", "density_black", "density_up", "density_down"],
            &[&xs, &r.white.screen.density, &r.black.screen.density, &r.screen_up.density, &r.screen_down.density],
        ),
    ));
    let plot = svg_plot(
        "screen distributions after the causal break",
        "x relative to the nominal trajectory [m]",
        &[Series { label: "white", x: &xs, y: &r.white.screen.density }, Series { label: "black", x: &xs, y: &r.black.screen.density }],
    );
    out.svg.push(("causal_break_screen.svg".into(), plot));
    Ok(out)
}

fn run_cow(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let phys = cfg.physics.expect("physics block");
    let c = cfg.cow.as_ref().expect("cow block");
    let m_grav = c.m_grav.unwrap_or(phys.mass);
    let mut out = Outcome::new(cfg);
    let tilts: Vec<f64> = c.tilts_deg.iter().map(|d| d.to_radians()).collect();
    let phases = tilts
        .iter()
        .map(|t| cow_phase(phys.mass, m_grav, phys.g, c.area, phys.lambda, *t, phys.h))
        .collect::<interfall::Result<Vec<_>>>()?;
    let full = cow_phase(phys.mass, m_grav, phys.g, c.area, phys.lambda, std::f64::consts::FRAC_PI_2, phys.h)?;
    out.report.metric("phase_at_vertical_rad", full);
    let scaling = tilts
        .iter()
        .zip(&phases)
        .map(|(t, p)| (p - full * t.sin()).abs() / full.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    out.report.checks.push(Check::below("sin_tilt_scaling", scaling, 1e-12, "max |φ(θ) − φ(π/2) sin θ| / |φ(π/2)|"));
    out.csv.push(("cow.csv".into(), csv(&["tilt_rad", "phase_rad"], &[&tilts, &phases])));
    out.svg.push(("cow.svg".into(), svg_plot("COW phase", "tilt [rad]", &[Series { label: "phase", x: &tilts, y: &phases }])));
    Ok(out)
}
