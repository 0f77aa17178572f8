//! Causal-break experiment: filter the double-slit state at an intermediate
//! plane, throw away the spatial state, re-prepare a fixed Gaussian and look
//! at a downstream screen. Any dependence of the screen on the filter choice
//! must have been carried by the spin.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::grid::{ScreenDistribution, UniformGrid};
use crate::spin::{JointState, PureJointState, SpinState2};
use crate::wavepacket::{
    spin_averaged_density, time_averaged_density, Branch, DoubleSlitSource, Frame, GaussianEvolution, GaussianPacket,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterFunction {
    pub grid: UniformGrid,
    pub transmission: Vec<f64>,
}

impl FilterFunction {
    pub fn new(grid: UniformGrid, transmission: Vec<f64>) -> Result<Self> {
        ensure(transmission.len() == grid.len(), || {
            Error::GridMismatch(format!("{} transmission values for {} points", transmission.len(), grid.len()))
        })?;
        ensure(transmission.iter().all(|t| (0.0..=1.0).contains(t)), || {
            Error::Domain("filter transmission must lie in [0, 1]".into())
        })?;
        Ok(Self { grid, transmission })
    }

    /// Binary grating: open where `((x − offset)/period) mod 1 < duty`.
    pub fn grating(grid: UniformGrid, period: f64, duty: f64, offset: f64) -> Result<Self> {
        ensure(period > 0.0 && (0.0..=1.0).contains(&duty), || {
            Error::Config(format!("grating needs period > 0 and duty in [0, 1], got {period}, {duty}"))
        })?;
        let t = grid.points().iter().map(|x| if ((x - offset) / period).rem_euclid(1.0) < duty { 1.0 } else { 0.0 }).collect();
        Self::new(grid, t)
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid, transmission: self.transmission.iter().map(|t| 1.0 - t).collect() }
    }

    /// `∫ f ρ dx`.
    pub fn transmitted(&self, density: &[f64]) -> f64 {
        self.transmission.iter().zip(density).map(|(f, p)| f * p).sum::<f64>() * self.grid.step()
    }
}

/// White passes where the up branch is at least as likely as the down branch;
/// black is its complement.
pub fn build_complementary_filters(up: &ScreenDistribution, down: &ScreenDistribution) -> Result<(FilterFunction, FilterFunction)> {
    up.grid.check_matches(&down.grid)?;
    let white = FilterFunction::new(
        up.grid,
        up.density.iter().zip(&down.density).map(|(u, d)| if u >= d { 1.0 } else { 0.0 }).collect(),
    )?;
    let black = white.complement();
    Ok((white, black))
}

/// Spin state conditioned on passing the filter:
/// `ρ ∝ [[|α|²∫f|ψ₋|², αβ*∫f ψ₋ψ₊*], [c.c., |β|²∫f|ψ₊|²]]`, ensemble-weighted.
pub fn postfilter_spin_state(state: &JointState, f: &FilterFunction) -> Result<SpinState2> {
    let members: Vec<(f64, &PureJointState)> = match state {
        JointState::Pure(s) => vec![(1.0, s)],
        JointState::Ensemble(m) => m.iter().map(|(p, s)| (*p, s)).collect(),
    };
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (p, s) in members {
        f.grid.check_matches(&s.grid())?;
        let dx = f.grid.step();
        let (mut uu, mut dd, mut ud) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for (k, w) in f.transmission.iter().enumerate() {
            let (u, d) = (s.up.values[k], s.down.values[k]);
            uu += w * u.norm_sqr();
            dd += w * d.norm_sqr();
            ud += w * u * d.conj();
        }
        let off = p * s.alpha * s.beta.conj() * ud * dx;
        rho[0][0] += p * s.alpha.norm_sqr() * uu * dx;
        rho[1][1] += p * s.beta.norm_sqr() * dd * dx;
        rho[0][1] += off;
        rho[1][0] += off.conj();
    }
    let total = rho[0][0].re + rho[1][1].re;
    ensure(total > 0.0, || Error::FilterBlocked(format!("filter transmits probability {total:e}")))?;
    rho.iter_mut().flatten().for_each(|v| *v /= total);
    SpinState2::new(rho)
}

/// `½ Σ |p − q| Δx`.
pub fn total_variation_distance(p: &ScreenDistribution, q: &ScreenDistribution) -> Result<f64> {
    Ok((0.5 * p.l1_distance(q)?).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    /// Compare the branch densities at the filter plane.
    BranchComparison,
    /// White is the grating, black its complement.
    Grating { period: f64, duty: f64, offset: f64 },
}

/// What the spin carries across the causal break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinMemory {
    Kept,
    /// Populations forced to one half, coherence kept.
    EqualPopulations,
    /// Spin replaced by the maximally mixed state.
    Erased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalBreakConfig {
    pub source: DoubleSlitSource,
    pub z_filter: f64,
    pub z_screen: f64,
    /// Width parameter of the re-prepared packet.
    pub reprep_sigma: f64,
    pub filter: FilterSpec,
    pub memory: SpinMemory,
    /// Whether the branches keep their distinct masses after re-preparation.
    pub downstream_coupling: bool,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl CausalBreakConfig {
    pub fn new(source: DoubleSlitSource, z_filter: f64, z_screen: f64, reprep_sigma: f64) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cfg = Self {
            source,
            z_filter,
            z_screen,
            reprep_sigma,
            filter: FilterSpec::BranchComparison,
            memory: SpinMemory::Kept,
            downstream_coupling: true,
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(s, 0.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Filter at 30 m, screen at 80 m, re-prepared width 1 mm.
    pub fn reference() -> Result<Self> {
        Self::new(DoubleSlitSource::reference()?, 30.0, 80.0, 1e-3)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.z_filter > 0.0 && self.z_screen > self.z_filter, || {
            Error::Config(format!("need 0 < z_filter < z_screen, got {} and {}", self.z_filter, self.z_screen))
        })?;
        ensure(self.reprep_sigma > 0.0, || Error::Config("re-prepared packet width must be positive".into()))?;
        let n = self.alpha.norm_sqr() + self.beta.norm_sqr();
        ensure((n - 1.0).abs() <= 1e-12, || Error::Config(format!("spin amplitudes have norm {n}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterArm {
    pub filter: FilterFunction,
    pub spin: SpinState2,
    /// Spin state fed into the downstream evolution after the memory rule.
    pub carried_spin: SpinState2,
    pub screen: ScreenDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalBreakResult {
    pub white: FilterArm,
    pub black: FilterArm,
    /// Spin-conditional screen densities; identical for both arms.
    pub screen_up: ScreenDistribution,
    pub screen_down: ScreenDistribution,
    pub filter_up: ScreenDistribution,
    pub filter_down: ScreenDistribution,
    pub distinguishability: f64,
}

/// Joint state at the filter plane as an ensemble over the arrival window:
/// member `i` pairs the up branch at its `i`-th window time with the down
/// branch at its own `i`-th time.
pub fn arrival_ensemble(source: &DoubleSlitSource, z: f64, alpha: Complex64, beta: Complex64) -> Result<JointState> {
    let grid = source.screen_grid(z)?;
    let frame = source.frame(z);
    let up_nodes = source.window(z, Branch::Up)?.nodes()?;
    let down_nodes = source.window(z, Branch::Down)?.nodes()?;
    let members = up_nodes
        .iter()
        .zip(&down_nodes)
        .map(|((tu, w), (td, _))| {
            let up = source.branch_field(Branch::Up, *tu, grid, frame)?.normalized()?;
            let down = source.branch_field(Branch::Down, *td, grid, frame)?.normalized()?;
            Ok((*w, PureJointState::new(alpha, beta, up, down)?))
        })
        .collect::<Result<Vec<_>>>()?;
    JointState::ensemble(members)
}

fn carried(spin: &SpinState2, memory: SpinMemory) -> Result<SpinState2> {
    match memory {
        SpinMemory::Kept => Ok(*spin),
        SpinMemory::EqualPopulations => {
            let mut rho = spin.rho;
            rho[0][0] = Complex64::new(0.5, 0.0);
            rho[1][1] = Complex64::new(0.5, 0.0);
            SpinState2::new(rho)
        }
        SpinMemory::Erased => SpinState2::diagonal(0.5),
    }
}

/// Screen densities of the re-prepared packet for each branch, averaged over
/// that branch's arrival window at `z_screen`. Coordinates are relative to
/// the re-preparation point, which sits on the classical trajectory of the
/// nominal mass at `t_f = z_filter m/p_z` and moves with its velocity `−g t_f`.
fn downstream_densities(cfg: &CausalBreakConfig) -> Result<(ScreenDistribution, ScreenDistribution)> {
    let src = if cfg.downstream_coupling { cfg.source.clone() } else { cfg.source.with_delta_e(0.0)? };
    let phys = src.cfg;
    let t_f = phys.flight_time(cfg.z_filter, phys.mass);
    let hbar = phys.hbar();
    let pkt = GaussianPacket::new(cfg.reprep_sigma, -phys.mass * phys.g * t_f, 0.0)?;
    let drop = |tau: f64| -phys.g * t_f * tau - 0.5 * phys.g * tau * tau;
    let (tu, td) = (src.arrival_time(cfg.z_screen, Branch::Up), src.arrival_time(cfg.z_screen, Branch::Down));
    let (cu, cd) = (drop(tu - t_f), drop(td - t_f));
    let spread = |tau: f64| {
        let gamma = hbar * tau / (phys.mass * cfg.reprep_sigma * cfg.reprep_sigma);
        cfg.reprep_sigma * (1.0 + gamma * gamma).sqrt()
    };
    let wu = src.window(cfg.z_screen, Branch::Up)?;
    let wd = src.window(cfg.z_screen, Branch::Down)?;
    let smear = phys.g * (td + wd.delta_t) * wu.delta_t.max(wd.delta_t);
    let half = 0.5 * (cu - cd).abs() + 8.0 * spread(td - t_f + wd.delta_t) + smear;
    let grid = UniformGrid::centered(0.5 * (cu + cd), half, 4097)?;
    let density = |branch: Branch, window: &crate::wavepacket::TimeAverageWindow| {
        let mass = src.mass(branch);
        time_averaged_density(
            |t| Ok(GaussianEvolution::new(pkt, mass, hbar, phys.g, t - t_f, Frame::Lab)?.field(grid).density()),
            window,
            grid,
        )
    };
    Ok((density(Branch::Up, &wu)?, density(Branch::Down, &wd)?))
}

pub fn causal_break_experiment(cfg: &CausalBreakConfig) -> Result<CausalBreakResult> {
    cfg.validate()?;
    let state = arrival_ensemble(&cfg.source, cfg.z_filter, cfg.alpha, cfg.beta)?;
    let JointState::Ensemble(members) = &state else { unreachable!("arrival_ensemble builds an ensemble") };
    let grid = members[0].1.grid();
    let mut up = vec![0.0; grid.len()];
    let mut down = vec![0.0; grid.len()];
    for (p, s) in members {
        up.iter_mut().zip(s.up.density()).for_each(|(a, v)| *a += p * v);
        down.iter_mut().zip(s.down.density()).for_each(|(a, v)| *a += p * v);
    }
    let filter_up = ScreenDistribution::from_unnormalized(grid, up)?;
    let filter_down = ScreenDistribution::from_unnormalized(grid, down)?;
    let (white, black) = match &cfg.filter {
        FilterSpec::BranchComparison => build_complementary_filters(&filter_up, &filter_down)?,
        FilterSpec::Grating { period, duty, offset } => {
            let w = FilterFunction::grating(grid, *period, *duty, *offset)?;
            let b = w.complement();
            (w, b)
        }
    };
    let (screen_up, screen_down) = downstream_densities(cfg)?;
    let arm = |filter: FilterFunction| -> Result<FilterArm> {
        let spin = postfilter_spin_state(&state, &filter)?;
        let carried_spin = carried(&spin, cfg.memory)?;
        let (pu, pd) = carried_spin.populations();
        let screen = spin_averaged_density(&screen_up, &screen_down, pu, pd)?;
        Ok(FilterArm { filter, spin, carried_spin, screen })
    };
    let (white, black) = (arm(white)?, arm(black)?);
    let distinguishability = total_variation_distance(&white.screen, &black.screen)?;
    Ok(CausalBreakResult { white, black, screen_up, screen_down, filter_up, filter_down, distinguishability })
}
