//! Gaussian wavepackets, their closed-form evolution, aperture truncation and
//! the screen densities built from them.
//!
//! Packets use `ψ₀(x) = (πσ²)^{−1/4} exp(−(x−x₀)²/2σ² + ip(x−x₀)/ħ)`, whose
//! density has variance `σ²/2`. Free evolution for a time `t` gives, with
//! `γ = ħt/(mσ²)` and `v = p/m`,
//!
//! `ψ(x,t) = (πσ²)^{−1/4} (1+iγ)^{−1/2} exp(−(x−x₀−vt)²/(2σ²(1+iγ)) + ip(x−x₀)/ħ − ip²t/(2mħ))`
//!
//! and a uniform field adds a rigid fall plus a boost:
//! `ψ_g(x,t) = ψ(x + ½gt², t) · exp(−i(mgt/ħ)(x + gt²/6))`.
//!
//! Screen coordinates may be taken in a frame falling with a reference
//! particle released at rest at `t = 0`: `ξ = x + ½g t_ref²`. The lab-frame
//! phases of SI neutron flights reach 1e8 rad, so every term is arranged to
//! combine the large offsets analytically before touching `ξ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::grid::{check_coverage, ComplexField1D, ScreenDistribution, UniformGrid};
use crate::math::{gauss_legendre, samples_for_phase};
use crate::propagators::{branch_masses, BranchMasses, PhysicalConfig};

/// Relative L2 change tolerated between the two quadrature resolutions.
pub const APERTURE_QUADRATURE_TOL: f64 = 1e-4;
/// Half-width of the arrival window in units of the longitudinal spread.
pub const ARRIVAL_WINDOW_SPREADS: f64 = 3.0;
pub const DEFAULT_WINDOW_SAMPLES: usize = 21;

const MIN_APERTURE_SAMPLES: usize = 129;
const RECURRENCE_REFRESH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub sigma: f64,
    pub p: f64,
    pub x0: f64,
}

impl GaussianPacket {
    pub fn new(sigma: f64, p: f64, x0: f64) -> Result<Self> {
        ensure(sigma.is_finite() && sigma > 0.0, || Error::Config(format!("packet sigma must be positive, got {sigma}")))?;
        ensure(p.is_finite() && x0.is_finite(), || Error::Config("packet momentum and centre must be finite".into()))?;
        Ok(Self { sigma, p, x0 })
    }

    pub fn at_rest(sigma: f64) -> Result<Self> {
        Self::new(sigma, 0.0, 0.0)
    }

    pub fn initial_value(&self, x: f64, hbar: f64) -> Complex64 {
        let u = x - self.x0;
        let norm = (PI * self.sigma * self.sigma).powf(-0.25);
        Complex64::from_polar(norm * (-u * u / (2.0 * self.sigma * self.sigma)).exp(), self.p * u / hbar)
    }
}

/// Coordinates in which screen positions are expressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    /// `ξ = x + ½ g t_ref²`, co-moving with a particle dropped from rest at `t = 0`.
    Falling { t_ref: f64 },
}

impl Frame {
    pub fn t_ref(&self) -> f64 {
        match self {
            Frame::Lab => 0.0,
            Frame::Falling { t_ref } => *t_ref,
        }
    }

    /// `½ g (t² − t_ref²)`, the reference-relative drop, formed without cancellation.
    fn relative_drop(&self, g: f64, t: f64) -> f64 {
        let tr = self.t_ref();
        0.5 * g * (t - tr) * (t + tr)
    }

    /// `½ g t_ref²`.
    pub fn offset(&self, g: f64) -> f64 {
        let tr = self.t_ref();
        0.5 * g * tr * tr
    }

    pub fn to_lab(&self, xi: f64, g: f64) -> f64 {
        xi - self.offset(g)
    }
}

pub fn check_packet_coverage(pkt: &GaussianPacket, grid: &UniformGrid) -> Result<()> {
    let lo = pkt.x0 - 4.0 * pkt.sigma;
    let hi = pkt.x0 + 4.0 * pkt.sigma;
    ensure(grid.start() <= lo && grid.end() >= hi, || {
        Error::Coverage(format!(
            "grid [{:e}, {:e}] does not cover x0 ± 4 sigma = [{lo:e}, {hi:e}]",
            grid.start(),
            grid.end()
        ))
    })
}

pub fn gaussian_packet_wavefunction(pkt: &GaussianPacket, grid: UniformGrid, hbar: f64) -> Result<ComplexField1D> {
    check_packet_coverage(pkt, &grid)?;
    ComplexField1D::from_fn(grid, |x| pkt.initial_value(x, hbar)).normalized()
}

/// Closed-form evolution of a packet in a uniform field, evaluated in `frame`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianEvolution {
    pkt: GaussianPacket,
    mass: f64,
    hbar: f64,
    g: f64,
    t: f64,
    frame: Frame,
    prefactor: Complex64,
    spread: Complex64,
}

impl GaussianEvolution {
    pub fn new(pkt: GaussianPacket, mass: f64, hbar: f64, g: f64, t: f64, frame: Frame) -> Result<Self> {
        ensure(t >= 0.0 && t.is_finite(), || Error::Domain(format!("evolution time must be non-negative, got {t}")))?;
        ensure(mass > 0.0 && hbar > 0.0, || Error::Domain("evolution needs positive mass and hbar".into()))?;
        let gamma = hbar * t / (mass * pkt.sigma * pkt.sigma);
        let one_ig = Complex64::new(1.0, gamma);
        let prefactor = (PI * pkt.sigma * pkt.sigma).powf(-0.25) / one_ig.sqrt();
        let spread = (2.0 * pkt.sigma * pkt.sigma * one_ig).inv();
        Ok(Self { pkt, mass, hbar, g, t, frame, prefactor, spread })
    }

    pub fn gamma(&self) -> f64 {
        self.hbar * self.t / (self.mass * self.pkt.sigma * self.pkt.sigma)
    }

    /// Mean position in frame coordinates.
    pub fn mean(&self) -> f64 {
        self.pkt.x0 + self.pkt.p / self.mass * self.t - self.frame.relative_drop(self.g, self.t)
    }

    pub fn value(&self, xi: f64) -> Complex64 {
        let (m, hbar, g, t) = (self.mass, self.hbar, self.g, self.t);
        let v = self.pkt.p / m;
        // y − x₀ − vt with y = x + ½gt² the free-particle argument.
        let u = xi + self.frame.relative_drop(g, t) - self.pkt.x0 - v * t;
        let k0 = self.pkt.p / hbar;
        let boost = m * g * t / hbar;
        let phase = k0 * (u + v * t) - hbar * k0 * k0 * t / (2.0 * m) - boost * xi
            - boost * (g * t * t / 6.0 - self.frame.offset(g));
        self.prefactor * (-(u * u) * self.spread).exp() * Complex64::from_polar(1.0, phase)
    }

    pub fn field(&self, grid: UniformGrid) -> ComplexField1D {
        ComplexField1D::from_fn(grid, |x| self.value(x))
    }
}

pub fn evolve_gaussian_free(pkt: &GaussianPacket, mass: f64, hbar: f64, t: f64, grid: UniformGrid) -> Result<ComplexField1D> {
    Ok(GaussianEvolution::new(*pkt, mass, hbar, 0.0, t, Frame::Lab)?.field(grid))
}

pub fn evolve_gaussian_grav(
    pkt: &GaussianPacket,
    mass: f64,
    cfg: &PhysicalConfig,
    t: f64,
    grid: UniformGrid,
    frame: Frame,
) -> Result<ComplexField1D> {
    Ok(GaussianEvolution::new(*pkt, mass, cfg.hbar(), cfg.g, t, frame)?.field(grid))
}

/// Propagate `pkt` from `t = 0` through the apertures `[lo, hi]` (hard
/// edges, lab coordinates) for a time `t` in the field `cfg.g`, and
/// renormalise by the transmitted probability.
///
/// The kernel phase is split into a part depending only on the arrival point
/// and a coupling `(m/2ħt) x₀² − κ(ξ) x₀`; the aperture integral is a Simpson
/// sum whose resolution follows the largest coupling rate over the grid, and
/// is checked against the half-resolution sum from the same nodes.
pub fn aperture_transmit_evolve(
    pkt: &GaussianPacket,
    apertures: &[(f64, f64)],
    mass: f64,
    cfg: &PhysicalConfig,
    t: f64,
    grid: UniformGrid,
    frame: Frame,
) -> Result<ComplexField1D> {
    ensure(t > 0.0 && t.is_finite(), || Error::Domain(format!("aperture propagation needs t > 0, got {t}")))?;
    ensure(!apertures.is_empty(), || Error::Domain("no apertures".into()))?;
    ensure(apertures.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi), || {
        Error::Domain(format!("invalid apertures {apertures:?}"))
    })?;
    let hbar = cfg.hbar();
    let g = cfg.g;
    let s = frame.offset(g);
    let chirp = mass / (2.0 * hbar * t);
    // κ(ξ) = (m/ħ)(ξ/t + kappa_shift)
    let kappa_shift = frame.relative_drop(g, t) / t;
    let kappa = |xi: f64| mass / hbar * (xi / t + kappa_shift);
    let kappa_max = kappa(grid.start()).abs().max(kappa(grid.end()).abs());

    struct Nodes {
        x: Vec<f64>,
        step: f64,
        fine: Vec<Complex64>,
        coarse: Vec<Complex64>,
    }
    let mut transmitted = 0.0;
    let mut sets = Vec::with_capacity(apertures.len());
    for &(lo, hi) in apertures {
        let reach = lo.abs().max(hi.abs());
        let rate = kappa_max + 2.0 * chirp * reach + (pkt.p / hbar).abs() + reach.max(pkt.x0.abs()) / (pkt.sigma * pkt.sigma);
        let n = 2 * samples_for_phase(hi - lo, rate, MIN_APERTURE_SAMPLES);
        let intervals = (n - 1).div_ceil(4) * 4;
        let h = (hi - lo) / intervals as f64;
        let mut x = Vec::with_capacity(intervals + 1);
        let mut fine = Vec::with_capacity(intervals + 1);
        let mut coarse = Vec::with_capacity(intervals + 1);
        for k in 0..=intervals {
            let x0 = if k == intervals { hi } else { lo + k as f64 * h };
            let psi0 = pkt.initial_value(x0, hbar);
            let wf = if k == 0 || k == intervals { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 } * h / 3.0;
            let wc = if k % 2 == 1 {
                0.0
            } else if k == 0 || k == intervals {
                2.0 * h / 3.0
            } else if (k / 2) % 2 == 1 {
                8.0 * h / 3.0
            } else {
                4.0 * h / 3.0
            };
            transmitted += wf * psi0.norm_sqr();
            let f = psi0 * Complex64::from_polar(1.0, chirp * x0 * x0);
            x.push(x0);
            fine.push(f * wf);
            coarse.push(f * wc);
        }
        sets.push(Nodes { x, step: h, fine, coarse });
    }
    ensure(transmitted > 0.0, || Error::Domain("apertures transmit no probability".into()))?;

    let pref = Complex64::from_polar((mass / (2.0 * PI * hbar * t)).sqrt(), -PI / 4.0) / transmitted.sqrt();
    let linear = 2.0 * s / t + g * t;
    let constant = mass / (2.0 * hbar) * (s * s / t + g * s * t - g * g * t.powi(3) / 12.0);
    let pairs: Vec<(Complex64, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let xi = grid.x(k);
            let kap = kappa(xi);
            let (mut fine, mut coarse) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for set in &sets {
                let stepper = Complex64::from_polar(1.0, -kap * set.step);
                let mut e = Complex64::new(1.0, 0.0);
                for (j, x0) in set.x.iter().enumerate() {
                    if j % RECURRENCE_REFRESH == 0 {
                        e = Complex64::from_polar(1.0, -kap * x0);
                    }
                    fine += set.fine[j] * e;
                    coarse += set.coarse[j] * e;
                    e *= stepper;
                }
            }
            let endpoint = mass / (2.0 * hbar) * (xi * xi / t - xi * linear) + constant;
            let factor = pref * Complex64::from_polar(1.0, endpoint);
            (fine * factor, coarse * factor)
        })
        .collect();
    let (mut diff, mut norm) = (0.0, 0.0);
    for (f, c) in &pairs {
        diff += (f - c).norm_sqr();
        norm += f.norm_sqr();
    }
    let rel = (diff / norm.max(f64::MIN_POSITIVE)).sqrt();
    ensure(rel <= APERTURE_QUADRATURE_TOL, || {
        Error::Convergence(format!("aperture quadrature changes by {rel:e} (relative L2) on halving the resolution"))
    })?;
    ComplexField1D::new(grid, pairs.into_iter().map(|(f, _)| f).collect())
}

/// Single aperture `[b − a, b + a]`, lab coordinates.
pub fn slit_transmit_evolve(
    pkt: &GaussianPacket,
    b: f64,
    a: f64,
    mass: f64,
    cfg: &PhysicalConfig,
    t: f64,
    grid: UniformGrid,
) -> Result<ComplexField1D> {
    ensure(a > 0.0, || Error::Domain(format!("aperture half-width must be positive, got {a}")))?;
    ensure(grid.start() <= b - a && grid.end() >= b + a || t > 0.0, || Error::Domain("aperture outside grid".into()))?;
    aperture_transmit_evolve(pkt, &[(b - a, b + a)], mass, cfg, t, grid, Frame::Lab)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverageWindow {
    pub t_center: f64,
    pub delta_t: f64,
    pub n_samples: usize,
}

impl TimeAverageWindow {
    pub fn new(t_center: f64, delta_t: f64, n_samples: usize) -> Result<Self> {
        ensure(t_center.is_finite() && delta_t.is_finite() && delta_t > 0.0, || {
            Error::Config(format!("time window needs delta_t > 0, got {delta_t}"))
        })?;
        ensure(n_samples >= 3 && n_samples % 2 == 1, || {
            Error::Config(format!("time window needs an odd sample count >= 3, got {n_samples}"))
        })?;
        Ok(Self { t_center, delta_t, n_samples })
    }

    /// Gauss–Legendre times and weights normalised to sum to one.
    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        Ok(gauss_legendre(self.n_samples)?
            .into_iter()
            .map(|(u, w)| (self.t_center + self.delta_t * u, 0.5 * w))
            .collect())
    }
}

/// `(1/2Δt) ∫ ρ(x, t) dt` over the window by Gauss–Legendre quadrature.
pub fn time_averaged_density<F>(density_at: F, window: &TimeAverageWindow, grid: UniformGrid) -> Result<ScreenDistribution>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let nodes = window.nodes()?;
    let samples = nodes.par_iter().map(|(t, _)| density_at(*t)).collect::<Result<Vec<_>>>()?;
    let mut acc = vec![0.0; grid.len()];
    for ((_, w), rho) in nodes.iter().zip(&samples) {
        ensure(rho.len() == grid.len(), || Error::GridMismatch(format!("{} samples for {} points", rho.len(), grid.len())))?;
        acc.iter_mut().zip(rho).for_each(|(a, r)| *a += w * r);
    }
    ScreenDistribution::from_unnormalized(grid, acc)
}

pub fn spin_averaged_density(
    up: &ScreenDistribution,
    down: &ScreenDistribution,
    alpha2: f64,
    beta2: f64,
) -> Result<ScreenDistribution> {
    ensure((alpha2 + beta2 - 1.0).abs() <= 1e-12 && alpha2 >= 0.0 && beta2 >= 0.0, || {
        Error::Domain(format!("spin weights {alpha2} + {beta2} must be a probability pair"))
    })?;
    up.grid.check_matches(&down.grid)?;
    let density = up.density.iter().zip(&down.density).map(|(u, d)| alpha2 * u + beta2 * d).collect();
    Ok(ScreenDistribution { grid: up.grid, density })
}

/// Contrast `(I_max − I_min)/(I_max + I_min)` inside `centroid ± window_halfwidth`,
/// with `I_max` the larger of the two highest local maxima and `I_min` the
/// lowest local minimum between them.
pub fn fringe_visibility(d: &ScreenDistribution, window_halfwidth: f64) -> Result<f64> {
    ensure(window_halfwidth > 0.0, || Error::Domain("visibility window must be positive".into()))?;
    let c = d.mean();
    let g = d.grid;
    let ks: Vec<usize> = (1..g.len() - 1).filter(|&k| (g.x(k) - c).abs() <= window_halfwidth).collect();
    let p = &d.density;
    let maxima: Vec<usize> = ks.iter().copied().filter(|&k| p[k] > p[k - 1] && p[k] >= p[k + 1]).collect();
    let minima: Vec<usize> = ks.iter().copied().filter(|&k| p[k] < p[k - 1] && p[k] <= p[k + 1]).collect();
    ensure(maxima.len() >= 2 && maxima.len() + minima.len() >= 3, || {
        Error::VisibilityUndefined(format!("{} maxima and {} minima in the window", maxima.len(), minima.len()))
    })?;
    let mut ranked = maxima.clone();
    ranked.sort_by(|a, b| p[*b].total_cmp(&p[*a]).then(a.cmp(b)));
    let (k1, k2) = (ranked[0].min(ranked[1]), ranked[0].max(ranked[1]));
    let i_max = p[ranked[0]];
    let i_min = minima
        .iter()
        .filter(|&&k| k > k1 && k < k2)
        .map(|&k| p[k])
        .fold(f64::INFINITY, f64::min);
    ensure(i_min.is_finite(), || Error::VisibilityUndefined("no minimum between the two largest maxima".into()))?;
    Ok((i_max - i_min) / (i_max + i_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Lower internal energy, mass `m_minus`.
    Up,
    /// Higher internal energy, mass `m_plus`.
    Down,
}

/// Half slit separation `b` that puts the first visibility minimum at `z`:
/// the branches arrive `½g(t₊² − t₋²) = g z² ΔE/(m c² v_z²)` apart and the
/// fringes are `λz/2b` apart, so the minimum sits where the former is half
/// the latter.
pub fn calibrated_half_separation(cfg: &PhysicalConfig, z_first_minimum: f64) -> Result<f64> {
    cfg.validate()?;
    ensure(cfg.g > 0.0 && cfg.delta_e > 0.0 && z_first_minimum > 0.0, || {
        Error::Config("calibration needs g > 0, delta_e > 0 and a positive distance".into())
    })?;
    let vz = cfg.longitudinal_momentum() / cfg.mass;
    Ok(cfg.lambda * cfg.mass * cfg.c * cfg.c * vz * vz / (4.0 * cfg.g * z_first_minimum * cfg.delta_e))
}

/// A transverse Gaussian packet released at the plane of two slits at `±b`,
/// split into spin branches with masses `m∓`, each reaching the screen at
/// `z` after `t = z m / p_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitSource {
    pub cfg: PhysicalConfig,
    pub a: f64,
    pub b: f64,
    pub packet: GaussianPacket,
    /// Longitudinal width parameter of the packet.
    pub sigma_z: f64,
    pub window_samples: usize,
    pub masses: BranchMasses,
    /// Screen half-width in diffraction envelopes `λz/2a`.
    pub envelopes: f64,
}

pub const DEFAULT_Z_FIRST_MINIMUM: f64 = 31.0;

impl DoubleSlitSource {
    pub fn new(cfg: PhysicalConfig, a: f64, b: f64, packet: GaussianPacket, sigma_z: f64, window_samples: usize) -> Result<Self> {
        cfg.validate()?;
        ensure(a > 0.0 && b > a, || Error::Config(format!("need 0 < a < b, got a = {a}, b = {b}")))?;
        ensure(sigma_z > 0.0, || Error::Config(format!("sigma_z must be positive, got {sigma_z}")))?;
        TimeAverageWindow::new(1.0, 1.0, window_samples)?;
        Ok(Self { masses: branch_masses(&cfg)?, cfg, a, b, packet, sigma_z, window_samples, envelopes: 6.0 })
    }

    /// Geometry placing the first visibility minimum at `z_first_minimum`:
    /// `a = b/4`, an illuminating packet of width `5b`, and the longitudinal
    /// width that minimises the spread at that distance.
    pub fn calibrated(cfg: PhysicalConfig, z_first_minimum: f64) -> Result<Self> {
        let b = calibrated_half_separation(&cfg, z_first_minimum)?;
        let t = cfg.flight_time(z_first_minimum, cfg.mass);
        let sigma_z = (cfg.hbar() * t / cfg.mass).sqrt();
        Self::new(cfg, 0.25 * b, b, GaussianPacket::at_rest(5.0 * b)?, sigma_z, DEFAULT_WINDOW_SAMPLES)
    }

    /// Neutron, `g = 9.8`, `λ = 1e-8 m`, `ΔE = 1e-14 J`.
    pub fn reference() -> Result<Self> {
        Self::calibrated(PhysicalConfig::neutron(9.8, 1e-8, 1e-14)?, DEFAULT_Z_FIRST_MINIMUM)
    }

    /// Exchange the branch masses (fault injection).
    pub fn with_swapped_branches(mut self) -> Self {
        self.masses = self.masses.swapped();
        self
    }

    pub fn with_delta_e(&self, delta_e: f64) -> Result<Self> {
        let cfg = self.cfg.with_delta_e(delta_e);
        cfg.validate()?;
        Ok(Self { cfg, masses: branch_masses(&cfg)?, ..self.clone() })
    }

    pub fn mass(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Up => self.masses.up(),
            Branch::Down => self.masses.down(),
        }
    }

    pub fn arrival_time(&self, z: f64, branch: Branch) -> f64 {
        self.cfg.flight_time(z, self.mass(branch))
    }

    pub fn fringe_spacing(&self, z: f64) -> f64 {
        self.cfg.lambda * z / (2.0 * self.b)
    }

    /// Classical offset of the down branch below the up branch at `z`.
    pub fn branch_separation(&self, z: f64) -> f64 {
        let (tu, td) = (self.arrival_time(z, Branch::Up), self.arrival_time(z, Branch::Down));
        0.5 * self.cfg.g * (td - tu) * (td + tu)
    }

    /// Frame falling with a classical particle of mass `m_minus` that reaches `z`.
    pub fn frame(&self, z: f64) -> Frame {
        Frame::Falling { t_ref: self.cfg.flight_time(z, self.masses.m_minus) }
    }

    pub fn screen_grid(&self, z: f64) -> Result<UniformGrid> {
        ensure(z > 0.0 && z.is_finite(), || Error::Domain(format!("screen distance must be positive, got {z}")))?;
        let envelope = self.cfg.lambda * z / (2.0 * self.a);
        let sep = self.branch_separation(z);
        let half = self.envelopes * envelope + 0.5 * sep.abs() + self.b;
        let n = ((2.0 * half * 32.0 / self.fringe_spacing(z)).ceil() as usize + 1).max(1024);
        UniformGrid::centered(-0.5 * sep, half, n)
    }

    pub fn window(&self, z: f64, branch: Branch) -> Result<TimeAverageWindow> {
        let t = self.arrival_time(z, branch);
        let m = self.cfg.mass;
        let gamma = self.cfg.hbar() * t / (m * self.sigma_z * self.sigma_z);
        let spread = self.sigma_z / 2f64.sqrt() * (1.0 + gamma * gamma).sqrt();
        let vz = self.cfg.longitudinal_momentum() / m;
        TimeAverageWindow::new(t, ARRIVAL_WINDOW_SPREADS * spread / vz, self.window_samples)
    }

    fn apertures(&self) -> [(f64, f64); 2] {
        [(-self.b - self.a, -self.b + self.a), (self.b - self.a, self.b + self.a)]
    }

    /// Branch wavefunction at time `t` on `grid` in `frame`.
    pub fn branch_field(&self, branch: Branch, t: f64, grid: UniformGrid, frame: Frame) -> Result<ComplexField1D> {
        aperture_transmit_evolve(&self.packet, &self.apertures(), self.mass(branch), &self.cfg, t, grid, frame)
    }

    /// Both branches at their own arrival times at `z`.
    pub fn arrival_fields(&self, z: f64) -> Result<(ComplexField1D, ComplexField1D)> {
        let grid = self.screen_grid(z)?;
        let frame = self.frame(z);
        let up = self.branch_field(Branch::Up, self.arrival_time(z, Branch::Up), grid, frame)?;
        let down = self.branch_field(Branch::Down, self.arrival_time(z, Branch::Down), grid, frame)?;
        Ok((up, down))
    }

    /// Arrival-window average of one branch's density at `z`.
    pub fn averaged_density(&self, z: f64, branch: Branch) -> Result<ScreenDistribution> {
        let grid = self.screen_grid(z)?;
        let frame = self.frame(z);
        let window = self.window(z, branch)?;
        let d = time_averaged_density(|t| Ok(self.branch_field(branch, t, grid, frame)?.density()), &window, grid)?;
        check_coverage(&d, "branch density")?;
        Ok(d)
    }

    pub fn screen(&self, z: f64) -> Result<ScreenSlice> {
        let up = self.averaged_density(z, Branch::Up)?;
        let down = self.averaged_density(z, Branch::Down)?;
        let averaged = spin_averaged_density(&up, &down, 0.5, 0.5)?;
        let visibility = fringe_visibility(&averaged, 2.0 * self.fringe_spacing(z));
        let (arrival_overlap, overlap) = self.branch_overlaps(z)?;
        Ok(ScreenSlice { z, up, down, averaged, visibility, overlap, arrival_overlap })
    }

    /// `⟨ψ_down|ψ_up⟩` at the arrival times, first as computed and then with
    /// the relative transverse wavevector of the two branches removed.
    ///
    /// A classical branch trajectory from the slit plane reaching the frame
    /// origin at `t_j` has wavevector `k_j = −(m_j/ħ)(s/t_j + g t_j/2)` there,
    /// `s` being the frame offset. The branches therefore differ by a uniform
    /// `k_up − k_down ≈ g t Δm/ħ`. A uniform wavevector leaves the densities
    /// untouched but suppresses the raw overlap wherever the slit
    /// autocorrelation vanishes, so the raw value does not follow the
    /// fringe contrast.
    pub fn branch_overlaps(&self, z: f64) -> Result<(Complex64, Complex64)> {
        let (up, down) = self.arrival_fields(z)?;
        // Normalized to the mass captured on the screen grid.
        let scale = (up.norm_sqr() * down.norm_sqr()).sqrt();
        let raw = down.inner(&up)? / scale;
        let dk = self.relative_wavevector(z);
        let grid = up.grid;
        let sum: Complex64 = (0..grid.len())
            .map(|k| down.values[k].conj() * up.values[k] * Complex64::from_polar(1.0, -dk * grid.x(k)))
            .sum();
        Ok((raw, sum * grid.step() / scale))
    }

    /// `k_up − k_down` at the origin of [`Self::frame`].
    pub fn relative_wavevector(&self, z: f64) -> f64 {
        let g = self.cfg.g;
        let s = self.frame(z).offset(g);
        let (mu, md) = (self.mass(Branch::Up), self.mass(Branch::Down));
        let (tu, td) = (self.arrival_time(z, Branch::Up), self.arrival_time(z, Branch::Down));
        (s * (md / td - mu / tu) + 0.5 * g * (md * td - mu * tu)) / self.cfg.hbar()
    }
}

/// Screen densities at one distance.
#[derive(Debug, Clone)]
pub struct ScreenSlice {
    pub z: f64,
    pub up: ScreenDistribution,
    pub down: ScreenDistribution,
    pub averaged: ScreenDistribution,
    pub visibility: Result<f64>,
    /// Branch overlap with the relative transverse wavevector removed; tracks the contrast.
    pub overlap: Complex64,
    /// Raw `⟨ψ_down|ψ_up⟩` of the branches at their arrival times.
    pub arrival_overlap: Complex64,
}
