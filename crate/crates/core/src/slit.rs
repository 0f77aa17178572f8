//! Point-source slit diffraction in uniform gravity.
//!
//! A point source at height 0 emits at `t = 0`; the particle reaches the slit
//! plane after `T = mλD/h` and the screen after a further `τ = mλL/h`. The
//! screen amplitude behind a slit `[b − a, b + a]` is
//!
//! `ψ(x) = e^{iφ(x)} / (2i √(ηa)) · {C(σ₊) − C(σ₋) + i S(σ₊) − i S(σ₋)}`
//!
//! with `η = 1 + L/D` and
//! `σ± = √(2η/(λL)) {(b ± a) − x/η − ½ g m² λ² D L / h²}`.
//! Gravity enters `σ±` only as a constant shift, so the whole pattern is
//! translated by [`classical_displacement`] and otherwise unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::grid::{check_coverage, ComplexField1D, UniformGrid};
use crate::math::fresnel;
use crate::propagators::PhysicalConfig;

pub type ScreenWavefunction = ComplexField1D;

/// Largest accepted `λ / min(D, L)`.
pub const MAX_WAVELENGTH_RATIO: f64 = 1e-3;
/// Largest accepted `(|b| + a) / min(D, L)`.
pub const MAX_APERTURE_RATIO: f64 = 1e-2;
/// Pointwise relative tolerance of the free-fall check.
pub const FREEFALL_RTOL: f64 = 1e-9;
/// Densities below this fraction of the peak are compared against the floor
/// rather than their own value (relative error is meaningless at exact zeros).
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Largest probability the screen grid may miss.
pub const MAX_LOST_PROBABILITY: f64 = 0.05;

const ENVELOPE_WIDTHS: f64 = 12.0;
const MIN_SCREEN_SAMPLES: usize = 2048;
const SAMPLES_PER_FRINGE: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SlitGeometry {
    /// Source to slit plane.
    pub d: f64,
    /// Slit plane to screen.
    pub l: f64,
    /// Slit half-width.
    pub a: f64,
    pub centers: Vec<f64>,
}

impl SlitGeometry {
    pub fn new(d: f64, l: f64, a: f64, centers: Vec<f64>) -> Result<Self> {
        let geom = Self { d, l, a, centers };
        geom.check_structure()?;
        Ok(geom)
    }

    pub fn single(d: f64, l: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(d, l, a, vec![b])
    }

    /// Two slits at `±b`.
    pub fn double(d: f64, l: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(d, l, a, vec![-b, b])
    }

    fn check_structure(&self) -> Result<()> {
        ensure(self.d.is_finite() && self.d > 0.0, || Error::Config(format!("D must be positive, got {}", self.d)))?;
        ensure(self.l.is_finite() && self.l > 0.0, || Error::Config(format!("L must be positive, got {}", self.l)))?;
        ensure(self.a.is_finite() && self.a > 0.0, || Error::Config(format!("a must be positive, got {}", self.a)))?;
        ensure(!self.centers.is_empty(), || Error::Config("no slit centres".into()))?;
        ensure(self.centers.iter().all(|b| b.is_finite()), || Error::Config("non-finite slit centre".into()))?;
        for (i, bi) in self.centers.iter().enumerate() {
            for bj in &self.centers[i + 1..] {
                ensure((bi - bj).abs() > 2.0 * self.a, || {
                    Error::Config(format!("slits at {bi} and {bj} overlap for half-width {}", self.a))
                })?;
            }
        }
        Ok(())
    }

    /// Structural invariants plus the semi-classical validity limits.
    pub fn validate(&self, cfg: &PhysicalConfig) -> Result<()> {
        self.check_structure()?;
        cfg.validate()?;
        let short = self.d.min(self.l);
        ensure(cfg.lambda / short <= MAX_WAVELENGTH_RATIO, || {
            Error::Config(format!("lambda / min(D, L) = {:e} exceeds {MAX_WAVELENGTH_RATIO:e}", cfg.lambda / short))
        })?;
        let reach = self.centers.iter().map(|b| b.abs()).fold(0.0, f64::max) + self.a;
        ensure(reach / short <= MAX_APERTURE_RATIO, || {
            Error::Config(format!("(|b| + a) / min(D, L) = {:e} exceeds {MAX_APERTURE_RATIO:e}", reach / short))
        })
    }

    pub fn eta(&self) -> f64 {
        1.0 + self.l / self.d
    }

    pub fn with_l(&self, l: f64) -> Self {
        Self { l, ..self.clone() }
    }

    pub fn with_centers(&self, centers: Vec<f64>) -> Self {
        Self { centers, ..self.clone() }
    }

    fn center_span(&self) -> (f64, f64) {
        let lo = self.centers.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// `b + a`
    Upper,
    /// `b − a`
    Lower,
}

/// `½ g m² λ² D L / h²`, the constant gravitational shift inside `σ±`.
pub fn fall_term(geom: &SlitGeometry, cfg: &PhysicalConfig) -> f64 {
    let r = cfg.mass * cfg.lambda / cfg.h;
    0.5 * cfg.g * r * r * geom.d * geom.l
}

pub fn sigma_pm(x: f64, b: f64, edge: Edge, geom: &SlitGeometry, cfg: &PhysicalConfig) -> f64 {
    sigma_at_offset(x - classical_displacement(geom, cfg), b, edge, geom, cfg)
}

/// `σ±` at `x = x_c + offset`; `x/η + fall = offset/η`.
fn sigma_at_offset(offset: f64, b: f64, edge: Edge, geom: &SlitGeometry, cfg: &PhysicalConfig) -> f64 {
    let eta = geom.eta();
    let edge_pos = match edge {
        Edge::Upper => b + geom.a,
        Edge::Lower => b - geom.a,
    };
    (2.0 * eta / (cfg.lambda * geom.l)).sqrt() * (edge_pos - offset / eta)
}

/// The slit-independent phase `φ(x)`.
pub fn phase_phi(x: f64, geom: &SlitGeometry, cfg: &PhysicalConfig) -> f64 {
    let (m, lam, h, g) = (cfg.mass, cfg.lambda, cfg.h, cfg.g);
    let dl = geom.d + geom.l;
    let r = m * lam / h;
    PI * (x * x / (lam * dl) - m * g * x * lam * dl / (h * h)
        - g * g / 12.0 * r.powi(4) / lam * dl * (geom.d - geom.l).powi(2))
}

/// `x_c = −(g m² λ² / 2h²)(L² + LD)`.
pub fn classical_displacement(geom: &SlitGeometry, cfg: &PhysicalConfig) -> f64 {
    let r = cfg.mass * cfg.lambda / cfg.h;
    -0.5 * cfg.g * r * r * (geom.l * geom.l + geom.l * geom.d)
}

/// Fringe spacing `λL / s` for the widest pair of slits `s` apart, or `None`
/// for a single slit.
pub fn fringe_spacing(geom: &SlitGeometry, cfg: &PhysicalConfig) -> Option<f64> {
    let (lo, hi) = geom.center_span();
    (geom.centers.len() >= 2).then(|| cfg.lambda * geom.l / (hi - lo))
}

/// Default screen grid: centred on the classically displaced image of the
/// slits, wide enough for twelve diffraction envelopes, and fine enough for
/// 32 samples per fringe.
pub fn screen_grid(geom: &SlitGeometry, cfg: &PhysicalConfig) -> Result<UniformGrid> {
    geom.validate(cfg)?;
    let eta = geom.eta();
    let (lo, hi) = geom.center_span();
    let center = classical_displacement(geom, cfg) + eta * 0.5 * (lo + hi);
    let envelope = cfg.lambda * geom.l / (2.0 * geom.a);
    let half = ENVELOPE_WIDTHS * envelope * eta + eta * (0.5 * (hi - lo) + geom.a);
    let spacing = fringe_spacing(geom, cfg).unwrap_or(envelope);
    let wanted = (2.0 * half * SAMPLES_PER_FRINGE / spacing).ceil() as usize + 1;
    UniformGrid::centered(center, half, wanted.max(MIN_SCREEN_SAMPLES))
}

/// Whether the common phase `φ(x)` is attached to the amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommonPhase {
    Include,
    Drop,
}

/// Unnormalised single-slit amplitude without `e^{iφ}`; analytically of unit norm.
fn slit_amplitude(offset: f64, b: f64, geom: &SlitGeometry, cfg: &PhysicalConfig) -> Result<Complex64> {
    let hi = fresnel(sigma_at_offset(offset, b, Edge::Upper, geom, cfg))?;
    let lo = fresnel(sigma_at_offset(offset, b, Edge::Lower, geom, cfg))?;
    let bracket = hi.as_complex() - lo.as_complex();
    Ok(bracket / Complex64::new(0.0, 2.0 * (geom.eta() * geom.a).sqrt()))
}

fn superposed(geom: &SlitGeometry, cfg: &PhysicalConfig, grid: UniformGrid, phase: CommonPhase) -> Result<ScreenWavefunction> {
    geom.validate(cfg)?;
    // Offsets from x_c are formed before adding k·step so that a large fall
    // does not cost precision relative to the slit width.
    let origin = grid.start() - classical_displacement(geom, cfg);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.x(k);
            let offset = origin + k as f64 * grid.step();
            let mut sum = Complex64::new(0.0, 0.0);
            for &b in &geom.centers {
                sum += slit_amplitude(offset, b, geom, cfg)?;
            }
            let v = match phase {
                CommonPhase::Include => sum * Complex64::from_polar(1.0, phase_phi(x, geom, cfg)),
                CommonPhase::Drop => sum,
            };
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { abscissa: x, context: "screen amplitude".into() })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let field = ComplexField1D::new(grid, values)?;
    // Disjoint apertures evolve into orthogonal states, so the exact norm is N.
    let captured = field.norm_sqr() / geom.centers.len() as f64;
    ensure(captured >= 1.0 - MAX_LOST_PROBABILITY, || {
        Error::Coverage(format!("screen grid captures only {:.2}% of the probability", 100.0 * captured))
    })?;
    check_coverage(&field.to_distribution()?, "screen pattern")?;
    field.normalized()
}

pub fn single_slit_wavefunction(b: f64, geom: &SlitGeometry, cfg: &PhysicalConfig, grid: UniformGrid) -> Result<ScreenWavefunction> {
    let single = geom.with_centers(vec![b]);
    superposed(&single, cfg, grid, CommonPhase::Include)
}

/// Equal-weight superposition over all slit centres, normalised on the grid.
pub fn multi_slit_wavefunction(geom: &SlitGeometry, cfg: &PhysicalConfig, grid: UniformGrid) -> Result<ScreenWavefunction> {
    superposed(geom, cfg, grid, CommonPhase::Include)
}

pub fn multi_slit_wavefunction_with(
    geom: &SlitGeometry,
    cfg: &PhysicalConfig,
    grid: UniformGrid,
    phase: CommonPhase,
) -> Result<ScreenWavefunction> {
    superposed(geom, cfg, grid, phase)
}

/// Largest `|p − q| / max(p, q, floor)` with `floor = RELATIVE_FLOOR · peak`.
pub fn pointwise_relative_error(p: &[f64], q: &[f64]) -> f64 {
    let peak = p.iter().chain(q).copied().fold(0.0, f64::max);
    let floor = RELATIVE_FLOOR * peak;
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs() / a.max(*b).max(floor))
        .fold(0.0, f64::max)
}

/// Relabel the screen coordinate of `w` (the superposition over all slits of
/// `geom`) as `ξ = x − x_c` and check it against the `g = 0` pattern.
pub fn freefall_transform(w: &ScreenWavefunction, geom: &SlitGeometry, cfg: &PhysicalConfig) -> Result<ScreenWavefunction> {
    let xc = classical_displacement(geom, cfg);
    let moved = ComplexField1D::new(w.grid.shifted(-xc), w.values.clone())?;
    let reference = multi_slit_wavefunction_with(geom, &cfg.with_g(0.0), moved.grid, CommonPhase::Drop)?;
    let err = pointwise_relative_error(&moved.density(), &reference.density());
    ensure(err < FREEFALL_RTOL, || {
        Error::Invariant(format!("free-fall frame pattern differs from g = 0 by {err:e} (relative)"))
    })?;
    Ok(moved)
}
