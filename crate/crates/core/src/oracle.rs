//! Split-operator spectral solver for `iħ∂ψ/∂t = −ħ²/2m ∂²ψ/∂x² + m g x ψ`,
//! and the dimensionless units it is run in.
//!
//! Each step is the Strang product `e^{−iVΔt/2ħ} e^{−iTΔt/ħ} e^{−iVΔt/2ħ}`
//! with the kinetic factor applied in Fourier space. An optional absorber
//! adds `−iW(x)` with `W` rising quadratically across the outer bands of the
//! periodic box, so outgoing flux is removed instead of wrapping round.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{ensure, Error, Result};
use crate::grid::{ComplexField1D, UniformGrid};
use crate::propagators::PhysicalConfig;
use crate::slit::SlitGeometry;

pub const MIN_GRID_POINTS: usize = 256;
/// Largest probability allowed in the absorbing band before the run.
pub const MAX_INITIAL_BAND_PROBABILITY: f64 = 1e-8;
/// Largest norm loss tolerated without an absorber.
pub const MAX_UNABSORBED_NORM_LOSS: f64 = 1e-2;

/// Periodic box of `n` points covering `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Grid1D {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        ensure(n >= MIN_GRID_POINTS && n.is_power_of_two(), || {
            Error::Config(format!("oracle grid needs a power of two >= {MIN_GRID_POINTS} points, got {n}"))
        })?;
        ensure(x_min.is_finite() && x_max.is_finite() && x_max > x_min, || {
            Error::Config(format!("oracle grid bounds [{x_min}, {x_max}) invalid"))
        })?;
        Ok(Self { n, x_min, x_max })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    pub fn uniform(&self) -> UniformGrid {
        UniformGrid::periodic(self.x_min, self.x_max, self.n).expect("validated grid")
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..self.n)
            .map(|j| {
                let j = j as isize;
                let j = if j < (self.n / 2) as isize { j } else { j - self.n as isize };
                dk * j as f64
            })
            .collect()
    }
}

/// Imaginary potential `−i·strength·s²` over the outer `fraction` of the box
/// (half on each side), `s ∈ [0, 1]` being the depth into the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub fraction: f64,
    pub strength: f64,
}

impl Absorber {
    /// A 10 % band whose deepest point decays by `e^{−40}` over `duration`.
    pub fn for_duration(duration: f64, hbar: f64) -> Self {
        Self { fraction: 0.1, strength: 40.0 * hbar / duration }
    }

    fn profile(&self, grid: &Grid1D) -> Vec<f64> {
        let width = 0.5 * self.fraction * (grid.x_max - grid.x_min);
        let g = grid.uniform();
        (0..grid.n)
            .map(|k| {
                let x = g.x(k);
                let depth = ((grid.x_min + width - x).max(x - (grid.x_max - width))).max(0.0) / width;
                self.strength * depth * depth
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSpec {
    pub grid: Grid1D,
    pub mass: f64,
    pub g: f64,
    pub hbar: f64,
    pub dt: f64,
    pub steps: usize,
    pub absorber: Option<Absorber>,
}

impl EvolutionSpec {
    /// `ħ Δt k_max² / 2m`, the largest kinetic phase per step.
    pub fn stability_number(&self) -> f64 {
        let k = self.grid.k_max();
        self.hbar * self.dt * k * k / (2.0 * self.mass)
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.mass > 0.0 && self.hbar > 0.0 && self.g.is_finite(), || {
            Error::Config("evolution needs positive mass and hbar and finite g".into())
        })?;
        ensure(self.dt > 0.0 && self.dt.is_finite(), || Error::Config(format!("dt must be positive, got {}", self.dt)))?;
        let s = self.stability_number();
        ensure(s < FRAC_PI_4, || {
            Error::Config(format!("stability number hbar dt k_max^2 / 2m = {s:.4} must stay below pi/4"))
        })?;
        if let Some(abs) = self.absorber {
            ensure(abs.fraction > 0.0 && abs.fraction < 1.0 && abs.strength >= 0.0, || {
                Error::Config(format!("absorber {abs:?} invalid"))
            })?;
        }
        Ok(())
    }
}

pub fn split_step_evolve(psi: &ComplexField1D, spec: &EvolutionSpec) -> Result<ComplexField1D> {
    spec.validate()?;
    let grid = spec.grid;
    psi.grid.check_matches(&grid.uniform())?;
    let n = grid.n;
    let dx = grid.dx();
    let norm0 = psi.norm_sqr();

    let absorb = spec.absorber.map(|a| a.profile(&grid));
    if let Some(w) = &absorb {
        let band: f64 = psi.values.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(v, _)| v.norm_sqr()).sum::<f64>() * dx;
        ensure(band < MAX_INITIAL_BAND_PROBABILITY * norm0.max(f64::MIN_POSITIVE), || {
            Error::Domain(format!("initial state holds {band:e} probability in the absorbing band"))
        })?;
    }

    let (hbar, dt, mass) = (spec.hbar, spec.dt, spec.mass);
    let ugrid = grid.uniform();
    let half_potential: Vec<Complex64> = (0..n)
        .map(|k| {
            let v = mass * spec.g * ugrid.x(k);
            let damp = absorb.as_ref().map_or(0.0, |w| w[k]);
            Complex64::from_polar((-damp * dt / (2.0 * hbar)).exp(), -v * dt / (2.0 * hbar))
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    let kinetic: Vec<Complex64> = grid
        .wavenumbers()
        .into_iter()
        .map(|k| Complex64::from_polar(inv_n, -hbar * k * k * dt / (2.0 * mass)))
        .collect();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];

    let mut buf = psi.values.clone();
    for _ in 0..spec.steps {
        buf.iter_mut().zip(&half_potential).for_each(|(v, p)| *v *= p);
        forward.process_with_scratch(&mut buf, &mut scratch);
        buf.iter_mut().zip(&kinetic).for_each(|(v, p)| *v *= p);
        inverse.process_with_scratch(&mut buf, &mut scratch);
        buf.iter_mut().zip(&half_potential).for_each(|(v, p)| *v *= p);
    }

    let out = ComplexField1D::new(ugrid, buf)?;
    if let Some((k, _)) = out.values.iter().enumerate().find(|(_, v)| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { abscissa: ugrid.x(k), context: "split-step evolution".into() });
    }
    if spec.absorber.is_none() {
        let loss = 1.0 - out.norm_sqr() / norm0;
        ensure(loss.abs() <= MAX_UNABSORBED_NORM_LOSS, || {
            Error::Convergence(format!("split-step norm changed by {loss:e} without absorption"))
        })?;
    }
    Ok(out)
}

/// Conversion factors between SI and the dimensionless problem in which the
/// slit half-width, the particle mass and `ħ` are all one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledUnits {
    pub length: f64,
    pub time: f64,
    pub mass: f64,
}

impl ScaledUnits {
    /// Length unit `length`, time unit `m·length²/ħ`.
    pub fn new(cfg: &PhysicalConfig, length: f64) -> Result<Self> {
        cfg.validate()?;
        ensure(length > 0.0 && length.is_finite(), || Error::Config(format!("length unit {length} invalid")))?;
        Ok(Self { length, time: cfg.mass * length * length / cfg.hbar(), mass: cfg.mass })
    }

    pub fn energy(&self) -> f64 {
        self.mass * self.length * self.length / (self.time * self.time)
    }

    pub fn velocity(&self) -> f64 {
        self.length / self.time
    }

    pub fn acceleration(&self) -> f64 {
        self.length / (self.time * self.time)
    }

    pub fn action(&self) -> f64 {
        self.energy() * self.time
    }

    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.length
    }

    pub fn length_from_si(&self, x: f64) -> f64 {
        x / self.length
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time
    }

    pub fn time_from_si(&self, t: f64) -> f64 {
        t / self.time
    }

    pub fn config_from_si(&self, cfg: &PhysicalConfig) -> PhysicalConfig {
        PhysicalConfig {
            mass: cfg.mass / self.mass,
            g: cfg.g / self.acceleration(),
            h: cfg.h / self.action(),
            c: cfg.c / self.velocity(),
            lambda: cfg.lambda / self.length,
            delta_e: cfg.delta_e / self.energy(),
            rest_mass_phase: cfg.rest_mass_phase,
        }
    }

    pub fn config_to_si(&self, cfg: &PhysicalConfig) -> PhysicalConfig {
        PhysicalConfig {
            mass: cfg.mass * self.mass,
            g: cfg.g * self.acceleration(),
            h: cfg.h * self.action(),
            c: cfg.c * self.velocity(),
            lambda: cfg.lambda * self.length,
            delta_e: cfg.delta_e * self.energy(),
            rest_mass_phase: cfg.rest_mass_phase,
        }
    }

    pub fn geometry_from_si(&self, geom: &SlitGeometry) -> SlitGeometry {
        let s = 1.0 / self.length;
        SlitGeometry { d: geom.d * s, l: geom.l * s, a: geom.a * s, centers: geom.centers.iter().map(|b| b * s).collect() }
    }

    pub fn geometry_to_si(&self, geom: &SlitGeometry) -> SlitGeometry {
        let s = self.length;
        SlitGeometry { d: geom.d * s, l: geom.l * s, a: geom.a * s, centers: geom.centers.iter().map(|b| b * s).collect() }
    }
}

/// Dimensionless version of a slit problem with the half-width as length unit.
pub fn scaled_units(cfg: &PhysicalConfig, geom: &SlitGeometry) -> Result<(PhysicalConfig, SlitGeometry, ScaledUnits)> {
    let units = ScaledUnits::new(cfg, geom.a)?;
    Ok((units.config_from_si(cfg), units.geometry_from_si(geom), units))
}
