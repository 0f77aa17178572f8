//! Closed-form propagators in a uniform gravitational field.
//!
//! Gravity points along −x. The propagator of a particle of mass `m` between
//! `(x, t)` and `(x′, t′)` is `exp(i S_cl / ħ) / sqrt(2πiħΔt/m)`, with the
//! classical action
//!
//! `S_cl = (m/2) [ (x′−x)²/Δt − g (x + x′) Δt − g² Δt³ / 12 ]`.
//!
//! A spin-½ particle with internal splitting `ΔE` carries the mass operator
//! `diag(m − ΔE/2c², m + ΔE/2c²)`; since every term of the Lagrangian commutes
//! with it, the spin-matrix propagator is the diagonal pair of scalar
//! propagators with those branch masses.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

/// CODATA 2018 exact / recommended values (SI).
pub mod codata {
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const STANDARD_GRAVITY: f64 = 9.806_65;
    pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;
}

/// Largest accepted `ΔE / (m c²)`; beyond it the first-order mass expansion is
/// not trusted.
pub const MAX_INTERNAL_ENERGY_RATIO: f64 = 1e-2;

/// Physical parameters and unit conventions. Everything is SI unless the
/// caller works in scaled units consistently (see [`crate::oracle::ScaledUnits`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    pub mass: f64,
    pub g: f64,
    pub h: f64,
    pub c: f64,
    /// de Broglie wavelength of the longitudinal motion.
    pub lambda: f64,
    /// Internal energy splitting `μB`.
    pub delta_e: f64,
    /// Carry the relative rest-mass phase `exp(−iΔE t/ħ)` on the spin-down branch.
    pub rest_mass_phase: bool,
}

impl PhysicalConfig {
    pub fn new(mass: f64, g: f64, h: f64, c: f64, lambda: f64, delta_e: f64) -> Result<Self> {
        let cfg = Self { mass, g, h, c, lambda, delta_e, rest_mass_phase: true };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A neutron with CODATA constants.
    pub fn neutron(g: f64, lambda: f64, delta_e: f64) -> Result<Self> {
        Self::new(codata::NEUTRON_MASS, g, codata::PLANCK, codata::SPEED_OF_LIGHT, lambda, delta_e)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mass, self.g, self.h, self.c, self.lambda, self.delta_e];
        ensure(all.iter().all(|v| v.is_finite()), || Error::Config(format!("non-finite parameter in {self:?}")))?;
        ensure(self.mass > 0.0, || Error::Config(format!("mass must be positive, got {}", self.mass)))?;
        ensure(self.g >= 0.0, || Error::Config(format!("g must be non-negative, got {}", self.g)))?;
        ensure(self.h > 0.0, || Error::Config(format!("h must be positive, got {}", self.h)))?;
        ensure(self.c > 0.0, || Error::Config(format!("c must be positive, got {}", self.c)))?;
        ensure(self.lambda > 0.0, || Error::Config(format!("lambda must be positive, got {}", self.lambda)))?;
        ensure(self.delta_e >= 0.0, || Error::Config(format!("delta_e must be non-negative, got {}", self.delta_e)))?;
        let ratio = self.internal_energy_ratio();
        ensure(ratio <= MAX_INTERNAL_ENERGY_RATIO, || {
            Error::Config(format!("delta_e / (m c^2) = {ratio:e} exceeds {MAX_INTERNAL_ENERGY_RATIO:e}"))
        })
    }

    pub fn hbar(&self) -> f64 {
        self.h / (2.0 * PI)
    }

    pub fn internal_energy_ratio(&self) -> f64 {
        self.delta_e / (self.mass * self.c * self.c)
    }

    /// Longitudinal momentum `h / λ`, shared by both spin branches.
    pub fn longitudinal_momentum(&self) -> f64 {
        self.h / self.lambda
    }

    /// Semi-classical time for a particle of mass `mass` to cover `z`.
    pub fn flight_time(&self, z: f64, mass: f64) -> f64 {
        z * mass / self.longitudinal_momentum()
    }

    pub fn with_g(self, g: f64) -> Self {
        Self { g, ..self }
    }

    pub fn with_delta_e(self, delta_e: f64) -> Self {
        Self { delta_e, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub x: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: f64, t: f64) -> Self {
        Self { x, t }
    }
}

fn elapsed(from: SpacetimePoint, to: SpacetimePoint) -> Result<f64> {
    ensure(from.x.is_finite() && from.t.is_finite() && to.x.is_finite() && to.t.is_finite(), || {
        Error::Domain(format!("non-finite spacetime point {from:?} -> {to:?}"))
    })?;
    let dt = to.t - from.t;
    ensure(dt > 0.0, || Error::Domain(format!("propagation needs t' > t, got dt = {dt:e}")))?;
    Ok(dt)
}

/// Masses of the two internal-energy branches. Spin-up is the lower-energy
/// state and carries `m_minus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMasses {
    pub m_minus: f64,
    pub m_plus: f64,
}

impl BranchMasses {
    /// Exchange the branch assignment (fault injection for the verifier).
    pub fn swapped(self) -> Self {
        Self { m_minus: self.m_plus, m_plus: self.m_minus }
    }

    pub fn up(&self) -> f64 {
        self.m_minus
    }

    pub fn down(&self) -> f64 {
        self.m_plus
    }
}

pub fn branch_masses(cfg: &PhysicalConfig) -> Result<BranchMasses> {
    cfg.validate()?;
    let shift = cfg.delta_e / (2.0 * cfg.c * cfg.c);
    Ok(BranchMasses { m_minus: cfg.mass - shift, m_plus: cfg.mass + shift })
}

pub fn classical_action(from: SpacetimePoint, to: SpacetimePoint, cfg: &PhysicalConfig, mass: f64) -> Result<f64> {
    action_in_field(from, to, cfg.g, mass)
}

/// Classical action for an explicit field strength.
pub fn action_in_field(from: SpacetimePoint, to: SpacetimePoint, g: f64, mass: f64) -> Result<f64> {
    let dt = elapsed(from, to)?;
    let dx = to.x - from.x;
    Ok(0.5 * mass * (dx * dx / dt - g * (from.x + to.x) * dt - g * g * dt.powi(3) / 12.0))
}

/// `1 / sqrt(2πiħΔt/m)` on the principal branch, `1/√i = e^{−iπ/4}`.
fn prefactor(mass: f64, hbar: f64, dt: f64) -> Complex64 {
    Complex64::from_polar((mass / (2.0 * PI * hbar * dt)).sqrt(), -FRAC_PI_4)
}

pub fn free_propagator(from: SpacetimePoint, to: SpacetimePoint, mass: f64, cfg: &PhysicalConfig) -> Result<Complex64> {
    let dt = elapsed(from, to)?;
    let hbar = cfg.hbar();
    let dx = to.x - from.x;
    let phase = mass * dx * dx / (2.0 * hbar * dt);
    Ok(prefactor(mass, hbar, dt) * Complex64::from_polar(1.0, phase))
}

pub fn grav_propagator(from: SpacetimePoint, to: SpacetimePoint, mass: f64, cfg: &PhysicalConfig) -> Result<Complex64> {
    let dt = elapsed(from, to)?;
    let action = classical_action(from, to, cfg, mass)?;
    let hbar = cfg.hbar();
    Ok(prefactor(mass, hbar, dt) * Complex64::from_polar(1.0, action / hbar))
}

/// The gravitational propagator for a fixed elapsed time, with its phase
/// split into a part depending only on the arrival point and a coupling part.
///
/// `S/ħ = endpoint_phase(x′) + coupling_phase(x, x′)`. When a source is
/// integrated against the kernel the endpoint phase factors out of the
/// integral, which keeps the integrand phase small even when the absolute
/// action is of order 1e8 rad (SI neutron flights of metres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityKernel {
    pub mass: f64,
    pub g: f64,
    pub hbar: f64,
    pub dt: f64,
}

impl GravityKernel {
    pub fn new(mass: f64, g: f64, hbar: f64, dt: f64) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), || Error::Domain(format!("kernel needs dt > 0, got {dt:e}")))?;
        ensure(mass > 0.0 && hbar > 0.0, || Error::Domain("kernel needs positive mass and hbar".into()))?;
        Ok(Self { mass, g, hbar, dt })
    }

    pub fn prefactor(&self) -> Complex64 {
        prefactor(self.mass, self.hbar, self.dt)
    }

    /// `(m/2ħ) [x′²/Δt − g x′ Δt − g² Δt³/12]`.
    pub fn endpoint_phase(&self, x_to: f64) -> f64 {
        let dt = self.dt;
        self.mass / (2.0 * self.hbar) * (x_to * x_to / dt - self.g * x_to * dt - self.g * self.g * dt.powi(3) / 12.0)
    }

    /// `(m/2ħ) [x² / Δt − x (2x′/Δt + g Δt)]`.
    pub fn coupling_phase(&self, x_from: f64, x_to: f64) -> f64 {
        let dt = self.dt;
        self.mass / (2.0 * self.hbar) * (x_from * x_from / dt - x_from * (2.0 * x_to / dt + self.g * dt))
    }

    /// `∂/∂x` of the coupling phase.
    pub fn coupling_phase_rate(&self, x_from: f64, x_to: f64) -> f64 {
        self.mass / self.hbar * ((x_from - x_to) / self.dt - 0.5 * self.g * self.dt)
    }

    pub fn eval(&self, x_from: f64, x_to: f64) -> Complex64 {
        self.prefactor() * Complex64::from_polar(1.0, self.endpoint_phase(x_to) + self.coupling_phase(x_from, x_to))
    }
}

/// Relative rest-mass phase `exp(−iΔE t/ħ)` carried by the spin-down branch.
pub fn rest_mass_phase(cfg: &PhysicalConfig, t: f64) -> Complex64 {
    if cfg.rest_mass_phase {
        Complex64::from_polar(1.0, -cfg.delta_e * t / cfg.hbar())
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Spin-diagonal matrix propagator `diag(K^{m−}, K^{m+})` in the
/// {up, down} energy basis.
pub fn spin_propagator(from: SpacetimePoint, to: SpacetimePoint, cfg: &PhysicalConfig) -> Result<[[Complex64; 2]; 2]> {
    let masses = branch_masses(cfg)?;
    let up = grav_propagator(from, to, masses.up(), cfg)?;
    let down = grav_propagator(from, to, masses.down(), cfg)? * rest_mass_phase(cfg, to.t - from.t);
    let zero = Complex64::new(0.0, 0.0);
    Ok([[up, zero], [zero, down]])
}

/// Colella–Overhauser–Werner phase `2π m_I m_G g A λ sin φ / h²`.
pub fn cow_phase(m_inertial: f64, m_grav: f64, g: f64, area: f64, lambda: f64, tilt: f64, h: f64) -> Result<f64> {
    ensure([m_inertial, m_grav, g, area, lambda, h].iter().all(|v| *v > 0.0 && v.is_finite()), || {
        Error::Domain("COW phase needs positive finite masses, g, area, wavelength and h".into())
    })?;
    ensure((0.0..=std::f64::consts::FRAC_PI_2).contains(&tilt), || {
        Error::Domain(format!("tilt {tilt} outside [0, pi/2]"))
    })?;
    Ok(2.0 * PI * m_inertial * m_grav * g * area * lambda * tilt.sin() / (h * h))
}
