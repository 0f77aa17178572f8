//! Sampled one-dimensional fields.
//!
//! Every field in the crate lives on a [`UniformGrid`]: `len` points starting
//! at `start`, spaced by `step`. Discrete integrals are plain Riemann sums
//! `Σ f_k · step`, which are spectrally accurate for the smooth, decaying
//! fields used here.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

/// Relative tolerance used when deciding whether two grids coincide.
const GRID_MATCH_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        ensure(start.is_finite() && step.is_finite(), || {
            Error::Domain(format!("grid start {start} / step {step} not finite"))
        })?;
        ensure(step > 0.0, || Error::Domain(format!("grid step must be positive, got {step}")))?;
        ensure(len >= 2, || Error::Domain(format!("grid needs at least 2 points, got {len}")))?;
        Ok(Self { start, step, len })
    }

    /// `len` points from `lo` to `hi`, both endpoints included.
    pub fn linspace(lo: f64, hi: f64, len: usize) -> Result<Self> {
        ensure(hi > lo, || Error::Domain(format!("empty interval [{lo}, {hi}]")))?;
        ensure(len >= 2, || Error::Domain(format!("grid needs at least 2 points, got {len}")))?;
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    /// Periodic grid: `len` points covering `[lo, hi)` with spacing `(hi - lo) / len`.
    pub fn periodic(lo: f64, hi: f64, len: usize) -> Result<Self> {
        ensure(hi > lo, || Error::Domain(format!("empty interval [{lo}, {hi})")))?;
        Self::new(lo, (hi - lo) / len as f64, len)
    }

    /// Symmetric grid of half-width `half` about `center`.
    pub fn centered(center: f64, half: f64, len: usize) -> Result<Self> {
        Self::linspace(center - half, center + half, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.x(k)).collect()
    }

    /// Same spacing and length, every point moved by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self { start: self.start + offset, ..*self }
    }

    pub fn matches(&self, other: &UniformGrid) -> bool {
        let scale = self.step.max(other.step);
        self.len == other.len
            && (self.step - other.step).abs() <= GRID_MATCH_RTOL * scale
            && (self.start - other.start).abs()
                <= GRID_MATCH_RTOL * (scale * self.len as f64 + self.start.abs())
    }

    pub fn check_matches(&self, other: &UniformGrid) -> Result<()> {
        ensure(self.matches(other), || {
            Error::GridMismatch(format!("{self:?} vs {other:?}"))
        })
    }
}

/// A sampled complex wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField1D {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl ComplexField1D {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        ensure(values.len() == grid.len(), || {
            Error::GridMismatch(format!("{} values for a {}-point grid", values.len(), grid.len()))
        })?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.x(k))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// `Σ |ψ|² Δx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        ensure(n > 0.0 && n.is_finite(), || {
            Error::Domain(format!("cannot normalise a field of norm² {n}"))
        })?;
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self
    }

    /// `⟨self|other⟩ = Σ conj(self) · other · Δx`.
    pub fn inner(&self, other: &ComplexField1D) -> Result<Complex64> {
        self.grid.check_matches(&other.grid)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.step())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn to_distribution(&self) -> Result<ScreenDistribution> {
        ScreenDistribution::from_unnormalized(self.grid, self.density())
    }

    /// `sqrt(Σ |a - b|² Δx)`.
    pub fn l2_distance(&self, other: &ComplexField1D) -> Result<f64> {
        self.grid.check_matches(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.step()).sqrt())
    }
}

/// A real, non-negative probability density normalised on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenDistribution {
    pub grid: UniformGrid,
    pub density: Vec<f64>,
}

/// Allowed deviation of `Σ p Δx` from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl ScreenDistribution {
    /// Normalise `density` on `grid`. Rejects negative or non-finite samples.
    pub fn from_unnormalized(grid: UniformGrid, mut density: Vec<f64>) -> Result<Self> {
        ensure(density.len() == grid.len(), || {
            Error::GridMismatch(format!("{} samples for a {}-point grid", density.len(), grid.len()))
        })?;
        if let Some((k, v)) = density.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::NonFinite {
                abscissa: grid.x(k),
                context: format!("density sample {v} is negative or non-finite"),
            });
        }
        let total: f64 = density.iter().sum::<f64>() * grid.step();
        ensure(total > 0.0, || Error::Domain("density has zero total probability".into()))?;
        density.iter_mut().for_each(|v| *v /= total);
        Ok(Self { grid, density })
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.step()
    }

    pub fn mean(&self) -> f64 {
        let g = &self.grid;
        self.density.iter().enumerate().map(|(k, p)| g.x(k) * p).sum::<f64>() * g.step() / self.total()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let g = &self.grid;
        self.density
            .iter()
            .enumerate()
            .map(|(k, p)| (g.x(k) - mu).powi(2) * p)
            .sum::<f64>()
            * g.step()
            / self.total()
    }

    /// `Σ |p - q| Δx`.
    pub fn l1_distance(&self, other: &ScreenDistribution) -> Result<f64> {
        self.grid.check_matches(&other.grid)?;
        Ok(self
            .density
            .iter()
            .zip(&other.density)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
            * self.grid.step())
    }

    /// Probability held by the outermost `fraction` of samples (split evenly
    /// between both ends).
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.grid.len();
        let band = ((fraction * n as f64) / 2.0).ceil() as usize;
        let band = band.clamp(1, n / 2);
        let lo: f64 = self.density[..band].iter().sum();
        let hi: f64 = self.density[n - band..].iter().sum();
        (lo + hi) * self.grid.step()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let t = self.total();
        ensure((t - 1.0).abs() <= NORMALIZATION_TOL, || {
            Error::Invariant(format!("distribution sums to {t}"))
        })
    }
}

/// Reject a screen pattern whose outer 2 % of samples holds 5 % or more of
/// the probability.
pub(crate) fn check_coverage(d: &ScreenDistribution, what: &str) -> Result<()> {
    let edge = d.edge_mass(0.02);
    ensure(edge < 0.05, || {
        Error::Coverage(format!("{what}: {:.2}% of the probability sits in the outer 2% of the grid", 100.0 * edge))
    })
}
