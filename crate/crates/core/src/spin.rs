//! Joint spin ⊗ position states under the controlled-unitary evolution
//! `|↑⟩⟨↑| ⊗ U_{m−} + |↓⟩⟨↓| ⊗ U_{m+}`, and the partial traces taken from it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::grid::{ComplexField1D, ScreenDistribution, UniformGrid};
use crate::oracle::{split_step_evolve, Absorber, EvolutionSpec, Grid1D};
use crate::propagators::{branch_masses, rest_mass_phase, GravityKernel, PhysicalConfig};

pub const AMPLITUDE_NORM_TOL: f64 = 1e-12;
pub const BRANCH_NORM_TOL: f64 = 1e-9;
pub const INCOHERENT_TOL: f64 = 1e-10;
const EIGEN_FLOOR: f64 = -1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Spin density matrix in the {up, down} energy basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState2 {
    pub rho: Mat2,
}

impl SpinState2 {
    pub fn new(rho: Mat2) -> Result<Self> {
        let s = Self { rho };
        s.validate()?;
        Ok(s)
    }

    pub fn pure(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new([[alpha * alpha.conj(), alpha * beta.conj()], [beta * alpha.conj(), beta * beta.conj()]])
    }

    pub fn diagonal(p_up: f64) -> Result<Self> {
        Self::new([[Complex64::new(p_up, 0.0), ZERO], [ZERO, Complex64::new(1.0 - p_up, 0.0)]])
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rho;
        ensure(r.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite()), || {
            Error::Invariant("spin state has non-finite entries".into())
        })?;
        let herm = r[0][0].im.abs().max(r[1][1].im.abs()).max((r[0][1] - r[1][0].conj()).norm());
        ensure(herm <= HERMITIAN_TOL, || Error::Invariant(format!("spin state not Hermitian ({herm:e})")))?;
        let tr = r[0][0].re + r[1][1].re;
        ensure((tr - 1.0).abs() <= HERMITIAN_TOL, || Error::Invariant(format!("spin state trace {tr}")))?;
        let (lo, _) = self.eigenvalues();
        ensure(lo >= EIGEN_FLOOR, || Error::Invariant(format!("spin state eigenvalue {lo:e} negative")))
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.rho[0][0].re, self.rho[1][1].re)
    }

    /// `⟨↑|ρ|↓⟩`.
    pub fn coherence(&self) -> Complex64 {
        self.rho[0][1]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let (a, d) = (self.rho[0][0].re, self.rho[1][1].re);
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + self.rho[0][1].norm_sqr()).sqrt();
        (mid - r, mid + r)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        [lo, hi].iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
    }

    pub fn purity(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo * lo + hi * hi
    }

    pub fn max_abs_diff(&self, other: &SpinState2) -> f64 {
        self.rho
            .iter()
            .flatten()
            .zip(other.rho.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `α|↑⟩⊗|up⟩ + β|↓⟩⊗|down⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureJointState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub up: ComplexField1D,
    pub down: ComplexField1D,
}

impl PureJointState {
    pub fn new(alpha: Complex64, beta: Complex64, up: ComplexField1D, down: ComplexField1D) -> Result<Self> {
        let s = Self { alpha, beta, up, down };
        s.validate()?;
        Ok(s)
    }

    /// Both branches start from the same external state.
    pub fn product(alpha: Complex64, beta: Complex64, external: ComplexField1D) -> Result<Self> {
        Self::new(alpha, beta, external.clone(), external)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.norm_sqr() + self.beta.norm_sqr();
        ensure((n - 1.0).abs() <= AMPLITUDE_NORM_TOL, || {
            Error::Invariant(format!("|alpha|^2 + |beta|^2 = {n}"))
        })?;
        self.up.grid.check_matches(&self.down.grid)?;
        for (name, f) in [("up", &self.up), ("down", &self.down)] {
            let m = f.norm_sqr();
            ensure((m - 1.0).abs() <= BRANCH_NORM_TOL, || Error::Invariant(format!("{name} branch norm {m}")))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> UniformGrid {
        self.up.grid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JointState {
    Pure(PureJointState),
    /// Convex mixture of pure joint states.
    Ensemble(Vec<(f64, PureJointState)>),
}

impl JointState {
    pub fn ensemble(members: Vec<(f64, PureJointState)>) -> Result<Self> {
        ensure(!members.is_empty(), || Error::Invariant("empty ensemble".into()))?;
        ensure(members.iter().all(|(p, _)| *p >= 0.0 && p.is_finite()), || {
            Error::Invariant("ensemble weights must be non-negative".into())
        })?;
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        ensure((total - 1.0).abs() <= AMPLITUDE_NORM_TOL, || Error::Invariant(format!("ensemble weights sum to {total}")))?;
        let g = members[0].1.grid();
        for (_, m) in &members {
            m.validate()?;
            g.check_matches(&m.grid())?;
        }
        Ok(Self::Ensemble(members))
    }

    /// Classical mixture `q|↑⟩⟨↑| + (1−q)|↓⟩⟨↓|` with one external state.
    pub fn incoherent(q: f64, external: ComplexField1D) -> Result<Self> {
        ensure((0.0..=1.0).contains(&q), || Error::Domain(format!("population {q} outside [0, 1]")))?;
        let one = Complex64::new(1.0, 0.0);
        Self::ensemble(vec![
            (q, PureJointState::product(one, ZERO, external.clone())?),
            (1.0 - q, PureJointState::product(ZERO, one, external)?),
        ])
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, JointState::Pure(_))
    }

    fn members(&self) -> Vec<(f64, &PureJointState)> {
        match self {
            JointState::Pure(s) => vec![(1.0, s)],
            JointState::Ensemble(m) => m.iter().map(|(p, s)| (*p, s)).collect(),
        }
    }
}

/// Evolves one branch wavefunction with a given mass.
pub trait BranchPropagator: Sync {
    fn propagate(&self, psi: &ComplexField1D, mass: f64, t: f64) -> Result<ComplexField1D>;
}

/// Where the kernel propagator samples its output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputGrid {
    /// The input grid.
    Same,
    /// The input grid moved down by `½gt²`.
    CoFalling,
    Fixed(UniformGrid),
}

/// Direct quadrature of the gravitational kernel against the sampled input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPropagator {
    pub g: f64,
    pub hbar: f64,
    pub output: OutputGrid,
}

impl KernelPropagator {
    pub fn new(cfg: &PhysicalConfig, output: OutputGrid) -> Self {
        Self { g: cfg.g, hbar: cfg.hbar(), output }
    }
}

impl BranchPropagator for KernelPropagator {
    fn propagate(&self, psi: &ComplexField1D, mass: f64, t: f64) -> Result<ComplexField1D> {
        ensure(t >= 0.0 && t.is_finite(), || Error::Domain(format!("propagation time must be non-negative, got {t}")))?;
        let grid = match self.output {
            OutputGrid::Same => psi.grid,
            OutputGrid::CoFalling => psi.grid.shifted(-0.5 * self.g * t * t),
            OutputGrid::Fixed(g) => g,
        };
        if t == 0.0 {
            psi.grid.check_matches(&grid)?;
            return Ok(psi.clone());
        }
        let kernel = GravityKernel::new(mass, self.g, self.hbar, t)?;
        let src = psi.grid;
        // Largest coupling phase change per input step must stay below π/2.
        let reach = (grid.start() - src.end()).abs().max((grid.end() - src.start()).abs());
        let rate = mass / self.hbar * (reach / t + 0.5 * self.g.abs() * t);
        ensure(rate * src.step() <= std::f64::consts::FRAC_PI_2, || {
            Error::Convergence(format!(
                "input step {:e} under-resolves the kernel phase rate {rate:e}; shorten t or refine the grid",
                src.step()
            ))
        })?;
        let pref = kernel.prefactor() * src.step();
        let values: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let x = grid.x(j);
                let sum: Complex64 = psi
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * Complex64::from_polar(1.0, kernel.coupling_phase(src.x(k), x)))
                    .sum();
                sum * pref * Complex64::from_polar(1.0, kernel.endpoint_phase(x))
            })
            .collect();
        ComplexField1D::new(grid, values)
    }
}

/// Split-step Fourier evolution on the (periodic, power-of-two) input grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStepPropagator {
    pub g: f64,
    pub hbar: f64,
    pub max_dt: f64,
    pub absorber: Option<Absorber>,
}

impl BranchPropagator for SplitStepPropagator {
    fn propagate(&self, psi: &ComplexField1D, mass: f64, t: f64) -> Result<ComplexField1D> {
        ensure(t >= 0.0 && t.is_finite() && self.max_dt > 0.0, || Error::Domain("invalid split-step time".into()))?;
        let steps = (t / self.max_dt).ceil() as usize;
        if steps == 0 {
            return Ok(psi.clone());
        }
        let g = psi.grid;
        let grid = Grid1D::new(g.len(), g.start(), g.start() + g.step() * g.len() as f64)?;
        let spec = EvolutionSpec {
            grid,
            mass,
            g: self.g,
            hbar: self.hbar,
            dt: t / steps as f64,
            steps,
            absorber: self.absorber,
        };
        split_step_evolve(&ComplexField1D::new(grid.uniform(), psi.values.clone())?, &spec)
    }
}

fn evolve_pure(s: &PureJointState, cfg: &PhysicalConfig, t: f64, prop: &dyn BranchPropagator) -> Result<PureJointState> {
    let masses = branch_masses(cfg)?;
    let (up, down) = rayon::join(|| prop.propagate(&s.up, masses.up(), t), || prop.propagate(&s.down, masses.down(), t));
    let (up, down) = (up?, down?);
    up.grid.check_matches(&down.grid)?;
    Ok(PureJointState { alpha: s.alpha, beta: s.beta * rest_mass_phase(cfg, t), up, down })
}

/// Up branch evolves with `m_minus`, down with `m_plus`; the down amplitude
/// picks up `e^{−iΔE t/ħ}` when the rest-mass phase is enabled.
pub fn controlled_evolve(state: &JointState, cfg: &PhysicalConfig, t: f64, prop: &dyn BranchPropagator) -> Result<JointState> {
    match state {
        JointState::Pure(s) => Ok(JointState::Pure(evolve_pure(s, cfg, t, prop)?)),
        JointState::Ensemble(m) => {
            let out = m
                .par_iter()
                .map(|(p, s)| Ok((*p, evolve_pure(s, cfg, t, prop)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(JointState::Ensemble(out))
        }
    }
}

fn pure_overlap(s: &PureJointState) -> Result<Complex64> {
    s.down.inner(&s.up)
}

/// Trace over the external degree of freedom.
pub fn reduced_spin_state(state: &JointState) -> Result<SpinState2> {
    let mut rho = [[ZERO; 2]; 2];
    for (p, s) in state.members() {
        let off = s.alpha * s.beta.conj() * pure_overlap(s)?;
        rho[0][0] += p * s.alpha.norm_sqr();
        rho[1][1] += p * s.beta.norm_sqr();
        rho[0][1] += p * off;
        rho[1][0] += p * off.conj();
    }
    SpinState2::new(rho)
}

/// Trace over the spin: `|α|²|up|² + |β|²|down|²` per member.
pub fn reduced_position_density(state: &JointState) -> Result<ScreenDistribution> {
    let members = state.members();
    let grid = members[0].1.grid();
    let mut acc = vec![0.0; grid.len()];
    for (p, s) in members {
        grid.check_matches(&s.grid())?;
        let (wu, wd) = (p * s.alpha.norm_sqr(), p * s.beta.norm_sqr());
        for (k, a) in acc.iter_mut().enumerate() {
            *a += wu * s.up.values[k].norm_sqr() + wd * s.down.values[k].norm_sqr();
        }
    }
    ScreenDistribution::from_unnormalized(grid, acc)
}

/// `⟨down|up⟩` of a pure state.
pub fn branch_overlap(state: &JointState) -> Result<Complex64> {
    match state {
        JointState::Pure(s) => pure_overlap(s),
        JointState::Ensemble(_) => Err(Error::Unsupported("branch overlap is defined for pure joint states".into())),
    }
}

/// Entropy of the reduced spin state of a pure joint state, in bits.
pub fn entanglement_entropy(state: &JointState) -> Result<f64> {
    ensure(state.is_pure(), || Error::Unsupported("entanglement entropy needs a pure joint state".into()))?;
    Ok(reduced_spin_state(state)?.entropy_bits())
}

/// `½(1 ± √(1 − 4|α|²|β|²(1 − |ov|²)))`, ascending.
pub fn eigenvalues_from_overlap(alpha2: f64, beta2: f64, overlap_abs: f64) -> (f64, f64) {
    let r = (1.0 - 4.0 * alpha2 * beta2 * (1.0 - overlap_abs * overlap_abs)).max(0.0).sqrt();
    (0.5 * (1.0 - r), 0.5 * (1.0 + r))
}

/// Evolve `q|↑⟩⟨↑| + (1−q)|↓⟩⟨↓| ⊗ external` and confirm the spin state is
/// unchanged.
pub fn incoherent_invariance_check(
    q: f64,
    external: &ComplexField1D,
    cfg: &PhysicalConfig,
    t: f64,
    prop: &dyn BranchPropagator,
) -> Result<SpinState2> {
    let state = JointState::incoherent(q, external.clone())?;
    let out = reduced_spin_state(&controlled_evolve(&state, cfg, t, prop)?)?;
    let expected = SpinState2::diagonal(q)?;
    let d = out.max_abs_diff(&expected);
    ensure(d <= INCOHERENT_TOL, || Error::Invariant(format!("incoherent spin state moved by {d:e}")))?;
    Ok(out)
}
