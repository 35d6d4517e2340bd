//! Time evolution under the pulsed, square and cosine drives.
//!
//! A [`PropagationPlan`] fixes the drive protocol; [`Floquet`] compiles it on
//! a sector into a one-period schedule of static segments, instantaneous
//! kicks `e^{iθJ}` and (for the cosine drive) midpoint-exponential steps.
//! Small sectors are propagated with dense sub-period unitaries, larger ones
//! with Krylov steps. A kick at time `t` is part of every sample taken at
//! `t` or later.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{OpSum, SectorBasis, SparseOperator};
use crate::krylov::{expm_krylov, KrylovConfig};
use crate::linalg::{self, CMatrix, HermitianEigen, ONE, ZERO};
use crate::models::{self, DriveParams, ModelParams, Spin};
use crate::C64;

/// Largest sector propagated with dense unitaries.
pub const DENSE_PROPAGATION_LIMIT: usize = 400;
/// Largest sector for which a full one-period unitary is formed.
pub const DENSE_UNITARY_LIMIT: usize = 4096;
/// Default number of cosine-drive steps per period.
pub const COSINE_STEPS: usize = 1024;
/// Maximum change of the one-period propagation allowed under step halving.
pub const COSINE_STEP_TOLERANCE: f64 = 1e-8;
/// Accepted norm drift of a propagated state.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// Static Hamiltonian used by [`Scheme::EffectiveStatic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveKind {
    /// `α H_0 + (1−α) H_1(η)`.
    Pulse,
    /// `(α_1+α_3) H_0 + α_2 H_1 + α_4 H_2`.
    PurePair,
    /// Bessel-renormalized couplings of the cosine drive.
    Continuous,
    /// Finite-duration, impure-pulse Hamiltonian.
    Impure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `P† e^{-i(1−α)T H_0} P e^{-iαT H_0}` with `P = e^{iηJ_x}`.
    PulseSequence,
    /// `W† e^{-iα_4T H'_0} W e^{-iα_3T H_0} P† e^{-iα_2T H_0} P e^{-iα_1T H_0}`
    /// with `P = e^{iπ/2 J_x}`, `W = e^{iπ/2 J_y}`.
    TwoPulseSequence,
    /// `H_0 + A f(t) J_x` with `f = 1` on `[αT − t_p, αT]`, `3` on `[T − t_p, T]`.
    SquareDrive,
    /// `H_0 + A cos(ωt) J_x` with `A = K_0 ω`.
    CosineDrive,
    EffectiveStatic(EffectiveKind),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationPlan {
    pub scheme: Scheme,
    pub drive: DriveParams,
    pub model: ModelParams,
    pub n_periods: usize,
    #[serde(default = "default_samples")]
    pub samples_per_period: usize,
}

fn default_samples() -> usize {
    32
}

impl PropagationPlan {
    pub fn new(scheme: Scheme, model: ModelParams, drive: DriveParams, n_periods: usize) -> Self {
        PropagationPlan { scheme, drive, model, n_periods, samples_per_period: default_samples() }
    }

    /// Only stroboscopic samples.
    pub fn stroboscopic(mut self) -> Self {
        self.samples_per_period = 1;
        self
    }

    pub fn with_samples(mut self, samples_per_period: usize) -> Self {
        self.samples_per_period = samples_per_period;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.drive.validate()?;
        if self.n_periods == 0 {
            return Err(Error::InvalidParameter("n_periods must be at least 1".into()));
        }
        if self.samples_per_period == 0 {
            return Err(Error::InvalidParameter("samples_per_period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Static Hamiltonian of an [`EffectiveKind`].
pub fn effective_hamiltonian(kind: EffectiveKind, model: &ModelParams, drive: &DriveParams) -> Result<OpSum> {
    Ok(match kind {
        EffectiveKind::Pulse => models::h_eff_trotter(model, drive.alpha, drive.eta),
        EffectiveKind::PurePair => {
            let a = drive
                .alphas4
                .ok_or_else(|| Error::InvalidParameter("pure-pair scheme needs alphas4".into()))?;
            models::h_eff_pure_pair(model, &a)?
        }
        EffectiveKind::Continuous => models::h_eff_continuous(model, drive.k0)?,
        EffectiveKind::Impure => models::h_eff_impure(model, drive.alpha, drive.period, drive.pulse_duration)?.op,
    })
}

/// States sampled along a drive.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub basis: Arc<SectorBasis>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// `true` where `t = nT`.
    pub stroboscopic_mask: Vec<bool>,
}

impl Trajectory {
    /// `(t, |⟨s|ψ(t)⟩|²)` for a basis vector `s`.
    pub fn population(&self, index: usize) -> Vec<(f64, f64)> {
        self.times.iter().zip(&self.states).map(|(&t, s)| (t, s[index].norm_sqr())).collect()
    }

    pub fn stroboscopic(&self) -> impl Iterator<Item = (f64, &Vec<C64>)> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(&self.stroboscopic_mask)
            .filter(|(_, &m)| m)
            .map(|((&t, s), _)| (t, s))
    }
}

/// One sampled state handed to an observer.
pub struct Sample<'a> {
    pub index: usize,
    pub time: f64,
    pub stroboscopic: bool,
    pub state: &'a [C64],
}

// ---------------------------------------------------------------------------
// schedule

#[derive(Clone, Copy, Debug)]
enum Event {
    /// Evolve under generator `gen` on `[t0, t1]`.
    Segment { t0: f64, t1: f64, gen: usize },
    /// `e^{iθ G}` at time `t`.
    Kick { t: f64, gen: usize, angle: f64 },
    /// Cosine drive over the whole period.
    Cosine,
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Static { gen: usize, dt: f64 },
    Kick { gen: usize, angle: f64 },
    /// `exp(-i dt (H_0 + c J_x))`.
    Drive { coupling: f64, dt: f64 },
}

// generator slots
const H0: usize = 0;
const JX: usize = 1;

fn time_tol(period: f64) -> f64 {
    1e-12 * period
}

/// Compiled one-period drive on a sector.
pub struct Floquet {
    plan: PropagationPlan,
    basis: Arc<SectorBasis>,
    gens: Vec<SparseOperator>,
    events: Vec<Event>,
    cosine_steps: usize,
    dense: Option<DenseCache>,
    krylov: KrylovConfig,
}

struct DenseCache {
    /// Unitaries from sample `k` to `k+1` within one period.
    sub_period: Vec<CMatrix>,
}

impl Floquet {
    pub fn new(plan: &PropagationPlan, basis: &Arc<SectorBasis>) -> Result<Self> {
        plan.validate()?;
        if basis.rungs() != plan.model.rungs {
            return Err(Error::DimensionMismatch { expected: plan.model.rungs, got: basis.rungs() });
        }
        let (model, drive) = (&plan.model, &plan.drive);
        let period = drive.period;
        let h0 = models::h0(model).build(basis)?;
        let jx = models::total_spin(Spin::X, model.rungs).build(basis)?;
        let mut gens = vec![h0, jx];
        let mut events = Vec::new();
        match plan.scheme {
            Scheme::PulseSequence => {
                let ta = drive.alpha * period;
                events.push(Event::Segment { t0: 0.0, t1: ta, gen: H0 });
                events.push(Event::Kick { t: ta, gen: JX, angle: drive.eta });
                events.push(Event::Segment { t0: ta, t1: period, gen: H0 });
                events.push(Event::Kick { t: period, gen: JX, angle: -drive.eta });
            }
            Scheme::TwoPulseSequence => {
                let a = drive
                    .alphas4
                    .ok_or_else(|| Error::InvalidParameter("two-pulse sequence needs alphas4".into()))?;
                gens.push(models::h0_prime(model).build(basis)?);
                gens.push(models::total_spin(Spin::Y, model.rungs).build(basis)?);
                let (h0p, jy) = (2, 3);
                let t1 = a[0] * period;
                let t2 = t1 + a[1] * period;
                let t3 = t2 + a[2] * period;
                events.push(Event::Segment { t0: 0.0, t1, gen: H0 });
                events.push(Event::Kick { t: t1, gen: JX, angle: FRAC_PI_2 });
                events.push(Event::Segment { t0: t1, t1: t2, gen: H0 });
                events.push(Event::Kick { t: t2, gen: JX, angle: -FRAC_PI_2 });
                events.push(Event::Segment { t0: t2, t1: t3, gen: H0 });
                events.push(Event::Kick { t: t3, gen: jy, angle: FRAC_PI_2 });
                events.push(Event::Segment { t0: t3, t1: period, gen: h0p });
                events.push(Event::Kick { t: period, gen: jy, angle: -FRAC_PI_2 });
            }
            Scheme::SquareDrive => {
                let tp = drive.pulse_duration;
                let ta = drive.alpha * period;
                if !(tp > 0.0) || ta - tp < -time_tol(period) || ta > period - tp + time_tol(period) {
                    return Err(Error::InvalidParameter(format!(
                        "square drive needs 0 < t_p <= αT and αT <= T − t_p (t_p = {tp}, αT = {ta}, T = {period})"
                    )));
                }
                let amp = drive.square_amplitude();
                let pulse1 = SparseOperator::linear_combination(&[(ONE, &gens[H0]), (C64::new(amp, 0.0), &gens[JX])])?;
                let pulse2 =
                    SparseOperator::linear_combination(&[(ONE, &gens[H0]), (C64::new(3.0 * amp, 0.0), &gens[JX])])?;
                gens.push(pulse1);
                gens.push(pulse2);
                events.push(Event::Segment { t0: 0.0, t1: ta - tp, gen: H0 });
                events.push(Event::Segment { t0: ta - tp, t1: ta, gen: 2 });
                events.push(Event::Segment { t0: ta, t1: period - tp, gen: H0 });
                events.push(Event::Segment { t0: period - tp, t1: period, gen: 3 });
            }
            Scheme::CosineDrive => events.push(Event::Cosine),
            Scheme::EffectiveStatic(kind) => {
                gens.push(effective_hamiltonian(kind, model, drive)?.build(basis)?);
                events.push(Event::Segment { t0: 0.0, t1: period, gen: 2 });
            }
        }
        let mut floquet = Floquet {
            plan: plan.clone(),
            basis: basis.clone(),
            gens,
            events,
            cosine_steps: 0,
            dense: None,
            krylov: KrylovConfig::default(),
        };
        if plan.scheme == Scheme::CosineDrive {
            floquet.cosine_steps = floquet.converge_cosine_steps()?;
        }
        if basis.dim() <= DENSE_PROPAGATION_LIMIT {
            let sub_period = (0..plan.samples_per_period)
                .map(|k| floquet.dense_interval(k))
                .collect::<Result<Vec<_>>>()?;
            floquet.dense = Some(DenseCache { sub_period });
        }
        Ok(floquet)
    }

    pub fn plan(&self) -> &PropagationPlan {
        &self.plan
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    /// Number of cosine-drive steps per period actually used.
    pub fn cosine_steps(&self) -> usize {
        self.cosine_steps
    }

    fn period(&self) -> f64 {
        self.plan.drive.period
    }

    fn sample_time(&self, k: usize) -> f64 {
        k as f64 * self.period() / self.plan.samples_per_period as f64
    }

    /// Actions carrying the state from `t0` to `t1` (within one period),
    /// with `cosine_steps` steps per period for the cosine drive.
    fn actions(&self, t0: f64, t1: f64, cosine_steps: usize) -> Vec<Action> {
        let tol = time_tol(self.period());
        let mut out = Vec::new();
        for ev in &self.events {
            match *ev {
                Event::Segment { t0: s0, t1: s1, gen } => {
                    let dt = s1.min(t1) - s0.max(t0);
                    if dt > tol {
                        out.push(Action::Static { gen, dt });
                    }
                }
                Event::Kick { t, gen, angle } => {
                    let inside = (t > t0 + tol && t <= t1 + tol) || (t0 <= tol && t <= tol);
                    if inside {
                        out.push(Action::Kick { gen, angle });
                    }
                }
                Event::Cosine => {
                    let dt = self.period() / cosine_steps as f64;
                    let first = (t0 / dt).round() as usize;
                    let last = (t1 / dt).round() as usize;
                    let amp = self.plan.drive.cosine_amplitude();
                    let omega = self.plan.drive.omega();
                    for i in first..last {
                        let tm = (i as f64 + 0.5) * dt;
                        out.push(Action::Drive { coupling: amp * (omega * tm).cos(), dt });
                    }
                }
            }
        }
        out
    }

    fn dense_action(&self, action: Action, cache: &mut Vec<Option<HermitianEigen>>) -> Result<CMatrix> {
        let mut eig = |gen: usize| -> HermitianEigen {
            cache[gen].get_or_insert_with(|| HermitianEigen::new(&self.gens[gen].to_dense())).clone()
        };
        Ok(match action {
            Action::Static { gen, dt } => eig(gen).propagator(dt),
            Action::Kick { gen, angle } => eig(gen).propagator(-angle),
            Action::Drive { coupling, dt } => {
                let h = self.gens[H0].to_dense() + self.gens[JX].to_dense() * C64::new(coupling, 0.0);
                linalg::expm_hermitian(&h, dt)
            }
        })
    }

    fn dense_product(&self, actions: &[Action]) -> Result<CMatrix> {
        let d = self.basis.dim();
        let mut cache = vec![None; self.gens.len()];
        let mut u = CMatrix::identity(d, d);
        for &a in actions {
            u = self.dense_action(a, &mut cache)? * u;
        }
        Ok(u)
    }

    fn dense_interval(&self, k: usize) -> Result<CMatrix> {
        let acts = self.actions(self.sample_time(k), self.sample_time(k + 1), self.cosine_steps);
        self.dense_product(&acts)
    }

    fn apply_action(&self, action: Action, psi: &[C64]) -> Result<Vec<C64>> {
        match action {
            Action::Static { gen, dt } => expm_krylov(&self.gens[gen], psi, dt, &self.krylov),
            Action::Kick { gen, angle } => expm_krylov(&self.gens[gen], psi, -angle, &self.krylov),
            Action::Drive { coupling, dt } => {
                let h = SparseOperator::linear_combination(&[
                    (ONE, &self.gens[H0]),
                    (C64::new(coupling, 0.0), &self.gens[JX]),
                ])?;
                expm_krylov(&h, psi, dt, &self.krylov)
            }
        }
    }

    fn sparse_interval(&self, k: usize, psi: &[C64]) -> Result<Vec<C64>> {
        let mut state = psi.to_vec();
        for a in self.actions(self.sample_time(k), self.sample_time(k + 1), self.cosine_steps) {
            state = self.apply_action(a, &state)?;
        }
        Ok(state)
    }

    /// Doubles the cosine step count until halving the step changes the
    /// one-period propagation by less than [`COSINE_STEP_TOLERANCE`].
    fn converge_cosine_steps(&self) -> Result<usize> {
        let d = self.basis.dim();
        let period = self.period();
        let one_period = |steps: usize| -> Result<CMatrix> {
            let acts = self.actions(0.0, period, steps);
            if d <= DENSE_PROPAGATION_LIMIT {
                self.dense_product(&acts)
            } else {
                // probe with a fixed normalized vector
                let mut psi: Vec<C64> = (0..d).map(|i| C64::new(1.0 + (i % 7) as f64, (i % 3) as f64)).collect();
                linalg::normalize(&mut psi);
                for a in acts {
                    psi = self.apply_action(a, &psi)?;
                }
                Ok(CMatrix::from_column_slice(d, 1, &psi))
            }
        };
        let s = self.plan.samples_per_period;
        let mut steps = s * COSINE_STEPS.div_ceil(s);
        let mut coarse = one_period(steps)?;
        loop {
            let fine = one_period(2 * steps)?;
            let change = linalg::op_norm(&(&fine - &coarse));
            if change < COSINE_STEP_TOLERANCE {
                return Ok(steps);
            }
            if steps >= 1 << 16 {
                return Err(Error::NoConvergence { what: "cosine-drive step halving", iterations: steps, residual: change });
            }
            log::info!("cosine drive: {steps} steps per period change the propagator by {change:.2e}; refining");
            steps *= 2;
            coarse = fine;
        }
    }

    /// One-period unitary.
    pub fn period_unitary(&self) -> Result<CMatrix> {
        let d = self.basis.dim();
        if let Some(cache) = &self.dense {
            let mut u = CMatrix::identity(d, d);
            for m in &cache.sub_period {
                u = m * u;
            }
            return Ok(u);
        }
        if d > DENSE_UNITARY_LIMIT {
            return Err(Error::Infeasible { dimension: d, limit: DENSE_UNITARY_LIMIT });
        }
        let acts = self.actions(0.0, self.period(), self.cosine_steps);
        self.dense_product(&acts)
    }

    /// Propagates `psi0` over the plan and hands every sample to `observer`.
    pub fn run(&self, psi0: &[C64], mut observer: impl FnMut(Sample<'_>)) -> Result<()> {
        let d = self.basis.dim();
        if psi0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: psi0.len() });
        }
        let n0 = linalg::norm(psi0);
        if (n0 - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("initial state has norm {n0}, expected 1")));
        }
        let s = self.plan.samples_per_period;
        let mut state = psi0.to_vec();
        observer(Sample { index: 0, time: 0.0, stroboscopic: true, state: &state });
        let mut index = 0;
        for n in 0..self.plan.n_periods {
            for k in 0..s {
                state = match &self.dense {
                    Some(cache) => linalg::matvec(&cache.sub_period[k], &state),
                    None => self.sparse_interval(k, &state)?,
                };
                index += 1;
                let time = (n * s + k + 1) as f64 * self.period() / s as f64;
                let drift = (linalg::norm(&state) - 1.0).abs();
                if drift > NORM_DRIFT_LIMIT {
                    return Err(Error::NormDrift { drift, time });
                }
                observer(Sample { index, time, stroboscopic: k + 1 == s, state: &state });
            }
        }
        Ok(())
    }

    pub fn evolve(&self, psi0: &[C64]) -> Result<Trajectory> {
        let mut traj = Trajectory {
            basis: self.basis.clone(),
            times: Vec::new(),
            states: Vec::new(),
            stroboscopic_mask: Vec::new(),
        };
        self.run(psi0, |s| {
            traj.times.push(s.time);
            traj.states.push(s.state.to_vec());
            traj.stroboscopic_mask.push(s.stroboscopic);
        })?;
        Ok(traj)
    }
}

/// `P = e^{iηJ_x}` on a sector.
pub fn pulse_unitary(eta: f64, basis: &Arc<SectorBasis>) -> Result<CMatrix> {
    models::rotation(Spin::X, eta, basis)
}

/// One-period unitary of a plan.
pub fn period_unitary(plan: &PropagationPlan, basis: &Arc<SectorBasis>) -> Result<CMatrix> {
    Floquet::new(plan, basis)?.period_unitary()
}

/// Trajectory of a plan.
pub fn evolve(plan: &PropagationPlan, basis: &Arc<SectorBasis>, psi0: &[C64]) -> Result<Trajectory> {
    Floquet::new(plan, basis)?.evolve(psi0)
}

/// `exp(-i dt H) psi` with the default Krylov settings.
pub fn krylov_step(h: &SparseOperator, psi: &[C64], dt: f64) -> Result<Vec<C64>> {
    expm_krylov(h, psi, dt, &KrylovConfig::default())
}

// ---------------------------------------------------------------------------
// moving frame

/// `H_0` written in the eigenbasis of `J_x`, so that `R(t) H_0 R†(t)` with
/// `R = e^{iθJ_x}` only multiplies element `(m, n)` by `e^{iθ(λ_m − λ_n)}`.
pub struct JxFrame {
    vectors: CMatrix,
    values: Vec<f64>,
    h_tilde: CMatrix,
}

impl JxFrame {
    pub fn new(h0: &CMatrix, jx: &CMatrix) -> Self {
        let eig = HermitianEigen::new(jx);
        let h_tilde = eig.vectors.adjoint() * h0 * &eig.vectors;
        JxFrame { vectors: eig.vectors, values: eig.values, h_tilde }
    }

    pub fn on_sector(model: &ModelParams, basis: &Arc<SectorBasis>) -> Result<Self> {
        let h0 = models::h0(model).build(basis)?.to_dense();
        let jx = models::total_spin(Spin::X, model.rungs).build(basis)?.to_dense();
        Ok(JxFrame::new(&h0, &jx))
    }

    /// `V (H̃ ∘ w(λ_m − λ_n)) V†`.
    pub fn weighted(&self, weight: impl Fn(f64) -> C64) -> CMatrix {
        let d = self.values.len();
        let m = CMatrix::from_fn(d, d, |r, c| self.h_tilde[(r, c)] * weight(self.values[r] - self.values[c]));
        &self.vectors * m * self.vectors.adjoint()
    }

    /// `R H_0 R†` at a fixed angle.
    pub fn rotated(&self, theta: f64) -> CMatrix {
        self.weighted(|delta| C64::new(0.0, theta * delta).exp())
    }
}

fn trapezoid_weight(n_points: usize, f: impl Fn(f64) -> C64) -> C64 {
    // periodic trapezoid rule over x ∈ [0, 2π)
    (0..n_points).map(|k| f(2.0 * PI * k as f64 / n_points as f64)).sum::<C64>() / n_points as f64
}

/// `(1/T)∫ R H_0 R† dt` with `R = e^{iK_0 sin(ωt) J_x}` by the periodic
/// trapezoid rule on `n_points` nodes.
pub fn moving_frame_average_cosine(frame: &JxFrame, k0: f64, n_points: usize) -> CMatrix {
    frame.weighted(|delta| trapezoid_weight(n_points, |x| C64::new(0.0, k0 * delta * x.sin()).exp()))
}

/// Fourier component `V_j = (1/T)∫ R H_0 R† e^{-ijωt} dt` of the cosine-drive
/// moving-frame Hamiltonian.
pub fn fourier_component_cosine(frame: &JxFrame, k0: f64, j: i32, n_points: usize) -> CMatrix {
    frame.weighted(|delta| {
        trapezoid_weight(n_points, |x| C64::new(0.0, k0 * delta * x.sin() - j as f64 * x).exp())
    })
}

/// Size of the first-order correction `(1/ω) Σ_{j ≥ 1} (1/j)[V_j, V_{-j}]`.
#[derive(Clone, Debug)]
pub struct FirstOrderCorrection {
    /// `‖Σ_{j=1}^{j_max} (1/j)[V_j, V_{-j}]‖` (without the `1/ω` prefactor).
    pub norm: f64,
    /// Largest `‖[V_j, V_{-j}]‖ / j` for `j_max < j ≤ 2 j_max`.
    pub tail: f64,
    /// Largest `‖V_j‖` for `j_max < j ≤ 2 j_max`.
    pub tail_component: f64,
}

pub fn first_order_correction_cosine(frame: &JxFrame, k0: f64, j_max: i32, n_points: usize) -> FirstOrderCorrection {
    let term = |j: i32| {
        let vp = fourier_component_cosine(frame, k0, j, n_points);
        let vm = fourier_component_cosine(frame, k0, -j, n_points);
        (linalg::commutator(&vp, &vm) / C64::new(j as f64, 0.0), linalg::op_norm(&vp))
    };
    let d = frame.values.len();
    let mut sum = CMatrix::zeros(d, d);
    for j in 1..=j_max {
        sum += term(j).0;
    }
    let mut tail: f64 = 0.0;
    let mut tail_component: f64 = 0.0;
    for j in j_max + 1..=2 * j_max {
        let (c, v) = term(j);
        tail = tail.max(linalg::op_norm(&c));
        tail_component = tail_component.max(v);
    }
    FirstOrderCorrection { norm: linalg::op_norm(&sum), tail, tail_component }
}

/// Exact `(1/T)∫ R H_0 R† dt` for the square drive, where the frame angle
/// `A∫f` is piecewise linear: `0`, ramp to `η`, `η`, ramp to `4η`.
pub fn moving_frame_average_square(frame: &JxFrame, drive: &DriveParams) -> Result<CMatrix> {
    let (period, tp, eta) = (drive.period, drive.pulse_duration, drive.eta);
    let ta = drive.alpha * period;
    if !(tp > 0.0) || tp > ta || ta > period - tp {
        return Err(Error::InvalidParameter("square drive needs 0 < t_p <= αT <= T − t_p".into()));
    }
    // (duration, θ_start, θ_end)
    let pieces = [
        (ta - tp, 0.0, 0.0),
        (tp, 0.0, eta),
        (period - tp - ta, eta, eta),
        (tp, eta, 4.0 * eta),
    ];
    Ok(frame.weighted(|delta| {
        let mut acc = ZERO;
        for &(dur, a, b) in &pieces {
            let phase = delta * (b - a);
            acc += if phase.abs() < 1e-14 {
                C64::new(0.0, a * delta).exp() * dur
            } else {
                (C64::new(0.0, b * delta).exp() - C64::new(0.0, a * delta).exp()) / C64::new(0.0, phase) * dur
            };
        }
        acc / period
    }))
}

/// Largest lab-frame deviation between the exact cosine drive and
/// `R†(t) e^{-itH_eff} R(0) ψ_0` over the sample grid.
pub fn kick_residual(plan: &PropagationPlan, basis: &Arc<SectorBasis>, psi0: &[C64]) -> Result<f64> {
    if plan.scheme != Scheme::CosineDrive {
        return Err(Error::InvalidParameter("kick residual is defined for the cosine drive".into()));
    }
    let floquet = Floquet::new(plan, basis)?;
    let heff = HermitianEigen::new(&models::h_eff_continuous(&plan.model, plan.drive.k0)?.build(basis)?.to_dense());
    let jx = HermitianEigen::new(&models::total_spin(Spin::X, plan.model.rungs).build(basis)?.to_dense());
    let (k0, omega) = (plan.drive.k0, plan.drive.omega());
    let mut worst: f64 = 0.0;
    floquet.run(psi0, |s| {
        // R(0) = 1; R†(t) = e^{-iK_0 sin(ωt) J_x}
        let moving = heff.evolve(s.time, psi0);
        let lab = jx.evolve(k0 * (omega * s.time).sin(), &moving);
        worst = worst.max(linalg::distance(&lab, s.state));
    })?;
    Ok(worst)
}
