//! Hamiltonians of the driven ladder as fermionic term lists.
//!
//! Every builder returns an [`OpSum`]; call [`OpSum::build`] on a
//! [`SectorBasis`] to get the sector-resolved sparse matrix. Rungs are
//! 0-based and bonds run over `j = 0..L-1` (open) or wrap (periodic).

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{mode_a, mode_b, FermionTerm, Factor, OpSum, SectorBasis, SparseOperator};
use crate::linalg::{self, CMatrix};
use crate::special::bessel_j;
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Bare ladder couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Intra-leg hopping amplitude.
    pub tau: f64,
    /// Intra-leg nearest-neighbour interaction.
    pub u0: f64,
    pub rungs: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelParams {
    pub fn new(tau: f64, u0: f64, rungs: usize) -> Self {
        ModelParams { tau, u0, rungs, boundary: Boundary::Open }
    }

    pub fn periodic(mut self) -> Self {
        self.boundary = Boundary::Periodic;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.rungs == 0 {
            return Err(Error::InvalidParameter("at least one rung required".into()));
        }
        if !self.u0.is_finite() {
            return Err(Error::InvalidParameter("u0 must be finite".into()));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds `(j, j+1)`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        bonds(self.rungs, self.boundary)
    }
}

pub fn bonds(rungs: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..rungs.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    if boundary == Boundary::Periodic && rungs > 2 {
        out.push((rungs - 1, 0));
    }
    out
}

/// Drive knobs shared by every protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveParams {
    /// Fraction of the period spent under `H_0` before the first pulse.
    pub alpha: f64,
    /// Pulse angle.
    pub eta: f64,
    pub period: f64,
    /// Pulse duration for the square drive (0 for instantaneous pulses).
    #[serde(default)]
    pub pulse_duration: f64,
    /// Dimensionless strength `A / ω` of the cosine drive.
    #[serde(default)]
    pub k0: f64,
    /// `(α_1, α_2, α_3, α_4)` of the two-pulse sequence.
    #[serde(default)]
    pub alphas4: Option<[f64; 4]>,
}

impl DriveParams {
    pub fn pulse(alpha: f64, eta: f64, period: f64) -> Self {
        DriveParams { alpha, eta, period, pulse_duration: 0.0, k0: 0.0, alphas4: None }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// `η − π/2`.
    pub fn epsilon(&self) -> f64 {
        self.eta - FRAC_PI_2
    }

    /// Square-drive amplitude `A` with `A t_p = η`.
    pub fn square_amplitude(&self) -> f64 {
        self.eta / self.pulse_duration
    }

    /// Cosine-drive amplitude `A = K_0 ω`.
    pub fn cosine_amplitude(&self) -> f64 {
        self.k0 * self.omega()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {}", self.period)));
        }
        if self.pulse_duration < 0.0 {
            return Err(Error::InvalidParameter("pulse duration must be non-negative".into()));
        }
        if let Some(a) = self.alphas4 {
            check_alphas4(&a)?;
        }
        Ok(())
    }
}

fn check_alphas4(a: &[f64; 4]) -> Result<()> {
    let sum: f64 = a.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("sequence weights sum to {sum}, not 1")));
    }
    if a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!("sequence weights must be positive: {a:?}")));
    }
    Ok(())
}

/// Interaction couplings of the effective Hamiltonians.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCouplings {
    pub u1: f64,
    pub u2: f64,
    pub un: f64,
    pub up: f64,
    pub u1_tilde: f64,
    pub u2_tilde: f64,
    pub z2_breaking_coeff: f64,
}

impl EffectiveCouplings {
    pub fn new(u0: f64, drive: &DriveParams) -> Self {
        let (u1, u2) = pulse_couplings(u0, drive.alpha);
        let (un, up) = drive.alphas4.map_or((0.0, 0.0), |a| pure_pair_couplings(u0, &a));
        let (u1_tilde, u2_tilde) = continuous_couplings(u0, drive.k0);
        let z2_breaking_coeff = impure_z2_coefficient(u0, drive.pulse_duration / drive.period);
        EffectiveCouplings { u1, u2, un, up, u1_tilde, u2_tilde, z2_breaking_coeff }
    }
}

/// `(U_1, U_2) = (U_0(1+α)/2, U_0(1−α)/2)`.
pub fn pulse_couplings(u0: f64, alpha: f64) -> (f64, f64) {
    (0.5 * u0 * (1.0 + alpha), 0.5 * u0 * (1.0 - alpha))
}

/// `(U_n, U_p) = (U_0(α_1+α_3), −U_0 α_2)`.
pub fn pure_pair_couplings(u0: f64, a: &[f64; 4]) -> (f64, f64) {
    (u0 * (a[0] + a[2]), -u0 * a[1])
}

/// `(Ũ_1, Ũ_2) = (U_0(3 + J_0(2K_0))/4, U_0(1 − J_0(2K_0))/4)`.
pub fn continuous_couplings(u0: f64, k0: f64) -> (f64, f64) {
    let j0 = bessel_j(0, 2.0 * k0);
    (0.25 * u0 * (3.0 + j0), 0.25 * u0 * (1.0 - j0))
}

/// Coefficient `(4U_0/3π)(t_p/T)` of the parity-breaking `J_yJ_z + J_zJ_y`
/// bond term of the finite-pulse effective Hamiltonian.
pub fn impure_z2_coefficient(u0: f64, tp_over_t: f64) -> f64 {
    4.0 * u0 / (3.0 * PI) * tp_over_t
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// elementary operators

fn n(mode: usize) -> OpSum {
    FermionTerm::density(1.0, mode).into()
}

/// `c†_i c†_j c_k c_l`.
fn quartic(coeff: f64, i: usize, j: usize, k: usize, l: usize) -> FermionTerm {
    FermionTerm::new(
        coeff,
        vec![Factor::create(i), Factor::create(j), Factor::annihilate(k), Factor::annihilate(l)],
    )
}

/// `Σ_bonds Σ_legs (c†_j c_{j+1} + h.c.)`.
pub fn hopping(rungs: usize, boundary: Boundary) -> OpSum {
    let mut out = OpSum::new();
    for (i, j) in bonds(rungs, boundary) {
        for (mi, mj) in [(mode_a(i), mode_a(j)), (mode_b(i), mode_b(j))] {
            out.push(FermionTerm::hop(1.0, mi, mj));
            out.push(FermionTerm::hop(1.0, mj, mi));
        }
    }
    out
}

/// `Σ_bonds (n^a_j n^a_{j+1} + n^b_j n^b_{j+1})`.
pub fn intra_leg_density(rungs: usize, boundary: Boundary) -> OpSum {
    let mut out = OpSum::new();
    for (i, j) in bonds(rungs, boundary) {
        out += &n(mode_a(i)) * &n(mode_a(j));
        out += &n(mode_b(i)) * &n(mode_b(j));
    }
    out
}

/// `Σ_bonds (n^a_j n^b_{j+1} + n^b_j n^a_{j+1})`.
pub fn inter_leg_density(rungs: usize, boundary: Boundary) -> OpSum {
    let mut out = OpSum::new();
    for (i, j) in bonds(rungs, boundary) {
        out += &n(mode_a(i)) * &n(mode_b(j));
        out += &n(mode_b(i)) * &n(mode_a(j));
    }
    out
}

/// `Σ_bonds (a†_j b†_{j+1} a_{j+1} b_j + h.c.)`.
pub fn swap(rungs: usize, boundary: Boundary) -> OpSum {
    bonds(rungs, boundary)
        .into_iter()
        .map(|(i, j)| quartic(1.0, mode_a(i), mode_b(j), mode_a(j), mode_b(i)))
        .collect::<OpSum>()
        .plus_hc()
}

/// `Σ_bonds (a†_j a†_{j+1} b_{j+1} b_j + h.c.)`.
pub fn pair_hopping(rungs: usize, boundary: Boundary) -> OpSum {
    bonds(rungs, boundary)
        .into_iter()
        .map(|(i, j)| quartic(1.0, mode_a(i), mode_a(j), mode_b(j), mode_b(i)))
        .collect::<OpSum>()
        .plus_hc()
}

/// Rung spin component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    X,
    Y,
    Z,
}

/// `J^j_μ` on rung `j`.
pub fn rung_spin(mu: Spin, rung: usize) -> OpSum {
    let (a, b) = (mode_a(rung), mode_b(rung));
    let terms = match mu {
        Spin::X => vec![FermionTerm::hop(0.5, a, b), FermionTerm::hop(0.5, b, a)],
        Spin::Y => vec![
            FermionTerm::hop(C64::new(0.0, -0.5), a, b),
            FermionTerm::hop(C64::new(0.0, 0.5), b, a),
        ],
        Spin::Z => vec![FermionTerm::density(0.5, a), FermionTerm::density(-0.5, b)],
    };
    OpSum::from_terms(terms)
}

/// `N^j = n^a_j + n^b_j`.
pub fn rung_number(rung: usize) -> OpSum {
    &n(mode_a(rung)) + &n(mode_b(rung))
}

/// `Σ_j J^j_μ`.
pub fn total_spin(mu: Spin, rungs: usize) -> OpSum {
    (0..rungs).fold(OpSum::new(), |acc, j| acc + rung_spin(mu, j))
}

pub fn total_number(rungs: usize) -> OpSum {
    (0..rungs).fold(OpSum::new(), |acc, j| acc + rung_number(j))
}

/// `N_a = Σ_j n^a_j`.
pub fn leg_number_a(rungs: usize) -> OpSum {
    (0..rungs).map(|j| FermionTerm::density(1.0, mode_a(j))).collect()
}

/// `Σ_bonds J^j_μ J^{j+1}_ν`.
pub fn bond_spin(mu: Spin, nu: Spin, rungs: usize, boundary: Boundary) -> OpSum {
    let mut out = OpSum::new();
    for (i, j) in bonds(rungs, boundary) {
        out += &rung_spin(mu, i) * &rung_spin(nu, j);
    }
    out
}

/// `Σ_bonds N^j N^{j+1}`.
pub fn bond_number(rungs: usize, boundary: Boundary) -> OpSum {
    let mut out = OpSum::new();
    for (i, j) in bonds(rungs, boundary) {
        out += &rung_number(i) * &rung_number(j);
    }
    out
}

/// `(J_x, J_y, J_z, N)` summed over rungs, built on a sector.
pub struct SpinTotals {
    pub jx: SparseOperator,
    pub jy: SparseOperator,
    pub jz: SparseOperator,
    pub number: SparseOperator,
}

pub fn spin_totals(basis: &Arc<SectorBasis>) -> Result<SpinTotals> {
    let l = basis.rungs();
    Ok(SpinTotals {
        jx: total_spin(Spin::X, l).build(basis)?,
        jy: total_spin(Spin::Y, l).build(basis)?,
        jz: total_spin(Spin::Z, l).build(basis)?,
        number: total_number(l).build(basis)?,
    })
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// Decoupled legs with intra-leg hopping and nearest-neighbour interaction.
pub fn h0(params: &ModelParams) -> OpSum {
    h0_with_interaction(params, params.u0)
}

/// `H_0` with the sign of the interaction flipped.
pub fn h0_prime(params: &ModelParams) -> OpSum {
    h0_with_interaction(params, -params.u0)
}

fn h0_with_interaction(params: &ModelParams, u: f64) -> OpSum {
    let mut out = hopping(params.rungs, params.boundary).scale(-params.tau);
    for (i, j) in params.bonds() {
        for (mi, mj) in [(mode_a(i), mode_a(j)), (mode_b(i), mode_b(j))] {
            out.push(quartic(u, mi, mj, mj, mi));
        }
    }
    out
}

/// Image of the bond operator `J_z^j J_z^{j+1}` under `e^{-iηJ_x} · e^{iηJ_x}`,
/// written in closed form.
pub fn rotated_zz(eta: f64, rungs: usize, boundary: Boundary) -> OpSum {
    let (s2, c2) = (2.0 * eta).sin_cos();
    // rounding residue of sin(π) would break leg parity at η = π/2
    let snap = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
    let (s2, c2) = (snap(s2), snap(c2));
    let zz = bond_spin(Spin::Z, Spin::Z, rungs, boundary);
    let yy = bond_spin(Spin::Y, Spin::Y, rungs, boundary);
    let out = (zz.clone() - yy.clone()).scale(0.5 * c2) + (zz + yy).scale(0.5);
    if s2 == 0.0 {
        return out;
    }
    let yz = bond_spin(Spin::Y, Spin::Z, rungs, boundary);
    let zy = bond_spin(Spin::Z, Spin::Y, rungs, boundary);
    out - (yz + zy).scale(0.5 * s2)
}

/// `H_1 = e^{-iηJ_x} H_0 e^{iηJ_x}` from the rotation identity of the bond
/// spin operators; hopping and `N^j N^{j+1}` are invariant.
pub fn h1_closed(params: &ModelParams, eta: f64) -> OpSum {
    let (l, bc) = (params.rungs, params.boundary);
    let interaction = rotated_zz(eta, l, bc).scale(2.0 * params.u0)
        + bond_number(l, bc).scale(0.5 * params.u0);
    hopping(l, bc).scale(-params.tau) + interaction
}

/// `e^{iθ J_μ}` as a dense matrix on a sector.
pub fn rotation(mu: Spin, theta: f64, basis: &Arc<SectorBasis>) -> Result<CMatrix> {
    let generator = total_spin(mu, basis.rungs()).build(basis)?.to_dense();
    // exp(iθJ) = exp(-i(-θ)J)
    Ok(linalg::expm_hermitian(&generator, -theta))
}

/// `H_1` by explicit conjugation of the dense `H_0`.
pub fn h1_by_conjugation(params: &ModelParams, eta: f64, basis: &Arc<SectorBasis>) -> Result<CMatrix> {
    let h = h0(params).build(basis)?.to_dense();
    let p = rotation(Spin::X, eta, basis)?;
    Ok(p.adjoint() * h * p)
}

/// Largest sector on which the dense cross-check of `H_1` runs.
pub const DENSE_CHECK_LIMIT: usize = 4096;

/// `H_1(η)` on a sector.
///
/// Debug builds also conjugate `H_0` densely (when the sector is small enough)
/// and fail on any deviation above 1e-12: the two routes pin the sign
/// convention shared by every builder.
pub fn h1_conjugated(params: &ModelParams, eta: f64, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    params.validate()?;
    let op = h1_closed(params, eta).build(basis)?;
    if cfg!(debug_assertions) && basis.dim() <= 512 && basis.leg_parity_filter().is_none() {
        let dense = h1_by_conjugation(params, eta, basis)?;
        let deviation = linalg::max_abs(&(op.to_dense() - dense));
        if deviation > 1e-12 {
            return Err(Error::Mismatch { what: "H_1 conjugation vs closed form", deviation, tolerance: 1e-12 });
        }
    }
    Ok(op)
}

/// `H_2 = e^{-iπ/2 J_y} H'_0 e^{iπ/2 J_y}` in spin form.
pub fn h2_closed(params: &ModelParams) -> OpSum {
    let (l, bc) = (params.rungs, params.boundary);
    let interaction = (bond_number(l, bc) + bond_spin(Spin::X, Spin::X, l, bc).scale(4.0))
        .scale(-0.5 * params.u0);
    hopping(l, bc).scale(-params.tau) + interaction
}

/// The fermionic form shared by the pulse and continuous-drive effective
/// Hamiltonians: hopping, `u1` intra-leg and `u2` inter-leg densities, `u2`
/// swap and `-u2` pair hopping.
pub fn ladder_effective_form(params: &ModelParams, u1: f64, u2: f64) -> OpSum {
    let (l, bc) = (params.rungs, params.boundary);
    hopping(l, bc).scale(-params.tau)
        + intra_leg_density(l, bc).scale(u1)
        + inter_leg_density(l, bc).scale(u2)
        + swap(l, bc).scale(u2)
        + pair_hopping(l, bc).scale(-u2)
}

/// Effective Hamiltonian of the instantaneous pulse sequence at `η = π/2`.
pub fn h_eff_pulse(params: &ModelParams, alpha: f64) -> Result<OpSum> {
    params.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    let (u1, u2) = pulse_couplings(params.u0, alpha);
    Ok(ladder_effective_form(params, u1, u2))
}

/// Lowest-order Trotter average `α H_0 + (1−α) H_1(η)` for any pulse angle.
pub fn h_eff_trotter(params: &ModelParams, alpha: f64, eta: f64) -> OpSum {
    h0(params).scale(alpha) + h1_closed(params, eta).scale(1.0 - alpha)
}

/// Effective Hamiltonian of the two-pulse sequence,
/// `(α_1+α_3) H_0 + α_2 H_1 + α_4 H_2`.
///
/// With `α_2 = α_4` this equals [`pure_pair_target`]; otherwise a
/// `J_xJ_x + J_yJ_y` residue survives (see [`pure_pair_residue`]).
pub fn h_eff_pure_pair(params: &ModelParams, alphas4: &[f64; 4]) -> Result<OpSum> {
    params.validate()?;
    check_alphas4(alphas4)?;
    let [a1, a2, a3, a4] = *alphas4;
    Ok(h0(params).scale(a1 + a3) + h1_closed(params, FRAC_PI_2).scale(a2) + h2_closed(params).scale(a4))
}

/// Hopping, `U_n` intra-leg densities and `U_p` pair hopping.
pub fn pure_pair_target(params: &ModelParams, un: f64, up: f64) -> OpSum {
    let (l, bc) = (params.rungs, params.boundary);
    hopping(l, bc).scale(-params.tau) + intra_leg_density(l, bc).scale(un) + pair_hopping(l, bc).scale(up)
}

/// Coefficient of `Σ(J_xJ_x + J_yJ_y)` left over by the two-pulse sequence:
/// `2U_0(α_2 − α_4)`, zero for the pure pair-hopping sequence.
pub fn pure_pair_residue(u0: f64, alphas4: &[f64; 4]) -> f64 {
    2.0 * u0 * (alphas4[1] - alphas4[3])
}

/// Lowest-order effective Hamiltonian of the cosine drive with strength `K_0`.
pub fn h_eff_continuous(params: &ModelParams, k0: f64) -> Result<OpSum> {
    params.validate()?;
    if !(k0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("K0 must be non-negative, got {k0}")));
    }
    let (u1, u2) = continuous_couplings(params.u0, k0);
    Ok(ladder_effective_form(params, u1, u2))
}

/// Finite-duration, impure-pulse effective Hamiltonian.
#[derive(Clone, Debug)]
pub struct ImpureEffective {
    pub op: OpSum,
    /// Coefficient of `Σ(J_y^j J_z^{j+1} + J_z^j J_y^{j+1})`.
    pub z2_breaking_coeff: f64,
}

/// `(α − r)H_0 + (1−α−r)H_1 + 2r[H_0 + U_0Σ(J_yJ_y − J_zJ_z)] + (4U_0/3π) r Σ(J_yJ_z + J_zJ_y)`
/// with `r = t_p/T` and `η = π/2`.
pub fn h_eff_impure(params: &ModelParams, alpha: f64, period: f64, pulse_duration: f64) -> Result<ImpureEffective> {
    params.validate()?;
    if !(pulse_duration > 0.0) || pulse_duration >= alpha * period || pulse_duration >= (1.0 - alpha) * period {
        return Err(Error::InvalidParameter(format!(
            "pulse duration {pulse_duration} must lie in (0, min(αT, (1−α)T)) for α = {alpha}, T = {period}"
        )));
    }
    let r = pulse_duration / period;
    let (l, bc) = (params.rungs, params.boundary);
    let u0 = params.u0;
    let z2 = impure_z2_coefficient(u0, r);
    let during_pulses = h0(params)
        + (bond_spin(Spin::Y, Spin::Y, l, bc) - bond_spin(Spin::Z, Spin::Z, l, bc)).scale(u0);
    let breaking = bond_spin(Spin::Y, Spin::Z, l, bc) + bond_spin(Spin::Z, Spin::Y, l, bc);
    let op = h0(params).scale(alpha - r)
        + h1_closed(params, FRAC_PI_2).scale(1.0 - alpha - r)
        + during_pulses.scale(2.0 * r)
        + breaking.scale(z2);
    Ok(ImpureEffective { op, z2_breaking_coeff: z2 })
}

/// Free legs plus `W (a†_j a†_{j+1} b_j b_{j+1} + b†_j b†_{j+1} a_j a_{j+1})`.
pub fn ladder_pairhop_w(t_hop: f64, w: f64, rungs: usize, boundary: Boundary) -> Result<OpSum> {
    if rungs < 2 {
        return Err(Error::InvalidParameter("the pair-hopping ladder needs at least two rungs".into()));
    }
    let mut out = hopping(rungs, boundary).scale(-t_hop);
    for (i, j) in bonds(rungs, boundary) {
        out.push(quartic(w, mode_a(i), mode_a(j), mode_b(i), mode_b(j)));
        out.push(quartic(w, mode_b(i), mode_b(j), mode_a(i), mode_a(j)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// operator decomposition

/// Operator shapes used to read amplitudes off a Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    Hopping,
    IntraLegDensity,
    InterLegDensity,
    Swap,
    PairHopping,
    BondNumber,
    JxJx,
    JyJy,
    JzJz,
    /// `Σ(J_yJ_z + J_zJ_y)`.
    YzSymmetric,
}

impl Pattern {
    pub fn op(self, rungs: usize, boundary: Boundary) -> OpSum {
        match self {
            Pattern::Hopping => hopping(rungs, boundary),
            Pattern::IntraLegDensity => intra_leg_density(rungs, boundary),
            Pattern::InterLegDensity => inter_leg_density(rungs, boundary),
            Pattern::Swap => swap(rungs, boundary),
            Pattern::PairHopping => pair_hopping(rungs, boundary),
            Pattern::BondNumber => bond_number(rungs, boundary),
            Pattern::JxJx => bond_spin(Spin::X, Spin::X, rungs, boundary),
            Pattern::JyJy => bond_spin(Spin::Y, Spin::Y, rungs, boundary),
            Pattern::JzJz => bond_spin(Spin::Z, Spin::Z, rungs, boundary),
            Pattern::YzSymmetric => {
                bond_spin(Spin::Y, Spin::Z, rungs, boundary) + bond_spin(Spin::Z, Spin::Y, rungs, boundary)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub amplitudes: Vec<(Pattern, f64)>,
    /// Frobenius norm of what the patterns do not explain.
    pub residual: f64,
}

impl Decomposition {
    pub fn amplitude(&self, pattern: Pattern) -> Option<f64> {
        self.amplitudes.iter().find(|(p, _)| *p == pattern).map(|&(_, a)| a)
    }
}

/// Least-squares amplitudes of `op` on the given patterns, accumulated over
/// every particle-number sector of the ladder.
pub fn decompose(op: &OpSum, patterns: &[Pattern], rungs: usize, boundary: Boundary) -> Result<Decomposition> {
    let k = patterns.len();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    let mut sectors = Vec::new();
    for n in 0..=2 * rungs {
        let basis = SectorBasis::new(rungs, n, None)?;
        let target = op.build(&basis)?.to_dense();
        let mats: Vec<CMatrix> = patterns
            .iter()
            .map(|p| p.op(rungs, boundary).build(&basis).map(|o| o.to_dense()))
            .collect::<Result<_>>()?;
        for a in 0..k {
            rhs[a] += frob_inner(&mats[a], &target);
            for b in 0..k {
                gram[(a, b)] += frob_inner(&mats[a], &mats[b]);
            }
        }
        sectors.push((target, mats));
    }
    let coeffs = gram
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("patterns are linearly dependent".into()))?;
    let mut residual = 0.0;
    for (target, mats) in &sectors {
        let mut r = target.clone();
        for (a, m) in mats.iter().enumerate() {
            r -= m * c(coeffs[a]);
        }
        residual += r.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(Decomposition {
        amplitudes: patterns.iter().copied().zip(coeffs.iter().copied()).collect(),
        residual: residual.sqrt(),
    })
}

fn frob_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{FockState, Parity};
    use crate::linalg::{commutator, eigvalsh, max_abs, op_norm, HermitianEigen};

    const ETAS: [f64; 5] = [0.0, 0.3, std::f64::consts::FRAC_PI_4, FRAC_PI_2, 2.0];

    fn dense(op: &OpSum, basis: &Arc<SectorBasis>) -> CMatrix {
        op.build(basis).unwrap().to_dense()
    }

    fn leg_parity_matrix(basis: &Arc<SectorBasis>) -> CMatrix {
        let d = basis.dim();
        CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                C64::new(crate::fockspace::leg_parity(basis.state(r)).sign(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn h0_matrix_elements() {
        let p = ModelParams::new(1.0, -0.7, 2);
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let h = h0(&p).build(&basis).unwrap();
        let a1a2 = FockState::from_modes(&[mode_a(0), mode_a(1)]);
        let a1b1 = FockState::from_modes(&[mode_a(0), mode_b(0)]);
        assert_eq!(h.element(a1a2, a1a2).unwrap(), c(-0.7));
        assert_eq!(h.element(a1b1, a1b1).unwrap(), c(0.0));
        assert!(h.hermiticity_defect() < 1e-12);
    }

    /// Oracle: all N-subsets of the 2L single-particle levels
    /// `−2τ cos(kπ/(L+1))`, each doubled by the two legs.
    fn free_many_body_spectrum(tau: f64, rungs: usize, n: usize) -> Vec<f64> {
        let mut levels = Vec::new();
        for k in 1..=rungs {
            let e = -2.0 * tau * (k as f64 * PI / (rungs as f64 + 1.0)).cos();
            levels.push(e);
            levels.push(e);
        }
        let m = levels.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize == n {
                out.push((0..m).filter(|&i| mask >> i & 1 == 1).map(|i| levels[i]).sum());
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn non_interacting_spectrum_is_two_free_chains() {
        for rungs in 2..=4 {
            for n in 0..=2 * rungs {
                let p = ModelParams::new(0.8, 0.0, rungs);
                let basis = SectorBasis::new(rungs, n, None).unwrap();
                let spec = eigvalsh(&dense(&h0(&p), &basis));
                let want = free_many_body_spectrum(0.8, rungs, n);
                assert!(linalg::spectrum_distance(&spec, &want) < 1e-10, "L={rungs} N={n}");
            }
        }
    }

    #[test]
    fn jx_commutes_with_hopping_but_not_interaction() {
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let jx = dense(&total_spin(Spin::X, 2), &basis);
        let free = dense(&h0(&ModelParams::new(1.0, 0.0, 2)), &basis);
        assert!(op_norm(&commutator(&free, &jx)) < 1e-13);
        let interacting = dense(&h0(&ModelParams::new(1.0, -0.7, 2)), &basis);
        assert!(op_norm(&commutator(&interacting, &jx)) > 0.1);
    }

    #[test]
    fn interaction_in_spin_form() {
        // U0 Σ(n n + n n) = U0/2 Σ (4 JzJz + NN)
        for rungs in 2..=3 {
            for n in 0..=2 * rungs {
                let basis = SectorBasis::new(rungs, n, None).unwrap();
                let bc = Boundary::Open;
                let a = dense(&intra_leg_density(rungs, bc), &basis);
                let b = dense(
                    &(bond_spin(Spin::Z, Spin::Z, rungs, bc).scale(2.0) + bond_number(rungs, bc).scale(0.5)),
                    &basis,
                );
                assert!(max_abs(&(a - b)) < 1e-14);
            }
        }
    }

    #[test]
    fn single_rung_spin_representation() {
        let one = SectorBasis::new(1, 1, None).unwrap();
        let jx = dense(&total_spin(Spin::X, 1), &one);
        let e = eigvalsh(&jx);
        assert!((e[0] + 0.5).abs() < 1e-14 && (e[1] - 0.5).abs() < 1e-14);
        for n in [0, 2] {
            let b = SectorBasis::new(1, n, None).unwrap();
            assert!(max_abs(&dense(&total_spin(Spin::X, 1), &b)) < 1e-15);
        }
    }

    #[test]
    fn spin_algebra_on_plaquette() {
        for n in 0..=4 {
            let basis = SectorBasis::new(2, n, None).unwrap();
            let t = spin_totals(&basis).unwrap();
            let (x, y, z) = (t.jx.to_dense(), t.jy.to_dense(), t.jz.to_dense());
            let i = C64::new(0.0, 1.0);
            assert!(op_norm(&(commutator(&x, &y) - &z * i)) < 1e-13);
            assert!(op_norm(&(commutator(&y, &z) - &x * i)) < 1e-13);
            assert!(op_norm(&(commutator(&z, &x) - &y * i)) < 1e-13);
        }
        // per rung, different rungs commute
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let x0 = dense(&rung_spin(Spin::X, 0), &basis);
        let y1 = dense(&rung_spin(Spin::Y, 1), &basis);
        assert!(op_norm(&commutator(&x0, &y1)) < 1e-14);
    }

    #[test]
    fn rotation_identity_per_bond() {
        for rungs in 2..=3 {
            for n in 0..=2 * rungs {
                let basis = SectorBasis::new(rungs, n, None).unwrap();
                let zz = dense(&bond_spin(Spin::Z, Spin::Z, rungs, Boundary::Open), &basis);
                for eta in ETAS {
                    let p = rotation(Spin::X, eta, &basis).unwrap();
                    let lhs = p.adjoint() * &zz * &p;
                    let rhs = dense(&rotated_zz(eta, rungs, Boundary::Open), &basis);
                    assert!(max_abs(&(lhs - rhs)) < 1e-12, "L={rungs} N={n} eta={eta}");
                }
            }
        }
    }

    #[test]
    fn h1_two_routes_agree() {
        for rungs in 2..=3 {
            let p = ModelParams::new(1.0, -0.9, rungs);
            for n in 0..=2 * rungs {
                let basis = SectorBasis::new(rungs, n, None).unwrap();
                for eta in ETAS.iter().copied().chain([0.73]) {
                    let closed = dense(&h1_closed(&p, eta), &basis);
                    let conj = h1_by_conjugation(&p, eta, &basis).unwrap();
                    assert!(max_abs(&(closed - conj)) < 1e-12);
                    assert!(h1_conjugated(&p, eta, &basis).is_ok());
                }
            }
        }
    }

    #[test]
    fn h1_limits() {
        let p = ModelParams::new(1.0, -0.7, 3);
        let basis = SectorBasis::new(3, 3, None).unwrap();
        assert!(max_abs(&(dense(&h1_closed(&p, 0.0), &basis) - dense(&h0(&p), &basis))) < 1e-14);
        // η = π/2: J_zJ_z -> J_yJ_y
        let want = hopping(3, Boundary::Open).scale(-1.0)
            + (bond_spin(Spin::Y, Spin::Y, 3, Boundary::Open).scale(4.0) + bond_number(3, Boundary::Open))
                .scale(0.5 * p.u0);
        assert!(max_abs(&(dense(&h1_closed(&p, FRAC_PI_2), &basis) - dense(&want, &basis))) < 1e-14);
    }

    #[test]
    fn h1_breaks_leg_parity_unless_sin_2eta_vanishes() {
        let p = ModelParams::new(1.0, -0.7, 2);
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let par = leg_parity_matrix(&basis);
        let at = |eta: f64| op_norm(&commutator(&dense(&h1_closed(&p, eta), &basis), &par));
        assert!(at(std::f64::consts::FRAC_PI_4) > 0.1);
        assert!(at(FRAC_PI_2) < 1e-12);
        assert!(at(0.0) < 1e-12);
    }

    #[test]
    fn pulse_couplings_values() {
        let (u1, u2) = pulse_couplings(-1.5, 0.5);
        assert!((u1 + 1.125).abs() < 1e-15);
        assert!((u2 + 0.375).abs() < 1e-15);
        assert_eq!(pulse_couplings(-1.5, 1.0).1, 0.0);
    }

    #[test]
    fn fermionic_effective_form_equals_trotter_average() {
        for rungs in 2..=3 {
            for &alpha in &[0.0, 1.0 / 3.0, 0.5, 0.8, 1.0] {
                let p = ModelParams::new(1.0, -0.7, rungs);
                for n in 0..=2 * rungs {
                    let basis = SectorBasis::new(rungs, n, None).unwrap();
                    let fermionic = dense(&h_eff_pulse(&p, alpha).unwrap(), &basis);
                    let h1 = h1_by_conjugation(&p, FRAC_PI_2, &basis).unwrap();
                    let avg = dense(&h0(&p), &basis) * c(alpha) + h1 * c(1.0 - alpha);
                    assert!(max_abs(&(fermionic - avg)) < 1e-12, "L={rungs} N={n} alpha={alpha}");
                }
            }
        }
    }

    #[test]
    fn undriven_pulse_hamiltonian_is_h0() {
        let p = ModelParams::new(1.0, -1.1, 3);
        let basis = SectorBasis::new(3, 3, None).unwrap();
        let a = dense(&h_eff_pulse(&p, 1.0).unwrap(), &basis);
        assert!(max_abs(&(a - dense(&h0(&p), &basis))) < 1e-14);
        assert!(h_eff_pulse(&p, 1.2).is_err());
    }

    #[test]
    fn effective_hamiltonians_conserve_leg_parity_and_number() {
        let p = ModelParams::new(1.0, -0.9, 3);
        let ops = [
            h_eff_pulse(&p, 0.3).unwrap(),
            h_eff_pure_pair(&p, &[0.1, 0.3, 0.2, 0.4]).unwrap(),
            h_eff_continuous(&p, 1.3).unwrap(),
            ladder_pairhop_w(1.0, -0.8, 3, Boundary::Open).unwrap(),
        ];
        for n in 0..=6 {
            let basis = SectorBasis::new(3, n, None).unwrap();
            let par = leg_parity_matrix(&basis);
            for op in &ops {
                let m = dense(op, &basis);
                assert!(linalg::hermiticity_defect(&m) < 1e-12);
                assert!(op_norm(&commutator(&m, &par)) < 1e-12);
            }
        }
        // number conservation: on the full Fock space (both fermion-parity sectors)
        for parity in [Parity::Even, Parity::Odd] {
            let full = SectorBasis::with_fermion_parity(6, parity).unwrap();
            let number = dense(&total_number(3), &full);
            for op in &ops {
                let m = dense(op, &full);
                assert!(op_norm(&commutator(&m, &number)) < 1e-12);
            }
        }
    }

    #[test]
    fn isospectral_under_alpha_reflection() {
        for rungs in 2..=4 {
            let p = ModelParams::new(1.0, -1.3, rungs);
            for &alpha in &[0.2, 1.0 / 3.0] {
                for n in 0..=2 * rungs {
                    let basis = SectorBasis::new(rungs, n, None).unwrap();
                    let a = eigvalsh(&dense(&h_eff_pulse(&p, alpha).unwrap(), &basis));
                    let b = eigvalsh(&dense(&h_eff_pulse(&p, 1.0 - alpha).unwrap(), &basis));
                    assert!(linalg::spectrum_distance(&a, &b) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pure_pair_couplings_values() {
        let (un, up) = pure_pair_couplings(-1.0, &[0.25; 4]);
        assert!((un + 0.5).abs() < 1e-15);
        assert!((up - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pair_identity_in_spin_language() {
        // J_yJ_y − J_xJ_x = −½ (a†a†bb + h.c.) per bond
        for n in 0..=4 {
            let basis = SectorBasis::new(2, n, None).unwrap();
            let bc = Boundary::Open;
            let lhs = dense(&(bond_spin(Spin::Y, Spin::Y, 2, bc) - bond_spin(Spin::X, Spin::X, 2, bc)), &basis);
            let rhs = dense(&pair_hopping(2, bc).scale(-0.5), &basis);
            assert!(max_abs(&(lhs - rhs)) < 1e-13);
        }
    }

    #[test]
    fn h2_two_routes_agree() {
        let p = ModelParams::new(1.0, -0.8, 3);
        for n in 0..=6 {
            let basis = SectorBasis::new(3, n, None).unwrap();
            let w = rotation(Spin::Y, FRAC_PI_2, &basis).unwrap();
            let conj = w.adjoint() * dense(&h0_prime(&p), &basis) * w;
            assert!(max_abs(&(conj - dense(&h2_closed(&p), &basis))) < 1e-12);
        }
    }

    #[test]
    fn pure_pair_sequence_has_only_pair_hopping() {
        let p = ModelParams::new(1.0, -1.0, 3);
        let alphas = [0.2, 0.15, 0.5, 0.15];
        let op = h_eff_pure_pair(&p, &alphas).unwrap();
        let (un, up) = pure_pair_couplings(p.u0, &alphas);
        for n in 0..=6 {
            let basis = SectorBasis::new(3, n, None).unwrap();
            let target = dense(&pure_pair_target(&p, un, up), &basis);
            assert!(max_abs(&(dense(&op, &basis) - target)) < 1e-12);
        }
        let patterns = [
            Pattern::Hopping,
            Pattern::IntraLegDensity,
            Pattern::InterLegDensity,
            Pattern::Swap,
            Pattern::PairHopping,
        ];
        let d = decompose(&op, &patterns, 3, Boundary::Open).unwrap();
        assert!(d.residual < 1e-10);
        assert!(d.amplitude(Pattern::Swap).unwrap().abs() < 1e-12);
        assert!(d.amplitude(Pattern::InterLegDensity).unwrap().abs() < 1e-12);
        assert!((d.amplitude(Pattern::PairHopping).unwrap() - up).abs() < 1e-12);
        assert!((d.amplitude(Pattern::IntraLegDensity).unwrap() - un).abs() < 1e-12);
        assert!((d.amplitude(Pattern::Hopping).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_two_pulse_sequence_leaves_residue() {
        let p = ModelParams::new(1.0, -1.0, 3);
        let alphas = [0.2, 0.3, 0.4, 0.1];
        let op = h_eff_pure_pair(&p, &alphas).unwrap();
        let patterns = [Pattern::Hopping, Pattern::BondNumber, Pattern::JxJx, Pattern::JyJy, Pattern::JzJz];
        let d = decompose(&op, &patterns, 3, Boundary::Open).unwrap();
        assert!(d.residual < 1e-10);
        let residue = d.amplitude(Pattern::JxJx).unwrap() + d.amplitude(Pattern::JyJy).unwrap();
        assert!((residue - pure_pair_residue(p.u0, &alphas)).abs() < 1e-12);
        assert!(residue.abs() > 0.1);
        assert!(h_eff_pure_pair(&p, &[0.2, 0.3, 0.4, 0.2]).is_err());
    }

    #[test]
    fn continuous_drive_limits() {
        let p = ModelParams::new(1.0, -0.6, 3);
        let basis = SectorBasis::new(3, 3, None).unwrap();
        let k0 = dense(&h_eff_continuous(&p, 0.0).unwrap(), &basis);
        assert!(max_abs(&(k0 - dense(&h0(&p), &basis))) < 1e-14);

        // first zero of J_0 by bisection on the series
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if bessel_j(0, lo) * bessel_j(0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 2.404_825_557_695_773).abs() < 1e-12);
        let (u1, u2) = continuous_couplings(p.u0, root / 2.0);
        assert!((u1 - 0.75 * p.u0).abs() < 1e-12);
        assert!((u2 - 0.25 * p.u0).abs() < 1e-12);
    }

    #[test]
    fn impure_pulse_coefficients() {
        let z2 = impure_z2_coefficient(-0.7, 1.0 / 20.0);
        assert!((z2 - (-0.014_854_461)).abs() < 1e-9);
        let p = ModelParams::new(1.0, -0.7, 2);
        assert!(h_eff_impure(&p, 0.5, 0.1, 0.05).is_err());
        assert!(h_eff_impure(&p, 0.5, 0.1, 0.0).is_err());
        // small t_p approaches the instantaneous-pulse Hamiltonian linearly
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let ideal = dense(&h_eff_pulse(&p, 0.5).unwrap(), &basis);
        let mut prev = f64::INFINITY;
        for tp in [1e-2, 1e-3, 1e-4] {
            let imp = h_eff_impure(&p, 0.5, 1.0, tp).unwrap();
            let dev = op_norm(&(dense(&imp.op, &basis) - &ideal));
            assert!(dev < prev / 5.0 && dev < 50.0 * tp);
            prev = dev;
        }
    }

    #[test]
    fn impure_pulse_weights_reproduce_finite_pulse_form() {
        // without the pulse-interval contributions the weights are (α − r), (1 − α − r)
        let p = ModelParams::new(1.0, -0.7, 2);
        let (alpha, period, tp) = (0.5, 0.1, 0.1 / 20.0);
        let r = tp / period;
        let imp = h_eff_impure(&p, alpha, period, tp).unwrap();
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let bc = Boundary::Open;
        let pulses = (h0(&p) + (bond_spin(Spin::Y, Spin::Y, 2, bc) - bond_spin(Spin::Z, Spin::Z, 2, bc)).scale(p.u0))
            .scale(2.0 * r)
            + (bond_spin(Spin::Y, Spin::Z, 2, bc) + bond_spin(Spin::Z, Spin::Y, 2, bc)).scale(imp.z2_breaking_coeff);
        let finite = dense(&imp.op, &basis) - dense(&pulses, &basis);
        let want = dense(&h0(&p), &basis) * c(alpha - r) + dense(&h1_closed(&p, FRAC_PI_2), &basis) * c(1.0 - alpha - r);
        assert!(max_abs(&(finite - want)) < 1e-13);
    }

    #[test]
    fn pairhop_ladder() {
        let basis = SectorBasis::new(2, 2, None).unwrap();
        let free = dense(&ladder_pairhop_w(1.0, 0.0, 2, Boundary::Open).unwrap(), &basis);
        let chains = dense(&hopping(2, Boundary::Open).scale(-1.0), &basis);
        assert!(max_abs(&(free - chains)) < 1e-15);

        let w = -0.9;
        let h = ladder_pairhop_w(1.0, w, 2, Boundary::Open).unwrap().build(&basis).unwrap();
        let a1a2 = FockState::from_modes(&[mode_a(0), mode_a(1)]);
        let b1b2 = FockState::from_modes(&[mode_b(0), mode_b(1)]);
        // b_1 passes b_0 once, everything else is unsigned
        assert!((h.element(a1a2, b1b2).unwrap() - c(-w)).norm() < 1e-15);
        assert!((h.element(a1a2, b1b2).unwrap().norm() - w.abs()).abs() < 1e-15);
        assert!(ladder_pairhop_w(1.0, w, 1, Boundary::Open).is_err());
    }

    #[test]
    fn pairhop_ladder_commutes_with_leg_parity_randomly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (t, w) = (rng.gen_range(0.1..2.0), rng.gen_range(-2.0..2.0));
            for n in 0..=6 {
                let basis = SectorBasis::new(3, n, None).unwrap();
                let m = dense(&ladder_pairhop_w(t, w, 3, Boundary::Open).unwrap(), &basis);
                assert!(op_norm(&commutator(&m, &leg_parity_matrix(&basis))) < 1e-14);
            }
        }
    }

    #[test]
    fn periodic_bonds() {
        assert_eq!(bonds(4, Boundary::Periodic).len(), 4);
        assert_eq!(bonds(2, Boundary::Periodic).len(), 1);
        assert_eq!(bonds(4, Boundary::Open).len(), 3);
        let p = ModelParams::new(1.0, 0.0, 4).periodic();
        let basis = SectorBasis::new(4, 1, None).unwrap();
        let e = HermitianEigen::new(&dense(&h0(&p), &basis)).values;
        // ring of 4: -2cos(2πk/4), each twice
        let mut want: Vec<f64> =
            (0..4).flat_map(|k| [-2.0 * (2.0 * PI * k as f64 / 4.0).cos(); 2]).collect();
        want.sort_by(f64::total_cmp);
        assert!(linalg::spectrum_distance(&e, &want) < 1e-12);
    }
}
