//! Physical signatures: parity-change dynamics, ground states, charge gaps,
//! correlations and entanglement spectra.

mod entanglement;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::Floquet;
use crate::fockspace::{leg_parity, FermionTerm, Leg, OpSum, Parity, SectorBasis, SparseOperator};
use crate::krylov::{lowest_eigenpairs, EigenPair, LanczosConfig, LinearOperator};
use crate::linalg::HermitianEigen;
use crate::C64;

pub use entanglement::{
    entanglement_spectrum, pairing_defect, schmidt_levels, Blocking, EntanglementLevel, PairingDefect,
    SCHMIDT_CUTOFF,
};

/// Mean weight on opposite-leg-parity states, averaged over all initial
/// basis states of a sector.
#[derive(Clone, Debug, Serialize)]
pub struct ParityChangeSeries {
    pub times: Vec<f64>,
    pub stroboscopic: Vec<bool>,
    pub mean_probability: Vec<f64>,
}

impl ParityChangeSeries {
    pub fn max_stroboscopic(&self) -> f64 {
        self.iter_stroboscopic().map(|(_, p)| p).fold(0.0, f64::max)
    }

    pub fn iter_stroboscopic(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.times.len())
            .filter(|&i| self.stroboscopic[i])
            .map(|i| (self.times[i], self.mean_probability[i]))
    }
}

/// `P(s, t) = Σ_{s': 𝒫(s') ≠ 𝒫(s)} |⟨s'|U(t)|s⟩|²`, averaged over `s`.
pub fn parity_change_probability(floquet: &Floquet) -> Result<ParityChangeSeries> {
    let basis = floquet.basis().clone();
    let d = basis.dim();
    let parities: Vec<Parity> = basis.states().iter().map(|&s| leg_parity(s)).collect();
    if parities.iter().all(|&p| p == parities[0]) {
        return Err(Error::InvalidParameter("sector has a single leg-parity class".into()));
    }
    let runs: Vec<(Vec<f64>, Vec<bool>, Vec<f64>)> = (0..d)
        .into_par_iter()
        .map(|s| {
            let mut psi0 = vec![C64::new(0.0, 0.0); d];
            psi0[s] = C64::new(1.0, 0.0);
            let (mut times, mut strobe, mut probs) = (Vec::new(), Vec::new(), Vec::new());
            floquet.run(&psi0, |sample| {
                let p: f64 = sample
                    .state
                    .iter()
                    .zip(&parities)
                    .filter(|(_, &par)| par != parities[s])
                    .map(|(z, _)| z.norm_sqr())
                    .sum();
                times.push(sample.time);
                strobe.push(sample.stroboscopic);
                probs.push(p);
            })?;
            Ok((times, strobe, probs))
        })
        .collect::<Result<_>>()?;
    let (times, stroboscopic, _) = runs[0].clone();
    let mut mean = vec![0.0; times.len()];
    for (_, _, p) in &runs {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / d as f64;
        }
    }
    Ok(ParityChangeSeries { times, stroboscopic, mean_probability: mean.into_iter().map(|x| x.clamp(0.0, 1.0)).collect() })
}

/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_GROUND_STATE_LIMIT: usize = 64;

/// The `k` lowest eigenpairs, ascending; Lanczos with full
/// reorthogonalization above [`DENSE_GROUND_STATE_LIMIT`].
pub fn ground_states(h: &SparseOperator, k: usize) -> Result<Vec<EigenPair>> {
    ground_states_with(h, k, &LanczosConfig::default())
}

pub fn ground_states_with(h: &dyn LinearOperator, k: usize, cfg: &LanczosConfig) -> Result<Vec<EigenPair>> {
    let d = h.dim();
    if k > d {
        return Err(Error::InvalidParameter(format!("requested {k} states of a {d}-dimensional sector")));
    }
    if d > DENSE_GROUND_STATE_LIMIT {
        return lowest_eigenpairs(h, k, cfg);
    }
    let m = crate::linalg::CMatrix::from_fn(d, d, |r, c| {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[c] = C64::new(1.0, 0.0);
        h.apply(&e)[r]
    });
    let eig = HermitianEigen::new(&m);
    Ok((0..k)
        .map(|i| {
            let vector = eig.vector(i);
            let hv = h.apply(&vector);
            let residual = hv
                .iter()
                .zip(&vector)
                .map(|(a, b)| (a - b * eig.values[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            EigenPair { energy: eig.values[i], vector, residual }
        })
        .collect())
}

/// Ground-state energies around filling `N`.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub rungs: usize,
    pub particles: usize,
    /// `(N, leg parity, E_0)` for every nonempty sector at `N−1, N, N+1`.
    pub e0: Vec<(usize, Parity, f64)>,
    pub delta_q_plus: f64,
    pub delta_q_minus: f64,
    pub delta_topo: f64,
    /// `E_1 − E_0` at fixed `N`, both parities together.
    pub delta_q0: f64,
    /// `|E_0(N, +) − E_0(N, −)|`.
    pub parity_splitting: f64,
    /// Smallest first excitation within a single parity sector at fixed `N`.
    pub within_parity_gap: f64,
}

impl GapReport {
    pub fn e0(&self, n: usize, parity: Parity) -> Option<f64> {
        self.e0.iter().find(|(m, p, _)| *m == n && *p == parity).map(|e| e.2)
    }

    /// Lowest energy at `n` over both parities.
    pub fn e0_total(&self, n: usize) -> Option<f64> {
        self.e0.iter().filter(|(m, _, _)| *m == n).map(|e| e.2).reduce(f64::min)
    }
}

/// Charge gaps from ground states in the leg-parity-resolved sectors at
/// `N−1, N, N+1`; `h` builds the Hamiltonian on a sector.
pub fn charge_gaps(
    h: impl Fn(&Arc<SectorBasis>) -> Result<SparseOperator> + Sync,
    rungs: usize,
    particles: usize,
) -> Result<GapReport> {
    if particles == 0 || particles >= 2 * rungs {
        return Err(Error::InvalidParameter(format!(
            "N = {particles} is at the edge of the allowed range 0..={}",
            2 * rungs
        )));
    }
    let jobs: Vec<(usize, Parity)> = [particles - 1, particles, particles + 1]
        .into_iter()
        .flat_map(|n| [(n, Parity::Even), (n, Parity::Odd)])
        .collect();
    let results: Vec<Option<(usize, Parity, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(n, p)| {
            let basis = SectorBasis::new(rungs, n, Some(p))?;
            if basis.dim() == 0 {
                return Ok(None);
            }
            let k = if n == particles { basis.dim().min(2) } else { 1 };
            let op = h(&basis)?;
            let pairs = ground_states(&op, k)?;
            Ok(Some((n, p, pairs.iter().map(|e| e.energy).collect())))
        })
        .collect::<Result<_>>()?;
    let results: Vec<(usize, Parity, Vec<f64>)> = results.into_iter().flatten().collect();
    let e0: Vec<(usize, Parity, f64)> = results.iter().map(|(n, p, e)| (*n, *p, e[0])).collect();
    let lowest = |n: usize| e0.iter().filter(|e| e.0 == n).map(|e| e.2).fold(f64::INFINITY, f64::min);
    let (em, e, ep) = (lowest(particles - 1), lowest(particles), lowest(particles + 1));
    let delta_q_plus = ep - e;
    let delta_q_minus = em - e;
    let mut at_n: Vec<f64> = results.iter().filter(|r| r.0 == particles).flat_map(|r| r.2.clone()).collect();
    at_n.sort_by(f64::total_cmp);
    let per_parity: Vec<&(usize, Parity, Vec<f64>)> = results.iter().filter(|r| r.0 == particles).collect();
    let parity_splitting = if per_parity.len() == 2 {
        (per_parity[0].2[0] - per_parity[1].2[0]).abs()
    } else {
        f64::NAN
    };
    let within_parity_gap = per_parity
        .iter()
        .filter(|r| r.2.len() > 1)
        .map(|r| r.2[1] - r.2[0])
        .fold(f64::INFINITY, f64::min);
    Ok(GapReport {
        rungs,
        particles,
        e0,
        delta_q_plus,
        delta_q_minus,
        delta_topo: 0.5 * (delta_q_plus + delta_q_minus),
        delta_q0: at_n.get(1).map_or(f64::NAN, |e1| e1 - at_n[0]),
        parity_splitting,
        within_parity_gap,
    })
}

/// `⟨ψ|c†_i c_j|ψ⟩` on one leg, rungs `i, j` (0-based).
pub fn two_point(basis: &Arc<SectorBasis>, psi: &[C64], leg: Leg, i: usize, j: usize) -> Result<C64> {
    let op: OpSum = FermionTerm::hop(1.0, leg.mode(i), leg.mode(j)).into();
    Ok(op.build(basis)?.expectation(psi))
}

/// `⟨ψ|b†_j a_j|ψ⟩`, zero on every leg-parity eigenstate.
pub fn order_parameter(basis: &Arc<SectorBasis>, psi: &[C64], j: usize) -> Result<C64> {
    let op: OpSum = FermionTerm::hop(1.0, Leg::B.mode(j), Leg::A.mode(j)).into();
    Ok(op.build(basis)?.expectation(psi))
}

/// Period of an oscillating series from its mid-level crossings, which sit
/// half a period apart.
pub fn oscillation_period(series: &[(f64, f64)]) -> Result<f64> {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    let mid = 0.5 * (lo + hi);
    let crossings: Vec<f64> = series
        .windows(2)
        .filter(|w| (w[0].1 - mid) * (w[1].1 - mid) < 0.0)
        .map(|w| {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            t0 + (mid - y0) * (t1 - t0) / (y1 - y0)
        })
        .collect();
    if crossings.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least three mid-level crossings to estimate a period, found {}",
            crossings.len()
        )));
    }
    let n = crossings.len() - 1;
    Ok(2.0 * (crossings[n] - crossings[0]) / n as f64)
}
