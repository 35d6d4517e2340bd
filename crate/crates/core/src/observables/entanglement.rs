use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockspace::{leg_parity, FockState, Parity, SectorBasis};
use crate::linalg::{eigvalsh, CMatrix, ZERO};
use crate::C64;

/// Schmidt weights below this are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-15;

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementLevel {
    /// `ξ = −ln λ`.
    pub xi: f64,
    pub lambda: f64,
    /// Particles in the left block.
    pub charge: u32,
    /// Leg parity of the left block, when the state has a definite one.
    pub parity_left: Option<Parity>,
}

/// How Schmidt blocks are labelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blocking {
    /// Left particle number.
    Charge,
    /// Left particle number and left leg parity.
    ChargeAndLegParity,
    /// Left fermion parity only, for states without fixed particle number.
    FermionParity,
}

/// Entanglement spectrum of a ladder state for a cut after `cut_rung`
/// rungs, ascending in `ξ`.
pub fn entanglement_spectrum(basis: &Arc<SectorBasis>, psi: &[C64], cut_rung: usize) -> Result<Vec<EntanglementLevel>> {
    if cut_rung == 0 || cut_rung >= basis.rungs() {
        return Err(Error::InvalidParameter(format!(
            "cut after rung {cut_rung} does not split a {}-rung ladder",
            basis.rungs()
        )));
    }
    let definite = definite_leg_parity(basis, psi);
    let blocking = if definite { Blocking::ChargeAndLegParity } else { Blocking::Charge };
    schmidt_levels(basis, psi, 2 * cut_rung, blocking)
}

fn definite_leg_parity(basis: &SectorBasis, psi: &[C64]) -> bool {
    let mut seen: Option<Parity> = None;
    for (s, z) in basis.states().iter().zip(psi) {
        if z.norm_sqr() > SCHMIDT_CUTOFF {
            let p = leg_parity(*s);
            match seen {
                None => seen = Some(p),
                Some(q) if q != p => return false,
                _ => {}
            }
        }
    }
    true
}

/// Schmidt spectrum for a bipartition into the lowest `left_modes` modes
/// and the rest.
pub fn schmidt_levels(
    basis: &Arc<SectorBasis>,
    psi: &[C64],
    left_modes: usize,
    blocking: Blocking,
) -> Result<Vec<EntanglementLevel>> {
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: psi.len() });
    }
    if left_modes == 0 || left_modes >= basis.n_modes() {
        return Err(Error::InvalidParameter(format!("{left_modes} left modes of {}", basis.n_modes())));
    }
    let mask = (1u64 << left_modes) - 1;
    let key = |left: u64| -> (u32, u8) {
        let s = FockState(left);
        match blocking {
            Blocking::Charge => (s.count(), 0),
            Blocking::ChargeAndLegParity => (s.count(), leg_parity(s) as u8),
            Blocking::FermionParity => (0, (s.count() % 2) as u8),
        }
    };
    // block -> (left index, right index, amplitudes)
    type Block = (BTreeMap<u64, usize>, BTreeMap<u64, usize>, Vec<(usize, usize, C64)>);
    let mut blocks: BTreeMap<(u32, u8), Block> = BTreeMap::new();
    for (s, &z) in basis.states().iter().zip(psi) {
        let left = s.bits() & mask;
        let right = s.bits() >> left_modes;
        let b = blocks.entry(key(left)).or_default();
        let nl = b.0.len();
        let i = *b.0.entry(left).or_insert(nl);
        let nr = b.1.len();
        let j = *b.1.entry(right).or_insert(nr);
        b.2.push((i, j, z));
    }
    let mut levels = Vec::new();
    for ((charge, tag), (lefts, rights, amps)) in blocks {
        let m = CMatrix::from_fn(lefts.len(), rights.len(), |_, _| ZERO);
        let mut m = m;
        for (i, j, z) in amps {
            m[(i, j)] += z;
        }
        let rho = if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m };
        let parity_left = match blocking {
            Blocking::ChargeAndLegParity => Some(if tag == 0 { Parity::Even } else { Parity::Odd }),
            _ => None,
        };
        let charge = if blocking == Blocking::FermionParity { tag as u32 } else { charge };
        for lambda in eigvalsh(&rho) {
            if lambda > SCHMIDT_CUTOFF {
                levels.push(EntanglementLevel { xi: -lambda.ln(), lambda, charge, parity_left });
            }
        }
    }
    levels.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    Ok(levels)
}

/// Degeneracy test on the lowest `2 * pairs` levels, grouped as
/// `(ξ_0, ξ_1), (ξ_2, ξ_3), ...`.
#[derive(Clone, Debug, Serialize)]
pub struct PairingDefect {
    /// Largest splitting within a pair.
    pub max_split: f64,
    /// Mean spacing `(ξ_{2p−1} − ξ_0) / (2p − 1)`.
    pub mean_spacing: f64,
}

impl PairingDefect {
    pub fn relative(&self) -> f64 {
        self.max_split / self.mean_spacing
    }
}

pub fn pairing_defect(levels: &[EntanglementLevel], pairs: usize) -> Result<PairingDefect> {
    let n = 2 * pairs;
    if pairs == 0 || levels.len() < n {
        return Err(Error::InvalidParameter(format!("{} levels cannot form {pairs} pairs", levels.len())));
    }
    let xi: Vec<f64> = levels[..n].iter().map(|l| l.xi).collect();
    let max_split = xi.chunks(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
    Ok(PairingDefect { max_split, mean_spacing: (xi[n - 1] - xi[0]) / (n - 1) as f64 })
}
