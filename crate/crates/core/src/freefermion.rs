//! Exact quadratic toolkit for the Kitaev chain
//! `H = −t Σ (c†_j c_{j+1} + h.c.) − μ Σ n_j − Δ Σ (c_j c_{j+1} + h.c.)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{Factor, FermionTerm, OpSum, Parity, SectorBasis};
use crate::linalg::{eigvalsh, CMatrix, HermitianEigen};
use crate::models::Boundary;
use crate::observables::{schmidt_levels, Blocking, EntanglementLevel, SCHMIDT_CUTOFF};
use crate::C64;

/// Quasiparticle energies below this count as exact zero modes.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KitaevParams {
    pub t: f64,
    pub mu: f64,
    pub delta: f64,
    pub sites: usize,
    pub boundary: Boundary,
}

impl KitaevParams {
    pub fn open(t: f64, mu: f64, delta: f64, sites: usize) -> Self {
        KitaevParams { t, mu, delta, sites, boundary: Boundary::Open }
    }

    pub fn periodic(t: f64, mu: f64, delta: f64, sites: usize) -> Self {
        KitaevParams { boundary: Boundary::Periodic, ..Self::open(t, mu, delta, sites) }
    }

    pub fn validate(&self) -> Result<()> {
        let min = if self.boundary == Boundary::Periodic { 3 } else { 2 };
        if self.sites < min {
            return Err(Error::InvalidParameter(format!("{} sites, need at least {min}", self.sites)));
        }
        if ![self.t, self.mu, self.delta].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Kitaev parameter".into()));
        }
        Ok(())
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.sites;
        let mut b: Vec<(usize, usize)> = (0..l - 1).map(|j| (j, j + 1)).collect();
        if self.boundary == Boundary::Periodic {
            b.push((l - 1, 0));
        }
        b
    }

    /// Normal block `h` and antisymmetric pairing block `D` of
    /// `H = c† h c + ½ (c† D c†ᵀ + h.c.)`.
    fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let l = self.sites;
        let mut h = DMatrix::from_diagonal_element(l, l, -self.mu);
        let mut d = DMatrix::zeros(l, l);
        for (i, j) in self.bonds() {
            h[(i, j)] -= self.t;
            h[(j, i)] -= self.t;
            // −Δ c†_j c†_i
            d[(j, i)] -= self.delta;
            d[(i, j)] += self.delta;
        }
        (h, d)
    }

    /// `H_BdG` in the basis `(c_1..c_L, c†_1..c†_L)`, so that
    /// `H = ½ Ψ† H_BdG Ψ + ½ tr h`.
    pub fn bdg_matrix(&self) -> CMatrix {
        let l = self.sites;
        let (h, d) = self.blocks();
        CMatrix::from_fn(2 * l, 2 * l, |r, c| {
            let v = match (r < l, c < l) {
                (true, true) => h[(r, c)],
                (true, false) => d[(r, c - l)],
                (false, true) => d[(c, r - l)],
                (false, false) => -h[(c - l, r - l)],
            };
            C64::new(v, 0.0)
        })
    }

    /// Real antisymmetric `A` with `H = (i/4) Σ A_ab γ_a γ_b + const`, where
    /// `c_j = (γ_{2j} + iγ_{2j+1})/2`.
    pub fn majorana_matrix(&self) -> DMatrix<f64> {
        let l = self.sites;
        let mut omega = CMatrix::zeros(2 * l, 2 * l);
        for j in 0..l {
            omega[(j, 2 * j)] = C64::new(0.5, 0.0);
            omega[(j, 2 * j + 1)] = C64::new(0.0, 0.5);
            omega[(l + j, 2 * j)] = C64::new(0.5, 0.0);
            omega[(l + j, 2 * j + 1)] = C64::new(0.0, -0.5);
        }
        let m = omega.adjoint() * self.bdg_matrix() * omega;
        DMatrix::from_fn(2 * l, 2 * l, |r, c| 2.0 * m[(r, c)].im)
    }

    /// Dispersion of the translation-invariant chain.
    pub fn dispersion(&self, k: f64) -> f64 {
        ((2.0 * self.t * k.cos() + self.mu).powi(2) + 4.0 * self.delta.powi(2) * k.sin().powi(2)).sqrt()
    }

    /// Ground-state energy of the many-body Hamiltonian.
    pub fn ground_energy(&self) -> Result<f64> {
        let s = kitaev_spectrum(self)?;
        Ok(-0.5 * self.mu * self.sites as f64 - 0.5 * s.energies.iter().sum::<f64>())
    }

    /// The Hamiltonian as an operator string, for exact diagonalization in a
    /// fermion-parity sector of an open chain.
    pub fn opsum(&self) -> Result<OpSum> {
        self.validate()?;
        if self.boundary == Boundary::Periodic {
            return Err(Error::InvalidParameter(
                "the many-body periodic chain needs a parity-dependent boundary sign".into(),
            ));
        }
        let mut op = OpSum::new();
        for j in 0..self.sites {
            op.push(FermionTerm::density(-self.mu, j));
        }
        for (i, j) in self.bonds() {
            op.push(FermionTerm::hop(-self.t, i, j));
            op.push(FermionTerm::hop(-self.t, j, i));
            op.push(FermionTerm::new(-self.delta, vec![Factor::annihilate(i), Factor::annihilate(j)]));
            op.push(FermionTerm::new(-self.delta, vec![Factor::create(j), Factor::create(i)]));
        }
        Ok(op)
    }
}

#[derive(Clone, Debug)]
pub struct BdgSolution {
    /// Quasiparticle energies, ascending and nonnegative, one per site.
    pub energies: Vec<f64>,
    /// All `2L` eigenvalues of `H_BdG`, ascending.
    pub bdg_eigenvalues: Vec<f64>,
    /// `max |ε_i + ε_{2L−1−i}|` before folding.
    pub particle_hole_defect: f64,
    /// Eigenvectors of `iA` (columns), paired with `majorana_eigenvalues`.
    pub majorana_modes: CMatrix,
    pub majorana_eigenvalues: Vec<f64>,
}

impl BdgSolution {
    /// Smallest quasiparticle energy: the splitting of the two lowest
    /// many-body states of opposite parity.
    pub fn lowest(&self) -> f64 {
        self.energies[0]
    }
}

pub fn kitaev_spectrum(params: &KitaevParams) -> Result<BdgSolution> {
    params.validate()?;
    let l = params.sites;
    let bdg_eigenvalues = eigvalsh(&params.bdg_matrix());
    let particle_hole_defect = (0..l)
        .map(|i| (bdg_eigenvalues[i] + bdg_eigenvalues[2 * l - 1 - i]).abs())
        .fold(0.0, f64::max);
    let a = params.majorana_matrix();
    let ia = CMatrix::from_fn(2 * l, 2 * l, |r, c| C64::new(0.0, a[(r, c)]));
    let eig = HermitianEigen::new(&ia);
    let energies: Vec<f64> = eig.values[l..].iter().map(|e| e.max(0.0)).collect();
    Ok(BdgSolution {
        energies,
        bdg_eigenvalues,
        particle_hole_defect,
        majorana_eigenvalues: eig.values.clone(),
        majorana_modes: eig.vectors,
    })
}

/// Quasiparticle energies of the periodic chain from the closed form on
/// `k = 2πn/L`, ascending.
pub fn periodic_closed_form(params: &KitaevParams) -> Vec<f64> {
    let mut e: Vec<f64> = (0..params.sites)
        .map(|n| params.dispersion(2.0 * PI * n as f64 / params.sites as f64))
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Minimum of the bulk dispersion over a uniform grid of `n_k` momenta,
/// including `k = 0` and `k = π`.
pub fn bulk_gap(params: &KitaevParams, n_k: usize) -> f64 {
    (0..=n_k)
        .map(|i| params.dispersion(PI * i as f64 / n_k as f64))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KitaevPhase {
    Trivial,
    Topological,
    Critical,
}

/// Half-width of the band around `|μ| = 2|t|` classified as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

pub fn phase_classify(params: &KitaevParams) -> KitaevPhase {
    let d = params.mu.abs() - 2.0 * params.t.abs();
    if d.abs() <= CRITICAL_BAND {
        KitaevPhase::Critical
    } else if d < 0.0 {
        KitaevPhase::Topological
    } else {
        KitaevPhase::Trivial
    }
}

/// `S = sign(iA)` for the ground state, `⟨γ_a γ_b⟩ = δ_ab + S_ab`. Exact
/// zero modes are paired in a fixed real basis of their subspace, which
/// selects one of the degenerate ground states.
pub fn majorana_correlation(sol: &BdgSolution) -> CMatrix {
    let n = sol.majorana_eigenvalues.len();
    let mut s = CMatrix::zeros(n, n);
    let mut zero = Vec::new();
    for (k, &e) in sol.majorana_eigenvalues.iter().enumerate() {
        if e.abs() < ZERO_MODE_TOLERANCE {
            zero.push(k);
            continue;
        }
        let v = sol.majorana_modes.column(k);
        s += (v * v.adjoint()) * C64::new(e.signum(), 0.0);
    }
    if !zero.is_empty() {
        // real orthonormal basis of the zero subspace, closed under conjugation
        let mut re = DMatrix::<f64>::zeros(n, 2 * zero.len());
        for (c, &k) in zero.iter().enumerate() {
            for r in 0..n {
                re[(r, 2 * c)] = sol.majorana_modes[(r, k)].re;
                re[(r, 2 * c + 1)] = sol.majorana_modes[(r, k)].im;
            }
        }
        let svd = re.svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
        for p in 0..zero.len() / 2 {
            let (r1, r2) = (u.column(order[2 * p]), u.column(order[2 * p + 1]));
            let v: Vec<C64> = (0..n).map(|i| C64::new(r1[i], -r2[i]) / 2f64.sqrt()).collect();
            for a in 0..n {
                for b in 0..n {
                    let x = v[a] * v[b].conj();
                    s[(a, b)] += x - x.conj();
                }
            }
        }
    }
    s
}

/// Entanglement spectrum of the ground state for the cut after `cut`
/// sites, from the restricted Majorana correlation matrix.
pub fn correlation_entanglement(params: &KitaevParams, cut: usize) -> Result<Vec<EntanglementLevel>> {
    if params.boundary != Boundary::Open {
        return Err(Error::InvalidParameter("entanglement cut needs an open chain".into()));
    }
    if cut == 0 || cut >= params.sites {
        return Err(Error::InvalidParameter(format!("cut {cut} of a {}-site chain", params.sites)));
    }
    let sol = kitaev_spectrum(params)?;
    let s = majorana_correlation(&sol);
    let m = 2 * cut;
    let sub = s.view((0, 0), (m, m)).into_owned();
    // eigenvalues come in ±ν pairs; the upper half gives one mode each
    let nu: Vec<f64> = eigvalsh(&sub)[cut..].iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let mut levels = vec![(1.0f64, 0u32)];
    for v in nu {
        let (p, q) = ((1.0 + v) / 2.0, (1.0 - v) / 2.0);
        levels = levels
            .into_iter()
            .flat_map(|(w, par)| [(w * p, par), (w * q, par ^ 1)])
            .collect();
    }
    let mut out: Vec<EntanglementLevel> = levels
        .into_iter()
        .filter(|(w, _)| *w > SCHMIDT_CUTOFF)
        .map(|(lambda, _)| EntanglementLevel { xi: -lambda.ln(), lambda, charge: 0, parity_left: None })
        .collect();
    out.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    Ok(out)
}

/// Many-body ground state of the open chain over both fermion parities.
pub fn ed_ground_state(params: &KitaevParams) -> Result<(Arc<SectorBasis>, f64, Vec<C64>)> {
    let op = params.opsum()?;
    let mut best: Option<(Arc<SectorBasis>, f64, Vec<C64>)> = None;
    for parity in [Parity::Even, Parity::Odd] {
        let basis = SectorBasis::with_fermion_parity(params.sites, parity)?;
        let h = op.build(&basis)?;
        let gs = crate::observables::ground_states(&h, 1)?.remove(0);
        if best.as_ref().map_or(true, |b| gs.energy < b.1) {
            best = Some((basis, gs.energy, gs.vector));
        }
    }
    Ok(best.expect("two parity sectors"))
}

/// Entanglement spectrum of the exact many-body ground state.
pub fn ed_entanglement(params: &KitaevParams, cut: usize) -> Result<Vec<EntanglementLevel>> {
    let (basis, _, psi) = ed_ground_state(params)?;
    schmidt_levels(&basis, &psi, cut, Blocking::FermionParity)
}

/// Decay of the lowest quasiparticle energy with chain length: slope of
/// `ln ε_0` against `L`, fitted by least squares.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingDecay {
    pub lengths: Vec<usize>,
    pub splittings: Vec<f64>,
    pub slope: f64,
}

pub fn majorana_splitting_decay(t: f64, mu: f64, delta: f64, lengths: &[usize]) -> Result<SplittingDecay> {
    if lengths.len() < 2 {
        return Err(Error::InvalidParameter("need at least two chain lengths".into()));
    }
    let splittings = lengths
        .iter()
        .map(|&l| kitaev_spectrum(&KitaevParams::open(t, mu, delta, l)).map(|s| s.lowest()))
        .collect::<Result<Vec<f64>>>()?;
    if splittings.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidParameter("splitting below resolution; shorten the chains".into()));
    }
    let xs: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = splittings.iter().map(|s| s.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok(SplittingDecay { lengths: lengths.to_vec(), splittings, slope })
}

/// Largest splitting among consecutive pairs of levels, `(ξ_0, ξ_1), ...`,
/// over the full spectrum.
pub fn double_degeneracy_defect(levels: &[EntanglementLevel]) -> f64 {
    if levels.len() % 2 == 1 {
        return f64::INFINITY;
    }
    levels.chunks(2).map(|p| (p[0].lambda - p[1].lambda).abs()).fold(0.0, f64::max)
}
