//! Number-conserving Fock bases for the two-leg ladder and fermionic
//! operator strings acting on them.
//!
//! Modes are ordered rung-major: `a_0, b_0, a_1, b_1, ...`, so the `a` leg
//! occupies the even bits of a [`FockState`] and the `b` leg the odd bits.
//! A basis state is `Π_{m ascending} (c†_m)^{n_m} |0⟩`, which fixes the
//! Jordan-Wigner convention: acting with `c_m` or `c†_m` picks up
//! `(-1)^{#occupied modes strictly below m}`. Every module shares it.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Mask selecting the `a`-leg bits in rung-major ordering.
pub const A_LEG_MASK: u64 = 0x5555_5555_5555_5555;

/// Largest mode count a [`FockState`] can hold.
pub const MAX_MODES: usize = 64;

/// Mode index of `a_rung`.
#[inline]
pub fn mode_a(rung: usize) -> usize {
    2 * rung
}

/// Mode index of `b_rung`.
#[inline]
pub fn mode_b(rung: usize) -> usize {
    2 * rung + 1
}

/// Ladder leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    A,
    B,
}

impl Leg {
    pub fn mode(self, rung: usize) -> usize {
        match self {
            Leg::A => mode_a(rung),
            Leg::B => mode_b(rung),
        }
    }

    pub fn other(self) -> Leg {
        match self {
            Leg::A => Leg::B,
            Leg::B => Leg::A,
        }
    }
}

/// A `Z_2` label, `+1` (even) or `-1` (odd).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_count(n: u32) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn from_sign(sign: i32) -> Result<Parity> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            s => Err(Error::InvalidParameter(format!("parity sign must be +1 or -1, got {s}"))),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "+1",
            Parity::Odd => "-1",
        })
    }
}

/// Occupation bitset over the modes of the ladder (bit `m` = mode `m`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(pub u64);

impl FockState {
    pub const VACUUM: FockState = FockState(0);

    pub fn from_modes(modes: &[usize]) -> FockState {
        FockState(modes.iter().fold(0u64, |acc, &m| acc | (1u64 << m)))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, mode: usize) -> bool {
        self.0 >> mode & 1 == 1
    }

    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Number of particles on the `a` leg.
    #[inline]
    pub fn count_a(self) -> u32 {
        (self.0 & A_LEG_MASK).count_ones()
    }

    /// Occupied modes strictly below `mode`.
    #[inline]
    pub fn count_below(self, mode: usize) -> u32 {
        (self.0 & ((1u64 << mode) - 1)).count_ones()
    }

    /// Occupied modes in ascending order.
    pub fn modes(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_MODES).filter(move |&m| bits >> m & 1 == 1)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        let mut first = true;
        for m in self.modes() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let leg = if m % 2 == 0 { 'a' } else { 'b' };
            write!(f, "{leg}{}", m / 2)?;
        }
        f.write_str(">")
    }
}

/// Leg parity `(-1)^{N_a}` of a basis state.
pub fn leg_parity(state: FockState) -> Parity {
    Parity::from_count(state.count_a())
}

/// Conserved quantity that defines a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Fixed total particle number.
    Particles(usize),
    /// Fixed total fermion parity; used for pairing (BdG) Hamiltonians.
    FermionParity(Parity),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Particles(n) => write!(f, "N = {n}"),
            Constraint::FermionParity(p) => write!(f, "fermion parity {p}"),
        }
    }
}

/// Ordered enumeration of the Fock states in one symmetry sector.
///
/// States are sorted strictly ascending by bit pattern; lookup is a binary
/// search, so the position of a state is its index in `states`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    n_modes: usize,
    constraint: Constraint,
    leg_parity: Option<Parity>,
    states: Vec<FockState>,
}

impl SectorBasis {
    /// Ladder sector with `particles` fermions on `rungs` rungs, optionally
    /// restricted to one leg parity.
    pub fn new(rungs: usize, particles: usize, leg_parity: Option<Parity>) -> Result<Arc<Self>> {
        Self::enumerate_sector(rungs, particles, leg_parity).map(Arc::new)
    }

    pub fn enumerate_sector(
        rungs: usize,
        particles: usize,
        parity_filter: Option<Parity>,
    ) -> Result<Self> {
        if rungs == 0 {
            return Err(Error::InvalidParameter("ladder needs at least one rung".into()));
        }
        let n_modes = 2 * rungs;
        if n_modes > MAX_MODES {
            return Err(Error::InvalidParameter(format!(
                "{rungs} rungs exceed the {MAX_MODES}-mode bitset"
            )));
        }
        if particles > n_modes {
            return Err(Error::InvalidParameter(format!(
                "particle number {particles} outside [0, {n_modes}]"
            )));
        }
        let states = combinations(n_modes, particles)
            .filter(|&s| parity_filter.map_or(true, |p| leg_parity(s) == p))
            .collect();
        Ok(SectorBasis {
            n_modes,
            constraint: Constraint::Particles(particles),
            leg_parity: parity_filter,
            states,
        })
    }

    /// All states of `n_modes` modes with the given total fermion parity.
    pub fn with_fermion_parity(n_modes: usize, parity: Parity) -> Result<Arc<Self>> {
        if n_modes == 0 || n_modes > 30 {
            return Err(Error::InvalidParameter(format!(
                "fermion-parity sectors support 1..=30 modes, got {n_modes}"
            )));
        }
        let states = (0..1u64 << n_modes)
            .map(FockState)
            .filter(|s| Parity::from_count(s.count()) == parity)
            .collect();
        Ok(Arc::new(SectorBasis {
            n_modes,
            constraint: Constraint::FermionParity(parity),
            leg_parity: None,
            states,
        }))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn rungs(&self) -> usize {
        self.n_modes / 2
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn particles(&self) -> Option<usize> {
        match self.constraint {
            Constraint::Particles(n) => Some(n),
            Constraint::FermionParity(_) => None,
        }
    }

    pub fn leg_parity_filter(&self) -> Option<Parity> {
        self.leg_parity
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    pub fn index_of(&self, state: FockState) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    /// Normalized basis vector for `state`.
    pub fn basis_vector(&self, state: FockState) -> Option<Vec<C64>> {
        let i = self.index_of(state)?;
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[i] = C64::new(1.0, 0.0);
        Some(v)
    }
}

/// Bit patterns with `k` of `n` bits set, ascending (Gosper's hack).
fn combinations(n: usize, k: usize) -> impl Iterator<Item = FockState> {
    let limit: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut next = if k == 0 {
        Some(0u64)
    } else if k == 64 {
        Some(u64::MAX)
    } else {
        Some((1u64 << k) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur.checked_add(c);
            match r {
                Some(r) => {
                    let nxt = (((r ^ cur) >> 2) / c) | r;
                    (nxt <= limit && nxt > cur).then_some(nxt)
                }
                None => None,
            }
        };
        (cur <= limit).then_some(FockState(cur))
    })
}

/// Creation or annihilation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Create,
    Annihilate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub mode: usize,
    pub action: Action,
}

impl Factor {
    pub fn create(mode: usize) -> Self {
        Factor { mode, action: Action::Create }
    }

    pub fn annihilate(mode: usize) -> Self {
        Factor { mode, action: Action::Annihilate }
    }

    fn adjoint(self) -> Self {
        let action = match self.action {
            Action::Create => Action::Annihilate,
            Action::Annihilate => Action::Create,
        };
        Factor { action, ..self }
    }
}

/// `coefficient × f_1 f_2 … f_k`, with the factors applied right to left.
///
/// Nothing assumes normal ordering; signs are computed when the string acts
/// on a state.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coefficient: C64,
    pub factors: Vec<Factor>,
}

impl FermionTerm {
    pub fn new(coefficient: impl Into<C64>, factors: Vec<Factor>) -> Self {
        FermionTerm { coefficient: coefficient.into(), factors }
    }

    pub fn identity(coefficient: impl Into<C64>) -> Self {
        Self::new(coefficient, Vec::new())
    }

    /// `c · c†_i c_j`.
    pub fn hop(coefficient: impl Into<C64>, to: usize, from: usize) -> Self {
        Self::new(coefficient, vec![Factor::create(to), Factor::annihilate(from)])
    }

    /// `c · n_i`.
    pub fn density(coefficient: impl Into<C64>, mode: usize) -> Self {
        Self::hop(coefficient, mode, mode)
    }

    pub fn adjoint(&self) -> Self {
        FermionTerm {
            coefficient: self.coefficient.conj(),
            factors: self.factors.iter().rev().map(|f| f.adjoint()).collect(),
        }
    }

    pub fn product(&self, rhs: &FermionTerm) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&rhs.factors);
        FermionTerm { coefficient: self.coefficient * rhs.coefficient, factors }
    }

    /// Creations minus annihilations.
    pub fn charge(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| match f.action {
                Action::Create => 1,
                Action::Annihilate => -1,
            })
            .sum()
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.factors.iter().map(|f| f.mode).max()
    }
}

impl fmt::Display for FermionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i)", self.coefficient.re, self.coefficient.im)?;
        for factor in &self.factors {
            let leg = if factor.mode % 2 == 0 { 'a' } else { 'b' };
            let dag = if factor.action == Action::Create { "†" } else { "" };
            write!(f, " {leg}{dag}_{}", factor.mode / 2)?;
        }
        Ok(())
    }
}

/// Apply a fermionic string to a basis state.
///
/// Returns `None` when a factor annihilates an empty mode or creates into an
/// occupied one; otherwise the image state and the accumulated Jordan-Wigner
/// sign. The coefficient is not included.
pub fn apply_term(term: &FermionTerm, state: FockState) -> Option<(FockState, f64)> {
    let mut bits = state;
    let mut odd = 0u32;
    for factor in term.factors.iter().rev() {
        let occupied = bits.is_occupied(factor.mode);
        match factor.action {
            Action::Create if occupied => return None,
            Action::Annihilate if !occupied => return None,
            _ => {}
        }
        odd ^= bits.count_below(factor.mode) & 1;
        bits = FockState(bits.0 ^ (1u64 << factor.mode));
    }
    Some((bits, if odd == 0 { 1.0 } else { -1.0 }))
}

/// A sum of fermionic strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OpSum {
    pub terms: Vec<FermionTerm>,
}

impl OpSum {
    pub fn new() -> Self {
        OpSum::default()
    }

    pub fn from_terms(terms: Vec<FermionTerm>) -> Self {
        OpSum { terms }
    }

    pub fn push(&mut self, term: FermionTerm) {
        self.terms.push(term);
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, c: impl Into<C64>) -> OpSum {
        let c = c.into();
        OpSum {
            terms: self
                .terms
                .iter()
                .map(|t| FermionTerm { coefficient: t.coefficient * c, factors: t.factors.clone() })
                .collect(),
        }
    }

    pub fn adjoint(&self) -> OpSum {
        OpSum { terms: self.terms.iter().map(FermionTerm::adjoint).collect() }
    }

    /// `self + self†`.
    pub fn plus_hc(&self) -> OpSum {
        self + &self.adjoint()
    }

    pub fn build(&self, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
        build_sparse(self, basis)
    }
}

impl From<FermionTerm> for OpSum {
    fn from(t: FermionTerm) -> Self {
        OpSum { terms: vec![t] }
    }
}

impl FromIterator<FermionTerm> for OpSum {
    fn from_iter<I: IntoIterator<Item = FermionTerm>>(iter: I) -> Self {
        OpSum { terms: iter.into_iter().collect() }
    }
}

impl Add<&OpSum> for &OpSum {
    type Output = OpSum;
    fn add(self, rhs: &OpSum) -> OpSum {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        OpSum { terms }
    }
}

impl Add for OpSum {
    type Output = OpSum;
    fn add(mut self, rhs: OpSum) -> OpSum {
        self.terms.extend(rhs.terms);
        self
    }
}

impl AddAssign<OpSum> for OpSum {
    fn add_assign(&mut self, rhs: OpSum) {
        self.terms.extend(rhs.terms);
    }
}

impl Sub for OpSum {
    type Output = OpSum;
    fn sub(self, rhs: OpSum) -> OpSum {
        self + rhs.scale(-1.0)
    }
}

impl Neg for OpSum {
    type Output = OpSum;
    fn neg(self) -> OpSum {
        self.scale(-1.0)
    }
}

impl Mul<&OpSum> for &OpSum {
    type Output = OpSum;
    fn mul(self, rhs: &OpSum) -> OpSum {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for l in &self.terms {
            for r in &rhs.terms {
                terms.push(l.product(r));
            }
        }
        OpSum { terms }
    }
}

impl Mul<f64> for OpSum {
    type Output = OpSum;
    fn mul(self, rhs: f64) -> OpSum {
        self.scale(rhs)
    }
}

/// Sector-resolved sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    basis: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

/// Entries smaller than this after accumulation are dropped.
const DROP_TOLERANCE: f64 = 1e-15;

impl SparseOperator {
    pub fn zeros(basis: &Arc<SectorBasis>) -> Self {
        SparseOperator {
            basis: Arc::clone(basis),
            row_ptr: vec![0; basis.dim() + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(basis: &Arc<SectorBasis>, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        let dim = basis.dim();
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            debug_assert!(r < dim && c < dim);
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > DROP_TOLERANCE {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { basis: Arc::clone(basis), row_ptr, cols, vals }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Matrix element between two Fock states of the basis.
    pub fn element(&self, bra: FockState, ket: FockState) -> Option<C64> {
        Some(self.entry(self.basis.index_of(bra)?, self.basis.index_of(ket)?))
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let h = self.apply(psi);
        psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// `max |A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.entry(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: C64) -> SparseOperator {
        SparseOperator { vals: self.vals.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// `Σ_k c_k A_k` over operators on the same basis.
    pub fn linear_combination(parts: &[(C64, &SparseOperator)]) -> Result<SparseOperator> {
        let basis = match parts.first() {
            Some((_, op)) => Arc::clone(&op.basis),
            None => return Err(Error::InvalidParameter("empty linear combination".into())),
        };
        let mut triplets = Vec::new();
        for (c, op) in parts {
            if op.basis.as_ref() != basis.as_ref() {
                return Err(Error::DimensionMismatch { expected: basis.dim(), got: op.dim() });
            }
            triplets.extend(op.triplets().map(|(r, col, v)| (r, col, v * c)));
        }
        Ok(SparseOperator::from_triplets(&basis, triplets))
    }
}

/// Assemble `Σ_terms` on a sector.
///
/// Every term must respect the sector constraint (total particle number, or
/// total fermion parity for pairing sectors); a term that would leave a
/// leg-parity-filtered sector is rejected as well.
pub fn build_sparse(terms: &OpSum, basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    for term in &terms.terms {
        if let Some(m) = term.max_mode() {
            if m >= basis.n_modes() {
                return Err(Error::ModeOutOfRange { mode: m, n_modes: basis.n_modes() });
            }
        }
        let ok = match basis.constraint() {
            Constraint::Particles(_) => term.charge() == 0,
            Constraint::FermionParity(_) => term.charge() % 2 == 0,
        };
        if !ok {
            return Err(Error::NotConserving {
                term: term.to_string(),
                constraint: basis.constraint().to_string(),
            });
        }
    }

    let mut accum: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (col, &state) in basis.states().iter().enumerate() {
        for term in &terms.terms {
            if term.coefficient == C64::new(0.0, 0.0) {
                continue;
            }
            if let Some((image, sign)) = apply_term(term, state) {
                let row = basis.index_of(image).ok_or_else(|| Error::LeavesSector {
                    term: term.to_string(),
                    state: state.bits(),
                })?;
                *accum.entry((row, col)).or_default() += term.coefficient * sign;
            }
        }
    }
    let triplets = accum.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    Ok(SparseOperator::from_triplets(basis, triplets))
}
