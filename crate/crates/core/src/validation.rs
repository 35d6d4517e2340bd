//! Invariant suites behind `ladder selftest` and `ladder kitaev-validate`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::floquet::{self, EffectiveKind, Floquet, JxFrame, PropagationPlan, Scheme};
use crate::fockspace::{OpSum, SectorBasis};
use crate::freefermion::{self, KitaevParams};
use crate::linalg::{commutator, eigvalsh, expm_hermitian, max_abs, op_norm, spectrum_distance, CMatrix};
use crate::models::{self, Boundary, DriveParams, ModelParams, Pattern, Spin};
use crate::observables;
use crate::C64;

/// Accepted range of a check value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn admits(self, x: f64) -> bool {
        match self {
            Bound::AtMost(hi) => x <= hi,
            Bound::AtLeast(lo) => x >= lo,
            Bound::Within(lo, hi) => (lo..=hi).contains(&x),
        }
    }

    pub fn lower(self) -> f64 {
        match self {
            Bound::AtMost(_) => f64::NEG_INFINITY,
            Bound::AtLeast(lo) | Bound::Within(lo, _) => lo,
        }
    }

    pub fn upper(self) -> f64 {
        match self {
            Bound::AtLeast(_) => f64::INFINITY,
            Bound::AtMost(hi) | Bound::Within(_, hi) => hi,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, value: f64, bound: Bound) -> Self {
        // NaN never passes
        Check { suite, name: name.into(), value, bound, passed: bound.admits(value) }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn dense(op: &OpSum, basis: &Arc<SectorBasis>) -> Result<CMatrix> {
    Ok(op.build(basis)?.to_dense())
}

/// Operator identities, Trotter scaling, isospectrality and parity
/// conservation on small sectors.
pub fn selftest() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.extend(operator_identities()?);
    out.extend(trotter_scaling()?);
    out.push(isospectrality()?);
    out.extend(parity_conservation()?);
    out.push(cosine_average()?);
    Ok(out)
}

fn operator_identities() -> Result<Vec<Check>> {
    let mut rotation: f64 = 0.0;
    let mut algebra: f64 = 0.0;
    for rungs in [2, 3] {
        let model = ModelParams::new(1.0, -0.7, rungs);
        for n in 0..=2 * rungs {
            let b = SectorBasis::new(rungs, n, None)?;
            let h0 = dense(&models::h0(&model), &b)?;
            let jx = dense(&models::total_spin(Spin::X, rungs), &b)?;
            let jy = dense(&models::total_spin(Spin::Y, rungs), &b)?;
            let jz = dense(&models::total_spin(Spin::Z, rungs), &b)?;
            algebra = algebra.max(max_abs(&(commutator(&jx, &jy) - jz * C64::new(0.0, 1.0))));
            for eta in [0.3, FRAC_PI_4, FRAC_PI_2] {
                let p = expm_hermitian(&jx, -eta);
                let conj = p.adjoint() * &h0 * &p;
                rotation = rotation.max(max_abs(&(conj - dense(&models::h1_closed(&model, eta), &b)?)));
            }
        }
    }
    let model = ModelParams::new(1.0, -1.0, 3);
    let op = models::h_eff_pure_pair(&model, &[0.2, 0.15, 0.5, 0.15])?;
    let d = models::decompose(&op, &[Pattern::Hopping, Pattern::IntraLegDensity, Pattern::InterLegDensity, Pattern::Swap, Pattern::PairHopping], 3, Boundary::Open)?;
    let swap = d.amplitude(Pattern::Swap).unwrap_or(f64::NAN).abs();
    let s = "operator identities";
    Ok(vec![
        Check::new(s, "[Jx, Jy] = i Jz", algebra, Bound::AtMost(1e-12)),
        Check::new(s, "P^dag H0 P = H1(eta)", rotation, Bound::AtMost(1e-12)),
        Check::new(s, "pure-pair sequence has no swap term", swap, Bound::AtMost(1e-12)),
        Check::new(s, "pure-pair decomposition residual", d.residual, Bound::AtMost(1e-10)),
    ])
}

fn trotter_error(model: &ModelParams, eta: f64, period: f64, basis: &Arc<SectorBasis>) -> Result<f64> {
    let drive = DriveParams::pulse(1.0 / 3.0, eta, period);
    let plan = PropagationPlan::new(Scheme::PulseSequence, model.clone(), drive.clone(), 1);
    let u = floquet::period_unitary(&plan, basis)?;
    let heff = dense(&floquet::effective_hamiltonian(EffectiveKind::Pulse, model, &drive)?, basis)?;
    Ok(op_norm(&(u - expm_hermitian(&heff, period))))
}

fn trotter_scaling() -> Result<Vec<Check>> {
    let s = "trotter scaling";
    let model = ModelParams::new(1.0, -0.7, 2);
    let b = SectorBasis::new(2, 2, None)?;
    let ratio = trotter_error(&model, FRAC_PI_4, 0.2, &b)? / trotter_error(&model, FRAC_PI_4, 0.1, &b)?;
    let m3 = ModelParams::new(1.0, -0.7, 3);
    let b3 = SectorBasis::new(3, 3, None)?;
    let ratio3 = trotter_error(&m3, FRAC_PI_2, 0.2, &b3)? / trotter_error(&m3, FRAC_PI_2, 0.1, &b3)?;
    Ok(vec![
        Check::new(s, "error ratio T=0.2 / T=0.1, L=2, eta=pi/4", ratio, Bound::Within(3.5, 4.5)),
        Check::new(s, "error ratio T=0.2 / T=0.1, L=3, eta=pi/2", ratio3, Bound::Within(3.5, 4.5)),
    ])
}

fn isospectrality() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for (rungs, boundary) in [(3, Boundary::Open), (4, Boundary::Periodic)] {
        let mut model = ModelParams::new(1.0, -1.3, rungs);
        model.boundary = boundary;
        for n in 0..=2 * rungs {
            let b = SectorBasis::new(rungs, n, None)?;
            let a = eigvalsh(&dense(&models::h_eff_pulse(&model, 0.3)?, &b)?);
            let c = eigvalsh(&dense(&models::h_eff_pulse(&model, 0.7)?, &b)?);
            worst = worst.max(spectrum_distance(&a, &c));
        }
    }
    Ok(Check::new("isospectrality", "spectra at alpha=0.3 and 0.7", worst, Bound::AtMost(1e-10)))
}

fn parity_conservation() -> Result<Vec<Check>> {
    let s = "parity conservation";
    let drive = DriveParams::pulse(1.0 / 3.0, FRAC_PI_2, 0.2);
    let mut out = Vec::new();
    for rungs in [2, 3] {
        let model = ModelParams::new(1.0, -0.7, rungs);
        let basis = SectorBasis::new(rungs, rungs, None)?;
        for (label, scheme, tol) in [
            ("pulse sequence", Scheme::PulseSequence, 5e-3),
            ("effective", Scheme::EffectiveStatic(EffectiveKind::Pulse), 1e-10),
        ] {
            let plan = PropagationPlan::new(scheme, model.clone(), drive.clone(), 100).stroboscopic();
            let p = observables::parity_change_probability(&Floquet::new(&plan, &basis)?)?.max_stroboscopic();
            out.push(Check::new(s, format!("max P over 100 periods, L={rungs}, {label}"), p, Bound::AtMost(tol)));
        }
    }
    Ok(out)
}

fn cosine_average() -> Result<Check> {
    let model = ModelParams::new(1.0, -0.9, 3);
    let b = SectorBasis::new(3, 3, None)?;
    let frame = JxFrame::on_sector(&model, &b)?;
    let k0 = 1.0;
    let want = dense(&models::h_eff_continuous(&model, k0)?, &b)?;
    let avg = floquet::moving_frame_average_cosine(&frame, k0, 4096);
    Ok(Check::new("operator identities", "cosine moving-frame average vs Bessel form", max_abs(&(avg - want)), Bound::AtMost(1e-8)))
}

/// Knobs of the Kitaev-chain suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KitaevValidation {
    pub t: f64,
    pub delta: f64,
    /// Open chain length for the sweet-spot checks.
    pub sites: usize,
    /// Chain length for the many-body comparison.
    pub ed_sites: usize,
    pub ed_mu: Vec<f64>,
    /// Momentum grid for bulk gaps.
    pub n_k: usize,
}

impl Default for KitaevValidation {
    fn default() -> Self {
        KitaevValidation { t: 1.0, delta: 1.0, sites: 30, ed_sites: 8, ed_mu: vec![0.5, 1.0, 3.0], n_k: 4096 }
    }
}

pub fn kitaev_suite(cfg: &KitaevValidation) -> Result<Vec<Check>> {
    let s = "kitaev";
    let mut out = Vec::new();
    let sweet = KitaevParams::open(cfg.t, 0.0, cfg.t, cfg.sites);
    let sol = freefermion::kitaev_spectrum(&sweet)?;
    out.push(Check::new(s, format!("sweet-spot Majorana splitting, L={}", cfg.sites), sol.lowest(), Bound::AtMost(1e-12)));
    out.push(Check::new(s, "BdG particle-hole symmetry", sol.particle_hole_defect, Bound::AtMost(1e-12)));
    let es = freefermion::correlation_entanglement(&sweet, cfg.sites / 2)?;
    out.push(Check::new(s, "entanglement double degeneracy", freefermion::double_degeneracy_defect(&es), Bound::AtMost(1e-10)));

    let gap = |mu: f64| freefermion::bulk_gap(&KitaevParams::periodic(cfg.t, mu, cfg.delta, 3), cfg.n_k);
    let two_t = 2.0 * cfg.t.abs();
    out.push(Check::new(s, "bulk gap at mu = 2t", gap(two_t), Bound::AtMost(1e-12)));
    out.push(Check::new(s, "bulk gap at mu = -2t", gap(-two_t), Bound::AtMost(1e-12)));
    out.push(Check::new(s, "bulk gap at mu = 0.95 * 2t", gap(0.95 * two_t), Bound::AtLeast(1e-3)));
    out.push(Check::new(s, "bulk gap at mu = 1.05 * 2t", gap(1.05 * two_t), Bound::AtLeast(1e-3)));

    let ring = KitaevParams::periodic(cfg.t, 0.7 * cfg.t, cfg.delta, 12);
    let mut closed = freefermion::periodic_closed_form(&ring);
    closed.sort_by(f64::total_cmp);
    let bdg = freefermion::kitaev_spectrum(&ring)?.energies;
    out.push(Check::new(s, "periodic BdG vs closed form", spectrum_distance(&closed, &bdg), Bound::AtMost(1e-10)));

    let mut ed_dev: f64 = 0.0;
    for &mu in &cfg.ed_mu {
        let p = KitaevParams::open(cfg.t, mu, cfg.delta, cfg.ed_sites);
        let keep = |v: Vec<observables::EntanglementLevel>| -> Vec<f64> {
            let mut l: Vec<f64> = v.into_iter().filter(|l| l.lambda > 1e-12).map(|l| l.lambda).collect();
            l.sort_by(f64::total_cmp);
            l
        };
        let a = keep(freefermion::correlation_entanglement(&p, cfg.ed_sites / 2)?);
        let b = keep(freefermion::ed_entanglement(&p, cfg.ed_sites / 2)?);
        ed_dev = ed_dev.max(if a.len() == b.len() { spectrum_distance(&a, &b) } else { f64::INFINITY });
        let e_ed = freefermion::ed_ground_state(&p)?.1;
        ed_dev = ed_dev.max((e_ed - p.ground_energy()?).abs());
    }
    out.push(Check::new(s, format!("correlation matrix vs ED, L={}", cfg.ed_sites), ed_dev, Bound::AtMost(1e-8)));
    Ok(out)
}
