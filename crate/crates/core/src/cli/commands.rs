use std::sync::Arc;

use crate::error::{Error, Result};
use crate::floquet::{self, EffectiveKind, Floquet, JxFrame, PropagationPlan, Scheme};
use crate::fockspace::{leg_parity, FockState, Leg, OpSum, Parity, SectorBasis};
use crate::models::{self, DriveParams, ModelParams};
use crate::observables::{self, entanglement_spectrum, pairing_defect};
use crate::rgflow::{self, VelocityConvention};
use crate::special::bessel_j;
use crate::validation::{self, Check};
use crate::C64;

use super::config::{section, HamiltonianSpec, RunConfig};
use super::output::{Cell, RunOutput, Table};
use super::Command;

/// Largest sector propagated from every basis state.
pub const DYNAMICS_LIMIT: usize = 4096;
/// Largest sector handed to Lanczos.
pub const STATIC_LIMIT: usize = 500_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Rejects sectors whose estimated dimension exceeds `limit`.
pub fn feasible(rungs: usize, particles: usize, limit: usize) -> Result<()> {
    if particles > 2 * rungs {
        return Err(Error::InvalidParameter(format!("{particles} particles do not fit on {rungs} rungs")));
    }
    let dim = binomial(2 * rungs, particles);
    if dim > limit as u128 {
        return Err(Error::Infeasible { dimension: dim.min(usize::MAX as u128) as usize, limit });
    }
    Ok(())
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunOutput> {
    match cmd {
        Command::Rabi => rabi(cfg),
        Command::Parity => parity(cfg),
        Command::Micromotion => micromotion(cfg),
        Command::Rgscan => rgscan(cfg),
        Command::Gaps => gaps(cfg),
        Command::Entspec => entspec(cfg),
        Command::Correlations => correlations(cfg),
        Command::ImpurePulse => impure_pulse(cfg),
        Command::ContinuousDrive => continuous_drive(cfg),
        Command::KitaevValidate => {
            let k = section(&cfg.kitaev, "kitaev")?;
            Ok(checks(validation::kitaev_suite(k)?))
        }
        Command::Selftest => Ok(checks(validation::selftest()?)),
    }
}

const LADDER: [&str; 7] = ["rungs", "N", "tau", "U0", "alpha", "eta", "T"];

fn columns(extra: &[&'static str]) -> Vec<&'static str> {
    LADDER.iter().chain(extra).copied().collect()
}

fn ladder_cells(model: &ModelParams, drive: &DriveParams, n: usize) -> Vec<Cell> {
    vec![
        model.rungs.into(),
        n.into(),
        model.tau.into(),
        model.u0.into(),
        drive.alpha.into(),
        drive.eta.into(),
        drive.period.into(),
    ]
}

fn row(mut head: Vec<Cell>, tail: impl IntoIterator<Item = Cell>) -> Vec<Cell> {
    head.extend(tail);
    head
}

pub fn scheme_label(s: Scheme) -> &'static str {
    match s {
        Scheme::PulseSequence => "pulse_sequence",
        Scheme::TwoPulseSequence => "two_pulse_sequence",
        Scheme::SquareDrive => "square_drive",
        Scheme::CosineDrive => "cosine_drive",
        Scheme::EffectiveStatic(EffectiveKind::Pulse) => "effective_pulse",
        Scheme::EffectiveStatic(EffectiveKind::PurePair) => "effective_pure_pair",
        Scheme::EffectiveStatic(EffectiveKind::Continuous) => "effective_continuous",
        Scheme::EffectiveStatic(EffectiveKind::Impure) => "effective_impure",
    }
}

fn inputs<'a>(cfg: &'a RunConfig) -> Result<(&'a ModelParams, &'a DriveParams)> {
    Ok((section(&cfg.model, "model")?, section(&cfg.drive, "drive")?))
}

fn parity_series(
    scheme: Scheme,
    model: &ModelParams,
    drive: &DriveParams,
    n_periods: usize,
    samples: usize,
    basis: &Arc<SectorBasis>,
) -> Result<observables::ParityChangeSeries> {
    let plan = PropagationPlan::new(scheme, model.clone(), drive.clone(), n_periods).with_samples(samples);
    observables::parity_change_probability(&Floquet::new(&plan, basis)?)
}

fn rabi(cfg: &RunConfig) -> Result<RunOutput> {
    let (model, drive) = inputs(cfg)?;
    let sec = section(&cfg.rabi, "rabi")?;
    feasible(model.rungs, sec.particles, DYNAMICS_LIMIT)?;
    let basis = SectorBasis::new(model.rungs, sec.particles, None)?;
    if let Some(&m) = sec.initial.iter().find(|&&m| m >= basis.n_modes()) {
        return Err(Error::Config(format!("initial mode {m} outside {} modes", basis.n_modes())));
    }
    let start = FockState::from_modes(&sec.initial);
    let index = basis
        .index_of(start)
        .ok_or_else(|| Error::Config(format!("initial state {start} is not in the N = {} sector", sec.particles)))?;
    let plan = PropagationPlan::new(sec.scheme, model.clone(), drive.clone(), sec.n_periods).with_samples(sec.samples_per_period);
    let traj = floquet::evolve(&plan, &basis, &basis.basis_vector(start).unwrap_or_default())?;
    let p0 = leg_parity(start);
    let mut t = Table::new("rabi", &columns(&["scheme", "t", "stroboscopic", "population", "flipped_leg_parity_weight"]));
    for ((&time, psi), &strobe) in traj.times.iter().zip(&traj.states).zip(&traj.stroboscopic_mask) {
        let flipped: f64 = basis
            .states()
            .iter()
            .zip(psi)
            .filter(|(s, _)| leg_parity(**s) != p0)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        t.push(row(
            ladder_cells(model, drive, sec.particles),
            [scheme_label(sec.scheme).into(), time.into(), strobe.into(), psi[index].norm_sqr().into(), flipped.into()],
        ));
    }
    let mut out = RunOutput::new();
    let rate = (model.u0 * (1.0 - drive.alpha)).abs();
    out.note("expected_period", (rate > 0.0).then(|| 2.0 * std::f64::consts::PI / rate));
    let strobe: Vec<(f64, f64)> = traj.stroboscopic().map(|(t, s)| (t, s[index].norm_sqr())).collect();
    match observables::oscillation_period(&strobe) {
        Ok(p) => out.note("measured_period", p),
        Err(e) => out.note("measured_period_error", e.to_string()),
    }
    out.tables.push(t);
    Ok(out)
}

fn parity(cfg: &RunConfig) -> Result<RunOutput> {
    let (model, drive) = inputs(cfg)?;
    let sec = section(&cfg.parity, "parity")?;
    feasible(model.rungs, sec.particles, DYNAMICS_LIMIT)?;
    let basis = SectorBasis::new(model.rungs, sec.particles, None)?;
    let mut t = Table::new("parity", &columns(&["scheme", "t", "mean_parity_change"]));
    let mut out = RunOutput::new();
    for &scheme in &sec.schemes {
        let series = parity_series(scheme, model, drive, sec.n_periods, 1, &basis)?;
        for (time, p) in series.iter_stroboscopic() {
            t.push(row(ladder_cells(model, drive, sec.particles), [scheme_label(scheme).into(), time.into(), p.into()]));
        }
        out.note(&format!("max_{}", scheme_label(scheme)), series.max_stroboscopic());
    }
    out.tables.push(t);
    Ok(out)
}

fn micromotion(cfg: &RunConfig) -> Result<RunOutput> {
    let (model, drive) = inputs(cfg)?;
    let sec = section(&cfg.micromotion, "micromotion")?;
    feasible(model.rungs, sec.particles, DYNAMICS_LIMIT)?;
    let basis = SectorBasis::new(model.rungs, sec.particles, None)?;
    let series = parity_series(sec.scheme, model, drive, sec.n_periods, sec.samples_per_period, &basis)?;
    let mut t = Table::new("micromotion", &columns(&["scheme", "t", "stroboscopic", "mean_parity_change"]));
    for ((&time, &strobe), &p) in series.times.iter().zip(&series.stroboscopic).zip(&series.mean_probability) {
        t.push(row(
            ladder_cells(model, drive, sec.particles),
            [scheme_label(sec.scheme).into(), time.into(), strobe.into(), p.into()],
        ));
    }
    let mut out = RunOutput::new();
    out.note("max_stroboscopic", series.max_stroboscopic());
    out.note("max_all_samples", series.mean_probability.iter().copied().fold(0.0, f64::max));
    out.tables.push(t);
    Ok(out)
}

fn rgscan(cfg: &RunConfig) -> Result<RunOutput> {
    let sec = section(&cfg.rgscan, "rgscan")?;
    let flow = cfg.flow.clone().unwrap_or_default();
    flow.validate()?;
    let convention = sec.velocity.map_or(VelocityConvention::TightBinding, VelocityConvention::Fixed);
    let (u0s, alphas) = (sec.u0.values(), sec.alpha.values());
    if u0s.is_empty() || alphas.is_empty() {
        return Err(Error::Config("empty U0 or alpha grid".into()));
    }
    let scan = rgflow::phase_scan(&u0s, &alphas, sec.nu, sec.tau, convention, &flow);
    let opt = |x: Option<f64>| Cell::F(x.unwrap_or(f64::NAN));
    let mut t = Table::new("rgscan", &["U0", "alpha", "nu", "threshold", "outcome", "l_star", "xi_inv", "K_minus_bare"]);
    for p in &scan {
        let (outcome, l_star, xi) = match &p.outcome {
            Ok((o, l, x)) => (o.as_str().to_string(), *l, Some(*x)),
            Err(e) => (format!("error: {e}"), None, None),
        };
        t.push(vec![
            p.u0.into(),
            p.alpha.into(),
            p.nu.into(),
            flow.threshold.into(),
            outcome.into(),
            opt(l_star),
            opt(xi),
            opt(p.k_minus),
        ]);
    }
    // ξ⁻¹(α) = A(1 − α^κ) along each U0 row
    let mut k = Table::new("kappa", &["U0", "nu", "kappa", "amplitude", "rms"]);
    for (i, &u0) in u0s.iter().enumerate() {
        let xi: Vec<f64> = scan[i * alphas.len()..(i + 1) * alphas.len()]
            .iter()
            .map(|p| p.xi_inv().unwrap_or(f64::NAN))
            .collect();
        if let Ok(fit) = rgflow::fit_kappa(&alphas, &xi) {
            k.push(vec![u0.into(), sec.nu.into(), fit.kappa.into(), fit.amplitude.into(), fit.rms.into()]);
        }
    }
    let mut out = RunOutput::new();
    out.note("points", scan.len());
    out.note("errors", scan.iter().filter(|p| p.outcome.is_err()).count());
    out.tables.push(t);
    if !k.rows.is_empty() {
        out.tables.push(k);
    }
    Ok(out)
}

fn hamiltonian(cfg: &RunConfig) -> Result<(OpSum, String)> {
    let model = section(&cfg.model, "model")?;
    model.validate()?;
    Ok(match section(&cfg.hamiltonian, "hamiltonian")? {
        HamiltonianSpec::Bare => (models::h0(model), "bare".into()),
        HamiltonianSpec::Effective { effective } => {
            let drive = section(&cfg.drive, "drive")?;
            let op = floquet::effective_hamiltonian(*effective, model, drive)?;
            (op, scheme_label(Scheme::EffectiveStatic(*effective)).into())
        }
        HamiltonianSpec::WLadder { t_hop, w } => {
            (models::ladder_pairhop_w(*t_hop, *w, model.rungs, model.boundary)?, format!("w_ladder(t={t_hop},w={w})"))
        }
    })
}

fn static_prefix(cfg: &RunConfig, n: usize) -> Result<Vec<Cell>> {
    let model = section(&cfg.model, "model")?;
    let (alpha, eta, period) = cfg.drive.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |d| (d.alpha, d.eta, d.period));
    Ok(vec![
        model.rungs.into(),
        n.into(),
        model.tau.into(),
        model.u0.into(),
        alpha.into(),
        eta.into(),
        period.into(),
    ])
}

fn gaps(cfg: &RunConfig) -> Result<RunOutput> {
    let model = section(&cfg.model, "model")?;
    let sec = section(&cfg.gaps, "gaps")?;
    let (h, label) = hamiltonian(cfg)?;
    let mut g = Table::new(
        "gaps",
        &columns(&["hamiltonian", "delta_q_plus", "delta_q_minus", "delta_topo", "delta_q0", "parity_splitting", "within_parity_gap"]),
    );
    let mut e = Table::new("sector_energies", &columns(&["hamiltonian", "sector_N", "leg_parity", "E0"]));
    for &n in &sec.particles {
        feasible(model.rungs, n + 1, STATIC_LIMIT)?;
        feasible(model.rungs, n, STATIC_LIMIT)?;
        let r = observables::charge_gaps(|b| h.build(b), model.rungs, n)?;
        g.push(row(
            static_prefix(cfg, n)?,
            [
                label.clone().into(),
                r.delta_q_plus.into(),
                r.delta_q_minus.into(),
                r.delta_topo.into(),
                r.delta_q0.into(),
                r.parity_splitting.into(),
                r.within_parity_gap.into(),
            ],
        ));
        for (m, p, e0) in &r.e0 {
            e.push(row(static_prefix(cfg, n)?, [label.clone().into(), (*m).into(), p.to_string().into(), (*e0).into()]));
        }
    }
    let mut out = RunOutput::new();
    out.tables.push(g);
    out.tables.push(e);
    Ok(out)
}

struct GroundState {
    parity: Parity,
    basis: Arc<SectorBasis>,
    energy: f64,
    vector: Vec<C64>,
}

fn ground_states(cfg: &RunConfig) -> Result<(Vec<GroundState>, String)> {
    let model = section(&cfg.model, "model")?;
    let sec = section(&cfg.ground_state, "ground_state")?;
    feasible(model.rungs, sec.particles, STATIC_LIMIT)?;
    let (h, label) = hamiltonian(cfg)?;
    let mut out = Vec::new();
    for &parity in &sec.parities {
        let basis = SectorBasis::new(model.rungs, sec.particles, Some(parity))?;
        if basis.dim() == 0 {
            continue;
        }
        let gs = observables::ground_states(&h.build(&basis)?, 1)?.remove(0);
        out.push(GroundState { parity, basis, energy: gs.energy, vector: gs.vector });
    }
    Ok((out, label))
}

fn entspec(cfg: &RunConfig) -> Result<RunOutput> {
    let model = section(&cfg.model, "model")?;
    let sec = section(&cfg.ground_state, "ground_state")?;
    let cut = sec.cut.unwrap_or(model.rungs / 2);
    let (states, label) = ground_states(cfg)?;
    let mut t = Table::new(
        "entspec",
        &columns(&["hamiltonian", "leg_parity", "E0", "cut", "level", "xi", "lambda", "charge_left", "leg_parity_left"]),
    );
    let mut out = RunOutput::new();
    for gs in &states {
        let levels = entanglement_spectrum(&gs.basis, &gs.vector, cut)?;
        for (i, l) in levels.iter().enumerate() {
            let pl = l.parity_left.map_or(String::new(), |p| p.to_string());
            t.push(row(
                static_prefix(cfg, sec.particles)?,
                [
                    label.clone().into(),
                    gs.parity.to_string().into(),
                    gs.energy.into(),
                    cut.into(),
                    i.into(),
                    l.xi.into(),
                    l.lambda.into(),
                    (l.charge as usize).into(),
                    pl.into(),
                ],
            ));
        }
        if let Ok(d) = pairing_defect(&levels, 4) {
            out.note(&format!("pairing_{}", gs.parity), serde_json::json!({"max_split": d.max_split, "mean_spacing": d.mean_spacing}));
        }
    }
    out.tables.push(t);
    Ok(out)
}

fn correlations(cfg: &RunConfig) -> Result<RunOutput> {
    let model = section(&cfg.model, "model")?;
    let sec = section(&cfg.ground_state, "ground_state")?;
    let (states, label) = ground_states(cfg)?;
    let mut t = Table::new("correlations", &columns(&["hamiltonian", "leg_parity", "E0", "leg", "i", "j", "re", "im", "abs"]));
    let mut o = Table::new("order_parameter", &columns(&["hamiltonian", "leg_parity", "j", "re", "im"]));
    let mut out = RunOutput::new();
    let l = model.rungs;
    for gs in &states {
        for (leg, name) in [(Leg::A, "a"), (Leg::B, "b")] {
            for j in 0..l {
                let c = observables::two_point(&gs.basis, &gs.vector, leg, 0, j)?;
                t.push(row(
                    static_prefix(cfg, sec.particles)?,
                    [
                        label.clone().into(),
                        gs.parity.to_string().into(),
                        gs.energy.into(),
                        name.into(),
                        0usize.into(),
                        j.into(),
                        c.re.into(),
                        c.im.into(),
                        c.norm().into(),
                    ],
                ));
            }
        }
        // ⟨b†a⟩ changes leg parity; it needs the full sector
        let full = SectorBasis::new(l, sec.particles, None)?;
        let mut psi = vec![C64::new(0.0, 0.0); full.dim()];
        for (s, z) in gs.basis.states().iter().zip(&gs.vector) {
            if let Some(i) = full.index_of(*s) {
                psi[i] = *z;
            }
        }
        for j in 0..l {
            let c = observables::order_parameter(&full, &psi, j)?;
            o.push(row(
                static_prefix(cfg, sec.particles)?,
                [label.clone().into(), gs.parity.to_string().into(), j.into(), c.re.into(), c.im.into()],
            ));
        }
        if l >= 2 {
            let edge = observables::two_point(&gs.basis, &gs.vector, Leg::A, 0, l - 1)?.norm();
            let bulk = observables::two_point(&gs.basis, &gs.vector, Leg::A, 0, (l / 2).max(1) - 1)?.norm();
            out.note(&format!("edge_{}", gs.parity), edge);
            out.note(&format!("bulk_{}", gs.parity), bulk);
        }
    }
    out.tables.push(t);
    out.tables.push(o);
    Ok(out)
}

fn impure_pulse(cfg: &RunConfig) -> Result<RunOutput> {
    let (model, drive) = inputs(cfg)?;
    let sec = section(&cfg.impure, "impure")?;
    feasible(model.rungs, sec.particles, DYNAMICS_LIMIT)?;
    let basis = SectorBasis::new(model.rungs, sec.particles, None)?;
    let mut t = Table::new("impure_pulse", &columns(&["tp_over_T", "z2_coefficient", "t", "P_square_drive", "P_effective"]));
    let mut out = RunOutput::new();
    for &ratio in &sec.ratios {
        let mut d = drive.clone();
        d.pulse_duration = ratio * d.period;
        let exact = parity_series(Scheme::SquareDrive, model, &d, sec.n_periods, 1, &basis)?;
        let eff = parity_series(Scheme::EffectiveStatic(EffectiveKind::Impure), model, &d, sec.n_periods, 1, &basis)?;
        let z2 = models::impure_z2_coefficient(model.u0, ratio);
        let mut dev: f64 = 0.0;
        for ((time, p), (_, q)) in exact.iter_stroboscopic().zip(eff.iter_stroboscopic()) {
            dev = dev.max((p - q).abs());
            t.push(row(ladder_cells(model, &d, sec.particles), [ratio.into(), z2.into(), time.into(), p.into(), q.into()]));
        }
        out.note(
            &format!("tp_over_T={ratio}"),
            serde_json::json!({"max_P_square_drive": exact.max_stroboscopic(), "max_deviation": dev}),
        );
    }
    out.tables.push(t);
    Ok(out)
}

fn continuous_drive(cfg: &RunConfig) -> Result<RunOutput> {
    let (model, drive) = inputs(cfg)?;
    let sec = section(&cfg.continuous, "continuous")?;
    feasible(model.rungs, sec.particles, DYNAMICS_LIMIT)?;
    let basis = SectorBasis::new(model.rungs, sec.particles, None)?;
    let frame = (basis.dim() <= 400).then(|| JxFrame::on_sector(model, &basis)).transpose()?;
    let mut s = Table::new(
        "continuous_drive",
        &columns(&[
            "K0",
            "J0_2K0",
            "U1_tilde",
            "U2_tilde",
            "average_deviation",
            "first_order_norm",
            "max_P_cosine_drive",
            "max_P_effective",
        ]),
    );
    let mut t = Table::new("continuous_series", &columns(&["K0", "t", "P_cosine_drive", "P_effective"]));
    for &k0 in &sec.k0 {
        let mut d = drive.clone();
        d.k0 = k0;
        let (u1, u2) = models::continuous_couplings(model.u0, k0);
        let (avg, first) = match &frame {
            Some(f) => {
                let want = models::h_eff_continuous(model, k0)?.build(&basis)?.to_dense();
                let avg = floquet::moving_frame_average_cosine(f, k0, 4096);
                let c = floquet::first_order_correction_cosine(f, k0, 8, 512);
                (crate::linalg::max_abs(&(avg - want)), c.norm)
            }
            None => (f64::NAN, f64::NAN),
        };
        let exact = parity_series(Scheme::CosineDrive, model, &d, sec.n_periods, 1, &basis)?;
        let eff = parity_series(Scheme::EffectiveStatic(EffectiveKind::Continuous), model, &d, sec.n_periods, 1, &basis)?;
        for ((time, p), (_, q)) in exact.iter_stroboscopic().zip(eff.iter_stroboscopic()) {
            t.push(row(ladder_cells(model, &d, sec.particles), [k0.into(), time.into(), p.into(), q.into()]));
        }
        s.push(row(
            ladder_cells(model, &d, sec.particles),
            [
                k0.into(),
                bessel_j(0, 2.0 * k0).into(),
                u1.into(),
                u2.into(),
                avg.into(),
                first.into(),
                exact.max_stroboscopic().into(),
                eff.max_stroboscopic().into(),
            ],
        ));
    }
    let mut out = RunOutput::new();
    out.tables.push(s);
    out.tables.push(t);
    Ok(out)
}

fn checks(list: Vec<Check>) -> RunOutput {
    let mut t = Table::new("checks", &["suite", "check", "value", "lower", "upper", "passed"]);
    for c in &list {
        t.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.value.into(),
            c.bound.lower().into(),
            c.bound.upper().into(),
            c.passed.into(),
        ]);
    }
    let mut out = RunOutput::new();
    out.passed = validation::all_passed(&list);
    out.note("checks", list.len());
    out.note("failed", list.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect::<Vec<_>>());
    out.tables.push(t);
    out
}
