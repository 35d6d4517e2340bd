//! Bosonized couplings of the effective ladder and their one-loop flow.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::pulse_couplings;

/// Fermi velocity used in the bare Luttinger parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum VelocityConvention {
    /// `v_F = 2τ sin(πν)`.
    TightBinding,
    /// A fixed value in units of `τ`.
    Fixed(f64),
}

impl VelocityConvention {
    pub fn fermi_velocity(self, tau: f64, nu: f64) -> f64 {
        match self {
            VelocityConvention::TightBinding => 2.0 * tau * (PI * nu).sin(),
            VelocityConvention::Fixed(v) => v * tau,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BareCouplings {
    pub u0: f64,
    pub alpha: f64,
    pub nu: f64,
    pub kf: f64,
    pub u1: f64,
    pub u2: f64,
    pub k_minus: f64,
    pub v_minus: f64,
    pub y_minus: f64,
    pub y_p: f64,
    pub y_bs: f64,
}

impl BareCouplings {
    /// `|K₋ − 1|`, large values mark points where the flow equations are
    /// used outside their regime.
    pub fn marginality(&self) -> f64 {
        (self.k_minus - 1.0).abs()
    }

    pub fn initial(&self) -> [f64; 3] {
        [self.y_minus, self.y_p, self.y_bs]
    }
}

pub fn bare_couplings(u0: f64, alpha: f64, nu: f64, tau: f64) -> Result<BareCouplings> {
    bare_couplings_with(u0, alpha, nu, tau, VelocityConvention::TightBinding)
}

/// Luttinger parameter, velocity and dimensionless pair / backscattering
/// couplings of the antisymmetric sector. The undriven points `α = 0, 1`
/// carry no inter-leg couplings.
pub fn bare_couplings_with(
    u0: f64,
    alpha: f64,
    nu: f64,
    tau: f64,
    convention: VelocityConvention,
) -> Result<BareCouplings> {
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::InvalidParameter(format!("filling {nu} outside (0, 1/2)")));
    }
    if !(0.0..=1.0).contains(&alpha) || !u0.is_finite() || !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}, U0 = {u0}, tau = {tau}")));
    }
    let (u1, u2) = if alpha == 0.0 || alpha == 1.0 { (u0, 0.0) } else { pulse_couplings(u0, alpha) };
    let kf = PI * nu;
    let (s2, c2) = (kf.sin().powi(2), kf.cos().powi(2));
    let vpi = convention.fermi_velocity(tau, nu) * PI;
    let num = vpi + u1 * (2.0 * kf).cos() + 2.0 * u2 * s2;
    let den = vpi + u1 * (2.0 - (2.0 * kf).cos()) - 2.0 * u2 * s2;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::OutsideWindow(format!(
            "non-positive velocity at U0 = {u0}, alpha = {alpha}, nu = {nu}"
        )));
    }
    let k_minus = (num / den).sqrt();
    let v_minus = (num * den).sqrt() / PI;
    Ok(BareCouplings {
        u0,
        alpha,
        nu,
        kf,
        u1,
        u2,
        k_minus,
        v_minus,
        y_minus: 2.0 * (k_minus - 1.0),
        y_p: -4.0 * u2 * s2 / (PI * v_minus),
        y_bs: -4.0 * u2 * c2 / (PI * v_minus),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Strong-coupling value of `|y_p|` or `|y_bs|`.
    pub threshold: f64,
    /// Initial step.
    pub dl: f64,
    /// Flows still below threshold here are declared gapless.
    pub l_max: f64,
    /// Local error target per step.
    pub tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { threshold: 9.0, dl: 1e-4, l_max: 1e4, tolerance: 1e-10 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 1.0) {
            return Err(Error::InvalidParameter(format!("threshold {} < 1", self.threshold)));
        }
        if !(self.dl > 0.0 && self.l_max > self.dl && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("flow step, l_max and tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PairDominant,
    BackscatterDominant,
    Gapless,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::PairDominant => "pair_dominant",
            Outcome::BackscatterDominant => "backscatter_dominant",
            Outcome::Gapless => "gapless",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowResult {
    pub outcome: Outcome,
    pub l_star: Option<f64>,
    /// `e^{−l*}`, zero when gapless.
    pub xi_inv: f64,
    /// `(l, y₋, y_p, y_bs)` at every accepted step.
    pub trace: Vec<[f64; 4]>,
}

fn rhs(y: [f64; 3]) -> [f64; 3] {
    let [ym, yp, yb] = y;
    [2.0 * (yp * yp - yb * yb), ym * yp, -ym * yb]
}

fn rk4(y: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = rhs(y);
    let k2 = rhs(add(y, k1, h / 2.0));
    let k3 = rhs(add(y, k2, h / 2.0));
    let k4 = rhs(add(y, k3, h));
    let mut out = y;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn strength(y: [f64; 3]) -> f64 {
    y[1].abs().max(y[2].abs())
}

pub fn integrate_flow(bare: &BareCouplings, cfg: &FlowConfig) -> Result<FlowResult> {
    integrate_from(bare.initial(), cfg)
}

/// Adaptive RK4 (step doubling) from `(y₋, y_p, y_bs)`; the crossing of the
/// threshold is located by bisection inside the last step.
pub fn integrate_from(y0: [f64; 3], cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    let mut trace = vec![[0.0, y0[0], y0[1], y0[2]]];
    let gapless = |trace| FlowResult { outcome: Outcome::Gapless, l_star: None, xi_inv: 0.0, trace };
    if y0[1] == 0.0 && y0[2] == 0.0 {
        return Ok(gapless(trace));
    }
    if strength(y0) >= cfg.threshold {
        return Ok(finish(y0, 0.0, trace));
    }
    let (mut l, mut y, mut h) = (0.0, y0, cfg.dl);
    let jump = 0.1 * cfg.threshold;
    let mut rejections = 0usize;
    while l < cfg.l_max {
        h = h.min(cfg.l_max - l);
        let full = rk4(y, h);
        let half = rk4(rk4(y, h / 2.0), h / 2.0);
        let err = (0..3).map(|i| (half[i] - full[i]).abs()).fold(0.0, f64::max) / 15.0;
        let scale = 1.0 + half.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let jumped = (0..3).any(|i| (half[i] - y[i]).abs() > jump);
        if jumped || err > cfg.tolerance * scale || !half.iter().all(|v| v.is_finite()) {
            h /= 2.0;
            rejections += 1;
            if h < 1e-14 || rejections > 1_000_000 {
                return Err(Error::NoConvergence { what: "RG flow step", iterations: rejections, residual: err });
            }
            continue;
        }
        if strength(half) >= cfg.threshold {
            let (s, ys) = bisect_crossing(y, h, cfg.threshold);
            trace.push([l + s, ys[0], ys[1], ys[2]]);
            return Ok(finish(ys, l + s, trace));
        }
        l += h;
        y = half;
        trace.push([l, y[0], y[1], y[2]]);
        let grow = if err > 0.0 { 0.9 * (cfg.tolerance * scale / err).powf(0.2) } else { 4.0 };
        h *= grow.clamp(0.2, 4.0);
    }
    Ok(gapless(trace))
}

fn bisect_crossing(y: [f64; 3], h: f64, threshold: f64) -> (f64, [f64; 3]) {
    let step = |s: f64| rk4(rk4(y, s / 2.0), s / 2.0);
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > 1e-13 * (1.0 + h) {
        let mid = 0.5 * (lo + hi);
        if strength(step(mid)) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, step(hi))
}

fn finish(y: [f64; 3], l_star: f64, trace: Vec<[f64; 4]>) -> FlowResult {
    let outcome = if y[1].abs() >= y[2].abs() { Outcome::PairDominant } else { Outcome::BackscatterDominant };
    FlowResult { outcome, l_star: Some(l_star), xi_inv: (-l_star).exp(), trace }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub u0: f64,
    pub alpha: f64,
    pub nu: f64,
    pub k_minus: Option<f64>,
    pub outcome: std::result::Result<(Outcome, Option<f64>, f64), String>,
}

impl ScanPoint {
    pub fn xi_inv(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|o| o.2)
    }

    pub fn kind(&self) -> Option<Outcome> {
        self.outcome.as_ref().ok().map(|o| o.0)
    }
}

/// Flow outcome on the grid `u0s × alphas`, row-major in `u0`. Failing
/// points carry their error and do not stop the scan.
pub fn phase_scan(u0s: &[f64], alphas: &[f64], nu: f64, tau: f64, convention: VelocityConvention, cfg: &FlowConfig) -> Vec<ScanPoint> {
    let grid: Vec<(f64, f64)> = u0s.iter().flat_map(|&u| alphas.iter().map(move |&a| (u, a))).collect();
    grid.par_iter()
        .map(|&(u0, alpha)| {
            let bare = bare_couplings_with(u0, alpha, nu, tau, convention);
            let k_minus = bare.as_ref().ok().map(|b| b.k_minus);
            let outcome = bare
                .and_then(|b| integrate_flow(&b, cfg))
                .map(|r| (r.outcome, r.l_star, r.xi_inv))
                .map_err(|e| e.to_string());
            ScanPoint { u0, alpha, nu, k_minus, outcome }
        })
        .collect()
}

pub fn write_scan_csv(points: &[ScanPoint], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "U0,alpha,nu,outcome,l_star,xi_inv,K_minus_bare")?;
    let num = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
    for p in points {
        let (outcome, l_star, xi) = match &p.outcome {
            Ok((o, l, x)) => (o.as_str().to_string(), *l, Some(*x)),
            Err(e) => (format!("error: {}", e.replace(',', ";")), None, None),
        };
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{},{},{},{}",
            p.u0,
            p.alpha,
            p.nu,
            outcome,
            num(l_star),
            num(xi),
            num(p.k_minus)
        )?;
    }
    Ok(())
}

/// Least-squares fit of `ξ⁻¹(α) = A (1 − α^κ)`.
#[derive(Clone, Debug, Serialize)]
pub struct KappaFit {
    pub kappa: f64,
    pub amplitude: f64,
    pub rms: f64,
}

pub fn fit_kappa(alphas: &[f64], xi_inv: &[f64]) -> Result<KappaFit> {
    let pts: Vec<(f64, f64)> = alphas
        .iter()
        .zip(xi_inv)
        .filter(|(a, x)| **a > 0.0 && **a < 1.0 && x.is_finite())
        .map(|(a, x)| (*a, *x))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter("need at least three interior points to fit the exponent".into()));
    }
    let fit = |ln_k: f64| {
        let k = ln_k.exp();
        let basis: Vec<f64> = pts.iter().map(|(a, _)| 1.0 - a.powf(k)).collect();
        let amp = basis.iter().zip(&pts).map(|(b, p)| b * p.1).sum::<f64>() / basis.iter().map(|b| b * b).sum::<f64>();
        let ss = basis.iter().zip(&pts).map(|(b, p)| (amp * b - p.1).powi(2)).sum::<f64>();
        (ss, k, amp)
    };
    let (lo, hi) = ((1e-3f64).ln(), (1e3f64).ln());
    let n = 600;
    let best = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .min_by(|a, b| fit(*a).0.total_cmp(&fit(*b).0))
        .unwrap();
    // golden-section refinement around the best grid point
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if fit(c).0 < fit(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let (ss, kappa, amplitude) = fit(0.5 * (a + b));
    Ok(KappaFit { kappa, amplitude, rms: (ss / pts.len() as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn free_point_is_trivial() {
        let b = bare_couplings(0.0, 0.4, 1.0 / 3.0, 1.0).unwrap();
        assert_eq!((b.y_p, b.y_bs), (0.0, 0.0));
        assert!((b.k_minus - 1.0).abs() < 1e-15);
        let r = integrate_flow(&b, &FlowConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Gapless);
        assert_eq!(r.xi_inv, 0.0);
    }

    #[test]
    fn quarter_filling_couplings_match() {
        let b = bare_couplings(-0.8, 0.3, 0.25, 1.0).unwrap();
        let g_p = b.y_p * PI * b.v_minus;
        let g_bs = b.y_bs * PI * b.v_minus;
        assert!((g_p.abs() - 2.0 * b.u2.abs()).abs() < 1e-14);
        assert!((g_bs.abs() - 2.0 * b.u2.abs()).abs() < 1e-14);
        // signs follow −U₂
        assert!(g_p > 0.0 && g_bs > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bare_couplings(-1.0, 0.5, 0.5, 1.0).is_err());
        assert!(bare_couplings(-1.0, 0.5, 0.0, 1.0).is_err());
        assert!(bare_couplings(-1.0, 1.5, 0.2, 1.0).is_err());
        assert!(matches!(bare_couplings(-40.0, 0.9, 0.3, 1.0), Err(Error::OutsideWindow(_))));
        assert!(integrate_from([0.1, 0.1, 0.0], &FlowConfig { threshold: 0.5, ..Default::default() }).is_err());
    }

    #[test]
    fn undriven_endpoints_are_gapless() {
        for u0 in [-1.5, -0.3, 0.7] {
            for alpha in [0.0, 1.0] {
                let b = bare_couplings(u0, alpha, 1.0 / 3.0, 1.0).unwrap();
                assert_eq!(integrate_flow(&b, &FlowConfig::default()).unwrap().outcome, Outcome::Gapless);
            }
        }
    }

    fn euler_l_star(y0: [f64; 3], threshold: f64, dl: f64) -> f64 {
        let (mut ym, mut yp, mut yb) = (y0[0], y0[1], y0[2]);
        let mut l = 0.0;
        while yp.abs().max(yb.abs()) < threshold {
            let (dm, dp, db) = (2.0 * (yp * yp - yb * yb), ym * yp, -ym * yb);
            ym += dl * dm;
            yp += dl * dp;
            yb += dl * db;
            l += dl;
        }
        l
    }

    #[test]
    fn pair_dominant_point_matches_euler() {
        let b = bare_couplings(-1.2, 0.75, 1.0 / 3.0, 1.0).unwrap();
        let r = integrate_flow(&b, &FlowConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::PairDominant);
        let l = r.l_star.unwrap();
        assert!(r.xi_inv > 0.0 && (r.xi_inv - (-l).exp()).abs() < 1e-15);
        let oracle = euler_l_star(b.initial(), 9.0, 1e-6);
        assert!((l - oracle).abs() < 1e-3, "{l} vs {oracle}");
    }

    #[test]
    fn k_minus_exceeds_one_for_attraction() {
        for u0 in linspace(-1.5, -0.05, 12) {
            for alpha in linspace(0.05, 0.95, 10) {
                for nu in [0.1, 0.25, 1.0 / 3.0, 0.45] {
                    assert!(bare_couplings(u0, alpha, nu, 1.0).unwrap().k_minus > 1.0);
                }
            }
        }
    }

    #[test]
    fn gap_grows_with_attraction() {
        let u0s = linspace(-1.5, 0.0, 50);
        let cfg = FlowConfig::default();
        let xi: Vec<f64> = u0s
            .iter()
            .map(|&u| integrate_flow(&bare_couplings(u, 0.5, 1.0 / 3.0, 1.0).unwrap(), &cfg).unwrap().xi_inv)
            .collect();
        assert_eq!(xi[49], 0.0);
        // xi[0] is at U0 = −1.5, the most attractive point
        assert!(xi.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn repulsion_flows_to_backscattering_for_late_kicks() {
        // with y₋ < 0 but |y_p| = 3|y_bs| at ν = 1/3, small α still ends pair dominant
        let cfg = FlowConfig::default();
        for u0 in linspace(0.05, 1.5, 8) {
            for alpha in linspace(0.05, 0.95, 8) {
                let b = bare_couplings(u0, alpha, 1.0 / 3.0, 1.0).unwrap();
                assert!(b.y_minus < 0.0 && b.k_minus < 1.0);
                let r = integrate_flow(&b, &cfg).unwrap();
                if alpha >= 0.5 {
                    assert_eq!(r.outcome, Outcome::BackscatterDominant);
                }
            }
        }
        let b = bare_couplings(1.0, 0.1, 1.0 / 3.0, 1.0).unwrap();
        assert_eq!(integrate_flow(&b, &cfg).unwrap().outcome, Outcome::PairDominant);
    }

    #[test]
    fn scan_keeps_errors_and_order() {
        let pts = phase_scan(&[-50.0, -1.0, 0.0], &[0.5, 1.0], 1.0 / 3.0, 1.0, VelocityConvention::TightBinding, &FlowConfig::default());
        assert_eq!(pts.len(), 6);
        assert!(pts[0].outcome.is_err());
        assert_eq!((pts[2].u0, pts[2].alpha), (-1.0, 0.5));
        assert_eq!(pts[2].kind(), Some(Outcome::PairDominant));
        assert_eq!(pts[3].kind(), Some(Outcome::Gapless));
        assert_eq!(pts[4].kind(), Some(Outcome::Gapless));
        let mut buf = Vec::new();
        write_scan_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().nth(1).unwrap().contains("error"));
    }

    #[test]
    fn alpha_profile_decreases_toward_one() {
        let alphas = linspace(0.5, 0.98, 13);
        let cfg = FlowConfig::default();
        let xi: Vec<f64> = alphas
            .iter()
            .map(|&a| integrate_flow(&bare_couplings(-1.2, a, 1.0 / 3.0, 1.0).unwrap(), &cfg).unwrap().xi_inv)
            .collect();
        assert!(xi.windows(2).all(|w| w[0] > w[1]));
        let fit = fit_kappa(&alphas, &xi).unwrap();
        assert!(fit.kappa > 0.0 && fit.amplitude > 0.0);
    }

    #[test]
    fn kappa_fit_recovers_exponent() {
        let alphas = linspace(0.5, 0.95, 10);
        let xi: Vec<f64> = alphas.iter().map(|a| 0.3 * (1.0 - a.powf(2.7))).collect();
        let fit = fit_kappa(&alphas, &xi).unwrap();
        assert!((fit.kappa - 2.7).abs() < 1e-6 && (fit.amplitude - 0.3).abs() < 1e-6);
    }

    #[test]
    fn velocity_convention_changes_scale_only() {
        let a = bare_couplings_with(-1.0, 0.5, 0.3, 1.0, VelocityConvention::TightBinding).unwrap();
        let b = bare_couplings_with(-1.0, 0.5, 0.3, 1.0, VelocityConvention::Fixed(1.0)).unwrap();
        assert!(a.v_minus != b.v_minus);
        assert!(a.y_p.signum() == b.y_p.signum() && a.k_minus > 1.0 && b.k_minus > 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kt_invariant_is_conserved(ym in 0.05f64..0.6, yp in 0.01f64..0.3) {
            let r = integrate_from([ym, yp, 0.0], &FlowConfig { l_max: 30.0, ..Default::default() }).unwrap();
            let c0 = ym * ym - 2.0 * yp * yp;
            for s in &r.trace {
                prop_assert!((s[1] * s[1] - 2.0 * s[2] * s[2] - c0).abs() < 1e-6);
            }
        }

        #[test]
        fn threshold_is_monotone(u0 in -1.5f64..-0.3, alpha in 0.1f64..0.9, t in 1.0f64..8.0) {
            let b = bare_couplings(u0, alpha, 1.0 / 3.0, 1.0).unwrap();
            let lo = integrate_flow(&b, &FlowConfig { threshold: t, ..Default::default() }).unwrap();
            let hi = integrate_flow(&b, &FlowConfig { threshold: t + 1.0, ..Default::default() }).unwrap();
            prop_assert!(hi.l_star.unwrap() >= lo.l_star.unwrap());
        }
    }
}
