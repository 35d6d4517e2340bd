//! Stroboscopic Rabi oscillation on one plaquette under the pulse sequence.
use std::f64::consts::{FRAC_PI_2, PI};

use floquet_ladder::floquet::{self, PropagationPlan, Scheme};
use floquet_ladder::fockspace::{mode_a, mode_b, FockState, SectorBasis};
use floquet_ladder::models::{DriveParams, ModelParams};
use floquet_ladder::observables::oscillation_period;

fn main() -> floquet_ladder::Result<()> {
    let (u0, alpha, period): (f64, f64, f64) = (-0.7, 1.0 / 3.0, 0.2);
    let t_r = 2.0 * PI / (u0 * (1.0 - alpha)).abs();
    let n = (4.5 * t_r / period).ceil() as usize;

    let basis = SectorBasis::new(2, 2, None)?;
    let plan = PropagationPlan::new(Scheme::PulseSequence, ModelParams::new(1.0, u0, 2), DriveParams::pulse(alpha, FRAC_PI_2, period), n)
        .stroboscopic();
    let aa = FockState::from_modes(&[mode_a(0), mode_a(1)]);
    let bb = FockState::from_modes(&[mode_b(0), mode_b(1)]);
    let traj = floquet::evolve(&plan, &basis, &basis.basis_vector(aa).unwrap())?;

    let (ia, ib) = (basis.index_of(aa).unwrap(), basis.index_of(bb).unwrap());
    for (k, (t, psi)) in traj.stroboscopic().enumerate() {
        if k % 20 == 0 {
            println!("t = {t:7.2}  P(aa) = {:.4}  P(bb) = {:.4}", psi[ia].norm_sqr(), psi[ib].norm_sqr());
        }
    }
    let measured = oscillation_period(&traj.population(ia))?;
    println!("period {measured:.5}, expected {t_r:.5}");
    Ok(())
}
