use std::f64::consts::FRAC_PI_2;

use floquet_ladder::floquet::{EffectiveKind, Floquet, PropagationPlan, Scheme};
use floquet_ladder::fockspace::SectorBasis;
use floquet_ladder::models::{DriveParams, ModelParams};
use floquet_ladder::observables::parity_change_probability;

fn main() -> floquet_ladder::Result<()> {
    let basis = SectorBasis::new(2, 2, None)?;
    let model = ModelParams::new(1.0, -0.7, 2);

    for (label, scheme, eta) in [
        ("pulses, eta = pi/2", Scheme::PulseSequence, FRAC_PI_2),
        ("effective, eta = pi/2", Scheme::EffectiveStatic(EffectiveKind::Pulse), FRAC_PI_2),
        ("pulses, eta = pi/2 + 0.1", Scheme::PulseSequence, FRAC_PI_2 + 0.1),
        ("pulses, eta = pi/4", Scheme::PulseSequence, FRAC_PI_2 / 2.0),
    ] {
        let plan = PropagationPlan::new(scheme, model.clone(), DriveParams::pulse(1.0 / 3.0, eta, 0.2), 200).stroboscopic();
        let series = parity_change_probability(&Floquet::new(&plan, &basis)?)?;
        println!("{label:<26} max P = {:.3e}", series.max_stroboscopic());
    }

    // inside the period the parity is not conserved
    let plan = PropagationPlan::new(Scheme::PulseSequence, model, DriveParams::pulse(1.0 / 3.0, FRAC_PI_2, 0.2), 3).with_samples(8);
    let series = parity_change_probability(&Floquet::new(&plan, &basis)?)?;
    for ((t, s), p) in series.times.iter().zip(&series.stroboscopic).zip(&series.mean_probability) {
        println!("t = {t:.3} {} P = {p:.4}", if *s { "*" } else { " " });
    }
    Ok(())
}
