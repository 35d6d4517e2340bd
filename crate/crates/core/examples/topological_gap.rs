//! Charge gaps, entanglement spectrum and edge correlations of the pulsed
//! ladder at alpha = 1/2 with L = 8, N = 4.
use floquet_ladder::fockspace::{Leg, Parity, SectorBasis};
use floquet_ladder::models::{self, ModelParams};
use floquet_ladder::observables::{self, charge_gaps, entanglement_spectrum, two_point};

fn main() -> floquet_ladder::Result<()> {
    let (rungs, n) = (8, 4);
    let h = models::h_eff_pulse(&ModelParams::new(1.0, -1.5, rungs), 0.5)?;

    let gaps = charge_gaps(|b| h.build(b), rungs, n)?;
    println!("Delta_topo = {:.4}, parity splitting = {:.4}, gap within a parity sector = {:.4}", gaps.delta_topo, gaps.parity_splitting, gaps.within_parity_gap);

    for parity in [Parity::Even, Parity::Odd] {
        let basis = SectorBasis::new(rungs, n, Some(parity))?;
        let gs = observables::ground_states(&h.build(&basis)?, 1)?.remove(0);
        let edge = two_point(&basis, &gs.vector, Leg::A, 0, rungs - 1)?.norm();
        let bulk = two_point(&basis, &gs.vector, Leg::A, 0, rungs / 2 - 1)?.norm();
        println!("\nleg parity {parity}: E0 = {:.6}, |<a1+ a8>| = {edge:.4}, |<a1+ a4>| = {bulk:.4}", gs.energy);
        for l in entanglement_spectrum(&basis, &gs.vector, rungs / 2)?.iter().take(8) {
            println!("  xi = {:8.4}  N_left = {}  P_left = {}", l.xi, l.charge, l.parity_left.map_or("-".into(), |p| p.to_string()));
        }
    }
    Ok(())
}
