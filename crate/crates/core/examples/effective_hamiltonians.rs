use floquet_ladder::fockspace::SectorBasis;
use floquet_ladder::linalg::{eigvalsh, spectrum_distance};
use floquet_ladder::models::{self, Boundary, ModelParams, Pattern};

fn main() -> floquet_ladder::Result<()> {
    let model = ModelParams::new(1.0, -1.0, 4);
    let patterns = [Pattern::Hopping, Pattern::IntraLegDensity, Pattern::InterLegDensity, Pattern::Swap, Pattern::PairHopping];

    println!("alpha   U1       U2       swap     pair");
    for alpha in [0.0, 0.25, 0.5, 0.75] {
        let h = models::h_eff_pulse(&model, alpha)?;
        let d = models::decompose(&h, &patterns, model.rungs, Boundary::Open)?;
        let (u1, u2) = models::pulse_couplings(model.u0, alpha);
        println!(
            "{alpha:<6}  {u1:+.4}  {u2:+.4}  {:+.4}  {:+.4}",
            d.amplitude(Pattern::Swap).unwrap(),
            d.amplitude(Pattern::PairHopping).unwrap()
        );
    }

    // alpha and 1 - alpha give the same spectrum
    let b = SectorBasis::new(4, 4, None)?;
    let spec = |a| -> floquet_ladder::Result<Vec<f64>> { Ok(eigvalsh(&models::h_eff_pulse(&model, a)?.build(&b)?.to_dense())) };
    println!("max |E(0.3) - E(0.7)| = {:.2e}", spectrum_distance(&spec(0.3)?, &spec(0.7)?));

    let pure = models::h_eff_pure_pair(&ModelParams::new(1.0, -1.0, 3), &[0.2, 0.15, 0.5, 0.15])?;
    let d = models::decompose(&pure, &patterns, 3, Boundary::Open)?;
    println!("two-pulse sequence: swap {:.1e}, pair hopping {:+.4}", d.amplitude(Pattern::Swap).unwrap(), d.amplitude(Pattern::PairHopping).unwrap());
    Ok(())
}
