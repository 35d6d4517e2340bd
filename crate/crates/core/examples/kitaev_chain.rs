use floquet_ladder::freefermion::{self, KitaevParams};

fn main() -> floquet_ladder::Result<()> {
    println!("  mu    phase         lowest BdG energy (L = 30)");
    for mu in [0.0, 1.0, 1.9, 2.0, 2.1, 3.0] {
        let p = KitaevParams::open(1.0, mu, 1.0, 30);
        let e = freefermion::kitaev_spectrum(&p)?.lowest();
        println!("{mu:5.2}  {:<12?}  {e:.3e}", freefermion::phase_classify(&p));
    }

    let decay = freefermion::majorana_splitting_decay(1.0, 1.0, 1.0, &[6, 8, 10, 12, 14, 16])?;
    println!("splitting ~ exp({:.4} L)", decay.slope);

    let p = KitaevParams::open(1.0, 0.5, 0.8, 8);
    let gaussian = freefermion::correlation_entanglement(&p, 4)?;
    let ed = freefermion::ed_entanglement(&p, 4)?;
    for (a, b) in gaussian.iter().zip(&ed).take(6) {
        println!("lambda: correlation matrix {:.10}, ED {:.10}", a.lambda, b.lambda);
    }
    Ok(())
}
