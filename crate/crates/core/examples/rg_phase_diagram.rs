//! Inverse correlation length from the bosonization flow at filling 1/3.
use floquet_ladder::rgflow::{self, FlowConfig, VelocityConvention};

fn main() -> floquet_ladder::Result<()> {
    let cfg = FlowConfig::default();
    let u0s = [-0.5, -1.0, -1.5];
    let alphas: Vec<f64> = (0..=10).map(|i| 0.5 + 0.05 * i as f64).collect();
    let scan = rgflow::phase_scan(&u0s, &alphas, 1.0 / 3.0, 1.0, VelocityConvention::TightBinding, &cfg);

    print!("alpha ");
    for u in u0s {
        print!("  U0={u:<5}");
    }
    println!();
    for (j, a) in alphas.iter().enumerate() {
        print!("{a:.2}  ");
        for i in 0..u0s.len() {
            print!("  {:.3e}", scan[i * alphas.len() + j].xi_inv().unwrap_or(f64::NAN));
        }
        println!();
    }

    let bare = rgflow::bare_couplings(1.0, 0.8, 1.0 / 3.0, 1.0)?;
    let flow = rgflow::integrate_flow(&bare, &cfg)?;
    println!("U0 = +1, alpha = 0.8: {} at l* = {:?}", flow.outcome.as_str(), flow.l_star);
    Ok(())
}
