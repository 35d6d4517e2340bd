//! Sector dimensions of a 4-rung ladder and the sign of a hop across
//! occupied modes.
use floquet_ladder::fockspace::{mode_a, mode_b, FermionTerm, FockState, OpSum, Parity, SectorBasis};

fn main() -> floquet_ladder::Result<()> {
    let rungs = 4;
    for n in 0..=2 * rungs {
        let all = SectorBasis::new(rungs, n, None)?;
        let even = SectorBasis::new(rungs, n, Some(Parity::Even))?;
        println!("N = {n}: dim {:>3} (leg parity even {:>3}, odd {:>3})", all.dim(), even.dim(), all.dim() - even.dim());
    }

    let basis = SectorBasis::new(2, 2, None)?;
    // a†_1 a_0 passes b_0, which is occupied
    let hop: OpSum = FermionTerm::hop(1.0, mode_a(1), mode_a(0)).into();
    let op = hop.build(&basis)?;
    let start = FockState::from_modes(&[mode_a(0), mode_b(0)]);
    let out = op.apply(&basis.basis_vector(start).unwrap());
    for (s, z) in basis.states().iter().zip(&out) {
        if z.norm() > 0.0 {
            println!("{start} -> {z:+} {s}");
        }
    }
    Ok(())
}
