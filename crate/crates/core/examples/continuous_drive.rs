use floquet_ladder::floquet::{first_order_correction_cosine, moving_frame_average_cosine, JxFrame};
use floquet_ladder::fockspace::SectorBasis;
use floquet_ladder::linalg::max_abs;
use floquet_ladder::models::{self, ModelParams};
use floquet_ladder::special::bessel_j;

fn main() -> floquet_ladder::Result<()> {
    let model = ModelParams::new(1.0, -0.9, 3);
    let basis = SectorBasis::new(3, 3, None)?;
    let frame = JxFrame::on_sector(&model, &basis)?;

    println!("K0    J0(2K0)   U1~       U2~       |avg - H_eff|  first order");
    for k0 in [0.25, 0.5, 1.0, 1.2024, 1.5] {
        let (u1, u2) = models::continuous_couplings(model.u0, k0);
        let want = models::h_eff_continuous(&model, k0)?.build(&basis)?.to_dense();
        let avg = moving_frame_average_cosine(&frame, k0, 4096);
        let c = first_order_correction_cosine(&frame, k0, 8, 512);
        println!(
            "{k0:<5} {:+.5}  {u1:+.5}  {u2:+.5}  {:.1e}        {:.1e}",
            bessel_j(0, 2.0 * k0),
            max_abs(&(avg - want)),
            c.norm
        );
    }
    Ok(())
}
