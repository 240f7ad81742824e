//! Lens layout that collimates a shaped tophat beam without placing a lens
//! inside the vapor cell, and the profile it produces.

use spinsqz::optics::{design_tophat, SupergaussianProfile};

fn main() -> spinsqz::Result<()> {
    let (w_in, fan, f1) = (1.8e-3, 0.01, 0.1);
    let design = design_tophat(w_in, fan, f1, 0.2, 0.1, true)?;
    println!("negative lens f2 = {:.2} mm", design.f2 * 1e3);
    println!(
        "L1 = {:.2} mm, L2 = {:.2} mm, L3 = {:.2} mm (residual {:.1e})",
        design.l1 * 1e3,
        design.l2 * 1e3,
        design.l3 * 1e3,
        design.residual
    );
    println!("setup element    z [mm]  height [mm]  slope [mrad]");
    for r in design.ray_table()? {
        println!(
            "{:>5} {:<9} {:7.2} {:12.4} {:13.4}",
            r.setup,
            r.element,
            r.z * 1e3,
            r.height * 1e3,
            r.slope * 1e3
        );
    }

    let profile = SupergaussianProfile::new(1.0e-3, 1.0e-3, 3.2)?;
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25] {
        println!(
            "I({frac:.2} w) = {:.4}",
            profile.intensity(frac * profile.w_x, 0.0)
        );
    }
    Ok(())
}
