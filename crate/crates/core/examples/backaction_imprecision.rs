//! Backaction-imprecision products in units of ħ/2 for the two measurement
//! regimes.

use spinsqz::spectrum::backaction_imprecision_product;

fn main() -> spinsqz::Result<()> {
    let cases = [
        ("narrowband", 0.91, 2.0, 0.054, 15.0),
        ("broadband", 0.91, 0.0, 0.18, 8.0),
        ("ideal", 1.0, 0.0, 0.0, f64::INFINITY),
    ];
    for (name, eta, ext, zeta, c_q) in cases {
        let bip = backaction_imprecision_product(eta, ext, zeta, c_q)?;
        println!(
            "{name:>10}: η = {eta}, S_ext = {ext} SN, ζ = {zeta}, C_q = {c_q} -> {bip:.3} × ħ/2"
        );
    }
    Ok(())
}
