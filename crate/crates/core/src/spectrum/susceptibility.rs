use num_complex::Complex64;

use crate::model::ModeParams;

/// Force susceptibility `χ[Ω] = Ω_S / (Ω_S² − Ω² − iΩγ0)` with the intrinsic
/// linewidth only.
pub fn susceptibility(mode: &ModeParams, omega: f64) -> Complex64 {
    susceptibility_with_linewidth(mode.omega, mode.gamma0, omega)
}

/// Susceptibility for an arbitrary linewidth, e.g. `γ0 + γ_DBA`.
pub fn susceptibility_with_linewidth(omega_s: f64, linewidth: f64, omega: f64) -> Complex64 {
    let denom = Complex64::new(omega_s * omega_s - omega * omega, -omega * linewidth);
    Complex64::new(omega_s, 0.0) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mode(omega: f64) -> ModeParams {
        ModeParams::new(omega, 0.3, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn static_limit() {
        let chi = susceptibility(&mode(4.0), 0.0);
        assert_eq!(chi, Complex64::new(0.25, 0.0));
    }

    #[test]
    fn on_resonance_is_imaginary() {
        let chi = susceptibility(&mode(4.0), 4.0);
        assert_relative_eq!(chi.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(chi.im, 1.0 / 0.3, max_relative = 1e-14);
    }

    #[test]
    fn odd_in_resonance_frequency() {
        for k in 0..50 {
            let w = k as f64 * 0.17;
            assert_eq!(
                susceptibility(&mode(-4.0), w),
                -susceptibility(&mode(4.0), w)
            );
        }
    }
}
