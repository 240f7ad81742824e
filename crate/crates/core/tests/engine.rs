use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use spinsqz::model::{Damping, ExtraneousNoise};
use spinsqz::spectrum::{analytic_single_mode_psd, min_over_angle, quadrature_spectra, rwa_psd};
use spinsqz::{homodyne_psd, EnsembleModel, ModeParams, SpectrumRequest};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

fn mode_strategy(larmor: f64) -> impl Strategy<Value = ModeParams> {
    (
        -30e3..30e3f64,
        1.0..4.0f64,
        2.0..5.0f64,
        -0.05..0.5f64,
        0.0..3.0f64,
    )
        .prop_map(move |(split, g0, gm, zeta, n_th)| {
            ModeParams::new(
                larmor + TAU * split,
                TAU * 10f64.powf(g0),
                TAU * 10f64.powf(gm),
                zeta,
                n_th,
            )
            .unwrap()
        })
}

fn model_strategy() -> impl Strategy<Value = EnsembleModel> {
    (
        0.3e6..2e6f64,
        1usize..5,
        0.05..=1.0f64,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_flat_map(|(larmor_hz, n, eta, viscous, ext)| {
            let larmor = TAU * larmor_hz;
            (prop::collection::vec(mode_strategy(larmor), n), 0.0..3.0f64).prop_map(
                move |(modes, amp)| {
                    let damping = if viscous {
                        Damping::Viscous
                    } else {
                        Damping::Symmetric
                    };
                    let extraneous =
                        ext.then(|| ExtraneousNoise::new(amp, TAU * 50e3, larmor).unwrap());
                    EnsembleModel::new(modes, eta)
                        .unwrap()
                        .with_damping(damping)
                        .with_extraneous(extraneous)
                        .unwrap()
                },
            )
        })
}

fn grid_around(model: &EnsembleModel) -> Vec<f64> {
    let center = model.modes()[0].omega.abs();
    linspace(0.02 * center, 1.8 * center, 157)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_loss_floor(model in model_strategy(), phi in 0.0..PI) {
        let grid = grid_around(&model);
        let traces = match homodyne_psd(&model, &SpectrumRequest::new(grid, vec![phi])) {
            Ok(t) => t,
            Err(e) => {
                // Only a genuine anti-damped draw may be refused.
                prop_assume!(!e.is_numerical());
                return Err(TestCaseError::fail(e.to_string()));
            }
        };
        let floor = 1.0 - model.eta();
        for v in &traces[0].values_sn {
            prop_assert!(v.is_finite());
            prop_assert!(*v >= floor * (1.0 - 1e-12), "{v} below {floor}");
        }
    }

    #[test]
    fn single_mode_envelope_bound(
        omega_hz in 0.3e6..3e6f64,
        gm in 2.0..5.0f64,
        g0 in 0.5..3.5f64,
        n_th in 0.0..3.0f64,
        eta in 0.1..=1.0f64,
    ) {
        let mode = ModeParams::new(TAU * omega_hz, TAU * 10f64.powf(g0), TAU * 10f64.powf(gm), 0.0, n_th).unwrap();
        let model = EnsembleModel::single(mode, eta).unwrap().with_damping(Damping::Viscous);
        let grid = linspace(0.5 * mode.omega, 1.5 * mode.omega + 1.0, 301);
        let (env, _) = min_over_angle(&model, &grid, false).unwrap();
        let d = mode.derived();
        let bound = 1.0 - eta * mode.gamma_meas / (mode.gamma_meas + d.gamma_th);
        for v in env.values_sn {
            prop_assert!(v >= bound - 1e-12, "{v} < {bound}");
        }
    }

    #[test]
    fn no_measurement_is_exact_vacuum(mut model in model_strategy(), phi in 0.0..PI) {
        let silent = model.modes().iter().map(|m| ModeParams { gamma_meas: 0.0, zeta: 0.0, ..*m }).collect();
        model = model.with_modes(silent).unwrap().with_extraneous(None).unwrap();
        let t = homodyne_psd(&model, &SpectrumRequest::new(grid_around(&model), vec![phi])).unwrap();
        prop_assert!(t[0].values_sn.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn degenerate_modes_add_far_below_resonance(
        omega_hz in 0.5e6..3e6f64,
        gammas in prop::collection::vec(2.0..4.5f64, 2..5),
        g0 in 0.5..3.0f64,
        n_th in 0.0..2.0f64,
        phi in 0.0..PI,
    ) {
        let omega = TAU * omega_hz;
        let gamma0 = TAU * 10f64.powf(g0);
        let modes: Vec<ModeParams> = gammas
            .iter()
            .map(|g| ModeParams::new(omega, gamma0, TAU * 10f64.powf(*g), 0.0, n_th).unwrap())
            .collect();
        let total: f64 = modes.iter().map(|m| m.gamma_meas).sum();
        let single = EnsembleModel::single(ModeParams::new(omega, gamma0, total, 0.0, n_th).unwrap(), 0.9).unwrap();
        let multi = EnsembleModel::new(modes, 0.9).unwrap();
        let grid = linspace(1e-4 * omega, 1e-2 * omega, 50);
        let req = SpectrumRequest::new(grid, vec![phi]);
        let a = homodyne_psd(&multi, &req).unwrap();
        let b = homodyne_psd(&single, &req).unwrap();
        for (x, y) in a[0].values_sn.iter().zip(&b[0].values_sn) {
            prop_assert!((x - y).abs() <= 1e-6 * y, "{x} vs {y}");
        }
    }

    #[test]
    fn rwa_tracks_closed_form_at_high_q(
        omega_hz in 0.5e6..3e6f64,
        c_q in 0.5..30.0f64,
        n_th in 0.0..2.0f64,
        phi in 0.0..PI,
    ) {
        let omega = TAU * omega_hz;
        let gamma_meas = 1e-4 * omega;
        let mode = ModeParams::with_cooperativity(omega, gamma_meas, c_q, 0.0, n_th).unwrap();
        let gamma = mode.gamma0;
        let grid = linspace(omega - 10.0 * gamma, omega + 10.0 * gamma, 81);
        let rwa = rwa_psd(&mode, phi, &grid).unwrap();
        let exact = analytic_single_mode_psd(&mode, 1.0, phi, &grid).unwrap();
        for (x, y) in rwa.values_sn.iter().zip(&exact.values_sn) {
            prop_assert!((x - y).abs() <= 0.02 * y, "{x} vs {y}");
        }
    }

    #[test]
    fn rwa_tracks_full_engine_with_dynamical_backaction(
        omega_hz in 0.5e6..3e6f64,
        c_q in 0.5..30.0f64,
        zeta in -0.02..0.3f64,
        phi in 0.0..PI,
    ) {
        let omega = TAU * omega_hz;
        let mode = ModeParams::with_cooperativity(omega, 1e-4 * omega, c_q, zeta, 0.9).unwrap();
        let width = mode.derived().gamma_total + mode.gamma_meas;
        prop_assume!(mode.derived().gamma_total > 0.0);
        let grid = linspace(omega - 10.0 * width, omega + 10.0 * width, 81);
        let rwa = rwa_psd(&mode, phi, &grid).unwrap();
        let model = EnsembleModel::single(mode, 1.0).unwrap();
        let full = homodyne_psd(&model, &SpectrumRequest::new(grid, vec![phi])).unwrap();
        for (x, y) in rwa.values_sn.iter().zip(&full[0].values_sn) {
            prop_assert!((x - y).abs() <= 0.02 * y, "{x} vs {y}");
        }
    }

    #[test]
    fn extraneous_noise_adds_projected_gaussian(model in model_strategy(), phi in 0.0..PI, amp in 0.1..3.0f64) {
        let larmor = model.modes()[0].omega;
        let noisy = model.clone().with_extraneous(Some(ExtraneousNoise::new(amp, TAU * 30e3, larmor).unwrap())).unwrap();
        let grid = grid_around(&model);
        let req = SpectrumRequest::new(grid.clone(), vec![phi]);
        let (Ok(with), Ok(without)) = (
            homodyne_psd(&noisy, &req),
            homodyne_psd(&noisy, &req.clone().with_extraneous(false)),
        ) else {
            prop_assume!(false);
            unreachable!();
        };
        for (k, w) in grid.iter().enumerate() {
            let g = amp * (-(w - larmor).powi(2) / (2.0 * (TAU * 30e3f64).powi(2))).exp();
            let want = model.eta() * phi.cos().powi(2) * g;
            let got = with[0].values_sn[k] - without[0].values_sn[k];
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + with[0].values_sn[k]));
        }
    }

    #[test]
    fn quadrature_spectra_reproduce_every_angle(model in model_strategy(), phi in 0.0..PI) {
        let grid = grid_around(&model);
        let Ok(spectra) = quadrature_spectra(&model, &grid, true) else {
            prop_assume!(false);
            unreachable!();
        };
        let traces = homodyne_psd(&model, &SpectrumRequest::new(grid, vec![phi])).unwrap();
        for (s, v) in spectra.iter().zip(&traces[0].values_sn) {
            let via = s.detected_sn(phi, model.eta());
            prop_assert!((via - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    let modes = (0..8)
        .map(|k| {
            ModeParams::new(
                TAU * (1.4e6 + 3e3 * k as f64),
                TAU * 200.0,
                TAU * 5e3,
                0.05,
                0.9,
            )
            .unwrap()
        })
        .collect();
    let model = EnsembleModel::new(modes, 0.91).unwrap();
    let req = SpectrumRequest::new(
        linspace(TAU * 1.3e6, TAU * 1.5e6, 2000),
        vec![0.1, 1.0, 2.0],
    );
    let eval = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| homodyne_psd(&model, &req).unwrap())
    };
    let one = eval(1);
    for threads in [2, 4, 7] {
        assert_eq!(one, eval(threads));
    }
}
