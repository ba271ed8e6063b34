use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ion_transport::constants::{angular, Species};
use ion_transport::dynamics::{mode_exchange, ExchangeConfig};
use ion_transport::filter::{DigitalFilter, FilterSpec};
use ion_transport::heating::{anomalous_rate, rf_noise_rate, RfNoiseInput};
use ion_transport::solver::bvls::bvls;
use ion_transport::solver::{nullspace, solve, ConstraintSystem, SolverOptions};
use ion_transport::waveform::{dac_lsb, quantize, TimedWaveform};

fn rf_input(s_plus: f64, s_minus: f64, dz: f64, f_z: f64, f_rf: f64) -> RfNoiseInput {
    RfNoiseInput {
        s_plus,
        s_minus,
        v_rf: 200.0,
        omega_z: angular(f_z),
        omega_rf: angular(f_rf),
        species: Species::beryllium9(),
        dz_e0sq: dz,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #[test]
    fn exchange_conserves_total_energy(
        dw in -1e6f64..1e6,
        wait in 0.0f64..1e-3,
        theta in -3.2f64..3.2,
        n_x in 0.0f64..50.0,
        n_z in 0.0f64..50.0,
        offset in -10.0f64..10.0,
    ) {
        let cfg = ExchangeConfig { delta_omega: dw, wait, theta, n_x, n_z, phase_offset: offset };
        let (x, z) = mode_exchange(&cfg).unwrap();
        prop_assert!((x + z - n_x - n_z).abs() <= 1e-12 * (n_x + n_z).max(1.0));
        prop_assert!(x >= -1e-12 && z >= -1e-12);
    }

    #[test]
    fn rf_rate_is_linear_in_noise_and_quadratic_in_slope(
        sp in 1e-18f64..1e-10,
        sm in 1e-18f64..1e-10,
        dz in -1e16f64..1e16,
        k in 0.1f64..10.0,
    ) {
        let base = rf_noise_rate(&rf_input(sp, sm, dz, 3.6e6, 83e6)).unwrap();
        let both = rf_noise_rate(&rf_input(k * sp, k * sm, dz, 3.6e6, 83e6)).unwrap();
        let slope = rf_noise_rate(&rf_input(sp, sm, k * dz, 3.6e6, 83e6)).unwrap();
        let split = rf_noise_rate(&rf_input(sp, 0.0, dz, 3.6e6, 83e6)).unwrap()
            + rf_noise_rate(&rf_input(0.0, sm, dz, 3.6e6, 83e6)).unwrap();
        prop_assert!(base >= 0.0);
        if base > 0.0 {
            prop_assert!(rel(both, k * base) < 1e-12);
            prop_assert!(rel(slope, k * k * base) < 1e-12);
            prop_assert!(rel(split, base) < 1e-12);
        }
    }

    #[test]
    fn rf_rate_frequency_scalings(f_z in 0.5e6f64..8e6, f_rf in 20e6f64..200e6, k in 1.1f64..3.0) {
        let base = rf_noise_rate(&rf_input(1e-15, 1e-15, 1e15, f_z, f_rf)).unwrap();
        let drive = rf_noise_rate(&rf_input(1e-15, 1e-15, 1e15, f_z, k * f_rf)).unwrap();
        let axial = rf_noise_rate(&rf_input(1e-15, 1e-15, 1e15, k * f_z, f_rf)).unwrap();
        prop_assert!(rel(drive, base / k.powi(4)) < 1e-12);
        prop_assert!(rel(axial, base / k) < 1e-12);
    }

    #[test]
    fn anomalous_rate_scalings(s_e in 1e-16f64..1e-8, f in 0.5e6f64..10e6, k in 1.1f64..4.0) {
        let be = Species::beryllium9();
        let base = anomalous_rate(s_e, angular(f), be).unwrap();
        prop_assert!(rel(anomalous_rate(s_e, angular(k * f), be).unwrap(), base / k) < 1e-12);
        prop_assert!(rel(anomalous_rate(k * s_e, angular(f), be).unwrap(), k * base) < 1e-12);
        let charged = Species { charge: k * be.charge, mass: be.mass };
        prop_assert!(rel(anomalous_rate(s_e, angular(f), charged).unwrap(), k * k * base) < 1e-12);
        let heavy = Species { charge: be.charge, mass: k * be.mass };
        prop_assert!(rel(anomalous_rate(s_e, angular(f), heavy).unwrap(), base / k) < 1e-12);
    }

    #[test]
    fn quantize_is_idempotent_and_within_half_lsb(
        vals in prop::collection::vec(-12.0f64..12.0, 1..40),
        bits in 4u32..20,
    ) {
        let names = vec!["a".to_string()];
        let tw = TimedWaveform::new(names, vals.iter().map(|v| vec![*v]).collect(), 1e6).unwrap();
        let q = quantize(&tw, bits, 10.0);
        let qq = quantize(&q, bits, 10.0);
        prop_assert_eq!(&q.samples, &qq.samples);
        let lsb = dac_lsb(bits, 10.0);
        for (a, b) in vals.iter().zip(&q.samples) {
            let v = b[0];
            prop_assert!(v.abs() <= 10.0 + 1e-12);
            if a.abs() <= 10.0 {
                prop_assert!((v - a).abs() <= 0.5 * lsb + 1e-12);
            }
            prop_assert!(((v / lsb).round() * lsb - v).abs() < 1e-9 * lsb);
        }
    }

    #[test]
    fn bvls_respects_bounds_and_kkt(
        seed in prop::collection::vec(-1.0f64..1.0, 30),
        n in 1usize..5,
        half in 0.05f64..2.0,
    ) {
        let m = n + 2;
        let a = DMatrix::from_fn(m, n, |i, j| seed[(i * n + j) % seed.len()] + if i == j { 1.5 } else { 0.0 });
        let b = DVector::from_fn(m, |i, _| 3.0 * seed[(7 * i + 3) % seed.len()]);
        let lo = vec![-half; n];
        let hi = vec![half; n];
        let s = bvls(&a, &b, &lo, &hi, 1000).unwrap();
        let g = a.transpose() * (&a * &s.x - &b);
        for i in 0..n {
            let x = s.x[i];
            prop_assert!(x >= -half - 1e-12 && x <= half + 1e-12);
            let tol = 1e-8 * (1.0 + g.amax());
            if x > -half + 1e-9 && x < half - 1e-9 {
                prop_assert!(g[i].abs() <= tol, "free {} gradient {}", i, g[i]);
            } else if x <= -half + 1e-9 {
                prop_assert!(g[i] >= -tol);
            } else {
                prop_assert!(g[i] <= tol);
            }
        }
    }

    #[test]
    fn nullspace_moves_leave_residuals_unchanged(
        seed in prop::collection::vec(-1.0f64..1.0, 40),
        coef in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        // Three rows, six free columns: at least a three-dimensional kernel.
        let design = DMatrix::from_fn(3, 7, |i, j| seed[(i * 7 + j) % seed.len()]);
        let c2 = DVector::from_fn(3, |i, _| seed[(i + 21) % seed.len()]);
        let sys = ConstraintSystem::from_parts(design, c2).unwrap();
        let opts = SolverOptions { v_max: 1e6, alpha: f64::INFINITY, ..SolverOptions::default() };
        let s = solve(&sys, &opts, None).unwrap();
        let kernel = nullspace(&sys);
        prop_assert!(kernel.ncols() >= 3);
        let mut moved = DVector::from_column_slice(&s.v);
        for (c, k) in coef.iter().zip(kernel.column_iter()) {
            moved += k * *c;
        }
        let r0 = sys.row_residuals(&s.v);
        let r1 = sys.row_residuals(moved.as_slice());
        prop_assert!((r0 - r1).amax() < 1e-10);
        prop_assert_eq!(s.nullspace_dim, kernel.ncols());
    }

    #[test]
    fn discrete_filters_hold_dc(corner_khz in 20.0f64..500.0, order in 1usize..7, level in -10.0f64..10.0) {
        let spec = FilterSpec::butterworth(order, corner_khz * 1e3);
        let f = DigitalFilter::bilinear(&spec, 50e6).unwrap();
        prop_assert!(f.pole_radius() < 1.0);
        prop_assert!((f.dc_gain() - 1.0).abs() < 1e-12, "dc gain {}", f.dc_gain());
        let out = f.run(&vec![level; 50]);
        prop_assert!(out.iter().all(|y| (y - level).abs() < 1e-10 * (1.0 + level.abs())));
    }
}
