mod common;

use proptest::prelude::*;

use ion_transport::constants::{angular, Species, TWO_PI};
use ion_transport::heating::{barrier_profile, transport_exposure};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{
    synth_junction_trap, Electrode, JunctionParams, RfDrive, ScalarField, SpatialGrid, TrapModel, Vec3,
};
use ion_transport::solver::SolverOptions;
use ion_transport::waveform::{
    build_waveform, time_rows, ConstraintTemplate, FrequencySchedule, TimingProfile, Trajectory,
};

fn both_arms(asymmetry: f64) -> TrapModel {
    let params = JunctionParams {
        asymmetry,
        ..JunctionParams::default()
    };
    synth_junction_trap(&params, &axis_grid(-300e-6, 300e-6, 5e-6).unwrap()).unwrap()
}

/// Largest q * phi_ps on each side of the junction, eV.
fn barrier_peaks(model: &TrapModel) -> (f64, f64) {
    let prof = barrier_profile(model, &Vec3::zeros(), &Vec3::z(), (-250e-6, 250e-6), 501).unwrap();
    let peak = |neg: bool| {
        prof.iter()
            .filter(|p| (p.s < 0.0) == neg)
            .map(|p| p.pseudo_ev)
            .fold(0.0, f64::max)
    };
    (peak(true), peak(false))
}

#[test]
fn junction_barrier_is_a_few_tenths_of_an_ev() {
    let (left, right) = barrier_peaks(&both_arms(0.0));
    assert!(left > 0.1 && left < 0.9, "{left}");
    assert!((left - right).abs() < 1e-3 * left, "{left} {right}");
}

#[test]
fn asymmetry_unbalances_the_barriers() {
    let (left, right) = barrier_peaks(&both_arms(0.1));
    assert!((left - right).abs() > 0.02 * left.max(right), "{left} {right}");
}

#[test]
fn far_arm_sits_four_orders_below_the_barrier() {
    let model = synth_junction_trap(&JunctionParams::default(), &axis_grid(-900e-6, 60e-6, 5e-6).unwrap()).unwrap();
    let prof = barrier_profile(&model, &Vec3::zeros(), &Vec3::z(), (-850e-6, -750e-6), 21).unwrap();
    let apex = model.pseudopotential(&Vec3::new(0.0, 0.0, -100e-6)).unwrap();
    for p in &prof {
        assert!(p.pseudo_ev < 1e-4, "{} at {}", p.pseudo_ev, p.s);
        assert!(p.pseudo_ev < 1e-3 * apex);
    }
}

#[test]
fn doubling_rf_amplitude_quadruples_pseudopotential() {
    let model = common::linear_trap();
    let d = model.drive();
    let twice = model
        .with_drive(RfDrive {
            amplitude: 2.0 * d.amplitude,
            omega: d.omega,
        })
        .unwrap();
    let slow = model
        .with_drive(RfDrive {
            amplitude: d.amplitude,
            omega: 2.0 * d.omega,
        })
        .unwrap();
    for r in [Vec3::new(1e-6, 0.5e-6, -30e-6), Vec3::new(-2e-6, 1e-6, 90e-6)] {
        let p = model.pseudopotential(&r).unwrap();
        assert!((twice.pseudopotential(&r).unwrap() / p - 4.0).abs() < 1e-12);
        assert!((slow.pseudopotential(&r).unwrap() / p - 0.25).abs() < 1e-12);
    }
}

#[test]
fn three_dimensional_quadrupole_has_two_to_one_modes() {
    // Field null with curvatures (1, 1, -2) in (x, z, y), as at the centre of
    // an X junction.
    let grid = SpatialGrid::covering(Vec3::new(-20e-6, -20e-6, -20e-6), Vec3::new(20e-6, 20e-6, 20e-6), 5e-6).unwrap();
    let k = 2e8;
    let ground = Electrode {
        name: "g".into(),
        field: ScalarField::zeros(grid.clone()),
    };
    let rf = ScalarField::from_fn(grid, |r| 0.5 * k * (r.x * r.x + r.z * r.z - 2.0 * r.y * r.y)).unwrap();
    let drive = RfDrive {
        amplitude: 200.0,
        omega: angular(83e6),
    };
    let model = TrapModel::new(vec![ground], rf, drive, Species::beryllium9()).unwrap();
    let modes = model.modes_at(&[0.0], &Vec3::zeros()).unwrap();
    let mut f = modes.frequencies;
    f.sort_by(f64::total_cmp);
    assert!((f[1] / f[0] - 1.0).abs() < 1e-9, "{f:?}");
    assert!((f[2] / f[1] - 2.0).abs() < 1e-9, "{f:?}");
    assert!(f[0] / TWO_PI > 1e5);
}

#[test]
fn junction_approach_rails_voltages_but_holds_position() {
    let model = common::junction_trap();
    let schedule = FrequencySchedule::piecewise(vec![
        (0.0, angular(3.6e6)),
        (200e-6, angular(3.6e6)),
        (300e-6, angular(2.5e6)),
        (400e-6, angular(7e6)),
    ])
    .unwrap();
    let opts = SolverOptions {
        alpha: 1.0,
        ..SolverOptions::default()
    };
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -400e-6), Vec3::zeros(), 5e-6).unwrap();
    let w = build_waveform(&model, &path, &schedule, &ConstraintTemplate::default(), &opts).unwrap();
    let railed: Vec<usize> = (0..w.len())
        .filter(|&k| w.steps[k].iter().any(|v| v.abs() >= opts.v_max - 1e-9))
        .collect();
    assert!(!railed.is_empty());
    // Rails are hit on the barrier, 100 um before the junction centre, not on the open arm.
    assert!(railed.iter().all(|&k| w.positions[k].z > -200e-6), "{railed:?}");
    for k in 0..w.len() {
        assert!(w.position_residuals[k] <= opts.residual_tol, "step {k}: {}", w.position_residuals[k]);
    }
}

#[test]
fn hold_at_forty_quanta_per_second_for_350_us() {
    let model = common::linear_trap();
    let rate = 480e3;
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -50e-6), Vec3::new(0.0, 0.0, 50e-6), 5e-6)
        .unwrap()
        .retimed(&TimingProfile::sinusoidal(350e-6), rate)
        .unwrap();
    let omega = angular(3.6e6);
    let w = build_waveform(
        &model,
        &path,
        &FrequencySchedule::constant(omega),
        &ConstraintTemplate::default(),
        &SolverOptions::default(),
    )
    .unwrap();
    let tw = time_rows(&w, rate).unwrap();
    let quanta = transport_exposure(&model, &tw, 0.0, 0.0, omega, 40.0).unwrap();
    assert!((quanta - 40.0 * tw.duration()).abs() < 1e-12);
    assert!((quanta - 0.014).abs() < 0.001, "{quanta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_potential_is_affine_in_voltages(
        a in prop::collection::vec(-10.0f64..10.0, 20),
        b in prop::collection::vec(-10.0f64..10.0, 20),
        z in -180e-6f64..180e-6,
        x in -3e-6f64..3e-6,
    ) {
        let model = common::linear_trap();
        let r = Vec3::new(x, 0.5 * x, z);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let s = |v: &[f64]| model.total_potential(v, &r).unwrap();
        let (sa, sb, sab, s0) = (s(&a), s(&b), s(&sum), s(&[0.0; 20]));
        let scale = sa.value.abs() + sb.value.abs() + 1.0;
        prop_assert!((sab.value - sa.value - sb.value + s0.value).abs() < 1e-12 * scale);
        let g = sab.gradient - sa.gradient - sb.gradient + s0.gradient;
        prop_assert!(g.norm() < 1e-12 * (sa.gradient.norm() + sb.gradient.norm() + 1.0));
        let h = sab.hessian - sa.hessian - sb.hessian + s0.hessian;
        prop_assert!(h.amax() < 1e-12 * (sa.hessian.amax() + sb.hessian.amax() + 1.0));
    }
}

/// Harmonic basis of the quadratic test trap, evaluated in a frame rotated by
/// `angle` about y.
fn rotated_harmonic(angle: f64) -> TrapModel {
    use ion_transport::potential::synth::quadrupole_k_for;
    let grid = SpatialGrid::covering(Vec3::new(-20e-6, -20e-6, -20e-6), Vec3::new(20e-6, 20e-6, 20e-6), 5e-6).unwrap();
    let (c, s) = (angle.cos(), angle.sin());
    // Body coordinates of a lab point.
    let body = move |r: &Vec3| Vec3::new(c * r.x - s * r.z, r.y, s * r.x + c * r.z);
    let l = 100e-6;
    let basis: [Box<dyn Fn(&Vec3) -> f64>; 4] = [
        Box::new(move |r| body(r).x / l),
        Box::new(move |r| body(r).y / l),
        Box::new(move |r| body(r).z / l),
        Box::new(move |r| {
            let b = body(r);
            (b.z * b.z - 0.5 * (b.x * b.x + b.y * b.y)) / (l * l)
        }),
    ];
    let electrodes = basis
        .iter()
        .enumerate()
        .map(|(i, f)| Electrode {
            name: format!("h{i}"),
            field: ScalarField::from_fn(grid.clone(), f).unwrap(),
        })
        .collect();
    let drive = RfDrive {
        amplitude: 200.0,
        omega: angular(83e6),
    };
    let sp = Species::beryllium9();
    let k = quadrupole_k_for(angular(10e6), drive, sp);
    let rf = ScalarField::from_fn(grid, |r| {
        let b = body(r);
        0.5 * k * (b.x * b.x - b.y * b.y)
    })
    .unwrap();
    TrapModel::new(electrodes, rf, drive, sp).unwrap()
}

#[test]
fn rotated_well_and_rotated_frame_give_the_same_voltages() {
    use ion_transport::solver::{assemble, solve, ConstraintSpec};
    let angle = std::f64::consts::FRAC_PI_4;
    let (c, s) = (angle.cos(), angle.sin());
    // Lab image of a body vector.
    let lab = |b: Vec3| Vec3::new(c * b.x + s * b.z, b.y, -s * b.x + c * b.z);
    let r0 = Vec3::new(1e-6, -0.5e-6, 2e-6);
    let omega = angular(2.5e6);
    // The axial quadratic softens both radial directions by half its curvature.
    let radial = (angular(10e6).powi(2) - 0.5 * omega * omega).sqrt();
    let opts = SolverOptions::default();

    let plain = rotated_harmonic(0.0);
    let spec = ConstraintSpec::along_axis(r0, &Vec3::z(), omega).with_all_rows([radial, radial, omega]);
    let want = solve(&assemble(&spec, &plain).unwrap(), &opts, None).unwrap();

    let turned = rotated_harmonic(angle);
    let spec = ConstraintSpec::along_axis(lab(r0), &lab(Vec3::z()), omega)
        .with_all_rows([radial, radial, omega]);
    let got = solve(&assemble(&spec, &turned).unwrap(), &opts, None).unwrap();

    assert!(want.residual < 1e-9 && got.residual < 1e-9, "{} {}", want.residual, got.residual);
    for (a, b) in want.v.iter().zip(&got.v) {
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{:?} vs {:?}", want.v, got.v);
    }
}
