use std::f64::consts::PI;

use super::setup::Settings;
use super::table::{num, Table};
use crate::constants::{angular, TWO_PI};
use crate::dynamics::{
    dac_resonance_scan, exchange_cooling_protocol, exchange_curve, locate_resonance, simulate_transport,
    DacScanConfig, ExchangeConfig, IonState, ShimMap,
};
use crate::error::{Error, Result};
use crate::filter::{filter_waveform, frequency_response};
use crate::heating::{anomalous_rate, barrier_profile, rate_profile, rf_noise_report};
use crate::potential::{save_model, Vec3};
use crate::waveform::io::{read_timed, write_timed, write_waveform};
use crate::waveform::quantize;

pub fn synth(s: &Settings) -> Result<()> {
    let model = s.model()?;
    let manifest = save_model(&model, s.path("trap"))?;
    let (lo, hi) = model.grid().interior_bounds();
    let n = s.usize_or("synth.points", 201)?.max(2);
    let mut t = Table::new("axis_pseudopotential", &["z_um", "pseudo_eV"]);
    for i in 0..n {
        let z = lo.z + (hi.z - lo.z) * i as f64 / (n - 1) as f64;
        t.nums(&[z * 1e6, model.pseudopotential(&Vec3::new(0.0, 0.0, z))?]);
    }
    t.write(&s.path("axis.csv"))?;
    println!("{} electrodes, manifest {}", model.n_electrodes(), manifest.display());
    Ok(())
}

pub fn build(s: &Settings) -> Result<()> {
    let model = s.model()?;
    if s.kv.raw("waveform").is_some() {
        return Err(Error::invalid("build solves a waveform; `waveform` is not accepted here"));
    }
    let w = s.waveform(&model)?;
    write_waveform(&w, s.path("waveform.csv"))?;
    let mut t = Table::new(
        "build_steps",
        &[
            "step",
            "x_um",
            "y_um",
            "z_um",
            "target_hz",
            "achieved_hz",
            "residual",
            "position_residual_v_per_m",
            "saturated",
            "prioritized",
            "off_target",
        ],
    );
    for i in 0..w.len() {
        let p = w.positions[i] * 1e6;
        let f = w.flags[i];
        t.row(vec![
            i.to_string(),
            num(p.x),
            num(p.y),
            num(p.z),
            num(w.target_omega[i] / TWO_PI),
            num(w.achieved_omega[i] / TWO_PI),
            num(w.residuals[i]),
            num(w.position_residuals[i]),
            f.saturated.to_string(),
            f.prioritized.to_string(),
            f.off_target.to_string(),
        ]);
    }
    t.write(&s.path("frequencies.csv"))?;
    let off = w.flags.iter().filter(|f| f.off_target).count();
    println!("{} steps, {off} off target, largest step change {:.4} V", w.len(), w.max_step_change());
    Ok(())
}

pub fn filter(s: &Settings) -> Result<()> {
    let spec = s
        .filter("butterworth")?
        .ok_or_else(|| Error::invalid("filter.kind = none leaves nothing to do"))?;
    let lo = s.f64_or("filter.f_min_hz", 1e3)?;
    let hi = s.f64_or("filter.f_max_hz", 1e7)?;
    let n = s.usize_or("filter.points", 201)?.max(2);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("need 0 < filter.f_min_hz < filter.f_max_hz"));
    }
    let freqs: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let mut t = Table::new("filter_response", &["f_hz", "mag", "mag_db", "phase_rad"]);
    for p in frequency_response(&spec, &freqs) {
        t.nums(&[p.f_hz, p.mag, p.mag_db, p.phase]);
    }
    t.write(&s.path("response.csv"))?;
    if let Some(input) = s.kv.raw("filter.input") {
        let tw = read_timed(input)?;
        let out = filter_waveform(&spec, &tw, s.usize_or("filter.oversample", 64)?)?;
        write_timed(&out, s.path("filtered.csv"))?;
        println!("filtered {} samples into {}", tw.len(), out.len());
    }
    println!("corner {:.1} Hz", spec.corner()? / TWO_PI);
    Ok(())
}

pub fn simulate(s: &Settings) -> Result<()> {
    let model = s.model()?;
    let w = s.waveform(&model)?;
    let hold = s.usize_or("timing.hold_samples", 0)?;
    let mut tw = s.timed(&w)?.hold(hold);
    if s.bool_or("round_trip", false)? {
        tw = tw.concat(&s.timed(&w.reversed())?.hold(hold))?;
    }
    let bits = s.usize_or("dac.bits", 16)?;
    if bits > 0 {
        tw = quantize(&tw, bits as u32, s.f64_or("dac.range_v", 10.0)?);
    }
    let mut cfg = s.sim_config()?;
    if let Some(spec) = s.filter("none")? {
        tw = filter_waveform(&spec, &tw, s.usize_or("filter.oversample", 64)?)?;
        cfg.noise.dac_staircase = s.bool_or("noise.staircase", false)?;
    }
    let initial = match s.usize_or("ions", 1)? {
        1 => IonState::single_at_minimum(&model, &w.steps[0], &w.positions[0])?,
        2 => IonState::pair_at_equilibrium(&model, &w.steps[0], &w.positions[0], &w.axes[0])?,
        n => return Err(Error::invalid(format!("ions = {n}: one or two ions are supported"))),
    };
    let res = simulate_transport(&model, &tw, &initial, &cfg)?;
    let mut t = Table::new("excitation", &["mode", "omega_rad_s", "nbar"]);
    for m in &res.modes {
        t.row(vec![m.label.clone(), num(m.omega), num(m.nbar)]);
    }
    t.write(&s.path("result.csv"))?;
    if !res.trajectory.is_empty() {
        for ion in 0..initial.n_ions() {
            let mut tr = Table::new("trajectory", &["t", "x", "y", "z", "vx", "vy", "vz"]);
            for p in &res.trajectory {
                let (r, v) = (p.positions[ion], p.velocities[ion]);
                tr.nums(&[p.t, r.x, r.y, r.z, v.x, v.y, v.z]);
            }
            tr.write(&s.path(&format!("trajectory_ion{ion}.csv")))?;
        }
    }
    let ax = res.axial();
    println!(
        "{} samples, {:.2} us simulated; axial {} gained {:.4} quanta",
        tw.len(),
        res.duration * 1e6,
        ax.label,
        ax.nbar - ax.initial_nbar
    );
    Ok(())
}

pub fn heat(s: &Settings) -> Result<()> {
    let model = s.model()?;
    let omega_z = angular(s.f64_or("freq_mhz", 3.6)? * 1e6);
    // Default to the whole axis the model samples.
    let (lo, hi) = model.grid().interior_bounds();
    let from = s.f64_or("heat.from_um", (lo.z * 1e6).ceil())? * 1e-6;
    let to = s.f64_or("heat.to_um", (hi.z * 1e6).floor())? * 1e-6;
    let n = s.usize_or("heat.points", 301)?;
    let scale = s.f64_or("heat.scale", 1.0)?;
    let prof = barrier_profile(&model, &Vec3::zeros(), &Vec3::z(), (from, to), n)?;
    let mut b = Table::new("barrier", &["z_um", "pseudo_eV"]);
    for p in &prof {
        b.nums(&[p.s * 1e6, p.pseudo_ev]);
    }
    b.write(&s.path("barrier.csv"))?;
    let mut h = Table::new("heating_profile", &["z_um", "nz_rate_per_SV"]);
    let rates = rate_profile(&model, &prof, omega_z, scale)?;
    for (z, r) in &rates {
        h.nums(&[z * 1e6, *r]);
    }
    h.write(&s.path("heating.csv"))?;

    let mut rep = Table::new("heating_report", &["source", "z_um", "omega_z_rad_s", "rate_per_s"]);
    let s_v = s.f64_or("noise.s_v", 0.0)?;
    let at = s.point_um("heat.at_um")?;
    if let Some(r) = at {
        let hr = rf_noise_report(&model, &r, 0.5 * s_v, 0.5 * s_v, omega_z)?;
        rep.row(vec!["rf_noise".into(), num(r.z * 1e6), num(omega_z), num(scale * hr.rate)]);
    }
    let s_e = s.f64_or("noise.s_e", 0.0)?;
    if s_e > 0.0 {
        let z = at.map_or(String::new(), |r| num(r.z * 1e6));
        rep.row(vec!["anomalous".into(), z, num(omega_z), num(anomalous_rate(s_e, omega_z, model.species())?)]);
    }
    rep.write(&s.path("report.csv"))?;
    let peak = rates.iter().fold((0.0, 0.0), |m, r| if r.1 > m.1 { *r } else { m });
    println!("peak rate {:.3e} per V^2/Hz at z = {:.1} um", peak.1, peak.0 * 1e6);
    Ok(())
}

pub fn exchange(s: &Settings) -> Result<()> {
    let dw = TWO_PI * s.f64_or("exchange.delta_khz", 20.0)? * 1e3;
    let cfg = ExchangeConfig {
        delta_omega: dw,
        theta: s.f64_or("exchange.theta_deg", 45.0)?.to_radians(),
        n_x: s.f64_or("exchange.n_x", 0.68)?,
        n_z: s.f64_or("exchange.n_z", 0.0)?,
        phase_offset: s.f64_or("exchange.phase_offset", 0.0)?,
        wait: 0.0,
    };
    cfg.validate()?;
    let default_max = if dw != 0.0 { 4.0 * PI / dw.abs() * 1e6 } else { 100.0 };
    let t_max = s.f64_or("exchange.wait_max_us", default_max)? * 1e-6;
    let n = s.usize_or("exchange.points", 201)?.max(2);
    let waits: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
    let mut t = Table::new("exchange_curve", &["wait_us", "phase_rad", "nz"]);
    for (w, nz) in exchange_curve(&cfg, &waits)? {
        t.nums(&[w * 1e6, ExchangeConfig { wait: w, ..cfg }.phase(), nz]);
    }
    t.write(&s.path("exchange.csv"))?;

    let rounds = s.usize_or("exchange.rounds", 2)?;
    let swap = s.f64_or("exchange.swap", 1.0)?;
    let mut p = Table::new("exchange_protocol", &["round", "n_x", "max_nz", "contrast"]);
    for (k, r) in exchange_cooling_protocol(&cfg, rounds, swap)?.iter().enumerate() {
        p.row(vec![(k + 1).to_string(), num(r.n_x), num(r.max_nz), num(r.contrast)]);
    }
    p.write(&s.path("protocol.csv"))?;

    if let Some(a_values) = s.kv.list("exchange.shim_a")? {
        let map = ShimMap {
            offset: TWO_PI * s.f64_or("exchange.shim_offset_khz", 0.0)? * 1e3,
            slope: TWO_PI * s.f64_or("exchange.shim_slope_khz", 1.0)? * 1e3,
        };
        let contrast = (2.0 * cfg.theta).sin().powi(2) * (cfg.n_x - cfg.n_z).abs();
        let mut m = Table::new("exchange_shim", &["a", "delta_omega_rad_s", "beat_hz", "contrast"]);
        for a in a_values {
            let d = map.delta_omega(a);
            m.nums(&[a, d, d.abs() / TWO_PI, contrast]);
        }
        m.write(&s.path("shim.csv"))?;
    }
    println!("beat period {:.3} us over {n} waits", TWO_PI / dw.abs() * 1e6);
    Ok(())
}

pub fn scan(s: &Settings) -> Result<()> {
    let model = s.model()?;
    let w = s.waveform(&model)?;
    let omega = angular(s.f64_or("freq_mhz", 3.6)? * 1e6);
    let cfg = DacScanConfig {
        sim: s.sim_config()?,
        filter: s.filter("none")?,
        oversample: s.usize_or("filter.oversample", 64)?,
    };
    if let Some(js) = s.kv.list("scan.j")? {
        let span = s.f64_or("scan.span", 1.5)?;
        let points = s.usize_or("scan.points", 31)?;
        let mut res = Table::new(
            "dac_resonances",
            &["j", "predicted_hz", "peak_hz", "peak_nbar", "fwhm_hz", "on_prediction"],
        );
        let mut pts = Table::new("dac_resonance_points", &["j", "rate_hz", "nbar"]);
        for j in js {
            if !(j >= 1.0 && j.fract() == 0.0) {
                return Err(Error::invalid(format!("scan.j entry {j} is not a positive integer")));
            }
            let r = locate_resonance(&model, &w, omega, j as u32, span, points, &cfg)?;
            res.row(vec![
                r.j.to_string(),
                num(r.predicted),
                num(r.peak_rate),
                num(r.peak_nbar),
                r.fwhm.map_or(String::new(), num),
                r.on_prediction().to_string(),
            ]);
            for p in &r.points {
                pts.row(vec![r.j.to_string(), num(p.rate), num(p.nbar)]);
            }
            println!("J = {}: peak {:.1} Hz (predicted {:.1} Hz)", r.j, r.peak_rate, r.predicted);
        }
        res.write(&s.path("resonances.csv"))?;
        pts.write(&s.path("resonance_points.csv"))?;
        return Ok(());
    }
    let lo = s.f64_or("scan.rate_min_khz", 250.0)? * 1e3;
    let hi = s.f64_or("scan.rate_max_khz", 460.0)? * 1e3;
    let n = s.usize_or("scan.points", 101)?.max(2);
    let rates: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut t = Table::new("dac_scan", &["rate_hz", "nbar"]);
    for p in dac_resonance_scan(&model, &w, &rates, &cfg)? {
        t.nums(&[p.rate, p.nbar]);
    }
    t.write(&s.path("scan.csv"))?;
    println!("{n} rates from {lo:.0} to {hi:.0} Hz");
    Ok(())
}
