//! Compare the RC pair with its third-order Butterworth replacement.

use ion_transport::filter::{frequency_response, FilterSpec};

fn main() {
    let rc = FilterSpec::rc_pair();
    let bw = FilterSpec::butterworth_replacement();
    let freqs: Vec<f64> = (0..=12).map(|i| 10e3 * 2f64.powf(i as f64 * 0.75)).collect();
    let a = frequency_response(&rc, &freqs);
    let b = frequency_response(&bw, &freqs);
    println!("{:>12} {:>10} {:>12}", "f_kHz", "RC_dB", "Butter_dB");
    for (x, y) in a.iter().zip(&b) {
        println!("{:12.1} {:10.2} {:12.2}", x.f_hz / 1e3, x.mag_db, y.mag_db);
    }
}
