//! Energy exchange between radial and axial modes, and the repeated
//! exchange-and-recool protocol.

use ion_transport::constants::TWO_PI;
use ion_transport::dynamics::{exchange_cooling_protocol, exchange_curve, ExchangeConfig};

fn main() -> ion_transport::Result<()> {
    let cfg = ExchangeConfig {
        delta_omega: TWO_PI * 20e3,
        n_x: 0.68,
        ..ExchangeConfig::default()
    };
    let waits: Vec<f64> = (0..=20).map(|i| i as f64 * 5e-6).collect();
    for (wait, (_, nz)) in waits.iter().zip(exchange_curve(&cfg, &waits)?) {
        println!("{:6.1} us  n_z {:.3}", wait * 1e6, nz);
    }
    for (k, round) in exchange_cooling_protocol(&cfg, 3, 0.41)?.iter().enumerate() {
        println!("round {}: n_x {:.3}, contrast {:.3}", k + 1, round.n_x, round.contrast);
    }
    Ok(())
}
