//! Loads a TOML configuration. Keys that are left out take their defaults,
//! and inconsistent values are reported as configuration errors.
//!
//! ```bash
//! cargo run --example config_file
//! ```

use stin::scenario::parse_config;

fn main() {
    let text = "M1 = 4\nM2 = 4\nKs = 4\nKt = 3\nKt_int = 1\nsnr_db = 20.0\ntau_p = 4.0\n";
    match parse_config(text, "inline") {
        Ok(cfg) => println!(
            "M = {}, N = {}, Ks = {}, Kt = {}, Ps = {:.1}, Pt = {:.1}",
            cfg.m(),
            cfg.n(),
            cfg.ks,
            cfg.kt,
            cfg.ps(),
            cfg.pt()
        ),
        Err(e) => println!("unexpected error: {e}"),
    }
    for bad in ["Kt = 2\nKt_int = 3\n", "tau_p = -1.0\n", "antennas = 9\n"] {
        match parse_config(bad, "inline") {
            Ok(_) => println!("{bad:?} accepted"),
            Err(e) => println!("{:?} rejected (config error: {}): {e}", bad, e.is_config()),
        }
    }
}
