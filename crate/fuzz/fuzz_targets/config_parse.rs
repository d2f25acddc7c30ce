//! The strict config parser must turn arbitrary text into either a validated
//! RunConfig or a structured error, never a panic. Accepted configs must hash
//! deterministically and render a canonical string that re-parses to the same
//! hash under TOML quoting of the same values.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sqg_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        assert_eq!(config.config_hash.len(), 64, "hash must be sha256 hex");
        let again = parse_config(text).expect("accepted text must parse again");
        assert_eq!(
            config.config_hash, again.config_hash,
            "hashing must be deterministic"
        );
        assert_eq!(
            config.canonical_string(),
            again.canonical_string(),
            "canonical rendering must be deterministic"
        );
    }
});
