//! The snapshot decoder must reject arbitrary bytes with a structured error,
//! never a panic. Inputs it accepts must re-encode to the identical byte
//! string: the format has no slack bytes or tolerated padding.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sqg_core::snapshot::{encode_physical, encode_spectral, read_snapshot_bytes, Snapshot};

fuzz_target!(|data: &[u8]| {
    if let Ok(snap) = read_snapshot_bytes(data) {
        let reencoded = match &snap {
            Snapshot::Physical(f) => encode_physical(f),
            Snapshot::Spectral(f) => encode_spectral(f),
        };
        assert_eq!(
            reencoded.as_slice(),
            data,
            "decode/encode round trip must be bit-exact"
        );
    }
});
