#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = fano_qpt::io::parse_fano_json(text) {
            // Reaching the matrix form must not panic for any accepted vector.
            let _ = fano_qpt::pauli::fano_to_density(&v);
        }
    }
});
