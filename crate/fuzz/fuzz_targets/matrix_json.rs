#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = fano_qpt::io::parse_matrix_json(text) {
            let back = fano_qpt::io::parse_matrix_json(&fano_qpt::io::matrix_to_json(&m)).unwrap();
            assert_eq!(back.shape(), m.shape());
        }
    }
});
