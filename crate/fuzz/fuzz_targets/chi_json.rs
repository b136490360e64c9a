#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rec) = fano_qpt::io::parse_chi_json(text) {
            let _ = fano_qpt::io::chi_to_csv(&rec.process);
            if rec.process.n() <= 2 {
                let _ = fano_qpt::analysis::analyze(&rec.process, 1e-6);
            }
        }
    }
});
