#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(tables) = fano_qpt::io::parse_shot_tables_jsonl(text) {
            // Larger inputs only repeat the same code path at a much higher cost.
            if let Some(n) = tables.first().map(|t| t.setting.n()).filter(|&n| n <= 3) {
                let _ = fano_qpt::measurement::reconstruct_from_tables(n, &tables);
            }
        }
    }
});
