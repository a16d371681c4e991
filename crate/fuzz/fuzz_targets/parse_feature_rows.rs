#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((names, rows)) = survmdn::data::parse_feature_rows(data) {
        assert!(rows.iter().all(|r| r.len() == names.len()));
    }
});
