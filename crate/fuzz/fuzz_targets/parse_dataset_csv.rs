#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = survmdn::data::parse_csv(data, "time", "event", "fuzz") {
        for r in &ds.records {
            assert!(r.time > 0.0 && r.time.is_finite());
        }
    }
});
