#![no_main]

use libfuzzer_sys::fuzz_target;
use survmdn::training::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = RunConfig::from_json(s);
});
