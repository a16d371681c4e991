#![no_main]

use libfuzzer_sys::fuzz_target;
use survmdn::mdn::TrainedModel;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(model) = TrainedModel::from_json(s) {
        let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), model.to_json().unwrap());
    }
});
