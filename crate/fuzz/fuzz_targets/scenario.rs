#![no_main]

use libfuzzer_sys::fuzz_target;
use stage_core::mission::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = Scenario::parse(text) {
        let json = serde_json::to_string(&s).expect("scenario serializes");
        assert_eq!(Scenario::parse(&json).expect("written scenario parses"), s);
    }
});
