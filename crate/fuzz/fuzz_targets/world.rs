#![no_main]

use libfuzzer_sys::fuzz_target;
use stage_core::world_sim::{parse_world, write_world};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(w) = parse_world(text) {
        let again = parse_world(&write_world(&w)).expect("written world parses");
        assert_eq!(again, w);
    }
});
