#![no_main]

use libfuzzer_sys::fuzz_target;
use stage_core::traversability::{parse_grid_dump, write_grid_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = parse_grid_dump(text) {
        let again = parse_grid_dump(&write_grid_dump(&g)).expect("written dump parses");
        assert_eq!(again, g);
    }
});
