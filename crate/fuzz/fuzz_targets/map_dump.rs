#![no_main]

use libfuzzer_sys::fuzz_target;
use stage_core::voxel_map::{parse_map_dump, write_map_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_map_dump(text) {
        let out = write_map_dump(&m);
        let again = parse_map_dump(&out).expect("written dump parses");
        assert_eq!(write_map_dump(&again), out);
    }
});
