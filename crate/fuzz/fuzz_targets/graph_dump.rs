#![no_main]

use libfuzzer_sys::fuzz_target;
use stage_core::nav_graph::{parse_graph_dump, write_graph_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = parse_graph_dump(text) {
        let out = write_graph_dump(&d.to_global());
        assert_eq!(parse_graph_dump(&out).expect("written dump parses"), d);
    }
});
