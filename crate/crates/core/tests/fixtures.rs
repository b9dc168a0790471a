use std::path::PathBuf;

use stage_core::fixtures::shipped;

#[test]
fn checked_in_fixtures_match_generators() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (name, text) in shipped() {
        let on_disk = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(
            on_disk == text,
            "{name} is stale; regenerate with gen-fixtures"
        );
    }
}
