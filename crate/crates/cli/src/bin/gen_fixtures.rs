//! Writes the shipped fixture worlds and scenarios into a directory.

use std::path::PathBuf;

use stage_core::fixtures;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, text) in fixtures::shipped() {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}
