//! Regenerates the synthetic fixture shipped in `fixtures/`.
//!
//! ```text
//! cargo run --example generate_fixture [-- <dir>]
//! ```

#[path = "../tests/common/synthetic.rs"]
mod synthetic;

use std::path::PathBuf;

pub const SEED: u64 = 20240601;
pub const DAYS: usize = 800;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    synthetic::write_fixture(&dir, SEED, DAYS)?;
    println!("fixture written to {}", dir.display());
    Ok(())
}
