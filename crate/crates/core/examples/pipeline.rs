//! Every stage of the engine on the shipped fixture, as the `all` verb of
//! the command-line tool would run it.
//!
//! Usage: `cargo run --example pipeline [-- <out dir>]`

use std::path::PathBuf;

use ivrvsri::io::{run_pipeline, EngineConfig, RunOptions, Stage};

fn main() {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ivrvsri.toml");
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ivrvsri_out"));
    let result = EngineConfig::load(&config).and_then(|cfg| {
        let opts = RunOptions { svg: true, out_dir: Some(out), ..RunOptions::default() };
        run_pipeline(&cfg, Stage::All, &opts)
    });
    match result {
        Ok(summary) => {
            println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
            for f in &summary.files {
                println!("  {f}");
            }
            if let Some(m) = summary.manifest {
                println!("{} input files digested; {} designs logged dropped rows", m.inputs.len(), m.dropped_rows.len());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
