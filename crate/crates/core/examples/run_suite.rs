//! Runs a suite through the experiment runner, as `hnlab` does, and checks
//! the manifest digests against the files on disk.
//!
//!     cargo run --release --example run_suite [out_dir]

use hatano_nelson::runner::{run, Command, ExperimentConfig};

fn main() -> hatano_nelson::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "hnlab-example".into());
    let text = format!(
        r#"
command = "bands"
n = 20
seed = 9
out_dir = "{out}"

[potential.distribution]
kind = "bernoulli"
w = 1.0
"#
    );
    let cfg = ExperimentConfig::from_toml_str(&text, Some(Command::Bands))?;
    let manifest = run(&cfg)?;
    for f in &manifest.files {
        println!("{:<16} {} {} bytes", f.path, &f.sha256[..16], f.bytes);
    }
    println!("digest mismatches: {:?}", manifest.mismatches(&cfg.resolved_out_dir()));
    Ok(())
}
