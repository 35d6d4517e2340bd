//! Drives the `ladder` runner from code: a parity run with a custom config,
//! written as JSON into a scratch directory.
use floquet_ladder::cli::{self, RunConfig};

fn main() {
    let mut cfg = RunConfig::default_for(cli::Command::Parity);
    if let Some(d) = cfg.drive.as_mut() {
        d.eta += 0.1;
    }
    let dir = std::env::temp_dir().join("ladder-example");
    let path = dir.join("parity.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();

    let out = dir.join("out");
    let code = cli::main_with_args(["ladder", "parity", "--format", "json", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    println!("exit code {code}");
    println!("{}", std::fs::read_to_string(out.join("manifest.json")).unwrap());
}
