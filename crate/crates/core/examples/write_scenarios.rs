//! Regenerates the shipped scenario files:
//! `cargo run --example write_scenarios -- scenarios`

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "scenarios".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, cfg) in ldtl_shield::scenarios::builtin() {
        let path = dir.join(format!("{name}.toml"));
        std::fs::write(&path, cfg.to_toml_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
