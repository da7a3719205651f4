//! Write the shipped scripts as JSON files.
//!
//! cargo run --example export_scripts -- crates/core/scripts

use gatecap::protocol::library;

fn main() -> gatecap::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "scripts".into());
    std::fs::create_dir_all(&dir)?;
    for script in library::shipped_scripts()? {
        let path = std::path::Path::new(&dir).join(format!("{}.json", script.name()));
        script.save(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
