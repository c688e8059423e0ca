//! Rewrites `fixtures/` from the built-in catalog and refreshes its goldens.

use batchopt::fixtures::{catalog, fixtures_dir, regenerate_goldens, write_inputs, write_pair_fixtures, GoldenMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = fixtures_dir();
    write_inputs(&root, &catalog())?;
    write_pair_fixtures(&root)?;
    let report = regenerate_goldens(&root, GoldenMode::Write)?;
    println!("{} golden files checked, {} rewritten", report.checked, report.written.len());
    Ok(())
}
