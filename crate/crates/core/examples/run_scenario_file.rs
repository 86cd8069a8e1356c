//! Programmatic equivalent of `peakload run <file> --counterfactual`:
//! solve, verify and write the CSV and JSON artifacts.

use peakload::cli::{run, RunConfig, Selection};

fn main() -> peakload::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper_table1.json").into());
    let mut config = RunConfig::new(path);
    config.selection = Selection::WithCounterfactual;
    config.output_dir = std::env::temp_dir().join("peakload-example");
    let outcome = run(&config)?;
    print!("{}", outcome.render()?);
    std::process::exit(outcome.exit_code());
}
