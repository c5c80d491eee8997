//! Config-driven runs: parse a TOML experiment, execute it and write
//! report.json, series.csv and manifest.json.

use ergochain::runner::{run_config, ExperimentConfig};

const CONFIG: &str = r#"
seed = 42

[kernel]
builtin = "DYADIC"

[diagnostic]
name = "estimate_condition_E"

[diagnostic.params]
x = 0.0
z = 0.5
delta = 0.1
n = 10000
m = 100
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let dir = std::env::temp_dir().join("ergochain-example");
    let outcome = run_config(&cfg, &dir)?;
    println!("{} -> exit {}", outcome.report.verdict, outcome.exit_code());
    println!("wrote {}", dir.display());
    Ok(())
}
