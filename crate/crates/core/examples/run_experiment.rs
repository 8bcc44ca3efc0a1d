//! Run a harness experiment from a JSON configuration.
//!
//! cargo run --release --example run_experiment -- zeta_convergence /tmp/critgraph-zeta

use critgraph::harness::{run_experiment, ExperimentConfig};

fn main() -> critgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "zeta_convergence".into());
    let out = args.next().unwrap_or_else(|| format!("target/experiments/{name}"));
    let text = format!(r#"{{ "experiment": "{name}", "seed": 2024, "out": "{out}" }}"#);
    let cfg = ExperimentConfig::from_json(&text)?;
    let report = run_experiment(&cfg)?;
    for line in report.criterion_lines() {
        println!("{line}");
    }
    for d in &report.diagnostics {
        println!("  diagnostic {}: {}", d.name, if d.passed { "ok" } else { "off" });
    }
    println!("wrote {out}/report.json and {:?} in {:.1}s", report.sample_files, report.runtime_secs);
    Ok(())
}
