// Run an experiment from JSON text and write its trace, plot data and report.

use opsplit::experiments::{parse_config, run_to_dir, summarize};
use opsplit::{Error, Result};

pub fn run_example() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("opsplit-config-example-{}", std::process::id()));
    let text = format!(
        r#"{{
            "problem": "lasso", "algorithm": "prs", "gamma": 0.7,
            "schedule": {{"constant": 0.8}}, "z0": {{"seed": 5, "scale": 2.0}},
            "iters": 300, "rows": 10, "cols": 5, "rho": 0.2, "seed": 8,
            "output": "{}"
        }}"#,
        dir.join("lasso").display()
    );
    let cfg = parse_config(&text)?;
    let (outcome, out_dir) = run_to_dir(&cfg)?;
    println!("{} rows written to {}", outcome.rows.len(), out_dir.display());
    let (summary, pass) = summarize(&dir)?;
    print!("{summary}");
    std::fs::remove_dir_all(&dir)?;
    if !pass {
        return Err(Error::InvalidArgument("experiment checks failed".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("config example");
}
