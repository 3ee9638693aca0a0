// Run registry reproductions by name and print their check summaries.

use opsplit::experiments::{list, reproduce};
use opsplit::{Error, Result};

pub fn run_example() -> Result<()> {
    print!("{}", list());
    for name in ["square-feasibility", "abs-ergodic", "admm-equivalence"] {
        let out = reproduce(name)?;
        let report = out.report();
        println!("{name}: pass={} ({} checks)", report.pass, report.checks.len());
        for c in &report.checks {
            println!("  {:<40} margin {:?}", c.name, c.margin);
        }
        if !report.pass {
            return Err(Error::InvalidArgument(format!("{name} failed")));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("reproduce example");
}
