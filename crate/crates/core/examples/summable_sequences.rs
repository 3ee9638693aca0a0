// The summable-sequence lemma on hand-built sequences, one per part.

use opsplit::rates::{verify_summable_lemma, LemmaPart, SequenceCheck};
use opsplit::report::Tolerance;
use opsplit::{Error, Result};

pub fn run_example() -> Result<()> {
    let n = 500;
    let lambda: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 0.5 } else { 0.9 }).collect();
    let decay: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) as f64).powi(2)).collect();
    let e: Vec<f64> = (0..n).map(|k| 0.1 / ((k + 1) as f64).powf(1.5)).collect();
    let bumpy: Vec<f64> = (0..n).map(|k| decay[k] * if k % 3 == 0 { 2.0 } else { 0.5 }).collect();
    let b: Vec<f64> = (0..=n).map(|k| 1.0 / (k + 1) as f64).collect();
    let tele: Vec<f64> = (0..n).map(|k| (b[k] - b[k + 1]) / lambda[k]).collect();
    let checks = [
        SequenceCheck::new(LemmaPart::Monotone, decay.clone(), lambda.clone()),
        SequenceCheck::new(LemmaPart::UpToErrors, bumpy.clone(), lambda.clone()).with_errors((0..n).map(|k| bumpy[(k + 1).min(n - 1)]).collect()),
        SequenceCheck::new(LemmaPart::Telescoping, tele, lambda.clone()).with_b(b).with_errors(e),
        SequenceCheck::new(LemmaPart::RunningMin, bumpy, lambda),
    ];
    for c in &checks {
        let r = verify_summable_lemma(c, Tolerance::DEFAULT)?;
        println!("{:<20} pass={} worst margin {:.3e}", r.name, r.passed(), r.worst().map_or(f64::NAN, |w| w.margin));
        if !r.passed() {
            return Err(Error::InvalidArgument(format!("{} failed", r.name)));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("summable lemma example");
}
