//! Random bit-serial vs bit-parallel trials, then the same trials with the
//! sign-bit negation disabled to show the checker catches it.
//!
//! cargo run --release --example verify_equivalence [-- trials]

use tartan::functional::Fault;
use tartan::verify::{run_trials, TrialOutcome};

fn report(o: TrialOutcome) {
    match o {
        TrialOutcome::Passed { trials } => println!("{trials} trials, no mismatch"),
        TrialOutcome::Failed { trial, seed, case, mismatch } => {
            println!("trial {trial} (seed {seed}) fails: {mismatch}\n  {case}")
        }
    }
}

fn main() -> tartan::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    report(run_trials(n, 1, None)?);
    report(run_trials(n, 1, Some(Fault::NoMsbNegation))?);
    Ok(())
}
