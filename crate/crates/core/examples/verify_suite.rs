//! Run the built-in verification checks and print one line each.

use rplcil::verify::{run_all, VerifyOptions};

fn main() {
    let outcomes = run_all(&VerifyOptions::default());
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
}
