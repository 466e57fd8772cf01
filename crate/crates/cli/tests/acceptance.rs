//! Every acceptance criterion at full size and default tolerance.

use averaging_cli::acceptance::{run_suite, Scale, Tolerances};

fn main() {
    let results = run_suite(Scale::Full, &Tolerances::default(), None);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    assert_eq!(failed, 0, "acceptance criteria failed");
}
