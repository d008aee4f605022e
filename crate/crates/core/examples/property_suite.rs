//! Run every invariant check of the library and print one line per check.
use std::time::Instant;

use cosserat_mfe::properties;

fn main() {
    let mut failed = 0;
    for p in properties::all() {
        let t = Instant::now();
        let o = (p.run)();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} {}::{} ({:.1}s) {}",
            if o.passed { "PASS" } else { "FAIL" },
            p.module,
            p.name,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{failed} failed");
}
