//! The property suites on a small batch of generated programs. Pass a seed
//! and a count to change the batch: `cargo run --example properties 3 40`.

use quantrans::props::{run_all, PropsConfig};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("numeric argument"));
    let seed = args.next().unwrap_or(7);
    let count = args.next().unwrap_or(24) as usize;
    let report = run_all(&PropsConfig::new(seed, count));
    println!("{report}");
    print!("\n{}", report.table());
}
