//! Run all four regimes on a synthetic case and print the comparison.
//!
//! ```text
//! cargo run --release -p tsplan --example compare -- [seed] [congestion]
//! ```

use tsplan::case::{generate_case, GenSpec};
use tsplan::experiment::compare_all;
use tsplan::report::ComparisonReport;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(Ok(1), |s| s.parse())?;
    let congestion = args.next().map_or(Ok(0.3), |s| s.parse())?;
    let spec = GenSpec::new(seed, 13, 34, 5)
        .congestion(congestion)
        .budgets(1, 2)
        .node_limit(200);
    let case = generate_case(&spec);
    let (network, demand, config) = case.planning_inputs()?;
    let comparison = compare_all(&network, &demand, &config)?;
    let report = ComparisonReport::new(&network, &demand, &comparison, &case.breakers()?, true)?;
    print!("{}", report.to_text());
    Ok(())
}
