//! Configured runs and method comparison, as driven by the `amsbq` binary.

use amsbq::experiment::{compare, execute, RunConfig};

const MULTI: &str = "
benchmark = forrester-classic
method = amsbq
acquisition = mi
budget = 10
seeds = 0 1 2
tolerance = 0.01
";

const VANILLA: &str = "
benchmark = forrester-classic
method = vbq
budget = 10
seeds = 0 1 2
tolerance = 0.01
";

fn main() -> amsbq::Result<()> {
    let multi = RunConfig::parse(MULTI)?;
    let single = execute(&multi)?;
    println!("{} seed {}: {} rows, final rel err {:+.3e}", single.label, single.seed, single.rows.len(), single.final_rel_err());
    println!("first CSV lines:");
    for line in single.csv.lines().take(4) {
        println!("  {line}");
    }

    let cmp = compare(&[multi, RunConfig::parse(VANILLA)?], None)?;
    println!("\n{}", cmp.to_table());
    Ok(())
}
