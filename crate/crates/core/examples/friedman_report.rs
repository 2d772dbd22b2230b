//! Rank a table of accuracies and run the Friedman test.
//!
//! `cargo run --example friedman_report -- path/to/table.csv`; with no argument
//! a small built-in table is used.

use std::io::Cursor;

use mtnpsvm::eval::{friedman_table, AccuracyTable};

const DEMO: &str = "dataset,A,B,C,D
d1,0.81,0.84,0.79,0.86
d2,0.70,0.72,0.72,0.75
d3,0.91,0.88,0.90,0.93
d4,0.66,0.69,0.61,0.70
d5,0.77,0.80,0.76,0.80
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = match std::env::args().nth(1) {
        Some(path) => AccuracyTable::read_csv(std::fs::File::open(path)?)?,
        None => AccuracyTable::read_csv(Cursor::new(DEMO))?,
    };
    let report = friedman_table(&table);

    print!("{:<12}", "");
    for c in table.col_names() {
        print!("{c:>10}");
    }
    println!();
    for (name, ranks) in table.row_names().iter().zip(&report.ranks) {
        print!("{name:<12}");
        for r in ranks {
            print!("{r:>10.2}");
        }
        println!();
    }
    print!("{:<12}", "average");
    for r in &report.average_ranks {
        print!("{r:>10.3}");
    }
    println!();

    match report.stats {
        Ok(s) => println!("chi2_F = {:.4}, F_F = {:.4}", s.chi2, s.f),
        Err(why) => println!("statistic undefined: {why}"),
    }
    Ok(())
}
