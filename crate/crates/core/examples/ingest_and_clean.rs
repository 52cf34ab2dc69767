//! Load a small flow table, inspect the inferred schema, and clean it.
//!
//! ```bash
//! cargo run -p etg --example ingest_and_clean
//! ```

use std::io::Cursor;
use std::path::Path;

use etg::ingest::{read_csv, LoadOptions};
use etg::preprocess::clean;

const FLOWS: &str = "\
flow_duration,protocol,rate,label
0.5,TCP,120.0,Benign
0.5,TCP,120.0,Benign
1.2,UDP,inf,DDoS-UDP_Flood
0.9,UDP,880.5,DDoS-UDP_Flood
0.1,,45.0,Mirai-greeth_flood
0.3,TCP,60.25,Mirai-greeth_flood
";

fn main() -> etg::Result<()> {
    let table = read_csv(Cursor::new(FLOWS), &LoadOptions::with_label("label"), Path::new("flows.csv"))?;
    println!("{} rows x {} columns", table.row_count(), table.column_count());
    for col in table.schema() {
        println!("  {:<14} {:?}", col.name, col.kind);
    }

    let (cleaned, report) = clean(&table);
    println!("\n{report:#?}");
    for row in 0..cleaned.row_count() {
        println!("  {}", cleaned.row_text(row).join(", "));
    }
    Ok(())
}
