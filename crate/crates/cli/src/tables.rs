//! Plain-text difference tables, one row per S-box input, columns
//! `I I' O O' Delta` with hex nibbles and a 4-digit binary difference.

use std::fmt::Write;

use present_dfa::DifferenceTable;

use crate::config::parse_mask;
use crate::CliError;

pub fn format_table(table: &DifferenceTable) -> String {
    let mut out = format!("Mask {:04b}\nI  I' O  O' Delta\n", table.mask());
    for r in table.rows() {
        let _ = writeln!(
            out,
            "{:X}  {:X}  {:X}  {:X}  {:04b}",
            r.input, r.faulty_input, r.output, r.faulty_output, r.delta
        );
    }
    out
}

/// `all` or a single mask.
pub fn cmd_tables(selector: &str) -> Result<String, CliError> {
    let masks: Vec<u8> = if selector.eq_ignore_ascii_case("all") {
        (1..16).collect()
    } else {
        vec![parse_mask(selector)?]
    };
    let tables: Vec<String> = masks
        .into_iter()
        .map(|m| DifferenceTable::build(m).map(|t| format_table(&t)))
        .collect::<Result<_, _>>()?;
    Ok(tables.join("\n"))
}
