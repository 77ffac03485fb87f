//! Gnuplot-ready column files: `#` header lines naming each column and its
//! unit, then whitespace-separated rows.

use std::fmt::Write;

/// One column: name and unit.
pub type Column = (&'static str, &'static str);

pub fn columns(title: &str, cols: &[Column], rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    writeln!(s, "# {title}").unwrap();
    for (i, (name, unit)) in cols.iter().enumerate() {
        writeln!(s, "# column {}: {name} [{unit}]", i + 1).unwrap();
    }
    for row in rows {
        debug_assert_eq!(row.len(), cols.len());
        let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    s
}
