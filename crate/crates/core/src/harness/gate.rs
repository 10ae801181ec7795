use std::fmt;
use std::path::Path;

use super::table::ConvergenceTable;
use crate::error::{Error, Result};

/// Rows entering a gate's regression slope.
pub const GATE_WINDOW: usize = 4;

/// Accepted range `[min, max]` for the regression order of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub gate: Gate,
    pub slope: f64,
    pub passed: bool,
}

impl fmt::Display for GateOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: order {:.3} in [{}, {}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.gate.column,
            self.slope,
            self.gate.min,
            self.gate.max
        )
    }
}

/// One gate per line: `column min_order max_order`. Blank lines and `#`
/// comments are skipped; `-` or `inf` leaves a bound open.
pub fn parse_gates(text: &str) -> Result<Vec<Gate>> {
    let mut gates = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(format!("expected 'column min max', got '{line}'")));
        }
        let bound = |s: &str, open: f64| -> Result<f64> {
            match s {
                "-" | "inf" | "-inf" => Ok(open),
                _ => s.parse().map_err(|_| err(format!("bad order bound '{s}'"))),
            }
        };
        let gate = Gate {
            column: parts[0].to_owned(),
            min: bound(parts[1], f64::NEG_INFINITY)?,
            max: bound(parts[2], f64::INFINITY)?,
        };
        if gate.min > gate.max {
            return Err(err(format!("empty range [{}, {}]", gate.min, gate.max)));
        }
        gates.push(gate);
    }
    Ok(gates)
}

pub fn load_gates(path: impl AsRef<Path>) -> Result<Vec<Gate>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse_gates(&text)
}

/// Checks each gate against the regression slope over the last
/// [`GATE_WINDOW`] rows. Unknown columns are an error.
pub fn check_gates(table: &ConvergenceTable, gates: &[Gate]) -> Result<Vec<GateOutcome>> {
    gates
        .iter()
        .map(|g| {
            let slope = table.slope(&g.column, GATE_WINDOW)?;
            let passed = slope >= g.min && slope <= g.max;
            Ok(GateOutcome { gate: g.clone(), slope, passed })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_open_bounds() {
        let g = parse_gates("# orders\njac 1.85 2.15\n\nde_r_err 1.85 -  # open above\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], Gate { column: "jac".into(), min: 1.85, max: 2.15 });
        assert_eq!(g[1].max, f64::INFINITY);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_gates("jac 1.0").is_err());
        assert!(parse_gates("jac x 2").is_err());
        assert!(parse_gates("jac 2 1").is_err());
    }

    #[test]
    fn gate_uses_last_four_levels() {
        let mut t = ConvergenceTable::new(&["e"], None);
        // a noisy first level must not enter the window
        let errs = [10.0, 1.0, 0.25, 0.0625, 0.015625];
        for (k, e) in errs.iter().enumerate() {
            t.push(k, k, 0.5f64.powi(k as i32), vec![*e], None).unwrap();
        }
        let out = check_gates(&t, &parse_gates("e 1.99 2.01\ne 0.0 1.0").unwrap()).unwrap();
        assert!(out[0].passed);
        assert!(!out[1].passed);
        assert!(out[0].to_string().starts_with("PASS e: order 2.000"));
        assert!(check_gates(&t, &parse_gates("nope 0 1").unwrap()).is_err());
    }
}
