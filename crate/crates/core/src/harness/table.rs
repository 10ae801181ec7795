use std::path::Path;

use crate::error::{Error, Result};

/// Consecutive-level orders and the least-squares slope of `log e` against `log h`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub steps: Vec<f64>,
    pub slope: f64,
}

pub fn fit_orders(errors: &[f64], h: &[f64]) -> Result<OrderFit> {
    if errors.len() != h.len() {
        return Err(Error::Invalid(format!("{} errors for {} mesh sizes", errors.len(), h.len())));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Invalid(format!("error values must be positive, got {e}")));
    }
    if let Some(v) = h.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Invalid(format!("mesh sizes must be positive, got {v}")));
    }
    let steps = errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    Ok(OrderFit { steps, slope: regression_slope(errors, h) })
}

fn regression_slope(errors: &[f64], h: &[f64]) -> f64 {
    if errors.len() < 2 {
        return f64::NAN;
    }
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub level: usize,
    pub dof: usize,
    /// Largest element diameter of the level's mesh.
    pub h: f64,
    pub errors: Vec<f64>,
    /// Order against the previous row with the same label; `None` on the first.
    pub orders: Vec<Option<f64>>,
    pub label: Option<String>,
}

/// Error history of a refinement study. Each entry of `columns` becomes a
/// `<name>_err, <name>_order` pair in the CSV; an optional trailing label
/// column (e.g. `normal_source`) tags rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub columns: Vec<String>,
    pub label_column: Option<String>,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    pub fn new(columns: &[&str], label_column: Option<&str>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            label_column: label_column.map(str::to_owned),
            rows: Vec::new(),
        }
    }

    /// Appends a row and fills its orders from the previous row with the same label.
    pub fn push(&mut self, level: usize, dof: usize, h: f64, errors: Vec<f64>, label: Option<String>) -> Result<()> {
        if errors.len() != self.columns.len() {
            return Err(Error::Invalid(format!("{} errors for {} columns", errors.len(), self.columns.len())));
        }
        let prev = self.rows.iter().rev().find(|r| r.label == label);
        let orders = match prev {
            Some(p) => p
                .errors
                .iter()
                .zip(&errors)
                .map(|(e0, e1)| fit_orders(&[*e0, *e1], &[p.h, h]).ok().map(|f| f.steps[0]))
                .collect(),
            None => vec![None; errors.len()],
        };
        self.rows.push(TableRow { level, dof, h, errors, orders, label });
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let base = name.strip_suffix("_err").or_else(|| name.strip_suffix("_order")).unwrap_or(name);
        self.columns.iter().position(|c| c == base)
    }

    /// `(h, error)` pairs of one column in row order.
    pub fn series(&self, column: &str) -> Option<(Vec<f64>, Vec<f64>)> {
        let k = self.column_index(column)?;
        Some(self.rows.iter().map(|r| (r.h, r.errors[k])).unzip())
    }

    /// Regression slope of a column over its last `last` rows.
    pub fn slope(&self, column: &str, last: usize) -> Result<f64> {
        let (h, e) = self
            .series(column)
            .ok_or_else(|| Error::Invalid(format!("no column '{column}'")))?;
        let start = h.len().saturating_sub(last);
        Ok(fit_orders(&e[start..], &h[start..])?.slope)
    }

    fn header(&self) -> Vec<String> {
        let mut head = vec!["level".to_string(), "dof".to_string(), "h".to_string()];
        for c in &self.columns {
            head.push(format!("{c}_err"));
            head.push(format!("{c}_order"));
        }
        head.extend(self.label_column.clone());
        head
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(self.header()).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.level.to_string(), r.dof.to_string(), sci(r.h)];
            for (e, o) in r.errors.iter().zip(&r.orders) {
                rec.push(sci(*e));
                rec.push(o.map(sci).unwrap_or_default());
            }
            if self.label_column.is_some() {
                rec.push(r.label.clone().unwrap_or_default());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let head: Vec<String> = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        if head.len() < 3 || head[..3] != ["level", "dof", "h"] {
            return Err(parse_err(1, "header must start with level,dof,h".into()));
        }
        let mut columns = Vec::new();
        let mut k = 3;
        while k < head.len() {
            match (head[k].strip_suffix("_err"), head.get(k + 1).and_then(|o| o.strip_suffix("_order"))) {
                (Some(a), Some(b)) if a == b => {
                    columns.push(a.to_owned());
                    k += 2;
                }
                _ => break,
            }
        }
        let label_column = match head.len() - k {
            0 => None,
            1 => Some(head[k].clone()),
            _ => return Err(parse_err(1, format!("unexpected column '{}'", head[k]))),
        };
        let mut table = Self { columns, label_column, rows: Vec::new() };
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            let num = |j: usize| -> Result<f64> {
                rec[j].parse().map_err(|_| parse_err(line, format!("bad number '{}'", &rec[j])))
            };
            let int = |j: usize| -> Result<usize> {
                rec[j].parse().map_err(|_| parse_err(line, format!("bad integer '{}'", &rec[j])))
            };
            let mut errors = Vec::new();
            let mut orders = Vec::new();
            for c in 0..table.columns.len() {
                errors.push(num(3 + 2 * c)?);
                orders.push(if rec[4 + 2 * c].is_empty() { None } else { Some(num(4 + 2 * c)?) });
            }
            let label = table.label_column.as_ref().map(|_| rec[k].to_owned()).filter(|s| !s.is_empty());
            table.rows.push(TableRow { level: int(0)?, dof: int(1)?, h: num(2)?, errors, orders, label });
        }
        Ok(table)
    }
}

/// 17 significant digits, always with a `.` decimal point.
fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_csv(table: &ConvergenceTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = table.to_csv_string()?;
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<ConvergenceTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    ConvergenceTable::parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quarter_errors_give_order_two() {
        let fit = fit_orders(&[1.0, 0.25, 0.0625], &[1.0, 0.5, 0.25]).unwrap();
        assert_eq!(fit.steps.len(), 2);
        for o in fit.steps.iter().chain([&fit.slope]) {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_errors_give_order_zero() {
        let fit = fit_orders(&[0.3; 4], &[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert!(fit.steps.iter().all(|o| o.abs() < 1e-15));
        assert!(fit.slope.abs() < 1e-15);
    }

    #[test]
    fn sphere_gradient_error_history() {
        let e = [5.13e-01, 1.96e-01, 9.83e-02, 4.92e-02, 2.46e-02, 1.23e-02, 6.15e-03, 3.07e-03];
        let h: Vec<f64> = (0..e.len()).map(|k| 0.5f64.powi(k as i32)).collect();
        let fit = fit_orders(&e, &h).unwrap();
        let expected = [1.40, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00];
        for (o, x) in fit.steps.iter().zip(expected) {
            assert!((o - x).abs() < 0.02, "{:?}", fit.steps);
        }
    }

    #[test]
    fn nonpositive_errors_are_rejected() {
        assert!(fit_orders(&[1.0, 0.0], &[1.0, 0.5]).is_err());
        assert!(fit_orders(&[1.0, -2.0], &[1.0, 0.5]).is_err());
        assert!(fit_orders(&[1.0, f64::NAN], &[1.0, 0.5]).is_err());
        assert!(fit_orders(&[1.0], &[1.0, 0.5]).is_err());
    }

    fn sample() -> ConvergenceTable {
        let mut t = ConvergenceTable::new(&["l2", "h1"], Some("normal_source"));
        for (k, src) in [(3, "recovered"), (4, "recovered"), (3, "elementwise"), (4, "elementwise")] {
            let h = 0.5f64.powi(k);
            t.push(k as usize, 10 * 4usize.pow(k as u32) + 2, h, vec![h * h / 3.0, h], Some(src.into()))
                .unwrap();
        }
        t
    }

    #[test]
    fn orders_follow_labels() {
        let t = sample();
        assert_eq!(t.rows[0].orders, vec![None, None]);
        assert_eq!(t.rows[2].orders, vec![None, None]);
        let o = t.rows[3].orders[0].unwrap();
        assert!((o - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ConvergenceTable::new(&["jac", "det", "metric"], None);
        let s = t.to_csv_string().unwrap();
        assert_eq!(s, "level,dof,h,jac_err,jac_order,det_err,det_order,metric_err,metric_order\n");
        assert_eq!(ConvergenceTable::parse_csv(&s).unwrap(), t);
    }

    #[test]
    fn csv_round_trip_through_file() {
        let t = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_csv(&t, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), t);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("level,dof,h,l2_err,l2_order,h1_err,h1_order,normal_source\n"));
    }

    #[test]
    fn numbers_are_plain_scientific() {
        assert_eq!(sci(1234567.0), "1.2345670000000000e6");
        assert_eq!(sci(-0.000125), "-1.2500000000000000e-4");
        let s = sample().to_csv_string().unwrap();
        assert!(!s.contains(' '));
    }

    #[test]
    fn slope_over_last_rows() {
        let mut t = ConvergenceTable::new(&["e"], None);
        let errs = [1.0, 0.6, 0.25, 0.0625, 0.015625];
        for (k, e) in errs.iter().enumerate() {
            t.push(k, k, 0.5f64.powi(k as i32), vec![*e], None).unwrap();
        }
        assert!((t.slope("e_err", 4).unwrap() - 2.0).abs() > 0.05);
        assert!((t.slope("e", 3).unwrap() - 2.0).abs() < 1e-12);
        assert!(t.slope("missing", 3).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(vals in prop::collection::vec((1e-300f64..1e300, 1e-12f64..10.0), 1..8)) {
            let mut t = ConvergenceTable::new(&["a"], None);
            for (k, (e, h)) in vals.iter().enumerate() {
                t.push(k, k * 7, *h, vec![*e], None).unwrap();
            }
            let back = ConvergenceTable::parse_csv(&t.to_csv_string().unwrap()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
