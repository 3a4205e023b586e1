//! Diagnostic time series recorded along solver runs, plus the profile
//! snapshots used by the ordering checks. CSV output uses '.' decimals,
//! LF line endings and 17 significant digits.

use crate::error::{Error, Result};
use crate::radial::fmt_g17;

/// Column-named table of per-record diagnostics.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Set when the run stopped early because sup u crossed the blow-up
    /// threshold. Flagged, not an error.
    pub blowup_flagged: bool,
}

impl TrajectoryRecord {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            blowup_flagged: false,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("no column named {name}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.column("t")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| fmt_g17(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Snapshots of a grid function over recorded times: one row of `values`
/// per time, one entry per node. Shared by the transformed solver, the
/// barrier evaluations and the ordering checks.
#[derive(Debug, Clone)]
pub struct ProfileSeries {
    pub xi: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ProfileSeries {
    pub fn new(xi: Vec<f64>) -> Self {
        Self { xi, times: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.xi.len());
        self.times.push(t);
        self.values.push(values);
    }

    pub fn matches_layout(&self, other: &ProfileSeries) -> bool {
        self.xi == other.xi && self.times == other.times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_shape() {
        let mut tr = TrajectoryRecord::new(&["t", "sup_u"]);
        tr.push(vec![0.0, 1.0]);
        tr.push(vec![0.5, 1.25]);
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,sup_u\n"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(tr.column("sup_u").unwrap(), vec![1.0, 1.25]);
        assert!(tr.column("missing").is_err());
    }
}
