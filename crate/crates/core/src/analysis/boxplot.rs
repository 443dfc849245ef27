use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Five-number summary; quartiles use linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Result<BoxStats> {
        if values.is_empty() {
            return Err(Error::Input("summary of an empty series".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box-plot series".into()));
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Ok(BoxStats {
            min: s[0],
            q1: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q3: quantile(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

/// One box of a box plot: a label (usually a layer) and its raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSeries {
    pub label: String,
    pub stats: BoxStats,
    pub values: Vec<f64>,
}

impl BoxSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<BoxSeries> {
        Ok(BoxSeries { label: label.into(), stats: BoxStats::of(&values)?, values })
    }
}

/// CSV with one row per series: `label,min,q1,median,q3,max,values...`.
/// Rows are ragged when series lengths differ.
pub fn to_csv(series: &[BoxSeries]) -> String {
    let mut out = String::from("label,min,q1,median,q3,max,values\n");
    for s in series {
        let b = &s.stats;
        write!(out, "{},{},{},{},{},{}", s.label, b.min, b.q1, b.median, b.q3, b.max).unwrap();
        for v in &s.values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn to_json(series: &[BoxSeries]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(series)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let b = BoxStats::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let b = BoxStats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (1.75, 2.5, 3.25));
        assert_eq!(BoxStats::of(&[7.0]).unwrap().median, 7.0);
        assert!(BoxStats::of(&[]).is_err());
    }

    #[test]
    fn csv_rows() {
        let s = vec![BoxSeries::new("L1", vec![0.5, 1.0]).unwrap()];
        assert_eq!(to_csv(&s), "label,min,q1,median,q3,max,values\nL1,0.5,0.625,0.75,0.875,1,0.5,1\n");
    }
}
