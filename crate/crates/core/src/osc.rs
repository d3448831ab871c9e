//! Overall Selection Cost: performance ratio times end-to-end time ratio.
//!
//! `C = (P_full / P_sub) * ((T_select + T_tune_sub) / T_tune_full)`. A
//! selection pipeline pays off only when `C < 1`. Times are in hours.

use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscRecord {
    pub label: String,
    pub perf_full: f64,
    pub perf_sub: f64,
    pub t_select: f64,
    pub t_tune_sub: f64,
    pub t_tune_full: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscResult {
    pub score: f64,
    pub performance_ratio: f64,
    pub time_ratio: f64,
    pub viable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscRow {
    pub label: String,
    #[serde(flatten)]
    pub result: OscResult,
}

impl OscRecord {
    fn validate(&self) -> Result<()> {
        if self.label.is_empty() {
            return Err(PrismError::contract("OSC record label is empty"));
        }
        let positive = [
            ("perf_full", self.perf_full),
            ("perf_sub", self.perf_sub),
            ("t_tune_sub", self.t_tune_sub),
            ("t_tune_full", self.t_tune_full),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PrismError::contract(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_select.is_finite() && self.t_select >= 0.0) {
            return Err(PrismError::contract(format!(
                "t_select must be non-negative, got {}",
                self.t_select
            )));
        }
        Ok(())
    }
}

pub fn osc(record: &OscRecord) -> Result<OscResult> {
    record.validate()?;
    let performance_ratio = record.perf_full / record.perf_sub;
    let time_ratio = (record.t_select + record.t_tune_sub) / record.t_tune_full;
    let score = performance_ratio * time_ratio;
    Ok(OscResult {
        score,
        performance_ratio,
        time_ratio,
        viable: score < 1.0,
    })
}

/// Scores every record and sorts ascending by score, then by label.
pub fn compare_records(records: &[OscRecord]) -> Result<Vec<OscRow>> {
    if records.is_empty() {
        return Err(PrismError::contract("no OSC records to compare"));
    }
    let mut rows = records
        .iter()
        .map(|r| {
            Ok(OscRow {
                label: r.label.clone(),
                result: osc(r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.result
            .score
            .total_cmp(&b.result.score)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(label: &str, pf: f64, ps: f64, ts: f64, tsub: f64, tfull: f64) -> OscRecord {
        OscRecord {
            label: label.into(),
            perf_full: pf,
            perf_sub: ps,
            t_select: ts,
            t_tune_sub: tsub,
            t_tune_full: tfull,
        }
    }

    #[test]
    fn identity_is_not_viable() {
        let r = osc(&rec("full", 100.0, 100.0, 0.0, 94.0, 94.0)).unwrap();
        assert_eq!(r.score, 1.0);
        assert!(!r.viable);
    }

    #[test]
    fn table_rows() {
        // 100/101.7 * 29.5/94 and 100/100.6 * 101/94, by hand.
        let prism = osc(&rec("prism", 100.0, 101.7, 1.5, 28.0, 94.0)).unwrap();
        assert!((prism.score - 0.308584).abs() < 1e-6, "{}", prism.score);
        assert!(prism.viable);
        let tive = osc(&rec("tive", 100.0, 100.6, 87.0, 14.0, 94.0)).unwrap();
        assert!((tive.score - 1.068060).abs() < 1e-6, "{}", tive.score);
        assert!(!tive.viable);
        assert_eq!(prism.score, prism.performance_ratio * prism.time_ratio);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(osc(&rec("x", 0.0, 1.0, 0.0, 1.0, 1.0)).is_err());
        assert!(osc(&rec("x", 1.0, 1.0, -1.0, 1.0, 1.0)).is_err());
        assert!(osc(&rec("x", 1.0, 1.0, 0.0, 0.0, 1.0)).is_err());
        assert!(osc(&rec("", 1.0, 1.0, 0.0, 1.0, 1.0)).is_err());
        assert!(compare_records(&[]).is_err());
    }

    #[test]
    fn ranking() {
        let rows = compare_records(&[
            rec("TIVE", 100.0, 100.6, 87.0, 14.0, 94.0),
            rec("Full", 100.0, 100.0, 0.0, 94.0, 94.0),
            rec("PRISM", 100.0, 101.7, 1.5, 28.0, 94.0),
        ])
        .unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["PRISM", "Full", "TIVE"]);

        let tied = compare_records(&[
            rec("b", 1.0, 1.0, 0.0, 1.0, 2.0),
            rec("a", 1.0, 1.0, 0.0, 1.0, 2.0),
        ])
        .unwrap();
        assert_eq!(tied[0].label, "a");
    }
}
