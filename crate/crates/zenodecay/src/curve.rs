//! Survival curves and the shared CSV conventions: header line,
//! 17-significant-digit decimals, LF line endings.

use crate::error::{Error, ParseIssue, Result};

/// One sampled point of an ensemble (or exact) survival curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub mean: f64,
    /// Standard error of the mean; 0 for exact curves.
    pub stderr: f64,
}

/// A survival probability sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurvivalCurve {
    points: Vec<CurvePoint>,
}

impl SurvivalCurve {
    pub fn new(points: Vec<CurvePoint>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with t_min ≤ t ≤ t_max, in curve order.
    pub fn window(&self, t_min: f64, t_max: f64) -> Vec<CurvePoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.t >= t_min && p.t <= t_max)
            .collect()
    }

    /// `t,mean,stderr` CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean,stderr\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                format_sig17(p.t),
                format_sig17(p.mean),
                format_sig17(p.stderr)
            ));
        }
        out
    }

    /// Strict reader for the survival-curve CSV convention.
    ///
    /// Never panics on malformed text; all problems are collected with
    /// their line numbers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut issues = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == "t,mean,stderr" => {}
            Some((_, header)) => issues.push(ParseIssue {
                line: 1,
                message: format!("expected header `t,mean,stderr`, got {header:?}"),
            }),
            None => issues.push(ParseIssue {
                line: 1,
                message: "empty input".into(),
            }),
        }
        let mut points = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                issues.push(ParseIssue {
                    line: lineno,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
                continue;
            }
            let mut vals = [0.0f64; 3];
            let mut ok = true;
            for (k, f) in fields.iter().enumerate() {
                match f.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => vals[k] = v,
                    Ok(v) => {
                        issues.push(ParseIssue {
                            line: lineno,
                            message: format!("non-finite value {v}"),
                        });
                        ok = false;
                    }
                    Err(e) => {
                        issues.push(ParseIssue {
                            line: lineno,
                            message: format!("bad number {f:?}: {e}"),
                        });
                        ok = false;
                    }
                }
            }
            if ok {
                points.push(CurvePoint {
                    t: vals[0],
                    mean: vals[1],
                    stderr: vals[2],
                });
            }
        }
        if issues.is_empty() {
            Ok(Self { points })
        } else {
            Err(Error::Parse(issues))
        }
    }
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Generic table in the same CSV conventions as survival curves.
pub fn format_table(headers: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = headers.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), headers.len());
        let cells: Vec<String> = row.iter().map(|&v| format_sig17(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let curve = SurvivalCurve::new(vec![
            CurvePoint {
                t: 0.0,
                mean: 1.0,
                stderr: 0.0,
            },
            CurvePoint {
                t: 0.1,
                mean: 1.0 / 3.0,
                stderr: 1.23456789e-14,
            },
            CurvePoint {
                t: std::f64::consts::PI,
                mean: (-0.2f64).exp(),
                stderr: 4.9e-324, // smallest subnormal
            },
        ]);
        let text = curve.to_csv();
        assert!(text.starts_with("t,mean,stderr\n"));
        assert!(!text.contains('\r'));
        let back = SurvivalCurve::from_csv(&text).unwrap();
        for (a, b) in curve.points().iter().zip(back.points()) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        }
    }

    #[test]
    fn csv_reader_reports_line_numbers() {
        let text = "t,mean,stderr\n0.0,1.0,0.0\n0.1,oops,0.0\n0.2,0.5\n";
        let err = SurvivalCurve::from_csv(text).unwrap_err();
        match err {
            Error::Parse(issues) => {
                assert_eq!(issues.len(), 2);
                assert_eq!(issues[0].line, 3);
                assert_eq!(issues[1].line, 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_reader_rejects_bad_header() {
        assert!(SurvivalCurve::from_csv("time,avg,se\n").is_err());
        assert!(SurvivalCurve::from_csv("").is_err());
    }

    #[test]
    fn window_selects_inclusive_range() {
        let curve = SurvivalCurve::new(
            (0..10)
                .map(|k| CurvePoint {
                    t: k as f64,
                    mean: 1.0,
                    stderr: 0.0,
                })
                .collect(),
        );
        let w = curve.window(2.0, 5.0);
        assert_eq!(w.len(), 4);
        assert_eq!(w[0].t, 2.0);
        assert_eq!(w[3].t, 5.0);
    }
}
