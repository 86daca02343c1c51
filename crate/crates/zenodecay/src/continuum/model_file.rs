//! Plain-text model files:
//!
//! ```text
//! # comment
//! E_i = 0.0
//! W = 2.0
//! M = 201
//! hbar = 1.0
//! coupling 0 k 0.01 0.0
//! coupling 1 l 0.02 0.0
//! ```
//!
//! `E_i`, `W` and `M` are required, `hbar` defaults to 1, and every level
//! 0..M must appear in exactly one `coupling m channel v_re v_im` line.

use super::DiscretizedContinuumModel;
use crate::error::{Error, ParseIssue, Result};
use num_complex::Complex64 as C64;

/// Strict parser; collects every problem with its line number and never
/// returns a partially built model.
pub fn parse_model_file(text: &str) -> Result<DiscretizedContinuumModel> {
    let mut issues = Vec::new();
    let mut bound_energy: Option<f64> = None;
    let mut band_width: Option<f64> = None;
    let mut levels: Option<usize> = None;
    let mut hbar: f64 = 1.0;
    let mut couplings: Vec<(usize, usize, String, C64)> = Vec::new(); // (line, m, channel, v)

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("coupling") {
            if !rest.starts_with(char::is_whitespace) {
                issues.push(ParseIssue {
                    line: lineno,
                    message: format!("unknown key {:?}", line.split_whitespace().next().unwrap_or("")),
                });
                continue;
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 {
                issues.push(ParseIssue {
                    line: lineno,
                    message: format!(
                        "coupling line needs `m channel v_re v_im`, got {} fields",
                        fields.len()
                    ),
                });
                continue;
            }
            let m = match fields[0].parse::<usize>() {
                Ok(m) => m,
                Err(e) => {
                    issues.push(ParseIssue {
                        line: lineno,
                        message: format!("bad level index {:?}: {e}", fields[0]),
                    });
                    continue;
                }
            };
            let re = parse_number(fields[2], lineno, "v_re", &mut issues);
            let im = parse_number(fields[3], lineno, "v_im", &mut issues);
            if let (Some(re), Some(im)) = (re, im) {
                couplings.push((lineno, m, fields[1].to_string(), C64::new(re, im)));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(ParseIssue {
                line: lineno,
                message: format!("expected `key = value` or a coupling line, got {line:?}"),
            });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "E_i" => bound_energy = parse_number(value, lineno, key, &mut issues),
            "W" => band_width = parse_number(value, lineno, key, &mut issues),
            "hbar" => {
                if let Some(v) = parse_number(value, lineno, key, &mut issues) {
                    hbar = v;
                }
            }
            "M" => match value.parse::<usize>() {
                Ok(m) => levels = Some(m),
                Err(e) => issues.push(ParseIssue {
                    line: lineno,
                    message: format!("bad M {value:?}: {e}"),
                }),
            },
            other => issues.push(ParseIssue {
                line: lineno,
                message: format!("unknown key {other:?}"),
            }),
        }
    }

    for (name, present) in [
        ("E_i", bound_energy.is_some()),
        ("W", band_width.is_some()),
        ("M", levels.is_some()),
    ] {
        if !present {
            issues.push(ParseIssue {
                line: 1,
                message: format!("missing required key {name}"),
            });
        }
    }

    let m_total = levels.unwrap_or(0);
    let mut v = vec![None; m_total];
    for (lineno, m, channel, val) in couplings {
        if m >= m_total {
            issues.push(ParseIssue {
                line: lineno,
                message: format!("coupling level {m} out of range for M = {m_total}"),
            });
            continue;
        }
        if v[m].is_some() {
            issues.push(ParseIssue {
                line: lineno,
                message: format!("duplicate coupling for level {m}"),
            });
            continue;
        }
        v[m] = Some((channel, val));
    }
    if levels.is_some() {
        for (m, slot) in v.iter().enumerate() {
            if slot.is_none() {
                issues.push(ParseIssue {
                    line: 1,
                    message: format!("missing coupling line for level {m}"),
                });
            }
        }
    }

    if !issues.is_empty() {
        return Err(Error::Parse(issues));
    }
    let mut coupling_values = Vec::with_capacity(m_total);
    let mut labels = Vec::with_capacity(m_total);
    for slot in v {
        let (channel, val) = slot.expect("checked above");
        labels.push(channel);
        coupling_values.push(val);
    }
    DiscretizedContinuumModel::new(
        bound_energy.expect("checked"),
        band_width.expect("checked"),
        coupling_values,
        labels,
        hbar,
    )
    .map_err(|e| {
        Error::Parse(vec![ParseIssue {
            line: 1,
            message: e.to_string(),
        }])
    })
}

fn parse_number(text: &str, line: usize, key: &str, issues: &mut Vec<ParseIssue>) -> Option<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        Ok(v) => {
            issues.push(ParseIssue {
                line,
                message: format!("{key} must be finite, got {v}"),
            });
            None
        }
        Err(e) => {
            issues.push(ParseIssue {
                line,
                message: format!("bad number for {key}: {text:?} ({e})"),
            });
            None
        }
    }
}

/// Serialize a model back to the file format (17 significant digits).
pub fn format_model_file(model: &DiscretizedContinuumModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("E_i = {}\n", crate::curve::format_sig17(model.bound_energy())));
    out.push_str(&format!("W = {}\n", crate::curve::format_sig17(model.band_width())));
    out.push_str(&format!("M = {}\n", model.levels()));
    out.push_str(&format!("hbar = {}\n", crate::curve::format_sig17(model.hbar())));
    for (m, (v, label)) in model
        .couplings()
        .iter()
        .zip(model.channel_labels())
        .enumerate()
    {
        out.push_str(&format!(
            "coupling {m} {label} {} {}\n",
            crate::curve::format_sig17(v.re),
            crate::curve::format_sig17(v.im)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two-level toy band
E_i = 0.0
W = 2.0
M = 2
hbar = 1.0
coupling 0 k 0.01 0.0
coupling 1 l 0.02 -0.005
";

    #[test]
    fn parses_valid_file() {
        let model = parse_model_file(SMALL).unwrap();
        assert_eq!(model.levels(), 2);
        assert_eq!(model.channel_labels(), &["k".to_string(), "l".to_string()]);
        assert_eq!(model.couplings()[1], C64::new(0.02, -0.005));
    }

    #[test]
    fn round_trips_through_formatter() {
        let model = parse_model_file(SMALL).unwrap();
        let again = parse_model_file(&format_model_file(&model)).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn reports_unknown_key_with_line() {
        let text = "E_i = 0.0\nW = 2.0\nM = 1\nbandwidth = 3\ncoupling 0 k 0 0\n";
        match parse_model_file(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.line == 4 && i.message.contains("bandwidth")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_missing_and_duplicate_couplings() {
        let text = "E_i = 0.0\nW = 2.0\nM = 3\ncoupling 0 k 0 0\ncoupling 0 k 0 0\n";
        match parse_model_file(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.message.contains("duplicate coupling for level 0")));
                assert!(issues.iter().any(|i| i.message.contains("missing coupling line for level 1")));
                assert!(issues.iter().any(|i| i.message.contains("missing coupling line for level 2")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_bad_numbers_and_missing_keys() {
        let text = "W = huh\nM = 1\ncoupling 0 k 0 0\n";
        match parse_model_file(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.line == 1 && i.message.contains("bad number")));
                assert!(issues.iter().any(|i| i.message.contains("missing required key E_i")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_model_values() {
        // W <= 0 passes parsing but fails model validation
        let text = "E_i = 0.0\nW = -2.0\nM = 1\ncoupling 0 k 0 0\n";
        assert!(parse_model_file(text).is_err());
    }

    #[test]
    fn never_panics_on_junk() {
        for junk in [
            "",
            "\u{0}\u{1}\u{2}",
            "coupling",
            "coupling 9 9 9 9 9 9",
            "= = =",
            "M = 99999999999999999999",
            "E_i = 1e999",
        ] {
            let _ = parse_model_file(junk);
        }
    }
}
