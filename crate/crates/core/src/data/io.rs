use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, SurvivalRecord};
use crate::error::{Error, Result};

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        row,
        message: format!("column '{column}': '{cell}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("column '{column}': '{cell}' is not finite"),
        });
    }
    Ok(v)
}

fn row_of(err: &csv::Error, fallback: usize) -> usize {
    // line 1 is the header
    err.position()
        .map_or(fallback, |p| (p.line() as usize).saturating_sub(1).max(1))
}

/// Parses a headed CSV. The time and event columns are taken by name; all
/// remaining columns become features in header order.
pub fn parse_csv<R: Read>(reader: R, time_col: &str, event_col: &str, provenance: &str) -> Result<Dataset> {
    if time_col == event_col {
        return Err(Error::invalid("time and event columns must differ"));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid(format!("missing column '{name}'")))
    };
    let time_idx = find(time_col)?;
    let event_idx = find(event_col)?;
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != time_idx && i != event_idx).collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&i| headers[i].trim().to_owned()).collect();

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row: row_of(&e, row),
            message: e.to_string(),
        })?;
        let time = parse_number(&rec[time_idx], row, time_col)?;
        if time <= 0.0 {
            return Err(Error::Parse {
                row,
                message: format!("time must be positive, got {time}"),
            });
        }
        let event = match parse_number(&rec[event_idx], row, event_col)? {
            0.0 => false,
            1.0 => true,
            v => {
                return Err(Error::Parse {
                    row,
                    message: format!("event must be 0 or 1, got {v}"),
                })
            }
        };
        let features = feature_idx
            .iter()
            .zip(&feature_names)
            .map(|(&j, name)| parse_number(&rec[j], row, name))
            .collect::<Result<Vec<f64>>>()?;
        records.push(SurvivalRecord { features, time, event });
    }
    Dataset::new(records, feature_names, provenance)
}

pub fn load_csv(path: impl AsRef<Path>, time_col: &str, event_col: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, time_col, event_col, &path.display().to_string())
}

/// Writes `features..., time, event`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push("time");
    header.push("event");
    w.write_record(&header)?;
    for r in &dataset.records {
        let mut row: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
        row.push(r.time.to_string());
        row.push(if r.event { "1" } else { "0" }.to_owned());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Parses a headed CSV of raw feature rows (no time or event columns).
pub fn parse_feature_rows<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if names.is_empty() {
        return Err(Error::invalid("feature file has no header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row: row_of(&e, row),
            message: e.to_string(),
        })?;
        let values = rec
            .iter()
            .zip(&names)
            .map(|(cell, name)| parse_number(cell, row, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rows() {
        let csv = "a,time,b,event\n1.5,2.0,3,1\n-1,0.5,0,0\n";
        let d = parse_csv(csv.as_bytes(), "time", "event", "t").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.records[0].features, vec![1.5, 3.0]);
        assert!(d.records[0].event);
        assert_eq!(d.records[1].time, 0.5);
        assert!(!d.records[1].event);
    }

    #[test]
    fn bad_event_names_its_row() {
        let csv = "x,time,event\n1,1,0\n2,1,1\n3,1,2\n";
        match parse_csv(csv.as_bytes(), "time", "event", "t") {
            Err(Error::Parse { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("event"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors() {
        let cases = [
            ("x,time\n1,1\n", "missing"),
            ("x,time,event\n1,0,1\n", "positive"),
            ("x,time,event\nabc,1,1\n", "not a number"),
            ("x,time,event\nNaN,1,1\n", "not finite"),
        ];
        for (csv, needle) in cases {
            let err = parse_csv(csv.as_bytes(), "time", "event", "t").unwrap_err();
            assert!(err.to_string().contains(needle), "{csv:?}: {err}");
        }
        let ragged = "x,time,event\n1,1,1\n1,1\n";
        assert!(matches!(
            parse_csv(ragged.as_bytes(), "time", "event", "t"),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn write_then_reload_round_trips() {
        let csv = "a,b,time,event\n0.1,1e-300,3.141592653589793,1\n-2.5,7,0.3333333333333333,0\n";
        let d = parse_csv(csv.as_bytes(), "time", "event", "t").unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        let back = parse_csv(out.as_slice(), "time", "event", "t").unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn feature_rows() {
        let (names, rows) = parse_feature_rows("x_0,x_1\n0,1\n1,0.5\n".as_bytes()).unwrap();
        assert_eq!(names, vec!["x_0", "x_1"]);
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![1.0, 0.5]]);
    }
}
