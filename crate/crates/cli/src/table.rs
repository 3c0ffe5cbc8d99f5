//! CSV result tables.
//!
//! Comma separated, header row, LF line endings, floats written with 17
//! significant digits in scientific notation so every value survives a
//! parse/emit cycle bit for bit.

use emitter_core::montecarlo::SweepRow;
use emitter_core::{CalibrationTable, DetectorKind, RocPoint, TwTable};

use crate::error::{CliError, Result};

/// Marker written in place of a miss probability for a degenerate detector.
pub const ABSENT: &str = "absent";

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Field {
    fn parse(raw: &str) -> Self {
        let integer = !raw.is_empty()
            && raw
                .strip_prefix('-')
                .unwrap_or(raw)
                .bytes()
                .all(|b| b.is_ascii_digit());
        if integer {
            if let Ok(v) = raw.parse() {
                return Field::Int(v);
            }
        }
        let numeric = raw.bytes().any(|b| b.is_ascii_digit());
        match raw.parse::<f64>() {
            Ok(v) if numeric => Field::Float(v),
            _ => Field::Text(raw.to_string()),
        }
    }

    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format_f64(*v),
            Field::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Int(v) => Some(*v as f64),
            Field::Float(v) => Some(*v),
            Field::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Field::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Field::render))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(Field::parse).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }
}

fn text(s: &str) -> Field {
    Field::Text(s.to_string())
}

pub fn roc_table(points: &[RocPoint]) -> Table {
    let mut t = Table::new(&["detector", "pfa", "pd"]);
    for p in points {
        t.push(vec![
            text(p.detector.name()),
            Field::Float(p.pfa),
            Field::Float(p.pd),
        ]);
    }
    t
}

pub fn pmiss_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&["n", "detector", "pmiss", "trials_used"]);
    for row in rows {
        for e in &row.entries {
            t.push(vec![
                Field::Int(row.n_antennas as i64),
                text(e.detector.name()),
                e.pmiss.map_or_else(|| text(ABSENT), Field::Float),
                Field::Int(e.trials_used as i64),
            ]);
        }
    }
    t
}

pub fn calibration_table(cal: &CalibrationTable) -> Table {
    let mut t = Table::new(&["detector", "pfa", "threshold"]);
    for e in cal.entries() {
        t.push(vec![
            text(e.kind.name()),
            Field::Float(e.pfa),
            Field::Float(e.threshold),
        ]);
    }
    t
}

/// Reads a table written by [`calibration_table`].
pub fn parse_calibration(text_in: &str) -> Result<CalibrationTable> {
    let t = Table::parse(text_in)?;
    let (Some(d), Some(p), Some(th)) =
        (t.column("detector"), t.column("pfa"), t.column("threshold"))
    else {
        return Err(CliError::Format(
            "calibration CSV needs detector, pfa, threshold columns".into(),
        ));
    };
    let mut cal = CalibrationTable::new();
    for (i, row) in t.rows.iter().enumerate() {
        let bad = || CliError::Format(format!("calibration row {}", i + 1));
        let kind: DetectorKind = row[d].as_str().ok_or_else(bad)?.parse()?;
        cal.insert(
            kind,
            row[p].as_f64().ok_or_else(bad)?,
            row[th].as_f64().ok_or_else(bad)?,
        );
    }
    Ok(cal)
}

pub fn tw_table(table: &TwTable) -> Table {
    let mut t = Table::new(&["t", "cdf"]);
    for (x, p) in table.grid().iter().zip(table.cdf_values()) {
        t.push(vec![Field::Float(*x), Field::Float(*p)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use emitter_core::montecarlo::SweepEntry;
    use proptest::prelude::*;

    #[test]
    fn float_format_is_fixed_width() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-5.0), "-5.0000000000000000e0");
        assert_eq!(format_f64(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn pmiss_absent_marker() {
        let rows = vec![SweepRow {
            n_antennas: 512,
            entries: vec![
                SweepEntry {
                    detector: DetectorKind::Glrt,
                    pmiss: None,
                    trials_used: 0,
                },
                SweepEntry {
                    detector: DetectorKind::RMaxNv,
                    pmiss: Some(0.25),
                    trials_used: 1000,
                },
            ],
        }];
        let csv = pmiss_table(&rows).to_csv().unwrap();
        assert_eq!(
            csv,
            "n,detector,pmiss,trials_used\n512,glrt,absent,0\n512,r-max-nv,2.5000000000000000e-1,1000\n"
        );
        assert_eq!(Table::parse(&csv).unwrap().to_csv().unwrap(), csv);
    }

    #[test]
    fn calibration_round_trip() {
        let mut cal = CalibrationTable::new();
        cal.insert(DetectorKind::Glrt, 0.1, 1.2345678901234567);
        cal.insert(DetectorKind::MMaxMin, 0.05, 2.5);
        let csv = calibration_table(&cal).to_csv().unwrap();
        assert_eq!(parse_calibration(&csv).unwrap(), cal);
        assert!(parse_calibration("a,b\n1,2\n").is_err());
    }

    proptest! {
        #[test]
        fn roc_csv_reemits_identically(
            values in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20)
        ) {
            let points: Vec<RocPoint> = values
                .iter()
                .map(|(pfa, pd)| RocPoint { detector: DetectorKind::RMaxMin, pfa: *pfa, pd: *pd })
                .collect();
            let csv = roc_table(&points).to_csv().unwrap();
            let parsed = Table::parse(&csv).unwrap();
            prop_assert_eq!(parsed.to_csv().unwrap(), csv);
            for (row, p) in parsed.rows.iter().zip(&points) {
                prop_assert_eq!(row[1].as_f64().unwrap(), p.pfa);
            }
        }
    }
}
