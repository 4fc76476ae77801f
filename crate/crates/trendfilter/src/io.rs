use std::io::Read;
use std::path::Path;

use crate::TrendError;

/// A time series read from a two-column text file.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

fn guess_delimiter(text: &str) -> u8 {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    b",\t;".iter().copied().find(|&d| first.contains(d as char)).unwrap_or(b' ')
}

/// Parses `(t, y)` pairs separated by commas, tabs, semicolons or spaces.
/// Blank lines and lines starting with `#` are skipped, as is a first row
/// that does not parse as numbers. Rows must be strictly increasing in `t`.
pub fn read_series<R: Read>(mut reader: R) -> Result<Series, TrendError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(guess_delimiter(&text))
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let line = rec.position().map_or(row as u64 + 1, |p| p.line());
        let parsed: Option<(f64, f64)> = match fields.as_slice() {
            [a, b] => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) if a.is_finite() && b.is_finite() => {
                t.push(a);
                y.push(b);
            }
            _ if t.is_empty() && row == 0 => continue,
            _ => {
                return Err(TrendError::Parse {
                    line,
                    message: format!("expected two numeric fields, found {:?}", fields),
                })
            }
        }
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(TrendError::InvalidArgument("time column must be strictly increasing".into()));
    }
    Ok(Series { t, y })
}

pub fn read_series_file(path: &Path) -> Result<Series, TrendError> {
    read_series(std::fs::File::open(path)?)
}
