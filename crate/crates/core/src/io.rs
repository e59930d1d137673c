//! Delimited-text ingest and export for detections, ground truths and
//! budget tables.
//!
//! Files are comma separated with a header row; blank lines and lines
//! starting with `#` are skipped; fields are trimmed. Every bad row is
//! reported with its line number before the load fails.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::detgeom::{BoundingBox, DetectionRecord, GroundTruthRecord};
use crate::detmetrics::MetricsDataset;
use crate::error::{Error, Result, RowProblem};
use crate::hitprob::{BudgetTable, ErrorBudget};

pub const DETECTION_HEADER: [&str; 6] = ["image_id", "x1", "y1", "x2", "y2", "confidence"];
pub const GROUND_TRUTH_HEADER: [&str; 5] = ["image_id", "x1", "y1", "x2", "y2"];
pub const BUDGET_HEADER: [&str; 5] = ["range_m", "mu_x_m", "mu_y_m", "sigma_x_m", "sigma_y_m"];

#[derive(Deserialize)]
struct BoxRow {
    image_id: String,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    confidence: Option<f64>,
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

fn parse_rows<R: Read, T, F>(r: R, path: &Path, required: &[&str], mut convert: F) -> Result<Vec<T>>
where
    F: FnMut(csv::StringRecord, &csv::StringRecord) -> std::result::Result<T, String>,
{
    let mut rdr = reader(r);
    let header = rdr
        .headers()
        .map_err(|e| Error::Ingest {
            path: path.into(),
            problems: vec![RowProblem {
                line: 1,
                message: e.to_string(),
            }],
        })?
        .clone();
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|c| !header.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        let line = header.position().map_or(1, |p| p.line());
        return Err(Error::Ingest {
            path: path.into(),
            problems: vec![RowProblem {
                line,
                message: format!("header is missing column(s) {}", missing.join(", ")),
            }],
        });
    }
    let mut out = vec![];
    let mut problems = vec![];
    for rec in rdr.records() {
        match rec {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line());
                match convert(rec, &header) {
                    Ok(v) => out.push(v),
                    Err(message) => problems.push(RowProblem { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(RowProblem {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::Ingest {
            path: path.into(),
            problems,
        })
    }
}

fn box_row(
    rec: &csv::StringRecord,
    header: &csv::StringRecord,
) -> std::result::Result<(BoxRow, BoundingBox), String> {
    let row: BoxRow = rec.deserialize(Some(header)).map_err(|e| e.to_string())?;
    let b = BoundingBox::new(row.x1, row.y1, row.x2, row.y2).map_err(|e| e.to_string())?;
    if row.image_id.is_empty() {
        return Err("empty image_id".into());
    }
    Ok((row, b))
}

pub fn parse_detections<R: Read>(r: R, path: &Path) -> Result<Vec<DetectionRecord>> {
    parse_rows(r, path, &DETECTION_HEADER, |rec, h| {
        let (row, b) = box_row(&rec, h)?;
        let c = row.confidence.ok_or("missing confidence")?;
        DetectionRecord::new(row.image_id, b, c).map_err(|e| e.to_string())
    })
}

pub fn parse_ground_truths<R: Read>(r: R, path: &Path) -> Result<Vec<GroundTruthRecord>> {
    parse_rows(r, path, &GROUND_TRUTH_HEADER, |rec, h| {
        let (row, b) = box_row(&rec, h)?;
        if row.confidence.is_some() {
            return Err("ground truth rows carry no confidence".into());
        }
        if b.area() <= 0.0 {
            return Err("ground truth box has zero area".into());
        }
        Ok(GroundTruthRecord::new(row.image_id, b))
    })
}

pub fn parse_budget_table<R: Read>(r: R, path: &Path) -> Result<BudgetTable> {
    let rows = parse_rows(r, path, &BUDGET_HEADER, |rec, h| {
        let b: ErrorBudget = rec.deserialize(Some(h)).map_err(|e| e.to_string())?;
        b.validate().map_err(|e| e.to_string())?;
        Ok(b)
    })?;
    BudgetTable::new(rows).map_err(|e| match e {
        Error::EmptyTable => Error::Ingest {
            path: path.into(),
            problems: vec![RowProblem {
                line: 1,
                message: "budget table has no rows".into(),
            }],
        },
        other => Error::Ingest {
            path: path.into(),
            problems: vec![RowProblem {
                line: 0,
                message: other.to_string(),
            }],
        },
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    let path = path.as_ref();
    parse_detections(open(path)?, path)
}

pub fn read_ground_truths(path: impl AsRef<Path>) -> Result<Vec<GroundTruthRecord>> {
    let path = path.as_ref();
    parse_ground_truths(open(path)?, path)
}

pub fn read_budget_table(path: impl AsRef<Path>) -> Result<BudgetTable> {
    let path = path.as_ref();
    parse_budget_table(open(path)?, path)
}

pub fn read_dataset(
    detections: impl AsRef<Path>,
    ground_truths: impl AsRef<Path>,
) -> Result<MetricsDataset> {
    MetricsDataset::new(
        read_detections(detections)?,
        read_ground_truths(ground_truths)?,
    )
}

/// Writes a CSV file in one go, creating parent directories.
pub struct CsvOut {
    path: PathBuf,
    inner: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new(path: impl Into<PathBuf>, header: &[&str]) -> Result<Self> {
        let path = path.into();
        let mut inner = csv::WriterBuilder::new().from_writer(vec![]);
        inner.write_record(header).map_err(|e| csv_err(&path, e))?;
        Ok(Self { path, inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(self) -> Result<PathBuf> {
        let bytes = self
            .inner
            .into_inner()
            .map_err(|e| Error::io(&self.path, std::io::Error::other(e.to_string())))?;
        write_file(&self.path, &bytes)?;
        Ok(self.path)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Shortest text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_detections(path: impl Into<PathBuf>, dets: &[DetectionRecord]) -> Result<PathBuf> {
    let mut w = CsvOut::new(path, &DETECTION_HEADER)?;
    for d in dets {
        let [x1, y1, x2, y2] = d.bbox.corners();
        w.row([
            d.image_id.0.clone(),
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(d.confidence),
        ])?;
    }
    w.finish()
}

pub fn write_ground_truths(path: impl Into<PathBuf>, gts: &[GroundTruthRecord]) -> Result<PathBuf> {
    let mut w = CsvOut::new(path, &GROUND_TRUTH_HEADER)?;
    for g in gts {
        let [x1, y1, x2, y2] = g.bbox.corners();
        w.row([g.image_id.0.clone(), num(x1), num(y1), num(x2), num(y2)])?;
    }
    w.finish()
}

pub fn write_budget_table(path: impl Into<PathBuf>, table: &BudgetTable) -> Result<PathBuf> {
    let mut w = CsvOut::new(path, &BUDGET_HEADER)?;
    for r in table.rows() {
        w.row([
            num(r.range_m),
            num(r.mu_x_m),
            num(r.mu_y_m),
            num(r.sigma_x_m),
            num(r.sigma_y_m),
        ])?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn parses_with_comments_and_spaces() {
        let text = "# exported\nimage_id, x1, y1, x2, y2, confidence\n\na, 1, 2, 3, 4, 0.5\n# mid comment\nb,0,0,10,10,1\n";
        let d = parse_detections(text.as_bytes(), p()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[1].image_id.0, "b");
        assert_eq!(d[0].bbox.corners(), [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bad_rows_listed_with_lines() {
        let text = "image_id,x1,y1,x2,y2,confidence\na,1,2,3,4,0.5\nb,5,0,4,1,0.5\nc,0,0,1,1,1.5\nd,0,0,1,x,0.2\n";
        let err = parse_detections(text.as_bytes(), p()).unwrap_err();
        let Error::Ingest { problems, .. } = err else {
            panic!("{err}")
        };
        assert_eq!(
            problems.iter().map(|p| p.line).collect::<Vec<_>>(),
            vec![3, 4, 5]
        );
        assert!(
            problems[0].message.contains("inverted"),
            "{}",
            problems[0].message
        );
    }

    #[test]
    fn missing_column_rejected() {
        let err =
            parse_detections("image_id,x1,y1,x2,y2\na,0,0,1,1\n".as_bytes(), p()).unwrap_err();
        assert!(err.to_string().contains("confidence"));
        let err = parse_ground_truths(
            "image_id,x1,y1,x2,y2,confidence\na,0,0,1,1,0.3\n".as_bytes(),
            p(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("no confidence"));
    }

    #[test]
    fn budget_rows_must_increase() {
        let text = "range_m,mu_x_m,mu_y_m,sigma_x_m,sigma_y_m\n1000,0,0,1,1\n500,0,0,1,1\n";
        assert!(parse_budget_table(text.as_bytes(), p()).is_err());
        let bad = "range_m,mu_x_m,mu_y_m,sigma_x_m,sigma_y_m\n1000,0,0,-1,1\n";
        assert!(matches!(
            parse_budget_table(bad.as_bytes(), p()),
            Err(Error::Ingest { .. })
        ));
        let empty = "range_m,mu_x_m,mu_y_m,sigma_x_m,sigma_y_m\n";
        assert!(parse_budget_table(empty.as_bytes(), p()).is_err());
    }
}
