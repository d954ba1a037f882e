//! CSV formats: sweep results and localization tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! an emitted file gives back the exact numbers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rmsmd_core::PointSet;

use crate::config::{PlotConfig, SweepAxis};
use crate::error::{LabError, Result};
use crate::runner::{ReplicateRow, SweepResult};

pub const SWEEP_HEADER: [&str; 11] = [
    "sweep_axis",
    "sweep_value",
    "replicate",
    "rmsmd_X_nm",
    "rmsmd_Xhat_oracle_nm",
    "rmsmd_Xhat_voronoi_nm",
    "rmse_X_nm",
    "rmse_Xhat_nm",
    "bound_upper_nm",
    "bound_lower_nm",
    "seed",
];

pub const LOCALIZATION_HEADER: [&str; 3] = ["emitter_id", "x_nm", "y_nm"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in &result.rows {
        out.write_record([
            result.axis.as_str().to_string(),
            r.sweep_value.to_string(),
            r.replicate.to_string(),
            r.rmsmd_x.to_string(),
            r.rmsmd_xhat_oracle.to_string(),
            r.rmsmd_xhat_voronoi.to_string(),
            r.rmse_x.to_string(),
            r.rmse_xhat.to_string(),
            r.bound_upper.to_string(),
            r.bound_lower.to_string(),
            r.seed.to_string(),
        ])?;
    }
    out.flush().map_err(|e| LabError::io("<csv>", e))?;
    Ok(())
}

pub fn sweep_csv_bytes(result: &SweepResult) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_sweep_csv(result, &mut buf)?;
    Ok(buf)
}

/// Writes the sweep CSV to `path`; an empty result is an error.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(LabError::EmptySweep);
    }
    let bytes = sweep_csv_bytes(result)?;
    std::fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

/// Parses a sweep CSV. The name and plot settings are not stored in the
/// file; the result carries `name` and the default plot settings.
pub fn read_sweep_csv<R: Read>(r: R, name: &str) -> Result<SweepResult> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(parse_err(name, 1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut axis = None;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let a = SweepAxis::parse(&rec[0])
            .ok_or_else(|| parse_err(name, line, format!("unknown sweep axis {:?}", &rec[0])))?;
        if *axis.get_or_insert(a) != a {
            return Err(parse_err(name, line, "mixed sweep axes".to_string()));
        }
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(name, line, format!("{}: not a finite number: {:?}", SWEEP_HEADER[i], &rec[i])))
        };
        let int = |i: usize| -> Result<u64> {
            rec[i]
                .parse::<u64>()
                .map_err(|_| parse_err(name, line, format!("{}: not an integer: {:?}", SWEEP_HEADER[i], &rec[i])))
        };
        rows.push(ReplicateRow {
            sweep_value: f(1)?,
            replicate: int(2)? as usize,
            rmsmd_x: f(3)?,
            rmsmd_xhat_oracle: f(4)?,
            rmsmd_xhat_voronoi: f(5)?,
            rmse_x: f(6)?,
            rmse_xhat: f(7)?,
            bound_upper: f(8)?,
            bound_lower: f(9)?,
            seed: int(10)?,
        });
    }
    Ok(SweepResult {
        name: name.to_string(),
        axis: axis.ok_or(LabError::EmptySweep)?,
        plot: PlotConfig::default(),
        rows,
        panels: Vec::new(),
    })
}

fn parse_err(path: &str, line: u64, reason: String) -> LabError {
    LabError::Parse {
        path: path.to_string(),
        line,
        reason,
    }
}

/// A 2-D localization table; `emitter_id` is −1 where the source is
/// unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationTable {
    pub points: PointSet,
    pub emitter_ids: Vec<i64>,
}

impl LocalizationTable {
    pub fn new(points: PointSet, emitter_ids: Vec<i64>) -> Self {
        assert_eq!(points.len(), emitter_ids.len());
        LocalizationTable {
            points,
            emitter_ids,
        }
    }

    pub fn unlabeled(points: PointSet) -> Self {
        let ids = vec![-1; points.len()];
        LocalizationTable::new(points, ids)
    }
}

pub fn write_localizations<W: Write>(table: &LocalizationTable, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(LOCALIZATION_HEADER)?;
    for (p, id) in table.points.iter().zip(&table.emitter_ids) {
        out.write_record([id.to_string(), p[0].to_string(), p[1].to_string()])?;
    }
    out.flush().map_err(|e| LabError::io("<csv>", e))?;
    Ok(())
}

pub fn emit_localizations(table: &LocalizationTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_localizations(table, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| LabError::io(path, e))
}

/// Reads a localization table. The `emitter_id` column may be omitted, in
/// which case every id is −1.
pub fn read_localizations<R: Read>(r: R, name: &str) -> Result<LocalizationTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    let col = |n: &str| header.iter().position(|h| h == n);
    let (x, y) = match (col("x_nm"), col("y_nm")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(parse_err(name, 1, "header needs x_nm and y_nm columns".to_string())),
    };
    let id = col("emitter_id");
    let mut coords = Vec::new();
    let mut ids = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for c in [x, y] {
            let v: f64 = rec
                .get(c)
                .and_then(|s| s.parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(name, line, format!("{}: not a finite number", &header[c])))?;
            coords.push(v);
        }
        let e = match id {
            None => -1,
            Some(c) => match rec.get(c).unwrap_or("") {
                "" => -1,
                s => s
                    .parse::<i64>()
                    .ok()
                    .filter(|&v| v >= -1)
                    .ok_or_else(|| parse_err(name, line, format!("emitter_id: {s:?} is not an id or -1")))?,
            },
        };
        ids.push(e);
    }
    Ok(LocalizationTable::new(PointSet::from_flat(2, coords)?, ids))
}

pub fn load_localizations(path: &Path) -> Result<LocalizationTable> {
    let f = File::open(path).map_err(|e| LabError::io(path, e))?;
    read_localizations(f, &path.display().to_string())
}
