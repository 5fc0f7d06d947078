//! CSV formats: paths (`t,value`), pyramid dumps (`k,n,h`) and solutions
//! (`t,y1,..,ym`). Reals are written with 17 significant digits, which is
//! enough for an exact round trip.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use roughpath_core::path::grid_point;
use roughpath_core::{AveragePyramid, DyadicPath};

use crate::error::{CliError, CliResult};

/// Per-point tolerance on the `t` column.
pub const GRID_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(field: &str, row: usize, column: &str) -> CliResult<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Schema(format!("row {row}: {column} = {field:?} is not a number")))
}

pub fn read_path<R: Read>(reader: R) -> CliResult<DyadicPath> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(CliError::Schema(format!("expected header t,value, found {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Schema(e.to_string()))?;
        if rec.len() != 2 {
            return Err(CliError::Schema(format!("row {}: expected 2 fields, found {}", i + 1, rec.len())));
        }
        ts.push(parse(&rec[0], i + 1, "t")?);
        vs.push(parse(&rec[1], i + 1, "value")?);
    }
    let n = ts.len();
    if n < 3 || !(n - 1).is_power_of_two() {
        return Err(CliError::Schema(format!("{n} rows; a level-K path has 2^K + 1 rows with K >= 1")));
    }
    if let Some(i) = ts.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(CliError::Schema(format!("t must be increasing (row {})", i + 2)));
    }
    let level = (n - 1).trailing_zeros();
    for (j, t) in ts.iter().enumerate() {
        let expected = grid_point(j, level);
        if (t - expected).abs() > GRID_TOLERANCE {
            return Err(CliError::NonDyadicGrid { row: j + 1, t: *t, expected });
        }
    }
    Ok(DyadicPath::new(vs, level)?)
}

pub fn write_path<W: Write>(writer: W, path: &DyadicPath) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "value"])?;
    for (j, v) in path.samples().iter().enumerate() {
        w.write_record([fmt(grid_point(j, path.level())), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pyramid<W: Write>(writer: W, p: &AveragePyramid) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "n", "h"])?;
    for (k, row) in p.levels().iter().enumerate() {
        for (n, h) in row.iter().enumerate() {
            w.write_record([k.to_string(), n.to_string(), fmt(*h)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `values[i][j] = y_i(t_j)`.
pub fn write_solution<W: Write>(writer: W, times: &[f64], values: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=values.len()).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for (j, t) in times.iter().enumerate() {
        let mut row = vec![fmt(*t)];
        row.extend(values.iter().map(|c| fmt(c[j])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `(seed, residual)` rows for ensemble outputs.
pub fn write_ensemble<W: Write>(writer: W, rows: &[(u64, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["seed", "residual"])?;
    for (s, r) in rows {
        w.write_record([s.to_string(), fmt(*r)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_file(path: &Path) -> CliResult<DyadicPath> {
    let f = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    read_path(BufReader::new(f))
}

/// Opens `path` for writing; `-` means stdout.
pub fn create(path: &Path) -> CliResult<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(std::io::stdout().lock()));
    }
    let f = File::create(path).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
