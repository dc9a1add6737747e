//! CSV datasets, binary model files and key=value reports.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, VttnError};
use crate::model::{SystemShape, TnCore, VolterraModel};
use crate::regressor::TimeSeriesDataset;
use crate::solvers::SolverReport;

pub const MODEL_MAGIC: &[u8; 5] = b"VTTN1";
const SCALAR_WIDTH: u8 = 8;

fn csv_err(path: &Path, message: impl Into<String>) -> VttnError {
    VttnError::Csv {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy)]
enum Column {
    Input(usize),
    Output(usize),
    Time,
}

fn parse_header(path: &Path, name: &str) -> Result<Column> {
    let name = name.trim();
    let channel = |rest: &str| -> Option<usize> { rest.parse::<usize>().ok().filter(|&c| c >= 1) };
    if name.eq_ignore_ascii_case("t") {
        return Ok(Column::Time);
    }
    if let Some(c) = name.strip_prefix('u').and_then(channel) {
        return Ok(Column::Input(c - 1));
    }
    if let Some(c) = name.strip_prefix('y').and_then(channel) {
        return Ok(Column::Output(c - 1));
    }
    Err(csv_err(path, format!("unrecognized column {name:?} (expected u1..up, y1..yl or t)")))
}

/// Reads a dataset with header `u1..up, y1..yl` and an optional `t` column.
///
/// Columns may appear in any order; channel numbers must be contiguous from 1.
pub fn load_csv(path: &Path) -> Result<TimeSeriesDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(csv_err(path, "missing header row"));
    }
    let columns: Vec<Column> = headers.iter().map(|h| parse_header(path, h)).collect::<Result<_>>()?;
    let count = |pick: fn(&Column) -> Option<usize>| -> Result<usize> {
        let mut seen: Vec<usize> = columns.iter().filter_map(pick).collect();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &c)| i != c) {
            return Err(csv_err(path, "channel columns must be numbered 1..k without gaps or repeats"));
        }
        Ok(seen.len())
    };
    let p = count(|c| match c {
        Column::Input(i) => Some(*i),
        _ => None,
    })?;
    let l = count(|c| match c {
        Column::Output(i) => Some(*i),
        _ => None,
    })?;
    if p == 0 {
        return Err(csv_err(path, "no input columns (u1..up)"));
    }
    let mut times = Vec::new();
    let mut inputs = vec![Vec::new(); p];
    let mut outputs = vec![Vec::new(); l];
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_err(path, format!("line {line}: {e}")))?;
        if record.len() != columns.len() {
            return Err(csv_err(
                path,
                format!("line {line}: {} fields, header has {}", record.len(), columns.len()),
            ));
        }
        for (field, (col, name)) in record.iter().zip(columns.iter().zip(headers.iter())) {
            let v: f64 = field
                .parse()
                .map_err(|_| csv_err(path, format!("line {line}, column {name}: non-numeric value {field:?}")))?;
            match *col {
                Column::Input(i) => inputs[i].push(v),
                Column::Output(i) => outputs[i].push(v),
                Column::Time => times.push(v),
            }
        }
    }
    if inputs[0].is_empty() {
        return Err(csv_err(path, "dataset has no rows"));
    }
    let sample_rate = match times.as_slice() {
        [t0, t1, ..] if t1 > t0 => Some(1.0 / (t1 - t0)),
        _ => None,
    };
    TimeSeriesDataset::new(inputs, outputs, sample_rate)
}

/// Writes a dataset; values use 17 significant digits so they read back exactly.
pub fn save_csv(path: &Path, data: &TimeSeriesDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    let with_t = data.sample_rate().is_some();
    let mut header: Vec<String> = Vec::new();
    if with_t {
        header.push("t".into());
    }
    header.extend((1..=data.p()).map(|i| format!("u{i}")));
    header.extend((1..=data.l()).map(|i| format!("y{i}")));
    w.write_record(&header).map_err(|e| csv_err(path, e.to_string()))?;
    for t in 0..data.len() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(fs) = data.sample_rate() {
            rec.push(format!("{:.16e}", t as f64 / fs));
        }
        rec.extend(data.inputs().iter().map(|c| format!("{:.16e}", c[t])));
        rec.extend(data.outputs().iter().map(|c| format!("{:.16e}", c[t])));
        w.write_record(&rec).map_err(|e| csv_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an `N × l` output matrix with header `y1..yl`.
pub fn save_outputs_csv(path: &Path, y: &nalgebra::DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e.to_string()))?;
    let header: Vec<String> = (1..=y.ncols()).map(|i| format!("y{i}")).collect();
    w.write_record(&header).map_err(|e| csv_err(path, e.to_string()))?;
    for row in y.row_iter() {
        let rec: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| VttnError::ModelFile(format!("{v} does not fit in a u32 header field")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

/// Serializes a model: magic, `p l M d`, the rank chain, the scalar width,
/// the cores as little-endian doubles and a CRC32 of that payload.
pub fn model_to_bytes(model: &VolterraModel) -> Result<Vec<u8>> {
    let shape = model.shape();
    let mut buf = Vec::with_capacity(32 + 8 * model.parameter_count());
    buf.extend_from_slice(MODEL_MAGIC);
    for v in [shape.p, shape.l, shape.memory, shape.degree] {
        put_u32(&mut buf, v)?;
    }
    for r in model.ranks() {
        put_u32(&mut buf, r)?;
    }
    buf.push(SCALAR_WIDTH);
    let start = buf.len();
    for core in model.cores() {
        for v in core.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf[start..]);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| VttnError::ModelFile("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<VolterraModel> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(MODEL_MAGIC.len()).ok() != Some(MODEL_MAGIC.as_slice()) {
        return Err(VttnError::ModelFile("unknown magic, not a VTTN1 model".into()));
    }
    let (p, l, memory, degree) = (c.u32()?, c.u32()?, c.u32()?, c.u32()?);
    let shape = SystemShape::new(p, l, memory, degree)?;
    let ranks = (0..=degree).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
    shape.validate_ranks(&ranks)?;
    let width = c.take(1)?[0];
    if width != SCALAR_WIDTH {
        return Err(VttnError::ModelFile(format!("unsupported scalar width {width}")));
    }
    let n = shape.n();
    let count: usize = (0..degree).map(|k| ranks[k] * n * ranks[k + 1]).sum();
    let payload = c.take(count * 8)?;
    let stored = {
        let b = c.take(4)?;
        u32::from_le_bytes([b[0], b[1], b[2], b[3]])
    };
    if c.pos != bytes.len() {
        return Err(VttnError::ModelFile(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(VttnError::Checksum { stored, computed });
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    let mut cores = Vec::with_capacity(degree);
    for k in 0..degree {
        let len = ranks[k] * n * ranks[k + 1];
        cores.push(TnCore::new(ranks[k], n, ranks[k + 1], values.by_ref().take(len).collect())?);
    }
    VolterraModel::new(shape, cores)
}

pub fn save_model(path: &Path, model: &VolterraModel) -> Result<()> {
    let bytes = model_to_bytes(model)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<VolterraModel> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    model_from_bytes(&bytes)
}

/// Line-oriented `key=value` report followed by a residual-trace block.
pub fn format_report(report: &SolverReport, extra: &[(&str, String)]) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("algorithm", report.algorithm.to_string());
    kv("converged", report.converged.to_string());
    kv("sweeps", report.sweeps_used.to_string());
    kv("half_sweeps", report.half_sweeps.to_string());
    kv("ranks", join(&report.final_ranks));
    kv("max_rank", report.max_rank().to_string());
    kv("initial_residual", format!("{:.16e}", report.initial_residual));
    kv("final_residual", format!("{:.16e}", report.final_residual()));
    let audit = report.orthogonality_audit.iter().copied().fold(0.0, f64::max);
    kv("orthogonality_defect", format!("{audit:.3e}"));
    for (k, v) in extra {
        kv(k, v.clone());
    }
    out.push_str("[residual_trace]\n");
    for (i, r) in report.residual_trace.iter().enumerate() {
        out.push_str(&format!("{i} {r:.16e}\n"));
    }
    out
}
