//! File formats: comma-separated sample, frontier and plot-data tables, and
//! JSON documents for models and search results.
//!
//! Measured reals are written with 17 significant digits, so every file
//! reads back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::design_space::{decode16, BackboneSpec, CodesignPoint, HwConfig, Ratio, ENCODED_CELLS};
use crate::error::{Error, Result};
use crate::gp::{FitMetadata, GpModel, Hyperparameters, KernelFamily, Standardizer, TargetKind};
use crate::linalg::Matrix;
use crate::pareto::ParetoPoint;
use crate::sampling::{LossSample, PerfSample};

const HW_COLUMNS: [&str; 5] = ["pf", "pc", "pv", "bw", "mem"];

pub const MODEL_FORMAT: &str = "codesign-gp-model";
pub const MODEL_VERSION: u32 = 1;

fn encoding_columns() -> Vec<String> {
    (0..ENCODED_CELLS).map(|i| format!("e{i}")).collect()
}

pub fn loss_header() -> Vec<String> {
    let mut h = encoding_columns();
    h.push("ce".into());
    h
}

pub fn perf_header() -> Vec<String> {
    let mut h = encoding_columns();
    h.extend(HW_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(["latency_ms".into(), "power_w".into()]);
    h
}

pub fn points_header() -> Vec<String> {
    let mut h = encoding_columns();
    h.extend(HW_COLUMNS.iter().map(|s| s.to_string()));
    for c in ["ce", "latency_ms", "power_w", "dsp_used", "mem_used", "on_frontier"] {
        h.push(c.into());
    }
    h
}

pub const PLOT_HEADER: [&str; 3] = ["ce", "latency_ms", "power_w"];

/// 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path_str(path),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path_str(path),
        source,
    })
}

fn push_encoding(line: &mut String, point: &CodesignPoint) {
    for v in crate::design_space::encode16(&point.arch) {
        let _ = write!(line, "{v},");
    }
}

fn push_hw(line: &mut String, hw: &HwConfig) {
    let _ = write!(line, "{},{},{},{},{},", hw.pf, hw.pc, hw.pv, hw.bw, hw.mem);
}

fn table(header: &[String], rows: impl Iterator<Item = String>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// A parsed table row that reports failures by row and column name.
struct Row<'a> {
    path: &'a str,
    header: &'a [String],
    index: usize,
    fields: csv::StringRecord,
}

impl Row<'_> {
    fn error(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            row: self.index,
            column: self.header[col].clone(),
            message: message.into(),
        }
    }

    fn raw(&self, col: usize) -> &str {
        self.fields.get(col).unwrap_or("").trim()
    }

    fn real(&self, col: usize) -> Result<f64> {
        let s = self.raw(col);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(self.error(col, format!("{s:?} is not finite"))),
            Err(_) => Err(self.error(col, format!("{s:?} is not a number"))),
        }
    }

    fn int<I: std::str::FromStr>(&self, col: usize) -> Result<I> {
        let s = self.raw(col);
        s.parse::<I>()
            .map_err(|_| self.error(col, format!("{s:?} is not a non-negative integer")))
    }

    fn encoding(&self) -> Result<[f64; ENCODED_CELLS]> {
        let mut out = [0.0; ENCODED_CELLS];
        for (i, o) in out.iter_mut().enumerate() {
            let v = self.real(i)?;
            if Ratio::from_value(v).is_none() {
                return Err(self.error(i, format!("{v} is not an expansion ratio (0, 0.5, 0.75, 1)")));
            }
            *o = v;
        }
        Ok(out)
    }

    /// Decodes the encoding and hardware columns, which start at `ENCODED_CELLS`.
    fn point(&self, backbone: &BackboneSpec) -> Result<CodesignPoint> {
        let enc = self.encoding()?;
        let arch = decode16(&enc, backbone).map_err(|e| self.error(0, e.to_string()))?;
        let c = ENCODED_CELLS;
        let hw = HwConfig {
            pf: self.int(c)?,
            pc: self.int(c + 1)?,
            pv: self.int(c + 2)?,
            bw: self.int(c + 3)?,
            mem: self.int(c + 4)?,
        };
        hw.validate().map_err(|e| self.error(c, e.to_string()))?;
        Ok(CodesignPoint { arch, hw })
    }
}

fn read_table<T>(path: &Path, header: &[String], mut parse: impl FnMut(&Row) -> Result<T>) -> Result<Vec<T>> {
    let text = read_text(path)?;
    let p = path_str(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header_error = |column: &str, message: String| Error::Parse {
        path: p.clone(),
        row: 0,
        column: column.to_string(),
        message,
    };
    let found = match records.next() {
        None => return Err(header_error("", "file is empty".into())),
        Some(r) => r.map_err(|e| header_error("", e.to_string()))?,
    };
    for (i, want) in header.iter().enumerate() {
        match found.get(i).map(str::trim) {
            Some(got) if got == want => {}
            got => return Err(header_error(want, format!("expected header {want:?}, found {got:?}"))),
        }
    }
    if found.len() != header.len() {
        return Err(header_error("", format!("expected {} columns, found {}", header.len(), found.len())));
    }
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let index = i + 1;
        let fields = rec.map_err(|e| Error::Parse {
            path: p.clone(),
            row: index,
            column: String::new(),
            message: e.to_string(),
        })?;
        let row = Row {
            path: &p,
            header,
            index,
            fields,
        };
        if row.fields.len() != header.len() {
            let col = row.fields.len().min(header.len() - 1);
            return Err(row.error(col, format!("expected {} fields, found {}", header.len(), row.fields.len())));
        }
        out.push(parse(&row)?);
    }
    Ok(out)
}

pub fn format_loss_samples(samples: &[LossSample]) -> String {
    table(
        &loss_header(),
        samples.iter().map(|s| {
            let mut line = String::new();
            for v in s.encoding {
                let _ = write!(line, "{v},");
            }
            line.push_str(&fmt_real(s.ce));
            line
        }),
    )
}

pub fn write_loss_samples(path: &Path, samples: &[LossSample]) -> Result<()> {
    write_text(path, &format_loss_samples(samples))
}

/// Reads `e0..e15,ce` rows. The encodings are checked to be ratio values but
/// not decoded, so files from any backbone of up to 16 cells load.
pub fn read_loss_samples(path: &Path) -> Result<Vec<LossSample>> {
    let header = loss_header();
    read_table(path, &header, |row| {
        Ok(LossSample {
            encoding: row.encoding()?,
            ce: row.real(ENCODED_CELLS)?,
        })
    })
}

pub fn format_perf_samples(samples: &[PerfSample]) -> String {
    table(
        &perf_header(),
        samples.iter().map(|s| {
            let mut line = String::new();
            push_encoding(&mut line, &s.point);
            push_hw(&mut line, &s.point.hw);
            let _ = write!(line, "{},{}", fmt_real(s.latency_ms), fmt_real(s.power_w));
            line
        }),
    )
}

pub fn write_perf_samples(path: &Path, samples: &[PerfSample]) -> Result<()> {
    write_text(path, &format_perf_samples(samples))
}

pub fn read_perf_samples(path: &Path, backbone: &BackboneSpec) -> Result<Vec<PerfSample>> {
    let header = perf_header();
    let c = ENCODED_CELLS + HW_COLUMNS.len();
    read_table(path, &header, |row| {
        Ok(PerfSample {
            point: row.point(backbone)?,
            latency_ms: row.real(c)?,
            power_w: row.real(c + 1)?,
        })
    })
}

pub fn format_points(points: &[ParetoPoint]) -> String {
    table(
        &points_header(),
        points.iter().map(|p| {
            let mut line = String::new();
            push_encoding(&mut line, &p.point);
            push_hw(&mut line, &p.point.hw);
            let _ = write!(
                line,
                "{},{},{},{},{},{}",
                fmt_real(p.ce),
                fmt_real(p.latency_ms),
                fmt_real(p.energy),
                p.dsp_used,
                p.mem_used,
                u8::from(p.on_frontier)
            );
            line
        }),
    )
}

pub fn write_points(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    write_text(path, &format_points(points))
}

pub fn read_points(path: &Path, backbone: &BackboneSpec) -> Result<Vec<ParetoPoint>> {
    let header = points_header();
    let c = ENCODED_CELLS + HW_COLUMNS.len();
    read_table(path, &header, |row| {
        let on_frontier = match row.raw(c + 5) {
            "0" => false,
            "1" => true,
            s => return Err(row.error(c + 5, format!("{s:?} is not 0 or 1"))),
        };
        Ok(ParetoPoint {
            point: row.point(backbone)?,
            ce: row.real(c)?,
            latency_ms: row.real(c + 1)?,
            energy: row.real(c + 2)?,
            dsp_used: row.int(c + 3)?,
            mem_used: row.int(c + 4)?,
            on_frontier,
        })
    })
}

/// Three columns per point, for external plotting.
pub fn format_plot_data(points: &[ParetoPoint]) -> String {
    let header: Vec<String> = PLOT_HEADER.iter().map(|s| s.to_string()).collect();
    table(
        &header,
        points
            .iter()
            .map(|p| format!("{},{},{}", fmt_real(p.ce), fmt_real(p.latency_ms), fmt_real(p.energy))),
    )
}

pub fn write_plot_data(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    write_text(path, &format_plot_data(points))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path_str(path),
        message: e.to_string(),
    })
}

/// On-disk form of a fitted GP: hyperparameters, input standardization and
/// the full training set, enough to rebuild identical predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub target: TargetKind,
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub constant_mean: f64,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub train_inputs: Vec<Vec<f64>>,
    pub train_targets: Vec<f64>,
    pub metadata: FitMetadata,
}

impl ModelDocument {
    pub fn from_model(model: &GpModel<f64>, target: TargetKind) -> Self {
        let h = model.hyperparameters();
        let s = model.standardizer();
        let x = model.train_inputs();
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            target,
            family: h.family,
            lengthscales: h.lengthscales.clone(),
            signal_variance: h.signal_variance,
            noise_variance: h.noise_variance,
            constant_mean: h.constant_mean,
            input_mean: s.mean.clone(),
            input_scale: s.scale.clone(),
            train_inputs: (0..x.rows()).map(|i| x.row(i).to_vec()).collect(),
            train_targets: model.train_targets().to_vec(),
            metadata: model.metadata().clone(),
        }
    }

    pub fn into_model(self) -> Result<GpModel<f64>> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format {:?} version {}",
                self.format, self.version
            )));
        }
        let d = self.target.input_dim();
        if self.lengthscales.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.lengthscales.len(),
            });
        }
        let n = self.train_inputs.len();
        let mut flat = Vec::with_capacity(n * d);
        for row in &self.train_inputs {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        let hyper = Hyperparameters {
            family: self.family,
            lengthscales: self.lengthscales,
            signal_variance: self.signal_variance,
            noise_variance: self.noise_variance,
            constant_mean: self.constant_mean,
        };
        let standardizer = Standardizer {
            mean: self.input_mean,
            scale: self.input_scale,
        };
        let model = GpModel::new(hyper, standardizer, Matrix::from_rows(n, d, flat)?, self.train_targets)?;
        Ok(model.with_metadata(self.metadata))
    }
}

pub fn save_model(path: &Path, model: &GpModel<f64>, target: TargetKind) -> Result<()> {
    write_json(path, &ModelDocument::from_model(model, target))
}

pub fn load_model(path: &Path) -> Result<(GpModel<f64>, TargetKind)> {
    let doc: ModelDocument = read_json(path)?;
    let target = doc.target;
    let model = doc.into_model().map_err(|e| Error::Format {
        path: path_str(path),
        message: e.to_string(),
    })?;
    Ok((model, target))
}
