//! Dataset files.
//!
//! Binary layout (all integers little-endian):
//! `"WDTL"`, u32 version = 1, u32 n_samples, u32 feature_len = 1000,
//! u8 has_labels, u16 tag length, UTF-8 domain tag, then per sample
//! 1000 f32 values followed (when has_labels) by a u8 label. Label byte
//! `0xFF` marks an unlabeled sample inside a partially labeled set.
//!
//! CSV: header `domain,label,f0,...,f999`, empty label when unlabeled. The
//! domain lives in each row, so an empty CSV set reads back with an empty tag.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::dsp::SPECTRUM_LEN;
use crate::error::{Error, Result};

use super::dataset::{Class, Dataset, Spectrum};

pub const DATASET_MAGIC: &[u8; 4] = b"WDTL";
pub const DATASET_VERSION: u32 = 1;
const UNLABELED: u8 = 0xFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Binary,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "binary" | "bin" => Ok(DataFormat::Binary),
            other => Err(Error::Config(format!("unknown data format `{other}`"))),
        }
    }
}

impl DataFormat {
    /// `.csv` means CSV, anything else binary.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Binary,
        }
    }
}

pub fn encode_binary(ds: &Dataset) -> Result<Vec<u8>> {
    let tag = ds.domain.as_bytes();
    let tag_len = u16::try_from(tag.len())
        .map_err(|_| Error::input(format!("domain tag is {} bytes, limit 65535", tag.len())))?;
    let n = u32::try_from(ds.len()).map_err(|_| Error::input("too many samples for one file"))?;
    let has_labels = ds.samples().iter().any(|s| s.label.is_some());
    let per_sample = SPECTRUM_LEN * 4 + usize::from(has_labels);
    let mut out = Vec::with_capacity(19 + tag.len() + ds.len() * per_sample);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&(SPECTRUM_LEN as u32).to_le_bytes());
    out.push(u8::from(has_labels));
    out.extend_from_slice(&tag_len.to_le_bytes());
    out.extend_from_slice(tag);
    for s in ds.samples() {
        for v in &s.bins {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if has_labels {
            out.push(s.label.map_or(UNLABELED, |c| c as u8));
        }
    }
    Ok(out)
}

/// Little-endian reader that reports the byte offset of any failure.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        ByteReader { bytes, pos: 0, path }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn error_at(&self, pos: usize, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            location: format!("byte {pos}"),
            message: message.into(),
        }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error_at(
                self.pos,
                format!(
                    "truncated: need {n} bytes for {what}, {} left",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let raw = self.take(n * 4, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn utf8(&mut self, n: usize, what: &str) -> Result<String> {
        let start = self.pos;
        let raw = self.take(n, what)?;
        String::from_utf8(raw.to_vec()).map_err(|e| self.error_at(start, format!("{what}: {e}")))
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(self.error_at(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(expected)
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error_at(
                self.pos,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let mut r = ByteReader::new(bytes, path);
    r.magic(DATASET_MAGIC)?;
    let at = r.position();
    let version = r.u32("version")?;
    if version != DATASET_VERSION {
        return Err(r.error_at(at, format!("unsupported version {version}")));
    }
    let n = r.u32("sample count")? as usize;
    let at = r.position();
    let width = r.u32("feature length")? as usize;
    if width != SPECTRUM_LEN {
        return Err(r.error_at(at, format!("feature length {width}, expected {SPECTRUM_LEN}")));
    }
    let at = r.position();
    let has_labels = match r.u8("label flag")? {
        0 => false,
        1 => true,
        other => return Err(r.error_at(at, format!("label flag must be 0 or 1, got {other}"))),
    };
    let tag_len = r.u16("tag length")? as usize;
    let domain = r.utf8(tag_len, "domain tag")?;

    let per_sample = SPECTRUM_LEN * 4 + usize::from(has_labels);
    let remaining = bytes.len() - r.position();
    if remaining < n.saturating_mul(per_sample) {
        return Err(r.error_at(
            bytes.len(),
            format!("truncated: header declares {n} samples ({} bytes), {remaining} present", n.saturating_mul(per_sample)),
        ));
    }
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let bins = r.f32s(SPECTRUM_LEN, "features")?;
        let label = if has_labels {
            let at = r.position();
            match r.u8("label")? {
                UNLABELED => None,
                v => Some(Class::from_index(v as usize).map_err(|_| {
                    r.error_at(at, format!("sample {i}: label {v} outside 0..=3"))
                })?),
            }
        } else {
            None
        };
        samples.push(Spectrum { bins, label });
    }
    r.finish()?;
    Dataset::new(domain, samples)
}

pub fn encode_csv(ds: &Dataset) -> String {
    let mut out = String::with_capacity((ds.len() + 1) * SPECTRUM_LEN * 12);
    out.push_str("domain,label");
    for i in 0..SPECTRUM_LEN {
        let _ = write!(out, ",f{i}");
    }
    out.push('\n');
    for s in ds.samples() {
        out.push_str(&ds.domain);
        out.push(',');
        if let Some(c) = s.label {
            let _ = write!(out, "{}", c.index());
        }
        for v in &s.bins {
            // shortest representation that parses back to the same f32
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != SPECTRUM_LEN + 2 || cols[0] != "domain" || cols[1] != "label" {
        return Err(err(
            1,
            format!(
                "header must be domain,label,f0..f{}; got {} columns",
                SPECTRUM_LEN - 1,
                cols.len()
            ),
        ));
    }
    let mut domain: Option<String> = None;
    let mut samples = Vec::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != SPECTRUM_LEN + 2 {
            return Err(err(
                line,
                format!("expected {} features, found {}", SPECTRUM_LEN, fields.len().saturating_sub(2)),
            ));
        }
        match &domain {
            None => domain = Some(fields[0].to_string()),
            Some(d) if d != fields[0] => {
                return Err(err(line, format!("domain `{}` differs from `{d}`", fields[0])))
            }
            Some(_) => {}
        }
        let label = match fields[1].trim() {
            "" => None,
            v => {
                let idx: usize = v.parse().map_err(|_| err(line, format!("bad label `{v}`")))?;
                Some(Class::from_index(idx).map_err(|e| err(line, e.to_string()))?)
            }
        };
        let bins = fields[2..]
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim()
                    .parse::<f32>()
                    .map_err(|_| err(line, format!("column f{j}: cannot parse `{f}`")))
            })
            .collect::<Result<Vec<f32>>>()?;
        samples.push(Spectrum { bins, label });
    }
    Dataset::new(domain.unwrap_or_default(), samples)
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let bytes = match format {
        DataFormat::Binary => encode_binary(ds)?,
        DataFormat::Csv => encode_csv(ds).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads either format, recognising binary files by their magic.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(DATASET_MAGIC) {
        return decode_binary(&bytes, path);
    }
    if bytes.starts_with(b"domain,") {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            location: format!("byte {}", e.valid_up_to()),
            message: "CSV is not valid UTF-8".into(),
        })?;
        return decode_csv(text, path);
    }
    Err(Error::Format {
        path: path.to_path_buf(),
        location: "byte 0".into(),
        message: "neither a WDTL binary file nor a dataset CSV".into(),
    })
}
