//! File formats: CSV tables, one-column series, 16-bit PGM frames and the
//! TOML sidecar that carries imaging parameters next to them.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::imaging::{Frame, ImagingParams};
use crate::{Error, Result};

/// Formats a number with nine significant digits, shortest form.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).clamp(0, 14) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{v:.8e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_num(*v)).collect());
    }

    pub fn push(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Parses a one-column numeric series. Blank lines and `#` comments are
/// skipped; every other line must hold exactly one finite number.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => bad.push(i + 1),
        }
    }
    if !bad.is_empty() {
        return Err(Error::MalformedRows { lines: bad });
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "series holds no samples".into(),
        });
    }
    Ok(values)
}

/// Encodes a frame as binary 16-bit PGM (`P5`, big-endian).
///
/// Counts are rounded to whole electrons; values above 65535 are an error.
pub fn encode_pgm(frame: &Frame) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n65535\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.data().len() * 2);
    for (i, &v) in frame.data().iter().enumerate() {
        let r = v.round();
        if r > 65535.0 {
            return Err(Error::param(
                "frame",
                format!("pixel {i} holds {v}, beyond the 16-bit range"),
            ));
        }
        out.extend_from_slice(&(r as u16).to_be_bytes());
    }
    Ok(out)
}

fn pgm_error(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: message.into(),
    }
}

/// Decodes an 8- or 16-bit binary PGM into a frame of electron counts.
pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(pgm_error("truncated PGM header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| pgm_error("non-ASCII PGM header"))?);
    }
    if tokens[0] != "P5" {
        return Err(pgm_error(format!("expected magic P5, found {:?}", tokens[0])));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| pgm_error(format!("bad {what} {s:?}")))
    };
    let width = num(tokens[1], "width")?;
    let height = num(tokens[2], "height")?;
    let maxval = num(tokens[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(pgm_error("PGM dimensions must be non-zero"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_error(format!("maxval {maxval} outside 1..=65535")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(pgm_error("missing whitespace after PGM header"));
    }
    pos += 1;
    let depth = if maxval > 255 { 2 } else { 1 };
    let count = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(depth).is_some())
        .ok_or_else(|| pgm_error("PGM dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() != count * depth {
        return Err(pgm_error(format!(
            "PGM body holds {} bytes, expected {}",
            body.len(),
            count * depth
        )));
    }
    let data: Vec<f64> = if depth == 2 {
        body.chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    } else {
        body.iter().map(|&b| f64::from(b)).collect()
    };
    Frame::new(width, height, data)
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    write_atomic(path, &encode_pgm(frame)?)
}

pub fn read_pgm(path: &Path) -> Result<Frame> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn encode_sidecar(params: &ImagingParams) -> Result<String> {
    toml::to_string(params).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_sidecar(text: &str) -> Result<ImagingParams> {
    let p: ImagingParams = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    p.validate()?;
    Ok(p)
}
