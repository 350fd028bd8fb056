//! Signal-block file formats and report persistence.
//!
//! Two block formats are supported, both carrying the fixed-point format in
//! their header so a file is self-describing and round-trips bit-exactly:
//!
//! * **CSV** — first line `N,M,frac_bits,word_length`, then `N` lines of `M`
//!   comma-separated `re:im` pairs of *raw* integer values.
//! * **Raw** — a 16-byte little-endian header (magic `ICAP`, `u16` N, `u16`
//!   M, `u8` word_length, `u8` frac_bits, six reserved zero bytes) followed
//!   by row-major interleaved `i16` raw pairs.
//!
//! Reports are JSON documents written with a trailing newline.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::{CFix, FixFormat};
use crate::matrix::CMat;
use crate::report::RunReport;

/// Magic bytes opening a raw block file.
pub const RAW_MAGIC: &[u8; 4] = b"ICAP";
/// Raw header length in bytes.
pub const RAW_HEADER_LEN: usize = 16;

fn parse_err(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        location: location.into(),
        message: message.into(),
    }
}

/// Writes a block as CSV with raw integer components.
pub fn write_csv(path: &Path, m: &CMat) -> Result<()> {
    let fmt = m.fmt();
    let mut text = format!(
        "{},{},{},{}\n",
        m.rows(),
        m.cols(),
        fmt.frac_bits(),
        fmt.word_length()
    );
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| {
                let z = m.get(i, j);
                format!("{}:{}", z.re.raw(), z.im.raw())
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads a CSV block written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<CMat> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, "line 1", "empty file"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 4 {
        return Err(parse_err(
            path,
            "line 1",
            format!(
                "header needs 4 fields N,M,frac_bits,word_length, got {}",
                fields.len()
            ),
        ));
    }
    let parse_u = |s: &str, what: &str| -> Result<u64> {
        s.trim()
            .parse::<u64>()
            .map_err(|e| parse_err(path, "line 1", format!("bad {what} '{s}': {e}")))
    };
    let n = parse_u(fields[0], "N")? as usize;
    let m = parse_u(fields[1], "M")? as usize;
    let frac = parse_u(fields[2], "frac_bits")? as u32;
    let word = parse_u(fields[3], "word_length")? as u32;
    let fmt = FixFormat::new(word, frac)?;

    let mut out = CMat::zeros(n, m, fmt);
    let mut rows_seen = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if rows_seen >= n {
            return Err(parse_err(
                path,
                format!("line {}", lineno + 1),
                format!("more than {n} data rows"),
            ));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m {
            return Err(parse_err(
                path,
                format!("line {}", lineno + 1),
                format!("expected {m} entries, got {}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            let (re_s, im_s) = cell.trim().split_once(':').ok_or_else(|| {
                parse_err(
                    path,
                    format!("line {}, entry {}", lineno + 1, j + 1),
                    format!("entry '{cell}' is not re:im"),
                )
            })?;
            let parse_raw = |s: &str| -> Result<i64> {
                let raw: i64 = s.trim().parse().map_err(|e| {
                    parse_err(
                        path,
                        format!("line {}, entry {}", lineno + 1, j + 1),
                        format!("bad raw value '{s}': {e}"),
                    )
                })?;
                let limit = (1i64 << (fmt.word_length() - 1)) - 1;
                if raw < -(limit + 1) || raw > limit {
                    return Err(parse_err(
                        path,
                        format!("line {}, entry {}", lineno + 1, j + 1),
                        format!("raw value {raw} outside the {word}-bit range"),
                    ));
                }
                Ok(raw)
            };
            let re = fmt.from_raw(parse_raw(re_s)?);
            let im = fmt.from_raw(parse_raw(im_s)?);
            out.set(rows_seen, j, CFix::new(re, im));
        }
        rows_seen += 1;
    }
    if rows_seen != n {
        return Err(parse_err(
            path,
            "end of file",
            format!("expected {n} data rows, got {rows_seen}"),
        ));
    }
    Ok(out)
}

/// Writes a block in the packed raw format.
pub fn write_raw(path: &Path, m: &CMat) -> Result<()> {
    let fmt = m.fmt();
    if fmt.word_length() > 16 {
        return Err(Error::Config(format!(
            "raw format stores i16 components; word length {} does not fit",
            fmt.word_length()
        )));
    }
    if m.rows() > u16::MAX as usize || m.cols() > u16::MAX as usize {
        return Err(Error::Config(format!(
            "raw format caps dimensions at {}, got {}×{}",
            u16::MAX,
            m.rows(),
            m.cols()
        )));
    }
    let mut bytes = Vec::with_capacity(RAW_HEADER_LEN + 4 * m.rows() * m.cols());
    bytes.extend_from_slice(RAW_MAGIC);
    bytes.extend_from_slice(&(m.rows() as u16).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u16).to_le_bytes());
    bytes.push(fmt.word_length() as u8);
    bytes.push(fmt.frac_bits() as u8);
    bytes.extend_from_slice(&[0u8; 6]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m.get(i, j);
            bytes.extend_from_slice(&(z.re.raw() as i16).to_le_bytes());
            bytes.extend_from_slice(&(z.im.raw() as i16).to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a block written by [`write_raw`].
pub fn read_raw(path: &Path) -> Result<CMat> {
    let bytes = fs::read(path)?;
    if bytes.len() < RAW_HEADER_LEN {
        return Err(parse_err(
            path,
            "header",
            format!(
                "file is {} bytes, header needs {RAW_HEADER_LEN}",
                bytes.len()
            ),
        ));
    }
    if &bytes[0..4] != RAW_MAGIC {
        return Err(parse_err(path, "byte 0", "bad magic; not a raw block file"));
    }
    let n = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let m = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let word = bytes[8] as u32;
    let frac = bytes[9] as u32;
    if bytes[10..16].iter().any(|&b| b != 0) {
        return Err(parse_err(
            path,
            "bytes 10..16",
            "reserved header bytes must be zero",
        ));
    }
    let fmt = FixFormat::new(word, frac)?;
    let expect = RAW_HEADER_LEN + 4 * n * m;
    if bytes.len() != expect {
        return Err(parse_err(
            path,
            "payload",
            format!("expected {expect} bytes for {n}×{m}, got {}", bytes.len()),
        ));
    }
    let limit = (1i64 << (word - 1)) - 1;
    let mut out = CMat::zeros(n, m, fmt);
    let mut at = RAW_HEADER_LEN;
    for i in 0..n {
        for j in 0..m {
            let re = i16::from_le_bytes([bytes[at], bytes[at + 1]]) as i64;
            let im = i16::from_le_bytes([bytes[at + 2], bytes[at + 3]]) as i64;
            at += 4;
            for raw in [re, im] {
                if raw < -(limit + 1) || raw > limit {
                    return Err(parse_err(
                        path,
                        format!("entry ({i},{j})"),
                        format!("raw value {raw} outside the {word}-bit range"),
                    ));
                }
            }
            out.set(i, j, CFix::new(fmt.from_raw(re), fmt.from_raw(im)));
        }
    }
    Ok(out)
}

/// Dispatches on the extension: `.csv` text, anything else packed raw.
pub fn write_block(path: &Path, m: &CMat) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        write_csv(path, m)
    } else {
        write_raw(path, m)
    }
}

/// Dispatches on the extension: `.csv` text, anything else packed raw.
pub fn read_block(path: &Path) -> Result<CMat> {
    if path.extension().is_some_and(|e| e == "csv") {
        read_csv(path)
    } else {
        read_raw(path)
    }
}

/// Writes a report as pretty JSON with a trailing newline.
pub fn save_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a report back.
pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, "json", e.to_string()))
}
