//! Line-oriented helpers shared by the text file formats.

use std::fmt::Display;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Non-blank lines with their 1-based line numbers. Lines starting with `#`
/// are comments.
pub(crate) fn read_data_lines<R: BufRead>(
    input: R,
) -> Result<impl Iterator<Item = (usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out.into_iter())
}

pub(crate) fn parse_header<T, const N: usize>(line_no: usize, line: &str) -> Result<[T; N]>
where
    T: FromStr + Copy + Default,
    T::Err: Display,
{
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != N {
        return Err(Error::parse(
            line_no,
            format!("header needs {N} fields, found {}", fields.len()),
        ));
    }
    let mut out = [T::default(); N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|e| Error::parse(line_no, format!("{f:?}: {e}")))?;
    }
    Ok(out)
}

/// Shortest round-trip decimal text for a weight, with `0` for zeros.
pub(crate) fn fmt_weight(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
