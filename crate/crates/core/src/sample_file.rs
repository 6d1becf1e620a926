//! Text format for censored samples.
//!
//! ```text
//! # n_total=5 seed=7 R=2 sigma=1
//! 1.2500000000000000e-1
//! -1.7318750000000000e0
//! FAIL
//! FAIL
//! FAIL
//! ```
//!
//! Observed values carry 17 significant digits and round-trip exactly.
//! Asymmetric windows replace `R=` with `lower=` and `upper=`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hermite::CensorWindow;
use crate::model::SampleBatch;
use crate::report::format_f64;

pub const FAIL_TOKEN: &str = "FAIL";

fn header(batch: &SampleBatch) -> String {
    let w = &batch.window;
    let bounds = if w.is_symmetric() {
        format!("R={}", w.upper())
    } else {
        format!("lower={} upper={}", w.lower(), w.upper())
    };
    format!("# n_total={} seed={} {} sigma={}", batch.n_total, batch.seed, bounds, batch.sigma)
}

pub fn write_samples<W: Write>(mut out: W, batch: &SampleBatch) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    let mut text = String::with_capacity(24 * batch.n_total as usize + 64);
    text.push_str(&header(batch));
    text.push('\n');
    for v in &batch.values {
        text.push_str(&format_f64(*v));
        text.push('\n');
    }
    for _ in 0..batch.n_failed() {
        text.push_str(FAIL_TOKEN);
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(io)?;
    out.flush().map_err(io)
}

pub fn write_sample_file(path: &Path, batch: &SampleBatch) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
    write_samples(std::io::BufWriter::new(file), batch)
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse(format!("header field {key} has invalid value {raw:?}")))
}

pub fn read_samples<R: BufRead>(input: R) -> Result<SampleBatch> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sample file".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let fields = first.strip_prefix('#').ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
    let (mut n_total, mut seed, mut r, mut lower, mut upper, mut sigma) = (None, None, None, None, None, None);
    for field in fields.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse(format!("malformed header field {field:?}")))?;
        match key {
            "n_total" => n_total = Some(parse_num::<u64>(key, value)?),
            "seed" => seed = Some(parse_num::<u64>(key, value)?),
            "R" => r = Some(parse_num::<f64>(key, value)?),
            "lower" => lower = Some(parse_num::<f64>(key, value)?),
            "upper" => upper = Some(parse_num::<f64>(key, value)?),
            "sigma" => sigma = Some(parse_num::<f64>(key, value)?),
            _ => return Err(Error::Parse(format!("unknown header field {key:?}"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("header is missing {k}"));
    let n_total = n_total.ok_or_else(|| missing("n_total"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let sigma = sigma.ok_or_else(|| missing("sigma"))?;
    let window = match (r, lower, upper) {
        (Some(r), None, None) => CensorWindow::symmetric(r),
        (None, Some(a), Some(b)) => CensorWindow::new(a, b),
        _ => return Err(Error::Parse("header needs either R or both lower and upper".into())),
    }
    .map_err(|e| Error::Parse(format!("invalid window in header: {e}")))?;

    let mut values = Vec::new();
    let mut failures = 0u64;
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        if token == FAIL_TOKEN {
            failures += 1;
            continue;
        }
        let x: f64 = token.parse().map_err(|_| Error::Parse(format!("line {}: not a number or FAIL: {token:?}", idx + 2)))?;
        if !window.contains(x) {
            return Err(Error::Parse(format!("line {}: value {x} lies outside {window}", idx + 2)));
        }
        values.push(x);
    }
    if values.len() as u64 + failures != n_total {
        return Err(Error::Parse(format!(
            "header says n_total={n_total} but the file has {} records",
            values.len() as u64 + failures
        )));
    }
    Ok(SampleBatch { n_total, values, seed, window, sigma })
}

pub fn read_sample_file(path: &Path) -> Result<SampleBatch> {
    let file = fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))?;
    read_samples(BufReader::new(file))
}
