//! Transition sample files.
//!
//! The first line is a header such as `d=2,action=a1` (state and successor share
//! the dimension) or `dx=3,dy=1,action=a1`. Every further line holds `dx + dy`
//! comma-separated numbers: the state followed by its successor. Blank lines and
//! lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use kdeverify_core::systems::TransitionSamples;

use crate::error::CliError;

fn bad(path: &str, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

struct Header {
    dx: usize,
    dy: usize,
    action: String,
}

fn parse_header(src: &str, line: &str) -> Result<Header, CliError> {
    let (mut d, mut dx, mut dy, mut action) = (None, None, None, None);
    for part in line.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(src, 1, format!("header field `{part}` is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || {
            v.parse::<usize>()
                .map_err(|_| bad(src, 1, format!("`{k}` must be a positive integer, got `{v}`")))
        };
        match k {
            "d" => d = Some(num()?),
            "dx" => dx = Some(num()?),
            "dy" => dy = Some(num()?),
            "action" => action = Some(v.to_string()),
            other => return Err(bad(src, 1, format!("unknown header field `{other}`"))),
        }
    }
    let (dx, dy) = match (d, dx, dy) {
        (Some(d), None, None) => (d, d),
        (None, Some(a), Some(b)) => (a, b),
        _ => return Err(bad(src, 1, "header needs either `d` or both `dx` and `dy`")),
    };
    if dx == 0 || dy == 0 {
        return Err(bad(src, 1, "dimensions must be positive"));
    }
    let action = action.ok_or_else(|| bad(src, 1, "header needs `action`"))?;
    if action.is_empty() {
        return Err(bad(src, 1, "action name is empty"));
    }
    Ok(Header { dx, dy, action })
}

pub fn parse_samples(text: &str, src: &str) -> Result<TransitionSamples, CliError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(bad(src, 1, "missing header")),
            Some((_, l)) if l.trim().is_empty() || l.starts_with('#') => continue,
            Some((_, l)) => break parse_header(src, l.trim())?,
        }
    };
    let width = header.dx + header.dy;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, l) in lines {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let vals = l
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(src, i + 1, e.to_string()))?;
        if vals.len() != width {
            return Err(bad(src, i + 1, format!("expected {width} values, got {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(bad(src, i + 1, "non-finite value"));
        }
        xs.extend_from_slice(&vals[..header.dx]);
        ys.extend_from_slice(&vals[header.dx..]);
    }
    if xs.is_empty() {
        return Err(bad(src, 1, "file contains no samples"));
    }
    Ok(TransitionSamples::new(header.action, header.dx, header.dy, xs, ys)?)
}

pub fn read_samples(path: &Path) -> Result<TransitionSamples, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_samples(&text, &path.display().to_string())
}

/// Shortest round-trip formatting, so reading back yields identical values.
pub fn format_samples(data: &TransitionSamples) -> String {
    let (dx, dy) = (data.x_dim(), data.y_dim());
    let mut out = if dx == dy {
        format!("d={dx},action={}\n", data.action())
    } else {
        format!("dx={dx},dy={dy},action={}\n", data.action())
    };
    for i in 0..data.len() {
        for (k, v) in data.x(i).iter().chain(data.y(i)).enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_samples(path: &Path, data: &TransitionSamples) -> Result<(), CliError> {
    std::fs::write(path, format_samples(data)).map_err(|e| CliError::io(path, e))
}
