//! Whitespace-separated `x y z [r g b]` text, one point per line.
//!
//! `#` lines are comments. `# epoch: <rfc3339>` and `# source: <label>`
//! comments carry the cloud metadata.

use std::io::Write;

use chrono::{DateTime, Utc};

use super::{format_epoch, parse_epoch, CloudError, Point3, PointCloud, Result};

pub(super) fn parse(bytes: &[u8]) -> Result<PointCloud> {
    let text = std::str::from_utf8(bytes).map_err(|_| CloudError::InvalidRecord {
        record: 0,
        message: "XYZ text is not valid UTF-8".into(),
    })?;
    let mut points = Vec::new();
    let mut epoch = None;
    let mut source = String::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(t) = comment.strip_prefix("epoch:") {
                epoch = Some(parse_epoch(t).ok_or_else(|| CloudError::InvalidRecord {
                    record: points.len(),
                    message: format!("bad epoch comment `{}`", t.trim()),
                })?);
            } else if let Some(s) = comment.strip_prefix("source:") {
                source = s.trim().to_string();
            }
            continue;
        }
        let record = points.len() + 1;
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| CloudError::InvalidRecord {
                    record,
                    message: format!("`{tok}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let p = match values.as_slice() {
            [x, y, z] => Point3::new(*x, *y, *z),
            [x, y, z, r, g, b] => Point3::new(*x, *y, *z).with_color([channel(*r, record)?, channel(*g, record)?, channel(*b, record)?]),
            other => {
                return Err(CloudError::InvalidRecord {
                    record,
                    message: format!("expected 3 or 6 values, found {}", other.len()),
                })
            }
        };
        if !p.is_finite() {
            return Err(CloudError::NonFiniteValue { record });
        }
        points.push(p);
    }
    Ok(PointCloud {
        points,
        epoch: epoch.unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
        source_label: source,
    })
}

fn channel(v: f64, record: usize) -> Result<u8> {
    if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
        Ok(v as u8)
    } else {
        Err(CloudError::InvalidRecord {
            record,
            message: format!("color channel {v} outside 0..=255"),
        })
    }
}

pub(super) fn write<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    let mut text = format!("# epoch: {}\n", format_epoch(&cloud.epoch));
    if !cloud.source_label.is_empty() && !cloud.source_label.contains('\n') {
        text.push_str(&format!("# source: {}\n", cloud.source_label));
    }
    out.write_all(text.as_bytes())?;
    let colored = !cloud.points.is_empty() && cloud.points.iter().all(|p| p.color.is_some());
    let mut buf = String::with_capacity(64 * 1024);
    for p in &cloud.points {
        use std::fmt::Write as _;
        let _ = write!(buf, "{} {} {}", p.x, p.y, p.z);
        if let (true, Some([r, g, b])) = (colored, p.color) {
            let _ = write!(buf, " {r} {g} {b}");
        }
        buf.push('\n');
        if buf.len() >= 60 * 1024 {
            out.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
