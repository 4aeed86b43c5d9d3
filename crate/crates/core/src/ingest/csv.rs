//! Plain-text event format.
//!
//! ```text
//! # width=346 height=260 t_begin=0 t_end=600000000
//! t_us,x,y,p
//! 1000,3,4,1
//! ```
//!
//! The metadata line is optional. `t_begin`/`t_end` default to the first and
//! last event timestamps; sensor dimensions default to the largest
//! coordinate plus one unless supplied by the caller.

use std::io::{BufRead, Write};

use super::stream::{Event, EventStream};
use crate::error::{Error, Result};

pub const EVENT_CSV_HEADER: &str = "t_us,x,y,p";

/// Sensor dimensions supplied outside the file (e.g. CLI flags).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorDims {
    pub width: u32,
    pub height: u32,
}

#[derive(Default)]
struct Metadata {
    width: Option<u32>,
    height: Option<u32>,
    t_begin: Option<u64>,
    t_end: Option<u64>,
}

fn parse_metadata(line: &str, lineno: usize, meta: &mut Metadata) -> Result<()> {
    for token in line.trim_start_matches('#').split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            continue;
        };
        let num = |v: &str| -> Result<u64> {
            v.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("metadata `{key}` is not an integer: `{v}`"),
            })
        };
        match key {
            "width" => meta.width = Some(num(value)? as u32),
            "height" => meta.height = Some(num(value)? as u32),
            "t_begin" => meta.t_begin = Some(num(value)?),
            "t_end" => meta.t_end = Some(num(value)?),
            _ => {}
        }
    }
    Ok(())
}

fn field<'a>(parts: &mut impl Iterator<Item = &'a str>, name: &str, line: usize) -> Result<u64> {
    let raw = parts.next().ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("field `{name}` is not a non-negative integer: `{}`", raw.trim()),
    })
}

/// Reads an event CSV. `dims` overrides any dimensions in the metadata line.
pub fn parse_event_csv<R: BufRead>(mut reader: R, dims: Option<SensorDims>) -> Result<EventStream> {
    let mut meta = Metadata::default();
    let mut events = Vec::new();
    let mut buf = String::new();
    let mut lineno = 0;
    let (mut max_x, mut max_y) = (0u64, 0u64);

    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        lineno += 1;
        let line = buf.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            parse_metadata(line, lineno, &mut meta)?;
            continue;
        }
        if line.starts_with('t') {
            // header
            continue;
        }
        let mut parts = line.split(',');
        let t = field(&mut parts, "t_us", lineno)?;
        let x = field(&mut parts, "x", lineno)?;
        let y = field(&mut parts, "y", lineno)?;
        let p = field(&mut parts, "p", lineno)?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "expected 4 fields".into(),
            });
        }
        if p > 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("polarity must be 0 or 1, got {p}"),
            });
        }
        let declared = dims.map(|d| (d.width, d.height)).or(match (meta.width, meta.height) {
            (Some(w), Some(h)) => Some((w, h)),
            _ => None,
        });
        let limit = u64::from(u16::MAX);
        let (w, h) = declared.unwrap_or((limit as u32 + 1, limit as u32 + 1));
        if x >= u64::from(w) || y >= u64::from(h) || x > limit || y > limit {
            return Err(Error::OutOfBounds {
                line: lineno,
                x,
                y,
                width: w,
                height: h,
            });
        }
        max_x = max_x.max(x);
        max_y = max_y.max(y);
        events.push(Event::new(t, x as u16, y as u16, p == 1));
    }

    let (width, height) = match dims {
        Some(d) => (d.width, d.height),
        None => match (meta.width, meta.height) {
            (Some(w), Some(h)) => (w, h),
            _ if events.is_empty() => (0, 0),
            _ => (max_x as u32 + 1, max_y as u32 + 1),
        },
    };
    let t_begin = meta
        .t_begin
        .unwrap_or_else(|| events.iter().map(|e| e.t).min().unwrap_or(0));
    let t_end = meta
        .t_end
        .unwrap_or_else(|| events.iter().map(|e| e.t).max().unwrap_or(0));
    EventStream::new(events, width, height, t_begin, t_end)
}

/// Writes an event CSV including the metadata line, so the extent survives
/// a round trip.
pub fn write_event_csv<W: Write>(stream: &EventStream, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# width={} height={} t_begin={} t_end={}",
        stream.width(),
        stream.height(),
        stream.t_begin(),
        stream.t_end()
    )?;
    writeln!(out, "{EVENT_CSV_HEADER}")?;
    for e in stream.events() {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, u8::from(e.p))?;
    }
    out.flush()?;
    Ok(())
}
