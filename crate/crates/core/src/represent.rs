//! Fixed-size 2D snapshots of the events around a timestamp.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ingest::EventStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Histogram,
    Timemap,
}

impl std::str::FromStr for GridKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" | "hist" => Ok(Self::Histogram),
            "timemap" | "time-map" => Ok(Self::Timemap),
            other => Err(invalid(format!("unknown representation `{other}`"))),
        }
    }
}

/// Row-major `h x w` array of non-negative values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub values: Vec<f64>,
    pub h: usize,
    pub w: usize,
    /// Snapshot time in seconds.
    pub t_center: f64,
    pub kind: GridKind,
}

impl Grid {
    pub fn zeros(h: usize, w: usize, t_center: f64, kind: GridKind) -> Self {
        Self {
            values: vec![0.0; h * w],
            h,
            w,
            t_center,
            kind,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.w + col]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// CSV dump, one grid row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.w.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepresentConfig {
    /// Histogram window in seconds.
    pub window: f64,
    /// Time map decay constant in seconds.
    pub tau: f64,
    pub out_h: usize,
    pub out_w: usize,
}

impl Default for RepresentConfig {
    fn default() -> Self {
        Self {
            window: 1.0,
            tau: 0.2,
            out_h: 32,
            out_w: 32,
        }
    }
}

impl RepresentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) || !(self.tau > 0.0) {
            return Err(invalid("window and tau must be positive"));
        }
        if self.out_h == 0 || self.out_w == 0 {
            return Err(invalid("output grid dimensions must be at least 1"));
        }
        Ok(())
    }
}

/// Per-pixel event counts in `[t_center - window/2, t_center + window/2)`.
pub fn event_histogram(s: &EventStream, t_center: f64, window: f64) -> Grid {
    let (h, w) = (s.height() as usize, s.width() as usize);
    let mut g = Grid::zeros(h, w, t_center, GridKind::Histogram);
    let lo = (t_center - 0.5 * window) * 1e6;
    let hi = (t_center + 0.5 * window) * 1e6;
    for e in s.window(lo, hi) {
        g.values[s.pixel_index(e)] += 1.0;
    }
    g
}

/// Time-map search horizon in multiples of `tau`; older events contribute
/// less than `exp(-5)` and are treated as absent.
pub const TIMEMAP_HORIZON: f64 = 5.0;

/// `exp(-(t_center - t_last) / tau)` per pixel, where `t_last` is the most
/// recent event at or before `t_center` within `5 tau`; 0 without one.
pub fn time_map(s: &EventStream, t_center: f64, tau: f64) -> Grid {
    let (h, w) = (s.height() as usize, s.width() as usize);
    let mut last = vec![f64::NAN; h * w];
    let lo = (t_center - TIMEMAP_HORIZON * tau) * 1e6;
    for e in s.window_inclusive(lo, t_center * 1e6) {
        last[s.pixel_index(e)] = e.t as f64 / 1e6;
    }
    let values = last
        .into_iter()
        .map(|t| {
            if t.is_nan() {
                0.0
            } else {
                (-(t_center - t).max(0.0) / tau).exp()
            }
        })
        .collect();
    Grid {
        values,
        h,
        w,
        t_center,
        kind: GridKind::Timemap,
    }
}

/// Bilinear resize with corner-aligned sampling: output corners sample the
/// input corners exactly.
pub fn resize_grid(g: &Grid, out_h: usize, out_w: usize) -> Grid {
    assert!(out_h >= 1 && out_w >= 1, "output dimensions must be at least 1");
    if out_h == g.h && out_w == g.w {
        return g.clone();
    }
    if g.h == 0 || g.w == 0 {
        return Grid::zeros(out_h, out_w, g.t_center, g.kind);
    }
    let coord = |i: usize, n_out: usize, n_in: usize| -> f64 {
        if n_out == 1 {
            0.5 * (n_in - 1) as f64
        } else {
            i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64
        }
    };
    let mut values = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let y = coord(r, out_h, g.h);
        let y0 = (y.floor() as usize).min(g.h - 1);
        let y1 = (y0 + 1).min(g.h - 1);
        let fy = y - y0 as f64;
        for c in 0..out_w {
            let x = coord(c, out_w, g.w);
            let x0 = (x.floor() as usize).min(g.w - 1);
            let x1 = (x0 + 1).min(g.w - 1);
            let fx = x - x0 as f64;
            let top = g.get(y0, x0) * (1.0 - fx) + g.get(y0, x1) * fx;
            let bottom = g.get(y1, x0) * (1.0 - fx) + g.get(y1, x1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Grid {
        values,
        h: out_h,
        w: out_w,
        t_center: g.t_center,
        kind: g.kind,
    }
}

/// Snapshot of `kind` at `t` resized to the configured grid. Timestamps
/// outside the stream extent give a zero grid.
pub fn snapshot(s: &EventStream, t: f64, kind: GridKind, cfg: &RepresentConfig) -> Grid {
    let inside = t * 1e6 >= s.t_begin() as f64 && t * 1e6 <= s.t_end() as f64;
    if !inside {
        return Grid::zeros(cfg.out_h, cfg.out_w, t, kind);
    }
    let g = match kind {
        GridKind::Histogram => event_histogram(s, t, cfg.window),
        GridKind::Timemap => time_map(s, t, cfg.tau),
    };
    resize_grid(&g, cfg.out_h, cfg.out_w)
}
