use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A single brightness-change event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    /// Timestamp in microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    /// `true` for a positive brightness change.
    pub p: bool,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: bool) -> Self {
        Self { t, x, y, p }
    }
}

/// Time-sorted events from a `width` x `height` sensor covering
/// `[t_begin, t_end]` microseconds.
///
/// The extent is part of the stream, not derived from its events: filters
/// that drop events keep the original extent so rates stay comparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<Event>,
    width: u32,
    height: u32,
    t_begin: u64,
    t_end: u64,
}

impl EventStream {
    /// Validates bounds and stably sorts `events` by timestamp if needed.
    pub fn new(mut events: Vec<Event>, width: u32, height: u32, t_begin: u64, t_end: u64) -> Result<Self> {
        if t_end < t_begin {
            return Err(invalid(format!("t_end {t_end} precedes t_begin {t_begin}")));
        }
        for (i, e) in events.iter().enumerate() {
            if u32::from(e.x) >= width || u32::from(e.y) >= height {
                return Err(Error::OutOfBounds {
                    line: i + 1,
                    x: e.x.into(),
                    y: e.y.into(),
                    width,
                    height,
                });
            }
            if e.t < t_begin || e.t > t_end {
                return Err(invalid(format!(
                    "event {} at t={} outside stream extent [{t_begin}, {t_end}]",
                    i, e.t
                )));
            }
        }
        if !events.windows(2).all(|w| w[0].t <= w[1].t) {
            events.sort_by_key(|e| e.t);
        }
        Ok(Self {
            events,
            width,
            height,
            t_begin,
            t_end,
        })
    }

    /// Stream whose extent is the first and last event timestamp.
    pub fn from_events(events: Vec<Event>, width: u32, height: u32) -> Result<Self> {
        let t_begin = events.iter().map(|e| e.t).min().unwrap_or(0);
        let t_end = events.iter().map(|e| e.t).max().unwrap_or(0);
        Self::new(events, width, height, t_begin, t_end)
    }

    /// Internal constructor for events already known to be sorted and in bounds.
    pub(crate) fn from_parts_unchecked(events: Vec<Event>, width: u32, height: u32, t_begin: u64, t_end: u64) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].t <= w[1].t));
        Self {
            events,
            width,
            height,
            t_begin,
            t_end,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn t_begin(&self) -> u64 {
        self.t_begin
    }

    pub fn t_end(&self) -> u64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        (self.t_end - self.t_begin) as f64 / 1e6
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub(crate) fn pixel_index(&self, e: &Event) -> usize {
        e.y as usize * self.width as usize + e.x as usize
    }

    /// Events with `lo_us <= t < hi_us`.
    pub fn window(&self, lo_us: f64, hi_us: f64) -> &[Event] {
        let a = self.events.partition_point(|e| (e.t as f64) < lo_us);
        let b = self.events.partition_point(|e| (e.t as f64) < hi_us);
        &self.events[a..b.max(a)]
    }

    /// Events with `lo_us <= t <= hi_us`.
    pub fn window_inclusive(&self, lo_us: f64, hi_us: f64) -> &[Event] {
        let a = self.events.partition_point(|e| (e.t as f64) < lo_us);
        let b = self.events.partition_point(|e| (e.t as f64) <= hi_us);
        &self.events[a..b.max(a)]
    }

    /// Same sensor and extent, different events. `keep` must preserve order.
    pub(crate) fn with_events(&self, events: Vec<Event>) -> Self {
        Self::from_parts_unchecked(events, self.width, self.height, self.t_begin, self.t_end)
    }
}
