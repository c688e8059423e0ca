//! Simulation clock arithmetic.
//!
//! Time is an integer number of seconds since the simulation epoch, which is
//! anchored at a Monday 00:00 (rendered as 2024-01-01T00:00:00 in logs).

use std::fmt;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use serde::{Deserialize, Serialize};

/// Seconds since the simulation epoch.
pub type Timestamp = i64;
/// A span of time in seconds.
pub type Seconds = i64;

pub const MINUTE: Seconds = 60;
pub const HOUR: Seconds = 3_600;
pub const DAY: Seconds = 86_400;
pub const WEEK: Seconds = 604_800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Weekday {
        Self::ALL[i % 7]
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A (weekday, hour) bucket of the weekly cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub day: Weekday,
    pub hour: u8,
}

impl Slot {
    pub fn new(day: Weekday, hour: u8) -> Self {
        debug_assert!(hour < 24);
        Slot { day, hour }
    }

    pub fn of(t: Timestamp) -> Self {
        Slot { day: weekday(t), hour: hour(t) }
    }

    /// Offset of the slot's first second within the week.
    pub fn week_offset(self) -> Seconds {
        self.day.index() as Seconds * DAY + self.hour as Seconds * HOUR
    }

    /// Position in 0..168.
    pub fn ordinal(self) -> usize {
        self.day.index() * 24 + self.hour as usize
    }

    pub fn from_ordinal(i: usize) -> Self {
        Slot { day: Weekday::from_index(i / 24), hour: (i % 24) as u8 }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:02}:00", self.day, self.hour)
    }
}

/// Seconds elapsed since the most recent Monday 00:00.
pub fn week_offset(t: Timestamp) -> Seconds {
    t.rem_euclid(WEEK)
}

pub fn week_start(t: Timestamp) -> Timestamp {
    t - week_offset(t)
}

pub fn weekday(t: Timestamp) -> Weekday {
    Weekday::from_index((t.div_euclid(DAY)).rem_euclid(7) as usize)
}

/// Integer hour of day, truncated.
pub fn hour(t: Timestamp) -> u8 {
    (t.rem_euclid(DAY) / HOUR) as u8
}

/// First hour boundary strictly after `t`.
pub fn next_hour_boundary(t: Timestamp) -> Timestamp {
    t - t.rem_euclid(HOUR) + HOUR
}

fn epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 1, 1)
        .expect("valid epoch date")
        .and_hms_opt(0, 0, 0)
        .expect("valid epoch time")
}

/// Renders a timestamp as ISO-8601 local time, e.g. `2024-01-01T08:30:00`.
pub fn to_iso(t: Timestamp) -> String {
    (epoch() + TimeDelta::seconds(t)).format("%Y-%m-%dT%H:%M:%S").to_string()
}

pub fn from_iso(s: &str) -> Option<Timestamp> {
    let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok()?;
    Some((dt - epoch()).num_seconds())
}

/// Parses `HH:MM` into seconds after midnight; `24:00` is accepted.
pub fn parse_clock(s: &str) -> Option<Seconds> {
    let (h, m) = s.split_once(':')?;
    let h: i64 = h.parse().ok()?;
    let m: i64 = m.parse().ok()?;
    if !(0..=24).contains(&h) || !(0..60).contains(&m) || (h == 24 && m != 0) {
        return None;
    }
    Some(h * HOUR + m * MINUTE)
}

pub fn format_clock(s: Seconds) -> String {
    format!("{:02}:{:02}", s / HOUR, (s % HOUR) / MINUTE)
}
