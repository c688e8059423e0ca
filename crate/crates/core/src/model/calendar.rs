use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::time::{self, Seconds, Slot, Timestamp, Weekday, DAY, HOUR, WEEK};

/// One weekly availability interval, `[start, end)` seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CalendarInterval {
    pub day: Weekday,
    #[serde(with = "clock")]
    pub start: Seconds,
    #[serde(with = "clock")]
    pub end: Seconds,
}

mod clock {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Seconds, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&time::format_clock(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Seconds, D::Error> {
        let raw = String::deserialize(d)?;
        time::parse_clock(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid clock time `{raw}`, expected HH:MM")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CalendarDoc {
    weekly_intervals: Vec<CalendarInterval>,
}

/// Weekly repeating availability. No holidays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CalendarDoc", into = "CalendarDoc")]
pub struct Calendar {
    intervals: Vec<CalendarInterval>,
    /// Merged `[start, end)` offsets within the week, sorted.
    windows: Vec<(Seconds, Seconds)>,
}

impl From<CalendarDoc> for Calendar {
    fn from(doc: CalendarDoc) -> Self {
        Calendar::new(doc.weekly_intervals)
    }
}

impl From<Calendar> for CalendarDoc {
    fn from(c: Calendar) -> Self {
        CalendarDoc { weekly_intervals: c.intervals }
    }
}

impl Calendar {
    pub fn new(intervals: Vec<CalendarInterval>) -> Self {
        let mut raw: Vec<(Seconds, Seconds)> = intervals
            .iter()
            .filter(|iv| iv.start < iv.end && iv.end <= DAY)
            .map(|iv| {
                let base = iv.day.index() as Seconds * DAY;
                (base + iv.start, base + iv.end)
            })
            .collect();
        raw.sort_unstable();
        let mut windows: Vec<(Seconds, Seconds)> = Vec::with_capacity(raw.len());
        for (s, e) in raw {
            match windows.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => windows.push((s, e)),
            }
        }
        Calendar { intervals, windows }
    }

    /// Open every day, all day.
    pub fn always() -> Self {
        Self::daily(&Weekday::ALL, 0, DAY)
    }

    /// The same `[start, end)` interval on each of `days`.
    pub fn daily(days: &[Weekday], start: Seconds, end: Seconds) -> Self {
        Self::new(days.iter().map(|&day| CalendarInterval { day, start, end }).collect())
    }

    pub fn intervals(&self) -> &[CalendarInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn is_always_open(&self) -> bool {
        self.windows == [(0, WEEK)]
    }

    /// Pairs of raw intervals that overlap on the same day.
    pub fn overlapping_intervals(&self) -> Vec<(CalendarInterval, CalendarInterval)> {
        let mut sorted = self.intervals.clone();
        sorted.sort();
        let mut out = Vec::new();
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if a.day == b.day && b.start < a.end && a.start < b.end {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    pub fn is_open(&self, t: Timestamp) -> bool {
        let off = time::week_offset(t);
        self.windows.iter().any(|&(s, e)| s <= off && off < e)
    }

    /// Merged absolute availability windows whose end lies after `t`, in order.
    /// The first window may start before `t`.
    pub fn windows_from(&self, t: Timestamp) -> WindowIter<'_> {
        WindowIter {
            cal: self,
            week_base: time::week_start(t) - WEEK,
            idx: 0,
            after: t,
        }
    }

    pub fn next_open(&self, t: Timestamp) -> Option<Timestamp> {
        self.windows_from(t).next().map(|(s, _)| s.max(t))
    }

    /// Completion instant of `work` seconds of effort started at `t`,
    /// pausing whenever the calendar is closed.
    pub fn advance(&self, t: Timestamp, work: Seconds) -> Option<Timestamp> {
        if work <= 0 {
            return Some(t);
        }
        let mut remaining = work;
        for (s, e) in self.windows_from(t) {
            let start = s.max(t);
            let avail = e - start;
            if remaining <= avail {
                return Some(start + remaining);
            }
            remaining -= avail;
        }
        None
    }

    /// Total open seconds within `[a, b)`.
    pub fn open_seconds(&self, a: Timestamp, b: Timestamp) -> Seconds {
        if b <= a {
            return 0;
        }
        let mut total = 0;
        for (s, e) in self.windows_from(a) {
            if s >= b {
                break;
            }
            total += e.min(b) - s.max(a);
        }
        total
    }

    /// Whether the calendar is open at any point during the hour slot.
    pub fn open_in_slot(&self, slot: Slot) -> bool {
        let s = slot.week_offset();
        self.windows.iter().any(|&(ws, we)| ws < s + HOUR && s < we)
    }

    /// Weekly windows, as `(start slot offset, length)`, with wrap-around merged.
    pub fn weekly_windows(&self) -> Vec<(Seconds, Seconds)> {
        if self.is_always_open() {
            return vec![(0, WEEK)];
        }
        let mut out: Vec<(Seconds, Seconds)> = Vec::new();
        for (s, e) in self.windows_from(0) {
            if s >= WEEK {
                break;
            }
            out.push((s.rem_euclid(WEEK), e - s));
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub struct WindowIter<'a> {
    cal: &'a Calendar,
    week_base: Timestamp,
    idx: usize,
    after: Timestamp,
}

impl WindowIter<'_> {
    fn raw_next(&mut self) -> Option<(Timestamp, Timestamp)> {
        let w = self.cal.windows.get(self.idx)?;
        let out = (self.week_base + w.0, self.week_base + w.1);
        self.idx += 1;
        if self.idx == self.cal.windows.len() {
            self.idx = 0;
            self.week_base += WEEK;
        }
        Some(out)
    }
}

impl Iterator for WindowIter<'_> {
    type Item = (Timestamp, Timestamp);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cal.windows.is_empty() {
            return None;
        }
        if self.cal.is_always_open() {
            // A single unbounded window.
            let start = self.after.min(time::week_start(self.after));
            self.after = i64::MAX / 4;
            if start >= i64::MAX / 4 {
                return None;
            }
            return Some((start, i64::MAX / 4));
        }
        loop {
            let (s, mut e) = self.raw_next()?;
            // merge windows that touch across day or week boundaries
            loop {
                let w = self.cal.windows[self.idx];
                let ns = self.week_base + w.0;
                if ns == e {
                    let (_, ne) = self.raw_next()?;
                    e = ne;
                } else {
                    break;
                }
            }
            if e > self.after {
                self.after = e;
                return Some((s, e));
            }
        }
    }
}
