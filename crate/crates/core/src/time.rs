//! Timestamps with microsecond resolution.
//!
//! All emitted artifacts use one canonical textual form,
//! `YYYY-MM-DD HH:MM:SS.ffffff`, so files are byte-deterministic and
//! round-trip exactly.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MICROS_PER_SECOND: i64 = 1_000_000;
pub const MICROS_PER_MINUTE: i64 = 60 * MICROS_PER_SECOND;

const FORMAT: &str = "%Y-%m-%d %H:%M:%S%.6f";

/// A calendar date-time with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(NaiveDateTime);

impl Timestamp {
    /// Midnight of `date` plus `micros` microseconds. Values past 24 h roll
    /// over into subsequent days.
    pub fn from_midnight_micros(date: NaiveDate, micros: i64) -> Self {
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight is valid");
        Timestamp(midnight + Duration::microseconds(micros))
    }

    pub fn as_datetime(&self) -> NaiveDateTime {
        self.0
    }

    /// Hour (0-23) and minute of the wall clock.
    pub fn hour_minute(&self) -> (u32, u32) {
        (self.0.hour(), self.0.minute())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept any fractional length on input; output is always 6 digits.
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f").map(Timestamp)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
