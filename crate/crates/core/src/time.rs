use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const TICKS_PER_ROUND: u8 = 60;

/// `round:tick`, the protocol clock. Ticks run from 0 to 59 within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeStamp {
    round: u32,
    tick: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("tick {0} is out of range 0-59")]
    TickOutOfRange(u32),
    #[error("malformed time {0:?}, expected ROUND:TICK or n:TICK")]
    Malformed(String),
}

impl TimeStamp {
    pub fn new(round: u32, tick: u32) -> Result<Self, TimeError> {
        if tick >= TICKS_PER_ROUND as u32 {
            return Err(TimeError::TickOutOfRange(tick));
        }
        Ok(TimeStamp {
            round,
            tick: tick as u8,
        })
    }

    /// A tick of the template round.
    pub fn at(tick: u32) -> Self {
        TimeStamp::new(0, tick).expect("tick literal in range")
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn tick(&self) -> u8 {
        self.tick
    }

    /// Later by `ticks`, carrying into following rounds.
    pub fn plus_ticks(&self, ticks: u32) -> TimeStamp {
        let total = self.tick as u32 + ticks;
        TimeStamp {
            round: self.round + total / TICKS_PER_ROUND as u32,
            tick: (total % TICKS_PER_ROUND as u32) as u8,
        }
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:02}", self.round, self.tick)
    }
}

/// Accepts `3:07` and the symbolic `n:07`, which means the template round 0.
impl FromStr for TimeStamp {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TimeError::Malformed(s.to_string());
        let (r, t) = s.trim().split_once(':').ok_or_else(bad)?;
        let round = if r == "n" { 0 } else { r.parse().map_err(|_| bad())? };
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        TimeStamp::new(round, t.parse().map_err(|_| bad())?)
    }
}

impl serde::Serialize for TimeStamp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
