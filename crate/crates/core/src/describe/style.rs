//! Timestamp renderings and lenient date parsing.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::tkg::DayStamp;

/// How a date is written in prompts and texts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampStyle {
    /// `2026-01-11`
    Iso,
    /// `January 11th, 2026`
    Long,
    /// `Sunday, January 11th, 2026`
    DayLong,
    /// `11 Jan 2026`
    Short,
}

impl TimestampStyle {
    pub const ALL: [TimestampStyle; 4] = [Self::Iso, Self::Long, Self::DayLong, Self::Short];

    pub fn name(self) -> &'static str {
        match self {
            Self::Iso => "iso",
            Self::Long => "long",
            Self::DayLong => "day_long",
            Self::Short => "short",
        }
    }

    pub fn render(self, day: DayStamp) -> String {
        let d = day.date();
        match self {
            Self::Iso => d.format("%Y-%m-%d").to_string(),
            Self::Long => long(d),
            Self::DayLong => format!("{}, {}", d.format("%A"), long(d)),
            Self::Short => format!("{} {}", d.day(), d.format("%b %Y")),
        }
    }
}

impl fmt::Display for TimestampStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimestampStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown timestamp style {s:?} (expected iso, long, day_long or short)"))
    }
}

fn long(d: NaiveDate) -> String {
    format!("{} {}{}, {}", d.format("%B"), d.day(), ordinal_suffix(d.day()), d.year())
}

pub fn ordinal_suffix(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

/// Parses a date written in any of the supported styles, tolerating a
/// leading weekday (full or abbreviated), ordinal suffixes, case and extra
/// whitespace. Returns `None` for anything else.
pub fn parse_date(text: &str) -> Option<DayStamp> {
    let lower = text.trim().to_lowercase();
    let mut rest = lower.as_str();
    for w in WEEKDAYS {
        for prefix in [w, &w[..3]] {
            if let Some(r) = rest.strip_prefix(prefix) {
                if r.starts_with([',', ' ', '.']) {
                    rest = r.trim_start_matches([',', ' ', '.']);
                }
            }
        }
    }
    let cleaned: Vec<String> = rest
        .split_whitespace()
        .map(|tok| {
            let (body, comma) = match tok.strip_suffix(',') {
                Some(b) => (b, ","),
                None => (tok, ""),
            };
            let digits = body.trim_end_matches(|c: char| c.is_ascii_alphabetic());
            let suffix = &body[digits.len()..];
            let body = if !digits.is_empty()
                && digits.chars().all(|c| c.is_ascii_digit())
                && ["st", "nd", "rd", "th"].contains(&suffix)
            {
                digits
            } else {
                body
            };
            format!("{body}{comma}")
        })
        .collect();
    let joined = cleaned.join(" ");
    const FORMATS: [&str; 8] = [
        "%Y-%m-%d", "%B %d, %Y", "%B %d %Y", "%d %b %Y", "%d %B %Y", "%b %d, %Y", "%b %d %Y", "%d %B, %Y",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(&joined, f).ok())
        .map(DayStamp::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day() -> DayStamp {
        DayStamp::from_ymd(2026, 1, 11).unwrap()
    }

    #[test]
    fn renderings() {
        let r: Vec<String> = TimestampStyle::ALL.iter().map(|s| s.render(day())).collect();
        assert_eq!(r, ["2026-01-11", "January 11th, 2026", "Sunday, January 11th, 2026", "11 Jan 2026"]);
        let d = |m, n| DayStamp::from_ymd(2026, m, n).unwrap();
        assert_eq!(TimestampStyle::Long.render(d(1, 1)), "January 1st, 2026");
        assert_eq!(TimestampStyle::Long.render(d(1, 2)), "January 2nd, 2026");
        assert_eq!(TimestampStyle::Long.render(d(1, 23)), "January 23rd, 2026");
        assert_eq!(TimestampStyle::Long.render(d(1, 12)), "January 12th, 2026");
        assert_eq!(TimestampStyle::Short.render(d(3, 5)), "5 Mar 2026");
    }

    #[test]
    fn lenient_parsing() {
        for s in [
            "2026-01-11",
            "January 11th, 2026",
            "Sunday, January 11th, 2026",
            "Sun, January 11th, 2026",
            "11 Jan 2026",
            "  january 11, 2026 ",
            "11 January 2026",
        ] {
            assert_eq!(parse_date(s), Some(day()), "{s}");
        }
        assert_eq!(parse_date("the eleventh"), None);
        assert_eq!(parse_date("2026-13-01"), None);
    }

    #[test]
    fn style_names() {
        for s in TimestampStyle::ALL {
            assert_eq!(s.name().parse::<TimestampStyle>().unwrap(), s);
        }
        assert!("fancy".parse::<TimestampStyle>().is_err());
    }

    proptest! {
        #[test]
        fn every_rendering_parses_back(n in 0i64..40_000, style in 0usize..4) {
            let d = DayStamp::from_ymd(1950, 1, 1).unwrap().add_days(n).unwrap();
            let s = TimestampStyle::ALL[style];
            prop_assert_eq!(parse_date(&s.render(d)), Some(d));
        }
    }
}
