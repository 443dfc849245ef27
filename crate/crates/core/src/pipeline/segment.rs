use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MultiTaskSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Cervical,
    Lumbar,
}

impl BodyPart {
    pub fn segments(self) -> &'static [MotionSegment] {
        use MotionSegment::*;
        match self {
            BodyPart::Cervical => &[C2C3, C3C4, C4C5, C5C6, C6C7, C7T1],
            BodyPart::Lumbar => &[L1L2, L2L3, L3L4, L4L5, L5S1],
        }
    }

    pub fn schema(self) -> MultiTaskSchema {
        match self {
            BodyPart::Cervical => MultiTaskSchema::cervical(),
            BodyPart::Lumbar => MultiTaskSchema::lumbar(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BodyPart::Cervical => "cervical",
            BodyPart::Lumbar => "lumbar",
        }
    }
}

impl FromStr for BodyPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cervical" => Ok(BodyPart::Cervical),
            "lumbar" => Ok(BodyPart::Lumbar),
            _ => Err(Error::Config(format!("unknown body part {s:?} (expected cervical or lumbar)"))),
        }
    }
}

/// A spinal motion segment, in fixed order, plus the no-segment sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionSegment {
    C2C3,
    C3C4,
    C4C5,
    C5C6,
    C6C7,
    C7T1,
    L1L2,
    L2L3,
    L3L4,
    L4L5,
    L5S1,
    NoSegment,
}

impl MotionSegment {
    pub const ALL: [MotionSegment; 12] = {
        use MotionSegment::*;
        [C2C3, C3C4, C4C5, C5C6, C6C7, C7T1, L1L2, L2L3, L3L4, L4L5, L5S1, NoSegment]
    };

    pub fn name(self) -> &'static str {
        use MotionSegment::*;
        match self {
            C2C3 => "C2-C3",
            C3C4 => "C3-C4",
            C4C5 => "C4-C5",
            C5C6 => "C5-C6",
            C6C7 => "C6-C7",
            C7T1 => "C7-T1",
            L1L2 => "L1-L2",
            L2L3 => "L2-L3",
            L3L4 => "L3-L4",
            L4L5 => "L4-L5",
            L5S1 => "L5-S1",
            NoSegment => "No motion segments found",
        }
    }

    pub fn body_part(self) -> Option<BodyPart> {
        use MotionSegment::*;
        match self {
            C2C3 | C3C4 | C4C5 | C5C6 | C6C7 | C7T1 => Some(BodyPart::Cervical),
            L1L2 | L2L3 | L3L4 | L4L5 | L5S1 => Some(BodyPart::Lumbar),
            NoSegment => None,
        }
    }

    /// Upper and lower vertebra as (letter, number), e.g. `('L', 4), ('L', 5)`.
    pub fn vertebrae(self) -> Option<((char, u8), (char, u8))> {
        let name = self.name().as_bytes();
        if self == MotionSegment::NoSegment {
            return None;
        }
        Some(((name[0] as char, name[1] - b'0'), (name[3] as char, name[4] - b'0')))
    }
}

impl fmt::Display for MotionSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionSegment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionSegment::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Format(format!("unknown motion segment {s:?}")))
    }
}

impl Serialize for MotionSegment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MotionSegment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position along the spine: C1..C7 = 1..7, T1 = 8, L1..L5 = 101..105, S1 = 106.
fn vertebra_index(letter: char, number: u32) -> Option<u32> {
    match (letter, number) {
        ('c', 1..=7) => Some(number),
        ('t', 1) => Some(8),
        ('l', 1..=5) => Some(100 + number),
        ('s', 1) => Some(106),
        _ => None,
    }
}

fn letter_of(index: u32) -> char {
    match index {
        1..=7 => 'c',
        8 => 't',
        101..=105 => 'l',
        _ => 's',
    }
}

fn segment_from_upper(index: u32) -> Option<MotionSegment> {
    use MotionSegment::*;
    Some(match index {
        2 => C2C3,
        3 => C3C4,
        4 => C4C5,
        5 => C5C6,
        6 => C6C7,
        7 => C7T1,
        101 => L1L2,
        102 => L2L3,
        103 => L3L4,
        104 => L4L5,
        105 => L5S1,
        _ => return None,
    })
}

fn mention_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // letter, level (or one corrupted character), optional separator,
        // optional second letter, level (or one corrupted character)
        Regex::new(
            r"(?ix)^
            ([clts]) \s* ([0-9]{1,2}|[^0-9a-z\s])
            \s* (?:[-_/@.~:,=+*\#]\s*)?
            ([clts])? \s* ([0-9]{1,2}|[^0-9a-z\s])
            $",
        )
        .expect("static regex")
    })
}

/// Maps a mention window to the motion segment it names, tolerating the
/// formatting and OCR variants seen in reports ("L23", "L2L3", "L@L3",
/// "L2_L3", "C2-3", "C7T1", ...). Only adjacent levels of the listed
/// segments map; anything else is `None`.
pub fn normalize_segment_mention(window: &str) -> Option<MotionSegment> {
    let w = window.trim_matches(|c: char| c.is_whitespace() || matches!(c, ':' | ',' | ';' | '(' | ')' | '.'));
    let caps = mention_regex().captures(w)?;
    let l1 = caps[1].chars().next()?.to_ascii_lowercase();
    let l2 = caps.get(3).map(|m| m.as_str().chars().next().unwrap().to_ascii_lowercase());
    let n1: Option<u32> = caps[2].parse().ok();
    let n2: Option<u32> = caps[4].parse().ok();
    let (upper, lower) = match (n1, n2) {
        (Some(a), Some(b)) => {
            let upper = vertebra_index(l1, a)?;
            let lower = vertebra_index(l2.unwrap_or(l1), b)?;
            (upper, lower)
        }
        // one corrupted level character: infer it from the other side, which
        // needs both letters to be present
        (None, Some(b)) => {
            let lower = vertebra_index(l2?, b)?;
            let upper = lower.checked_sub(1)?;
            if letter_of(upper) != l1 {
                return None;
            }
            (upper, lower)
        }
        (Some(a), None) => {
            let upper = vertebra_index(l1, a)?;
            let lower = upper + 1;
            if Some(letter_of(lower)) != l2 {
                return None;
            }
            (upper, lower)
        }
        (None, None) => return None,
    };
    if lower != upper + 1 {
        return None;
    }
    // a cross-boundary level needs its letter spelled out ("L5-1" is not L5-S1)
    if l2.is_none() && letter_of(lower) != l1 {
        return None;
    }
    segment_from_upper(upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in MotionSegment::ALL {
            assert_eq!(m.name().parse::<MotionSegment>().unwrap(), m);
            assert_eq!(serde_json::from_str::<MotionSegment>(&serde_json::to_string(&m).unwrap()).unwrap(), m);
        }
        assert_eq!(BodyPart::Lumbar.segments().len() + BodyPart::Cervical.segments().len(), 11);
        assert_eq!(MotionSegment::L5S1.vertebrae(), Some((('L', 5), ('S', 1))));
    }

    #[test]
    fn spec_examples() {
        assert_eq!(normalize_segment_mention("L23"), Some(MotionSegment::L2L3));
        assert_eq!(normalize_segment_mention("C2-3"), Some(MotionSegment::C2C3));
        assert_eq!(normalize_segment_mention("L24"), None);
        assert_eq!(normalize_segment_mention("L@L3"), Some(MotionSegment::L2L3));
        assert_eq!(normalize_segment_mention("T1-T2"), None);
        assert_eq!(normalize_segment_mention("L5-1"), None);
    }
}
