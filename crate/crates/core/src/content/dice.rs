//! `NdM+K` dice expressions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A parsed dice expression: `count` dice with `sides` faces plus a flat
/// `modifier`. A bare constant such as `"5"` parses with `count == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiceExpr {
    pub count: u32,
    pub sides: u32,
    pub modifier: i32,
}

impl DiceExpr {
    pub const fn new(count: u32, sides: u32, modifier: i32) -> Self {
        Self {
            count,
            sides,
            modifier,
        }
    }

    pub fn min(&self) -> i32 {
        self.count as i32 + self.modifier
    }

    pub fn max(&self) -> i32 {
        (self.count * self.sides) as i32 + self.modifier
    }

    pub fn mean(&self) -> f64 {
        self.count as f64 * (self.sides as f64 + 1.0) / 2.0 + self.modifier as f64
    }

    /// Mean of the dice alone, without the flat modifier.
    pub fn dice_mean(&self) -> f64 {
        self.count as f64 * (self.sides as f64 + 1.0) / 2.0
    }

    pub fn with_modifier(self, extra: i32) -> Self {
        Self {
            modifier: self.modifier + extra,
            ..self
        }
    }
}

impl FromStr for DiceExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::DiceParse(s.to_string());
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(bad());
        }
        let Some(d) = text.find(['d', 'D']) else {
            let modifier: i32 = text.parse().map_err(|_| bad())?;
            return Ok(DiceExpr::new(0, 0, modifier));
        };
        let count: u32 = text[..d].parse().map_err(|_| bad())?;
        let rest = &text[d + 1..];
        let split = rest.find(['+', '-']);
        let (sides_str, modifier) = match split {
            Some(i) => {
                let m: i32 = rest[i + 1..].parse().map_err(|_| bad())?;
                (&rest[..i], if &rest[i..=i] == "-" { -m } else { m })
            }
            None => (rest, 0),
        };
        if sides_str.starts_with(['+', '-']) {
            return Err(bad());
        }
        let sides: u32 = sides_str.parse().map_err(|_| bad())?;
        if count == 0 || sides == 0 || count > 100 || sides > 1000 {
            return Err(bad());
        }
        Ok(DiceExpr::new(count, sides, modifier))
    }
}

impl fmt::Display for DiceExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 0 {
            return write!(f, "{}", self.modifier);
        }
        write!(f, "{}d{}", self.count, self.sides)?;
        match self.modifier {
            0 => Ok(()),
            m if m > 0 => write!(f, "+{m}"),
            m => write!(f, "{m}"),
        }
    }
}

impl Serialize for DiceExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DiceExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_standard_forms() {
        assert_eq!("2d6+3".parse::<DiceExpr>().unwrap(), DiceExpr::new(2, 6, 3));
        assert_eq!("1d8".parse::<DiceExpr>().unwrap(), DiceExpr::new(1, 8, 0));
        assert_eq!("3d4-1".parse::<DiceExpr>().unwrap(), DiceExpr::new(3, 4, -1));
        assert_eq!("7".parse::<DiceExpr>().unwrap(), DiceExpr::new(0, 0, 7));
        assert_eq!(" 1 d 12 + 4 ".parse::<DiceExpr>().unwrap(), DiceExpr::new(1, 12, 4));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "d6", "2d", "2d0", "0d6", "2d6+", "2x6", "2d-6", "abc", "2d6+1d4"] {
            assert!(s.parse::<DiceExpr>().is_err(), "{s} should not parse");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["2d6+3", "1d8", "3d4-1", "7", "10d10+10"] {
            assert_eq!(s.parse::<DiceExpr>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn bounds_and_mean() {
        let d: DiceExpr = "2d6+3".parse().unwrap();
        assert_eq!((d.min(), d.max()), (5, 15));
        assert_eq!(d.mean(), 10.0);
    }
}
