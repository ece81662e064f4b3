//! Model configuration: spacetime dimension, intercept, gauge and truncation.

use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::{parse_q, q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gauge {
    LightCone,
    Covariant,
}

impl FromStr for Gauge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lc" | "lightcone" | "light-cone" | "light_cone" => Ok(Gauge::LightCone),
            "cov" | "covariant" => Ok(Gauge::Covariant),
            other => Err(Error::Parse(format!("unknown gauge '{other}'"))),
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gauge::LightCone => write!(f, "lc"),
            Gauge::Covariant => write!(f, "cov"),
        }
    }
}

/// Diagonal metric on the oscillator directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Metric {
    signs: Vec<i8>,
}

impl Metric {
    /// Minkowski metric in `d` directions: index 0 is timelike.
    pub fn minkowski(d: usize) -> Self {
        let mut signs = vec![1; d];
        if d > 0 {
            signs[0] = -1;
        }
        Metric { signs }
    }

    pub fn euclidean(directions: usize) -> Self {
        Metric { signs: vec![1; directions] }
    }

    pub fn from_signs(signs: Vec<i8>) -> Self {
        assert!(signs.iter().all(|s| *s == 1 || *s == -1), "metric signs must be +1 or -1");
        Metric { signs }
    }

    pub fn directions(&self) -> usize {
        self.signs.len()
    }

    pub fn sign(&self, mu: usize) -> i8 {
        self.signs[mu]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn negative_count(&self) -> usize {
        self.signs.iter().filter(|s| **s < 0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub a: Q,
    pub gauge: Gauge,
    pub level_cutoff: usize,
    pub particle_cutoff: usize,
    /// Center-of-mass dimension used by the spacetime numerics; independent of `d`.
    pub d_cm: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 26,
            a: Q::one(),
            gauge: Gauge::Covariant,
            level_cutoff: 2,
            particle_cutoff: 3,
            d_cm: 2,
        }
    }
}

impl ModelConfig {
    pub fn new(d: usize, a: Q, gauge: Gauge, level_cutoff: usize) -> Self {
        ModelConfig { d, a, gauge, level_cutoff, ..Default::default() }
    }

    pub fn critical(gauge: Gauge, level_cutoff: usize) -> Self {
        Self::new(26, q(1), gauge, level_cutoff)
    }

    pub fn validate(self) -> Result<Self> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("spacetime dimension must be positive".into()));
        }
        if self.gauge == Gauge::LightCone && self.d < 3 {
            return Err(Error::InvalidConfig(format!(
                "light-cone gauge needs d >= 3 (d = {} leaves no transverse directions)",
                self.d
            )));
        }
        if self.particle_cutoff == 0 {
            return Err(Error::InvalidConfig("particle cutoff must be at least 1".into()));
        }
        if self.d_cm < 2 {
            return Err(Error::InvalidConfig("center-of-mass dimension must be at least 2".into()));
        }
        Ok(self)
    }

    /// Number of oscillator directions: `d - 2` transverse in light-cone gauge, `d` otherwise.
    pub fn directions(&self) -> usize {
        match self.gauge {
            Gauge::LightCone => self.d - 2,
            Gauge::Covariant => self.d,
        }
    }

    pub fn metric(&self) -> Metric {
        match self.gauge {
            Gauge::LightCone => Metric::euclidean(self.d - 2),
            Gauge::Covariant => Metric::minkowski(self.d),
        }
    }

    /// Applies `key = value` lines (comments start with `#`). Unknown keys are errors.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Parse(format!("invalid value '{value}' for {what}"));
        match key {
            "d" => self.d = value.parse().map_err(|_| bad("d"))?,
            "a" => self.a = parse_q(value).ok_or_else(|| bad("a"))?,
            "gauge" => self.gauge = value.parse()?,
            "level_cutoff" | "cutoff" | "N" => {
                self.level_cutoff = value.parse().map_err(|_| bad("level_cutoff"))?
            }
            "particle_cutoff" => {
                self.particle_cutoff = value.parse().map_err(|_| bad("particle_cutoff"))?
            }
            "d_cm" | "dcm" => self.d_cm = value.parse().map_err(|_| bad("d_cm"))?,
            other => return Err(Error::Parse(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }
}
