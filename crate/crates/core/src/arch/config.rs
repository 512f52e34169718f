use std::fmt;
use std::str::FromStr;

use super::ArchError;

/// Channel-width multiplier kept as an exact fraction so scaled widths round
/// predictably: `max(1, ceil(c · num / den))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthMultiplier {
    num: u32,
    den: u32,
}

impl WidthMultiplier {
    pub const FULL: Self = Self { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, ArchError> {
        if num == 0 || den == 0 {
            return Err(ArchError::InvalidConfig(format!(
                "width multiplier {num}/{den} must be positive"
            )));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn scale(&self, channels: usize) -> usize {
        let scaled = (channels as u64 * self.num as u64).div_ceil(self.den as u64);
        (scaled as usize).max(1)
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for WidthMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for WidthMultiplier {
    type Err = ArchError;

    /// Accepts `"1"`, `"1/8"` or a terminating decimal such as `"0.25"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ArchError::InvalidConfig(format!("cannot parse width multiplier {s:?}"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 6 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10u32.pow(frac.len() as u32);
            let int: u32 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let frac_v: u32 = if frac.is_empty() {
                0
            } else {
                frac.parse().map_err(|_| bad())?
            };
            return Self::new(int * den + frac_v, den);
        }
        Self::new(s.parse().map_err(|_| bad())?, 1)
    }
}

/// Declarative description of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub width: WidthMultiplier,
    pub num_cuisines: usize,
    pub num_flavors: usize,
    pub bottleneck_counts: [usize; 4],
    pub dropout_p: f64,
    pub input_size: usize,
    pub pool_scales: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            width: WidthMultiplier::FULL,
            num_cuisines: 10,
            num_flavors: 6,
            bottleneck_counts: [3, 4, 6, 3],
            dropout_p: 0.5,
            input_size: 224,
            pool_scales: vec![1, 2, 3, 6],
        }
    }
}

/// Keys used by [`ModelConfig::to_kv`] / [`ModelConfig::set`].
pub const MODEL_KEYS: [&str; 7] = [
    "width_multiplier",
    "num_cuisines",
    "num_flavors",
    "bottleneck_counts",
    "dropout_p",
    "input_size",
    "pool_scales",
];

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ArchError> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| ArchError::InvalidConfig(format!("{key}: cannot parse {value:?} as a list of integers")))
        })
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ModelConfig {
    /// Spatial side of the backbone output (input halved four times).
    pub fn grid_size(&self) -> usize {
        self.input_size / 16
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let bad = |m: String| Err(ArchError::InvalidConfig(m));
        if self.input_size == 0 || !self.input_size.is_multiple_of(16) {
            return bad(format!(
                "input_size {} must be a positive multiple of 16",
                self.input_size
            ));
        }
        if self.num_cuisines == 0 || self.num_flavors == 0 {
            return bad("class counts must be positive".into());
        }
        if self.bottleneck_counts.contains(&0) {
            return bad(format!(
                "bottleneck_counts {:?} must all be positive",
                self.bottleneck_counts
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout_p {} outside [0, 1)", self.dropout_p));
        }
        if self.pool_scales.is_empty() {
            return bad("pool_scales must not be empty".into());
        }
        let grid = self.grid_size();
        if let Some(&s) = self.pool_scales.iter().find(|&&s| s == 0 || s > grid) {
            return bad(format!(
                "pool scale {s} does not fit the {grid}x{grid} backbone grid of input_size {}",
                self.input_size
            ));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ArchError> {
        let num = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| ArchError::InvalidConfig(format!("{key}: cannot parse {v:?} as an integer")))
        };
        match key {
            "width_multiplier" => self.width = value.parse()?,
            "num_cuisines" => self.num_cuisines = num(value)?,
            "num_flavors" => self.num_flavors = num(value)?,
            "bottleneck_counts" => {
                let v = parse_list(key, value)?;
                self.bottleneck_counts = v
                    .try_into()
                    .map_err(|_| ArchError::InvalidConfig(format!("{key}: expected four counts")))?;
            }
            "dropout_p" => {
                self.dropout_p = value
                    .trim()
                    .parse()
                    .map_err(|_| ArchError::InvalidConfig(format!("{key}: cannot parse {value:?}")))?
            }
            "input_size" => self.input_size = num(value)?,
            "pool_scales" => self.pool_scales = parse_list(key, value)?,
            _ => return Err(ArchError::InvalidConfig(format!("unknown model key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("width_multiplier", self.width.to_string()),
            ("num_cuisines", self.num_cuisines.to_string()),
            ("num_flavors", self.num_flavors.to_string()),
            ("bottleneck_counts", join(&self.bottleneck_counts)),
            ("dropout_p", format!("{:?}", self.dropout_p)),
            ("input_size", self.input_size.to_string()),
            ("pool_scales", join(&self.pool_scales)),
        ]
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        self.to_kv().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, ArchError> {
        let mut cfg = Self::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ArchError::InvalidConfig(format!("malformed config line {line:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
