//! Flat `key = value` configuration files. Flags on the command line win.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

const KEYS: &[&str] = &[
    "model", "R", "r", "zR", "zr", "L", "samples", "seed", "threads", "format", "out", "order", "nmax",
    "rmax", "n1max", "n2max", "streams", "strict", "density_order", "coeff_samples",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key `{k}`", n + 1);
            }
            if v.is_empty() {
                bail!("line {}: empty value for `{k}`", n + 1);
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Config { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| anyhow!("config key `{key}`: cannot parse `{v}`"))
            })
            .transpose()
    }

    /// Flag value, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let c = Config::parse("# desk\nzr = 0.05\nzR=0.003 # large\n\nseed = 7\n").unwrap();
        assert_eq!(c.pick::<f64>(None, "zr", 0.0).unwrap(), 0.05);
        assert_eq!(c.pick(Some(0.1), "zr", 0.0).unwrap(), 0.1);
        assert_eq!(c.pick::<u64>(None, "samples", 5).unwrap(), 5);
        assert_eq!(c.pick::<u64>(None, "seed", 0).unwrap(), 7);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Config::parse("zr 0.05").is_err());
        assert!(Config::parse("zq = 1").is_err());
        assert!(Config::parse("zr =").is_err());
        let c = Config::parse("zr = abc").unwrap();
        assert!(c.pick::<f64>(None, "zr", 0.0).is_err());
    }
}
