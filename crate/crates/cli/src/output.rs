use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use colloid_expansion::Warning;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// A command result: a JSON payload, an optional table, and whether any
/// convergence criterion was reported as violated.
pub struct Report {
    pub json: Map<String, Value>,
    pub csv: Option<String>,
    pub violated: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut json = Map::new();
        json.insert("schema".into(), json!(SCHEMA));
        json.insert("command".into(), json!(command));
        Report {
            json,
            csv: None,
            violated: false,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> Result<&mut Self> {
        self.json.insert(key.into(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn warnings(&mut self, warnings: &[Warning]) -> Result<&mut Self> {
        self.violated |= warnings
            .iter()
            .any(|w| matches!(w, Warning::CriterionViolated { .. }));
        self.set("warnings", warnings)
    }

    pub fn table(&mut self, header: &str, rows: impl IntoIterator<Item = String>) -> &mut Self {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.csv = Some(s);
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&Value::Object(self.json.clone()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => match &self.csv {
                Some(t) => Ok(t.clone()),
                None => bail!("this command has no tabular output; use --format json"),
            },
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let text = self.render(format)?;
        match out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}
