//! Tabulated sweep output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Formats a float in scientific notation with 9 significant digits.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    /// Named observables in column order.
    pub series: Vec<(String, Vec<f64>)>,
}

impl ScanResult {
    pub fn new(axis_name: impl Into<String>, axis_values: Vec<f64>) -> Self {
        Self {
            axis_name: axis_name.into(),
            axis_values,
            series: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.axis_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis_values.is_empty()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.axis_values.len() {
            return Err(Error::invalid(
                "series",
                format!("`{name}` has {} values, axis has {}", values.len(), self.axis_values.len()),
            ));
        }
        if self.get(&name).is_some() {
            return Err(Error::invalid("series", format!("duplicate series `{name}`")));
        }
        self.series.push((name, values));
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.push(name, values)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Checks that the named series lie in [0, 1] within 1e-9.
    pub fn check_probabilities(&self, names: &[&str]) -> Result<()> {
        for name in names {
            let v = self
                .get(name)
                .ok_or_else(|| Error::invalid("series", format!("missing `{name}`")))?;
            if let Some(bad) = v.iter().find(|p| !(-1e-9..=1.0 + 1e-9).contains(*p)) {
                return Err(Error::invalid("series", format!("`{name}` value {bad} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.axis_name);
        for (name, _) in &self.series {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, x) in self.axis_values.iter().enumerate() {
            out.push_str(&fmt_sci(*x));
            for (_, v) in &self.series {
                let _ = write!(out, ",{}", fmt_sci(v[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
