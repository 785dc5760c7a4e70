use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the samples are increments of a process (counts per bin) or the
/// cumulative path itself. Scaling-slope interpretation depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Increments,
    Cumulative,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Increments => "increments",
            SeriesKind::Cumulative => "cumulative",
        }
    }
}

/// A finite real-valued series plus provenance metadata (generator, seeds,
/// source file). Metadata is a sorted map so serialized artifacts are stable.
#[derive(Debug, Clone)]
pub struct TraceSeries {
    pub values: Vec<f64>,
    pub kind: SeriesKind,
    pub meta: BTreeMap<String, String>,
}

impl TraceSeries {
    pub fn new(values: Vec<f64>, kind: SeriesKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "series value at index {pos} is not finite"
            )));
        }
        Ok(TraceSeries {
            values,
            kind,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn expect_kind(&self, expected: SeriesKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::Kind {
                expected: expected.name(),
                got: self.kind.name(),
            });
        }
        Ok(())
    }

    /// Running sum of an increment series: the cumulative path Y with
    /// Y[k] = sum of the first k+1 increments.
    pub fn cumulate(&self) -> Result<TraceSeries> {
        self.expect_kind(SeriesKind::Increments)?;
        let mut acc = 0.0;
        let values = self
            .values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Ok(TraceSeries {
            values,
            kind: SeriesKind::Cumulative,
            meta: self.meta.clone(),
        })
    }

    /// First differences of a cumulative path. The first sample has no
    /// predecessor and is dropped, so the output is one shorter.
    pub fn difference(&self) -> Result<TraceSeries> {
        self.expect_kind(SeriesKind::Cumulative)?;
        if self.values.len() < 2 {
            return Err(Error::Size(
                "differencing needs at least 2 samples".into(),
            ));
        }
        let values = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(TraceSeries {
            values,
            kind: SeriesKind::Increments,
            meta: self.meta.clone(),
        })
    }
}
