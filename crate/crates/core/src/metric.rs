//! Percentage-of-fulfilled-characteristics metric.
//!
//! All arithmetic is done on integers (tenths for a single score,
//! hundredths for an aggregate) so printed values never depend on float
//! rounding.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::characteristic::{Characteristic, CharacteristicReport};
use crate::Error;

/// Share of assessed characteristics a requirement fulfils, to one decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "ScoreRepr", try_from = "ScoreRepr")]
pub struct QualityScore {
    tenths: u32,
    fulfilled_count: u32,
    assessed_count: u32,
}

#[derive(Serialize, Deserialize)]
struct ScoreRepr {
    value: f64,
    fulfilled_count: u32,
    assessed_count: u32,
}

impl From<QualityScore> for ScoreRepr {
    fn from(s: QualityScore) -> Self {
        ScoreRepr {
            value: s.value(),
            fulfilled_count: s.fulfilled_count,
            assessed_count: s.assessed_count,
        }
    }
}

impl TryFrom<ScoreRepr> for QualityScore {
    type Error = Error;

    fn try_from(r: ScoreRepr) -> Result<Self, Error> {
        let score = QualityScore::from_counts(r.fulfilled_count, r.assessed_count)?;
        if (score.value() - r.value).abs() > 1e-9 {
            return Err(Error::InvalidScore(format!(
                "value {} disagrees with {}/{}",
                r.value, r.fulfilled_count, r.assessed_count
            )));
        }
        Ok(score)
    }
}

impl QualityScore {
    pub fn from_counts(fulfilled_count: u32, assessed_count: u32) -> Result<Self, Error> {
        if assessed_count == 0 || fulfilled_count > assessed_count {
            return Err(Error::InvalidScore(format!(
                "{fulfilled_count} fulfilled of {assessed_count} assessed"
            )));
        }
        // round_half_up(1000 f / a) == floor((2000 f + a) / 2a)
        let f = u64::from(fulfilled_count);
        let a = u64::from(assessed_count);
        let tenths = ((2000 * f + a) / (2 * a)) as u32;
        Ok(Self {
            tenths,
            fulfilled_count,
            assessed_count,
        })
    }

    pub fn value(&self) -> f64 {
        f64::from(self.tenths) / 10.0
    }

    pub fn tenths(&self) -> u32 {
        self.tenths
    }

    pub fn fulfilled_count(&self) -> u32 {
        self.fulfilled_count
    }

    pub fn assessed_count(&self) -> u32 {
        self.assessed_count
    }

    pub fn is_perfect(&self) -> bool {
        self.fulfilled_count == self.assessed_count
    }
}

impl fmt::Display for QualityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
    }
}

/// Scores a report over its assessed characteristics.
pub fn compute_quality(report: &CharacteristicReport) -> QualityScore {
    let assessed = report.assessed();
    let fulfilled = assessed
        .iter()
        .filter(|c| report.is_fulfilled(**c))
        .count() as u32;
    QualityScore::from_counts(fulfilled, assessed.len() as u32)
        .expect("a valid report has a non-empty assessed set")
}

/// Assessed characteristics the report marks as not fulfilled.
pub fn unfulfilled(report: &CharacteristicReport) -> BTreeSet<Characteristic> {
    report
        .assessed()
        .iter()
        .copied()
        .filter(|c| !report.is_fulfilled(*c))
        .collect()
}

/// Mean of several scores, to two decimals (round half up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggregateScore {
    hundredths: u64,
}

impl AggregateScore {
    pub fn value(&self) -> f64 {
        self.hundredths as f64 / 100.0
    }

    pub fn hundredths(&self) -> u64 {
        self.hundredths
    }
}

impl fmt::Display for AggregateScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.hundredths / 100, self.hundredths % 100)
    }
}

impl Serialize for AggregateScore {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

pub fn aggregate_quality(scores: &[QualityScore]) -> Result<AggregateScore, Error> {
    if scores.is_empty() {
        return Err(Error::NothingToAggregate);
    }
    let n = scores.len() as u64;
    let sum_tenths: u64 = scores.iter().map(|s| u64::from(s.tenths)).sum();
    // mean in hundredths = round_half_up(10 * sum / n)
    let hundredths = (20 * sum_tenths + n) / (2 * n);
    Ok(AggregateScore { hundredths })
}
