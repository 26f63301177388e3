//! Encoding profiles: the finite set of encoding levels a device can pick.
//!
//! Each level carries its size in bits per pattern, the surrogate entropy
//! used by the controller at decision time (nats) and the accuracy realized
//! at the classifier. Two monotonicity assumptions are enforced on load:
//!
//! - **assumption 1**: entropy is non-increasing in bits per pattern;
//! - **assumption 2**: accuracy is non-increasing in entropy.
//!
//! The "no transmission" choice is not a level; the solver represents it as
//! an absent decision.
//!
//! File formats: CSV with header `level_id,bits_per_pattern,entropy,accuracy`
//! (lines starting with `#` are comments; `# labels: L` sets the label count),
//! or JSON `{"labels": L, "levels": [{"level_id", "bits_per_pattern",
//! "entropy", "accuracy"}, ...]}`. The label count defaults to 10 and fixes
//! the maximum entropy `ln L`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LABELS: u32 = 10;

const DEFAULT_PROFILE_CSV: &str = include_str!("../data/default_profile.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingLevel {
    pub level_id: u32,
    pub bits_per_pattern: u64,
    /// Surrogate entropy φ(n), nats.
    pub entropy: f64,
    pub accuracy: f64,
}

impl EncodingLevel {
    pub fn bits(&self) -> f64 {
        self.bits_per_pattern as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingProfile {
    levels: Vec<EncodingLevel>,
    labels: u32,
    max_entropy: f64,
}

/// First constraint a profile violates.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileViolation {
    Empty,
    TooFewLabels(u32),
    DuplicateLevel(u32),
    ZeroBits(u32),
    BitsNotIncreasing { level_id: u32 },
    EntropyOutOfRange { level_id: u32, entropy: f64, max: f64 },
    AccuracyOutOfRange { level_id: u32, accuracy: f64 },
    EntropyIncreasesWithBits { level_id: u32 },
    AccuracyIncreasesWithEntropy { lower: u32, higher: u32 },
}

impl fmt::Display for ProfileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ProfileViolation::*;
        match self {
            Empty => write!(f, "profile has no levels"),
            TooFewLabels(l) => write!(f, "label count must be at least 2, got {l}"),
            DuplicateLevel(id) => write!(f, "duplicate level_id {id}"),
            ZeroBits(id) => write!(f, "level {id}: bits_per_pattern must be positive"),
            BitsNotIncreasing { level_id } => write!(
                f,
                "level {level_id}: bits_per_pattern must be strictly increasing across levels"
            ),
            EntropyOutOfRange { level_id, entropy, max } => write!(
                f,
                "level {level_id}: entropy {entropy} outside [0, {max}]"
            ),
            AccuracyOutOfRange { level_id, accuracy } => {
                write!(f, "level {level_id}: accuracy {accuracy} outside [0, 1]")
            }
            EntropyIncreasesWithBits { level_id } => write!(
                f,
                "assumption 1 violated at level {level_id}: entropy must be non-increasing in bits_per_pattern"
            ),
            AccuracyIncreasesWithEntropy { lower, higher } => write!(
                f,
                "assumption 2 violated: level {higher} has higher entropy than level {lower} but higher accuracy"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot parse profile: {0}")]
    Parse(String),
    #[error("invalid profile: {0}")]
    Invalid(ProfileViolation),
}

#[derive(Deserialize)]
struct JsonProfile {
    #[serde(default)]
    labels: Option<u32>,
    levels: Vec<EncodingLevel>,
}

impl EncodingProfile {
    pub fn new(levels: Vec<EncodingLevel>, labels: u32) -> Result<Self, ProfileError> {
        let profile = Self {
            levels,
            labels,
            max_entropy: (labels as f64).ln(),
        };
        profile.validate().map_err(ProfileError::Invalid)?;
        Ok(profile)
    }

    /// The shipped 10-class profile.
    pub fn default_profile() -> Self {
        Self::from_csv_str(DEFAULT_PROFILE_CSV).expect("shipped profile is valid")
    }

    pub fn default_profile_csv() -> &'static str {
        DEFAULT_PROFILE_CSV
    }

    pub fn levels(&self) -> &[EncodingLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, index: usize) -> Option<&EncodingLevel> {
        self.levels.get(index)
    }

    pub fn labels(&self) -> u32 {
        self.labels
    }

    /// `ln L`, nats.
    pub fn max_entropy(&self) -> f64 {
        self.max_entropy
    }

    /// Entropy of the largest encoding.
    pub fn min_level_entropy(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.entropy)
    }

    /// Entropy of the smallest encoding.
    pub fn max_level_entropy(&self) -> f64 {
        self.levels.first().map_or(0.0, |l| l.entropy)
    }

    pub fn validate(&self) -> Result<(), ProfileViolation> {
        use ProfileViolation::*;
        if self.levels.is_empty() {
            return Err(Empty);
        }
        if self.labels < 2 {
            return Err(TooFewLabels(self.labels));
        }
        for (i, lvl) in self.levels.iter().enumerate() {
            if self.levels[..i].iter().any(|o| o.level_id == lvl.level_id) {
                return Err(DuplicateLevel(lvl.level_id));
            }
            if lvl.bits_per_pattern == 0 {
                return Err(ZeroBits(lvl.level_id));
            }
            if !(0.0..=self.max_entropy).contains(&lvl.entropy) {
                return Err(EntropyOutOfRange {
                    level_id: lvl.level_id,
                    entropy: lvl.entropy,
                    max: self.max_entropy,
                });
            }
            if !(0.0..=1.0).contains(&lvl.accuracy) {
                return Err(AccuracyOutOfRange {
                    level_id: lvl.level_id,
                    accuracy: lvl.accuracy,
                });
            }
        }
        for pair in self.levels.windows(2) {
            if pair[1].bits_per_pattern <= pair[0].bits_per_pattern {
                return Err(BitsNotIncreasing {
                    level_id: pair[1].level_id,
                });
            }
            if pair[1].entropy > pair[0].entropy {
                return Err(EntropyIncreasesWithBits {
                    level_id: pair[1].level_id,
                });
            }
        }
        for a in &self.levels {
            for b in &self.levels {
                if a.entropy > b.entropy && a.accuracy > b.accuracy {
                    return Err(AccuracyIncreasesWithEntropy {
                        lower: b.level_id,
                        higher: a.level_id,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self, ProfileError> {
        let mut labels = DEFAULT_LABELS;
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("labels:") {
                    labels = v
                        .trim()
                        .parse()
                        .map_err(|_| ProfileError::Parse(format!("bad labels directive `{line}`")))?;
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let levels = reader
            .deserialize()
            .collect::<Result<Vec<EncodingLevel>, _>>()
            .map_err(|e| ProfileError::Parse(e.to_string()))?;
        Self::new(levels, labels)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ProfileError> {
        let raw: JsonProfile =
            serde_json::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        Self::new(raw.levels, raw.labels.unwrap_or(DEFAULT_LABELS))
    }

    /// Loads a `.json` file as JSON and anything else as CSV.
    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProfileError::Parse(format!("{}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }
}
