//! Domain records shared across the pipeline.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Moving (H&E) to fixed (IHC) point correspondences in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSet {
    pub pairs: Vec<([f64; 2], [f64; 2])>,
}

#[derive(Serialize, Deserialize)]
struct LandmarkPairJson {
    moving: [f64; 2],
    fixed: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct LandmarkSetJson {
    pairs: Vec<LandmarkPairJson>,
}

impl Serialize for LandmarkSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LandmarkSetJson {
            pairs: self.pairs.iter().map(|&(moving, fixed)| LandmarkPairJson { moving, fixed }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LandmarkSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = LandmarkSetJson::deserialize(d)?;
        Ok(Self { pairs: j.pairs.into_iter().map(|p| (p.moving, p.fixed)).collect() })
    }
}

impl LandmarkSet {
    pub fn new(pairs: Vec<([f64; 2], [f64; 2])>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn moving(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn fixed(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    /// Rejects non-finite coordinates and repeated points on either side.
    pub fn validate(&self) -> Result<()> {
        for side in [0, 1] {
            let mut seen = HashSet::new();
            for p in &self.pairs {
                let pt = if side == 0 { p.0 } else { p.1 };
                if !pt.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput(format!("non-finite landmark {pt:?}")));
                }
                if !seen.insert((pt[0].to_bits(), pt[1].to_bits())) {
                    return Err(Error::Degenerate(format!("duplicate landmark {pt:?}")));
                }
            }
        }
        Ok(())
    }
}

/// HER2 expression grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Her2Level {
    Zero,
    One,
    Two,
    Three,
}

impl Her2Level {
    pub const ALL: [Her2Level; 4] = [Her2Level::Zero, Her2Level::One, Her2Level::Two, Her2Level::Three];

    pub fn as_str(self) -> &'static str {
        match self {
            Her2Level::Zero => "0",
            Her2Level::One => "1+",
            Her2Level::Two => "2+",
            Her2Level::Three => "3+",
        }
    }

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Her2Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Her2Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Her2Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown HER2 level {s:?}")))
    }
}

impl Serialize for Her2Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Her2Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidInput(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcFlags {
    pub tissue_pass: bool,
    pub alignment_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub patch_id: String,
    pub wsi_id: String,
    pub origin: [u64; 2],
    pub size: u64,
    pub her2: Her2Level,
    pub split: Split,
    pub qc: QcFlags,
}

/// Per-split entry counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: u64,
    pub val: u64,
    pub test: u64,
}

impl SplitCounts {
    pub fn total(&self) -> u64 {
        self.train + self.val + self.test
    }
}

/// Extracted patch pairs. Serialized with a derived `summary` that is
/// checked on parse.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchManifest {
    pub patch_size: u64,
    pub stride: u64,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    patch_size: u64,
    stride: u64,
    entries: Vec<ManifestEntry>,
    summary: SplitCounts,
}

impl PatchManifest {
    pub fn new(patch_size: u64, stride: u64, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self { patch_size, stride, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.stride == 0 {
            return Err(Error::InvalidInput("patch size and stride must be positive".into()));
        }
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(e.patch_id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate patch_id {:?}", e.patch_id)));
            }
            if e.size != self.patch_size {
                return Err(Error::InvalidInput(format!(
                    "{}: size {} != patch size {}",
                    e.patch_id, e.size, self.patch_size
                )));
            }
            if e.origin[0] % self.stride != 0 || e.origin[1] % self.stride != 0 {
                return Err(Error::InvalidInput(format!(
                    "{}: origin {:?} not a multiple of stride {}",
                    e.patch_id, e.origin, self.stride
                )));
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for e in &self.entries {
            match e.split {
                Split::Train => c.train += 1,
                Split::Val => c.val += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }

    /// Counts per HER2 level, keyed by the serialized label.
    pub fn her2_counts(&self) -> BTreeMap<&'static str, u64> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.her2.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_string(&ManifestJson {
            patch_size: self.patch_size,
            stride: self.stride,
            entries: self.entries.clone(),
            summary: self.summary(),
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ManifestJson = serde_json::from_str(s)?;
        let m = Self { patch_size: j.patch_size, stride: j.stride, entries: j.entries };
        m.validate()?;
        if m.summary() != j.summary {
            return Err(Error::InvalidInput(format!(
                "summary {:?} disagrees with entries {:?}",
                j.summary,
                m.summary()
            )));
        }
        Ok(m)
    }
}
