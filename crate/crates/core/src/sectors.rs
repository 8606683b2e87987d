//! Particles-content signatures and the decomposition of a state into
//! content sectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{BasisState, Registry, StateVector};

/// Sectors whose weight falls below this are treated as numerical noise.
pub const DEFAULT_SECTOR_EPSILON: f64 = 1e-12;

/// The set of species present in a basis state. Counts are irrelevant: two
/// photons and one photon share the signature `{γ}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentSignature(BTreeSet<String>);

impl ContentSignature {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn new<I, S>(species: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(species.into_iter().map(Into::into).collect())
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, species: &str) -> bool {
        self.0.contains(species)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn species(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for ContentSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(s)?;
        }
        f.write_str("}")
    }
}

impl FromStr for ContentSignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Input(format!("signature '{s}' must look like {{a,b}}")))?;
        Ok(Self::new(
            inner
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty()),
        ))
    }
}

impl Serialize for ContentSignature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentSignature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn signature(reg: &Registry, b: &BasisState) -> ContentSignature {
    ContentSignature(
        b.iter()
            .filter(|&(_, n)| n > 0)
            .map(|(m, _)| reg.mode(m).species.clone())
            .collect(),
    )
}

/// True iff some species is present on exactly one side.
pub fn content_changed(in_sig: &ContentSignature, out_sig: &ContentSignature) -> bool {
    in_sig != out_sig
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorPart {
    pub probability: f64,
    /// Normalized projection of the input onto this sector.
    pub component: StateVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorDecomposition {
    parts: BTreeMap<ContentSignature, SectorPart>,
    dropped_weight: f64,
}

impl SectorDecomposition {
    pub fn parts(&self) -> impl Iterator<Item = (&ContentSignature, &SectorPart)> {
        self.parts.iter()
    }

    pub fn get(&self, sig: &ContentSignature) -> Option<&SectorPart> {
        self.parts.get(sig)
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn probabilities(&self) -> BTreeMap<ContentSignature, f64> {
        self.parts
            .iter()
            .map(|(s, p)| (s.clone(), p.probability))
            .collect()
    }

    /// Weight of sectors discarded as below the negligible-sector threshold.
    pub fn dropped_weight(&self) -> f64 {
        self.dropped_weight
    }

    /// `Σ √p_k · component_k`; equals the normalized input when nothing was
    /// dropped.
    pub fn recombine(&self) -> StateVector {
        self.parts.values().fold(StateVector::zero(), |acc, p| {
            acc.add(&p.component.scale(Complex64::new(p.probability.sqrt(), 0.0)))
        })
    }
}

/// Splits a state by content signature. Sectors with weight below `epsilon`
/// are dropped and the remaining probabilities rescaled to sum to one.
pub fn sector_decompose(reg: &Registry, s: &StateVector, epsilon: f64) -> Result<SectorDecomposition> {
    let total = s.norm_sqr();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::DegenerateState("cannot decompose a zero vector".into()));
    }
    let mut grouped: BTreeMap<ContentSignature, Vec<(BasisState, Complex64)>> = BTreeMap::new();
    for (b, a) in s.iter() {
        grouped
            .entry(signature(reg, b))
            .or_default()
            .push((b.clone(), *a));
    }
    let mut parts = BTreeMap::new();
    let mut kept = 0.0;
    let mut dropped = 0.0;
    for (sig, items) in grouped {
        let component = StateVector::from_amplitudes(items);
        let w = component.norm_sqr() / total;
        if w < epsilon || component.is_zero() {
            dropped += w;
            continue;
        }
        kept += w;
        let component = component.normalize()?;
        parts.insert(sig, SectorPart { probability: w, component });
    }
    if parts.is_empty() {
        return Err(Error::DegenerateState("every sector is below the negligible threshold".into()));
    }
    for p in parts.values_mut() {
        p.probability /= kept;
    }
    Ok(SectorDecomposition {
        parts,
        dropped_weight: dropped,
    })
}

/// True iff the state has at least two sectors above `epsilon`.
pub fn is_cross_sector_superposition(reg: &Registry, s: &StateVector, epsilon: f64) -> bool {
    sector_decompose(reg, s, epsilon)
        .map(|d| d.len() >= 2)
        .unwrap_or(false)
}
