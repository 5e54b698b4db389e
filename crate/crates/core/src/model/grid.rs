//! Modes, criteria and the fixed-size tables keyed by them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A transport mode. The declaration order is the canonical order used for
/// every deterministic tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Car,
    Bike,
    Bus,
    Walk,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Car, Mode::Bike, Mode::Bus, Mode::Walk];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Car => "car",
            Mode::Bike => "bike",
            Mode::Bus => "bus",
            Mode::Walk => "walk",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "car" => Ok(Mode::Car),
            "bike" | "bicycle" => Ok(Mode::Bike),
            "bus" => Ok(Mode::Bus),
            "walk" => Ok(Mode::Walk),
            other => Err(Error::UnknownName { kind: "mode", name: other.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Ecology,
    Comfort,
    Price,
    Practicality,
    Time,
    Safety,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Ecology,
        Criterion::Comfort,
        Criterion::Price,
        Criterion::Practicality,
        Criterion::Time,
        Criterion::Safety,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Ecology => "ecology",
            Criterion::Comfort => "comfort",
            Criterion::Price => "price",
            Criterion::Practicality => "practicality",
            Criterion::Time => "time",
            Criterion::Safety => "safety",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecology" => Ok(Criterion::Ecology),
            "comfort" => Ok(Criterion::Comfort),
            "price" => Ok(Criterion::Price),
            "practicality" => Ok(Criterion::Practicality),
            "time" => Ok(Criterion::Time),
            "safety" => Ok(Criterion::Safety),
            other => Err(Error::UnknownName { kind: "criterion", name: other.to_string() }),
        }
    }
}

/// One number per criterion: a priority profile or a row of mode values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CriteriaVector(pub [f64; Criterion::COUNT]);

impl CriteriaVector {
    pub fn splat(v: f64) -> Self {
        CriteriaVector([v; Criterion::COUNT])
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Criterion, f64)> + '_ {
        Criterion::ALL.iter().map(move |&c| (c, self.0[c.index()]))
    }

    pub fn map(&self, mut f: impl FnMut(Criterion, f64) -> f64) -> Self {
        let mut out = *self;
        for c in Criterion::ALL {
            out.0[c.index()] = f(c, self.0[c.index()]);
        }
        out
    }
}

impl Index<Criterion> for CriteriaVector {
    type Output = f64;
    fn index(&self, c: Criterion) -> &f64 {
        &self.0[c.index()]
    }
}

impl IndexMut<Criterion> for CriteriaVector {
    fn index_mut(&mut self, c: Criterion) -> &mut f64 {
        &mut self.0[c.index()]
    }
}

impl Serialize for CriteriaVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<Criterion, f64> = self.iter().collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CriteriaVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<Criterion, f64>::deserialize(d)?;
        let mut out = CriteriaVector::default();
        for c in Criterion::ALL {
            out[c] = *map
                .get(&c)
                .ok_or_else(|| serde::de::Error::custom(format!("missing criterion `{c}`")))?;
        }
        Ok(out)
    }
}

/// A value per (mode, criterion) pair. Used for objective layouts, perceived
/// values and perception filters alike.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeGrid(pub [CriteriaVector; Mode::COUNT]);

impl ModeGrid {
    pub fn splat(v: f64) -> Self {
        ModeGrid([CriteriaVector::splat(v); Mode::COUNT])
    }

    /// The identity perception filter.
    pub fn identity() -> Self {
        Self::splat(1.0)
    }

    pub fn from_rows(rows: [[f64; Criterion::COUNT]; Mode::COUNT]) -> Self {
        ModeGrid(rows.map(CriteriaVector))
    }

    pub fn get(&self, m: Mode, c: Criterion) -> f64 {
        self.0[m.index()][c]
    }

    pub fn set(&mut self, m: Mode, c: Criterion, v: f64) {
        self.0[m.index()][c] = v;
    }

    pub fn row(&self, m: Mode) -> &CriteriaVector {
        &self.0[m.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (Mode, Criterion, f64)> + '_ {
        Mode::ALL
            .iter()
            .flat_map(move |&m| Criterion::ALL.iter().map(move |&c| (m, c, self.get(m, c))))
    }

    pub fn map(&self, mut f: impl FnMut(Mode, Criterion, f64) -> f64) -> Self {
        let mut out = *self;
        for m in Mode::ALL {
            for c in Criterion::ALL {
                out.set(m, c, f(m, c, self.get(m, c)));
            }
        }
        out
    }

    pub fn all_within(&self, lo: f64, hi: f64) -> bool {
        self.entries().all(|(_, _, v)| v >= lo && v <= hi)
    }
}

impl Index<Mode> for ModeGrid {
    type Output = CriteriaVector;
    fn index(&self, m: Mode) -> &CriteriaVector {
        &self.0[m.index()]
    }
}

impl IndexMut<Mode> for ModeGrid {
    fn index_mut(&mut self, m: Mode) -> &mut CriteriaVector {
        &mut self.0[m.index()]
    }
}

impl Serialize for ModeGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<Mode, CriteriaVector> = Mode::ALL.iter().map(|&m| (m, self[m])).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = PerMode::<CriteriaVector>::deserialize(d)?;
        Ok(ModeGrid(map.0))
    }
}

/// One value per mode, serialized as a map keyed by mode name.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerMode<T>(pub [T; Mode::COUNT]);

impl<T> PerMode<T> {
    pub fn from_fn(f: impl FnMut(usize) -> T) -> Self {
        PerMode(std::array::from_fn(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &T)> {
        Mode::ALL.iter().copied().zip(self.0.iter())
    }
}

impl<T> Index<Mode> for PerMode<T> {
    type Output = T;
    fn index(&self, m: Mode) -> &T {
        &self.0[m.index()]
    }
}

impl<T> IndexMut<Mode> for PerMode<T> {
    fn index_mut(&mut self, m: Mode) -> &mut T {
        &mut self.0[m.index()]
    }
}

impl<T: Serialize> Serialize for PerMode<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<Mode, &T> = self.iter().collect();
        map.serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PerMode<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut map = BTreeMap::<Mode, T>::deserialize(d)?;
        let mut missing = Vec::new();
        let mut values: [Option<T>; Mode::COUNT] = Default::default();
        for m in Mode::ALL {
            match map.remove(&m) {
                Some(v) => values[m.index()] = Some(v),
                None => missing.push(m.name()),
            }
        }
        if !missing.is_empty() {
            return Err(serde::de::Error::custom(format!("missing modes: {}", missing.join(", "))));
        }
        Ok(PerMode(values.map(|v| v.expect("checked above"))))
    }
}
