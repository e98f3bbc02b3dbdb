use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ground_truth::GroundTruth;
use crate::error::{Error, Result};
use crate::spectral::EdgeList;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Random,
    Adversarial,
}

impl Provenance {
    fn as_str(&self) -> &'static str {
        match self {
            Provenance::Random => "random",
            Provenance::Adversarial => "adversarial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub provenance: Provenance,
}

/// Revealed entries of an n1×n2 matrix, sorted by (i, j), no duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    n1: usize,
    n2: usize,
    entries: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(n1: usize, n2: usize, mut entries: Vec<Observation>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::arg("observation grid must be nonempty"));
        }
        if let Some(o) = entries.iter().find(|o| o.i >= n1 || o.j >= n2) {
            return Err(Error::arg(format!("entry ({}, {}) out of range", o.i, o.j)));
        }
        entries.sort_by_key(|o| (o.i, o.j));
        if let Some(w) = entries.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::arg(format!("duplicate entry ({}, {})", w[0].i, w[0].j)));
        }
        Ok(Self { n1, n2, entries })
    }

    /// Every entry of `m`, flagged random.
    pub fn full(m: &DMatrix<f64>) -> Result<Self> {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Observation { i, j, value: m[(i, j)], provenance: Provenance::Random })
            .collect();
        Self::new(m.nrows(), m.ncols(), entries)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn find(&self, i: usize, j: usize) -> Option<&Observation> {
        self.entries.binary_search_by_key(&(i, j), |o| (o.i, o.j)).ok().map(|k| &self.entries[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.find(i, j).is_some()
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.entries.iter().filter(|o| o.provenance == p).count()
    }

    /// Only the entries with the given provenance.
    pub fn filter(&self, p: Provenance) -> Self {
        Self { n1: self.n1, n2: self.n2, entries: self.entries.iter().filter(|o| o.provenance == p).copied().collect() }
    }

    pub fn edge_list(&self) -> EdgeList {
        EdgeList::new(self.n1, self.n2, self.entries.iter().map(|o| (o.i, o.j)).collect())
            .expect("observation indices are validated on construction")
    }

    /// 0/1 indicator of Ω.
    pub fn indicator(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n1, self.n2);
        for o in &self.entries {
            m[(o.i, o.j)] = 1.0;
        }
        m
    }

    /// Observed values placed in a dense matrix, zero elsewhere.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n1, self.n2);
        for o in &self.entries {
            m[(o.i, o.j)] = o.value;
        }
        m
    }

    /// Largest |value − M*| over the revealed entries.
    pub fn max_deviation(&self, gt: &GroundTruth) -> f64 {
        self.entries.iter().map(|o| (o.value - gt.entry(o.i, o.j)).abs()).fold(0.0, f64::max)
    }

    /// CSV with header `i,j,value,provenance`. The first comment line records the shape.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {} {}\ni,j,value,provenance\n", self.n1, self.n2);
        for o in &self.entries {
            let _ = writeln!(s, "{},{},{:e},{}", o.i, o.j, o.value, o.provenance.as_str());
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let shape = lines.next().ok_or_else(|| Error::Parse("empty observation file".into()))?;
        let dims: Vec<usize> = shape
            .trim_start_matches('#')
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad shape line: {shape}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad shape line: {shape}")));
        }
        let header = lines.next().unwrap_or_default();
        if header.trim() != "i,j,value,provenance" {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let mut entries = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let t: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("bad observation line: {line}"));
            if t.len() != 4 {
                return Err(bad());
            }
            let provenance = match t[3] {
                "random" => Provenance::Random,
                "adversarial" => Provenance::Adversarial,
                _ => return Err(bad()),
            };
            entries.push(Observation {
                i: t[0].parse().map_err(|_| bad())?,
                j: t[1].parse().map_err(|_| bad())?,
                value: t[2].parse().map_err(|_| bad())?,
                provenance,
            });
        }
        Self::new(dims[0], dims[1], entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Reveal each entry independently with probability p.
pub fn sample_uniform_observations(gt: &GroundTruth, p: f64, seed: u64) -> Result<ObservationSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("probability {p} outside (0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..gt.n1() {
        for j in 0..gt.n2() {
            if rng.random::<f64>() < p {
                entries.push(Observation { i, j, value: gt.entry(i, j), provenance: Provenance::Random });
            }
        }
    }
    ObservationSet::new(gt.n1(), gt.n2(), entries)
}
