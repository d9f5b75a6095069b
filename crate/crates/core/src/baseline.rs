//! SDType and SDType-Cond: type distributions estimated by counting over the
//! train split.
//!
//! SDType conditions the type of an entity on an incident relation
//! (`p(s_t | r)`, `p(o_t | r)`). SDType-Cond also conditions on a known type
//! of the neighbor on the other end (`p(s_t | r, o_t)`, `p(o_t | r, s_t)`).
//! A target entity is scored by averaging the conditional distributions of
//! every distinct combination in its neighborhood that has a table entry.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{EntityId, RelationId, TripleStore, TypeId, TypePair};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_with, RankingReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMode {
    #[serde(rename = "sdtype")]
    SdType,
    #[serde(rename = "sdtype-cond")]
    SdTypeCond,
}

impl BaselineMode {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMode::SdType => "sdtype",
            BaselineMode::SdTypeCond => "sdtype-cond",
        }
    }
}

impl FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdtype" => Ok(BaselineMode::SdType),
            "sdtype-cond" => Ok(BaselineMode::SdTypeCond),
            other => Err(Error::Config(format!("unknown baseline `{other}`"))),
        }
    }
}

/// Type counts under one conditioning key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDistribution {
    counts: BTreeMap<TypeId, u64>,
    total: u64,
}

impl TypeDistribution {
    fn add(&mut self, t: TypeId) {
        *self.counts.entry(t).or_default() += 1;
        self.total += 1;
    }

    pub fn count(&self, t: TypeId) -> u64 {
        self.counts.get(&t).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prob(&self, t: TypeId) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(t) as f64 / self.total as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (TypeId, f64)> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |(&t, &c)| (t, c as f64 / total))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConditionalTypeTable {
    subject_by_relation: BTreeMap<RelationId, TypeDistribution>,
    object_by_relation: BTreeMap<RelationId, TypeDistribution>,
    subject_by_relation_object_type: BTreeMap<(RelationId, TypeId), TypeDistribution>,
    object_by_relation_subject_type: BTreeMap<(RelationId, TypeId), TypeDistribution>,
}

impl ConditionalTypeTable {
    /// Counts over train triples using train-split types only.
    pub fn fit(store: &TripleStore) -> Self {
        let kt = &store.known_types;
        let mut table = ConditionalTypeTable::default();
        for t in &store.kg_train {
            let st = kt.train_types(t.subject);
            let ot = kt.train_types(t.object);
            for &s in st {
                table.subject_by_relation.entry(t.relation).or_default().add(s);
            }
            for &o in ot {
                table.object_by_relation.entry(t.relation).or_default().add(o);
            }
            for &s in st {
                for &o in ot {
                    table
                        .subject_by_relation_object_type
                        .entry((t.relation, o))
                        .or_default()
                        .add(s);
                    table
                        .object_by_relation_subject_type
                        .entry((t.relation, s))
                        .or_default()
                        .add(o);
                }
            }
        }
        table
    }

    /// `p(s_t | r)`
    pub fn subject_given(&self, r: RelationId) -> Option<&TypeDistribution> {
        self.subject_by_relation.get(&r)
    }

    /// `p(o_t | r)`
    pub fn object_given(&self, r: RelationId) -> Option<&TypeDistribution> {
        self.object_by_relation.get(&r)
    }

    /// `p(s_t | r, o_t)`
    pub fn subject_given_object_type(&self, r: RelationId, o_t: TypeId) -> Option<&TypeDistribution> {
        self.subject_by_relation_object_type.get(&(r, o_t))
    }

    /// `p(o_t | r, s_t)`
    pub fn object_given_subject_type(&self, r: RelationId, s_t: TypeId) -> Option<&TypeDistribution> {
        self.object_by_relation_subject_type.get(&(r, s_t))
    }

    pub fn n_keys(&self) -> usize {
        self.subject_by_relation.len()
            + self.object_by_relation.len()
            + self.subject_by_relation_object_type.len()
            + self.object_by_relation_subject_type.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(TABLE_MAGIC);
        buf.extend_from_slice(&TABLE_VERSION.to_le_bytes());
        let by_rel = [&self.subject_by_relation, &self.object_by_relation];
        for section in by_rel {
            write_section(&mut buf, section.iter().map(|(r, d)| ((r.0, NO_TYPE), d)), section.len());
        }
        let by_pair = [
            &self.subject_by_relation_object_type,
            &self.object_by_relation_subject_type,
        ];
        for section in by_pair {
            write_section(&mut buf, section.iter().map(|((r, t), d)| ((r.0, t.0), d)), section.len());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != TABLE_MAGIC {
            return Err(Error::Checkpoint("bad baseline table magic".into()));
        }
        let version = r.u32()?;
        if version != TABLE_VERSION {
            return Err(Error::Checkpoint(format!("unsupported baseline table version {version}")));
        }
        let mut table = ConditionalTypeTable::default();
        for (rel, _, d) in read_section(&mut r)? {
            table.subject_by_relation.insert(rel, d);
        }
        for (rel, _, d) in read_section(&mut r)? {
            table.object_by_relation.insert(rel, d);
        }
        for (rel, t, d) in read_section(&mut r)? {
            table.subject_by_relation_object_type.insert((rel, t), d);
        }
        for (rel, t, d) in read_section(&mut r)? {
            table.object_by_relation_subject_type.insert((rel, t), d);
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes in baseline table".into()));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

const TABLE_MAGIC: &[u8; 8] = b"CKGTSDT\0";
const TABLE_VERSION: u32 = 1;
const NO_TYPE: u32 = u32::MAX;

fn write_section<'a>(
    buf: &mut Vec<u8>,
    entries: impl Iterator<Item = ((u32, u32), &'a TypeDistribution)>,
    len: usize,
) {
    buf.extend_from_slice(&(len as u64).to_le_bytes());
    for ((rel, ty), dist) in entries {
        buf.extend_from_slice(&rel.to_le_bytes());
        buf.extend_from_slice(&ty.to_le_bytes());
        buf.extend_from_slice(&(dist.counts.len() as u32).to_le_bytes());
        for (t, c) in &dist.counts {
            buf.extend_from_slice(&t.0.to_le_bytes());
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated baseline table".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_section(r: &mut Reader<'_>) -> Result<Vec<(RelationId, TypeId, TypeDistribution)>> {
    let n = r.u64()? as usize;
    let mut out = Vec::new();
    for _ in 0..n {
        let rel = RelationId(r.u32()?);
        let ty = TypeId(r.u32()?);
        let m = r.u32()?;
        let mut dist = TypeDistribution::default();
        for _ in 0..m {
            let t = TypeId(r.u32()?);
            let c = r.u64()?;
            dist.counts.insert(t, c);
            dist.total += c;
        }
        out.push((rel, ty, dist));
    }
    Ok(out)
}

/// Train-split adjacency: for each entity, `(relation, other end)` for the
/// triples where it is subject and where it is object.
#[derive(Debug, Clone, Default)]
pub struct Neighborhoods {
    as_subject: Vec<Vec<(RelationId, EntityId)>>,
    as_object: Vec<Vec<(RelationId, EntityId)>>,
}

impl Neighborhoods {
    pub fn build(store: &TripleStore) -> Self {
        let mut nb = Neighborhoods {
            as_subject: vec![Vec::new(); store.n_entities],
            as_object: vec![Vec::new(); store.n_entities],
        };
        for t in &store.kg_train {
            nb.as_subject[t.subject.index()].push((t.relation, t.object));
            nb.as_object[t.object.index()].push((t.relation, t.subject));
        }
        nb
    }

    pub fn is_isolated(&self, e: EntityId) -> bool {
        self.as_subject.get(e.index()).is_none_or(Vec::is_empty)
            && self.as_object.get(e.index()).is_none_or(Vec::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Subject,
    Object,
}

/// Aggregated probability per type; empty for an entity with no usable
/// neighborhood combination.
pub fn score_types(
    entity: EntityId,
    store: &TripleStore,
    neighborhoods: &Neighborhoods,
    table: &ConditionalTypeTable,
    mode: BaselineMode,
) -> BTreeMap<TypeId, f64> {
    let e = entity.index();
    let empty = Vec::new();
    let out_edges = neighborhoods.as_subject.get(e).unwrap_or(&empty);
    let in_edges = neighborhoods.as_object.get(e).unwrap_or(&empty);

    let mut combos: BTreeSet<(Role, RelationId, Option<TypeId>)> = BTreeSet::new();
    match mode {
        BaselineMode::SdType => {
            combos.extend(out_edges.iter().map(|&(r, _)| (Role::Subject, r, None)));
            combos.extend(in_edges.iter().map(|&(r, _)| (Role::Object, r, None)));
        }
        BaselineMode::SdTypeCond => {
            for &(r, other) in out_edges {
                for &t in store.known_types.train_types(other) {
                    combos.insert((Role::Subject, r, Some(t)));
                }
            }
            for &(r, other) in in_edges {
                for &t in store.known_types.train_types(other) {
                    combos.insert((Role::Object, r, Some(t)));
                }
            }
        }
    }

    let dists: Vec<&TypeDistribution> = combos
        .into_iter()
        .filter_map(|(role, r, t)| match (role, t) {
            (Role::Subject, None) => table.subject_given(r),
            (Role::Object, None) => table.object_given(r),
            (Role::Subject, Some(t)) => table.subject_given_object_type(r, t),
            (Role::Object, Some(t)) => table.object_given_subject_type(r, t),
        })
        .collect();

    let mut scores = BTreeMap::new();
    if dists.is_empty() {
        return scores;
    }
    let n = dists.len() as f64;
    for d in dists {
        for (t, p) in d.iter() {
            *scores.entry(t).or_insert(0.0) += p;
        }
    }
    for v in scores.values_mut() {
        *v /= n;
    }
    scores
}

/// Filtered ranking with score `-p(t)`; unscored types sit at 0.
pub fn evaluate_baseline(
    split: &[TypePair],
    store: &TripleStore,
    table: &ConditionalTypeTable,
    mode: BaselineMode,
) -> Result<RankingReport> {
    let nb = Neighborhoods::build(store);
    evaluate_with(split, store, |e| {
        let mut dense = vec![0.0; store.n_types];
        for (t, p) in score_types(e, store, &nb, table, mode) {
            dense[t.index()] = -p;
        }
        Ok(dense)
    })
}
