//! Dataset loading, integer encoding, type-triple generation and sampling.
//!
//! A dataset directory holds six tab-separated files:
//!
//! ```text
//! train.txt  valid.txt  test.txt                       head<TAB>relation<TAB>tail
//! Entity_Type_train.txt  Entity_Type_valid.txt  Entity_Type_test.txt   entity<TAB>type
//! ```
//!
//! Identifiers are assigned dense ids in first-appearance order over the train
//! files, then valid, then test.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const KG_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];
pub const TYPE_FILES: [&str; 3] = [
    "Entity_Type_train.txt",
    "Entity_Type_valid.txt",
    "Entity_Type_test.txt",
];
pub const TYPE_TRIPLES_FILE: &str = "type_triples.txt";

/// Redraw budget for a negative that collides with a known train positive.
pub const NEGATIVE_RETRY_BOUND: usize = 32;

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_newtype!(EntityId);
id_newtype!(RelationId);
id_newtype!(TypeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KgTriple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl KgTriple {
    pub fn new(subject: usize, relation: usize, object: usize) -> Self {
        KgTriple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypePair {
    pub entity: EntityId,
    pub ty: TypeId,
}

impl TypePair {
    pub fn new(entity: usize, ty: usize) -> Self {
        TypePair {
            entity: entity.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeTriple {
    pub subject_type: TypeId,
    pub relation: RelationId,
    pub object_type: TypeId,
}

impl TypeTriple {
    pub fn new(subject_type: usize, relation: usize, object_type: usize) -> Self {
        TypeTriple {
            subject_type: subject_type.into(),
            relation: relation.into(),
            object_type: object_type.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Bidirectional map between identifier strings and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::new();
        for e in entries {
            vocab.insert(e.as_ref());
        }
        vocab
    }

    /// Returns the id of `name`, assigning the next dense id if unseen.
    pub fn insert(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// SHA-256 over the ordered entries, newline separated.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.entries {
            hasher.update(e.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Types known for each entity, tagged by the split they were observed in.
#[derive(Debug, Clone, Default)]
pub struct KnownTypes {
    train: Vec<Vec<TypeId>>,
    all: Vec<Vec<(TypeId, Split)>>,
}

impl KnownTypes {
    fn build(n_entities: usize, splits: [&[TypePair]; 3]) -> Self {
        let mut train: Vec<BTreeSet<TypeId>> = vec![BTreeSet::new(); n_entities];
        let mut all: Vec<Vec<(TypeId, Split)>> = vec![Vec::new(); n_entities];
        for (split, pairs) in Split::ALL.into_iter().zip(splits) {
            for p in pairs {
                if split == Split::Train {
                    train[p.entity.index()].insert(p.ty);
                }
                all[p.entity.index()].push((p.ty, split));
            }
        }
        for v in &mut all {
            v.sort();
            v.dedup_by_key(|(t, _)| *t);
        }
        KnownTypes {
            train: train.into_iter().map(|s| s.into_iter().collect()).collect(),
            all,
        }
    }

    /// Sorted train-split types of `entity`.
    pub fn train_types(&self, entity: EntityId) -> &[TypeId] {
        self.train.get(entity.index()).map_or(&[], Vec::as_slice)
    }

    /// Sorted types of `entity` over train, valid and test with the split of
    /// their first observation.
    pub fn all_types(&self, entity: EntityId) -> &[(TypeId, Split)] {
        self.all.get(entity.index()).map_or(&[], Vec::as_slice)
    }

    /// All other known true types of `entity`, the filter set for ranking `true_type`.
    pub fn filter_set(&self, entity: EntityId, true_type: TypeId) -> Vec<TypeId> {
        self.all_types(entity)
            .iter()
            .map(|&(t, _)| t)
            .filter(|&t| t != true_type)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitOverlaps {
    pub kg_train_valid: usize,
    pub kg_train_test: usize,
    pub kg_valid_test: usize,
    pub tp_train_valid: usize,
    pub tp_train_test: usize,
    pub tp_valid_test: usize,
}

impl SplitOverlaps {
    pub fn total(&self) -> usize {
        self.kg_train_valid
            + self.kg_train_test
            + self.kg_valid_test
            + self.tp_train_valid
            + self.tp_train_test
            + self.tp_valid_test
    }
}

/// Integer-encoded triples and type pairs, split into train/valid/test.
#[derive(Debug, Clone)]
pub struct TripleStore {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_types: usize,
    pub kg_train: Vec<KgTriple>,
    pub kg_valid: Vec<KgTriple>,
    pub kg_test: Vec<KgTriple>,
    pub tp_train: Vec<TypePair>,
    pub tp_valid: Vec<TypePair>,
    pub tp_test: Vec<TypePair>,
    pub tt_train: Vec<TypeTriple>,
    pub known_types: KnownTypes,
}

pub struct StoreParts {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_types: usize,
    pub kg: [Vec<KgTriple>; 3],
    pub tp: [Vec<TypePair>; 3],
}

impl TripleStore {
    /// Builds a store from already-encoded splits, checking id bounds and
    /// deriving the known-type index and the train type triples.
    pub fn from_parts(parts: StoreParts) -> Result<Self> {
        let StoreParts {
            n_entities,
            n_relations,
            n_types,
            kg,
            tp,
        } = parts;
        for t in kg.iter().flatten() {
            check_bound("entity", t.subject.index(), n_entities)?;
            check_bound("relation", t.relation.index(), n_relations)?;
            check_bound("entity", t.object.index(), n_entities)?;
        }
        for p in tp.iter().flatten() {
            check_bound("entity", p.entity.index(), n_entities)?;
            check_bound("type", p.ty.index(), n_types)?;
        }
        let [kg_train, kg_valid, kg_test] = kg;
        let [tp_train, tp_valid, tp_test] = tp;
        let known_types = KnownTypes::build(n_entities, [&tp_train, &tp_valid, &tp_test]);
        let tt_train = generate_type_triples(&kg_train, &tp_train);
        Ok(TripleStore {
            n_entities,
            n_relations,
            n_types,
            kg_train,
            kg_valid,
            kg_test,
            tp_train,
            tp_valid,
            tp_test,
            tt_train,
            known_types,
        })
    }

    pub fn kg_split(&self, split: Split) -> &[KgTriple] {
        match split {
            Split::Train => &self.kg_train,
            Split::Valid => &self.kg_valid,
            Split::Test => &self.kg_test,
        }
    }

    pub fn tp_split(&self, split: Split) -> &[TypePair] {
        match split {
            Split::Train => &self.tp_train,
            Split::Valid => &self.tp_valid,
            Split::Test => &self.tp_test,
        }
    }

    pub fn overlaps(&self) -> SplitOverlaps {
        fn count<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> usize {
            let set: HashSet<&T> = a.iter().collect();
            b.iter().filter(|x| set.contains(x)).count()
        }
        SplitOverlaps {
            kg_train_valid: count(&self.kg_train, &self.kg_valid),
            kg_train_test: count(&self.kg_train, &self.kg_test),
            kg_valid_test: count(&self.kg_valid, &self.kg_test),
            tp_train_valid: count(&self.tp_train, &self.tp_valid),
            tp_train_test: count(&self.tp_train, &self.tp_test),
            tp_valid_test: count(&self.tp_valid, &self.tp_test),
        }
    }
}

fn check_bound(kind: &'static str, id: usize, n: usize) -> Result<()> {
    if id < n {
        Ok(())
    } else {
        Err(Error::UnknownId { kind, id })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    /// Duplicate lines dropped, per file name.
    pub duplicates: Vec<(String, usize)>,
    pub overlaps: SplitOverlaps,
    /// Identifiers first seen in a valid or test file.
    pub unseen_in_train: usize,
}

impl LoadReport {
    pub fn total_duplicates(&self) -> usize {
        self.duplicates.iter().map(|(_, n)| n).sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject identifiers in valid/test files that no train file mentions.
    pub strict_unseen: bool,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub store: TripleStore,
    pub entities: Vocabulary,
    pub relations: Vocabulary,
    pub types: Vocabulary,
    pub report: LoadReport,
}

impl Dataset {
    pub fn entity(&self, name: &str) -> Result<EntityId> {
        self.entities
            .get(name)
            .map(EntityId)
            .ok_or_else(|| Error::UnknownName {
                kind: "entity",
                name: name.to_owned(),
            })
    }
}

fn read_records(path: &Path, fields: usize) -> Result<Vec<(usize, Vec<String>)>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != fields || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!(
                    "expected {fields} tab-separated fields, found {}",
                    parts.len()
                ),
            });
        }
        out.push((i + 1, parts.into_iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn dedup_in_order<T: Copy + Eq + std::hash::Hash>(items: Vec<T>) -> (Vec<T>, usize) {
    let mut seen = HashSet::with_capacity(items.len());
    let before = items.len();
    let kept: Vec<T> = items.into_iter().filter(|x| seen.insert(*x)).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Loads the six split files under `dir`.
pub fn load_dataset(dir: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mut entities = Vocabulary::new();
    let mut relations = Vocabulary::new();
    let mut types = Vocabulary::new();
    let mut report = LoadReport::default();
    let mut kg: [Vec<KgTriple>; 3] = Default::default();
    let mut tp: [Vec<TypePair>; 3] = Default::default();

    for (si, split) in Split::ALL.into_iter().enumerate() {
        let kg_path = dir.join(KG_FILES[si]);
        let tp_path = dir.join(TYPE_FILES[si]);
        let kg_rows = read_records(&kg_path, 3)?;
        let tp_rows = read_records(&tp_path, 2)?;
        if split == Split::Train && kg_rows.is_empty() {
            return Err(Error::EmptySplit(kg_path));
        }

        let admit = |vocab: &mut Vocabulary,
                         kind: &'static str,
                         name: &str,
                         path: &Path,
                         report: &mut LoadReport|
         -> Result<u32> {
            if let Some(id) = vocab.get(name) {
                return Ok(id);
            }
            if split != Split::Train {
                if opts.strict_unseen {
                    return Err(Error::UnseenIdentifier {
                        kind,
                        name: name.to_owned(),
                        path: path.to_path_buf(),
                    });
                }
                report.unseen_in_train += 1;
            }
            Ok(vocab.insert(name))
        };

        let mut triples = Vec::with_capacity(kg_rows.len());
        for (_, f) in &kg_rows {
            let s = admit(&mut entities, "entity", &f[0], &kg_path, &mut report)?;
            let r = admit(&mut relations, "relation", &f[1], &kg_path, &mut report)?;
            let o = admit(&mut entities, "entity", &f[2], &kg_path, &mut report)?;
            triples.push(KgTriple {
                subject: EntityId(s),
                relation: RelationId(r),
                object: EntityId(o),
            });
        }
        let mut pairs = Vec::with_capacity(tp_rows.len());
        for (_, f) in &tp_rows {
            let e = admit(&mut entities, "entity", &f[0], &tp_path, &mut report)?;
            let t = admit(&mut types, "type", &f[1], &tp_path, &mut report)?;
            pairs.push(TypePair {
                entity: EntityId(e),
                ty: TypeId(t),
            });
        }

        let (triples, dup_kg) = dedup_in_order(triples);
        let (pairs, dup_tp) = dedup_in_order(pairs);
        report.duplicates.push((KG_FILES[si].to_owned(), dup_kg));
        report.duplicates.push((TYPE_FILES[si].to_owned(), dup_tp));
        kg[si] = triples;
        tp[si] = pairs;
    }

    let store = TripleStore::from_parts(StoreParts {
        n_entities: entities.len(),
        n_relations: relations.len(),
        n_types: types.len(),
        kg,
        tp,
    })?;
    report.overlaps = store.overlaps();
    if report.total_duplicates() > 0 {
        log::info!("dropped {} duplicate lines", report.total_duplicates());
    }
    if report.overlaps.total() > 0 {
        log::warn!("split overlaps detected: {:?}", report.overlaps);
    }
    Ok(Dataset {
        root: dir.to_path_buf(),
        store,
        entities,
        relations,
        types,
        report,
    })
}

/// SHA-256 of each of the six split files, keyed by file name.
pub fn dataset_file_hashes(dir: &Path) -> Result<Vec<(String, String)>> {
    KG_FILES
        .iter()
        .chain(TYPE_FILES.iter())
        .map(|name| {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            Ok((name.to_string(), hex::encode(Sha256::digest(&bytes))))
        })
        .collect()
}

/// Enumerates `(t_s, r, t_o)` for every train triple and every pair of train
/// types of its endpoints. Sorted and deduplicated.
pub fn generate_type_triples(kg_train: &[KgTriple], tp_train: &[TypePair]) -> Vec<TypeTriple> {
    let mut types_of: HashMap<EntityId, Vec<TypeId>> = HashMap::new();
    for p in tp_train {
        types_of.entry(p.entity).or_default().push(p.ty);
    }
    let mut out = BTreeSet::new();
    for t in kg_train {
        let (Some(st), Some(ot)) = (types_of.get(&t.subject), types_of.get(&t.object)) else {
            continue;
        };
        for &s in st {
            for &o in ot {
                out.insert(TypeTriple {
                    subject_type: s,
                    relation: t.relation,
                    object_type: o,
                });
            }
        }
    }
    out.into_iter().collect()
}

pub fn write_type_triples(
    path: &Path,
    triples: &[TypeTriple],
    types: &Vocabulary,
    relations: &Vocabulary,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        let name = |v: &Vocabulary, i: usize| v.name(i).unwrap_or_default().to_owned();
        writeln!(
            w,
            "{}\t{}\t{}",
            name(types, t.subject_type.index()),
            name(relations, t.relation.index()),
            name(types, t.object_type.index())
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptMode {
    Subject,
    Object,
}

fn draw_filtered<T, R, F>(n: usize, rng: &mut R, mut draw: F, is_known: impl Fn(&T) -> bool) -> Vec<T>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> T,
{
    (0..n)
        .map(|_| {
            let mut cand = draw(rng);
            for _ in 0..NEGATIVE_RETRY_BOUND {
                if !is_known(&cand) {
                    break;
                }
                cand = draw(rng);
            }
            cand
        })
        .collect()
}

/// Corrupts one slot of `triple` with uniformly drawn entities, redrawing
/// (up to [`NEGATIVE_RETRY_BOUND`] times) candidates that are train positives.
pub fn sample_negative_entities<R: Rng + ?Sized>(
    triple: KgTriple,
    n: usize,
    mode: CorruptMode,
    n_entities: usize,
    known: &HashSet<KgTriple>,
    rng: &mut R,
) -> Vec<KgTriple> {
    draw_filtered(
        n,
        rng,
        |rng| {
            let e = EntityId(rng.gen_range(0..n_entities as u32));
            match mode {
                CorruptMode::Subject => KgTriple { subject: e, ..triple },
                CorruptMode::Object => KgTriple { object: e, ..triple },
            }
        },
        |c| known.contains(c),
    )
}

/// Corrupts the type slot of `pair`.
pub fn sample_negative_types<R: Rng + ?Sized>(
    pair: TypePair,
    n: usize,
    n_types: usize,
    known: &HashSet<TypePair>,
    rng: &mut R,
) -> Vec<TypePair> {
    draw_filtered(
        n,
        rng,
        |rng| TypePair {
            ty: TypeId(rng.gen_range(0..n_types as u32)),
            ..pair
        },
        |c| known.contains(c),
    )
}

/// Corrupts the subject or object type of a type triple.
pub fn sample_negative_type_triples<R: Rng + ?Sized>(
    triple: TypeTriple,
    n: usize,
    mode: CorruptMode,
    n_types: usize,
    known: &HashSet<TypeTriple>,
    rng: &mut R,
) -> Vec<TypeTriple> {
    draw_filtered(
        n,
        rng,
        |rng| {
            let t = TypeId(rng.gen_range(0..n_types as u32));
            match mode {
                CorruptMode::Subject => TypeTriple {
                    subject_type: t,
                    ..triple
                },
                CorruptMode::Object => TypeTriple {
                    object_type: t,
                    ..triple
                },
            }
        },
        |c| known.contains(c),
    )
}

/// Endless shuffled index stream over a source of `len` items; reshuffles
/// at every epoch boundary.
#[derive(Debug, Clone)]
pub struct BatchIter {
    order: Vec<u32>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl BatchIter {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<u32> = (0..len as u32).collect();
        order.shuffle(&mut rng);
        BatchIter {
            order,
            cursor: 0,
            rng,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        if self.order.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            out.push(self.order[self.cursor] as usize);
            self.cursor += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_dir(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for name in KG_FILES.iter().chain(TYPE_FILES.iter()) {
            fs::write(dir.path().join(name), "").unwrap();
        }
        for (name, body) in files {
            fs::write(dir.path().join(name), body).unwrap();
        }
        dir
    }

    #[test]
    fn vocabulary_roundtrip() {
        let v = Vocabulary::from_entries(["a", "b", "a", "c"]);
        assert_eq!(v.len(), 3);
        for i in 0..v.len() {
            assert_eq!(v.get(v.name(i).unwrap()), Some(i as u32));
        }
    }

    #[test]
    fn empty_train_is_an_error() {
        let dir = write_dir(&[]);
        let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptySplit(_)), "{err}");
        assert!(err.to_string().contains("empty split"));
    }

    #[test]
    fn missing_file_is_named() {
        let dir = write_dir(&[("train.txt", "a\tr\tb\n")]);
        fs::remove_file(dir.path().join("Entity_Type_valid.txt")).unwrap();
        let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("Entity_Type_valid.txt"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = write_dir(&[("train.txt", "a\tr\tb\nbroken line\n")]);
        let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_lines_are_dropped_and_counted() {
        let dir = write_dir(&[("train.txt", "a\tr\tb\na\tr\tb\n")]);
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.store.kg_train.len(), 1);
        assert_eq!(ds.report.total_duplicates(), 1);
    }

    #[test]
    fn unseen_in_train_is_counted_or_rejected() {
        let dir = write_dir(&[
            ("train.txt", "a\tr\tb\n"),
            ("valid.txt", "a\tr\tz\n"),
        ]);
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.report.unseen_in_train, 1);
        let err = load_dataset(
            dir.path(),
            &LoadOptions {
                strict_unseen: true,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnseenIdentifier { .. }), "{err}");
    }

    #[test]
    fn vocab_order_is_first_appearance() {
        let dir = write_dir(&[
            ("train.txt", "b\tr1\ta\n"),
            ("Entity_Type_train.txt", "c\tT\n"),
            ("test.txt", "d\tr2\tb\n"),
        ]);
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.entities.entries(), ["b", "a", "c", "d"]);
        assert_eq!(ds.relations.entries(), ["r1", "r2"]);
    }

    #[test]
    fn type_triples_by_construction() {
        let kg = vec![KgTriple::new(0, 0, 1)];
        let one = generate_type_triples(&kg, &[TypePair::new(0, 1), TypePair::new(1, 2)]);
        assert_eq!(one, vec![TypeTriple::new(1, 0, 2)]);

        let cross = generate_type_triples(
            &kg,
            &[TypePair::new(0, 1), TypePair::new(0, 3), TypePair::new(1, 2)],
        );
        assert_eq!(cross, vec![TypeTriple::new(1, 0, 2), TypeTriple::new(3, 0, 2)]);

        let empty = generate_type_triples(&kg, &[TypePair::new(1, 2)]);
        assert!(empty.is_empty());
    }

    #[test]
    fn negative_entities_corrupt_only_one_slot() {
        let t = KgTriple::new(3, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let known = HashSet::from([t]);
        for mode in [CorruptMode::Subject, CorruptMode::Object] {
            let negs = sample_negative_entities(t, 3, mode, 10, &known, &mut rng);
            assert_eq!(negs.len(), 3);
            for n in negs {
                assert_eq!(n.relation, t.relation);
                match mode {
                    CorruptMode::Subject => assert_eq!(n.object, t.object),
                    CorruptMode::Object => assert_eq!(n.subject, t.subject),
                }
                assert_ne!(n, t);
            }
        }
    }

    #[test]
    fn single_entity_vocabulary_degenerates_to_input() {
        let t = KgTriple::new(0, 0, 0);
        let known = HashSet::from([t]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let negs = sample_negative_entities(t, 4, CorruptMode::Object, 1, &known, &mut rng);
        assert!(negs.iter().all(|&n| n == t));

        let p = TypePair::new(0, 0);
        let negs = sample_negative_types(p, 4, 1, &HashSet::from([p]), &mut rng);
        assert!(negs.iter().all(|&n| n == p));
    }

    #[test]
    fn negative_types_share_entity_and_are_seeded() {
        let p = TypePair::new(5, 2);
        let known = HashSet::from([p]);
        let a = sample_negative_types(p, 400, 3851, &known, &mut ChaCha8Rng::seed_from_u64(11));
        let b = sample_negative_types(p, 400, 3851, &known, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a.len(), 400);
        assert!(a.iter().all(|n| n.entity == p.entity));
        assert_eq!(a, b);
    }

    #[test]
    fn batch_iter_is_deterministic_and_covers_epoch() {
        let mut a = BatchIter::new(10, 3);
        let mut b = BatchIter::new(10, 3);
        let first = a.next_batch(10);
        assert_eq!(first, b.next_batch(10));
        let mut sorted = first.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(a.next_batch(25), b.next_batch(25));
    }

    #[test]
    fn filter_set_excludes_query_type() {
        let store = TripleStore::from_parts(StoreParts {
            n_entities: 2,
            n_relations: 1,
            n_types: 4,
            kg: [vec![KgTriple::new(0, 0, 1)], vec![], vec![]],
            tp: [
                vec![TypePair::new(0, 0)],
                vec![TypePair::new(0, 1)],
                vec![TypePair::new(0, 2)],
            ],
        })
        .unwrap();
        let kt = &store.known_types;
        assert_eq!(kt.train_types(EntityId(0)), [TypeId(0)]);
        assert_eq!(kt.filter_set(EntityId(0), TypeId(2)), [TypeId(0), TypeId(1)]);
        assert_eq!(kt.all_types(EntityId(0))[2], (TypeId(2), Split::Test));
    }

    #[test]
    fn out_of_bounds_ids_are_rejected() {
        let err = TripleStore::from_parts(StoreParts {
            n_entities: 1,
            n_relations: 1,
            n_types: 1,
            kg: [vec![KgTriple::new(0, 0, 1)], vec![], vec![]],
            tp: Default::default(),
        })
        .unwrap_err();
        assert!(matches!(err, Error::UnknownId { kind: "entity", id: 1 }));
    }
}
