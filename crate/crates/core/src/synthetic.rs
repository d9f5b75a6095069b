//! Separable synthetic graphs with known type structure, for smoke tests
//! and recovery checks.
//!
//! Entities are partitioned into latent classes. Each class owns
//! `types_per_class` types and every entity carries all of its class's
//! types. Relation `r` only links subjects of class `r mod C` to objects of
//! class `(3r + 1) mod C`, so an entity's class is recoverable from its
//! graph neighborhood alone.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{
    Dataset, KgTriple, LoadReport, StoreParts, TripleStore, TypePair, Vocabulary, KG_FILES,
    TYPE_FILES,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_classes: usize,
    pub types_per_class: usize,
    pub n_relations: usize,
    /// Target number of distinct KG triples, all placed in the train split.
    pub n_triples: usize,
    /// Train and valid fractions of the type pairs; test gets the rest.
    pub type_split: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_entities: 200,
            n_classes: 10,
            types_per_class: 2,
            n_relations: 15,
            n_triples: 3000,
            type_split: (0.8, 0.1),
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn class_of(&self, entity: usize) -> usize {
        entity % self.n_classes
    }

    pub fn subject_class(&self, relation: usize) -> usize {
        relation % self.n_classes
    }

    pub fn object_class(&self, relation: usize) -> usize {
        (3 * relation + 1) % self.n_classes
    }

    pub fn types_of_class(&self, class: usize) -> std::ops::Range<usize> {
        class * self.types_per_class..(class + 1) * self.types_per_class
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_entities < self.n_classes || self.types_per_class == 0 {
            return Err(Error::Config("synthetic: need at least one entity per class".into()));
        }
        if self.n_relations < self.n_classes {
            return Err(Error::Config(
                "synthetic: need at least one relation per subject class".into(),
            ));
        }
        let (a, b) = self.type_split;
        if !(a > 0.0 && b >= 0.0 && a + b <= 1.0) {
            return Err(Error::Config("synthetic: bad type split fractions".into()));
        }
        Ok(())
    }
}

/// Generates the graph described by `spec`. Ids equal name suffixes:
/// entity `i` is `e{i}`, relation `r{i}`, type `t{i}`.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let members: Vec<Vec<usize>> = (0..spec.n_classes)
        .map(|c| (0..spec.n_entities).filter(|&e| spec.class_of(e) == c).collect())
        .collect();

    let mut triples: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut order: Vec<(usize, usize, usize)> = Vec::new();
    let mut add = |t: (usize, usize, usize), order: &mut Vec<_>| {
        if triples.insert(t) {
            order.push(t);
        }
    };

    // Every entity is the subject of at least one triple.
    for e in 0..spec.n_entities {
        let c = spec.class_of(e);
        let rels: Vec<usize> = (0..spec.n_relations).filter(|&r| spec.subject_class(r) == c).collect();
        let r = *rels.choose(&mut rng).expect("validated");
        let o = *members[spec.object_class(r)].choose(&mut rng).expect("validated");
        add((e, r, o), &mut order);
    }
    let capacity: usize = (0..spec.n_relations)
        .map(|r| members[spec.subject_class(r)].len() * members[spec.object_class(r)].len())
        .sum();
    let target = spec.n_triples.min(capacity);
    while order.len() < target {
        let r = rng.gen_range(0..spec.n_relations);
        let s = *members[spec.subject_class(r)].choose(&mut rng).expect("validated");
        let o = *members[spec.object_class(r)].choose(&mut rng).expect("validated");
        add((s, r, o), &mut order);
    }
    let kg_train: Vec<KgTriple> = order.iter().map(|&(s, r, o)| KgTriple::new(s, r, o)).collect();

    let mut pairs: Vec<TypePair> = (0..spec.n_entities)
        .flat_map(|e| spec.types_of_class(spec.class_of(e)).map(move |t| TypePair::new(e, t)))
        .collect();
    pairs.shuffle(&mut rng);
    let n = pairs.len();
    let n_train = (spec.type_split.0 * n as f64).round() as usize;
    let n_valid = ((spec.type_split.1 * n as f64).round() as usize).min(n - n_train);
    let tp_test = pairs.split_off(n_train + n_valid);
    let tp_valid = pairs.split_off(n_train);
    let tp_train = pairs;

    let n_types = spec.n_classes * spec.types_per_class;
    let store = TripleStore::from_parts(StoreParts {
        n_entities: spec.n_entities,
        n_relations: spec.n_relations,
        n_types,
        kg: [kg_train, Vec::new(), Vec::new()],
        tp: [tp_train, tp_valid, tp_test],
    })?;
    let named = |prefix: &str, n: usize| Vocabulary::from_entries((0..n).map(|i| format!("{prefix}{i}")));
    Ok(Dataset {
        root: Default::default(),
        store,
        entities: named("e", spec.n_entities),
        relations: named("r", spec.n_relations),
        types: named("t", n_types),
        report: LoadReport::default(),
    })
}

/// Writes `ds` in the on-disk split layout understood by `load_dataset`.
pub fn write_dataset_dir(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = |v: &Vocabulary, i: usize| v.name(i).unwrap_or_default().to_owned();
    for (si, file) in KG_FILES.iter().enumerate() {
        let path = dir.join(file);
        let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        let split = [&ds.store.kg_train, &ds.store.kg_valid, &ds.store.kg_test][si];
        for t in split {
            writeln!(
                w,
                "{}\t{}\t{}",
                name(&ds.entities, t.subject.index()),
                name(&ds.relations, t.relation.index()),
                name(&ds.entities, t.object.index())
            )
            .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    for (si, file) in TYPE_FILES.iter().enumerate() {
        let path = dir.join(file);
        let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        let split = [&ds.store.tp_train, &ds.store.tp_valid, &ds.store.tp_test][si];
        for p in split {
            writeln!(
                w,
                "{}\t{}",
                name(&ds.entities, p.entity.index()),
                name(&ds.types, p.ty.index())
            )
            .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_dataset, LoadOptions};

    #[test]
    fn default_shape() {
        let spec = SyntheticSpec::default();
        let ds = generate(&spec).unwrap();
        let s = &ds.store;
        assert_eq!(s.n_entities, 200);
        assert_eq!(s.n_types, 20);
        assert_eq!(s.kg_train.len(), 3000);
        assert_eq!((s.tp_train.len(), s.tp_valid.len(), s.tp_test.len()), (320, 40, 40));
        for t in &s.kg_train {
            assert_eq!(spec.class_of(t.subject.index()), spec.subject_class(t.relation.index()));
            assert_eq!(spec.class_of(t.object.index()), spec.object_class(t.relation.index()));
        }
        for p in s.tp_train.iter().chain(&s.tp_test) {
            assert!(spec.types_of_class(spec.class_of(p.entity.index())).contains(&p.ty.index()));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&SyntheticSpec::default()).unwrap();
        let b = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.store.kg_train, b.store.kg_train);
        assert_eq!(a.store.tp_test, b.store.tp_test);
        let c = generate(&SyntheticSpec { seed: 8, ..Default::default() }).unwrap();
        assert_ne!(a.store.kg_train, c.store.kg_train);
    }

    #[test]
    fn roundtrips_through_disk() {
        let ds = generate(&SyntheticSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset_dir(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(back.store.n_entities, 200);
        assert_eq!(back.store.kg_train.len(), 3000);
        assert_eq!(back.store.tp_valid.len(), 40);
        assert_eq!(back.report.unseen_in_train, 0);
    }
}
