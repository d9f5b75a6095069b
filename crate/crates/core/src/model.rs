//! The full parameter set and its on-disk checkpoint format.
//!
//! A checkpoint is a binary file plus a JSON sidecar at `<path>.json`.
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "COREKGT\0"
//! version      u32      1
//! model kind   u8       0 = rotate, 1 = complex
//! flags        u8       bit 0: entity-space relations are phases
//!                       bit 1: type-space relations are phases
//! reserved     u16      0
//! k, l         u64 × 2
//! n_entities, n_relations, n_types, step   u64 × 4
//! tables       f64 arrays, in order: entities, relations, types,
//!              type relations, A_Re→Re, A_Im→Re, A_Re→Im, A_Im→Im
//! ```
//!
//! Free-complex table rows are `[re.., im..]`, phase rows `[θ..]`; each
//! regression block is row-major `k × l`.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EntityId, KgTriple, TypeId, TypeTriple};
use crate::embedding::{score_views, EmbeddingTable, ModelKind, Parameterization};
use crate::error::{Error, Result};
use crate::regression::{projected_score, RegressionMap};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"COREKGT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CoreModel {
    pub kind: ModelKind,
    pub entities: EmbeddingTable,
    pub relations: EmbeddingTable,
    pub types: EmbeddingTable,
    pub type_relations: EmbeddingTable,
    pub regression: RegressionMap,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub kind: ModelKind,
    pub k: usize,
    pub l: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_types: usize,
}

impl CoreModel {
    /// Uniform initialization: entity-space components in `[-γ₁/k, γ₁/k]`,
    /// type-space components in `[-γ₂/l, γ₂/l]`, phases in `[-π, π]`,
    /// regression entries in `[-1/√k, 1/√k]`.
    pub fn init<R: Rng + ?Sized>(shape: ModelShape, gamma_entity: f64, gamma_type: f64, rng: &mut R) -> Self {
        let ModelShape {
            kind,
            k,
            l,
            n_entities,
            n_relations,
            n_types,
        } = shape;
        let rel = kind.relation_parameterization();
        let eb = gamma_entity / k as f64;
        let tb = gamma_type / l as f64;
        CoreModel {
            kind,
            entities: EmbeddingTable::uniform(n_entities, k, Parameterization::FreeComplex, eb, rng),
            relations: EmbeddingTable::uniform(n_relations, k, rel, eb, rng),
            types: EmbeddingTable::uniform(n_types, l, Parameterization::FreeComplex, tb, rng),
            type_relations: EmbeddingTable::uniform(n_relations, l, rel, tb, rng),
            regression: RegressionMap::uniform(k, l, rng),
        }
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            kind: self.kind,
            k: self.k(),
            l: self.l(),
            n_entities: self.entities.rows(),
            n_relations: self.relations.rows(),
            n_types: self.types.rows(),
        }
    }

    pub fn k(&self) -> usize {
        self.entities.dim()
    }

    pub fn l(&self) -> usize {
        self.types.dim()
    }

    pub fn n_types(&self) -> usize {
        self.types.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.entities.parameter_count()
            + self.relations.parameter_count()
            + self.types.parameter_count()
            + self.type_relations.parameter_count()
            + self.regression.parameter_count()
    }

    pub fn kg_score(&self, t: KgTriple) -> Result<f64> {
        self.entities.check_row(t.subject.index(), "entity")?;
        self.entities.check_row(t.object.index(), "entity")?;
        self.relations.check_row(t.relation.index(), "relation")?;
        let w = self.relations.row(t.relation.index());
        Ok(score_views(
            self.kind,
            w.view(),
            self.entities.view(t.subject.index()),
            self.entities.view(t.object.index()),
        ))
    }

    pub fn type_triple_score(&self, t: TypeTriple) -> Result<f64> {
        self.types.check_row(t.subject_type.index(), "type")?;
        self.types.check_row(t.object_type.index(), "type")?;
        self.type_relations.check_row(t.relation.index(), "relation")?;
        let v = self.type_relations.row(t.relation.index());
        Ok(score_views(
            self.kind,
            v.view(),
            self.types.view(t.subject_type.index()),
            self.types.view(t.object_type.index()),
        ))
    }

    pub fn regression_score(&self, e: EntityId, t: TypeId) -> Result<f64> {
        self.entities.check_row(e.index(), "entity")?;
        self.types.check_row(t.index(), "type")?;
        let p = self.regression.project_view(self.entities.view(e.index()));
        Ok(projected_score(p.view(), self.types.view(t.index())))
    }

    /// `f(e, t)` for every type, indexed by type id.
    pub fn type_scores(&self, e: EntityId) -> Result<Vec<f64>> {
        self.entities.check_row(e.index(), "entity")?;
        let p = self.regression.project_view(self.entities.view(e.index()));
        Ok((0..self.n_types())
            .map(|t| projected_score(p.view(), self.types.view(t)))
            .collect())
    }

    pub fn is_finite(&self) -> bool {
        [&self.entities, &self.relations, &self.types, &self.type_relations]
            .iter()
            .all(|t| t.raw().iter().all(|x| x.is_finite()))
            && self.regression.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabHashes {
    pub entities: String,
    pub relations: String,
    pub types: String,
}

impl VocabHashes {
    pub fn of(ds: &Dataset) -> Self {
        VocabHashes {
            entities: ds.entities.content_hash(),
            relations: ds.relations.content_hash(),
            types: ds.types.content_hash(),
        }
    }
}

/// JSON sidecar written next to every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub k: usize,
    pub l: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_types: usize,
    pub step: u64,
    pub hyperparameters: serde_json::Value,
    pub vocab_hashes: Option<VocabHashes>,
    pub data_dir: Option<PathBuf>,
    /// Manifest file name, relative to the checkpoint directory.
    pub manifest: Option<String>,
}

impl CheckpointMeta {
    pub fn for_model(model: &CoreModel, step: u64) -> Self {
        let s = model.shape();
        CheckpointMeta {
            format_version: CHECKPOINT_VERSION,
            model_kind: s.kind,
            k: s.k,
            l: s.l,
            n_entities: s.n_entities,
            n_relations: s.n_relations,
            n_types: s.n_types,
            step,
            hyperparameters: serde_json::Value::Null,
            vocab_hashes: None,
            data_dir: None,
            manifest: None,
        }
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        let Some(h) = &self.vocab_hashes else {
            return Ok(());
        };
        let cur = VocabHashes::of(ds);
        if h.entities != cur.entities {
            return Err(Error::VocabMismatch { which: "entities" });
        }
        if h.relations != cur.relations {
            return Err(Error::VocabMismatch { which: "relations" });
        }
        if h.types != cur.types {
            return Err(Error::VocabMismatch { which: "types" });
        }
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn kind_code(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::RotatE => 0,
        ModelKind::ComplEx => 1,
    }
}

/// Serializes the binary checkpoint body.
pub fn encode_checkpoint(model: &CoreModel, step: u64) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 8 * model.parameter_count());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(kind_code(model.kind));
    let mut flags = 0u8;
    if model.relations.parameterization() == Parameterization::UnitPhase {
        flags |= 1;
    }
    if model.type_relations.parameterization() == Parameterization::UnitPhase {
        flags |= 2;
    }
    buf.push(flags);
    buf.extend_from_slice(&0u16.to_le_bytes());
    let s = model.shape();
    for v in [s.k, s.l, s.n_entities, s.n_relations, s.n_types] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    buf.extend_from_slice(&step.to_le_bytes());
    let tables = [&model.entities, &model.relations, &model.types, &model.type_relations];
    let arrays = tables
        .iter()
        .map(|t| t.raw())
        .chain(model.regression.blocks());
    for arr in arrays {
        for x in arr {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses a binary checkpoint body, returning the model and its step.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(CoreModel, u64)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let head = c.take(4)?;
    let kind = match head[0] {
        0 => ModelKind::RotatE,
        1 => ModelKind::ComplEx,
        other => return Err(Error::Checkpoint(format!("unknown model kind code {other}"))),
    };
    let flags = head[1];
    let param = |bit: u8| {
        if flags & bit != 0 {
            Parameterization::UnitPhase
        } else {
            Parameterization::FreeComplex
        }
    };
    let (k, l) = (c.usize()?, c.usize()?);
    let (ne, nr, nt) = (c.usize()?, c.usize()?, c.usize()?);
    let step = c.u64()?;

    let mut table = |rows: usize, dim: usize, p: Parameterization| -> Result<EmbeddingTable> {
        let width = match p {
            Parameterization::FreeComplex => 2 * dim,
            Parameterization::UnitPhase => dim,
        };
        let data = c.f64s(rows * width)?;
        EmbeddingTable::from_raw(rows, dim, p, data)
    };
    let entities = table(ne, k, Parameterization::FreeComplex)?;
    let relations = table(nr, k, param(1))?;
    let types = table(nt, l, Parameterization::FreeComplex)?;
    let type_relations = table(nr, l, param(2))?;
    let blocks = [c.f64s(k * l)?, c.f64s(k * l)?, c.f64s(k * l)?, c.f64s(k * l)?];
    if c.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let regression = RegressionMap::from_blocks(k, l, blocks)?;
    Ok((
        CoreModel {
            kind,
            entities,
            relations,
            types,
            type_relations,
            regression,
        },
        step,
    ))
}

pub fn write_checkpoint(path: &Path, model: &CoreModel, meta: &CheckpointMeta) -> Result<()> {
    let bytes = encode_checkpoint(model, meta.step);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let file = fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, meta)?;
    w.write_all(b"\n").map_err(|e| Error::io(&side, e))?;
    w.flush().map_err(|e| Error::io(&side, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(CoreModel, CheckpointMeta)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let (model, step) = decode_checkpoint(&bytes)?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    let s = model.shape();
    if meta.step != step
        || meta.model_kind != s.kind
        || (meta.k, meta.l) != (s.k, s.l)
        || (meta.n_entities, meta.n_relations, meta.n_types) != (s.n_entities, s.n_relations, s.n_types)
    {
        return Err(Error::Checkpoint("sidecar does not match binary header".into()));
    }
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(kind: ModelKind) -> ModelShape {
        ModelShape {
            kind,
            k: 3,
            l: 2,
            n_entities: 5,
            n_relations: 2,
            n_types: 4,
        }
    }

    #[test]
    fn parameter_count_matches_complexity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [ModelKind::RotatE, ModelKind::ComplEx] {
            let m = CoreModel::init(shape(kind), 24.0, 24.0, &mut rng);
            let rel_width = if kind == ModelKind::RotatE { 1 } else { 2 };
            let expected = 5 * 3 * 2 + 2 * 3 * rel_width + 4 * 2 * 2 + 2 * 2 * rel_width + 4 * 3 * 2;
            assert_eq!(m.parameter_count(), expected);
        }
    }

    #[test]
    fn checkpoint_roundtrip_and_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = CoreModel::init(shape(ModelKind::RotatE), 6.0, 6.0, &mut rng);
        let bytes = encode_checkpoint(&m, 42);
        let (back, step) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(step, 42);
        assert_eq!(back, m);
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
        assert_eq!(bytes[12], 0);
        assert_eq!(bytes[13], 3);

        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
    }

    #[test]
    fn file_roundtrip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = CoreModel::init(shape(ModelKind::ComplEx), 6.0, 6.0, &mut rng);
        let path = dir.path().join("model.bin");
        write_checkpoint(&path, &m, &CheckpointMeta::for_model(&m, 7)).unwrap();
        assert!(sidecar_path(&path).ends_with("model.bin.json"));
        let (back, meta) = read_checkpoint(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta.step, 7);
    }

    #[test]
    fn scoring_rejects_unknown_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = CoreModel::init(shape(ModelKind::ComplEx), 6.0, 6.0, &mut rng);
        assert!(m.type_scores(EntityId(5)).is_err());
        assert!(m.regression_score(EntityId(0), TypeId(4)).is_err());
        assert_eq!(m.type_scores(EntityId(4)).unwrap().len(), 4);
    }
}
