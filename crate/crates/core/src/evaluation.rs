//! Type prediction and filtered ranking metrics.
//!
//! Lower scores rank first. A candidate tied with the true type is ranked
//! ahead of it, so a constant scorer gets the worst possible rank.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{EntityId, TripleStore, TypeId, TypePair, Vocabulary};
use crate::error::{Error, Result};
use crate::model::CoreModel;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryRank {
    pub entity: EntityId,
    pub true_type: TypeId,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    #[serde(skip)]
    pub per_query: Vec<QueryRank>,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
    pub n_queries: usize,
}

impl RankingReport {
    pub fn from_queries(per_query: Vec<QueryRank>) -> Self {
        let n = per_query.len();
        let denom = n.max(1) as f64;
        let mrr = per_query.iter().map(|q| 1.0 / q.rank as f64).sum::<f64>() / denom;
        let hits = HITS_AT
            .iter()
            .map(|&k| (k, per_query.iter().filter(|q| q.rank <= k).count() as f64 / denom))
            .collect();
        RankingReport {
            per_query,
            mrr,
            hits,
            n_queries: n,
        }
    }

    pub fn hits_at(&self, k: usize) -> f64 {
        match self.hits.get(&k) {
            Some(&h) => h,
            None => {
                self.per_query.iter().filter(|q| q.rank <= k).count() as f64
                    / self.n_queries.max(1) as f64
            }
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "MRR {:.4}  H@1 {:.4}  H@3 {:.4}  H@10 {:.4}  (n={})",
            self.mrr,
            self.hits_at(1),
            self.hits_at(3),
            self.hits_at(10),
            self.n_queries
        )
    }

    /// Aggregates only: `{mrr, hits@1, hits@3, hits@10, n_queries}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("mrr".into(), self.mrr.into());
        for (k, v) in &self.hits {
            obj.insert(format!("hits@{k}"), (*v).into());
        }
        obj.insert("n_queries".into(), self.n_queries.into());
        serde_json::Value::Object(obj)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Per-query ranks as `entity<TAB>type<TAB>rank`.
    pub fn write_ranks_tsv(&self, path: &Path, entities: &Vocabulary, types: &Vocabulary) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for q in &self.per_query {
            writeln!(
                w,
                "{}\t{}\t{}",
                entities.name(q.entity.index()).unwrap_or_default(),
                types.name(q.true_type.index()).unwrap_or_default(),
                q.rank
            )
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Pessimistic filtered rank of `true_type` among `scores`.
pub fn filtered_rank(scores: &[f64], true_type: TypeId, filter: &[TypeId]) -> usize {
    let target = scores[true_type.index()];
    let skip: HashSet<usize> = filter.iter().map(|t| t.index()).collect();
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(t, &s)| t != true_type.index() && !skip.contains(&t) && s <= target)
        .count()
}

/// Type with the smallest regression score; ties go to the lowest id.
pub fn predict_type(model: &CoreModel, entity: EntityId) -> Result<TypeId> {
    let scores = model.type_scores(entity)?;
    argmin(&scores).ok_or(Error::UnknownId { kind: "type", id: 0 })
}

fn argmin(scores: &[f64]) -> Option<TypeId> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| TypeId(i as u32))
}

/// The `n` best types in ascending score order.
pub fn top_types(model: &CoreModel, entity: EntityId, n: usize) -> Result<Vec<(TypeId, f64)>> {
    let scores = model.type_scores(entity)?;
    let mut order: Vec<(TypeId, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| (TypeId(i as u32), s))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    order.truncate(n);
    Ok(order)
}

pub fn rank_type(
    model: &CoreModel,
    entity: EntityId,
    true_type: TypeId,
    filter: &[TypeId],
) -> Result<usize> {
    if true_type.index() >= model.n_types() {
        return Err(Error::UnknownId {
            kind: "type",
            id: true_type.index(),
        });
    }
    let scores = model.type_scores(entity)?;
    Ok(filtered_rank(&scores, true_type, filter))
}

/// Ranks every pair of `split` with an arbitrary per-entity scorer that
/// returns one lower-is-better score per type. Queries keep their input order.
pub fn evaluate_with<F>(split: &[TypePair], store: &TripleStore, scorer: F) -> Result<RankingReport>
where
    F: Fn(EntityId) -> Result<Vec<f64>> + Sync,
{
    let per_query = split
        .par_iter()
        .map(|p| {
            if p.ty.index() >= store.n_types {
                return Err(Error::UnknownId {
                    kind: "type",
                    id: p.ty.index(),
                });
            }
            let scores = scorer(p.entity)?;
            if scores.len() != store.n_types {
                return Err(Error::DimensionMismatch {
                    expected: store.n_types,
                    got: scores.len(),
                });
            }
            let filter = store.known_types.filter_set(p.entity, p.ty);
            Ok(QueryRank {
                entity: p.entity,
                true_type: p.ty,
                rank: filtered_rank(&scores, p.ty, &filter),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingReport::from_queries(per_query))
}

pub fn evaluate(split: &[TypePair], model: &CoreModel, store: &TripleStore) -> Result<RankingReport> {
    if model.n_types() != store.n_types || model.entities.rows() != store.n_entities {
        return Err(Error::VocabMismatch { which: "model shape" });
    }
    evaluate_with(split, store, |e| model.type_scores(e))
}
