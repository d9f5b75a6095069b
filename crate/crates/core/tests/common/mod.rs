//! Independent reference implementations shared by the integration tests.
//! Nothing here calls the scoring, ranking or counting code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use core_kgt::dataset::{KgTriple, StoreParts, TripleStore, TypePair};
use core_kgt::embedding::ComplexVector;
use core_kgt::regression::RegressionMap;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn to_c(v: &ComplexVector) -> Vec<Complex64> {
    v.re.iter().zip(&v.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

pub fn from_c(v: &[Complex64]) -> ComplexVector {
    ComplexVector::new(v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect()).unwrap()
}

pub fn random_vec<R: Rng>(rng: &mut R, d: usize, scale: f64) -> ComplexVector {
    ComplexVector::new(
        (0..d).map(|_| rng.gen_range(-scale..scale)).collect(),
        (0..d).map(|_| rng.gen_range(-scale..scale)).collect(),
    )
    .unwrap()
}

/// `-Σ Re(w · s · conj(o))`
pub fn oracle_complex(w: &ComplexVector, s: &ComplexVector, o: &ComplexVector) -> f64 {
    let (w, s, o) = (to_c(w), to_c(s), to_c(o));
    -(0..w.len()).map(|i| (w[i] * s[i] * o[i].conj()).re).sum::<f64>()
}

/// `Σ |s ∘ w − o|`
pub fn oracle_rotate(w: &ComplexVector, s: &ComplexVector, o: &ComplexVector) -> f64 {
    let (w, s, o) = (to_c(w), to_c(s), to_c(o));
    (0..w.len()).map(|i| (s[i] * w[i] - o[i]).norm()).sum()
}

/// Projection by explicit index arithmetic over the four `k × l` blocks.
pub fn oracle_project(m: &RegressionMap, e: &ComplexVector) -> ComplexVector {
    let (k, l) = (m.k(), m.l());
    let mut pr = vec![0.0; l];
    let mut pi = vec![0.0; l];
    for j in 0..l {
        for i in 0..k {
            pr[j] += m.a_rr[i * l + j] * e.re[i] + m.a_ir[i * l + j] * e.im[i];
            pi[j] += m.a_ri[i * l + j] * e.re[i] + m.a_ii[i * l + j] * e.im[i];
        }
    }
    ComplexVector::new(pr, pi).unwrap()
}

/// `‖Re(P) − Re(t)‖₂ + ‖Im(P) − Im(t)‖₂`
pub fn oracle_regression(m: &RegressionMap, e: &ComplexVector, t: &ComplexVector) -> f64 {
    let p = oracle_project(m, e);
    let nr: f64 = p.re.iter().zip(&t.re).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let ni: f64 = p.im.iter().zip(&t.im).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    nr + ni
}

pub fn oracle_softplus(x: f64) -> f64 {
    (1.0 + x.exp()).ln()
}

/// Central differences of `f` at `x`.
pub fn finite_diff(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`; 0 when both vanish.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Rank of `true_t` by sorting the unfiltered candidates on
/// `(score, is_true)`, which puts the true type after every tie.
pub fn brute_force_rank(scores: &[f64], true_t: usize, filter: &BTreeSet<usize>) -> usize {
    let mut cands: Vec<(f64, bool, usize)> = (0..scores.len())
        .filter(|t| *t == true_t || !filter.contains(t))
        .map(|t| (scores[t], t == true_t, t))
        .collect();
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    1 + cands.iter().position(|c| c.2 == true_t).unwrap()
}

/// Types of `e` across all three splits, minus `true_t`.
pub fn oracle_filter(store: &TripleStore, e: usize, true_t: usize) -> BTreeSet<usize> {
    store
        .tp_train
        .iter()
        .chain(&store.tp_valid)
        .chain(&store.tp_test)
        .filter(|p| p.entity.index() == e && p.ty.index() != true_t)
        .map(|p| p.ty.index())
        .collect()
}

/// Random store with every entity in at least one train triple.
pub fn random_store<R: Rng>(
    rng: &mut R,
    n_entities: usize,
    n_relations: usize,
    n_types: usize,
    n_triples: usize,
    types_per_entity: usize,
) -> TripleStore {
    let mut kg: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for e in 0..n_entities {
        kg.insert((e, rng.gen_range(0..n_relations), rng.gen_range(0..n_entities)));
    }
    while kg.len() < n_triples {
        kg.insert((
            rng.gen_range(0..n_entities),
            rng.gen_range(0..n_relations),
            rng.gen_range(0..n_entities),
        ));
    }
    let mut kg: Vec<KgTriple> = kg.into_iter().map(|(s, r, o)| KgTriple::new(s, r, o)).collect();
    kg.shuffle(rng);

    let mut pairs: Vec<TypePair> = Vec::new();
    for e in 0..n_entities {
        let mut ts: Vec<usize> = (0..n_types).collect();
        ts.shuffle(rng);
        let n = rng.gen_range(1..=types_per_entity.min(n_types));
        pairs.extend(ts[..n].iter().map(|&t| TypePair::new(e, t)));
    }
    pairs.shuffle(rng);
    let n_train = pairs.len() * 6 / 10;
    let n_valid = pairs.len() * 2 / 10;
    let tp_test = pairs.split_off(n_train + n_valid);
    let tp_valid = pairs.split_off(n_train);
    TripleStore::from_parts(StoreParts {
        n_entities,
        n_relations,
        n_types,
        kg: [kg, Vec::new(), Vec::new()],
        tp: [pairs, tp_valid, tp_test],
    })
    .unwrap()
}

fn train_types(store: &TripleStore, e: usize) -> Vec<usize> {
    store
        .tp_train
        .iter()
        .filter(|p| p.entity.index() == e)
        .map(|p| p.ty.index())
        .collect()
}

/// `p(s_t = target | r)` by scanning every triple.
pub fn oracle_p_subject(store: &TripleStore, r: usize, target: usize) -> Option<f64> {
    let (mut num, mut den) = (0usize, 0usize);
    for t in store.kg_train.iter().filter(|t| t.relation.index() == r) {
        for s_t in train_types(store, t.subject.index()) {
            den += 1;
            num += usize::from(s_t == target);
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn oracle_p_object(store: &TripleStore, r: usize, target: usize) -> Option<f64> {
    let (mut num, mut den) = (0usize, 0usize);
    for t in store.kg_train.iter().filter(|t| t.relation.index() == r) {
        for o_t in train_types(store, t.object.index()) {
            den += 1;
            num += usize::from(o_t == target);
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

/// `p(s_t = target | r, o_t = given)`
pub fn oracle_p_subject_cond(store: &TripleStore, r: usize, given: usize, target: usize) -> Option<f64> {
    let (mut num, mut den) = (0usize, 0usize);
    for t in store.kg_train.iter().filter(|t| t.relation.index() == r) {
        if !train_types(store, t.object.index()).contains(&given) {
            continue;
        }
        for s_t in train_types(store, t.subject.index()) {
            den += 1;
            num += usize::from(s_t == target);
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

/// `p(o_t = target | r, s_t = given)`
pub fn oracle_p_object_cond(store: &TripleStore, r: usize, given: usize, target: usize) -> Option<f64> {
    let (mut num, mut den) = (0usize, 0usize);
    for t in store.kg_train.iter().filter(|t| t.relation.index() == r) {
        if !train_types(store, t.subject.index()).contains(&given) {
            continue;
        }
        for o_t in train_types(store, t.object.index()) {
            den += 1;
            num += usize::from(o_t == target);
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

/// Aggregated baseline score of every type for `e`; `conditional` selects
/// the neighbor-type-conditioned variant.
pub fn oracle_baseline_scores(store: &TripleStore, e: usize, conditional: bool) -> BTreeMap<usize, f64> {
    // (is_subject, relation, neighbor type or usize::MAX)
    let mut combos: BTreeSet<(bool, usize, usize)> = BTreeSet::new();
    for t in &store.kg_train {
        let r = t.relation.index();
        if t.subject.index() == e {
            if conditional {
                for nt in train_types(store, t.object.index()) {
                    combos.insert((true, r, nt));
                }
            } else {
                combos.insert((true, r, usize::MAX));
            }
        }
        if t.object.index() == e {
            if conditional {
                for nt in train_types(store, t.subject.index()) {
                    combos.insert((false, r, nt));
                }
            } else {
                combos.insert((false, r, usize::MAX));
            }
        }
    }
    let p = |c: &(bool, usize, usize), target: usize| -> Option<f64> {
        match (c.0, conditional) {
            (true, false) => oracle_p_subject(store, c.1, target),
            (false, false) => oracle_p_object(store, c.1, target),
            (true, true) => oracle_p_subject_cond(store, c.1, c.2, target),
            (false, true) => oracle_p_object_cond(store, c.1, c.2, target),
        }
    };
    let usable: Vec<&(bool, usize, usize)> = combos.iter().filter(|c| p(c, 0).is_some()).collect();
    let mut out = BTreeMap::new();
    if usable.is_empty() {
        return out;
    }
    for target in 0..store.n_types {
        let total: f64 = usable.iter().map(|c| p(c, target).unwrap()).sum();
        if total > 0.0 {
            out.insert(target, total / usable.len() as f64);
        }
    }
    out
}
