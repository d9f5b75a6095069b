//! Complex embedding tables and the RotatE / ComplEx score functions.
//!
//! Scores follow a lower-is-more-plausible convention for both kinds:
//!
//! ```text
//! ComplEx:  f = -Σ Re(w_i · s_i · conj(o_i))
//! RotatE:   f =  Σ |s_i · w_i - o_i|
//! ```
//!
//! RotatE relation rows are stored as phase angles and materialized as
//! `(cos θ, sin θ)`, so they stay on the unit circle under any update.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Borrowed real/imaginary halves of a complex vector.
#[derive(Debug, Clone, Copy)]
pub struct ComplexView<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
}

impl ComplexVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                got: im.len(),
            });
        }
        Ok(ComplexVector { re, im })
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector {
            re: vec![0.0; dim],
            im: vec![0.0; dim],
        }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        ComplexVector {
            re: pairs.iter().map(|p| p.0).collect(),
            im: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Unit-modulus vector `exp(i θ)` elementwise.
    pub fn from_phase(phase: &[f64]) -> Self {
        ComplexVector {
            re: phase.iter().map(|t| t.cos()).collect(),
            im: phase.iter().map(|t| t.sin()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn conj(&self) -> Self {
        ComplexVector {
            re: self.re.clone(),
            im: self.im.iter().map(|x| -x).collect(),
        }
    }

    pub fn view(&self) -> ComplexView<'_> {
        ComplexView {
            re: &self.re,
            im: &self.im,
        }
    }

    pub fn fill_zero(&mut self) {
        self.re.fill(0.0);
        self.im.fill(0.0);
    }
}

impl ComplexView<'_> {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn to_owned(&self) -> ComplexVector {
        ComplexVector {
            re: self.re.to_vec(),
            im: self.im.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "rotate")]
    RotatE,
    #[serde(rename = "complex")]
    ComplEx,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RotatE => "rotate",
            ModelKind::ComplEx => "complex",
        }
    }

    /// How relation rows of this kind are parameterized.
    pub fn relation_parameterization(self) -> Parameterization {
        match self {
            ModelKind::RotatE => Parameterization::UnitPhase,
            ModelKind::ComplEx => Parameterization::FreeComplex,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rotate" => Ok(ModelKind::RotatE),
            "complex" => Ok(ModelKind::ComplEx),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameterization {
    FreeComplex,
    UnitPhase,
}

/// `rows × dim` complex parameters. Free rows are laid out as
/// `[re_0..re_d, im_0..im_d]`; phase rows as `[θ_0..θ_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    dim: usize,
    param: Parameterization,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize, param: Parameterization) -> Self {
        let width = Self::width_for(dim, param);
        EmbeddingTable {
            rows,
            dim,
            param,
            data: vec![0.0; rows * width],
        }
    }

    /// Free components uniform in `[-bound, bound]`, phases uniform in `[-π, π]`.
    pub fn uniform<R: Rng + ?Sized>(
        rows: usize,
        dim: usize,
        param: Parameterization,
        bound: f64,
        rng: &mut R,
    ) -> Self {
        let mut t = Self::zeros(rows, dim, param);
        let b = match param {
            Parameterization::FreeComplex => bound,
            Parameterization::UnitPhase => PI,
        };
        for x in &mut t.data {
            *x = rng.gen_range(-b..=b);
        }
        t
    }

    pub fn from_raw(rows: usize, dim: usize, param: Parameterization, data: Vec<f64>) -> Result<Self> {
        let expected = rows * Self::width_for(dim, param);
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(EmbeddingTable {
            rows,
            dim,
            param,
            data,
        })
    }

    fn width_for(dim: usize, param: Parameterization) -> usize {
        match param {
            Parameterization::FreeComplex => 2 * dim,
            Parameterization::UnitPhase => dim,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parameterization(&self) -> Parameterization {
        self.param
    }

    /// Stored reals per row.
    pub fn row_width(&self) -> usize {
        Self::width_for(self.dim, self.param)
    }

    pub fn parameter_count(&self) -> usize {
        self.data.len()
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row_raw(&self, i: usize) -> &[f64] {
        let w = self.row_width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_raw_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.row_width();
        &mut self.data[i * w..(i + 1) * w]
    }

    /// Borrowed view of a free-complex row.
    ///
    /// Panics on a phase-parameterized table; use [`EmbeddingTable::row`].
    pub fn view(&self, i: usize) -> ComplexView<'_> {
        assert_eq!(self.param, Parameterization::FreeComplex);
        let (re, im) = self.row_raw(i).split_at(self.dim);
        ComplexView { re, im }
    }

    /// Materialized complex row.
    pub fn row(&self, i: usize) -> ComplexVector {
        match self.param {
            Parameterization::FreeComplex => self.view(i).to_owned(),
            Parameterization::UnitPhase => ComplexVector::from_phase(self.row_raw(i)),
        }
    }

    pub fn check_row(&self, i: usize, kind: &'static str) -> Result<()> {
        if i < self.rows {
            Ok(())
        } else {
            Err(Error::UnknownId { kind, id: i })
        }
    }
}

fn check_dims(a: ComplexView<'_>, b: ComplexView<'_>, c: ComplexView<'_>) -> Result<()> {
    let d = a.dim();
    for v in [a, b, c] {
        if v.re.len() != d || v.im.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.re.len().max(v.im.len()),
            });
        }
    }
    Ok(())
}

pub fn score_complex(w: &ComplexVector, s: &ComplexVector, o: &ComplexVector) -> Result<f64> {
    check_dims(w.view(), s.view(), o.view())?;
    Ok(complex_score(w.view(), s.view(), o.view()))
}

pub fn score_rotate(w: &ComplexVector, s: &ComplexVector, o: &ComplexVector) -> Result<f64> {
    check_dims(w.view(), s.view(), o.view())?;
    Ok(rotate_score(w.view(), s.view(), o.view()))
}

/// Type-space score, identical to the entity-space forms at dimension `l`.
pub fn score_type_space(
    v: &ComplexVector,
    ts: &ComplexVector,
    to: &ComplexVector,
    kind: ModelKind,
) -> Result<f64> {
    match kind {
        ModelKind::ComplEx => score_complex(v, ts, to),
        ModelKind::RotatE => score_rotate(v, ts, to),
    }
}

pub(crate) fn complex_score(w: ComplexView<'_>, s: ComplexView<'_>, o: ComplexView<'_>) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.dim() {
        let (a, b) = (w.re[i], w.im[i]);
        let (c, d) = (s.re[i], s.im[i]);
        let (e, f) = (o.re[i], o.im[i]);
        acc += (a * c - b * d) * e + (a * d + b * c) * f;
    }
    -acc
}

pub(crate) fn rotate_score(w: ComplexView<'_>, s: ComplexView<'_>, o: ComplexView<'_>) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.dim() {
        let rr = s.re[i] * w.re[i] - s.im[i] * w.im[i] - o.re[i];
        let ri = s.re[i] * w.im[i] + s.im[i] * w.re[i] - o.im[i];
        acc += rr.hypot(ri);
    }
    acc
}

pub(crate) fn score_views(
    kind: ModelKind,
    w: ComplexView<'_>,
    s: ComplexView<'_>,
    o: ComplexView<'_>,
) -> f64 {
    match kind {
        ModelKind::ComplEx => complex_score(w, s, o),
        ModelKind::RotatE => rotate_score(w, s, o),
    }
}

/// Partial derivatives of a triple score with respect to the real and
/// imaginary components of each argument.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGradient {
    pub relation: ComplexVector,
    pub subject: ComplexVector,
    pub object: ComplexVector,
}

impl TripleGradient {
    pub fn zeros(dim: usize) -> Self {
        TripleGradient {
            relation: ComplexVector::zeros(dim),
            subject: ComplexVector::zeros(dim),
            object: ComplexVector::zeros(dim),
        }
    }
}

pub fn score_gradients(
    kind: ModelKind,
    w: &ComplexVector,
    s: &ComplexVector,
    o: &ComplexVector,
) -> Result<TripleGradient> {
    check_dims(w.view(), s.view(), o.view())?;
    let mut g = TripleGradient::zeros(w.dim());
    accumulate_gradients(kind, w.view(), s.view(), o.view(), 1.0, &mut g);
    Ok(g)
}

/// Adds `coef · ∂f/∂(·)` into `g`. A zero RotatE residual element
/// contributes nothing.
pub(crate) fn accumulate_gradients(
    kind: ModelKind,
    w: ComplexView<'_>,
    s: ComplexView<'_>,
    o: ComplexView<'_>,
    coef: f64,
    g: &mut TripleGradient,
) {
    let d = w.dim();
    match kind {
        ModelKind::ComplEx => {
            for i in 0..d {
                let (a, b) = (w.re[i], w.im[i]);
                let (c, dd) = (s.re[i], s.im[i]);
                let (e, f) = (o.re[i], o.im[i]);
                g.relation.re[i] -= coef * (c * e + dd * f);
                g.relation.im[i] += coef * (dd * e - c * f);
                g.subject.re[i] -= coef * (a * e + b * f);
                g.subject.im[i] += coef * (b * e - a * f);
                g.object.re[i] -= coef * (a * c - b * dd);
                g.object.im[i] -= coef * (a * dd + b * c);
            }
        }
        ModelKind::RotatE => {
            for i in 0..d {
                let (a, b) = (w.re[i], w.im[i]);
                let (c, dd) = (s.re[i], s.im[i]);
                let rr = c * a - dd * b - o.re[i];
                let ri = c * b + dd * a - o.im[i];
                let m = rr.hypot(ri);
                if m == 0.0 {
                    continue;
                }
                let (ur, ui) = (coef * rr / m, coef * ri / m);
                g.subject.re[i] += ur * a + ui * b;
                g.subject.im[i] += -ur * b + ui * a;
                g.relation.re[i] += ur * c + ui * dd;
                g.relation.im[i] += -ur * dd + ui * c;
                g.object.re[i] -= ur;
                g.object.im[i] -= ui;
            }
        }
    }
}

/// Chain rule from `∂f/∂(re, im)` of a unit-modulus row to `∂f/∂θ`.
pub fn phase_gradient(phase: &[f64], grad: &ComplexVector) -> Vec<f64> {
    phase
        .iter()
        .zip(grad.re.iter().zip(&grad.im))
        .map(|(t, (gr, gi))| -gr * t.sin() + gi * t.cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(pairs: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::from_pairs(pairs)
    }

    #[test]
    fn complex_hand_values() {
        let s = score_complex(&c(&[(1.0, 0.0)]), &c(&[(1.0, 1.0)]), &c(&[(1.0, 1.0)])).unwrap();
        assert_eq!(s, -2.0);
        let s = score_complex(&c(&[(0.0, 1.0)]), &c(&[(1.0, 0.0)]), &c(&[(0.0, 1.0)])).unwrap();
        assert_eq!(s, -1.0);
        let z = score_complex(
            &ComplexVector::zeros(3),
            &c(&[(1.0, 2.0), (3.0, -1.0), (0.5, 0.5)]),
            &c(&[(2.0, 2.0), (1.0, 1.0), (-1.0, 4.0)]),
        )
        .unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn rotate_hand_values() {
        let e = c(&[(0.3, -0.2), (1.5, 0.7)]);
        let ident = c(&[(1.0, 0.0), (1.0, 0.0)]);
        assert_eq!(score_rotate(&ident, &e, &e).unwrap(), 0.0);
        let s = score_rotate(&c(&[(0.0, 1.0)]), &c(&[(1.0, 0.0)]), &c(&[(0.0, 1.0)])).unwrap();
        assert_eq!(s, 0.0);
        let s = score_rotate(&c(&[(1.0, 0.0)]), &c(&[(1.0, 0.0)]), &c(&[(-1.0, 0.0)])).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn type_space_matches_entity_space() {
        let v = c(&[(0.0, 1.0)]);
        let a = c(&[(1.0, 0.0)]);
        let b = c(&[(0.0, 1.0)]);
        assert_eq!(score_type_space(&v, &a, &b, ModelKind::ComplEx).unwrap(), -1.0);
        assert_eq!(score_type_space(&v, &a, &b, ModelKind::RotatE).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = score_complex(&ComplexVector::zeros(2), &ComplexVector::zeros(3), &ComplexVector::zeros(2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        assert!(ComplexVector::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn complex_gradient_hand_value() {
        let one = c(&[(1.0, 0.0)]);
        let g = score_gradients(ModelKind::ComplEx, &one, &one, &one).unwrap();
        assert_eq!(g.subject.re[0], -1.0);
    }

    #[test]
    fn rotate_zero_residual_has_zero_gradient() {
        let e = c(&[(0.3, -0.2), (1.5, 0.7)]);
        let ident = c(&[(1.0, 0.0), (1.0, 0.0)]);
        let g = score_gradients(ModelKind::RotatE, &ident, &e, &e).unwrap();
        assert_eq!(g, TripleGradient::zeros(2));
    }

    #[test]
    fn phase_rows_stay_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = EmbeddingTable::uniform(4, 6, Parameterization::UnitPhase, 1.0, &mut rng);
        for x in t.raw_mut() {
            *x += 123.456;
        }
        for r in 0..t.rows() {
            let row = t.row(r);
            for i in 0..row.dim() {
                let m = row.re[i] * row.re[i] + row.im[i] * row.im[i];
                assert!((m - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = EmbeddingTable::uniform(10, 8, Parameterization::FreeComplex, 0.25, &mut rng);
        assert_eq!(t.parameter_count(), 10 * 8 * 2);
        assert!(t.raw().iter().all(|x| x.abs() <= 0.25));
    }

    #[test]
    fn model_kind_parses() {
        assert_eq!("RotatE".parse::<ModelKind>().unwrap(), ModelKind::RotatE);
        assert_eq!("complex".parse::<ModelKind>().unwrap(), ModelKind::ComplEx);
        assert!("transe".parse::<ModelKind>().is_err());
    }
}
