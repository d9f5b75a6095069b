//! Linear map from the entity space `C^k` to the type space `C^l`, held as
//! four real `k × l` blocks, and its distance score
//!
//! ```text
//! f(e, t) = ‖P_re(e) - Re(t)‖₂ + ‖P_im(e) - Im(t)‖₂
//! P_re(e) = A_rrᵀ Re(e) + A_irᵀ Im(e)
//! P_im(e) = A_riᵀ Re(e) + A_iiᵀ Im(e)
//! ```

use rand::Rng;

use crate::embedding::{ComplexVector, ComplexView};
use crate::error::{Error, Result};

/// Blocks are stored row-major, entry `(i, j)` at `i * l + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMap {
    k: usize,
    l: usize,
    /// A_Re→Re
    pub a_rr: Vec<f64>,
    /// A_Im→Re
    pub a_ir: Vec<f64>,
    /// A_Re→Im
    pub a_ri: Vec<f64>,
    /// A_Im→Im
    pub a_ii: Vec<f64>,
}

impl RegressionMap {
    pub fn zeros(k: usize, l: usize) -> Self {
        RegressionMap {
            k,
            l,
            a_rr: vec![0.0; k * l],
            a_ir: vec![0.0; k * l],
            a_ri: vec![0.0; k * l],
            a_ii: vec![0.0; k * l],
        }
    }

    /// Entries uniform in `[-1/√k, 1/√k]`.
    pub fn uniform<R: Rng + ?Sized>(k: usize, l: usize, rng: &mut R) -> Self {
        let b = 1.0 / (k as f64).sqrt();
        let mut m = Self::zeros(k, l);
        for block in m.blocks_mut() {
            for x in block.iter_mut() {
                *x = rng.gen_range(-b..=b);
            }
        }
        m
    }

    pub fn from_blocks(k: usize, l: usize, blocks: [Vec<f64>; 4]) -> Result<Self> {
        for b in &blocks {
            if b.len() != k * l {
                return Err(Error::DimensionMismatch {
                    expected: k * l,
                    got: b.len(),
                });
            }
        }
        let [a_rr, a_ir, a_ri, a_ii] = blocks;
        Ok(RegressionMap {
            k,
            l,
            a_rr,
            a_ir,
            a_ri,
            a_ii,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.a_rr, &self.a_ir, &self.a_ri, &self.a_ii]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.a_rr, &mut self.a_ir, &mut self.a_ri, &mut self.a_ii]
    }

    pub fn parameter_count(&self) -> usize {
        4 * self.k * self.l
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn project(&self, e: &ComplexVector) -> Result<ComplexVector> {
        if e.dim() != self.k || e.im.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: e.dim(),
            });
        }
        Ok(self.project_view(e.view()))
    }

    pub(crate) fn project_view(&self, e: ComplexView<'_>) -> ComplexVector {
        let l = self.l;
        let mut out = ComplexVector::zeros(l);
        for i in 0..self.k {
            let (xr, xi) = (e.re[i], e.im[i]);
            let row = i * l..(i + 1) * l;
            let (rr, ir) = (&self.a_rr[row.clone()], &self.a_ir[row.clone()]);
            let (ri, ii) = (&self.a_ri[row.clone()], &self.a_ii[row]);
            for j in 0..l {
                out.re[j] += rr[j] * xr + ir[j] * xi;
                out.im[j] += ri[j] * xr + ii[j] * xi;
            }
        }
        out
    }

    pub fn score(&self, e: &ComplexVector, t: &ComplexVector) -> Result<f64> {
        if t.dim() != self.l || t.im.len() != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                got: t.dim(),
            });
        }
        let p = self.project(e)?;
        Ok(projected_score(p.view(), t.view()))
    }

    pub fn gradients(&self, e: &ComplexVector, t: &ComplexVector) -> Result<RegressionGradient> {
        if t.dim() != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                got: t.dim(),
            });
        }
        let p = self.project(e)?;
        let mut g_out = ComplexVector::zeros(self.l);
        let mut g_type = ComplexVector::zeros(self.l);
        accumulate_projected_grad(p.view(), t.view(), 1.0, &mut g_out, &mut g_type);
        let mut g_map = RegressionMap::zeros(self.k, self.l);
        g_map.add_outer(e.view(), &g_out);
        Ok(RegressionGradient {
            map: g_map,
            ty: g_type,
            entity: self.backproject(&g_out),
        })
    }

    /// `self += e ⊗ g_out` blockwise: the map gradient for an output gradient `g_out`.
    pub(crate) fn add_outer(&mut self, e: ComplexView<'_>, g_out: &ComplexVector) {
        let l = self.l;
        for i in 0..self.k {
            let (xr, xi) = (e.re[i], e.im[i]);
            let row = i * l..(i + 1) * l;
            for (j, idx) in row.enumerate() {
                self.a_rr[idx] += xr * g_out.re[j];
                self.a_ir[idx] += xi * g_out.re[j];
                self.a_ri[idx] += xr * g_out.im[j];
                self.a_ii[idx] += xi * g_out.im[j];
            }
        }
    }

    /// Gradient with respect to the entity for an output gradient `g_out`.
    pub(crate) fn backproject(&self, g_out: &ComplexVector) -> ComplexVector {
        let l = self.l;
        let mut g = ComplexVector::zeros(self.k);
        for i in 0..self.k {
            let row = i * l..(i + 1) * l;
            let mut gr = 0.0;
            let mut gi = 0.0;
            for (j, idx) in row.enumerate() {
                gr += self.a_rr[idx] * g_out.re[j] + self.a_ri[idx] * g_out.im[j];
                gi += self.a_ir[idx] * g_out.re[j] + self.a_ii[idx] * g_out.im[j];
            }
            g.re[i] = gr;
            g.im[i] = gi;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionGradient {
    pub map: RegressionMap,
    pub ty: ComplexVector,
    pub entity: ComplexVector,
}

fn residual_norm(p: &[f64], t: &[f64]) -> f64 {
    p.iter()
        .zip(t)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Score of an already projected entity against a type vector.
pub(crate) fn projected_score(p: ComplexView<'_>, t: ComplexView<'_>) -> f64 {
    residual_norm(p.re, t.re) + residual_norm(p.im, t.im)
}

/// Adds `coef · ∂f/∂P` into `g_out` and `coef · ∂f/∂t` into `g_type`.
/// A zero residual norm contributes nothing.
pub(crate) fn accumulate_projected_grad(
    p: ComplexView<'_>,
    t: ComplexView<'_>,
    coef: f64,
    g_out: &mut ComplexVector,
    g_type: &mut ComplexVector,
) {
    for (pp, tt, go, gt) in [
        (p.re, t.re, &mut g_out.re, &mut g_type.re),
        (p.im, t.im, &mut g_out.im, &mut g_type.im),
    ] {
        let n = residual_norm(pp, tt);
        if n == 0.0 {
            continue;
        }
        let s = coef / n;
        for j in 0..pp.len() {
            let r = s * (pp[j] - tt[j]);
            go[j] += r;
            gt[j] -= r;
        }
    }
}
