//! Adaptive-moment updates. Embedding tables use the lazy sparse form: only
//! rows that received a gradient have their moments and parameters touched.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers aligned with one parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    fn corrections(&mut self, hp: &AdamParams) -> (f64, f64) {
        self.t += 1;
        let t = self.t as i32;
        (1.0 - hp.beta1.powi(t), 1.0 - hp.beta2.powi(t))
    }

    #[inline]
    fn apply(&mut self, idx: usize, param: &mut f64, g: f64, lr: f64, hp: &AdamParams, bc: (f64, f64)) {
        let m = &mut self.m[idx];
        let v = &mut self.v[idx];
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
        let m_hat = *m / bc.0;
        let v_hat = *v / bc.1;
        *param -= lr * m_hat / (v_hat.sqrt() + hp.eps);
    }

    pub fn update_dense(&mut self, params: &mut [f64], grads: &[f64], lr: f64, hp: &AdamParams) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        let bc = self.corrections(hp);
        for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            self.apply(i, p, g, lr, hp, bc);
        }
    }

    /// Row-sparse update over a row-major parameter array of `width` columns.
    pub fn update_rows(
        &mut self,
        params: &mut [f64],
        width: usize,
        grads: &BTreeMap<usize, Vec<f64>>,
        lr: f64,
        hp: &AdamParams,
    ) {
        if grads.is_empty() {
            return;
        }
        let bc = self.corrections(hp);
        for (&row, g) in grads {
            debug_assert_eq!(g.len(), width);
            let base = row * width;
            for (j, &gj) in g.iter().enumerate() {
                self.apply(base + j, &mut params[base + j], gj, lr, hp, bc);
            }
        }
    }
}
