//! Small dense/LSTM network toolkit with exact reverse-mode gradients, Adam,
//! and a bit-exact checkpoint format. Everything is `f64` and batched: rows
//! of an input matrix are independent samples.

mod adam;
mod checkpoint;
mod dense;
mod lstm;
mod mlp;

pub use adam::Adam;
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointSection, CHECKPOINT_VERSION};
pub use dense::{Activation, Dense};
pub use lstm::Lstm;
pub use mlp::Mlp;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backward called without a preceding forward pass")]
    NoForwardPass,
    #[error("tensor {index}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        index: usize,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Anything owning trainable tensors. Visit order is fixed per type and is
/// shared by parameters and gradients.
pub trait Module {
    fn visit(&self, f: &mut dyn FnMut(&[usize], &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&[usize], &mut [f64]));
    /// Visits `(parameter, accumulated gradient)` pairs.
    fn visit_with_grads(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64]));
    fn zero_grad(&mut self);

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, p| n += p.len());
        n
    }

    /// All parameters flattened in visit order.
    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, p| out.extend_from_slice(p));
        out
    }

    /// All accumulated gradients flattened in visit order.
    fn flat_grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_with_grads(&mut |_, g| out.extend_from_slice(g));
        out
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, p| ok &= p.iter().all(|x| x.is_finite()));
        ok
    }
}

/// Overwrites `dst` with `src`; both must have identical shapes.
pub fn copy_params(dst: &mut dyn Module, src: &dyn Module) {
    soft_update(dst, src, 1.0);
}

/// `target <- tau * online + (1 - tau) * target`, tensor by tensor.
pub fn soft_update(target: &mut dyn Module, online: &dyn Module, tau: f64) {
    let src = online.flat_params();
    let mut k = 0;
    target.visit_mut(&mut |_, p| {
        for x in p.iter_mut() {
            *x = if tau == 1.0 { src[k] } else { tau * src[k] + (1.0 - tau) * *x };
            k += 1;
        }
    });
    assert_eq!(k, src.len(), "soft update between differently shaped modules");
}

/// Euclidean distance between the parameters of two same-shaped modules.
pub fn param_distance(a: &dyn Module, b: &dyn Module) -> f64 {
    let (pa, pb) = (a.flat_params(), b.flat_params());
    pa.iter().zip(&pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn uniform_fill<R: Rng>(rng: &mut R, data: &mut [f64], bound: f64) {
    for x in data {
        *x = rng.gen_range(-bound..=bound);
    }
}

/// Central finite-difference checks of analytic gradients.
pub mod gradcheck {
    use super::Module;

    /// Relative error used by the finite-difference checks.
    pub fn rel_err(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale < 1e-7 {
            (a - b).abs()
        } else {
            (a - b).abs() / scale
        }
    }

    /// Largest relative error between the analytic gradients `analytic`
    /// (visit order) and central differences of `loss` over every parameter
    /// of `m`.
    pub fn max_param_error<M: Module>(m: &mut M, analytic: &[f64], loss: &mut dyn FnMut(&M) -> f64) -> f64 {
        let eps = 1e-5;
        let n = m.num_params();
        assert_eq!(n, analytic.len());
        let mut worst = 0.0_f64;
        for k in 0..n {
            let orig = nth(m, k);
            set_nth(m, k, orig + eps);
            let up = loss(m);
            set_nth(m, k, orig - eps);
            let down = loss(m);
            set_nth(m, k, orig);
            worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * eps)));
        }
        worst
    }

    /// Panics unless every parameter passes `max_param_error` at `tol`.
    pub fn check_params<M: Module>(m: &mut M, analytic: &[f64], loss: &mut dyn FnMut(&M) -> f64, tol: f64) {
        let err = max_param_error(m, analytic, loss);
        assert!(err <= tol, "max relative gradient error {err}");
    }

    fn nth<M: Module>(m: &M, k: usize) -> f64 {
        m.flat_params()[k]
    }

    fn set_nth<M: Module>(m: &mut M, k: usize, v: f64) {
        let mut i = 0;
        m.visit_mut(&mut |_, p| {
            if k >= i && k < i + p.len() {
                p[k - i] = v;
            }
            i += p.len();
        });
    }
}
