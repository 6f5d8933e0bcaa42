use ndarray::Array2;
use rand::Rng;

use super::{Activation, Dense, Module, NnError};

/// A stack of dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` has one more entry than `activations`.
    pub fn new<R: Rng>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert_eq!(sizes.len(), activations.len() + 1);
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(io, &act)| Dense::new(io[0], io[1], act, rng))
            .collect();
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let mut h = self.layers[0].infer(x)?;
        for l in &self.layers[1..] {
            h = l.infer(&h)?;
        }
        Ok(h)
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let mut h = self.layers[0].forward(x)?;
        for l in &mut self.layers[1..] {
            h = l.forward(&h)?;
        }
        Ok(h)
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let mut d = dy.clone();
        for l in self.layers.iter_mut().rev() {
            d = l.backward(&d)?;
        }
        Ok(d)
    }
}

impl Module for Mlp {
    fn visit(&self, f: &mut dyn FnMut(&[usize], &[f64])) {
        self.layers.iter().for_each(|l| l.visit(f));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&[usize], &mut [f64])) {
        self.layers.iter_mut().for_each(|l| l.visit_mut(f));
    }

    fn visit_with_grads(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64])) {
        self.layers.iter_mut().for_each(|l| l.visit_with_grads(f));
    }

    fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(|l| l.zero_grad());
    }
}
