use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{uniform_fill, Module, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output.
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` of shape `[out, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
    gw: Array2<f64>,
    gb: Array1<f64>,
    cache: Option<(Array2<f64>, Array2<f64>)>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self::from_params(Array2::zeros((outputs, inputs)), Array1::zeros(outputs), activation)
    }

    /// Weights uniform in `±1/sqrt(inputs)`, zero biases.
    pub fn new<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let mut layer = Self::zeros(inputs, outputs, activation);
        let bound = 1.0 / (inputs as f64).sqrt();
        uniform_fill(rng, layer.w.as_slice_mut().expect("standard layout"), bound);
        layer
    }

    pub fn from_params(w: Array2<f64>, b: Array1<f64>, activation: Activation) -> Self {
        assert_eq!(w.nrows(), b.len());
        Self {
            gw: Array2::zeros(w.raw_dim()),
            gb: Array1::zeros(b.raw_dim()),
            w,
            b,
            activation,
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }

    /// Forward pass without recording intermediates.
    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        if x.ncols() != self.inputs() {
            return Err(NnError::DimensionMismatch {
                expected: self.inputs(),
                got: x.ncols(),
            });
        }
        let mut y = x.dot(&self.w.t());
        y += &self.b;
        let act = self.activation;
        y.mapv_inplace(|z| act.apply(z));
        Ok(y)
    }

    /// Single-sample forward pass.
    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.infer(&x)?.into_raw_vec())
    }

    /// Forward pass that keeps what `backward` needs.
    pub fn forward(&mut self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let y = self.infer(x)?;
        self.cache = Some((x.clone(), y.clone()));
        Ok(y)
    }

    /// Accumulates parameter gradients for upstream gradient `dy` and
    /// returns the gradient with respect to the input.
    pub fn backward(&mut self, dy: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let (x, y) = self.cache.take().ok_or(NnError::NoForwardPass)?;
        if dy.dim() != y.dim() {
            return Err(NnError::DimensionMismatch {
                expected: y.ncols(),
                got: dy.ncols(),
            });
        }
        let act = self.activation;
        let mut dz = dy.clone();
        dz.zip_mut_with(&y, |d, &out| *d *= act.slope(out));
        self.gw += &dz.t().dot(&x);
        self.gb += &dz.sum_axis(Axis(0));
        Ok(dz.dot(&self.w))
    }
}

impl Module for Dense {
    fn visit(&self, f: &mut dyn FnMut(&[usize], &[f64])) {
        f(self.w.shape(), self.w.as_slice().expect("standard layout"));
        f(self.b.shape(), self.b.as_slice().expect("standard layout"));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&[usize], &mut [f64])) {
        let shape = self.w.shape().to_vec();
        f(&shape, self.w.as_slice_mut().expect("standard layout"));
        let shape = self.b.shape().to_vec();
        f(&shape, self.b.as_slice_mut().expect("standard layout"));
    }

    fn visit_with_grads(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64])) {
        f(self.w.as_slice_mut().expect("standard layout"), self.gw.as_slice().expect("standard layout"));
        f(self.b.as_slice_mut().expect("standard layout"), self.gb.as_slice().expect("standard layout"));
    }

    fn zero_grad(&mut self) {
        self.gw.fill(0.0);
        self.gb.fill(0.0);
    }
}
