use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;

use super::{uniform_fill, Module, NnError};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    tanh_c: Array2<f64>,
}

/// LSTM cell. Gate pre-activations are stacked as `[input, forget,
/// candidate, output]` rows of `wx` (`[4H, in]`), `wh` (`[4H, H]`) and `b`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
    hidden: usize,
    gwx: Array2<f64>,
    gwh: Array2<f64>,
    gb: Array1<f64>,
    cache: Option<(Vec<StepCache>, Vec<usize>)>,
}

impl Lstm {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            wx: Array2::zeros((4 * hidden, inputs)),
            wh: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
            hidden,
            gwx: Array2::zeros((4 * hidden, inputs)),
            gwh: Array2::zeros((4 * hidden, hidden)),
            gb: Array1::zeros(4 * hidden),
            cache: None,
        }
    }

    /// Weights uniform in `±1/sqrt(inputs + hidden)`, zero biases except a
    /// forget-gate bias of 1.
    pub fn new<R: Rng>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let mut cell = Self::zeros(inputs, hidden);
        let bound = 1.0 / ((inputs + hidden) as f64).sqrt();
        uniform_fill(rng, cell.wx.as_slice_mut().expect("standard layout"), bound);
        uniform_fill(rng, cell.wh.as_slice_mut().expect("standard layout"), bound);
        cell.b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        cell
    }

    pub fn inputs(&self) -> usize {
        self.wx.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn gates(&self, x: &Array2<f64>, h: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        if x.ncols() != self.inputs() {
            return Err(NnError::DimensionMismatch {
                expected: self.inputs(),
                got: x.ncols(),
            });
        }
        if h.ncols() != self.hidden || h.nrows() != x.nrows() {
            return Err(NnError::DimensionMismatch {
                expected: self.hidden,
                got: h.ncols(),
            });
        }
        let mut z = x.dot(&self.wx.t());
        z += &h.dot(&self.wh.t());
        z += &self.b;
        Ok(z)
    }

    fn step_full(&self, x: &Array2<f64>, h: &Array2<f64>, c: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, StepCache), NnError> {
        if c.dim() != h.dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.hidden,
                got: c.ncols(),
            });
        }
        let z = self.gates(x, h)?;
        let hd = self.hidden;
        let i = z.slice(s![.., 0..hd]).mapv(sigmoid);
        let f = z.slice(s![.., hd..2 * hd]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * hd..3 * hd]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * hd..4 * hd]).mapv(sigmoid);
        let c_new = &f * c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        let cache = StepCache {
            x: x.clone(),
            h_prev: h.clone(),
            c_prev: c.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        Ok((h_new, c_new, cache))
    }

    /// One recurrence step on a batch: returns `(h', c')`.
    pub fn step(&self, x: &Array2<f64>, h: &Array2<f64>, c: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>), NnError> {
        let (h, c, _) = self.step_full(x, h, c)?;
        Ok((h, c))
    }

    fn check_lens(xs: &[Array2<f64>], lens: &[usize]) -> Result<usize, NnError> {
        let first = xs.first().ok_or(NnError::EmptySequence)?;
        if lens.len() != first.nrows() {
            return Err(NnError::DimensionMismatch {
                expected: first.nrows(),
                got: lens.len(),
            });
        }
        if lens.iter().any(|&l| l == 0 || l > xs.len()) {
            return Err(NnError::EmptySequence);
        }
        Ok(first.nrows())
    }

    /// Rows with `lens[r] <= t` keep their previous state at step `t`.
    fn hold_finished(t: usize, lens: &[usize], new: &mut Array2<f64>, old: &Array2<f64>) {
        for (r, &l) in lens.iter().enumerate() {
            if l <= t {
                new.row_mut(r).assign(&old.row(r));
            }
        }
    }

    /// Final hidden state of each row. `xs[t]` holds step `t` of every
    /// sequence; row `r` is only `lens[r]` steps long and later entries are
    /// ignored.
    pub fn infer_padded(&self, xs: &[Array2<f64>], lens: &[usize]) -> Result<Array2<f64>, NnError> {
        let rows = Self::check_lens(xs, lens)?;
        let mut h = Array2::zeros((rows, self.hidden));
        let mut c = h.clone();
        for (t, x) in xs.iter().enumerate() {
            let (mut h2, mut c2) = self.step(x, &h, &c)?;
            Self::hold_finished(t, lens, &mut h2, &h);
            Self::hold_finished(t, lens, &mut c2, &c);
            h = h2;
            c = c2;
        }
        Ok(h)
    }

    pub fn infer(&self, xs: &[Array2<f64>]) -> Result<Array2<f64>, NnError> {
        let first = xs.first().ok_or(NnError::EmptySequence)?;
        self.infer_padded(xs, &vec![xs.len(); first.nrows()])
    }

    /// As `infer_padded`, recording what `backward` needs.
    pub fn forward_padded(&mut self, xs: &[Array2<f64>], lens: &[usize]) -> Result<Array2<f64>, NnError> {
        let rows = Self::check_lens(xs, lens)?;
        let mut h = Array2::zeros((rows, self.hidden));
        let mut c = h.clone();
        let mut steps = Vec::with_capacity(xs.len());
        for (t, x) in xs.iter().enumerate() {
            let (mut h2, mut c2, cache) = self.step_full(x, &h, &c)?;
            Self::hold_finished(t, lens, &mut h2, &h);
            Self::hold_finished(t, lens, &mut c2, &c);
            steps.push(cache);
            h = h2;
            c = c2;
        }
        self.cache = Some((steps, lens.to_vec()));
        Ok(h)
    }

    pub fn forward(&mut self, xs: &[Array2<f64>]) -> Result<Array2<f64>, NnError> {
        let first = xs.first().ok_or(NnError::EmptySequence)?;
        self.forward_padded(xs, &vec![xs.len(); first.nrows()])
    }

    /// Accumulates parameter gradients for `dh_last`, the gradient at the
    /// returned hidden state, and returns the gradient for each input step.
    pub fn backward(&mut self, dh_last: &Array2<f64>) -> Result<Vec<Array2<f64>>, NnError> {
        let (steps, lens) = self.cache.take().ok_or(NnError::NoForwardPass)?;
        let hd = self.hidden;
        let mut dh = dh_last.clone();
        let mut dc: Array2<f64> = Array2::zeros(dh.raw_dim());
        let mut dxs = vec![Array2::zeros((0, 0)); steps.len()];
        for (t, st) in steps.iter().enumerate().rev() {
            // Finished rows pass their gradient straight through this step.
            let done: Vec<usize> = (0..lens.len()).filter(|&r| lens[r] <= t).collect();
            let mut carry = Vec::with_capacity(done.len());
            for &r in &done {
                carry.push((dh.row(r).to_owned(), dc.row(r).to_owned()));
                dh.row_mut(r).fill(0.0);
                dc.row_mut(r).fill(0.0);
            }
            let d_o = &dh * &st.tanh_c;
            dc += &(&dh * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v));
            let di = &dc * &st.g;
            let dg = &dc * &st.i;
            let df = &dc * &st.c_prev;
            let mut dz = Array2::zeros((dh.nrows(), 4 * hd));
            dz.slice_mut(s![.., 0..hd]).assign(&(&di * &st.i.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., hd..2 * hd]).assign(&(&df * &st.f.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., 2 * hd..3 * hd]).assign(&(&dg * &st.g.mapv(|v| 1.0 - v * v)));
            dz.slice_mut(s![.., 3 * hd..4 * hd]).assign(&(&d_o * &st.o.mapv(|v| v * (1.0 - v))));
            self.gwx += &dz.t().dot(&st.x);
            self.gwh += &dz.t().dot(&st.h_prev);
            self.gb += &dz.sum_axis(Axis(0));
            dxs[t] = dz.dot(&self.wx);
            dh = dz.dot(&self.wh);
            dc = &dc * &st.f;
            for (&r, (h_carry, c_carry)) in done.iter().zip(carry) {
                dh.row_mut(r).assign(&h_carry);
                dc.row_mut(r).assign(&c_carry);
            }
        }
        Ok(dxs)
    }
}

impl Module for Lstm {
    fn visit(&self, f: &mut dyn FnMut(&[usize], &[f64])) {
        f(self.wx.shape(), self.wx.as_slice().expect("standard layout"));
        f(self.wh.shape(), self.wh.as_slice().expect("standard layout"));
        f(self.b.shape(), self.b.as_slice().expect("standard layout"));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&[usize], &mut [f64])) {
        let shape = self.wx.shape().to_vec();
        f(&shape, self.wx.as_slice_mut().expect("standard layout"));
        let shape = self.wh.shape().to_vec();
        f(&shape, self.wh.as_slice_mut().expect("standard layout"));
        let shape = self.b.shape().to_vec();
        f(&shape, self.b.as_slice_mut().expect("standard layout"));
    }

    fn visit_with_grads(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64])) {
        f(self.wx.as_slice_mut().expect("standard layout"), self.gwx.as_slice().expect("standard layout"));
        f(self.wh.as_slice_mut().expect("standard layout"), self.gwh.as_slice().expect("standard layout"));
        f(self.b.as_slice_mut().expect("standard layout"), self.gb.as_slice().expect("standard layout"));
    }

    fn zero_grad(&mut self) {
        self.gwx.fill(0.0);
        self.gwh.fill(0.0);
        self.gb.fill(0.0);
    }
}
