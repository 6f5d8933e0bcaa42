use super::{Module, NnError};

/// Adam with bias correction. Moments are created on the first step and
/// must keep their shapes afterwards.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Checks (or on the first call creates) the moments for tensors of the
    /// given lengths and advances the step counter. Returns the two bias
    /// corrections.
    fn begin_step(&mut self, lens: &[usize]) -> Result<(f64, f64), NnError> {
        if self.m.is_empty() {
            self.m = lens.iter().map(|&n| vec![0.0; n]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != lens.len() {
            return Err(NnError::ShapeMismatch {
                index: self.m.len().min(lens.len()),
                expected: vec![self.m.len()],
                got: vec![lens.len()],
            });
        }
        for (idx, (m, &n)) in self.m.iter().zip(lens).enumerate() {
            if m.len() != n {
                return Err(NnError::ShapeMismatch {
                    index: idx,
                    expected: vec![m.len()],
                    got: vec![n],
                });
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        Ok((1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t)))
    }

    fn update(&mut self, idx: usize, p: &mut [f64], g: &[f64], c1: f64, c2: f64) {
        let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
        for k in 0..p.len() {
            m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
            v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
            p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + self.eps);
        }
    }

    /// One update over `(parameter, gradient)` tensor pairs.
    pub fn step_tensors<'a>(&mut self, tensors: impl IntoIterator<Item = (&'a mut [f64], &'a [f64])>) -> Result<(), NnError> {
        let mut pairs: Vec<(&mut [f64], &[f64])> = tensors.into_iter().collect();
        for (idx, (p, g)) in pairs.iter().enumerate() {
            if p.len() != g.len() {
                return Err(NnError::ShapeMismatch {
                    index: idx,
                    expected: vec![p.len()],
                    got: vec![g.len()],
                });
            }
        }
        let lens: Vec<usize> = pairs.iter().map(|(p, _)| p.len()).collect();
        let (c1, c2) = self.begin_step(&lens)?;
        for (idx, (p, g)) in pairs.iter_mut().enumerate() {
            self.update(idx, p, g, c1, c2);
        }
        Ok(())
    }

    /// Updates `module` from its accumulated gradients.
    pub fn step(&mut self, module: &mut dyn Module) -> Result<(), NnError> {
        let mut lens = Vec::new();
        module.visit(&mut |_, p| lens.push(p.len()));
        let (c1, c2) = self.begin_step(&lens)?;
        let mut idx = 0;
        module.visit_with_grads(&mut |p, g| {
            self.update(idx, p, g, c1, c2);
            idx += 1;
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut adam = Adam::new(0.01);
        let mut p = vec![1.0, -2.0];
        for _ in 0..10 {
            adam.step_tensors([(p.as_mut_slice(), [0.0, 0.0].as_slice())]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(adam.step_count, 10);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.001, 250.0] {
            let mut adam = Adam::new(0.05);
            let mut p = vec![0.0];
            adam.step_tensors([(p.as_mut_slice(), [g].as_slice())]).unwrap();
            assert!((p[0] + 0.05 * f64::signum(g)).abs() < 1e-6, "{g}: {}", p[0]);
        }
    }

    #[test]
    fn minimises_quadratic() {
        let mut adam = Adam::new(0.01);
        let mut x = vec![1.0];
        for _ in 0..1000 {
            let g = [2.0 * x[0]];
            adam.step_tensors([(x.as_mut_slice(), g.as_slice())]).unwrap();
        }
        assert!(x[0].abs() < 1e-2, "{}", x[0]);
    }

    #[test]
    fn shape_changes_are_rejected() {
        let mut adam = Adam::new(0.01);
        let mut p = vec![0.0; 3];
        assert!(adam.step_tensors([(p.as_mut_slice(), [0.0; 2].as_slice())]).is_err());
        adam.step_tensors([(p.as_mut_slice(), [0.0; 3].as_slice())]).unwrap();
        let mut q = vec![0.0; 4];
        assert!(adam.step_tensors([(q.as_mut_slice(), [0.0; 4].as_slice())]).is_err());
    }
}
