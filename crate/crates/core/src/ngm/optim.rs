use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Seeds the per-epoch sample order.
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 10,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::Config(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// Adaptive-moment optimizer state, one moment pair per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub cfg: OptimConfig,
    pub step: u64,
    pub m: Vec<DenseMatrix<T>>,
    pub v: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: OptimConfig, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|(r, c)| (DenseMatrix::zeros(r, c), DenseMatrix::zeros(r, c)))
            .unzip();
        Self { cfg, step: 0, m, v }
    }

    pub fn update(&mut self, params: &mut [DenseMatrix<T>], grads: &[DenseMatrix<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape("optimizer state does not match the parameter list".into()));
        }
        self.step += 1;
        let (b1, b2) = (self.cfg.beta1, self.cfg.beta2);
        let c1 = T::lit(1.0 - b1.powi(self.step as i32));
        let c2 = T::lit(1.0 - b2.powi(self.step as i32));
        let (lr, eps) = (T::lit(self.cfg.lr), T::lit(self.cfg.eps));
        let (b1, b2) = (T::lit(b1), T::lit(b2));
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            if p.shape() != g.shape() {
                return Err(Error::Shape("gradient shape differs from its parameter".into()));
            }
            for (((p, &g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let mh = *m / c1;
                let vh = *v / c2;
                *p -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}
