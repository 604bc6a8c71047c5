//! Adadelta: per-parameter step sizes from running averages of squared
//! gradients and squared updates.

use super::network::{Gradient, MlpModel};
use crate::scalar::Scalar;

pub const DEFAULT_RHO: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AdadeltaState<T> {
    pub rho: T,
    pub epsilon: T,
    /// Running average of squared gradients.
    pub sq_grad: Gradient<T>,
    /// Running average of squared updates.
    pub sq_update: Gradient<T>,
}

impl<T: Scalar> AdadeltaState<T> {
    pub fn new(model: &MlpModel<T>, rho: T, epsilon: T) -> Self {
        Self {
            rho,
            epsilon,
            sq_grad: Gradient::zeros_like(model),
            sq_update: Gradient::zeros_like(model),
        }
    }

    /// Applies one update to `model` in place.
    pub fn step(&mut self, model: &mut MlpModel<T>, grad: &Gradient<T>) {
        let (rho, eps) = (self.rho, self.epsilon);
        let one_minus = T::one() - rho;
        let params = model.params_mut();
        let accs = self.sq_grad.slices_mut().zip(self.sq_update.slices_mut());
        for ((theta, g), (eg, ed)) in params.zip(grad.slices()).zip(accs) {
            for i in 0..theta.len() {
                let gi = g[i];
                eg[i] = rho * eg[i] + one_minus * gi * gi;
                let delta = -((ed[i] + eps).sqrt() / (eg[i] + eps).sqrt()) * gi;
                ed[i] = rho * ed[i] + one_minus * delta * delta;
                theta[i] = theta[i] + delta;
            }
        }
    }
}
