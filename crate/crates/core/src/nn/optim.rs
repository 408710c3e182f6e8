use super::net::NetParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptAlgorithm {
    Adam { beta1: f64, beta2: f64 },
    RmsProp { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub algorithm: OptAlgorithm,
    pub learning_rate: f64,
    pub epsilon: f64,
    /// Decoupled decay: parameters are scaled by `1 - lr * weight_decay` each step.
    pub weight_decay: f64,
}

impl OptConfig {
    pub fn adam(learning_rate: f64) -> Self {
        OptConfig {
            algorithm: OptAlgorithm::Adam {
                beta1: 0.9,
                beta2: 0.999,
            },
            learning_rate,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        OptConfig {
            algorithm: OptAlgorithm::RmsProp { decay: 0.99 },
            learning_rate,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }
}

/// Moment accumulators for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub config: OptConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl OptState {
    pub fn new(config: OptConfig, params: &NetParams) -> Self {
        OptState {
            config,
            first: vec![0.0; params.len()],
            second: vec![0.0; params.len()],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// First and second moment accumulators.
    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.first, &self.second)
    }

    /// Rebuilds a state saved through [`OptState::moments`] and [`OptState::steps`].
    pub fn from_parts(config: OptConfig, first: Vec<f64>, second: Vec<f64>, step: u64) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::Shape("moment vectors differ in length".into()));
        }
        Ok(OptState {
            config,
            first,
            second,
            step,
        })
    }

    /// One descent step with the configured learning rate.
    pub fn step(&mut self, params: &mut NetParams, grads: &[f64]) -> Result<()> {
        let lr = self.config.learning_rate;
        self.step_with_lr(params, grads, lr)
    }

    pub fn step_with_lr(&mut self, params: &mut NetParams, grads: &[f64], lr: f64) -> Result<()> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer holds {} slots, params {}, gradients {}",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", params.describe_index(i))));
        }
        self.step += 1;
        let decay = 1.0 - lr * self.config.weight_decay;
        let eps = self.config.epsilon;
        let values = params.values_mut();
        match self.config.algorithm {
            OptAlgorithm::Adam { beta1, beta2 } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for i in 0..values.len() {
                    let g = grads[i];
                    self.first[i] = beta1 * self.first[i] + (1.0 - beta1) * g;
                    self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g * g;
                    let m = self.first[i] / c1;
                    let v = self.second[i] / c2;
                    values[i] = values[i] * decay - lr * m / (v.sqrt() + eps);
                }
            }
            OptAlgorithm::RmsProp { decay: rho } => {
                for i in 0..values.len() {
                    let g = grads[i];
                    self.second[i] = rho * self.second[i] + (1.0 - rho) * g * g;
                    values[i] = values[i] * decay - lr * g / (self.second[i].sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ArchDescriptor};

    fn scalar(v: f64) -> NetParams {
        NetParams::from_values(ArchDescriptor::mlp(1, &[], 1, Activation::Linear), vec![v, 0.0]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for cfg in [OptConfig::adam(0.1), OptConfig::rmsprop(0.1)] {
            let mut p = scalar(0.7);
            let mut opt = OptState::new(cfg, &p);
            opt.step(&mut p, &[0.0, 0.0]).unwrap();
            assert_eq!(p.values(), &[0.7, 0.0]);
            assert_eq!(opt.steps(), 1);
        }
    }

    #[test]
    fn adam_first_step_hand_computed() {
        // m = 0.1 g, v = 0.001 g^2; bias correction restores g and g^2,
        // so the step is lr * g / (|g| + eps).
        let g = 0.3;
        let lr = 0.01;
        let mut p = scalar(1.0);
        let mut opt = OptState::new(OptConfig::adam(lr), &p);
        opt.step(&mut p, &[g, -g]).unwrap();
        let expected = 1.0 - lr * g / (g + 1e-8);
        assert!((p.values()[0] - expected).abs() < 1e-15);
        assert!((p.values()[1] - (lr * g / (g + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn decoupled_weight_decay_shrinks() {
        let mut p = scalar(2.0);
        let mut opt = OptState::new(OptConfig::adam(0.1).with_weight_decay(0.01), &p);
        opt.step(&mut p, &[0.0, 0.0]).unwrap();
        assert!((p.values()[0] - 2.0 * (1.0 - 0.1 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_names_layer() {
        let mut p = scalar(1.0);
        let mut opt = OptState::new(OptConfig::adam(0.1), &p);
        let err = opt.step(&mut p, &[0.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("output head 0 bias"), "{err}");
    }
}
