use crate::error::{Error, Result};

/// Elementwise nonlinearity applied after a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
    Selu,
    /// `1 / (1 + exp(-10 x))`, a steepened logistic mapping onto `(0, 1)`.
    Logistic10,
    /// Standard logistic `1 / (1 + exp(-x))`.
    Sigmoid,
}

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
                }
            }
            Activation::Logistic10 => logistic(10.0 * x),
            Activation::Sigmoid => logistic(x),
        }
    }

    /// Derivative given the pre-activation `x` and the already computed output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    y + SELU_LAMBDA * SELU_ALPHA
                }
            }
            Activation::Logistic10 => 10.0 * y * (1.0 - y),
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Selu => 3,
            Activation::Logistic10 => 4,
            Activation::Sigmoid => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Linear,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Selu,
            4 => Activation::Logistic10,
            5 => Activation::Sigmoid,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Logistic10 => "logistic10",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Activation::Linear,
            Activation::Tanh,
            Activation::Relu,
            Activation::Selu,
            Activation::Logistic10,
            Activation::Sigmoid,
        ]
        .into_iter()
        .find(|a| a.name() == name)
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Shape of a dense network.
///
/// `layer_widths` lists the input width, every hidden width and the output
/// width, so a network with `L` dense layers has `L + 1` widths. Every layer
/// except the last is a hidden layer with its own layer-norm and residual
/// flag. The last layer is replicated `output_heads` times on a shared trunk.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArchDescriptor {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub output_activation: Activation,
    pub layer_norm: Vec<bool>,
    pub residual: Vec<bool>,
    pub output_heads: usize,
}

impl ArchDescriptor {
    /// Plain MLP with `hidden` widths, no normalization, no shortcuts, one head.
    pub fn mlp(input: usize, hidden: &[usize], output: usize, activation: Activation) -> Self {
        let mut layer_widths = Vec::with_capacity(hidden.len() + 2);
        layer_widths.push(input);
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(output);
        ArchDescriptor {
            layer_widths,
            activation,
            output_activation: Activation::Linear,
            layer_norm: vec![false; hidden.len()],
            residual: vec![false; hidden.len()],
            output_heads: 1,
        }
    }

    pub fn with_output_activation(mut self, activation: Activation) -> Self {
        self.output_activation = activation;
        self
    }

    pub fn with_layer_norm(mut self, on: bool) -> Self {
        self.layer_norm = vec![on; self.hidden_layers()];
        self
    }

    /// Enables shortcuts on every hidden layer whose input and output widths match.
    pub fn with_residual_where_possible(mut self) -> Self {
        self.residual = (0..self.hidden_layers())
            .map(|l| self.layer_widths[l] == self.layer_widths[l + 1])
            .collect();
        self
    }

    pub fn with_heads(mut self, heads: usize) -> Self {
        self.output_heads = heads;
        self
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated arch has widths")
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::Shape("architecture needs at least one layer".into()));
        }
        if self.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        if self.output_heads == 0 {
            return Err(Error::Shape("at least one output head required".into()));
        }
        let hidden = self.hidden_layers();
        if self.layer_norm.len() != hidden || self.residual.len() != hidden {
            return Err(Error::Shape(format!(
                "expected {hidden} layer-norm and residual flags"
            )));
        }
        for (l, &res) in self.residual.iter().enumerate() {
            if res && self.layer_widths[l] != self.layer_widths[l + 1] {
                return Err(Error::Shape(format!(
                    "residual on hidden layer {l} requires equal widths, got {} -> {}",
                    self.layer_widths[l],
                    self.layer_widths[l + 1]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic10_symmetry() {
        let a = Activation::Logistic10;
        assert_eq!(a.apply(0.0), 0.5);
        for x in [0.37, 1.0, 3.3, 1e-3] {
            assert!((a.apply(x) + a.apply(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_requires_matching_widths() {
        let mut arch = ArchDescriptor::mlp(3, &[4], 1, Activation::Tanh);
        arch.residual = vec![true];
        assert!(arch.validate().is_err());
        let arch = ArchDescriptor::mlp(4, &[4, 3], 1, Activation::Tanh).with_residual_where_possible();
        assert_eq!(arch.residual, vec![true, false]);
        arch.validate().unwrap();
    }

    #[test]
    fn zero_heads_rejected() {
        let arch = ArchDescriptor::mlp(2, &[], 2, Activation::Linear).with_heads(0);
        assert!(arch.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for tag in 0..6 {
            let a = Activation::from_tag(tag).unwrap();
            assert_eq!(Activation::from_name(a.name()), Some(a));
        }
    }
}
