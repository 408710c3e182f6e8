use super::net::NetParams;
use crate::error::{Error, Result};

/// A scalar loss over network outputs together with its analytic gradient.
pub trait ScalarLoss {
    fn value(&self, outputs: &[Vec<f64>]) -> f64;
    fn gradient(&self, outputs: &[Vec<f64>]) -> Vec<Vec<f64>>;
}

/// `sum_h sum_k c_hk y_hk`.
#[derive(Debug, Clone)]
pub struct LinearLoss(pub Vec<Vec<f64>>);

impl ScalarLoss for LinearLoss {
    fn value(&self, outputs: &[Vec<f64>]) -> f64 {
        outputs
            .iter()
            .zip(&self.0)
            .flat_map(|(y, c)| y.iter().zip(c).map(|(y, c)| y * c))
            .sum()
    }

    fn gradient(&self, _outputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.0.clone()
    }
}

/// `1/2 |y - t|^2` summed over heads.
#[derive(Debug, Clone)]
pub struct QuadraticLoss(pub Vec<Vec<f64>>);

impl ScalarLoss for QuadraticLoss {
    fn value(&self, outputs: &[Vec<f64>]) -> f64 {
        outputs
            .iter()
            .zip(&self.0)
            .flat_map(|(y, t)| y.iter().zip(t).map(|(y, t)| 0.5 * (y - t) * (y - t)))
            .sum()
    }

    fn gradient(&self, outputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        outputs
            .iter()
            .zip(&self.0)
            .map(|(y, t)| y.iter().zip(t).map(|(y, t)| y - t).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantLoss(pub f64);

impl ScalarLoss for ConstantLoss {
    fn value(&self, _outputs: &[Vec<f64>]) -> f64 {
        self.0
    }

    fn gradient(&self, outputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        outputs.iter().map(|y| vec![0.0; y.len()]).collect()
    }
}

pub const FD_STEP: f64 = 1e-5;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Largest relative disagreement between backpropagated gradients and central
/// finite differences (step [`FD_STEP`]) over every parameter and every input.
pub fn grad_check(params: &NetParams, input: &[f64], loss: &dyn ScalarLoss) -> Result<f64> {
    let eval = |p: &NetParams, x: &[f64]| -> Result<f64> {
        let (out, _) = p.forward(x)?;
        let v = loss.value(&out);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("loss".into()))
        }
    };
    eval(params, input)?;
    let (out, cache) = params.forward(input)?;
    let analytic = params.backward(&cache, &loss.gradient(&out))?;

    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for i in 0..params.len() {
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + FD_STEP;
        let plus = eval(&probe, input)?;
        probe.values_mut()[i] = orig - FD_STEP;
        let minus = eval(&probe, input)?;
        probe.values_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic.params[i], numeric));
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let plus = eval(params, &x)?;
        x[i] = orig - FD_STEP;
        let minus = eval(params, &x)?;
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic.input[i], numeric));
    }
    Ok(worst)
}
