/// Midpoint quantile fractions `tau_i = (2i - 1) / 2N`, `i = 1..N`.
pub fn quantile_midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|i| (2 * i + 1) as f64 / (2 * n) as f64).collect()
}

fn huber(u: f64, kappa: f64) -> (f64, f64) {
    if u.abs() <= kappa {
        (0.5 * u * u, u)
    } else {
        (kappa * (u.abs() - 0.5 * kappa), kappa * u.signum())
    }
}

/// Quantile Huber loss of predicted locations `pred` (N) against target
/// samples (M), and its gradient with respect to `pred`:
///
/// `(1/M) sum_ij |tau_i - 1{u_ij < 0}| L_kappa(u_ij) / kappa`, `u_ij = t_j - z_i`.
pub fn quantile_huber_loss(pred: &[f64], targets: &[f64], kappa: f64) -> (f64, Vec<f64>) {
    let taus = quantile_midpoints(pred.len());
    let m = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for ((z, tau), g) in pred.iter().zip(&taus).zip(&mut grad) {
        for t in targets {
            let u = t - z;
            let weight = (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs();
            let (l, dl) = huber(u, kappa);
            loss += weight * l / kappa;
            *g -= weight * dl / kappa;
        }
    }
    for g in &mut grad {
        *g /= m;
    }
    (loss / m, grad)
}
