//! Reference implementations for the integration tests and the acceptance
//! runner. Nothing here calls into the formulas it is used to check.

#![allow(dead_code)]

use prlx::nn::{Activation, ArchDescriptor, NetParams};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const FD_H: f64 = 1e-5;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// `sum_h c_h . f_h(x)` evaluated directly from the forward pass.
fn weighted_output(net: &NetParams, x: &[f64], c: &[Vec<f64>]) -> f64 {
    let (out, _) = net.forward(x).unwrap();
    out.iter().zip(c).flat_map(|(y, c)| y.iter().zip(c).map(|(a, b)| a * b)).sum()
}

/// Central differences of `sum_h c_h . f_h(x)` with respect to every
/// parameter, then every input.
pub fn fd_gradient(net: &NetParams, x: &[f64], c: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let mut p = net.clone();
    let mut dp = Vec::with_capacity(net.len());
    for i in 0..net.len() {
        let v = p.values()[i];
        p.values_mut()[i] = v + FD_H;
        let up = weighted_output(&p, x, c);
        p.values_mut()[i] = v - FD_H;
        let down = weighted_output(&p, x, c);
        p.values_mut()[i] = v;
        dp.push((up - down) / (2.0 * FD_H));
    }
    let mut xs = x.to_vec();
    let mut dx = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let v = xs[i];
        xs[i] = v + FD_H;
        let up = weighted_output(net, &xs, c);
        xs[i] = v - FD_H;
        let down = weighted_output(net, &xs, c);
        xs[i] = v;
        dx.push((up - down) / (2.0 * FD_H));
    }
    (dp, dx)
}

/// Worst relative disagreement between backpropagation and central differences.
pub fn gradient_error<R: Rng>(net: &NetParams, rng: &mut R) -> f64 {
    let arch = net.arch();
    let x: Vec<f64> = (0..arch.input_width()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<Vec<f64>> = (0..net.heads())
        .map(|_| (0..arch.output_width()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let (_, cache) = net.forward(&x).unwrap();
    let g = net.backward(&cache, &c).unwrap();
    let (dp, dx) = fd_gradient(net, &x, &c);
    g.params
        .iter()
        .zip(&dp)
        .chain(g.input.iter().zip(&dx))
        .map(|(a, b)| rel_err(*a, *b))
        .fold(0.0, f64::max)
}

/// One of the eight tanh/selu x layer-norm x residual combinations with random widths.
pub fn random_arch<R: Rng>(k: usize, rng: &mut R) -> ArchDescriptor {
    let act = if k % 2 == 0 { Activation::Tanh } else { Activation::Selu };
    let ln = (k / 2) % 2 == 1;
    let residual = (k / 4) % 2 == 1;
    let width = rng.random_range(3..7);
    let depth = rng.random_range(2..4);
    let input = if residual { width } else { rng.random_range(2..6) };
    let arch = ArchDescriptor::mlp(input, &vec![width; depth], rng.random_range(1..4), act)
        .with_layer_norm(ln)
        .with_heads(rng.random_range(1..3));
    if residual {
        arch.with_residual_where_possible()
    } else {
        arch
    }
}

// Reward formulas, written out independently.

pub fn round1(vx: f64) -> f64 {
    9.0 - (vx - 3.0) * (vx - 3.0)
}

pub fn round2(v: [f64; 2], w: [f64; 2], a: &[f64], b: f64) -> f64 {
    let mut effort = 0.0;
    for x in a {
        effort += x * x;
    }
    b - (v[0] - w[0]).powi(2) - (v[1] - w[1]).powi(2) - 0.001 * effort
}

pub fn rescale(r: f64) -> f64 {
    (r - 8.0) / 10.0
}

/// Determinant of the rows `a, b, c` by cofactor expansion.
pub fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

pub fn crossing(head: [f64; 3], pelvis: [f64; 3], l: [f64; 3], r: [f64; 3]) -> f64 {
    let sub = |p: [f64; 3]| [p[0] - pelvis[0], p[1] - pelvis[1], p[2] - pelvis[2]];
    let t = det3(sub(head), sub(l), sub(r));
    if t < 0.0 {
        10.0 * t
    } else {
        0.0
    }
}

pub fn scissors(l: [f64; 3], r: [f64; 3], th: f64) -> f64 {
    let left = l[0] * th.sin() + l[2] * th.cos();
    let right = -(r[0] * th.sin() + r[2] * th.cos());
    left.max(0.0) + right.max(0.0)
}

pub fn sideways(v: [f64; 2], th: f64) -> f64 {
    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
    1.0 - (v[0] * th.cos() - v[1] * th.sin()) / norm
}

pub fn inverse(v: [f64; 2], w: [f64; 2]) -> f64 {
    10.0 / (1.0 + (v[0] - w[0]).powi(2) + (v[1] - w[1]).powi(2))
}

pub fn relative(v: [f64; 2], w: [f64; 2]) -> f64 {
    1.0 - ((w[0] - v[0]).powi(2) + (w[1] - v[1]).powi(2)) / (w[0] * w[0] + w[1] * w[1])
}

pub fn clipped_high(r: f64) -> f64 {
    if r > 9.5 && r < 10.0 {
        2.0 * r - 19.0
    } else {
        -1.0
    }
}

pub fn exponential(v: [f64; 2], w: [f64; 2], literal: bool) -> f64 {
    let s = if literal { 1.0 } else { -1.0 };
    (s * (v[0] - w[0]).abs()).exp() + (s * (v[1] - w[1]).abs()).exp()
}

pub fn rukia(vp: [f64; 2], vh: [f64; 2], vt: [f64; 2], w: [f64; 2], knees: [f64; 2]) -> f64 {
    let mut speed = 0.0;
    for k in 0..2 {
        let t = w[k].abs().sqrt() - (vp[k] - w[k]).abs().sqrt();
        if t > 0.0 {
            speed += t;
        }
    }
    let n = w[0].hypot(w[1]);
    let mut straight = 0.0;
    for v in [vh, vt] {
        let c = (w[0] * v[1] - w[1] * v[0]) / n;
        straight += c * c;
    }
    let mut bend = 0.0;
    for th in knees {
        bend += th.clamp(-0.4, 0.0);
    }
    5.0 * speed + 4.0 * straight + 2.0 * bend
}

pub fn mattias(dev_sq: f64, pen: f64) -> f64 {
    let d = if 8.0 * dev_sq > 12.0 { 12.0 } else { 8.0 * dev_sq };
    let p = if pen > 9.0 { 9.0 } else { pen };
    10.0 - d - p
}

pub fn orientation(rot: [f64; 3], k: f64) -> f64 {
    k * rot.iter().map(|r| r * r).sum::<f64>()
}

pub fn knee_straight(th: f64, k: f64, off: f64) -> f64 {
    if th + off > 0.0 {
        k * (th + off)
    } else {
        0.0
    }
}

// Statistics.

/// One-sample Kolmogorov-Smirnov statistic against `U(lo, hi)`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Critical value of the KS statistic at the 1% level (Stephens' approximation).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let r = (n as f64).sqrt();
    1.628 / (r + 0.12 + 0.11 / r)
}

pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}

/// Chi-square goodness of fit of integer-valued counts against `pmf`, pooling
/// cells with expectation below 5 into their neighbours. Returns `(stat, df)`.
pub fn chi_square_discrete(values: &[u64], pmf: impl Fn(u64) -> f64) -> (f64, usize) {
    let n = values.len() as f64;
    let max = *values.iter().max().unwrap_or(&0) + 1;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=max {
        o += values.iter().filter(|&&v| v == k).count() as f64;
        e += if k == max { (n - cells.iter().map(|c| c.1).sum::<f64>() - e).max(0.0) } else { n * pmf(k) };
        if e >= 5.0 && k < max {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let (obs, exp): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
    (chi_square(&obs, &exp), obs.len() - 1)
}
