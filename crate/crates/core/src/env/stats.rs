/// Streaming per-dimension mean and second central moment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub count: f64,
    pub mean: Vec<f64>,
    /// Sum of squared deviations from the mean.
    pub m2: Vec<f64>,
}

pub const NORMALIZE_CLIP: f64 = 5.0;
const MIN_STD: f64 = 1e-8;

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        RunningStats {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0.0 {
            return vec![1.0; self.dim()];
        }
        self.m2.iter().map(|m| (m / self.count).max(0.0)).collect()
    }

    pub fn update(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1.0;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *mean;
            *mean += delta / self.count;
            *m2 += delta * (v - *mean);
        }
    }

    /// `(x - mean) / max(std, 1e-8)` clipped to `[-5, 5]`.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.normalize_in_place(&mut out);
        out
    }

    pub fn normalize_in_place(&self, x: &mut [f64]) {
        if self.count == 0.0 {
            for v in x.iter_mut() {
                *v = v.clamp(-NORMALIZE_CLIP, NORMALIZE_CLIP);
            }
            return;
        }
        for ((v, mean), m2) in x.iter_mut().zip(&self.mean).zip(&self.m2) {
            let std = (m2 / self.count).max(0.0).sqrt().max(MIN_STD);
            *v = ((*v - mean) / std).clamp(-NORMALIZE_CLIP, NORMALIZE_CLIP);
        }
    }

    /// Pooled statistics of two disjoint samples (parallel variance update).
    pub fn merge(&self, other: &RunningStats) -> crate::Result<RunningStats> {
        if self.dim() != other.dim() {
            return Err(crate::Error::Shape(format!(
                "cannot merge statistics of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        if other.count == 0.0 {
            return Ok(self.clone());
        }
        if self.count == 0.0 {
            return Ok(other.clone());
        }
        let n = self.count + other.count;
        let mut out = RunningStats::new(self.dim());
        out.count = n;
        for i in 0..self.dim() {
            let delta = other.mean[i] - self.mean[i];
            out.mean[i] = (self.count * self.mean[i] + other.count * other.mean[i]) / n;
            out.m2[i] = self.m2[i] + other.m2[i] + delta * delta * self.count * other.count / n;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn batch(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = xs.len() as f64;
        let d = xs[0].len();
        let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let var = (0..d)
            .map(|j| xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n)
            .collect();
        (mean, var)
    }

    #[test]
    fn constant_stream_normalizes_to_zero() {
        let mut s = RunningStats::new(2);
        for _ in 0..50 {
            s.update(&[3.0, -1.0]);
        }
        assert_eq!(s.normalize(&[3.0, -1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn far_outlier_is_clipped() {
        let mut s = RunningStats::new(1);
        for i in 0..100 {
            s.update(&[if i % 2 == 0 { 1.0 } else { -1.0 }]);
        }
        assert_eq!(s.normalize(&[100.0]), vec![5.0]);
        assert_eq!(s.normalize(&[-100.0]), vec![-5.0]);
    }

    #[test]
    fn streaming_matches_batch() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..4).map(|_| rng.random_range(-3.0..7.0)).collect())
            .collect();
        let mut s = RunningStats::new(4);
        xs.iter().for_each(|x| s.update(x));
        let (mean, var) = batch(&xs);
        for j in 0..4 {
            assert!((s.mean[j] - mean[j]).abs() < 1e-9);
            assert!((s.variance()[j] - var[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn merge_matches_concatenation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<Vec<f64>> = (0..700)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..4.0)).collect())
            .collect();
        let mut a = RunningStats::new(3);
        let mut b = RunningStats::new(3);
        xs[..300].iter().for_each(|x| a.update(x));
        xs[300..].iter().for_each(|x| b.update(x));
        let ab = a.merge(&b).unwrap();
        let ba = b.merge(&a).unwrap();
        let (mean, var) = batch(&xs);
        for j in 0..3 {
            assert!((ab.mean[j] - ba.mean[j]).abs() < 1e-12);
            assert!((ab.mean[j] - mean[j]).abs() < 1e-9);
            assert!((ab.variance()[j] - var[j]).abs() < 1e-9);
        }
        assert_eq!(a.merge(&RunningStats::new(3)).unwrap(), a);
        assert!(a.merge(&RunningStats::new(2)).is_err());
    }
}
