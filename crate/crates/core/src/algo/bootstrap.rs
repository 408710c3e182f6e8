use rand::Rng;

/// Head used for acting during one episode.
pub fn sample_head<R: Rng + ?Sized>(heads: usize, rng: &mut R) -> usize {
    if heads <= 1 {
        0
    } else {
        rng.random_range(0..heads)
    }
}

/// Independent Bernoulli(0.5) membership of each head, as a bit mask.
pub fn sample_head_mask<R: Rng + ?Sized>(heads: usize, rng: &mut R) -> u32 {
    if heads <= 1 {
        return 1;
    }
    (0..heads.min(32)).fold(0u32, |m, h| if rng.random::<bool>() { m | (1 << h) } else { m })
}
