mod common;

use prlx::replay::{
    decode_snapshot, encode_snapshot, merge_snapshots, DoneKind, PrioritizedBuffer, RingBuffer, SumTree, Transition,
};
use prlx::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn tr(tag: f64) -> Transition {
    Transition::new(vec![tag, -tag], vec![tag], tag, vec![tag + 1.0, 0.0], DoneKind::None)
}

#[test]
fn priorities_one_and_three_are_drawn_one_to_three() {
    let mut buf = PrioritizedBuffer::new(2, 2, 1, 1.0);
    buf.push(&tr(0.0)).unwrap();
    buf.push(&tr(1.0)).unwrap();
    buf.set_priority(0, 1.0).unwrap();
    buf.set_priority(1, 3.0).unwrap();
    let mut rng = rng_from_seed(5);
    let mut counts = [0u64; 2];
    for _ in 0..100_000 {
        counts[buf.sample(1, 0.4, &mut rng).unwrap().indices[0]] += 1;
    }
    let ratio = counts[1] as f64 / counts[0] as f64;
    assert!((ratio / 3.0 - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn alpha_shapes_the_sampling_distribution() {
    let mut buf = PrioritizedBuffer::new(4, 2, 1, 0.6);
    for i in 0..4 {
        buf.push(&tr(i as f64)).unwrap();
        buf.set_priority(i, (i + 1) as f64).unwrap();
    }
    let z: f64 = (1..=4).map(|p| (p as f64).powf(0.6)).sum();
    for i in 0..4 {
        assert!((buf.probability(i) - ((i + 1) as f64).powf(0.6) / z).abs() < 1e-12);
    }
    let batch = buf.sample(64, 1.0, &mut rng_from_seed(1)).unwrap();
    assert!(batch.weights.iter().all(|w| *w > 0.0 && *w <= 1.0));
    assert!(batch.weights.iter().any(|w| *w == 1.0));
}

#[test]
fn sum_tree_root_tracks_brute_force() {
    let mut rng = rng_from_seed(9);
    let n = 1000;
    let mut tree = SumTree::new(n);
    let mut leaves = vec![0.0f64; n];
    for _ in 0..10_000 {
        let i = rng.random_range(0..n);
        let v = rng.random_range(0.0..10.0);
        tree.set(i, v);
        leaves[i] = v;
    }
    let brute: f64 = leaves.iter().sum();
    assert!((tree.total() - brute).abs() <= 1e-9 * brute);
    assert_eq!(tree.max_inconsistency(), 0.0);
    for (i, v) in leaves.iter().enumerate() {
        assert_eq!(tree.get(i), *v);
    }
}

#[test]
fn uniform_sampling_passes_chi_square() {
    let mut buf = RingBuffer::new(20, 2, 1);
    for i in 0..20 {
        buf.push(&tr(i as f64)).unwrap();
    }
    let n = 40_000;
    let (_, idx) = buf.sample_uniform(n, &mut rng_from_seed(4)).unwrap();
    let mut obs = vec![0.0; 20];
    idx.iter().for_each(|&i| obs[i] += 1.0);
    let exp = vec![n as f64 / 20.0; 20];
    assert!(common::chi_square(&obs, &exp) < common::chi_square_critical(19, 0.01));
}

#[test]
fn td_errors_become_priorities() {
    let mut buf = PrioritizedBuffer::new(3, 2, 1, 1.0).with_eps(0.01);
    for i in 0..3 {
        buf.push(&tr(i as f64)).unwrap();
    }
    buf.update_priorities(&[0, 2], &[-0.5, 2.0]).unwrap();
    assert_eq!(buf.ring().get(0).unwrap().priority, 0.51);
    assert_eq!(buf.ring().get(2).unwrap().priority, 2.01);
    assert!(buf.update_priorities(&[0], &[f64::NAN]).is_err());
    assert!(buf.update_priorities(&[7], &[1.0]).is_err());
    // New entries get the largest priority seen so far.
    let i = buf.push(&tr(9.0)).unwrap();
    assert_eq!(buf.ring().get(i).unwrap().priority, 2.01);
}

#[test]
fn empty_buffers_refuse_to_sample() {
    let mut rng = rng_from_seed(0);
    assert!(RingBuffer::new(4, 2, 1).sample_uniform(1, &mut rng).is_err());
    assert!(PrioritizedBuffer::new(4, 2, 1, 0.6).sample(1, 0.4, &mut rng).is_err());
}

proptest! {
    #[test]
    fn ring_keeps_the_newest_capacity_items(cap in 1usize..16, n in 0usize..60) {
        let mut buf = RingBuffer::new(cap, 2, 1);
        for i in 0..n {
            prop_assert_eq!(buf.push(&tr(i as f64)).unwrap(), i % cap);
        }
        prop_assert_eq!(buf.len(), n.min(cap));
        prop_assert_eq!(buf.cursor(), n % cap);
        let kept: Vec<f64> = buf.chronological().map(|i| buf.get(i).unwrap().reward).collect();
        let want: Vec<f64> = (n.saturating_sub(cap)..n).map(|i| i as f64).collect();
        prop_assert_eq!(kept, want);
    }

    #[test]
    fn snapshots_round_trip(cap in 1usize..16, n in 0usize..40) {
        let mut buf = RingBuffer::new(cap, 2, 1);
        for i in 0..n {
            let done = if i % 3 == 0 { DoneKind::Fall } else { DoneKind::TimeLimit };
            buf.push(&Transition { done, ..tr(i as f64) }.with_head_mask(i as u32)).unwrap();
        }
        let snap = decode_snapshot(&encode_snapshot(&buf)).unwrap();
        prop_assert_eq!(snap.transitions.len(), buf.len());
        let rebuilt = merge_snapshots(&[snap], cap).unwrap();
        prop_assert_eq!(encode_snapshot(&rebuilt), encode_snapshot(&buf));
    }

    #[test]
    fn sum_tree_find_respects_mass(values in prop::collection::vec(0.0f64..5.0, 1..40), u in 0.0f64..1.0) {
        let mut tree = SumTree::new(values.len());
        for (i, v) in values.iter().enumerate() {
            tree.set(i, *v);
        }
        prop_assume!(tree.total() > 0.0);
        let mass = u * tree.total();
        let i = tree.find(mass);
        prop_assert!(values[i] > 0.0);
        let before: f64 = values[..i].iter().sum();
        prop_assert!(before <= mass + 1e-9 && mass <= before + values[i] + 1e-9);
    }
}
