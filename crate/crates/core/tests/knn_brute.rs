use amcontrast_core::knn::{partition, partition_all, Neighbor, NeighborIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ]
        })
        .collect()
}

fn d2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Full scan: anchor first, the rest by (squared distance, index).
fn brute(pos: &[[f64; 3]], anchor: usize, k: usize) -> Vec<(usize, f64)> {
    let mut rest: Vec<(usize, f64)> = (0..pos.len())
        .filter(|&j| j != anchor)
        .map(|j| (j, d2(&pos[anchor], &pos[j])))
        .collect();
    rest.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = vec![(anchor, 0.0)];
    out.extend(rest.into_iter().take(k - 1));
    out
}

fn pairs(nb: &[Neighbor]) -> Vec<(usize, f64)> {
    nb.iter().map(|n| (n.index, n.dist2)).collect()
}

#[test]
fn matches_full_scan_on_random_clouds() {
    for (n, seed) in [(1000, 1), (2000, 2), (37, 3)] {
        let pos = random_points(n, seed);
        let index = NeighborIndex::build(&pos).unwrap();
        for k in [1, 8, 24] {
            for a in 0..n {
                assert_eq!(
                    pairs(&index.knn(a, k).unwrap()),
                    brute(&pos, a, k),
                    "n={n} k={k} a={a}"
                );
            }
        }
    }
}

#[test]
fn matches_full_scan_on_lattice_ties() {
    let pos: Vec<[f64; 3]> = (0..400)
        .map(|i| [(i % 20) as f64, (i / 20) as f64, 0.0])
        .collect();
    let index = NeighborIndex::build(&pos).unwrap();
    for a in 0..pos.len() {
        assert_eq!(pairs(&index.knn(a, 24).unwrap()), brute(&pos, a, 24));
    }
}

#[test]
fn hand_sums() {
    let pos = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 2.0, 0.0],
        [0.0, -2.0, 0.0],
    ];
    let index = NeighborIndex::build(&pos).unwrap();
    let labels = [0, 0, 0, 1, 1];
    let part = partition(&index.knn(0, 5).unwrap(), &labels, 0);
    assert_eq!(part.intra.len(), 3);
    assert_eq!(part.d_plus, 2.0);
    assert_eq!(part.inter.len(), 2);
    assert_eq!(part.d_minus, 8.0);
}

fn cloud_strategy() -> impl Strategy<Value = (Vec<[f64; 3]>, Vec<usize>)> {
    (5usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::array::uniform3(-10.0f64..10.0), n),
            prop::collection::vec(0usize..3, n),
        )
    })
}

proptest! {
    #[test]
    fn partition_conserves_counts((pos, labels) in cloud_strategy(), k in 1usize..30) {
        let k = k.min(pos.len());
        let index = NeighborIndex::build(&pos).unwrap();
        for part in partition_all(&index, &labels, k).unwrap() {
            prop_assert_eq!(part.k(), k);
            prop_assert!(part.intra.contains(&part.anchor));
            let total: f64 = index.knn(part.anchor, k).unwrap().iter().map(|n| n.dist2).sum();
            let sum = part.d_plus + part.d_minus;
            prop_assert!((sum - total).abs() <= 1e-12 * total.max(1.0));
        }
    }

    #[test]
    fn permutation_keeps_partition_stats(
        (pos, labels) in cloud_strategy(),
        k in 1usize..30,
        seed in any::<u64>(),
    ) {
        let n = pos.len();
        let k = k.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let pos2: Vec<[f64; 3]> = perm.iter().map(|&i| pos[i]).collect();
        let labels2: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let a = partition_all(&NeighborIndex::build(&pos).unwrap(), &labels, k).unwrap();
        let b = partition_all(&NeighborIndex::build(&pos2).unwrap(), &labels2, k).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            let (p, q) = (&a[old], &b[new]);
            // Index ties may pick different equidistant points, which leaves
            // the distance multiset intact but can swap labels; random reals
            // make such ties vanishingly unlikely.
            prop_assert_eq!(p.intra.len(), q.intra.len());
            prop_assert_eq!(p.inter.len(), q.inter.len());
            prop_assert!((p.d_plus - q.d_plus).abs() <= 1e-12 * p.d_plus.max(1.0));
            prop_assert!((p.d_minus - q.d_minus).abs() <= 1e-12 * p.d_minus.max(1.0));
        }
    }
}
