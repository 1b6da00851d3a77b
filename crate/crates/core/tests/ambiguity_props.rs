use amcontrast_core::ambiguity::{
    ambiguity_map, ambiguity_point, inverse_sigmoid, AmbiguityConfig,
};
use amcontrast_core::cloud::{generate_scene, PointCloud, SceneKind, SceneSpec};
use amcontrast_core::knn::{NeighborIndex, NeighborPartition};
use proptest::prelude::*;

/// Power series for exp, summed until terms vanish.
fn exp_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= x / k as f64;
        sum += term;
        if term.abs() < 1e-300 {
            break;
        }
    }
    sum
}

fn map_of(cloud: &PointCloud, k: usize) -> Vec<f64> {
    let index = NeighborIndex::build(cloud.positions()).unwrap();
    let cfg = AmbiguityConfig {
        k,
        ..Default::default()
    };
    ambiguity_map(cloud, &index, &cfg, 0).unwrap().values
}

#[test]
fn sigmoid_fixtures_against_series() {
    let want = 1.0 / (1.0 + exp_series(0.04 * (1.5 - 0.25)));
    assert!((inverse_sigmoid(1.5, 0.25, 0.04) - want).abs() < 1e-15);
    assert!((want - 0.487503).abs() < 1e-6);
    assert_eq!(inverse_sigmoid(3.7, 3.7, 0.04), 0.5);
}

#[test]
fn collinear_anchor_fixture() {
    let cloud = generate_scene(&SceneSpec::new(
        SceneKind::TwoPlane {
            rows: 1,
            boundary: Some(7.5),
        },
        16,
        0.0,
        0,
    ))
    .unwrap();
    let a = map_of(&cloud, 3);
    let want = 1.0 / (1.0 + exp_series(0.04 * (2.0 - 1.0)));
    assert!((a[7] - want).abs() < 1e-15);
    assert!((a[7] - 0.490001).abs() < 1e-6);
    assert_eq!(a[0], 0.0);
}

#[test]
fn noise_free_two_plane_band_is_the_mixed_neighbourhoods() {
    let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 512, 0.0, 0)).unwrap();
    let a = map_of(&cloud, 24);
    let pos = cloud.positions();
    for i in 0..cloud.len() {
        // Per-point scan: does any of the 24 nearest share another label?
        let mut d: Vec<(f64, usize)> = (0..cloud.len())
            .map(|j| {
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                (dx * dx + dy * dy, j)
            })
            .collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mixed = d[..24]
            .iter()
            .any(|&(_, j)| cloud.labels()[j] != cloud.labels()[i]);
        assert_eq!(a[i] > 0.0, mixed, "point {i}");
    }
}

#[test]
fn coincident_pair_is_fully_ambiguous() {
    let cloud = PointCloud::from_positions(vec![[1.0, 2.0, 3.0]; 2], vec![0, 1], 2).unwrap();
    assert_eq!(map_of(&cloud, 2), vec![1.0, 1.0]);
}

#[test]
fn single_class_is_unambiguous() {
    let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 256, 0.1, 4)).unwrap();
    let one = PointCloud::from_positions(cloud.positions().to_vec(), vec![0; 256], 1).unwrap();
    assert!(map_of(&one, 24).iter().all(|&a| a == 0.0));
}

fn part(intra: usize, inter: usize, d_plus: f64, d_minus: f64) -> NeighborPartition {
    NeighborPartition {
        anchor: 0,
        intra: (0..intra).collect(),
        inter: (intra..intra + inter).collect(),
        d_plus,
        d_minus,
    }
}

proptest! {
    #[test]
    fn generated_scenes_stay_in_unit_interval(
        kind in 0usize..3,
        n in 64usize..600,
        noise in 0.0f64..0.5,
        seed in any::<u64>(),
        k in 2usize..30,
    ) {
        let kind = [SceneKind::two_plane(), SceneKind::checkerboard(), SceneKind::clusters()][kind].clone();
        let cloud = generate_scene(&SceneSpec::new(kind, n, noise, seed)).unwrap();
        for a in map_of(&cloud, k) {
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn rigid_motion_leaves_map_unchanged(
        seed in any::<u64>(),
        angles in prop::array::uniform3(-3.2f64..3.2),
        shift in prop::array::uniform3(-100.0f64..100.0),
    ) {
        let cloud = generate_scene(&SceneSpec::new(SceneKind::checkerboard(), 400, 0.05, seed)).unwrap();
        let (sa, ca) = angles[0].sin_cos();
        let (sb, cb) = angles[1].sin_cos();
        let (sc, cc) = angles[2].sin_cos();
        let moved = cloud
            .map_positions(|p| {
                let p = [p[0], ca * p[1] - sa * p[2], sa * p[1] + ca * p[2]];
                let p = [cb * p[0] + sb * p[2], p[1], -sb * p[0] + cb * p[2]];
                let p = [cc * p[0] - sc * p[1], sc * p[0] + cc * p[1], p[2]];
                [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]]
            })
            .unwrap();
        for (a, b) in map_of(&cloud, 24).iter().zip(map_of(&moved, 24)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn middle_branch_monotone_in_inter_closeness(
        intra in 2usize..10,
        inter in 1usize..10,
        d_plus in 0.1f64..50.0,
        d_minus in 0.2f64..50.0,
    ) {
        let cfg = AmbiguityConfig { k: intra + inter, ..Default::default() };
        let near = ambiguity_point(&part(intra, inter, d_plus, d_minus / 2.0), &cfg);
        let far = ambiguity_point(&part(intra, inter, d_plus, d_minus), &cfg);
        // Halving d_minus doubles cc-.
        prop_assert!(near >= far);
        prop_assert!(near > 0.0 && near < 1.0);
    }
}
