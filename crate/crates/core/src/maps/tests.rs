use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::spaces::BaseSetSpec;

fn doubling() -> MapDescriptor {
    MapDescriptor::diagonal(&[2.0]).unwrap()
}

fn e2() -> MapDescriptor {
    MapDescriptor::new(MapKind::ChainLinear, SpaceDescriptor::Chain { blocks: ChainBlocks::Rectangles }).unwrap()
}

fn sample_maps() -> Vec<MapDescriptor> {
    let cone = SpaceDescriptor::cone(2, BaseSetSpec::CantorArc { levels: 3 });
    vec![
        doubling(),
        MapDescriptor::linear(vec![vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap(),
        MapDescriptor::identity(SpaceDescriptor::euclidean(2)),
        MapDescriptor::new(MapKind::Homothety { factor: 2.0 }, cone).unwrap(),
        e2(),
        MapDescriptor::new(MapKind::ChainLinear, SpaceDescriptor::Chain { blocks: ChainBlocks::SegmentsF }).unwrap(),
        MapDescriptor::new(MapKind::ConjugatedDoubling, SpaceDescriptor::Halfplane).unwrap(),
        MapDescriptor::new(MapKind::Power { exponent: 2.0 }, SpaceDescriptor::HalfLine { start: 2.0 }).unwrap(),
    ]
}

#[test]
fn apply_examples() {
    assert_eq!(doubling().apply(&Point::at(&[3.0])).unwrap(), Point::at(&[6.0]));
    assert_eq!(doubling().iterate_apply(3, &Point::at(&[1.0])).unwrap(), Point::at(&[8.0]));
    let id = MapDescriptor::identity(SpaceDescriptor::euclidean(2));
    let p = Point::at(&[1.5, -2.0]);
    assert_eq!(id.iterate_apply(7, &p).unwrap(), p);
}

#[test]
fn chain_maps_anchor_to_anchor() {
    let f = e2();
    for n in 0..20 {
        let c = f.domain.anchor(n).unwrap();
        assert_eq!(f.apply(&c).unwrap(), f.domain.anchor(n + 1).unwrap());
    }
}

#[test]
fn e2_square_stretches_one_direction() {
    let f = e2();
    let p = Point::new(0, vec![0.25, -0.5]);
    assert_eq!(f.iterate_apply(2, &p).unwrap(), Point::new(2, vec![0.25, -1.0]));
    let p = Point::new(1, vec![0.25, -0.5]);
    assert_eq!(f.iterate_apply(2, &p).unwrap(), Point::new(3, vec![0.5, -0.5]));
}

#[test]
fn conjugated_doubling_segment_image() {
    let g = MapDescriptor::new(MapKind::ConjugatedDoubling, SpaceDescriptor::Halfplane).unwrap();
    for t in [0.0, 1.0, 3.0] {
        let lo = g.apply(&Point::at(&[-1.0, t])).unwrap().coords[0];
        let hi = g.apply(&Point::at(&[1.0, t])).unwrap().coords[0];
        let e = f64::exp(t);
        assert!((lo + e + 1.0).abs() < 1e-12 && (hi - e - 1.0).abs() < 1e-12);
    }
}

#[test]
fn apply_rejects_non_members() {
    let f = MapDescriptor::new(MapKind::Power { exponent: 2.0 }, SpaceDescriptor::HalfLine { start: 2.0 }).unwrap();
    assert!(matches!(f.apply(&Point::at(&[1.0])), Err(Error::NotMember(_))));
    assert!(e2().apply(&Point::new(1, vec![3.0, 0.0])).is_err());
}

#[test]
fn constructors_validate() {
    assert!(MapDescriptor::new(MapKind::Power { exponent: 2.0 }, SpaceDescriptor::HalfLine { start: 1.0 }).is_err());
    assert!(MapDescriptor::new(MapKind::Homothety { factor: -1.0 }, SpaceDescriptor::euclidean(1)).is_err());
    assert!(MapDescriptor::new(
        MapKind::Linear { matrix: vec![vec![1.0, 2.0]], offset: None },
        SpaceDescriptor::euclidean(2)
    )
    .is_err());
    assert!(MapDescriptor::new(MapKind::ChainLinear, SpaceDescriptor::euclidean(1)).is_err());
}

#[test]
fn maps_preserve_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for f in sample_maps() {
        for _ in 0..2000 {
            let p = f.domain.sample_point(&mut rng, 8.0);
            let q = f.apply(&p).unwrap();
            assert!(f.codomain().contains(&q), "{f:?}: {p} -> {q}");
        }
    }
}

#[test]
fn iterate_equals_repeated_apply() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in sample_maps() {
        for k in 1..=3 {
            let fk = MapDescriptor::iterate(&f, k).unwrap();
            for _ in 0..1000 {
                let p = f.domain.sample_point(&mut rng, 4.0);
                let mut q = p.clone();
                for _ in 0..k {
                    q = f.apply(&q).unwrap();
                }
                assert_eq!(fk.apply(&p).unwrap(), q);
            }
        }
    }
}

#[test]
fn product_applies_componentwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = e2();
    let g = doubling();
    let fg = MapDescriptor::product(&f, &g).unwrap();
    for _ in 0..1000 {
        let p = f.domain.sample_point(&mut rng, 4.0);
        let q = g.domain.sample_point(&mut rng, 4.0);
        let image = fg.apply(&SpaceDescriptor::join(&p, &q)).unwrap();
        assert_eq!(image, SpaceDescriptor::join(&f.apply(&p).unwrap(), &g.apply(&q).unwrap()));
    }
}

#[test]
fn inverses_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f in sample_maps() {
        for _ in 0..500 {
            let p = f.domain.sample_point(&mut rng, 4.0);
            let q = f.apply(&p).unwrap();
            let back = f.inverse(&q).unwrap();
            let d = f.domain.distance(&back, &p).unwrap();
            assert!(d <= 1e-9 * p.coords.iter().fold(1.0f64, |m, c| m.max(c.abs())), "{f:?}: {p} -> {q} -> {back}");
        }
    }
    assert!(e2().inverse(&Point::new(0, vec![0.0, 0.0])).is_none());
}

/// Largest singular value by power iteration on `M^T M`.
fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let mtm = m.transpose() * m;
    let mut v = DVector::from_element(m.ncols(), 1.0);
    for _ in 0..500 {
        let w = &mtm * &v;
        v = &w / w.norm();
    }
    (&mtm * &v).norm().sqrt()
}

#[test]
fn operator_norm_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let q = rng.gen_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..q).map(|_| (0..q).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let f = MapDescriptor::linear(rows).unwrap();
        let norm = f.operator_norm().unwrap();
        let oracle = power_iteration_norm(&f.linear_part().unwrap());
        assert!((norm - oracle).abs() <= 1e-6 * norm.max(1.0), "{norm} vs {oracle}");
    }
}

#[test]
fn verify_control_examples() {
    let w = |l: ControlFunction| ControlWitness { control: Some(l), lipschitz: None };
    let r = verify_control(&doubling(), &w(ControlFunction::affine(2.0, 0.0)), 50.0, 2000, 1).unwrap();
    assert_eq!(r.violation_count, 0);
    assert!(r.max_ratio <= 1.0);

    let sq = MapDescriptor::new(MapKind::Power { exponent: 2.0 }, SpaceDescriptor::HalfLine { start: 2.0 }).unwrap();
    let r = verify_control(&sq, &w(ControlFunction::affine(2.0, 0.0)), 100.0, 2000, 1).unwrap();
    assert!(r.violation_count > 0);

    let id = MapDescriptor::identity(SpaceDescriptor::euclidean(3));
    let r = verify_control(&id, &w(ControlFunction::identity()), 10.0, 2000, 1).unwrap();
    assert_eq!(r.violation_count, 0);
}

#[test]
fn verify_control_is_deterministic() {
    let sq = MapDescriptor::new(MapKind::Power { exponent: 2.0 }, SpaceDescriptor::HalfLine { start: 2.0 }).unwrap();
    let w = ControlWitness { control: Some(ControlFunction::affine(30.0, 0.0)), lipschitz: None };
    let a = verify_control(&sq, &w, 100.0, 500, 9).unwrap();
    let b = verify_control(&sq, &w, 100.0, 500, 9).unwrap();
    assert_eq!(a.violation_count, b.violation_count);
    assert_eq!(a.max_ratio, b.max_ratio);
    assert_eq!(a.violations, b.violations);
}

#[test]
fn image_regions_contain_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let maps = vec![
        MapDescriptor::linear(vec![vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap(),
        MapDescriptor::new(MapKind::ConjugatedDoubling, SpaceDescriptor::Halfplane).unwrap(),
        MapDescriptor::identity(SpaceDescriptor::euclidean(2)),
    ];
    for f in maps {
        for steps in 0..4u32 {
            let center = f.domain.sample_point(&mut rng, 3.0);
            let region = f.image_region(&center, 1.5, steps, 0.5).unwrap();
            for _ in 0..500 {
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = rng.gen_range(0.0..=1.5);
                let y = Point::at(&[center.coords[0] + r * ang.cos(), center.coords[1] + r * ang.sin()]);
                if !f.domain.contains(&y) {
                    continue;
                }
                let mut z = y.clone();
                for _ in 0..steps {
                    z = f.apply(&z).unwrap();
                }
                let inside = match &region {
                    Region::Ball { center, radius } => f.domain.distance(&z, center).unwrap() <= radius + 1e-9,
                    Region::Ellipsoid { center, shape } => {
                        let v = DVector::from_iterator(2, z.coords.iter().zip(center).map(|(a, b)| a - b));
                        (shape * v).norm() <= 1.0 + 1e-9
                    }
                    Region::Box { lo, hi, .. } => {
                        z.coords.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| *c >= l - 1e-9 && *c <= h + 1e-9)
                    }
                };
                assert!(inside, "{f:?} steps {steps}: {y} -> {z}");
            }
        }
    }
}

#[test]
fn map_json_round_trips() {
    for f in sample_maps() {
        let s = serde_json::to_string(&f).unwrap();
        let back: MapDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f, "{s}");
    }
    let fk = MapDescriptor::iterate(&e2(), 2).unwrap();
    let s = serde_json::to_string(&fk).unwrap();
    assert_eq!(serde_json::from_str::<MapDescriptor>(&s).unwrap(), fk);
}
