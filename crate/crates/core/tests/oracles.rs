mod common;

use coarse_entropy::maps::MapDescriptor;
use coarse_entropy::orbits::{enumerate, subsample, validate};
use coarse_entropy::{Budget, Point};
use common::{brute_force_orbits, canonical, random_affine, random_controlled_orbit, sorted, Affine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn enumerate_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for case in 0..12 {
        let dim = rng.gen_range(1..=2);
        let (f, x0) = random_affine(&mut rng, dim);
        let n = rng.gen_range(1..=3);
        let delta = [0.5, 1.0, 1.5][rng.gen_range(0..3)];
        let got = enumerate(&f.descriptor(), &Point::new(0, x0.clone()), n, delta, 1.0, &Budget::default()).unwrap();
        let want = sorted(brute_force_orbits(&f, &x0, n, delta, 1.0));
        assert_eq!(canonical(&got), want, "case {case}: {f:?} from {x0:?}");
    }
}

#[test]
fn brute_force_counts_small_cases() {
    // Doubling from 0 with delta 1: three choices per step.
    let f = Affine { matrix: vec![vec![2.0]], offset: vec![0.0] };
    assert_eq!(brute_force_orbits(&f, &[0.0], 3, 1.0, 1.0).len(), 27);
    // Identity on the plane with delta 1: five grid points per step.
    let id = Affine { matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]], offset: vec![0.0, 0.0] };
    assert_eq!(brute_force_orbits(&id, &[0.0, 0.0], 2, 1.0, 1.0).len(), 25);
}

#[test]
fn subsampled_orbits_are_valid_for_the_iterate() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..200 {
        let (f, orbit) = random_controlled_orbit(&mut rng);
        let map = f.descriptor();
        assert!(validate(&map, &orbit).valid, "case {case}: generator");
        let len = orbit.len();
        for k in (1..=len).filter(|k| len % k == 0) {
            let sub = subsample(&orbit, k, &f.control()).unwrap();
            let fk = MapDescriptor::iterate(&map, k as u32).unwrap();
            assert!(validate(&fk, &sub).valid, "case {case}, k {k}");
        }
    }
}
