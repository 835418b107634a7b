//! Test oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use coarse_entropy::coarse::ControlFunction;
use coarse_entropy::maps::{MapDescriptor, MapKind};
use coarse_entropy::orbits::PseudoOrbit;
use coarse_entropy::spaces::within;
use coarse_entropy::{Point, SpaceDescriptor};
use rand::Rng;

/// `A x + b` evaluated directly from the matrix, without the library.
#[derive(Clone, Debug)]
pub struct Affine {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl Affine {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().zip(&self.offset).map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b).collect()
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn descriptor(&self) -> MapDescriptor {
        let kind = MapKind::Linear { matrix: self.matrix.clone(), offset: Some(self.offset.clone()) };
        MapDescriptor::new(kind, SpaceDescriptor::euclidean(self.dim())).unwrap()
    }

    /// Frobenius norm: an upper bound for the operator norm.
    pub fn lipschitz(&self) -> f64 {
        self.matrix.iter().flatten().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn control(&self) -> ControlFunction {
        ControlFunction::affine(self.lipschitz(), 0.0)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Grid points `spacing * Z^q` within `delta` of `c`, by scanning the
/// bounding box of integer indices.
fn grid_ball(c: &[f64], delta: f64, spacing: f64) -> Vec<Vec<f64>> {
    let ranges: Vec<(i64, i64)> =
        c.iter().map(|v| (((v - delta) / spacing).floor() as i64 - 1, ((v + delta) / spacing).ceil() as i64 + 1)).collect();
    let mut out = Vec::new();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * spacing).collect();
        if within(dist(&p, c), delta) {
            out.push(p);
        }
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] <= ranges[axis].1 {
                break;
            }
            idx[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}

/// Every grid `delta`-pseudoorbit of length `n` from `x0`, by plain
/// recursion over [`grid_ball`].
pub fn brute_force_orbits(f: &Affine, x0: &[f64], n: usize, delta: f64, spacing: f64) -> Vec<Vec<Vec<f64>>> {
    fn extend(f: &Affine, path: &mut Vec<Vec<f64>>, n: usize, delta: f64, spacing: f64, out: &mut Vec<Vec<Vec<f64>>>) {
        if path.len() == n + 1 {
            out.push(path.clone());
            return;
        }
        for y in grid_ball(&f.apply(path.last().unwrap()), delta, spacing) {
            path.push(y);
            extend(f, path, n, delta, spacing, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    extend(f, &mut vec![x0.to_vec()], n, delta, spacing, &mut out);
    out
}

/// Orbits as sorted coordinate lists, so two families compare as multisets.
pub fn canonical(orbits: &[PseudoOrbit]) -> Vec<Vec<Vec<f64>>> {
    sorted(orbits.iter().map(|o| o.points.iter().map(|p| p.coords.clone()).collect()).collect())
}

pub fn sorted(mut v: Vec<Vec<Vec<f64>>>) -> Vec<Vec<Vec<f64>>> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    v
}

/// A random affine map with small integer entries and a grid base point.
pub fn random_affine<R: Rng>(rng: &mut R, dim: usize) -> (Affine, Vec<f64>) {
    let matrix = (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect()).collect();
    let offset = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
    let x0 = (0..dim).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
    (Affine { matrix, offset }, x0)
}

/// A random affine map with real entries and a `delta`-pseudoorbit of it
/// whose errors have norm at most `delta`.
pub fn random_controlled_orbit<R: Rng>(rng: &mut R) -> (Affine, PseudoOrbit) {
    let dim = rng.gen_range(1..=3);
    let matrix = (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
    let offset = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let f = Affine { matrix, offset };
    let delta = rng.gen_range(0.05..3.0);
    let len = rng.gen_range(1..=4) * rng.gen_range(1..=4);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let mut points = vec![Point::new(0, x.clone())];
    for _ in 0..len {
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dist(&dir, &vec![0.0; dim]).max(1e-12);
        let size = delta * rng.gen_range(0.0..=1.0);
        x = f.apply(&x).iter().zip(&dir).map(|(v, d)| v + d / norm * size).collect();
        points.push(Point::new(0, x.clone()));
    }
    (f, PseudoOrbit::new(points, delta))
}
