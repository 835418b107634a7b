//! First-fit greedy packing and covering.
//!
//! Both scans keep an item iff it is at distance `>= R` from every item kept
//! so far. Read as a packing, the kept set is a maximal `R`-separated
//! subset; read as a cover, every scanned item lies at distance `< R` from
//! some kept item, so the kept set is `R`-spanning.

use std::collections::HashMap;

/// Indices kept by the first-fit `R`-separated scan.
pub fn greedy_separated<T>(items: &[T], r: f64, dist: impl Fn(&T, &T) -> f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, x) in items.iter().enumerate() {
        if kept.iter().all(|&k| dist(&items[k], x) >= r) {
            kept.push(i);
        }
    }
    kept
}

/// Indices kept by the first-fit `R`-spanning scan: an item is kept iff no
/// kept item is within distance `< R` of it.
pub fn greedy_spanning<T>(items: &[T], r: f64, dist: impl Fn(&T, &T) -> f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, x) in items.iter().enumerate() {
        if !kept.iter().any(|&k| dist(&items[k], x) < r) {
            kept.push(i);
        }
    }
    kept
}

type KeyFn<T> = Box<dyn Fn(&T) -> Vec<f64> + Send + Sync>;

/// Streaming first-fit scan. Items whose `key` coordinates satisfy
/// `|key_i(a) - key_i(b)| <= d(a, b)` are bucketed in cells of side `R`, so
/// only the `3^q` neighbouring cells are checked. Without a key every kept
/// item is checked. Either way the kept set equals the plain scan's.
pub struct Packer<T, D> {
    r: f64,
    dist: D,
    key: Option<KeyFn<T>>,
    kept: Vec<T>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    offers: u64,
}

impl<T, D: Fn(&T, &T) -> f64> Packer<T, D> {
    pub fn new(r: f64, dist: D) -> Self {
        Packer { r, dist, key: None, kept: Vec::new(), buckets: HashMap::new(), offers: 0 }
    }

    pub fn with_key(mut self, key: impl Fn(&T) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.key = Some(Box::new(key));
        self
    }

    /// Offers the next item; returns whether it was kept.
    pub fn offer(&mut self, item: T) -> bool {
        self.offers += 1;
        let Some(key) = &self.key else {
            if self.kept.iter().all(|k| (self.dist)(k, &item) >= self.r) {
                self.kept.push(item);
                return true;
            }
            return false;
        };
        let cell: Vec<i64> = key(&item).iter().map(|c| (c / self.r).floor() as i64).collect();
        let mut probe = cell.clone();
        if !self.neighbours_clear(&cell, &mut probe, 0, &item) {
            return false;
        }
        self.buckets.entry(cell).or_default().push(self.kept.len());
        self.kept.push(item);
        true
    }

    fn neighbours_clear(&self, cell: &[i64], probe: &mut Vec<i64>, axis: usize, item: &T) -> bool {
        if axis == cell.len() {
            return match self.buckets.get(probe.as_slice()) {
                Some(ids) => ids.iter().all(|&k| (self.dist)(&self.kept[k], item) >= self.r),
                None => true,
            };
        }
        for off in -1..=1 {
            probe[axis] = cell[axis] + off;
            if !self.neighbours_clear(cell, probe, axis + 1, item) {
                return false;
            }
        }
        probe[axis] = cell[axis];
        true
    }

    pub fn count(&self) -> usize {
        self.kept.len()
    }

    /// Number of items offered so far.
    pub fn offered(&self) -> u64 {
        self.offers
    }

    pub fn into_kept(self) -> Vec<T> {
        self.kept
    }
}
