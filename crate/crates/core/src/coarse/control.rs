//! Control functions: strictly increasing, continuous, unbounded `L`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A control function `L: [0, inf) -> [0, inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlFunction {
    /// `t -> slope * t + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `t -> scale * t^exponent + intercept`.
    PowerAffine { scale: f64, exponent: f64, intercept: f64 },
    /// Piecewise-linear through `knots` (first knot at `t = 0`), continued
    /// past the last knot with slope `tail_slope`.
    Table { knots: Vec<(f64, f64)>, tail_slope: f64 },
    /// `outer(inner(t))`.
    Composed { outer: Box<ControlFunction>, inner: Box<ControlFunction> },
    /// `max(a(t), b(t))`.
    Max { a: Box<ControlFunction>, b: Box<ControlFunction> },
}

impl ControlFunction {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        ControlFunction::Affine { slope, intercept }
    }

    pub fn identity() -> Self {
        ControlFunction::affine(1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ControlFunction::Affine { slope, intercept } => {
                if !(*slope > 0.0 && *intercept >= 0.0 && slope.is_finite() && intercept.is_finite()) {
                    return Err(invalid("affine control needs slope > 0 and intercept >= 0"));
                }
            }
            ControlFunction::PowerAffine { scale, exponent, intercept } => {
                if !(*scale > 0.0 && *exponent >= 1.0 && *intercept >= 0.0) {
                    return Err(invalid("power control needs scale > 0, exponent >= 1, intercept >= 0"));
                }
            }
            ControlFunction::Table { knots, tail_slope } => {
                if knots.is_empty() || knots[0].0 != 0.0 || knots[0].1 < 0.0 {
                    return Err(invalid("table control must start at t = 0 with L(0) >= 0"));
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return Err(invalid("table control knots must be strictly increasing"));
                }
                if !(*tail_slope > 0.0) {
                    return Err(invalid("table control needs a positive tail slope"));
                }
            }
            ControlFunction::Composed { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
            }
            ControlFunction::Max { a, b } => {
                a.validate()?;
                b.validate()?;
            }
        }
        Ok(())
    }

    /// `L(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ControlFunction::Affine { slope, intercept } => slope * t + intercept,
            ControlFunction::PowerAffine { scale, exponent, intercept } => scale * t.powf(*exponent) + intercept,
            ControlFunction::Table { knots, tail_slope } => {
                let i = knots.partition_point(|k| k.0 <= t);
                if i >= knots.len() {
                    let (t0, l0) = knots[knots.len() - 1];
                    l0 + tail_slope * (t - t0)
                } else {
                    let (t0, l0) = knots[i - 1];
                    let (t1, l1) = knots[i];
                    l0 + (l1 - l0) * (t - t0) / (t1 - t0)
                }
            }
            ControlFunction::Composed { outer, inner } => outer.eval(inner.eval(t)),
            ControlFunction::Max { a, b } => a.eval(t).max(b.eval(t)),
        }
    }

    /// `L(0)`, the infimum of the range.
    pub fn floor(&self) -> f64 {
        self.eval(0.0)
    }

    /// `L^{-1}(s)`, or `None` when `s < L(0)`.
    pub fn inverse(&self, s: f64) -> Option<f64> {
        if s < self.floor() {
            return None;
        }
        match self {
            ControlFunction::Affine { slope, intercept } => Some((s - intercept) / slope),
            ControlFunction::PowerAffine { scale, exponent, intercept } => {
                Some(((s - intercept) / scale).powf(1.0 / exponent))
            }
            ControlFunction::Table { knots, tail_slope } => {
                let i = knots.partition_point(|k| k.1 <= s);
                if i >= knots.len() {
                    let (t0, l0) = knots[knots.len() - 1];
                    Some(t0 + (s - l0) / tail_slope)
                } else {
                    let (t0, l0) = knots[i - 1];
                    let (t1, l1) = knots[i];
                    Some(t0 + (t1 - t0) * (s - l0) / (l1 - l0))
                }
            }
            ControlFunction::Composed { outer, inner } => inner.inverse(outer.inverse(s)?),
            ControlFunction::Max { .. } => self.bisect_inverse(s),
        }
    }

    fn bisect_inverse(&self, s: f64) -> Option<f64> {
        let mut hi = 1.0;
        while self.eval(hi) < s {
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `outer o inner`, simplified when both are affine.
    pub fn compose(outer: &ControlFunction, inner: &ControlFunction) -> ControlFunction {
        match (outer, inner) {
            (
                ControlFunction::Affine { slope: a, intercept: b },
                ControlFunction::Affine { slope: c, intercept: d },
            ) => ControlFunction::affine(a * c, a * d + b),
            _ => ControlFunction::Composed { outer: Box::new(outer.clone()), inner: Box::new(inner.clone()) },
        }
    }

    /// `L^k(t)`.
    pub fn iterate(&self, k: u32, t: f64) -> f64 {
        (0..k).fold(t, |acc, _| self.eval(acc))
    }

    /// `delta + L(delta) + ... + L^{k-1}(delta)`: the tolerance of a
    /// `k`-subsampled `delta`-pseudoorbit.
    pub fn eta(&self, k: u32, delta: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = delta;
        for _ in 0..k {
            sum += term;
            term = self.eval(term);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples() -> Vec<ControlFunction> {
        let table = ControlFunction::Table { knots: vec![(0.0, 0.5), (1.0, 2.0), (4.0, 3.0)], tail_slope: 5.0 };
        vec![
            ControlFunction::affine(2.0, 1.0),
            ControlFunction::PowerAffine { scale: 0.5, exponent: 2.0, intercept: 1.0 },
            table.clone(),
            ControlFunction::compose(&table, &ControlFunction::affine(3.0, 0.0)),
            ControlFunction::Max { a: Box::new(ControlFunction::affine(1.0, 2.0)), b: Box::new(table) },
        ]
    }

    #[test]
    fn strictly_increasing_and_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in samples() {
            l.validate().unwrap();
            for _ in 0..10_000 {
                let a = rng.gen_range(0.0..50.0);
                let b = rng.gen_range(0.0..50.0);
                let (t1, t2) = if a < b { (a, b) } else { (b, a) };
                if t1 < t2 {
                    assert!(l.eval(t1) < l.eval(t2), "{l:?} at {t1} {t2}");
                }
                let s = l.eval(a);
                let back = l.inverse(s).unwrap();
                assert!((l.eval(back) - s).abs() <= 1e-9 * s.max(1.0), "{l:?} {s}");
            }
            assert!(l.inverse(l.floor() - 1.0).is_none());
        }
    }

    #[test]
    fn affine_composition_simplifies() {
        let l = ControlFunction::affine(2.0, 1.0);
        assert_eq!(ControlFunction::compose(&l, &l), ControlFunction::affine(4.0, 3.0));
    }

    #[test]
    fn eta_values() {
        assert_eq!(ControlFunction::affine(2.0, 0.0).eta(3, 1.0), 7.0);
        assert_eq!(ControlFunction::identity().eta(4, 2.0), 8.0);
        assert_eq!(ControlFunction::affine(5.0, 1.0).eta(1, 3.0), 3.0);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ControlFunction::affine(0.0, 1.0).validate().is_err());
        assert!(ControlFunction::affine(1.0, -1.0).validate().is_err());
        let t = ControlFunction::Table { knots: vec![(0.0, 1.0), (1.0, 1.0)], tail_slope: 1.0 };
        assert!(t.validate().is_err());
    }
}
