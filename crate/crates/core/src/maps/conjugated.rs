//! The map `g = phi o f o phi^{-1}`, with `f(x, y) = (2x, y)`
//! on the half-plane `y >= 0`.
//!
//! `phi` squeezes the strip `|x| <= e^y` onto `|x| <= 1` and translates the
//! two outer parts, so `g` is a coarse conjugate of the doubling map whose
//! pseudoorbits can climb in `y` and gain a factor `e^delta` per step.

/// `phi(x, y)`.
pub fn phi(x: f64, y: f64) -> (f64, f64) {
    let e = y.exp();
    if x.abs() <= e {
        (x / e, y)
    } else if x > e {
        (x - e + 1.0, y)
    } else {
        (x + e - 1.0, y)
    }
}

/// `phi^{-1}(x, y)`, forced piecewise by the formula for `phi`.
pub fn phi_inv(x: f64, y: f64) -> (f64, f64) {
    let e = y.exp();
    if x.abs() <= 1.0 {
        (x * e, y)
    } else if x > 1.0 {
        (x + e - 1.0, y)
    } else {
        (x - e + 1.0, y)
    }
}

/// `g(x, y)` in closed form.
///
/// For `|x| <= 1/2` the doubled point stays in the squeezed strip; for
/// `1/2 < |x| <= 1` it leaves the strip; for `|x| > 1` both ends lie in the
/// translated parts.
pub fn g(x: f64, y: f64) -> (f64, f64) {
    let em1 = y.exp_m1();
    let a = x.abs();
    let gx = if a <= 0.5 {
        2.0 * x
    } else if a <= 1.0 {
        x.signum() * (2.0 * a * (em1 + 1.0) - em1)
    } else {
        x.signum() * (2.0 * a + em1)
    };
    (gx, y)
}

/// `g^{-1}(x, y)`.
pub fn g_inv(x: f64, y: f64) -> (f64, f64) {
    let em1 = y.exp_m1();
    let a = x.abs();
    let gx = if a <= 1.0 {
        x / 2.0
    } else if a <= em1 + 2.0 {
        x.signum() * (a + em1) / (2.0 * (em1 + 1.0))
    } else {
        x.signum() * (a - em1) / 2.0
    };
    (gx, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn closed_form_equals_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let y: f64 = rng.gen_range(0.0..=30.0);
            let bound = y.exp() + 100.0;
            let x = rng.gen_range(-bound..=bound);
            let (u, v) = phi_inv(x, y);
            let (u, v) = phi(2.0 * u, v);
            let (gx, gy) = g(x, y);
            assert!(close(gx, u), "x={x} y={y}: {gx} vs {u}");
            assert_eq!(gy, v);
        }
    }

    #[test]
    fn phi_inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let y: f64 = rng.gen_range(0.0..=20.0);
            let x = rng.gen_range(-1e3..=1e3);
            let (a, b) = phi_inv(x, y);
            let (c, d) = phi(a, b);
            // The translated branches cancel terms of size e^y.
            assert!((c - x).abs() <= 1e-12 * y.exp().max(x.abs()), "{x} {y}");
            assert_eq!(d, y);
        }
    }

    #[test]
    fn g_inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let y: f64 = rng.gen_range(0.0..=20.0);
            let x = rng.gen_range(-1e4..=1e4);
            let (a, b) = g(x, y);
            let (c, _) = g_inv(a, b);
            assert!((c - x).abs() <= 1e-12 * y.exp().max(x.abs()), "{x} {y}");
        }
    }

    #[test]
    fn unit_segment_image() {
        // g([-1, 1] x {t}) = [-e^t - 1, e^t + 1]
        for t in [0.0, 1.0, 2.5, 7.0] {
            let e = f64::exp(t);
            assert!(close(g(1.0, t).0, e + 1.0));
            assert!(close(g(-1.0, t).0, -e - 1.0));
        }
    }
}
