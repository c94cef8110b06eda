//! Layer-2 limited processor-sharing allocation.

use serde::Serialize;

use crate::linalg::Vec2;

/// Fractions of the layer-2 server's unit speed given to each node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateVector(pub Vec2);

impl RateVector {
    pub fn total(&self) -> f64 {
        self.0[0] + self.0[1]
    }
}

impl std::ops::Index<usize> for RateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `R_i(q) = min(q_i, K_i) / sum_j min(q_j, K_j)` for `q_i != 0`, else 0.
///
/// The larger share is computed as a quotient and the smaller one as its
/// complement, which makes the two shares sum to exactly `1.0` in floating
/// point whenever `q != 0`.
pub fn allocate(q: Vec2, k: Vec2) -> RateVector {
    let m = [q[0].min(k[0]).max(0.0), q[1].min(k[1]).max(0.0)];
    match (m[0] > 0.0, m[1] > 0.0) {
        (false, false) => RateVector([0.0, 0.0]),
        (true, false) => RateVector([1.0, 0.0]),
        (false, true) => RateVector([0.0, 1.0]),
        (true, true) => {
            let total = m[0] + m[1];
            if m[0] >= m[1] {
                let r0 = m[0] / total;
                RateVector([r0, 1.0 - r0])
            } else {
                let r1 = m[1] / total;
                RateVector([1.0 - r1, r1])
            }
        }
    }
}

/// Allocation of the `n`-th network in the heavy-traffic sequence, with `K^n = n K`.
pub fn allocate_scaled(n: u32, q: Vec2, k: Vec2) -> RateVector {
    let n = f64::from(n);
    allocate(q, [n * k[0], n * k[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: RateVector, b: Vec2) -> bool {
        (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15
    }

    #[test]
    fn examples() {
        assert!(close(allocate([2.0, 3.0], [5.0, 5.0]), [0.4, 0.6]));
        assert_eq!(allocate([0.0, 7.0], [5.0, 5.0]).0, [0.0, 1.0]);
        assert!(close(allocate([10.0, 10.0], [1.0, 2.0]), [1.0 / 3.0, 2.0 / 3.0]));
        assert_eq!(allocate([0.0, 0.0], [1.0, 2.0]).0, [0.0, 0.0]);
    }

    #[test]
    fn scaled_examples() {
        assert!(close(allocate_scaled(10, [20.0, 30.0], [5.0, 5.0]), [0.4, 0.6]));
        let q = [3.0, 0.25];
        assert_eq!(allocate_scaled(1, q, [1.0, 2.0]), allocate(q, [1.0, 2.0]));
    }

    proptest! {
        #[test]
        fn simplex_exact(q0 in 0.0f64..20.0, q1 in 0.0f64..20.0, k0 in 0.1f64..10.0, k1 in 0.1f64..10.0) {
            let r = allocate([q0, q1], [k0, k1]);
            prop_assert!(r[0] >= 0.0 && r[1] >= 0.0);
            if q0 > 0.0 || q1 > 0.0 {
                prop_assert_eq!(r.total(), 1.0);
            }
            if q0 == 0.0 { prop_assert_eq!(r[0], 0.0); }
            if q1 == 0.0 { prop_assert_eq!(r[1], 0.0); }
        }

        #[test]
        fn scaling_identity(q0 in 0.0f64..50.0, q1 in 0.0f64..50.0, k0 in 0.1f64..10.0, k1 in 0.1f64..10.0) {
            let n = 7u32;
            let scaled = allocate_scaled(n, [q0, q1], [k0, k1]);
            let plain = allocate([q0 / 7.0, q1 / 7.0], [k0, k1]);
            prop_assert!((scaled[0] - plain[0]).abs() <= 1e-15);
            prop_assert!((scaled[1] - plain[1]).abs() <= 1e-15);
        }

        #[test]
        fn fairness_floor(qi in 0.01f64..1.0, qj in 0.0f64..20.0, dq in 0.0f64..5.0) {
            let k = [1.0, 3.0];
            let before = allocate([qi, qj], k);
            let after = allocate([qi, qj + dq], k);
            prop_assert!(after[0] <= before[0] + 1e-15);
        }

        #[test]
        fn lipschitz_away_from_origin(
            a0 in 0.5f64..10.0, a1 in 0.5f64..10.0,
            d0 in -0.4f64..0.4, d1 in -0.4f64..0.4,
        ) {
            // With min component >= delta, |dR| <= (2 / (2 delta')) |dq| where delta'
            // bounds the denominator from below; delta = 0.1 after the perturbation.
            let k = [2.0, 4.0];
            let delta = 0.1;
            let lip = 2.0 / (2.0 * delta);
            let p = [a0, a1];
            let q = [a0 + d0, a1 + d1];
            let r = allocate(p, k);
            let s = allocate(q, k);
            let dr = (r[0] - s[0]).abs().max((r[1] - s[1]).abs());
            let dq = d0.abs().max(d1.abs());
            prop_assert!(dr <= lip * dq + 1e-15);
        }
    }

    #[test]
    fn finite_difference_lipschitz_estimate() {
        // Largest finite-difference slope on a grid with components >= 0.5.
        let k = [1.0, 2.0];
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                let q = [0.5 + 0.25 * f64::from(i), 0.5 + 0.25 * f64::from(j)];
                let r = allocate(q, k);
                for dir in [[h, 0.0], [0.0, h]] {
                    let s = allocate([q[0] + dir[0], q[1] + dir[1]], k);
                    worst = worst.max((s[0] - r[0]).abs() / h);
                }
            }
        }
        // Analytic bound for min component >= 0.5: |dR_i/dq_j| <= 1 / (0.5 + 0.5).
        assert!(worst <= 1.0 + 1e-6, "slope {worst}");
    }
}
