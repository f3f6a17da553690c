use num::{One, Zero};

use crate::rational::{int, pow, ratio, Rational};

/// Predicted gain of a rule-following policy on the three-phase reduction,
/// up to an additive term in `[0, 2/m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GainEstimate {
    pub base: Rational,
    /// Upper end of the additive window, `2/m`.
    pub delta_max: Rational,
}

impl GainEstimate {
    pub fn contains(&self, gain: &Rational) -> bool {
        *gain >= self.base && *gain <= &self.base + &self.delta_max
    }
}

/// `1.25n + 2n(1−m⁻⁴)^m + (2n + P(m⁴/2k − 2))·m·m⁻⁴(1−m⁻⁴)^{m−1}`.
pub fn gain_formula(n: usize, m: usize, k: usize, p: &Rational) -> GainEstimate {
    assert!(m >= 1 && k >= 1, "m and k must be positive");
    let n_r = int(n as i64);
    let m_r = int(m as i64);
    let m4 = pow(&m_r, 4);
    let q = Rational::one() - m4.recip();
    let base = ratio(5, 4) * &n_r
        + int(2) * &n_r * pow(&q, m as i32)
        + (int(2) * &n_r + p * (&m4 / int(2 * k as i64) - int(2))) * &m_r * m4.recip() * pow(&q, m as i32 - 1);
    GainEstimate {
        base,
        delta_max: int(2) / m_r,
    }
}

/// Checks the approximation-transfer fact on concrete numbers: when
/// `Q'/Q ≤ β` and `V ≥ ((α+β)/(1+β))(Q+Q')`, then `V − Q' ≥ αQ`.
/// Returns `None` when the premises fail.
pub fn apx_fact(q: &Rational, q_prime: &Rational, alpha: &Rational, beta: &Rational, v: &Rational) -> Option<bool> {
    let premises = *q > Rational::zero()
        && *q_prime >= Rational::zero()
        && q_prime / q <= *beta
        && *v >= (alpha + beta) / (Rational::one() + beta) * (q + q_prime);
    premises.then(|| v - q_prime >= alpha * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn certainty_difference() {
        for (m, k) in [(1, 1), (2, 1), (3, 2), (5, 3)] {
            let d = gain_formula(4, m, k, &int(1)).base - gain_formula(4, m, k, &int(0)).base;
            let m_r = int(m as i64);
            let m4 = pow(&m_r, 4);
            let expect = (&m4 / int(2 * k as i64) - int(2)) * pow(&m_r, -3) * pow(&(Rational::one() - m4.recip()), m as i32 - 1);
            assert_eq!(d, expect);
        }
    }

    #[test]
    fn damping_near_one_for_large_m() {
        for m in [10i64, 20, 50] {
            let g = pow(&(Rational::one() - pow(&int(m), -4)), m as i32 - 1);
            assert!(g > ratio(999, 1000) && g < Rational::one());
        }
    }

    #[test]
    fn window_width() {
        let e = gain_formula(2, 4, 1, &ratio(1, 2));
        assert_eq!(e.delta_max, ratio(1, 2));
        assert!(e.contains(&e.base));
        assert!(!e.contains(&(&e.base + ratio(3, 4))));
    }

    proptest! {
        #[test]
        fn apx_fact_never_fails(q in 1i64..1000, qp in 0i64..1000, a in 1i64..99, b in 1i64..50, extra in 0i64..100) {
            let q = int(q);
            let qp = int(qp);
            let alpha = ratio(a, 100);
            let beta = int(b);
            let v = (&alpha + &beta) / (Rational::one() + &beta) * (&q + &qp) + int(extra);
            if let Some(ok) = apx_fact(&q, &qp, &alpha, &beta, &v) {
                prop_assert!(ok);
            }
        }
    }
}
