//! Truncated Poisson probabilities for uniformization.

/// Poisson(q) probabilities for `k` in `left..=right`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.left || k > self.right {
            0.0
        } else {
            self.weights[k - self.left]
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn log_pmf(q: f64, k: usize) -> f64 {
    let k = k as f64;
    if k < 16.0 {
        return -q + k * q.ln() - libm::lgamma(k + 1.0);
    }
    // Stirling form avoids cancellation between k·ln q and ln k! for large k
    let series = 1.0 / (12.0 * k) - 1.0 / (360.0 * k.powi(3)) + 1.0 / (1260.0 * k.powi(5));
    k * ((q - k) / k).ln_1p() + (k - q) - 0.5 * (2.0 * std::f64::consts::PI * k).ln() - series
}

/// Computes the weights so that the omitted mass on each side is at most
/// `eps / 2`.
pub fn poisson_weights(q: f64, eps: f64) -> PoissonWeights {
    assert!(q >= 0.0 && q.is_finite(), "invalid Poisson parameter {q}");
    if q == 0.0 {
        return PoissonWeights {
            left: 0,
            right: 0,
            weights: vec![1.0],
        };
    }
    let half = eps / 2.0;
    let mode = q.floor() as usize;
    let p_mode = log_pmf(q, mode).exp();

    // walk left from the mode; pmf(k-1) = pmf(k) * k / q
    let mut left_weights = Vec::new();
    let mut k = mode;
    let mut p = p_mode;
    while k > 0 {
        let prev = p * k as f64 / q;
        // tail below k: sum_{j<k} pmf(j) <= pmf(k-1) / (1 - (k-1)/q)
        let ratio = (k - 1) as f64 / q;
        let bound = if ratio < 1.0 {
            prev / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if bound <= half {
            break;
        }
        k -= 1;
        p = prev;
        left_weights.push(p);
    }
    let left = k;

    let mut right_weights = vec![p_mode];
    let mut k = mode;
    let mut p = p_mode;
    loop {
        let next = p * q / (k + 1) as f64;
        // tail above k: sum_{j>k} pmf(j) <= pmf(k+1) / (1 - q/(k+2))
        let ratio = q / (k + 2) as f64;
        let bound = if ratio < 1.0 {
            next / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if bound <= half {
            break;
        }
        k += 1;
        p = next;
        right_weights.push(p);
    }
    let right = k;

    left_weights.reverse();
    left_weights.extend(right_weights);
    PoissonWeights {
        left,
        right,
        weights: left_weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate() {
        let w = poisson_weights(0.0, 1e-10);
        assert_eq!((w.left, w.right, w.weights.clone()), (0, 0, vec![1.0]));
    }

    #[test]
    fn mass_is_near_one() {
        for q in [1e-6, 0.3, 1.0, 7.5, 40.0, 1000.0, 25_000.0] {
            let w = poisson_weights(q, 1e-10);
            let total = w.total();
            assert!(
                (1.0 - 1e-10..=1.0 + 1e-12).contains(&total),
                "q={q}: {total}"
            );
        }
    }

    #[test]
    fn matches_direct_formula() {
        let q: f64 = 3.7;
        let w = poisson_weights(q, 1e-12);
        for k in w.left..=w.right {
            let direct = (-q).exp() * q.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
            assert!((w.weight(k) - direct).abs() < 1e-15, "{k}");
        }
    }
}
