//! Scalar helpers shared by the solvers.

/// Probabilities inside derivative formulas are kept away from 0 and 1.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood of label `y` at logit `eta`.
pub fn log_likelihood(y: f64, eta: f64) -> f64 {
    y * eta - softplus(eta)
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    let m = x.abs() - t;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `len - 1`); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}
