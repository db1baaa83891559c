use super::params::SblrParams;
use crate::data::DesignTriple;
use crate::error::{Error, Result};
use crate::numeric::log_likelihood;

/// `(sum_{v<u} |b_u||b_v|, sum_{v<u} b_u^2 b_v^2)` accumulated in `order`.
pub fn pair_sums(beta: &[f64], order: impl IntoIterator<Item = usize>) -> (f64, f64) {
    let (mut p1, mut p2) = (0.0, 0.0);
    let (mut s1, mut s2) = (0.0, 0.0);
    for u in order {
        let b = beta[u];
        if b == 0.0 {
            continue;
        }
        let (a, sq) = (b.abs(), b * b);
        p1 += a * s1;
        p2 += sq * s2;
        s1 += a;
        s2 += sq;
    }
    (p1, p2)
}

/// Elastic-net penalty on the lower-triangular entries of every component matrix.
pub fn penalty(params: &SblrParams, delta: f64, eta: f64) -> f64 {
    params
        .components
        .iter()
        .map(|c| {
            let (p1, p2) = pair_sums(&c.beta, 0..c.beta.len());
            let l1: f64 = c.coefs().iter().map(|x| x.abs()).sum();
            let l2: f64 = c.coefs().iter().map(|x| x * x).sum();
            delta * (eta * l1 * p1 + (1.0 - eta) * l2 * p2 / 2.0)
        })
        .sum()
}

pub fn mean_negative_log_likelihood(logits: &[f64], labels: &[f64]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&eta, &y)| -log_likelihood(y, eta))
        .sum();
    total / logits.len() as f64
}

/// Penalized objective: mean negative log-likelihood plus penalty.
pub fn loss(params: &SblrParams, designs: &[DesignTriple], labels: &[f64], delta: f64, eta: f64) -> Result<f64> {
    if designs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: designs.len(),
            found: labels.len(),
        });
    }
    let logits = params.logits(designs)?;
    Ok(mean_negative_log_likelihood(&logits, labels) + penalty(params, delta, eta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_sums_match_double_loop() {
        let beta = [0.5, -1.0, 0.0, 2.0, -0.25];
        let (p1, p2) = pair_sums(&beta, 0..beta.len());
        let (mut e1, mut e2) = (0.0, 0.0);
        for u in 0..beta.len() {
            for v in 0..u {
                e1 += (beta[u] * beta[v]).abs();
                e2 += beta[u] * beta[u] * beta[v] * beta[v];
            }
        }
        assert!((p1 - e1).abs() < 1e-14);
        assert!((p2 - e2).abs() < 1e-14);
    }

    #[test]
    fn uniform_predictor_loss_is_log2() {
        let params = SblrParams::zeros(2, 3);
        let designs: Vec<_> = (0..4)
            .map(|_| {
                let z = ndarray::Array2::<f64>::zeros((3, 3));
                DesignTriple::from_parts(z.view(), z.view(), z.view())
            })
            .collect();
        let l = loss(&params, &designs, &[0.0, 1.0, 0.0, 1.0], 1.0, 0.5).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }
}
