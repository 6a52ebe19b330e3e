use crate::error::{Error, Result};
use crate::scoring::NextTokenDistribution;

pub fn probability_of(dist: &NextTokenDistribution, token_id: u32) -> f64 {
    dist.probs()[token_id as usize]
}

/// 1-based rank under descending probability; equal probabilities are
/// ordered by ascending token id, so ranks form a permutation of `1..=|V|`.
pub fn rank_of(dist: &NextTokenDistribution, token_id: u32) -> u32 {
    let t = token_id as usize;
    let px = dist.probs()[t];
    let ahead = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|&(v, &p)| p > px || (p == px && v < t))
        .count();
    ahead as u32 + 1
}

/// Mass of tokens strictly more probable than `token_id`. Ties contribute
/// nothing, so two tokens sharing the mode both get 0.
pub fn cumulative_probability_of(dist: &NextTokenDistribution, token_id: u32) -> f64 {
    let px = dist.probs()[token_id as usize];
    dist.probs().iter().filter(|&&p| p > px).sum()
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy_of(dist: &NextTokenDistribution) -> f64 {
    -dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn log_rank(r: u32) -> Result<f64> {
    if r < 1 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    Ok(f64::from(r).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> NextTokenDistribution {
        NextTokenDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn probability_lookup() {
        assert_eq!(probability_of(&d(&[0.5, 0.3, 0.2]), 1), 0.3);
        assert_eq!(probability_of(&d(&[0.0, 1.0, 0.0]), 1), 1.0);
        assert_eq!(probability_of(&d(&[0.25; 4]), 3), 0.25);
    }

    #[test]
    fn rank_with_ties() {
        assert_eq!(rank_of(&d(&[0.5, 0.3, 0.2]), 0), 1);
        assert_eq!(rank_of(&d(&[0.4, 0.4, 0.2]), 1), 2);
        assert_eq!(rank_of(&d(&[0.2; 5]), 4), 5);
    }

    #[test]
    fn cumulative_strict_inequality() {
        assert!((cumulative_probability_of(&d(&[0.5, 0.3, 0.2]), 2) - 0.8).abs() < 1e-15);
        assert_eq!(cumulative_probability_of(&d(&[0.5, 0.3, 0.2]), 0), 0.0);
        assert_eq!(cumulative_probability_of(&d(&[0.4, 0.4, 0.2]), 1), 0.0);
        assert_eq!(cumulative_probability_of(&d(&[0.4, 0.4, 0.2]), 0), 0.0);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy_of(&d(&[0.0, 1.0, 0.0])), 0.0);
        let u = d(&[0.125; 8]);
        assert!((entropy_of(&u) - 8f64.ln()).abs() < 1e-12);
        assert!((entropy_of(&d(&[0.5, 0.5, 0.0, 0.0])) - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn log_rank_values() {
        assert_eq!(log_rank(1).unwrap(), 0.0);
        assert_eq!(log_rank(1000).unwrap(), 3.0);
        assert!((log_rank(50).unwrap() - 1.69897).abs() < 1e-5);
        assert!(log_rank(0).is_err());
    }
}
