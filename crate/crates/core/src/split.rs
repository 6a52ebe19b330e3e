//! Seeded stratified splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sample::Label;

/// Splits `items` so that `round(ratio * n_c)` items of every class `c` land in
/// the first part (clamped so both parts keep at least one). Relative input
/// order is preserved within each part.
pub fn stratified_split<T>(
    items: Vec<T>,
    label_of: impl Fn(&T) -> Label,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first_part = vec![false; items.len()];
    for class in [Label::Human, Label::Machine] {
        let mut idx: Vec<usize> = (0..items.len()).filter(|&i| label_of(&items[i]) == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "class {} has {} sample(s); at least 2 are needed to split",
                class.as_u8(),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let take = ((idx.len() as f64 * ratio).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..take] {
            first_part[i] = true;
        }
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (item, first) in items.into_iter().zip(first_part) {
        if first {
            a.push(item);
        } else {
            b.push(item);
        }
    }
    Ok((a, b))
}
