use crate::engine::GenealogyTree;
use crate::envelope::front_m;
use crate::error::{invalid, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `Z(t) = sum_k (sqrt(2) t - x_k) exp(-sqrt(2) (sqrt(2) t - x_k))` over the
/// alive leaves.
pub fn derivative_martingale(tree: &GenealogyTree) -> Result<f64> {
    if tree.has_pruned() {
        return Err(invalid("the derivative martingale needs an unpruned tree; pruning biases the sum"));
    }
    let t = tree.horizon();
    Ok(derivative_martingale_from_positions(t, tree.leaves().map(|r| r.death_position)))
}

pub fn derivative_martingale_from_positions(t: f64, positions: impl IntoIterator<Item = f64>) -> f64 {
    positions
        .into_iter()
        .map(|x| {
            let d = SQRT_2 * t - x;
            d * (-SQRT_2 * d).exp()
        })
        .sum()
}

/// Same sum from positions recentred by `m(t)`: with `c = 3/(2 sqrt 2)`,
/// `sqrt(2) t - x = c log t - xbar`.
pub fn derivative_martingale_recentred(t: f64, recentred: impl IntoIterator<Item = f64>) -> Result<f64> {
    front_m(t)?;
    let c = 3.0 / (2.0 * SQRT_2) * t.ln();
    let scale = t.powf(-1.5);
    Ok(recentred
        .into_iter()
        .map(|xb| (c - xb) * scale * (SQRT_2 * xb).exp())
        .sum())
}
