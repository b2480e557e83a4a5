//! Maximum-weight one-to-one pairing of candidates with references.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

/// Above this size on both sides the Hungarian algorithm replaces
/// exhaustive search.
const EXHAUSTIVE_LIMIT: usize = 6;

/// Tuple scores of arity n <= 7 are multiples of 1/(2n); all of those
/// divide this, so scaled scores are exact integers.
const SCALE: f64 = 8.0 * 3.0 * 5.0 * 7.0;

/// Largest achievable sum of `scores[i][j]` over a one-to-one pairing of
/// rows with columns (unpaired rows and columns contribute nothing).
pub fn best_assignment(scores: &[Vec<f64>]) -> f64 {
    let rows = scores.len();
    let cols = scores.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows <= EXHAUSTIVE_LIMIT && cols <= EXHAUSTIVE_LIMIT {
        let mut used = vec![false; cols];
        return exhaustive(scores, 0, &mut used);
    }
    // kuhn_munkres needs rows <= columns
    let (r, c, get): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if rows <= cols {
        (rows, cols, Box::new(|i, j| scores[i][j]))
    } else {
        (cols, rows, Box::new(|i, j| scores[j][i]))
    };
    let m = Matrix::from_fn(r, c, |(i, j)| (get(i, j) * SCALE).round() as i64);
    let (total, _) = kuhn_munkres(&m);
    total as f64 / SCALE
}

fn exhaustive(scores: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
    if row == scores.len() {
        return 0.0;
    }
    // leaving this row unpaired
    let mut best = exhaustive(scores, row + 1, used);
    for j in 0..used.len() {
        if !used[j] && scores[row][j] > 0.0 {
            used[j] = true;
            best = best.max(scores[row][j] + exhaustive(scores, row + 1, used));
            used[j] = false;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        assert_eq!(best_assignment(&[]), 0.0);
        assert_eq!(best_assignment(&[vec![1.0], vec![0.5]]), 1.0);
        // greedy would take the 0.75 and end with 0.75 + 0.0
        assert_eq!(best_assignment(&[vec![0.75, 0.5], vec![0.5, 0.0]]), 1.0);
    }

    proptest! {
        #[test]
        fn hungarian_agrees_with_search(
            rows in 1usize..8, cols in 1usize..8,
            cells in prop::collection::vec(0u8..=8, 64),
        ) {
            let scores: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..cols).map(|j| f64::from(cells[i * 8 + j]) / 8.0).collect())
                .collect();
            let mut used = vec![false; cols];
            let brute = exhaustive(&scores, 0, &mut used);
            let r = rows.max(cols);
            let padded: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| scores.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0)).collect()).collect();
            let m = Matrix::from_fn(r, r, |(i, j)| (padded[i][j] * SCALE).round() as i64);
            let (hungarian, _) = kuhn_munkres(&m);
            prop_assert_eq!(brute, hungarian as f64 / SCALE);
            prop_assert_eq!(brute, best_assignment(&scores));
        }
    }
}
