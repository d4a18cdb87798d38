//! Small dense helpers; problems here are a handful of rows wide.

const PIVOT_EPS: f64 = 1e-12;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is (numerically) singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < PIVOT_EPS {
            return None;
        }
        m.swap(col, piv);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                if f != 0.0 {
                    for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Greedily picks rows of `a` (in the given order) that are linearly
/// independent, stopping at `limit` rows.
pub fn independent_rows(a: &[Vec<f64>], candidates: &[usize], limit: usize) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut picked = Vec::new();
    for &r in candidates {
        if picked.len() == limit {
            break;
        }
        let mut v = a[r].clone();
        for q in &basis {
            let proj: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
            picked.push(r);
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_two_lines() {
        let x = solve(&[vec![-1.0, -1.0], vec![0.0, 1.0]], &[-20.0, 15.0]).unwrap();
        assert_eq!(x, vec![5.0, 15.0]);
        assert!(solve(&[vec![1.0, 1.0], vec![-1.0, -1.0]], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn picks_independent_rows() {
        let a = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, 0.0]];
        assert_eq!(independent_rows(&a, &[0, 1, 2], 2), vec![0, 2]);
    }
}
