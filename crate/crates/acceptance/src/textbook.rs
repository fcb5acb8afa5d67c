//! Pearson's chi-square from expected counts, cell by cell.
//!
//! With `E = R*C/N`, `(O - E)^2 / E = (O*N - R*C)^2 / (N*R*C)`; the numerator is
//! an exact integer, so the only rounding is one division per cell.

fn totals(cells: &[Vec<u64>]) -> (Vec<u128>, Vec<u128>, u128) {
    let rows: Vec<u128> = cells.iter().map(|r| r.iter().map(|&x| x as u128).sum()).collect();
    let cols: Vec<u128> = (0..cells[0].len())
        .map(|j| cells.iter().map(|r| r[j] as u128).sum())
        .collect();
    let n = rows.iter().sum();
    (rows, cols, n)
}

/// Plain statistic; `None` when a row or column total is zero.
pub fn chi2(cells: &[Vec<u64>]) -> Option<f64> {
    let (rows, cols, n) = totals(cells);
    if rows.contains(&0) || cols.contains(&0) {
        return None;
    }
    let mut sum = 0.0;
    for (i, row) in cells.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let on = o as u128 * n;
            let rc = rows[i] * cols[j];
            let d = on.abs_diff(rc);
            sum += (d * d) as f64 / (n * rows[i] * cols[j]) as f64;
        }
    }
    Some(sum)
}

/// Yates-corrected statistic for a 2x2 table: every cell contributes
/// `max(0, |O - E| - 1/2)^2 / E`, i.e. `max(0, 2|O*N - R*C| - N)^2 / (4*N*R*C)`.
pub fn chi2_yates(cells: &[Vec<u64>]) -> Option<f64> {
    assert!(cells.len() == 2 && cells.iter().all(|r| r.len() == 2), "Yates needs 2x2");
    let (rows, cols, n) = totals(cells);
    if rows.contains(&0) || cols.contains(&0) {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let d = (cells[i][j] as u128 * n).abs_diff(rows[i] * cols[j]);
            let corrected = (2 * d).saturating_sub(n);
            sum += (corrected * corrected) as f64 / (4 * n * rows[i] * cols[j]) as f64;
        }
    }
    Some(sum)
}

pub fn cramers_v(chi2: f64, cells: &[Vec<u64>]) -> f64 {
    let n: u64 = cells.iter().flatten().sum();
    let k = cells.len().min(cells[0].len()) - 1;
    (chi2 / (n as f64 * k as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_table_is_zero() {
        assert_eq!(chi2(&[vec![10, 20], vec![30, 60]]), Some(0.0));
    }

    #[test]
    fn hand_computed_2x2() {
        // a=10 b=20 c=30 d=40: N=100, ad-bc=-200, chi2 = 100*200^2/(30*70*40*60)
        let cells = [vec![10, 20], vec![30, 40]];
        let expected = 100.0 * 40_000.0 / (30.0 * 70.0 * 40.0 * 60.0);
        assert!((chi2(&cells).unwrap() - expected).abs() < 1e-12);
        let yates = 100.0 * 150.0f64.powi(2) / (30.0 * 70.0 * 40.0 * 60.0);
        assert!((chi2_yates(&cells).unwrap() - yates).abs() < 1e-12);
    }

    #[test]
    fn degenerate() {
        assert_eq!(chi2(&[vec![0, 0], vec![1, 2]]), None);
    }
}
