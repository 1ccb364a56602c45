/// Subsequences with standard deviation below this are treated as flat.
pub const FLAT_STD: f64 = 1e-12;

/// Largest possible z-normalized distance between two length-`m` subsequences.
pub fn max_distance(m: usize) -> f64 {
    2.0 * (m as f64).sqrt()
}

/// Population mean and standard deviation (two-pass).
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Mean and std of every length-`m` window of `series`, computed directly per
/// window so that constant windows report an exact zero std.
pub fn window_stats(series: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    series.windows(m).map(mean_std).unzip()
}

/// Distance rule when at least one side is flat.
pub(crate) fn flat_rule(a_flat: bool, b_flat: bool, m: usize) -> Option<f64> {
    match (a_flat, b_flat) {
        (true, true) => Some(0.0),
        (true, false) | (false, true) => Some(max_distance(m)),
        (false, false) => None,
    }
}

/// Euclidean distance between z-normalized copies of `a` and `b`.
///
/// A flat subsequence is at distance 0 from another flat one and at the
/// maximum `2√m` from any non-flat one.
pub fn znorm_distance(a: &[f64], b: &[f64]) -> crate::Result<f64> {
    crate::error::check_dim("znorm_distance", a.len(), b.len())?;
    let m = a.len();
    if m == 0 {
        return Err(crate::Error::invalid("empty subsequence"));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if let Some(d) = flat_rule(sa < FLAT_STD, sb < FLAT_STD, m) {
        return Ok(d);
    }
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - ma) / sa - (y - mb) / sb;
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}
