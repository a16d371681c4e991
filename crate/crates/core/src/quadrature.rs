//! Trapezoid rules.

/// Composite trapezoid rule on `n >= 2` uniformly spaced points.
pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2, "trapezoid needs at least two points");
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n - 1 {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

/// Trapezoid rule on given abscissae and ordinates.
pub fn trapezoid_samples(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Adaptive trapezoid: each interval is bisected until the one-panel and
/// two-panel estimates agree within the interval's share of `tol`.
/// Every interval is split at least `min_depth` times so narrow features
/// between the initial nodes are not missed.
pub fn adaptive_trapezoid<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    min_depth: u32,
    max_depth: u32,
) -> f64 {
    let (flo, fhi) = (f(lo), f(hi));
    let limits = Limits { min_depth, max_depth };
    refine(&mut f, lo, hi, flo, fhi, tol, 0, limits)
}

#[derive(Clone, Copy)]
struct Limits {
    min_depth: u32,
    max_depth: u32,
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, fa: f64, fb: f64, tol: f64, depth: u32, lim: Limits) -> f64 {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let coarse = 0.5 * (b - a) * (fa + fb);
    let fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if depth >= lim.max_depth || (depth >= lim.min_depth && (fine - coarse).abs() <= 3.0 * tol) {
        return fine;
    }
    refine(f, a, m, fa, fm, 0.5 * tol, depth + 1, lim) + refine(f, m, b, fm, fb, 0.5 * tol, depth + 1, lim)
}
