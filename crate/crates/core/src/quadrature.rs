//! Adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` to an absolute tolerance `tol`.
///
/// The interval is split into 64 panels first so that narrow peaks are not
/// missed by the initial Simpson estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == PANELS { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            adapt(&f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
