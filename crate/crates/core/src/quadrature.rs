//! Adaptive Simpson quadrature with a Richardson-corrected acceptance test.

const MAX_DEPTH: u32 = 60;
const SEED_PANELS: usize = 32;

/// Integrate `f` over `[a, b]` to a tolerance relative to the magnitude of
/// the integral (estimated as the integral of `|f|`). `f` is only evaluated at interior points and the endpoints,
/// so integrable endpoint singularities must be removed by the caller.
pub fn integrate<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    // Split into seed panels so that the scale estimate and the recursion
    // both see the shape of the integrand.
    let width = (hi - lo) / SEED_PANELS as f64;
    let mut panels = Vec::with_capacity(SEED_PANELS);
    let mut magnitude = 0.0;
    for i in 0..SEED_PANELS {
        let x0 = lo + width * i as f64;
        let x1 = if i + 1 == SEED_PANELS { hi } else { x0 + width };
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let s = simpson(x0, x1, f0, fm, f1);
        magnitude += s.abs();
        panels.push((x0, x1, f0, fm, f1, s));
    }
    let tol = rel_tol * magnitude.max(f64::MIN_POSITIVE) / SEED_PANELS as f64;

    let total: f64 = panels
        .into_iter()
        .map(|(x0, x1, f0, fm, f1, s)| refine(&f, x0, x1, f0, fm, f1, s, tol, MAX_DEPTH))
        .sum();
    sign * total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || b <= m {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
