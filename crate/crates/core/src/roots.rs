//! Bracketed scalar root finding.

use crate::error::Result;
use crate::scalar::Real;

/// Illinois-modified regula falsi on a sign-changing bracket, falling back
/// to bisection whenever the secant point leaves the bracket.
///
/// Requires `fa < 0 <= fb` (or the reverse). Stops when `|f(x)| <= ftol` or
/// the bracket collapses to rounding level, returning the best point seen.
pub(crate) fn illinois<T, F>(mut f: F, mut a: T, mut fa: T, mut b: T, mut fb: T, ftol: T) -> Result<(T, T)>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let half = T::lit(0.5);
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut side = 0i8;
    for _ in 0..300 {
        if best.1.abs() <= ftol {
            break;
        }
        let width = (b - a).abs();
        if width <= T::machine_eps() * T::lit(4.0) * a.abs().max(b.abs()) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        let inside = if a < b { x > a && x < b } else { x > b && x < a };
        if !inside || !x.is_finite_val() {
            x = (a + b) * half;
        }
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if (fx > T::zero()) == (fb > T::zero()) {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= half;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= half;
            }
            side = -1;
        }
    }
    Ok(best)
}

/// Golden-section search for the minimum of a unimodal function on
/// `[a, b]`, to abscissa tolerance `tol`. Returns `(x, f(x))`.
pub(crate) fn golden_min<T, F>(mut f: F, mut a: T, mut b: T, tol: T) -> (T, T)
where
    T: Real,
    F: FnMut(T) -> T,
{
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
