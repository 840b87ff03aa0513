//! Small one-dimensional numerical helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of a unimodal `f` on `[a, b]` by golden-section search,
/// stopping once the bracket is narrower than `tol` (or after 500 shrinks).
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if b - a <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
