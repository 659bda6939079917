//! Small scalar routines shared by the solvers: bracketing bisection and
//! golden-section minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection on a bracket `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs (or one of them is zero). Stops once `|f| <= ftol` or the bracket
/// cannot be split further in floating point, returning the best point seen.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, ftol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    let mut best = if flo.abs() <= fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() < best.1.abs() {
            best = (mid, fm);
        }
        if fm.abs() <= ftol {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    best.0
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`; the bracket shrinks until its width is below `xtol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
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
    // The bracket endpoints can beat the interior probes when the minimum
    // sits on the boundary of the original interval.
    let mid = 0.5 * (a + b);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((mid, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
}
