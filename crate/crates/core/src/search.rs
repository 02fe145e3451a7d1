//! One-dimensional search primitives used by the strategy and threshold
//! subproblems.

use crate::scalar::Scalar;

/// Maximizes `f` over `[lo, hi]` with a dense scan at `step` followed by a
/// golden-section refinement around the best cell down to width `tol`.
///
/// Returns `(argmax, max)`. Endpoints are always evaluated.
pub fn scan_then_golden<T, F>(lo: T, hi: T, step: T, tol: T, mut f: F) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    debug_assert!(hi >= lo);
    let span = hi - lo;
    let cells = (span / step).ceil().to_usize().unwrap_or(0).max(1);
    let point = |k: usize| -> T {
        if k == cells {
            hi
        } else {
            lo + span * T::of(k as f64) / T::of(cells as f64)
        }
    };

    let mut best_k = 0;
    let mut best_val = f(lo);
    for k in 1..=cells {
        let v = f(point(k));
        if v > best_val {
            best_val = v;
            best_k = k;
        }
    }

    let a = point(best_k.saturating_sub(1));
    let b = point((best_k + 1).min(cells));
    let (x, v) = golden_max(a, b, tol, &mut f);
    if v > best_val {
        (x, v)
    } else {
        (point(best_k), best_val)
    }
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_max<T, F>(mut a: T, mut b: T, tol: T, f: &mut F) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let inv_phi = T::of(0.618_033_988_749_894_9);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut guard = 0;
    while (b - a) > tol && guard < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        guard += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Largest value in `[lo, hi]` satisfying a monotone predicate, assuming
/// `feasible(lo)` holds. The predicate must be true on an interval starting
/// at `lo`. Returns the final feasible end of the bracket together with the
/// payload produced by the last successful probe.
pub fn bisect_max<T, P, F>(mut lo: T, mut hi: T, tol: T, mut lo_payload: P, mut probe: F) -> (T, P)
where
    T: Scalar,
    F: FnMut(T) -> Option<P>,
{
    while hi - lo > tol {
        let mid = lo + (hi - lo) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        match probe(mid) {
            Some(p) => {
                lo = mid;
                lo_payload = p;
            }
            None => hi = mid,
        }
    }
    (lo, lo_payload)
}
