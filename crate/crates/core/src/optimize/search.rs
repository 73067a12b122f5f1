//! Derivative-free local searches used by the optimizers.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's parabolic/golden search for a maximum of `f` on `[a, b]`.
/// Returns the best abscissa seen together with its value; endpoints are
/// evaluated as well so a boundary optimum is never missed.
pub fn brent_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let fa = f(a);
    let fb = f(b);
    let mut best = if fb > fa { (b, fb) } else { (a, fa) };
    if b - a <= xtol {
        return best;
    }

    let neg = |v: f64| if v.is_nan() { f64::INFINITY } else { -v };
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = neg(f(x));
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-14 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = neg(f(u));
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if -fx > best.1 {
        best = (x, -fx);
    }
    best
}

/// Nelder-Mead maximization of `f` from `x0` with initial simplex edge
/// `step`. Stops when the spread of values falls below `ftol` or after
/// `max_evals` evaluations.
pub fn nelder_mead_max<const N: usize>(
    mut f: impl FnMut(&[f64; N]) -> f64,
    x0: [f64; N],
    step: f64,
    ftol: f64,
    max_evals: usize,
) -> ([f64; N], f64) {
    let mut eval = |x: &[f64; N]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, eval(&x0)));
    for k in 0..N {
        let mut x = x0;
        x[k] += step;
        simplex.push((x, eval(&x)));
    }
    let mut evals = N + 1;

    let combine = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] {
        std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
    };

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[N].1 - simplex[0].1).abs() <= ftol {
            break;
        }
        let centroid: [f64; N] =
            std::array::from_fn(|k| simplex[..N].iter().map(|p| p.0[k]).sum::<f64>() / N as f64);
        let worst = simplex[N];

        let xr = combine(&centroid, &worst.0, -1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &worst.0, -2.0);
            let fe = eval(&xe);
            evals += 1;
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = combine(&centroid, &xr, 0.5);
            (xc, eval(&xc))
        } else {
            let xc = combine(&centroid, &worst.0, 0.5);
            (xc, eval(&xc))
        };
        evals += 1;
        if fc < worst.1.min(fr) {
            simplex[N] = (xc, fc);
            continue;
        }
        let best = simplex[0].0;
        for p in simplex.iter_mut().skip(1) {
            p.0 = combine(&best, &p.0, 0.5);
            p.1 = eval(&p.0);
        }
        evals += N;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, -simplex[0].1)
}
