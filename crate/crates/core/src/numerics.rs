//! Numerical kernels: adaptive Gauss–Kronrod quadrature, bracketing root
//! search, LU determinants and a few special functions.

pub use statrs::function::gamma::{gamma, ln_gamma};

pub const QUAD_TOL: f64 = 1e-10;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

const MAX_INTERVALS: usize = 2000;

/// Integral of `f` over the finite interval `[a, b]` to absolute tolerance
/// `tol`. The interval with the largest error estimate is bisected until the
/// summed estimate meets `tol` or the subdivision budget runs out.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, tol);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol && parts.len() < MAX_INTERVALS {
        let i = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).unwrap_or(0);
        let (lo, hi, v, err) = parts[i];
        let mid = 0.5 * (lo + hi);
        if err == 0.0 {
            break;
        }
        if mid <= lo || mid >= hi {
            parts[i] = (lo, hi, v, 0.0);
            total_err -= err;
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total_err += e1 + e2 - err;
        parts[i] = (lo, mid, v1, e1);
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Integral over `[a, b]` split at the interior `breaks`, which may be unsorted.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.insert(0, a);
    pts.push(b);
    let share = tol / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| integrate(&mut f, w[0], w[1], share)).sum()
}

/// Integral of `f` over `[a, ∞)` through the map `x = a + t/(1−t)`.
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, breaks: &[f64], tol: f64) -> f64 {
    let tb: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a && x.is_finite())
        .map(|&x| (x - a) / (1.0 + x - a))
        .collect();
    integrate_pieces(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        },
        0.0,
        1.0,
        &tb,
        tol,
    )
}

/// Smallest `x ≥ 0` with `f(x) ≤ u` for non-increasing `f`, to relative tolerance `tol`.
/// Returns `+∞` when `f` never drops to `u`.
pub fn generalized_inverse_decreasing<F: FnMut(f64) -> f64>(mut f: F, u: f64, tol: f64) -> f64 {
    if f(0.0) <= u {
        return 0.0;
    }
    let mut hi: f64 = 1.0;
    while f(hi) > u {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    if hi == 1.0 {
        while hi > 1e-300 && f(0.5 * hi) <= u {
            hi *= 0.5;
        }
    }
    let mut lo = if hi > 1e-300 { 0.5 * hi } else { 0.0 };
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest `t ≥ 0` with `f(t) ≥ level` for non-decreasing `f`.
///
/// Bracketing as in [`generalized_inverse_decreasing`], then Illinois false
/// position with a bisection step whenever the bracket fails to halve, so
/// paths with jumps cost at most about twice plain bisection.
pub fn first_passage<F: FnMut(f64) -> f64>(mut f: F, level: f64, tol: f64) -> f64 {
    let f0 = f(0.0);
    if f0 >= level {
        return 0.0;
    }
    let mut hi = 1.0;
    let mut fhi = f(hi);
    while fhi < level {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
        fhi = f(hi);
    }
    let (mut lo, mut flo) = if hi > 1.0 { (hi / 2.0, f(hi / 2.0)) } else { (0.0, f0) };
    // residuals g = f − level: glo < 0 ≤ ghi, with Illinois down-weighting
    let (mut glo, mut ghi) = (flo - level, fhi - level);
    let mut side = 0i8;
    let mut bisect = false;
    while hi - lo > tol * hi.max(1.0) {
        let width = hi - lo;
        let mut mid = if !bisect && glo.is_finite() && ghi.is_finite() && ghi > glo {
            lo - glo * width / (ghi - glo)
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
        }
        let fm = f(mid);
        if fm >= level {
            hi = mid;
            ghi = fm - level;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        } else {
            lo = mid;
            flo = fm;
            glo = flo - level;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        }
        bisect = hi - lo > 0.5 * width;
    }
    hi
}

/// Determinant of a square matrix by partially pivoted LU decomposition.
pub fn det_lu(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..n {
            let factor = a[r][col] / p;
            if factor != 0.0 {
                for c in col..n {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    det
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        a.swap(piv, col);
        rhs.swap(piv, col);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Some(x)
}

/// Binomial coefficient C(n, k) as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Survival `P(Z > x)` of a standard normal.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}
