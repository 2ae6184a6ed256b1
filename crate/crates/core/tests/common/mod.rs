//! Shared test utilities: independent spectral oracles and random inputs.
//!
//! The oracle path is deliberately disjoint from the library's eigen
//! kernels: characteristic polynomial coefficients via Faddeev-LeVerrier
//! (traces of matrix powers only), then roots of the real-rooted even
//! polynomial by derivative recursion and bisection.

// Each test binary compiles this module and uses a different subset.
#![allow(dead_code)]

use ncmap_core::matrix::Mat;
use ncmap_core::rng::SplitMix64;

/// Characteristic polynomial coefficients of `a`, highest power first:
/// `lambda^p + c[1] lambda^{p-1} + ... + c[p]`.
pub fn charpoly(a: &Mat) -> Vec<f64> {
    let p = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = Mat::zeros(p, p);
    for k in 1..=p {
        m = if k == 1 {
            a.clone()
        } else {
            a.matmul(&m.add(&Mat::identity(p).scale(*coeffs.last().unwrap())))
        };
        let trace: f64 = (0..p).map(|i| m[(i, i)]).sum();
        coeffs.push(-trace / k as f64);
    }
    coeffs
}

fn eval(poly: &[f64], x: f64) -> f64 {
    poly.iter().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(poly: &[f64]) -> Vec<f64> {
    let deg = poly.len() - 1;
    poly[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (deg - i) as f64)
        .collect()
}

/// All real roots of a polynomial known to be real-rooted, ascending.
/// Derivative recursion brackets each root between consecutive critical
/// points; bisection finishes the job.
pub fn real_roots(poly: &[f64]) -> Vec<f64> {
    let deg = poly.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-poly[1] / poly[0]];
    }
    let crit = real_roots(&derivative(poly));

    // Bound all roots by the Cauchy bound.
    let lead = poly[0];
    let bound = 1.0
        + poly[1..]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0f64, f64::max);

    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(-bound - 1.0);
    knots.extend(crit.iter().cloned());
    knots.push(bound + 1.0);

    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        if lo >= hi {
            continue;
        }
        let (flo, fhi) = (eval(poly, lo), eval(poly, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if fhi == 0.0 {
            continue; // picked up as the lower end of the next interval
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = eval(poly, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    roots
}

/// Oracle for the eigenvalue imaginary parts of a real skew-symmetric
/// matrix: the characteristic polynomial is `lambda^z prod(lambda^2 + d^2)`,
/// so substituting `t = lambda^2` leaves a real-rooted polynomial whose
/// roots are `-d^2`. Returns all `ceil(p/2)` values, descending.
pub fn skew_delta_oracle(c: &Mat) -> Vec<f64> {
    let p = c.rows();
    let coeffs = charpoly(c);
    // Even-power coefficients form the polynomial in t = lambda^2 after
    // stripping the zero eigenvalue for odd p.
    let half = p / 2;
    let mut q = Vec::with_capacity(half + 1);
    for k in 0..=half {
        q.push(coeffs[2 * k]);
    }
    // q(t) = t^half + ... ; roots are -delta^2 (some may be zero).
    let roots = real_roots(&q);
    let mut deltas: Vec<f64> = roots.iter().map(|r| (-r).max(0.0).sqrt()).collect();
    deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    deltas.resize(p.div_ceil(2), 0.0);
    deltas
}

pub fn random_skew(p: usize, rng: &mut SplitMix64) -> Mat {
    let mut c = Mat::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let x = rng.uniform(-2.0, 2.0);
            c[(i, j)] = x;
            c[(j, i)] = -x;
        }
    }
    c
}

/// Random `2n x m` matrix whose rows each sum to zero.
pub fn random_zero_sum(n: usize, m: usize, rng: &mut SplitMix64) -> Mat {
    let mut w = Mat::zeros(2 * n, m);
    for i in 0..2 * n {
        let mut acc = 0.0;
        for j in 0..m - 1 {
            let v = rng.uniform(-1.0, 1.0);
            w[(i, j)] = v;
            acc += v;
        }
        w[(i, m - 1)] = -acc;
    }
    w
}
