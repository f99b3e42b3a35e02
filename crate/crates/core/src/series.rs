//! Truncated power series with nonnegative coefficients.
//!
//! A series is a coefficient vector `c[0..=deg]`; every operation truncates
//! its result at a degree cap and drops trailing zeros. All routines only add
//! products of nonnegative numbers (apart from the constant term of `exp`),
//! so no cancellation occurs.

pub(crate) fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    if c.is_empty() {
        c.push(0.0);
    }
    c
}

pub(crate) fn mul(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).min(cap + 1);
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        let upto = (len - i).min(b.len());
        for (o, &bj) in out[i..i + upto].iter_mut().zip(&b[..upto]) {
            *o += ai * bj;
        }
    }
    trim(out)
}

pub(crate) fn pow(base: &[f64], mut exp: u64, cap: usize) -> Vec<f64> {
    let mut acc = vec![1.0];
    let mut sq = base.to_vec();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(&acc, &sq, cap);
        }
        exp >>= 1;
        if exp > 0 {
            sq = mul(&sq, &sq, cap);
        }
    }
    acc
}

/// `exp(lambda * (h(s) - 1))`, the Poisson pgf composed with `h`.
pub(crate) fn poisson_compose(lambda: f64, h: &[f64], cap: usize) -> Vec<f64> {
    let mut g = vec![0.0; cap + 1];
    g[0] = (lambda * (h[0] - 1.0)).exp();
    // g' = lambda h' g  =>  n g_n = lambda * sum_k k h_k g_{n-k}
    for n in 1..=cap {
        let mut acc = 0.0;
        for k in 1..=n.min(h.len() - 1) {
            acc += k as f64 * h[k] * g[n - k];
        }
        g[n] = lambda * acc / n as f64;
    }
    trim(g)
}

/// `(1 - q) / (1 - q h(s))`, the geometric pgf composed with `h`.
pub(crate) fn geometric_compose(q: f64, h: &[f64], cap: usize) -> Vec<f64> {
    let mut g = vec![0.0; cap + 1];
    let d0 = 1.0 - q * h[0];
    g[0] = (1.0 - q) / d0;
    for n in 1..=cap {
        let mut acc = 0.0;
        for k in 1..=n.min(h.len() - 1) {
            acc += h[k] * g[n - k];
        }
        g[n] = q * acc / d0;
    }
    trim(g)
}

/// `sum_k a_k h(s)^k` by Horner's rule.
pub(crate) fn poly_compose(a: &[f64], h: &[f64], cap: usize) -> Vec<f64> {
    let mut g = vec![*a.last().unwrap_or(&0.0)];
    for &ak in a.iter().rev().skip(1) {
        g = mul(&g, h, cap);
        g[0] += ak;
    }
    trim(g)
}
