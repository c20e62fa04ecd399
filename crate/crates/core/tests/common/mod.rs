//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use gibbs_sdp::linalg::DenseHermitian;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> DenseHermitian<f64> {
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        data[k * n + k] = Complex64::new(scale * rng.random_range(-1.0..1.0), 0.0);
        for l in (k + 1)..n {
            let z =
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            data[k * n + l] = z;
            data[l * n + k] = z.conj();
        }
    }
    DenseHermitian::from_row_major(n, data).unwrap()
}

pub fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Taylor series of `e^H`, summed until the terms stop contributing.
pub fn taylor_exp(h: &DenseHermitian<f64>) -> Vec<Complex64> {
    let n = h.dim();
    let a = h.as_slice().to_vec();
    let mut sum = vec![Complex64::new(0.0, 0.0); n * n];
    let mut term = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        sum[k * n + k] = Complex64::new(1.0, 0.0);
        term[k * n + k] = Complex64::new(1.0, 0.0);
    }
    for j in 1..200 {
        term = matmul(&term, &a, n)
            .into_iter()
            .map(|z| z / j as f64)
            .collect();
        let size: f64 = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if size < 1e-18 {
            break;
        }
    }
    sum
}

/// Characteristic polynomial coefficients (monic, highest degree first) by Faddeev–LeVerrier.
pub fn char_poly(h: &DenseHermitian<f64>) -> Vec<f64> {
    let n = h.dim();
    let a = h.as_slice().to_vec();
    let mut coeffs = vec![1.0];
    let mut mk = vec![Complex64::new(0.0, 0.0); n * n];
    let mut c_prev = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = matmul(&a, &mk, n);
        for i in 0..n {
            next[i * n + i] += c_prev;
        }
        mk = next;
        let am = matmul(&a, &mk, n);
        let tr: Complex64 = (0..n).map(|i| am[i * n + i]).sum();
        let ck = -tr / k as f64;
        coeffs.push(ck.re);
        c_prev = ck;
    }
    coeffs
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Eigenvalues by sign changes of the characteristic polynomial on a fine grid, refined by bisection.
pub fn bracketed_eigenvalues(h: &DenseHermitian<f64>) -> Vec<f64> {
    let p = char_poly(h);
    let bound = h.frobenius_norm() + 1e-6;
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut x0 = -bound;
    let mut f0 = horner(&p, x0);
    for i in 1..=steps {
        let x1 = -bound + 2.0 * bound * i as f64 / steps as f64;
        let f1 = horner(&p, x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = horner(&p, mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}
