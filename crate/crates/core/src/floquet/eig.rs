// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Eigenvalues of small dense real matrices: balancing, Householder
//! reduction to upper Hessenberg form, then Francis double-shift QR.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_EIG_DIM: usize = 64;

/// Row/column scaling by powers of two that evens out row and column norms.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = a.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- H A with H = I - 2 v v^T / |v|^2 on rows k+1..n
        for j in 0..n {
            let dot: f64 = (0..v.len()).map(|p| v[p] * a[k + 1 + p][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for p in 0..v.len() {
                a[k + 1 + p][j] -= f * v[p];
            }
        }
        // A <- A H on columns k+1..n
        for row in a.iter_mut() {
            let dot: f64 = (0..v.len()).map(|p| v[p] * row[k + 1 + p]).sum();
            let f = 2.0 * dot / vnorm2;
            for p in 0..v.len() {
                row[k + 1 + p] -= f * v[p];
            }
        }
        a[k + 1][k] = alpha;
        for i in k + 2..n {
            a[i][k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix. Indices are 1-based inside;
/// `h` has a padding row and column at index 0.
fn hqr(h: &mut [Vec<f64>], n: usize) -> Result<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += h[i][j].abs();
        }
    }
    let cap = 100 * n;
    let mut total = 0usize;
    let mut nn = n as isize;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 2 {
                let mut s = h[l - 1][l - 1].abs() + h[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[l][l - 1].abs() + s == s {
                    h[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = h[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
                if l == nu - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if total >= cap {
                        return Err(Error::NoConvergence);
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nu {
                            h[i][i] -= x;
                        }
                        let s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    total += 1;
                    let mut m = nu - 2;
                    loop {
                        z = h[m][m];
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / h[m + 1][m] + h[m][m + 1];
                        q = h[m + 1][m + 1] - z - r - s0;
                        r = h[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = h[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (h[m - 1][m - 1].abs() + z.abs() + h[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nu {
                        h[i][i - 2] = 0.0;
                        if i != m + 2 {
                            h[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = h[k][k - 1];
                            q = h[k + 1][k - 1];
                            r = 0.0;
                            if k != nu - 1 {
                                r = h[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    h[k][k - 1] = -h[k][k - 1];
                                }
                            } else {
                                h[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = h[k][j] + q * h[k + 1][j];
                                if k != nu - 1 {
                                    p += r * h[k + 2][j];
                                    h[k + 2][j] -= p * z;
                                }
                                h[k + 1][j] -= p * y;
                                h[k][j] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                p = x * h[i][k] + y * h[i][k + 1];
                                if k != nu - 1 {
                                    p += z * h[i][k + 2];
                                    h[i][k + 2] -= p * r;
                                }
                                h[i][k + 1] -= p * q;
                                h[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(l + 1 < nn.max(0) as usize) {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// All eigenvalues of a square real matrix, sorted by decreasing modulus.
/// Conjugate pairs are returned with exactly opposite imaginary parts.
pub fn eig(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if n > MAX_EIG_DIM {
        return Err(Error::InvalidParams(format!("eig supports dimension <= {MAX_EIG_DIM}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    balance(&mut a);
    hessenberg(&mut a);
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        h[i + 1][1..].copy_from_slice(&a[i]);
    }
    let mut ev = hqr(&mut h, n)?;
    sort_by_modulus(&mut ev);
    Ok(ev)
}

/// Sorts by decreasing modulus; ties keep positive imaginary parts first.
pub fn sort_by_modulus(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn triangular() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0]);
        let ev = eig(&m).unwrap();
        assert!(ev.iter().all(|&l| close(l, Complex64::new(-1.0, 0.0), 1e-12)));
    }

    #[test]
    fn rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let ev = eig(&m).unwrap();
        assert!(close(ev[0], Complex64::new(0.0, 1.0), 1e-14));
        assert!(close(ev[1], Complex64::new(0.0, -1.0), 1e-14));
    }

    #[test]
    fn known_spectrum() {
        // companion matrix of (x-1)(x-2)(x-3)(x^2+1)
        let c = [-6.0, 11.0, -12.0, 12.0, -6.0]; // x^5 - 6x^4 + 12x^3 - 12x^2 + 11x - 6
        let mut m = DMatrix::zeros(5, 5);
        for i in 1..5 {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..5 {
            m[(i, 4)] = -c[i];
        }
        let ev = eig(&m).unwrap();
        let want = [
            Complex64::new(3.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        assert!((ev[0].re - 3.0).abs() < 1e-9 && (ev[1].re - 2.0).abs() < 1e-9);
        for b in want {
            assert!(ev.iter().any(|a| close(*a, b, 1e-9)), "{b} missing from {ev:?}");
        }
    }

    #[test]
    fn degenerate_sizes() {
        assert!(eig(&DMatrix::zeros(0, 0)).unwrap().is_empty());
        assert_eq!(
            eig(&DMatrix::from_element(1, 1, 4.0)).unwrap(),
            vec![Complex64::new(4.0, 0.0)]
        );
        assert!(eig(&DMatrix::zeros(2, 3)).is_err());
        assert!(eig(&DMatrix::from_element(2, 2, f64::NAN)).is_err());
        let z = eig(&DMatrix::zeros(4, 4)).unwrap();
        assert!(z.iter().all(|l| l.norm() == 0.0));
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn product_equals_lu_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let m = random(8, &mut rng);
            let prod = eig(&m).unwrap().iter().fold(Complex64::new(1.0, 0.0), |a, b| a * b);
            let det = m.clone().lu().determinant();
            assert!((prod.re - det).abs() <= 1e-8 * det.abs(), "{prod} vs {det}");
            assert!(prod.im.abs() <= 1e-8 * det.abs());
        }
    }

    #[test]
    fn small_backward_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [3usize, 8, 20, 64] {
            let m = random(n, &mut rng);
            let norm = m.norm();
            let mc: DMatrix<Complex<f64>> = m.map(|v| Complex::new(v, 0.0));
            for l in eig(&m).unwrap() {
                let shifted = &mc - DMatrix::<Complex<f64>>::identity(n, n) * l;
                let smin = shifted.singular_values().min();
                assert!(smin <= 1e-10 * norm, "n={n} smin={smin}");
            }
        }
    }

    #[test]
    fn graded_matrix_small_eigenvalues() {
        let d = [1.0, 1e-3, 1e-6, 1e-9];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random(4, &mut rng);
        let qi = q.clone().try_inverse().unwrap();
        let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d)) * &qi;
        let ev = eig(&m).unwrap();
        for (l, want) in ev.iter().zip(d) {
            assert!((l.re - want).abs() < 1e-12 * 1e3, "{l} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn conjugate_pairs(seed in any::<u64>(), n in 2usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random(n, &mut rng);
            let ev = eig(&m).unwrap();
            prop_assert_eq!(ev.len(), n);
            for l in &ev {
                if l.im != 0.0 {
                    prop_assert!(ev.iter().any(|c| (c - l.conj()).norm() <= 1e-8 * (1.0 + l.norm())));
                }
            }
            let trace: f64 = ev.iter().map(|l| l.re).sum();
            prop_assert!((trace - m.trace()).abs() < 1e-9 * (1.0 + m.norm()));
        }
    }
}
