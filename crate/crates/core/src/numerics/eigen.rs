//! Complex eigenvalues of dense real matrices.
//!
//! Two entry points: [`eigenvalues_small`] for n <= 8 (closed-form
//! quadratic/cubic up to n = 3, so the conjugate pairing of the 3x3 RG
//! Jacobians is exact by construction) and [`eigenvalues_dense`] for n up to
//! 512 (balancing, Householder reduction to Hessenberg form, Francis
//! double-shift QR). The QR path follows the classic EISPACK/JAMA scheme.

use super::{DenseMatrix, NumericsError, Result};
use num_complex::Complex64;

const MAX_DENSE_DIM: usize = 512;
const MAX_SMALL_DIM: usize = 8;

/// Eigenvalues of a real matrix with n <= 8.
///
/// n <= 3 uses closed forms (quadratic formula, Cardano with the
/// trigonometric branch) so complex eigenvalues come out in exact conjugate
/// pairs; 4 <= n <= 8 falls through to the QR path.
pub fn eigenvalues_small(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = m.dim();
    if n == 0 || n > MAX_SMALL_DIM {
        return Err(NumericsError::BadDimension {
            dim: n,
            what: "eigenvalues_small (n must be 1..=8)",
        });
    }
    if !m.is_finite() {
        return Err(NumericsError::NonFinite("eigenvalues_small input"));
    }
    let mut eigs = match n {
        1 => vec![Complex64::new(m.get(0, 0), 0.0)],
        2 => eig2(m),
        3 => eig3(m),
        _ => return eigenvalues_dense(m),
    };
    sort_eigenvalues(&mut eigs);
    Ok(eigs)
}

/// Full complex spectrum of a dense real matrix, n <= 512.
///
/// Eigenvalues are returned sorted by (re, im); non-real values occur in
/// conjugate pairs. Fails if the QR iteration has not deflated after 30
/// sweeps per eigenvalue.
pub fn eigenvalues_dense(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = m.dim();
    if n == 0 || n > MAX_DENSE_DIM {
        return Err(NumericsError::BadDimension {
            dim: n,
            what: "eigenvalues_dense (n must be 1..=512)",
        });
    }
    if !m.is_finite() {
        return Err(NumericsError::NonFinite("eigenvalues_dense input"));
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut eigs = hqr(&mut h)?;
    sort_eigenvalues(&mut eigs);
    Ok(eigs)
}

fn sort_eigenvalues(eigs: &mut [Complex64]) {
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

/// Roots of the 2x2 characteristic polynomial with a cancellation-safe
/// split for the real case and exact conjugates for the complex one.
fn eig2(m: &DenseMatrix) -> Vec<Complex64> {
    let scale = m.max_abs();
    if scale == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    let (a, b, c, d) = (
        m.get(0, 0) / scale,
        m.get(0, 1) / scale,
        m.get(1, 0) / scale,
        m.get(1, 1) / scale,
    );
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let r1 = if tr >= 0.0 { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
        let r2 = if r1 != 0.0 { det / r1 } else { 0.0 };
        vec![
            Complex64::new(r1 * scale, 0.0),
            Complex64::new(r2 * scale, 0.0),
        ]
    } else {
        let re = tr / 2.0 * scale;
        let im = (-disc).sqrt() / 2.0 * scale;
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Closed-form 3x3 eigenvalues: depressed cubic, trigonometric branch for
/// three real roots, Cardano plus quadratic factor otherwise, then one
/// Newton polish on the characteristic polynomial.
fn eig3(m: &DenseMatrix) -> Vec<Complex64> {
    let scale = m.max_abs();
    if scale == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 3];
    }
    let a = |i: usize, j: usize| m.get(i, j) / scale;
    let c2 = a(0, 0) + a(1, 1) + a(2, 2);
    let c1 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)
        + a(1, 1) * a(2, 2)
        - a(1, 2) * a(2, 1);
    let c0 = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
        - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    // Characteristic polynomial: t^3 - c2 t^2 + c1 t - c0. The shift
    // t = s + c2/3 gives the depressed cubic s^3 + p s + qq = 0.
    let p = c1 - c2 * c2 / 3.0;
    let qq = -2.0 * c2 * c2 * c2 / 27.0 + c2 * c1 / 3.0 - c0;
    let disc = (qq / 2.0) * (qq / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);

    let poly = |z: Complex64| -> Complex64 { ((z - c2) * z + c1) * z - c0 };
    let dpoly = |z: Complex64| -> Complex64 { (3.0 * z - 2.0 * c2) * z + c1 };
    // One or two Newton steps on the characteristic polynomial, kept only if
    // they do not wander off (near-degenerate roots).
    let polish = |z: Complex64| -> Complex64 {
        let mut w = z;
        for _ in 0..2 {
            let d = dpoly(w);
            if d.norm() > 1e-30 {
                w -= poly(w) / d;
            }
        }
        if (w - z).norm() < 1e-2 * (1.0 + z.norm()) {
            w
        } else {
            z
        }
    };

    let shift = c2 / 3.0;
    let mut out = Vec::with_capacity(3);
    if disc <= 0.0 {
        // Three real roots: trigonometric form (p <= 0 here).
        let mp3 = (-p / 3.0).max(0.0);
        let r = mp3.sqrt();
        let arg = if r > 0.0 {
            (-qq / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let phi = arg.acos();
        for k in 0..3 {
            let s = 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
            let root = polish(Complex64::new(s + shift, 0.0));
            out.push(Complex64::new(root.re, 0.0));
        }
    } else {
        // One real root plus an exact conjugate pair.
        let sq = disc.sqrt();
        let u = if qq >= 0.0 {
            -cbrt(qq / 2.0 + sq)
        } else {
            cbrt(-qq / 2.0 + sq)
        };
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let s1 = u + v;
        let real_root = polish(Complex64::new(s1 + shift, 0.0));
        out.push(Complex64::new(real_root.re, 0.0));
        // Remaining quadratic factor of the depressed cubic:
        // s^2 + s1 s + (s1^2 + p) with complex roots.
        let re = -s1 / 2.0;
        let disc2 = (3.0 * s1 * s1 + 4.0 * p).max(0.0);
        let im = disc2.sqrt() / 2.0;
        let pair = polish(Complex64::new(re + shift, im));
        out.push(pair);
        out.push(pair.conj());
    }
    out.iter_mut().for_each(|z| *z *= scale);
    out
}

fn cbrt(x: f64) -> f64 {
    x.cbrt()
}

/// In-place diagonal balancing (powers of two, so exactly invertible):
/// equalizes row and column norms, which keeps eigenvalue condition numbers
/// of diagonally-similar-to-symmetric matrices near one.
fn balance(m: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = m.dim();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m.get(j, i).abs();
                    r += m.get(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 && c.is_finite() && r.is_finite() {
                let mut f = 1.0;
                let s = c + r;
                let mut g = r / RADIX;
                while c < g {
                    f *= RADIX;
                    c *= RADIX * RADIX;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= RADIX * RADIX;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        let v = m.get(i, j) * ginv;
                        m.set(i, j, v);
                    }
                    for j in 0..n {
                        let v = m.get(j, i) * f;
                        m.set(j, i, v);
                    }
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form (no transform
/// accumulation; only eigenvalues are needed).
fn hessenberg(h: &mut DenseMatrix) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    let high = n - 1;
    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h.get(i, m - 1).abs();
        }
        if scale != 0.0 {
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h.get(i, m - 1) / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = hh.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;
            // Apply Householder similarity H = (I - u u' / h) H (I - u u' / h).
            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h.get(i, j);
                }
                f /= hh;
                for i in m..=high {
                    let v = h.get(i, j) - f * ort[i];
                    h.set(i, j, v);
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h.get(i, j);
                }
                f /= hh;
                for j in m..=high {
                    let v = h.get(i, j) - f * ort[j];
                    h.set(i, j, v);
                }
            }
            h.set(m, m - 1, scale * g);
        }
    }
    // Entries below the first subdiagonal are mathematically zero; make them
    // exact so downstream reads see a clean Hessenberg matrix.
    for i in 2..n {
        for j in 0..(i - 1) {
            h.set(i, j, 0.0);
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hqr(h: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let nn = h.dim();
    let eps = f64::EPSILON;
    let mut eigs: Vec<Complex64> = Vec::with_capacity(nn);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h.get(i, j).abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); nn]);
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 30 * nn;

    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        // Look for a single small subdiagonal element.
        let mut l = nu;
        while l > 0 {
            s = h.get(l - 1, l - 1).abs() + h.get(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if h.get(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // One real root found.
            let v = h.get(nu, nu) + exshift;
            h.set(nu, nu, v);
            eigs.push(Complex64::new(v, 0.0));
            n -= 1;
            iter = 0;
        } else if l == nu - 1 {
            // Two roots: real pair or complex conjugate pair.
            w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            p = (h.get(nu - 1, nu - 1) - h.get(nu, nu)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            let v0 = h.get(nu, nu) + exshift;
            let v1 = h.get(nu - 1, nu - 1) + exshift;
            h.set(nu, nu, v0);
            h.set(nu - 1, nu - 1, v1);
            x = h.get(nu, nu);
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                let e1 = x + z;
                let e2 = if z != 0.0 { x - w / z } else { e1 };
                eigs.push(Complex64::new(e1, 0.0));
                eigs.push(Complex64::new(e2, 0.0));
            } else {
                eigs.push(Complex64::new(x + p, z));
                eigs.push(Complex64::new(x + p, -z));
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: perform one double QR sweep.
            x = h.get(nu, nu);
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h.get(nu - 1, nu - 1);
                w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            }
            // Wilkinson's original ad hoc shift.
            if iter == 10 || iter == 20 {
                exshift += x;
                for i in l..=nu {
                    let v = h.get(i, i) - x;
                    h.set(i, i, v);
                }
                s = h.get(nu, nu - 1).abs() + h.get(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;
            total_iter += 1;
            if iter > 30 || total_iter > max_total {
                return Err(NumericsError::QrNoConvergence(total_iter));
            }

            // Look for two consecutive small sub-diagonal elements.
            let mut m = nu - 2;
            loop {
                z = h.get(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h.get(m + 1, m) + h.get(m, m + 1);
                q = h.get(m + 1, m + 1) - z - r - s;
                r = h.get(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h.get(m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h.get(m - 1, m - 1).abs() + z.abs() + h.get(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h.set(i, i - 2, 0.0);
                if i > m + 2 {
                    h.set(i, i - 3, 0.0);
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h.get(k, k - 1);
                    q = h.get(k + 1, k - 1);
                    r = if notlast { h.get(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h.set(k, k - 1, -s * x);
                    } else if l != m {
                        let v = -h.get(k, k - 1);
                        h.set(k, k - 1, v);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    // Row modification.
                    for j in k..nn {
                        let mut pp = h.get(k, j) + q * h.get(k + 1, j);
                        if notlast {
                            pp += r * h.get(k + 2, j);
                            let v = h.get(k + 2, j) - pp * z;
                            h.set(k + 2, j, v);
                        }
                        let v1 = h.get(k, j) - pp * x;
                        h.set(k, j, v1);
                        let v2 = h.get(k + 1, j) - pp * y;
                        h.set(k + 1, j, v2);
                    }
                    // Column modification.
                    let i_max = nu.min(k + 3);
                    for i in 0..=i_max {
                        let mut pp = x * h.get(i, k) + y * h.get(i, k + 1);
                        if notlast {
                            pp += z * h.get(i, k + 2);
                            let v = h.get(i, k + 2) - pp * r;
                            h.set(i, k + 2, v);
                        }
                        let v1 = h.get(i, k) - pp;
                        h.set(i, k, v1);
                        let v2 = h.get(i, k + 1) - pp * q;
                        h.set(i, k + 1, v2);
                    }
                }
            }
        }
    }
    Ok(eigs)
}
