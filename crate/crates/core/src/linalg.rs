//! Eigendecomposition and exponentials of small Hermitian matrices.
//!
//! The propagator needs exp(−iHΔt) millions of times for N ≤ 4, so this uses a
//! cyclic complex Jacobi sweep on stack matrices instead of a general LAPACK path.

use num_complex::Complex64;

use crate::spin::Operator;

const MAX_SWEEPS: usize = 64;

/// H = V·diag(values)·V†, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: Operator<N>,
}

impl<const N: usize> HermitianEigen<N> {
    /// Only the upper triangle's Hermitian part is meaningful; callers are expected
    /// to have validated Hermiticity.
    pub fn new(h: &Operator<N>) -> Self {
        let mut a = *h;
        let mut v = Operator::<N>::identity();
        let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);

        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..N {
                for q in p + 1..N {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off <= 1e-32 * scale {
                break;
            }
            for p in 0..N {
                for q in p + 1..N {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut values = [0.0; N];
        for (k, val) in values.iter_mut().enumerate() {
            *val = a[(k, k)].re;
        }
        Self { values, vectors: v }
    }

    pub fn sorted_values(&self) -> [f64; N] {
        let mut vals = self.values;
        vals.sort_by(|x, y| x.total_cmp(y));
        vals
    }

    /// V·diag(f(λ))·V†.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> Operator<N> {
        let weights: [Complex64; N] = std::array::from_fn(|k| f(self.values[k]));
        let v = &self.vectors;
        Operator::<N>::from_fn(|i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..N {
                acc += v[(i, k)] * weights[k] * v[(j, k)].conj();
            }
            acc
        })
    }
}

/// One complex Jacobi rotation zeroing a[(p, q)].
#[inline]
fn rotate<const N: usize>(a: &mut Operator<N>, v: &mut Operator<N>, p: usize, q: usize) {
    let b = a[(p, q)];
    let mag = b.norm();
    if mag < 1e-300 {
        return;
    }
    // Phase that makes the (p, q) element real, followed by a real rotation.
    let phase = b.conj() / mag; // e^{-iφ}
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let gqp = -phase * s;
    let gqq = phase * c;

    for k in 0..N {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * gqp;
        a[(k, q)] = akp * s + akq * gqq;
    }
    for k in 0..N {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * gqp.conj();
        a[(q, k)] = apk * s + aqk * gqq.conj();
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..N {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * gqp;
        v[(k, q)] = vkp * s + vkq * gqq;
    }
}

/// exp(−i·H·dt) for Hermitian H.
pub fn unitary_propagator<const N: usize>(h: &Operator<N>, dt: f64) -> Operator<N> {
    if N == 2 {
        return su2_propagator(h, dt);
    }
    HermitianEigen::new(h).map(|lambda| Complex64::from_polar(1.0, -lambda * dt))
}

/// Closed form for N = 2: H = h0·1 + h·σ.
fn su2_propagator<const N: usize>(h: &Operator<N>, dt: f64) -> Operator<N> {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let h0 = 0.5 * (a + d);
    let (hx, hy, hz) = (b.re, -b.im, 0.5 * (a - d));
    let norm = (hx * hx + hy * hy + hz * hz).sqrt();
    let angle = norm * dt;
    let (sin, cos) = angle.sin_cos();
    // sin(|h|dt)/|h|, finite as |h| -> 0
    let sinc = if norm > 1e-300 { sin / norm } else { dt };
    let g = Complex64::from_polar(1.0, -h0 * dt);
    let i = Complex64::new(0.0, 1.0);
    let mut u = Operator::<N>::zeros();
    u[(0, 0)] = g * Complex64::new(cos, -sinc * hz);
    u[(1, 1)] = g * Complex64::new(cos, sinc * hz);
    // -i·sinc·(hx·σx + hy·σy): off-diagonals -i·sinc·(hx ∓ i·hy)
    u[(0, 1)] = g * (-i * sinc) * Complex64::new(hx, -hy);
    u[(1, 0)] = g * (-i * sinc) * Complex64::new(hx, hy);
    u
}
