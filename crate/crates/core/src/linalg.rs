//! Determinants, Vandermonde products and confluent divided differences.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;
use num_traits::Zero;
use num_traits::Num;

use crate::Real;

/// `∏_{b<c} (a_c − a_b)`; the empty product for `n ≤ 1`.
pub fn vandermonde<T: Clone + Num>(a: &[T]) -> T {
    let mut p = T::one();
    for c in 1..a.len() {
        for b in 0..c {
            p = p * (a[c].clone() - a[b].clone());
        }
    }
    p
}

pub fn det<T: ComplexField>(m: DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::one();
    }
    m.determinant()
}

/// Determinant as `phase · exp(log_abs)`, robust against overflow of the product.
#[derive(Debug, Clone, Copy)]
pub struct LogDet<T: ComplexField> {
    pub phase: T,
    pub log_abs: T::RealField,
}

impl<T: ComplexField> LogDet<T> {
    pub fn value(&self) -> T {
        self.phase.clone() * T::from_real(self.log_abs.clone().exp())
    }
}

pub fn log_det<T: ComplexField>(m: DMatrix<T>) -> LogDet<T> {
    let n = m.nrows();
    if n == 0 {
        return LogDet { phase: T::one(), log_abs: T::RealField::zero() };
    }
    let lu = m.lu();
    let mut phase = lu.p().determinant::<T>();
    let mut log_abs = T::RealField::zero();
    let u = lu.u();
    for i in 0..n {
        let d = u[(i, i)].clone();
        let r = d.clone().modulus();
        if r == T::RealField::zero() {
            return LogDet { phase: T::zero(), log_abs: T::RealField::zero() };
        }
        log_abs += r.clone().ln();
        phase *= d.unscale(r);
    }
    LogDet { phase, log_abs }
}



/// Newton coefficients `f[z_0], f[z_0,z_1], …, f[z_0,…,z_{m-1}]`.
///
/// Equal nodes must be adjacent; for a run of equal nodes the callback is
/// asked for `deriv(i, k) = f^{(k)}(z_i)` and the table uses `f^{(k)}/k!`.
pub fn hermite_dd<C, F>(nodes: &[C], mut deriv: F) -> Vec<C>
where
    C: ComplexField + Copy,
    F: FnMut(usize, usize) -> C,
{
    let m = nodes.len();
    let mut d: Vec<C> = (0..m).map(|i| deriv(i, 0)).collect();
    let mut fact = C::one();
    for l in 1..m {
        fact *= C::from_real(nalgebra::convert::<f64, C::RealField>(l as f64));
        for i in (l..m).rev() {
            let dz = nodes[i] - nodes[i - l];
            d[i] = if dz == C::zero() { deriv(i - l, l) / fact } else { (d[i] - d[i - 1]) / dz };
        }
    }
    d
}

/// Sorts nodes and snaps points closer than `rel_tol·max(1,|z|)` onto a
/// common representative. Returns the new node list and a flag telling
/// whether any snapping happened.
pub fn coalesce<T: Real>(nodes: &[Complex<T>], rel_tol: T) -> (Vec<Complex<T>>, bool) {
    let mut z = nodes.to_vec();
    z.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut merged = false;
    // Group by proximity to the first member of the current run.
    let mut out: Vec<Complex<T>> = Vec::with_capacity(z.len());
    let mut placed = vec![false; z.len()];
    for i in 0..z.len() {
        if placed[i] {
            continue;
        }
        let rep = z[i];
        let tol = rel_tol * T::one().max(rep.norm());
        out.push(rep);
        placed[i] = true;
        for j in (i + 1)..z.len() {
            if !placed[j] && (z[j] - rep).norm() <= tol {
                out.push(rep);
                placed[j] = true;
                merged = true;
            }
        }
    }
    (out, merged)
}
