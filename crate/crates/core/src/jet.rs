//! Truncated Taylor series ("jets") for exact derivatives of weight formulas.
//!
//! A jet of order `m` at `x0` stores `c_k = f^{(k)}(x0)/k!` for `k ≤ m`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    c: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn from_coeffs(c: Vec<T>) -> Self {
        assert!(!c.is_empty(), "a jet needs at least one coefficient");
        Self { c }
    }

    pub fn constant(value: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = value;
        Self { c }
    }

    /// The identity function `x` expanded at `x0`.
    pub fn variable(x0: T, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order > 0 {
            j.c[1] = T::one();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> T {
        let mut f = T::one();
        for i in 2..=k {
            f *= T::from_usize_lossy(i);
        }
        self.c.get(k).map_or(T::zero(), |&c| c * f)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let m = order.min(self.order());
        Self { c: self.c[..=m].to_vec() }
    }

    /// Jet of the derivative (order drops by one; order 0 gives the zero jet).
    pub fn diff(&self) -> Self {
        if self.c.len() == 1 {
            return Self::constant(T::zero(), 0);
        }
        let c = (1..self.c.len()).map(|k| self.c[k] * T::from_usize_lossy(k)).collect();
        Self { c }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { c: self.c.iter().map(|&v| v * s).collect() }
    }

    pub fn add_const(&self, s: T) -> Self {
        let mut c = self.c.clone();
        c[0] += s;
        Self { c }
    }

    pub fn exp(&self) -> Self {
        let m = self.c.len();
        let mut e = vec![T::zero(); m];
        e[0] = self.c[0].exp();
        for k in 1..m {
            let mut s = T::zero();
            for j in 1..=k {
                s += T::from_usize_lossy(j) * self.c[j] * e[k - j];
            }
            e[k] = s / T::from_usize_lossy(k);
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let m = self.c.len();
        let a0 = self.c[0];
        let mut l = vec![T::zero(); m];
        l[0] = a0.ln();
        for k in 1..m {
            let mut s = T::zero();
            for j in 1..k {
                s += T::from_usize_lossy(j) * l[j] * self.c[k - j];
            }
            l[k] = (self.c[k] - s / T::from_usize_lossy(k)) / a0;
        }
        Self { c: l }
    }

    pub fn powf(&self, r: T) -> Self {
        let m = self.c.len();
        let a0 = self.c[0];
        let mut p = vec![T::zero(); m];
        p[0] = a0.powf(r);
        for k in 1..m {
            let kf = T::from_usize_lossy(k);
            let mut s = T::zero();
            for j in 1..=k {
                let jf = T::from_usize_lossy(j);
                s += ((r + T::one()) * jf - kf) * self.c[j] * p[k - j];
            }
            p[k] = s / (kf * a0);
        }
        Self { c: p }
    }

    pub fn recip(&self) -> Self {
        let m = self.c.len();
        let a0 = self.c[0];
        let mut q = vec![T::zero(); m];
        q[0] = a0.recip();
        for k in 1..m {
            let mut s = T::zero();
            for j in 1..=k {
                s += self.c[j] * q[k - j];
            }
            q[k] = -s / a0;
        }
        Self { c: q }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    /// `g ∘ self`, where `outer[k] = g^{(k)}(self.value())/k!`.
    pub fn compose(&self, outer: &[T]) -> Self {
        let m = self.order();
        let mut h = self.clone();
        h.c[0] = T::zero();
        let top = outer.len().min(m + 1);
        let mut acc = Self::constant(T::zero(), m);
        for k in (0..top).rev() {
            acc = &acc * &h;
            acc.c[0] += outer[k];
        }
        acc
    }

    /// Evaluates the truncated polynomial at offset `h` from the expansion point.
    pub fn eval_offset(&self, h: T) -> T {
        self.c.iter().rev().fold(T::zero(), |acc, &c| acc * h + c)
    }
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, o: &Jet<T>) -> Jet<T> {
        let m = self.c.len().min(o.c.len());
        Jet { c: (0..m).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, o: &Jet<T>) -> Jet<T> {
        let m = self.c.len().min(o.c.len());
        Jet { c: (0..m).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, o: &Jet<T>) -> Jet<T> {
        let m = self.c.len().min(o.c.len());
        let mut c = vec![T::zero(); m];
        for (i, &a) in self.c.iter().enumerate().take(m) {
            for (j, &b) in o.c.iter().enumerate().take(m - i) {
                c[i + j] += a * b;
            }
        }
        Jet { c }
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Real> $tr for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, o: Jet<T>) -> Jet<T> {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
