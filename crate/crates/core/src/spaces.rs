//! The five matrix spaces, their spectral maps and constants.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::vandermonde;
use crate::special::gamma;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    /// GL(n, ℂ) with squared singular values.
    G,
    /// Hermitian n×n matrices with eigenvalues.
    H2,
    /// Complex n×(n+ν) matrices in chiral embedding.
    Mnu,
    /// Imaginary antisymmetric 2n×2n matrices.
    H1Even,
    /// Imaginary antisymmetric (2n+1)×(2n+1) matrices.
    H1Odd,
    /// Hermitian anti-self-dual 2n×2n matrices.
    H4,
}

impl SpaceKind {
    /// Spaces whose spectral data are squared singular values with a Bessel-type operator.
    pub fn is_chiral(self) -> bool {
        matches!(self, Self::Mnu | Self::H1Even | Self::H1Odd | Self::H4)
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::G => "G",
            Self::H2 => "H2",
            Self::Mnu => "M",
            Self::H1Even => "H1even",
            Self::H1Odd => "H1odd",
            Self::H4 => "H4",
        };
        f.write_str(s)
    }
}

/// Chirality index ν, kept exact as twice its value (ν ∈ ℕ₀ ∪ {±1/2}).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nu {
    twice: i32,
}

impl Nu {
    pub const ZERO: Nu = Nu { twice: 0 };
    pub const HALF: Nu = Nu { twice: 1 };
    pub const MINUS_HALF: Nu = Nu { twice: -1 };

    pub const fn integer(k: u32) -> Self {
        Nu { twice: 2 * k as i32 }
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn as_integer(self) -> Option<u32> {
        (self.twice >= 0 && self.twice % 2 == 0).then_some((self.twice / 2) as u32)
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixSpace {
    kind: SpaceKind,
    n: usize,
    nu: Nu,
}

impl MatrixSpace {
    pub fn new(kind: SpaceKind, n: usize, nu: Nu) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let ok = match kind {
            SpaceKind::G | SpaceKind::H2 => nu == Nu::ZERO,
            SpaceKind::Mnu => nu.as_integer().is_some(),
            SpaceKind::H1Even => nu == Nu::MINUS_HALF,
            SpaceKind::H1Odd | SpaceKind::H4 => nu == Nu::HALF,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("ν = {nu} is inconsistent with space {kind}")));
        }
        Ok(Self { kind, n, nu })
    }

    /// Builds a space with the ν that the kind dictates (`nu` only matters for Mν).
    pub fn of_kind(kind: SpaceKind, n: usize, nu: u32) -> Result<Self> {
        let nu = match kind {
            SpaceKind::G | SpaceKind::H2 => Nu::ZERO,
            SpaceKind::Mnu => Nu::integer(nu),
            SpaceKind::H1Even => Nu::MINUS_HALF,
            SpaceKind::H1Odd | SpaceKind::H4 => Nu::HALF,
        };
        Self::new(kind, n, nu)
    }

    pub fn gl(n: usize) -> Self {
        Self { kind: SpaceKind::G, n: n.max(1), nu: Nu::ZERO }
    }

    pub fn hermitian(n: usize) -> Self {
        Self { kind: SpaceKind::H2, n: n.max(1), nu: Nu::ZERO }
    }

    pub fn chiral(n: usize, nu: u32) -> Self {
        Self { kind: SpaceKind::Mnu, n: n.max(1), nu: Nu::integer(nu) }
    }

    pub fn antisymmetric_even(n: usize) -> Self {
        Self { kind: SpaceKind::H1Even, n: n.max(1), nu: Nu::MINUS_HALF }
    }

    pub fn antisymmetric_odd(n: usize) -> Self {
        Self { kind: SpaceKind::H1Odd, n: n.max(1), nu: Nu::HALF }
    }

    pub fn self_dual(n: usize) -> Self {
        Self { kind: SpaceKind::H4, n: n.max(1), nu: Nu::HALF }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> Nu {
        self.nu
    }

    /// Same kind and ν with a different number of eigenvalues.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n: n.max(1), ..*self }
    }

    /// Side length of the matrices the space is made of.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            SpaceKind::G | SpaceKind::H2 => self.n,
            SpaceKind::Mnu => 2 * self.n + self.nu.as_integer().unwrap_or(0) as usize,
            SpaceKind::H1Even | SpaceKind::H4 => 2 * self.n,
            SpaceKind::H1Odd => 2 * self.n + 1,
        }
    }

    /// Derivative order consumed by one application of the space's operator.
    pub fn operator_order(&self) -> usize {
        if self.kind.is_chiral() {
            2
        } else {
            1
        }
    }

    /// The constant `C_M` of the spectral map.
    pub fn constant<T: Real>(&self) -> T {
        let n = self.n;
        let mut fact_n = 1.0;
        for i in 2..=n {
            fact_n *= i as f64;
        }
        let pi = std::f64::consts::PI;
        let star = |nu: f64| {
            let mut p = 1.0 / fact_n;
            let mut jf = 1.0;
            for j in 0..n {
                if j > 0 {
                    jf *= j as f64;
                }
                p *= pi.powf(2.0 * j as f64 + nu + 1.0) / (gamma(j as f64 + nu + 1.0) * jf);
            }
            p
        };
        let c = match self.kind {
            SpaceKind::H2 => {
                let mut p = 1.0 / fact_n;
                let mut jf = 1.0;
                for j in 0..n {
                    if j > 0 {
                        jf *= j as f64;
                    }
                    p *= pi.powi(j as i32) / jf;
                }
                p
            }
            SpaceKind::G => star(0.0),
            SpaceKind::Mnu | SpaceKind::H1Even | SpaceKind::H1Odd => star(self.nu.value()),
            SpaceKind::H4 => star(self.nu.value()) / 2f64.powi((n * (n - 1)) as i32),
        };
        T::lit(c)
    }
}

impl fmt::Display for MatrixSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Mnu => write!(f, "M{}(n={})", self.nu, self.n),
            k => write!(f, "{k}(n={})", self.n),
        }
    }
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "gl" => Ok(Self::G),
            "h2" | "hermitian" => Ok(Self::H2),
            "m" | "mnu" | "chiral" => Ok(Self::Mnu),
            "h1even" | "h1e" => Ok(Self::H1Even),
            "h1odd" | "h1o" => Ok(Self::H1Odd),
            "h4" => Ok(Self::H4),
            other => Err(Error::InvalidParameter(format!("unknown space '{other}'"))),
        }
    }
}

/// Eigenvalues (H2) or squared singular values (other kinds), stored ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    values: Vec<f64>,
}

impl SpectralPoint {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Self { values }
    }

    /// Validates length and positivity against a space.
    pub fn for_space(values: Vec<f64>, space: &MatrixSpace) -> Result<Self> {
        if values.len() != space.n() {
            return Err(Error::InvalidParameter(format!("expected {} spectral values, got {}", space.n(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("spectral values must be finite".into()));
        }
        if space.kind() != SpaceKind::H2 && values.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter(format!("{} needs positive spectral values", space.kind())));
        }
        Ok(Self::new(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `C_M (det a)^ν f_M(repr(a)) Δ_n(a)²`.
///
/// `f_m` receives the diagonal entries of the representative: `a` for H2,
/// `√a` for G, and `a` for the chiral kinds (whose representative is `ι_M(a)`).
pub fn spectral_map<F: Fn(&[f64]) -> f64>(space: &MatrixSpace, f_m: F, a: &SpectralPoint) -> Result<f64> {
    let a = SpectralPoint::for_space(a.values().to_vec(), space)?;
    let v = vandermonde(a.values());
    let c: f64 = space.constant();
    let value = match space.kind() {
        SpaceKind::H2 => c * f_m(a.values()) * v * v,
        SpaceKind::G => {
            let root: Vec<f64> = a.values().iter().map(|x| x.sqrt()).collect();
            c * f_m(&root) * v * v
        }
        _ => {
            let det: f64 = a.values().iter().product();
            c * det.powf(space.nu().value()) * f_m(a.values()) * v * v
        }
    };
    Ok(value)
}

/// The representative `ι_M(a)` as a Hermitian matrix in the ambient dimension.
pub fn embed_iota(space: &MatrixSpace, a: &SpectralPoint) -> Result<DMatrix<Complex64>> {
    let a = SpectralPoint::for_space(a.values().to_vec(), space)?;
    let n = space.n();
    let d = space.ambient_dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    let i = Complex64::i();
    match space.kind() {
        SpaceKind::G | SpaceKind::H2 => {
            return Err(Error::IncompatibleSpace(format!("{} has no chiral embedding", space.kind())));
        }
        SpaceKind::Mnu => {
            for (j, &x) in a.values().iter().enumerate() {
                let r = Complex64::new(x.sqrt(), 0.0);
                m[(j, n + j)] = r;
                m[(n + j, j)] = r;
            }
        }
        SpaceKind::H1Even | SpaceKind::H1Odd => {
            for (j, &x) in a.values().iter().enumerate() {
                let r = x.sqrt();
                m[(2 * j, 2 * j + 1)] = -i * r;
                m[(2 * j + 1, 2 * j)] = i * r;
            }
        }
        SpaceKind::H4 => {
            for (j, &x) in a.values().iter().enumerate() {
                let r = x.sqrt();
                m[(2 * j, 2 * j)] = Complex64::new(r, 0.0);
                m[(2 * j + 1, 2 * j + 1)] = Complex64::new(-r, 0.0);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_box, QuadratureSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constants_match_closed_products() {
        assert_relative_eq!(MatrixSpace::hermitian(2).constant::<f64>(), PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(MatrixSpace::gl(1).constant::<f64>(), PI, max_relative = 1e-15);
        assert_relative_eq!(MatrixSpace::chiral(1, 1).constant::<f64>(), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(MatrixSpace::hermitian(2).constant::<f32>(), std::f32::consts::PI / 2.0, max_relative = 1e-6);
        // H4 carries an extra 2^{-n(n-1)} relative to the chiral constant with ν = 1/2.
        let h4 = MatrixSpace::self_dual(3).constant::<f64>();
        let h1 = MatrixSpace::antisymmetric_odd(3).constant::<f64>();
        assert_relative_eq!(h4 * 64.0, h1, max_relative = 1e-14);
    }

    #[test]
    fn nu_is_checked() {
        assert!(MatrixSpace::new(SpaceKind::H4, 2, Nu::MINUS_HALF).is_err());
        assert!(MatrixSpace::new(SpaceKind::Mnu, 2, Nu::HALF).is_err());
        assert!(MatrixSpace::new(SpaceKind::H1Even, 2, Nu::MINUS_HALF).is_ok());
        assert_eq!(MatrixSpace::chiral(2, 3).ambient_dim(), 7);
        assert_eq!(MatrixSpace::antisymmetric_odd(2).ambient_dim(), 5);
    }

    #[test]
    fn spectral_map_examples() {
        let a = SpectralPoint::new(vec![0.0]);
        let gauss = |y: &[f64]| (-y[0] * y[0] / 2.0).exp() / (2.0 * PI).sqrt();
        assert_relative_eq!(spectral_map(&MatrixSpace::hermitian(1), gauss, &a).unwrap(), 1.0 / (2.0 * PI).sqrt());
        let g = |r: &[f64]| (-r[0] * r[0]).exp() / PI;
        let v = spectral_map(&MatrixSpace::gl(1), g, &SpectralPoint::new(vec![1.0])).unwrap();
        assert_relative_eq!(v, (-1f64).exp(), max_relative = 1e-15);
        let c = 0.37;
        let v = spectral_map(&MatrixSpace::chiral(1, 1), |_| c, &SpectralPoint::new(vec![2.0])).unwrap();
        assert_relative_eq!(v, PI * PI * 2.0 * c, max_relative = 1e-15);
        assert!(spectral_map(&MatrixSpace::gl(1), g, &SpectralPoint::new(vec![-1.0])).is_err());
    }

    // Gaussian matrix densities e^{-tr Y²/2}/Z normalized on the full space must
    // map to probability densities. Z is the flat Lebesgue normalizer.
    #[test]
    fn spectral_map_preserves_normalization() {
        let spec = QuadratureSpec::default().with_tol(1e-11, 1e-9);
        let inf = f64::INFINITY;
        // H2, n = 2: Z = (2π)^{n/2} π^{n(n-1)/2}
        let h2 = MatrixSpace::hermitian(2);
        let z = 2.0 * PI * PI;
        let f = |p: &[f64]| spectral_map(&h2, |y| (-(y[0] * y[0] + y[1] * y[1]) / 2.0).exp() / z, &SpectralPoint::new(p.to_vec())).unwrap();
        let tot = integrate_box(&f, &[(-inf, inf), (-inf, inf)], &spec).unwrap().value;
        assert_relative_eq!(tot, 1.0, max_relative = 1e-8);
        // Mν with tr Y² = 2 tr XX*: density e^{-Σ a} / π^{n(n+ν)} on the X entries.
        for nu in 0..3u32 {
            let m = MatrixSpace::chiral(1, nu);
            let z = PI.powi(1 + nu as i32);
            let f = |x: f64| spectral_map(&m, |a| (-a[0]).exp() / z, &SpectralPoint::new(vec![x])).unwrap();
            let tot = integrate(f, 0.0, inf, &spec).unwrap().value;
            assert_relative_eq!(tot, 1.0, max_relative = 1e-8);
        }
        // H1 even, n = 1: Y = iA with A = [[0,t],[-t,0]], one real parameter t, a = t².
        let h1 = MatrixSpace::antisymmetric_even(1);
        let f = |x: f64| spectral_map(&h1, |a| (-a[0]).exp() / PI.sqrt(), &SpectralPoint::new(vec![x])).unwrap();
        assert_relative_eq!(integrate(f, 0.0, inf, &spec).unwrap().value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn embedding_examples() {
        let m = embed_iota(&MatrixSpace::antisymmetric_even(1), &SpectralPoint::new(vec![4.0])).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, -2.0));
        assert_eq!(m[(1, 0)], Complex64::new(0.0, 2.0));
        let m = embed_iota(&MatrixSpace::self_dual(1), &SpectralPoint::new(vec![1.0])).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], Complex64::new(-1.0, 0.0));
        let m = embed_iota(&MatrixSpace::chiral(1, 1), &SpectralPoint::new(vec![9.0])).unwrap();
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        assert_relative_eq!(ev[0], -3.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(ev[2], 3.0, epsilon = 1e-12);
        assert!(embed_iota(&MatrixSpace::gl(1), &SpectralPoint::new(vec![1.0])).is_err());
    }

    #[test]
    fn embedding_squares_to_doubled_spectrum() {
        let a = SpectralPoint::new(vec![0.5, 2.0]);
        for space in [MatrixSpace::chiral(2, 1), MatrixSpace::antisymmetric_even(2), MatrixSpace::antisymmetric_odd(2), MatrixSpace::self_dual(2)] {
            let m = embed_iota(&space, &a).unwrap();
            assert!((&m - m.adjoint()).camax() < 1e-15);
            let sq = &m * &m;
            let mut ev: Vec<f64> = sq.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            let zeros = space.ambient_dim() - 4;
            for (k, e) in ev.iter().enumerate().take(zeros) {
                assert!(e.abs() < 1e-12, "{space}: eigenvalue {k} = {e}");
            }
            let rest = &ev[zeros..];
            for (got, want) in rest.iter().zip([0.5, 0.5, 2.0, 2.0]) {
                assert_relative_eq!(*got, want, max_relative = 1e-12);
            }
        }
    }
}
