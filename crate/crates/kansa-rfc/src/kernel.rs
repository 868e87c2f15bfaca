//! MultiQuadric radial basis function and its analytic derivative
//! quantities.
//!
//! All radial quantities are computed from closed forms in `t = (εr)²`,
//! never by dividing by `r`, so that `r = 0` (a center coinciding with a
//! collocation point) is handled without special cases.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum KernelError {
    #[error("shape parameter must be positive and finite")]
    NonPositiveEpsilon,
    #[error("radius must be nonnegative and finite")]
    InvalidRadius,
}

/// Point in `D`-dimensional space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T, const D: usize> {
    pub coords: [T; D],
}

impl<T: Real, const D: usize> Point<T, D> {
    pub fn new(coords: [T; D]) -> Self {
        Self { coords }
    }

    /// Componentwise `self - other`.
    pub fn diff(&self, other: &Self) -> [T; D] {
        let mut out = [T::zero(); D];
        for (o, (a, b)) in out.iter_mut().zip(self.coords.iter().zip(&other.coords)) {
            *o = *a - *b;
        }
        out
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &Self) -> T {
        let d = self.diff(other);
        d.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

/// Inner product of two `D`-vectors.
pub fn dot<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm of a `D`-vector.
pub fn norm<T: Real, const D: usize>(a: &[T; D]) -> T {
    dot(a, a).sqrt()
}

/// MultiQuadric kernel `φ(r) = √(1 + (εr)²)` with shape parameter `ε > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MQKernel<T> {
    epsilon: T,
}

impl<T: Real> MQKernel<T> {
    pub fn new(epsilon: T) -> Result<Self, KernelError> {
        if !(epsilon.is_finite() && epsilon > T::zero()) {
            return Err(KernelError::NonPositiveEpsilon);
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    fn check_radius(r: T) -> Result<(), KernelError> {
        if !(r.is_finite() && r >= T::zero()) {
            return Err(KernelError::InvalidRadius);
        }
        Ok(())
    }

    /// `√(1 + (εr)²)`, the root of the shifted squared radius.
    fn root(&self, r: T) -> T {
        let er = self.epsilon * r;
        (T::one() + er * er).sqrt()
    }

    /// `φ(r) = √(1 + (εr)²)`.
    pub fn phi(&self, r: T) -> Result<T, KernelError> {
        Self::check_radius(r)?;
        Ok(self.root(r))
    }

    /// `φ'(r)/r = ε² (1 + (εr)²)^{-1/2}`.
    ///
    /// Finite at `r = 0` by the closed form; equals `ε²` there.
    pub fn phi_prime_over_r(&self, r: T) -> Result<T, KernelError> {
        Self::check_radius(r)?;
        Ok(self.epsilon * self.epsilon / self.root(r))
    }

    /// `φ''(r) = -ε⁴ r² (1 + (εr)²)^{-3/2} + ε² (1 + (εr)²)^{-1/2}`.
    pub fn phi_second(&self, r: T) -> Result<T, KernelError> {
        Self::check_radius(r)?;
        let e2 = self.epsilon * self.epsilon;
        let s = self.root(r);
        Ok(e2 / s - e2 * e2 * r * r / (s * s * s))
    }

    /// `∇φ_C(P) = (P - C) φ'(r)/r`, `r = ‖P - C‖`.
    pub fn gradient_phi<const D: usize>(
        &self,
        center: &Point<T, D>,
        p: &Point<T, D>,
    ) -> Result<[T; D], KernelError> {
        let mut diff = p.diff(center);
        let ppr = self.phi_prime_over_r(norm(&diff))?;
        for c in &mut diff {
            *c *= ppr;
        }
        Ok(diff)
    }

    /// `Δφ_C(P) = φ''(r) + (d - 1) φ'(r)/r`, `r = ‖P - C‖`.
    pub fn laplacian_phi<const D: usize>(
        &self,
        center: &Point<T, D>,
        p: &Point<T, D>,
    ) -> Result<T, KernelError> {
        let r = p.distance(center);
        let dim_minus_one = T::from_usize(D - 1).expect("dimension fits scalar");
        Ok(self.phi_second(r)? + dim_minus_one * self.phi_prime_over_r(r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k(eps: f64) -> MQKernel<f64> {
        MQKernel::new(eps).unwrap()
    }

    #[test]
    fn phi_values() {
        assert_eq!(k(2.5).phi(0.0).unwrap(), 1.0);
        assert_relative_eq!(k(2.5).phi(1.0).unwrap(), 7.25f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(k(1.0).phi(1.0).unwrap(), 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn phi_prime_over_r_values() {
        assert_eq!(k(2.5).phi_prime_over_r(0.0).unwrap(), 6.25);
        assert_relative_eq!(
            k(1.0).phi_prime_over_r(1.0).unwrap(),
            1.0 / 2.0f64.sqrt(),
            max_relative = 1e-15
        );
        // monotone decay towards zero
        assert!(k(1.0).phi_prime_over_r(1e8).unwrap() < 1e-7);
    }

    #[test]
    fn phi_second_values() {
        assert_eq!(k(2.5).phi_second(0.0).unwrap(), 6.25);
        assert_relative_eq!(
            k(1.0).phi_second(1.0).unwrap(),
            1.0 / (2.0 * 2.0f64.sqrt()),
            max_relative = 1e-14
        );
        // second central difference of phi at r=2
        let kern = k(1.0);
        let h = 1e-4;
        let fd = (kern.phi(2.0 + h).unwrap() - 2.0 * kern.phi(2.0).unwrap()
            + kern.phi(2.0 - h).unwrap())
            / (h * h);
        let exact = -4.0 * 5.0f64.powf(-1.5) + 5.0f64.powf(-0.5);
        assert_relative_eq!(kern.phi_second(2.0).unwrap(), exact, max_relative = 1e-14);
        assert_relative_eq!(kern.phi_second(2.0).unwrap(), fd, max_relative = 1e-5);
    }

    #[test]
    fn gradient_values() {
        let zero = Point::new([0.0, 0.0]);
        let g = k(2.5).gradient_phi(&zero, &zero).unwrap();
        assert_eq!(g, [0.0, 0.0]);

        let g = k(1.0).gradient_phi(&zero, &Point::new([1.0, 0.0])).unwrap();
        assert_relative_eq!(g[0], 1.0 / 2.0f64.sqrt(), max_relative = 1e-15);
        assert_eq!(g[1], 0.0);

        let p = Point::new([0.3, 0.4]);
        let g = k(1.0).gradient_phi(&zero, &p).unwrap();
        let scale = 1.25f64.powf(-0.5);
        assert_relative_eq!(g[0], 0.3 * scale, max_relative = 1e-14);
        assert_relative_eq!(g[1], 0.4 * scale, max_relative = 1e-14);

        // central differences of phi_C component by component
        let kern = k(1.0);
        let h = 1e-6;
        for axis in 0..2 {
            let mut hi = p;
            let mut lo = p;
            hi.coords[axis] += h;
            lo.coords[axis] -= h;
            let fd = (kern.phi(hi.distance(&zero)).unwrap() - kern.phi(lo.distance(&zero)).unwrap())
                / (2.0 * h);
            assert_relative_eq!(g[axis], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn laplacian_values() {
        let c = Point::new([0.5, 0.5]);
        assert_eq!(k(2.5).laplacian_phi(&c, &c).unwrap(), 12.5);

        let zero = Point::new([0.0, 0.0]);
        let p = Point::new([1.0, 0.0]);
        assert_relative_eq!(
            k(1.0).laplacian_phi(&zero, &p).unwrap(),
            1.0 / (2.0 * 2.0f64.sqrt()) + 1.0 / 2.0f64.sqrt(),
            max_relative = 1e-14
        );

        // 3D at r=1 against a finite-difference Laplacian of phi_C
        let c3 = Point::new([0.0, 0.0, 0.0]);
        let p3 = Point::new([1.0, 0.0, 0.0]);
        let kern = k(1.0);
        let lap = kern.laplacian_phi(&c3, &p3).unwrap();
        assert_relative_eq!(
            lap,
            1.0 / (2.0 * 2.0f64.sqrt()) + 2.0 / 2.0f64.sqrt(),
            max_relative = 1e-14
        );
        let h = 1e-4;
        let mut fd = 0.0;
        for axis in 0..3 {
            let mut hi = p3;
            let mut lo = p3;
            hi.coords[axis] += h;
            lo.coords[axis] -= h;
            fd += (kern.phi(hi.distance(&c3)).unwrap() - 2.0 * kern.phi(1.0).unwrap()
                + kern.phi(lo.distance(&c3)).unwrap())
                / (h * h);
        }
        assert_relative_eq!(lap, fd, max_relative = 1e-5);
    }

    #[test]
    fn removable_singularity_near_zero() {
        let kern = k(2.5);
        assert_eq!(
            kern.phi_prime_over_r(1e-300).unwrap(),
            kern.phi_prime_over_r(0.0).unwrap()
        );
        assert_eq!(kern.phi_second(1e-300).unwrap(), kern.phi_second(0.0).unwrap());
    }

    #[test]
    fn basic_bounds() {
        let kern = k(1.7);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let r = 0.05 * i as f64;
            assert!(kern.phi(r).unwrap() >= 1.0);
            let ppr = kern.phi_prime_over_r(r).unwrap();
            assert!(ppr > 0.0 && ppr <= kern.epsilon() * kern.epsilon());
            assert!(ppr <= prev);
            prev = ppr;
        }
    }

    #[test]
    fn domain_errors() {
        assert_eq!(k(1.0).phi(-0.1), Err(KernelError::InvalidRadius));
        assert_eq!(k(1.0).phi(f64::NAN), Err(KernelError::InvalidRadius));
        assert_eq!(k(1.0).phi_prime_over_r(-1.0), Err(KernelError::InvalidRadius));
        assert_eq!(k(1.0).phi_second(-1.0), Err(KernelError::InvalidRadius));
        assert_eq!(MQKernel::<f64>::new(0.0), Err(KernelError::NonPositiveEpsilon));
        assert_eq!(MQKernel::<f64>::new(-2.0), Err(KernelError::NonPositiveEpsilon));
    }
}
