//! Collocation operators for the convection-diffusion problem, the unit
//! square geometry with its Dirichlet/Neumann boundary split, and the
//! manufactured reference solution with its induced data.
//!
//! The problem is `Δu + <∇u, v> = f` in `Ω = (0,1)²` with
//! `u = g` on the vertical edges (Γ1, Dirichlet, corners included) and
//! `∂u/∂ν = g` on the open horizontal edges (Γ2, Neumann).

use std::sync::Arc;

use thiserror::Error;

use crate::kernel::{dot, norm, KernelError, MQKernel, Point};
use crate::scalar::Real;

/// Tolerance used to decide boundary membership for user-supplied points.
/// Grid points are classified by index and never go through this path.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum OperatorError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("Neumann operator requires a unit normal")]
    NonUnitNormal,
    #[error("point is not on the boundary of the unit square")]
    NotOnBoundary,
}

/// Dirichlet (Γ1) or Neumann (Γ2) boundary portion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        }
    }
}

/// Velocity field of the convection term, constant or position dependent.
#[derive(Clone)]
pub enum VelocityField<T, const D: usize> {
    Constant([T; D]),
    Callable(Arc<dyn Fn(&Point<T, D>) -> [T; D] + Send + Sync>),
}

impl<T: Real, const D: usize> VelocityField<T, D> {
    pub fn eval(&self, p: &Point<T, D>) -> [T; D] {
        match self {
            VelocityField::Constant(v) => *v,
            VelocityField::Callable(f) => f(p),
        }
    }
}

impl<T: std::fmt::Debug, const D: usize> std::fmt::Debug for VelocityField<T, D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VelocityField::Constant(v) => write!(f, "Constant({v:?})"),
            VelocityField::Callable(_) => write!(f, "Callable(..)"),
        }
    }
}

/// `Lφ_C(P) = φ''(r) + (d - 1 + <P - C, v(P)>) φ'(r)/r`, `r = ‖P - C‖`.
pub fn l_phi<T: Real, const D: usize>(
    kernel: &MQKernel<T>,
    center: &Point<T, D>,
    p: &Point<T, D>,
    velocity: &VelocityField<T, D>,
) -> Result<T, KernelError> {
    let diff = p.diff(center);
    let r = norm(&diff);
    let v = velocity.eval(p);
    let dim_minus_one = T::from_usize(D - 1).expect("dimension fits scalar");
    Ok(kernel.phi_second(r)? + (dim_minus_one + dot(&diff, &v)) * kernel.phi_prime_over_r(r)?)
}

/// `Bφ_C(P)`: `φ(r)` on Γ1, `<P - C, ν> φ'(r)/r` on Γ2.
pub fn b_phi<T: Real, const D: usize>(
    kernel: &MQKernel<T>,
    center: &Point<T, D>,
    p: &Point<T, D>,
    tag: BoundaryTag,
    normal: &[T; D],
) -> Result<T, OperatorError> {
    let diff = p.diff(center);
    let r = norm(&diff);
    match tag {
        BoundaryTag::Dirichlet => Ok(kernel.phi(r)?),
        BoundaryTag::Neumann => {
            let tol = T::from_f64_lossy(1e-12);
            if (norm(normal) - T::one()).abs() > tol {
                return Err(OperatorError::NonUnitNormal);
            }
            Ok(dot(&diff, normal) * kernel.phi_prime_over_r(r)?)
        }
    }
}

/// The fixed domain `Ω = (0,1)²` with the mixed boundary split.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitSquareDomain;

impl UnitSquareDomain {
    pub fn is_interior<T: Real>(&self, p: &Point<T, 2>) -> bool {
        let [x1, x2] = p.coords;
        let lo = T::from_f64_lossy(BOUNDARY_TOL);
        let hi = T::one() - lo;
        x1 > lo && x1 < hi && x2 > lo && x2 < hi
    }

    pub fn on_boundary<T: Real>(&self, p: &Point<T, 2>) -> bool {
        let [x1, x2] = p.coords;
        let tol = T::from_f64_lossy(BOUNDARY_TOL);
        let near = |c: T, v: f64| (c - T::from_f64_lossy(v)).abs() <= tol;
        let inside = |c: T| c >= -tol && c <= T::one() + tol;
        (near(x1, 0.0) || near(x1, 1.0) || near(x2, 0.0) || near(x2, 1.0))
            && inside(x1)
            && inside(x2)
    }

    /// Boundary tag and outward unit normal for a boundary point.
    ///
    /// The vertical edges `x1 ∈ {0, 1}` are Dirichlet with corners
    /// included; the open horizontal edges are Neumann.
    pub fn classify_boundary_point<T: Real>(
        &self,
        p: &Point<T, 2>,
    ) -> Result<(BoundaryTag, [T; 2]), OperatorError> {
        if !self.on_boundary(p) {
            return Err(OperatorError::NotOnBoundary);
        }
        let [x1, x2] = p.coords;
        let tol = T::from_f64_lossy(BOUNDARY_TOL);
        let near = |c: T, v: f64| (c - T::from_f64_lossy(v)).abs() <= tol;
        if near(x1, 0.0) {
            Ok((BoundaryTag::Dirichlet, [-T::one(), T::zero()]))
        } else if near(x1, 1.0) {
            Ok((BoundaryTag::Dirichlet, [T::one(), T::zero()]))
        } else if near(x2, 0.0) {
            Ok((BoundaryTag::Neumann, [T::zero(), -T::one()]))
        } else {
            Ok((BoundaryTag::Neumann, [T::zero(), T::one()]))
        }
    }
}

/// Reference solution `u(x1, x2) = sin(2π x1) + cos(2π x2)`.
pub fn reference_solution<T: Real>(p: &Point<T, 2>) -> T {
    let two_pi = T::PI() + T::PI();
    (two_pi * p.coords[0]).sin() + (two_pi * p.coords[1]).cos()
}

/// Gradient of the reference solution.
pub fn reference_gradient<T: Real>(p: &Point<T, 2>) -> [T; 2] {
    let two_pi = T::PI() + T::PI();
    [
        two_pi * (two_pi * p.coords[0]).cos(),
        -two_pi * (two_pi * p.coords[1]).sin(),
    ]
}

/// Interior data `f = Δu + <∇u, v>` induced by the reference solution.
pub fn manufactured_f<T: Real>(p: &Point<T, 2>, velocity: &VelocityField<T, 2>) -> T {
    let two_pi = T::PI() + T::PI();
    let laplacian = -two_pi * two_pi * reference_solution(p);
    let v = velocity.eval(p);
    laplacian + dot(&reference_gradient(p), &v)
}

/// Boundary data `g`: the reference solution on Γ1, its outward normal
/// derivative on Γ2.
pub fn manufactured_g<T: Real>(p: &Point<T, 2>, tag: BoundaryTag, normal: &[T; 2]) -> T {
    match tag {
        BoundaryTag::Dirichlet => reference_solution(p),
        BoundaryTag::Neumann => dot(&reference_gradient(p), normal),
    }
}

/// Problem data for assembly: kernel, velocity field, interior source and
/// boundary data.
#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub domain: UnitSquareDomain,
    pub kernel: MQKernel<T>,
    pub velocity: VelocityField<T, 2>,
    pub source: Arc<dyn Fn(&Point<T, 2>) -> T + Send + Sync>,
    pub boundary_data: Arc<dyn Fn(&Point<T, 2>, BoundaryTag, &[T; 2]) -> T + Send + Sync>,
}

impl<T: Real> ProblemSpec<T> {
    /// Problem whose data is induced by the manufactured reference
    /// solution, as used for all benchmark runs.
    pub fn manufactured(kernel: MQKernel<T>, velocity: VelocityField<T, 2>) -> Self {
        let v_for_f = velocity.clone();
        Self {
            domain: UnitSquareDomain,
            kernel,
            velocity,
            source: Arc::new(move |p| manufactured_f(p, &v_for_f)),
            boundary_data: Arc::new(|p, tag, nu| manufactured_g(p, tag, nu)),
        }
    }
}
