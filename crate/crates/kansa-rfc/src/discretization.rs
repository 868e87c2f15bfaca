//! Collocation grids, random fictitious centers and assembly of the
//! square Kansa system.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kernel::{MQKernel, Point};
use crate::linalg::DenseMatrix;
use crate::operators::{b_phi, l_phi, BoundaryTag, ProblemSpec};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("grid needs at least 2 points per side, got {0}")]
    GridTooSmall(usize),
    #[error("perturbation radius must be nonnegative and finite, got {0}")]
    InvalidDelta(f64),
    #[error("collocation set has {points} points but center set has {centers}")]
    SizeMismatch { points: usize, centers: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("assembled entry at ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("kernel evaluation failed: {0}")]
    Kernel(String),
}

/// Boundary collocation point with its tag and outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint<T> {
    pub point: Point<T, 2>,
    pub tag: BoundaryTag,
    pub normal: [T; 2],
}

/// Ordered collocation points: interior block first, boundary block
/// second, with the original lexicographic grid index kept per point.
#[derive(Clone, Debug)]
pub struct CollocationSet<T> {
    pub interior: Vec<Point<T, 2>>,
    pub boundary: Vec<BoundaryPoint<T>>,
    /// Lexicographic grid index of each point, in interior-first order.
    pub grid_index: Vec<usize>,
    pub n_per_side: usize,
}

/// Role of a collocation point (row of the Kansa system).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Interior,
    Boundary(BoundaryTag),
}

impl<T: Real> CollocationSet<T> {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_total(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    /// Point at row position `idx` (interior-first ordering).
    pub fn point(&self, idx: usize) -> Point<T, 2> {
        if idx < self.interior.len() {
            self.interior[idx]
        } else {
            self.boundary[idx - self.interior.len()].point
        }
    }

    pub fn role(&self, idx: usize) -> Role {
        if idx < self.interior.len() {
            Role::Interior
        } else {
            Role::Boundary(self.boundary[idx - self.interior.len()].tag)
        }
    }

    /// CSV dump with columns `index,x1,x2,role,tag`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "index,x1,x2,role,tag")?;
        for idx in 0..self.n_total() {
            let p = self.point(idx);
            let (role, tag) = match self.role(idx) {
                Role::Interior => ("interior", ""),
                Role::Boundary(t) => ("boundary", t.as_str()),
            };
            writeln!(
                w,
                "{},{},{},{role},{tag}",
                self.grid_index[idx], p.coords[0], p.coords[1]
            )?;
        }
        Ok(())
    }
}

/// Uniform n×n lexicographic grid on the closed unit square.
///
/// Points are `(i/(n-1), j/(n-1))` enumerated with `x1` outer and `x2`
/// inner. Classification is by grid index, so boundary membership is
/// exact. Vertical edges (corners included) are Dirichlet, open
/// horizontal edges Neumann.
pub fn make_uniform_grid<T: Real>(n: usize) -> Result<CollocationSet<T>, DiscretizationError> {
    if n < 2 {
        return Err(DiscretizationError::GridTooSmall(n));
    }
    let denom = (n - 1) as f64;
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut interior_idx = Vec::new();
    let mut boundary_idx = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let lex = i * n + j;
            let p = Point::new([
                T::from_f64_lossy(i as f64 / denom),
                T::from_f64_lossy(j as f64 / denom),
            ]);
            if i == 0 || i == n - 1 {
                let nx = if i == 0 { -T::one() } else { T::one() };
                boundary.push(BoundaryPoint {
                    point: p,
                    tag: BoundaryTag::Dirichlet,
                    normal: [nx, T::zero()],
                });
                boundary_idx.push(lex);
            } else if j == 0 || j == n - 1 {
                let ny = if j == 0 { -T::one() } else { T::one() };
                boundary.push(BoundaryPoint {
                    point: p,
                    tag: BoundaryTag::Neumann,
                    normal: [T::zero(), ny],
                });
                boundary_idx.push(lex);
            } else {
                interior.push(p);
                interior_idx.push(lex);
            }
        }
    }
    let mut grid_index = interior_idx;
    grid_index.extend(boundary_idx);
    Ok(CollocationSet {
        interior,
        boundary,
        grid_index,
        n_per_side: n,
    })
}

/// Fictitious centers, one per collocation point in the same ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet<T> {
    pub centers: Vec<Point<T, 2>>,
    pub delta: f64,
    pub seed: u64,
}

impl<T: Real> CenterSet<T> {
    /// CSV dump with columns `index,x1,x2,role,tag` (role fixed to
    /// `center`).
    pub fn write_csv<W: Write>(&self, w: &mut W, colloc: &CollocationSet<T>) -> io::Result<()> {
        writeln!(w, "index,x1,x2,role,tag")?;
        for (idx, c) in self.centers.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},center,",
                colloc.grid_index[idx], c.coords[0], c.coords[1]
            )?;
        }
        Ok(())
    }
}

/// Centers from `C + (2u - 1)δ` perturbations, `u` uniform on `[0, 1)`
/// drawn per coordinate.
///
/// Draws follow lexicographic grid order (`x1` offset then `x2` offset
/// per point) regardless of the interior/boundary reordering, and are
/// consumed even for `δ = 0`, so the same seed produces comparable draws
/// across δ values. Centers are never clamped to the domain.
pub fn perturb_centers<T: Real>(
    colloc: &CollocationSet<T>,
    delta: f64,
    seed: u64,
) -> Result<CenterSet<T>, DiscretizationError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(DiscretizationError::InvalidDelta(delta));
    }
    let n_total = colloc.n_total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = vec![[0.0f64; 2]; n_total];
    for off in offsets.iter_mut() {
        for o in off.iter_mut() {
            let u: f64 = rng.random();
            *o = (2.0 * u - 1.0) * delta;
        }
    }
    let centers = (0..n_total)
        .map(|idx| {
            let p = colloc.point(idx);
            let off = offsets[colloc.grid_index[idx]];
            Point::new([
                p.coords[0] + T::from_f64_lossy(off[0]),
                p.coords[1] + T::from_f64_lossy(off[1]),
            ])
        })
        .collect();
    Ok(CenterSet {
        centers,
        delta,
        seed,
    })
}

/// Assembled dense Kansa system with row/column provenance.
#[derive(Clone, Debug)]
pub struct KansaSystem<T> {
    pub matrix: DenseMatrix<T>,
    pub rhs: Vec<T>,
    /// Per-row collocation point and role, interior rows first.
    pub row_meta: Vec<(Point<T, 2>, Role)>,
    /// Center index backing each column (identity ordering).
    pub col_meta: Vec<usize>,
}

/// Fills row `i ≤ N_I` with `Lφ_{C_j}(P_i)` and `f(P_i)`, and the
/// remaining rows with `Bφ_{C_j}(P_k)` and `g(P_k)`.
pub fn assemble_system<T: Real>(
    spec: &ProblemSpec<T>,
    colloc: &CollocationSet<T>,
    centers: &CenterSet<T>,
) -> Result<KansaSystem<T>, DiscretizationError> {
    let n = colloc.n_total();
    if centers.centers.len() != n {
        return Err(DiscretizationError::SizeMismatch {
            points: n,
            centers: centers.centers.len(),
        });
    }
    let mut matrix = DenseMatrix::zeros(n, n);
    let mut rhs = Vec::with_capacity(n);
    let mut row_meta = Vec::with_capacity(n);

    for (row, p) in colloc.interior.iter().enumerate() {
        let out = matrix.row_mut(row);
        for (col, c) in centers.centers.iter().enumerate() {
            out[col] = l_phi(&spec.kernel, c, p, &spec.velocity)
                .map_err(|e| DiscretizationError::Kernel(e.to_string()))?;
        }
        rhs.push((spec.source)(p));
        row_meta.push((*p, Role::Interior));
    }
    for (k, bp) in colloc.boundary.iter().enumerate() {
        let row = colloc.n_interior() + k;
        let out = matrix.row_mut(row);
        for (col, c) in centers.centers.iter().enumerate() {
            out[col] = b_phi(&spec.kernel, c, &bp.point, bp.tag, &bp.normal)
                .map_err(|e| DiscretizationError::Kernel(e.to_string()))?;
        }
        rhs.push((spec.boundary_data)(&bp.point, bp.tag, &bp.normal));
        row_meta.push((bp.point, Role::Boundary(bp.tag)));
    }

    if let Some((row, col)) = matrix.find_non_finite() {
        return Err(DiscretizationError::NonFiniteEntry { row, col });
    }
    Ok(KansaSystem {
        matrix,
        rhs,
        row_meta,
        col_meta: (0..n).collect(),
    })
}

/// `u_N(P) = Σ_j a_j φ(‖P - C_j‖)`.
pub fn evaluate_solution<T: Real>(
    centers: &CenterSet<T>,
    coefficients: &[T],
    p: &Point<T, 2>,
    kernel: &MQKernel<T>,
) -> Result<T, DiscretizationError> {
    if coefficients.len() != centers.centers.len() {
        return Err(DiscretizationError::CoefficientLength {
            expected: centers.centers.len(),
            got: coefficients.len(),
        });
    }
    let mut acc = T::zero();
    for (&a, c) in coefficients.iter().zip(&centers.centers) {
        acc = acc
            + a * kernel
                .phi(p.distance(c))
                .map_err(|e| DiscretizationError::Kernel(e.to_string()))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::VelocityField;
    use approx::assert_relative_eq;

    #[test]
    fn grid_counts() {
        let g = make_uniform_grid::<f64>(11).unwrap();
        assert_eq!(g.n_total(), 121);
        assert_eq!(g.n_interior(), 81);
        assert_eq!(g.n_boundary(), 40);

        let g = make_uniform_grid::<f64>(21).unwrap();
        assert_eq!((g.n_total(), g.n_interior(), g.n_boundary()), (441, 361, 80));

        let g = make_uniform_grid::<f64>(2).unwrap();
        assert_eq!((g.n_total(), g.n_interior(), g.n_boundary()), (4, 0, 4));
        assert!(g.boundary.iter().all(|b| b.tag == BoundaryTag::Dirichlet));

        assert!(matches!(
            make_uniform_grid::<f64>(1),
            Err(DiscretizationError::GridTooSmall(1))
        ));
    }

    #[test]
    fn grid_counts_formula() {
        for n in 2..20 {
            let g = make_uniform_grid::<f64>(n).unwrap();
            assert_eq!(g.n_interior(), (n - 2) * (n - 2));
            assert_eq!(g.n_boundary(), n * n - (n - 2) * (n - 2));
        }
    }

    #[test]
    fn grid_index_reproduces_lexicographic_grid() {
        let n = 7;
        let g = make_uniform_grid::<f64>(n).unwrap();
        let denom = (n - 1) as f64;
        let mut seen = vec![false; n * n];
        for idx in 0..g.n_total() {
            let lex = g.grid_index[idx];
            assert!(!seen[lex]);
            seen[lex] = true;
            let p = g.point(idx);
            assert_eq!(p.coords[0], (lex / n) as f64 / denom);
            assert_eq!(p.coords[1], (lex % n) as f64 / denom);
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = make_uniform_grid::<f64>(21).unwrap();
        for bp in &g.boundary {
            let [x1, x2] = bp.point.coords;
            assert!(x1 == 0.0 || x1 == 1.0 || x2 == 0.0 || x2 == 1.0);
        }
    }

    #[test]
    fn perturb_zero_delta_is_identity() {
        let g = make_uniform_grid::<f64>(5).unwrap();
        let c = perturb_centers(&g, 0.0, 42).unwrap();
        for idx in 0..g.n_total() {
            assert_eq!(c.centers[idx], g.point(idx));
        }
    }

    #[test]
    fn perturb_stays_in_box() {
        let g = make_uniform_grid::<f64>(11).unwrap();
        let delta = 0.01;
        let c = perturb_centers(&g, delta, 7).unwrap();
        for idx in 0..g.n_total() {
            let p = g.point(idx);
            for axis in 0..2 {
                assert!((c.centers[idx].coords[axis] - p.coords[axis]).abs() <= delta);
            }
        }
    }

    #[test]
    fn perturb_is_deterministic() {
        let g = make_uniform_grid::<f64>(9).unwrap();
        let a = perturb_centers(&g, 0.05, 1234).unwrap();
        let b = perturb_centers(&g, 0.05, 1234).unwrap();
        assert_eq!(a, b);
        let c = perturb_centers(&g, 0.05, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturb_can_leave_domain() {
        // corner (0,0) with a large delta will exit the square for some seed
        let g = make_uniform_grid::<f64>(3).unwrap();
        let mut escaped = false;
        for seed in 0..50 {
            let c = perturb_centers(&g, 0.1, seed).unwrap();
            if c.centers
                .iter()
                .any(|p| p.coords.iter().any(|&x| x < 0.0 || x > 1.0))
            {
                escaped = true;
                break;
            }
        }
        assert!(escaped);
    }

    #[test]
    fn perturb_rejects_negative_delta() {
        let g = make_uniform_grid::<f64>(3).unwrap();
        assert!(matches!(
            perturb_centers(&g, -0.1, 0),
            Err(DiscretizationError::InvalidDelta(_))
        ));
    }

    fn single_corner_setup() -> (CollocationSet<f64>, CenterSet<f64>) {
        let p = Point::new([0.0, 0.0]);
        let colloc = CollocationSet {
            interior: vec![],
            boundary: vec![BoundaryPoint {
                point: p,
                tag: BoundaryTag::Dirichlet,
                normal: [-1.0, 0.0],
            }],
            grid_index: vec![0],
            n_per_side: 1,
        };
        let centers = CenterSet {
            centers: vec![p],
            delta: 0.0,
            seed: 0,
        };
        (colloc, centers)
    }

    #[test]
    fn assemble_single_dirichlet_corner() {
        let kernel = MQKernel::new(2.5).unwrap();
        let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([0.0, 0.0]));
        let (colloc, centers) = single_corner_setup();
        let sys = assemble_system(&spec, &colloc, &centers).unwrap();
        assert_eq!(sys.matrix.n_rows(), 1);
        assert_eq!(sys.matrix[(0, 0)], 1.0);
        // u(0,0) = sin(0) + cos(0) = 1
        assert_relative_eq!(sys.rhs[0], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn assemble_n2_grid_is_symmetric_phi_table() {
        let kernel = MQKernel::new(2.5).unwrap();
        let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([0.0, 0.0]));
        let g = make_uniform_grid::<f64>(2).unwrap();
        let centers = perturb_centers(&g, 0.0, 0).unwrap();
        let sys = assemble_system(&spec, &g, &centers).unwrap();
        for i in 0..4 {
            assert_eq!(sys.matrix[(i, i)], 1.0);
            for j in 0..4 {
                let r = g.point(i).distance(&g.point(j));
                assert_eq!(sys.matrix[(i, j)], kernel.phi(r).unwrap());
                assert_eq!(sys.matrix[(i, j)], sys.matrix[(j, i)]);
            }
        }
    }

    #[test]
    fn interior_row_with_zero_velocity_is_laplacian() {
        let kernel = MQKernel::new(1.3).unwrap();
        let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([0.0, 0.0]));
        let g = make_uniform_grid::<f64>(4).unwrap();
        let centers = perturb_centers(&g, 0.01, 5).unwrap();
        let sys = assemble_system(&spec, &g, &centers).unwrap();
        let p = g.interior[0];
        for (col, c) in centers.centers.iter().enumerate() {
            assert_eq!(sys.matrix[(0, col)], kernel.laplacian_phi(c, &p).unwrap());
        }
    }

    #[test]
    fn delta_zero_dirichlet_rows_have_unit_diagonal() {
        let kernel = MQKernel::new(2.5).unwrap();
        let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([1.0, 1.0]));
        let g = make_uniform_grid::<f64>(5).unwrap();
        let centers = perturb_centers(&g, 0.0, 0).unwrap();
        let sys = assemble_system(&spec, &g, &centers).unwrap();
        for (k, bp) in g.boundary.iter().enumerate() {
            if bp.tag == BoundaryTag::Dirichlet {
                let row = g.n_interior() + k;
                // center aligned with the same grid point sits in the same slot
                assert_eq!(sys.matrix[(row, row)], 1.0);
            }
        }
    }

    #[test]
    fn assemble_rejects_size_mismatch() {
        let kernel = MQKernel::new(2.5).unwrap();
        let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([0.0, 0.0]));
        let g = make_uniform_grid::<f64>(3).unwrap();
        let centers = CenterSet::<f64> {
            centers: vec![Point::new([0.0, 0.0])],
            delta: 0.0,
            seed: 0,
        };
        assert!(matches!(
            assemble_system(&spec, &g, &centers),
            Err(DiscretizationError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_solution_values() {
        let kernel = MQKernel::new(1.0).unwrap();
        let g = make_uniform_grid::<f64>(2).unwrap();
        let centers = perturb_centers(&g, 0.0, 0).unwrap();
        let zeros = vec![0.0; 4];
        let p = Point::new([0.3, 0.3]);
        assert_eq!(evaluate_solution(&centers, &zeros, &p, &kernel).unwrap(), 0.0);

        let single = CenterSet {
            centers: vec![Point::new([0.25, 0.75])],
            delta: 0.0,
            seed: 0,
        };
        assert_eq!(
            evaluate_solution(&single, &[2.0], &Point::new([0.25, 0.75]), &kernel).unwrap(),
            2.0
        );

        let two = CenterSet {
            centers: vec![Point::new([0.0, 0.0]), Point::new([1.0, 0.0])],
            delta: 0.0,
            seed: 0,
        };
        assert_relative_eq!(
            evaluate_solution(&two, &[1.0, 1.0], &Point::new([0.0, 0.0]), &kernel).unwrap(),
            1.0 + 2.0f64.sqrt(),
            max_relative = 1e-15
        );

        assert!(matches!(
            evaluate_solution(&two, &[1.0], &p, &kernel),
            Err(DiscretizationError::CoefficientLength { .. })
        ));
    }

    #[test]
    fn csv_dumps() {
        let g = make_uniform_grid::<f64>(3).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,x1,x2,role,tag\n"));
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("interior,"));
        assert!(text.contains("dirichlet"));
        assert!(text.contains("neumann"));

        let c = perturb_centers(&g, 0.0, 0).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains(",center,"));
    }

}
