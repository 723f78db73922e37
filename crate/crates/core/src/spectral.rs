//! First Dirichlet eigenvalue of `-Δ`: analytic for intervals and boxes,
//! and from the finite-difference operator by inverse power iteration.
//!
//! The discrete stencil (3-point / 5-point) is the same one the simulator
//! uses, and on a 1D uniform grid its first eigenvalue lies below the
//! continuum value, so a certificate built on it is conservative.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Relative eigenvalue tolerance for inverse power iteration.
const EIGEN_TOL: f64 = 1e-12;
const MAX_EIGEN_ITERATIONS: usize = 500;
/// Relative residual target for the 2D conjugate-gradient solves.
const CG_TOL: f64 = 1e-12;

/// A bounded open interval or axis-aligned rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    lengths: Vec<f64>,
    offsets: Vec<f64>,
}

impl DomainSpec {
    pub fn new(lengths: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "domain dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if lengths.len() != offsets.len() {
            return Err(Error::InvalidParameter(
                "lengths and offsets must have matching dimension".into(),
            ));
        }
        for &l in &lengths {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "domain lengths must be positive and finite, got {l}"
                )));
            }
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter("domain offsets must be finite".into()));
        }
        Ok(Self { lengths, offsets })
    }

    /// The interval `(offset, offset + length)`.
    pub fn interval(offset: f64, length: f64) -> Result<Self> {
        Self::new(vec![length], vec![offset])
    }

    /// The rectangle with the given per-axis extents, anchored at the origin.
    pub fn rectangle(length_x: f64, length_y: f64) -> Result<Self> {
        Self::new(vec![length_x, length_y], vec![0.0, 0.0])
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
}

/// Uniform grid of interior nodes; boundary nodes carry `u = 0` implicitly.
/// Per axis, `spacing * (points + 1) = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainSpec,
    points: Vec<usize>,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(domain: DomainSpec, points: &[usize]) -> Result<Self> {
        if points.len() != domain.dimension() {
            return Err(Error::InvalidParameter(format!(
                "grid needs {} per-axis point counts, got {}",
                domain.dimension(),
                points.len()
            )));
        }
        if points.iter().any(|&n| n < 3) {
            return Err(Error::InvalidParameter(
                "at least 3 interior points per axis are required".into(),
            ));
        }
        let spacing = domain
            .lengths()
            .iter()
            .zip(points)
            .map(|(&l, &n)| l / (n + 1) as f64)
            .collect();
        Ok(Self {
            domain,
            points: points.to_vec(),
            spacing,
        })
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of interior nodes.
    pub fn node_count(&self) -> usize {
        self.points.iter().product()
    }

    /// Coordinate of interior node `index` along `axis` (0-based flat index,
    /// x fastest in 2D).
    pub fn coord(&self, axis: usize, flat: usize) -> f64 {
        let i = match (self.dimension(), axis) {
            (1, 0) => flat,
            (2, 0) => flat % self.points[0],
            (2, 1) => flat / self.points[0],
            _ => panic!("axis {axis} out of range for dimension {}", self.dimension()),
        };
        self.domain.offsets()[axis] + (i + 1) as f64 * self.spacing[axis]
    }
}

/// `pi² / L²`, the first Dirichlet eigenvalue on an interval of length `L`.
pub fn lambda1_interval(length: f64) -> Result<f64> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "interval length must be positive and finite, got {length}"
        )));
    }
    Ok(PI * PI / (length * length))
}

/// `pi² Σ 1/Lᵢ²` for a box with the given side lengths (1 or 2 axes).
pub fn lambda1_box(lengths: &[f64]) -> Result<f64> {
    if lengths.is_empty() || lengths.len() > 2 {
        return Err(Error::InvalidParameter(format!(
            "box dimension must be 1 or 2, got {}",
            lengths.len()
        )));
    }
    let mut sum = 0.0;
    for &l in lengths {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box lengths must be positive and finite, got {l}"
            )));
        }
        sum += 1.0 / (l * l);
    }
    Ok(PI * PI * sum)
}

/// Smallest eigenvalue of the finite-difference Dirichlet Laplacian on the
/// grid, by inverse power iteration (direct tridiagonal solves in 1D,
/// conjugate-gradient solves in 2D).
pub fn lambda1_discrete(grid: &Grid) -> Result<f64> {
    match grid.dimension() {
        1 => lambda1_discrete_1d(grid),
        2 => lambda1_discrete_2d(grid),
        _ => unreachable!("DomainSpec limits dimension to 1 or 2"),
    }
}

fn lambda1_discrete_1d(grid: &Grid) -> Result<f64> {
    let n = grid.points()[0];
    let h = grid.spacing()[0];
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);

    // Thomas factorization of the constant tridiagonal matrix, done once.
    let mut denom = vec![0.0; n];
    denom[0] = diag;
    for i in 1..n {
        denom[i] = diag - off * off / denom[i - 1];
    }
    let solve = |b: &[f64], y: &mut Vec<f64>| {
        y.clear();
        y.extend_from_slice(b);
        for i in 1..n {
            let m = off / denom[i - 1];
            y[i] -= m * y[i - 1];
        }
        y[n - 1] /= denom[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] - off * y[i + 1]) / denom[i];
        }
    };

    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut y = Vec::with_capacity(n);
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_EIGEN_ITERATIONS {
        solve(&x, &mut y);
        // Rayleigh quotient of y: (y, A y) = (y, x) since A y = x.
        let mu = dot(&y, &x) / dot(&y, &y);
        x.clone_from(&y);
        normalize(&mut x);
        if (mu - prev).abs() <= EIGEN_TOL * mu.abs() {
            return finish_eigenvalue(mu);
        }
        prev = mu;
    }
    Err(Error::NoConvergence {
        max_iterations: MAX_EIGEN_ITERATIONS,
    })
}

fn lambda1_discrete_2d(grid: &Grid) -> Result<f64> {
    let (nx, ny) = (grid.points()[0], grid.points()[1]);
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let n = nx * ny;
    let ax = 1.0 / (hx * hx);
    let ay = 1.0 / (hy * hy);
    let diag = 2.0 * (ax + ay);

    let apply = |u: &[f64], out: &mut [f64]| {
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let mut v = diag * u[k];
                if i > 0 {
                    v -= ax * u[k - 1];
                }
                if i + 1 < nx {
                    v -= ax * u[k + 1];
                }
                if j > 0 {
                    v -= ay * u[k - nx];
                }
                if j + 1 < ny {
                    v -= ay * u[k + nx];
                }
                out[k] = v;
            }
        }
    };

    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_EIGEN_ITERATIONS {
        conjugate_gradient(&apply, &x, &mut y)?;
        let mu = dot(&y, &x) / dot(&y, &y);
        x.clone_from(&y);
        normalize(&mut x);
        if (mu - prev).abs() <= EIGEN_TOL * mu.abs() {
            return finish_eigenvalue(mu);
        }
        prev = mu;
    }
    Err(Error::NoConvergence {
        max_iterations: MAX_EIGEN_ITERATIONS,
    })
}

fn finish_eigenvalue(mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Inconsistency(format!(
            "discrete Laplacian eigenvalue must be positive, got {mu}"
        )));
    }
    Ok(mu)
}

/// Solve `A y = b` for the SPD operator `apply`, warm-starting from the
/// previous `y`.
fn conjugate_gradient<F>(apply: &F, b: &[f64], y: &mut [f64]) -> Result<()>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(y, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    let max_iterations = 40 * n;
    for _ in 0..max_iterations {
        if rr.sqrt() <= CG_TOL * b_norm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { max_iterations })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Closed-form first eigenvalue of the 1D tridiagonal Dirichlet Laplacian:
/// `(4/h²) sin²(pi h / (2 L))` scaled to the interval length.
pub fn lambda1_discrete_1d_closed_form(length: f64, points: usize) -> f64 {
    let h = length / (points + 1) as f64;
    let s = (PI * h / (2.0 * length)).sin();
    4.0 / (h * h) * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_interval_values() {
        assert!((lambda1_interval(1.0).unwrap() - PI * PI).abs() < 1e-14);
        assert!((lambda1_interval(PI).unwrap() - 1.0).abs() < 1e-14);
        // the interval that realizes lambda1 = 0.16
        assert!((lambda1_interval(PI / 0.4).unwrap() - 0.16).abs() < 1e-14);
        assert!(lambda1_interval(0.0).is_err());
        assert!(lambda1_interval(-2.0).is_err());
    }

    #[test]
    fn analytic_box_values() {
        assert!((lambda1_box(&[1.0]).unwrap() - PI * PI).abs() < 1e-14);
        assert!((lambda1_box(&[1.0, 1.0]).unwrap() - 2.0 * PI * PI).abs() < 1e-14);
        assert!((lambda1_box(&[2.0, 1.0]).unwrap() - 5.0 * PI * PI / 4.0).abs() < 1e-14);
        assert!(lambda1_box(&[]).is_err());
        assert!(lambda1_box(&[1.0, 1.0, 1.0]).is_err());
        assert!(lambda1_box(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn discrete_1d_matches_closed_form() {
        for &(length, n) in &[(1.0, 99), (1.0, 999), (PI, 999), (2.5, 250)] {
            let grid = Grid::new(DomainSpec::interval(0.0, length).unwrap(), &[n]).unwrap();
            let lam = lambda1_discrete(&grid).unwrap();
            let exact = lambda1_discrete_1d_closed_form(length, n);
            assert!(
                (lam - exact).abs() <= 1e-10 * exact,
                "L = {length}, n = {n}: {lam} vs {exact}"
            );
            assert!(lam > 0.0);
            // conservative direction for certificates
            assert!(lam < PI * PI / (length * length));
        }
    }

    #[test]
    fn discrete_1d_second_order_convergence() {
        let mut errors = Vec::new();
        for &n in &[99usize, 199, 399] {
            let grid = Grid::new(DomainSpec::interval(0.0, 1.0).unwrap(), &[n]).unwrap();
            let lam = lambda1_discrete(&grid).unwrap();
            errors.push((PI * PI - lam).abs());
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(
                (1.8..=2.2).contains(&order),
                "observed order {order} out of range; errors {errors:?}"
            );
        }
    }

    #[test]
    fn discrete_2d_tensor_spectrum() {
        let grid = Grid::new(DomainSpec::rectangle(1.0, 1.0).unwrap(), &[39, 39]).unwrap();
        let lam = lambda1_discrete(&grid).unwrap();
        let exact = 2.0 * lambda1_discrete_1d_closed_form(1.0, 39);
        assert!(
            (lam - exact).abs() <= 1e-9 * exact,
            "2D eigenvalue {lam} vs tensor closed form {exact}"
        );
        assert!((lam - 2.0 * PI * PI).abs() <= 1e-2 * 2.0 * PI * PI);
    }

    #[test]
    fn grid_invariants() {
        let d = DomainSpec::interval(1.0, 0.5).unwrap();
        let g = Grid::new(d, &[9]).unwrap();
        assert_eq!(g.spacing()[0], 0.05);
        assert_eq!(g.node_count(), 9);
        assert!((g.coord(0, 0) - 1.05).abs() < 1e-15);
        assert!((g.coord(0, 8) - 1.45).abs() < 1e-15);

        assert!(Grid::new(DomainSpec::interval(0.0, 1.0).unwrap(), &[2]).is_err());
        assert!(Grid::new(DomainSpec::interval(0.0, 1.0).unwrap(), &[3, 3]).is_err());
        assert!(DomainSpec::new(vec![1.0, 1.0, 1.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn grid_2d_coords() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let g = Grid::new(d, &[4, 9]).unwrap();
        assert_eq!(g.node_count(), 36);
        assert!((g.spacing()[0] - 0.2).abs() < 1e-15);
        assert!((g.spacing()[1] - 0.2).abs() < 1e-15);
        // flat index 7 = (i = 3, j = 1)
        assert!((g.coord(0, 7) - 0.8).abs() < 1e-15);
        assert!((g.coord(1, 7) - 0.4).abs() < 1e-15);
    }
}
