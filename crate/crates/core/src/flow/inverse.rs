use rayon::prelude::*;

use super::sde::{det, FlowEnsemble, Mat2};
use crate::error::{CoreError, Result};
use crate::field::{Grid, GridScalar, GridVector, Point, VectorSpline};
use crate::scalar::Scalar;

const MAX_NEWTON: usize = 50;
const MAX_FIXED_POINT: usize = 500;

/// Inverse map sampled on the grid.
#[derive(Clone, Debug)]
pub struct InverseMap<T: Scalar> {
    /// `Ψ(x)` at every node, unwrapped near `x`.
    pub psi: Vec<Point<T>>,
    /// `det ∂Ψ(x)`.
    pub det: GridScalar<T>,
    /// Smallest simplex orientation of the forward map.
    pub min_orientation: T,
}

impl<T: Scalar> InverseMap<T> {
    pub fn identity(grid: &Grid<T>) -> Self {
        Self {
            psi: (0..grid.len()).map(|i| grid.node(i)).collect(),
            det: GridScalar::constant(grid, T::one()),
            min_orientation: grid.spacing().powi(grid.dim() as i32),
        }
    }

    /// Displacement `Ψ(x) − x` as a grid vector.
    pub fn displacement(&self, grid: &Grid<T>) -> GridVector<T> {
        let comps = (0..grid.dim())
            .map(|a| GridScalar { grid: grid.clone(), values: self.psi.iter().enumerate().map(|(i, p)| p[a] - grid.node(i)[a]).collect() })
            .collect();
        GridVector { grid: grid.clone(), components: comps }
    }
}

/// Smallest signed volume over the simplices of the image mesh
/// (1-d: edge lengths; 2-d: two triangles per cell).
pub fn min_simplex_orientation<T: Scalar>(grid: &Grid<T>, pos: &[Point<T>]) -> T {
    let n = grid.points();
    let l = grid.period();
    // neighbour position, shifted by a period across the seam
    let nb = |i: usize, j: usize, di: usize, dj: usize| -> Point<T> {
        let (ii, jj) = ((i + di) % n, (j + dj) % n);
        let mut p = pos[grid.flat([ii, jj])];
        if i + di >= n {
            p[0] = p[0] + l;
        }
        if grid.dim() == 2 && j + dj >= n {
            p[1] = p[1] + l;
        }
        p
    };
    if grid.dim() == 1 {
        return (0..n).map(|i| nb(i, 0, 1, 0)[0] - pos[i][0]).fold(T::infinity(), T::min);
    }
    let orient = |a: Point<T>, b: Point<T>, c: Point<T>| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    (0..n * n)
        .into_par_iter()
        .map(|f| {
            let [i, j] = grid.split(f);
            let a = pos[f];
            let b = nb(i, j, 1, 0);
            let c = nb(i, j, 0, 1);
            let d = nb(i, j, 1, 1);
            // (a,b,d) and (a,d,c) are counter-clockwise for the identity map
            orient(a, b, d).min(orient(a, d, c))
        })
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::infinity(), T::min)
}

fn solve2<T: Scalar>(m: &Mat2<T>, r: Point<T>, n: usize) -> Option<Point<T>> {
    let d = det(m, n);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    if n == 1 {
        return Some([r[0] / d, T::zero()]);
    }
    Some([(m[1][1] * r[0] - m[0][1] * r[1]) / d, (m[0][0] * r[1] - m[1][0] * r[0]) / d])
}

/// Solves `y + D(y) = x` for every node `x`, where `D` is the interpolated displacement.
/// `warm` seeds the iteration (defaults to `x`).
pub fn invert_displacement<T: Scalar>(disp: &GridVector<T>, warm: Option<&[Point<T>]>) -> Result<InverseMap<T>> {
    let grid = &disp.grid;
    let n = grid.dim();
    let spline = VectorSpline::new(disp);
    let tol = grid.period() * T::of(1e-12).max(T::epsilon() * T::of(16.0));
    // forward images of the nodes for the injectivity check
    let pos: Vec<Point<T>> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let d = disp.at(i);
            [x[0] + d[0], x[1] + d[1]]
        })
        .collect();
    let min_orientation = min_simplex_orientation(grid, &pos);
    if !(min_orientation > T::zero()) {
        return Err(CoreError::NotInjective { min_orientation: min_orientation.to64() });
    }
    let solved: Vec<std::result::Result<(Point<T>, T), CoreError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let y0 = warm.map(|w| w[i]).unwrap_or(x);
            newton(&spline, x, y0, n, tol)
                .or_else(|| fixed_point(&spline, x, y0, n, tol))
                .ok_or_else(|| {
                    let (d, _) = spline.eval_jac(y0);
                    let r = (0..n).map(|a| (y0[a] + d[a] - x[a]).abs()).fold(T::zero(), T::max);
                    CoreError::Stagnation { node: i, residual: r.to64() }
                })
        })
        .collect();
    let mut psi = Vec::with_capacity(grid.len());
    let mut dets = Vec::with_capacity(grid.len());
    for r in solved {
        let (y, d) = r?;
        psi.push(y);
        dets.push(d);
    }
    Ok(InverseMap { psi, det: GridScalar { grid: grid.clone(), values: dets }, min_orientation })
}

fn forward_jac<T: Scalar>(s: &VectorSpline<T>, y: Point<T>, n: usize) -> (Point<T>, Mat2<T>) {
    let (d, mut j) = s.eval_jac(y);
    for a in 0..n {
        j[a][a] = j[a][a] + T::one();
    }
    ([y[0] + d[0], y[1] + d[1]], j)
}

fn newton<T: Scalar>(s: &VectorSpline<T>, x: Point<T>, y0: Point<T>, n: usize, tol: T) -> Option<(Point<T>, T)> {
    let mut y = y0;
    for _ in 0..MAX_NEWTON {
        let (fy, j) = forward_jac(s, y, n);
        let r = [fy[0] - x[0], fy[1] - x[1]];
        let rn = (0..n).map(|a| r[a].abs()).fold(T::zero(), T::max);
        if rn <= tol {
            let d = det(&j, n);
            return (d > T::zero()).then(|| (y, T::one() / d));
        }
        let step = solve2(&j, r, n)?;
        for a in 0..n {
            y[a] = y[a] - step[a];
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return None;
        }
    }
    None
}

fn fixed_point<T: Scalar>(s: &VectorSpline<T>, x: Point<T>, y0: Point<T>, n: usize, tol: T) -> Option<(Point<T>, T)> {
    let mut y = y0;
    for _ in 0..MAX_FIXED_POINT {
        let d = s.eval(y);
        let mut next = y;
        for a in 0..n {
            next[a] = x[a] - d[a];
        }
        let dn = (0..n).map(|a| (next[a] - y[a]).abs()).fold(T::zero(), T::max);
        y = next;
        if dn <= tol {
            let (_, j) = forward_jac(s, y, n);
            let dj = det(&j, n);
            return (dj > T::zero()).then(|| (y, T::one() / dj));
        }
    }
    None
}

/// Displacement `Φ(x) − x` from forward positions.
pub fn displacement_of<T: Scalar>(grid: &Grid<T>, pos: &[Point<T>]) -> GridVector<T> {
    let comps = (0..grid.dim())
        .map(|a| GridScalar { grid: grid.clone(), values: pos.iter().enumerate().map(|(i, p)| p[a] - grid.node(i)[a]).collect() })
        .collect();
    GridVector { grid: grid.clone(), components: comps }
}

/// Index of the record at time `t`.
pub fn record_at<T: Scalar>(ens: &FlowEnsemble<T>, t: T) -> Result<usize> {
    let tol = ens.path.dt() * T::of(1e-6);
    ens.times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| CoreError::TimeGrid(format!("no recorded flow at t = {t}")))
}

/// Spatial inverse `Ψ_t` of the recorded flow at time `t`.
pub fn invert_flow<T: Scalar>(ens: &FlowEnsemble<T>, t: T) -> Result<InverseMap<T>> {
    let r = record_at(ens, t)?;
    invert_displacement(&displacement_of(&ens.grid, &ens.positions[r]), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::build_grid;
    use std::f64::consts::TAU;

    #[test]
    fn identity_inverts_to_identity() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let inv = invert_displacement(&GridVector::zeros(&g), None).unwrap();
        for (i, p) in inv.psi.iter().enumerate() {
            assert_eq!(*p, g.node(i));
            assert_eq!(inv.det.values[i], 1.0);
        }
    }

    #[test]
    fn translation_inverts_exactly() {
        let g = build_grid::<f64>(2, TAU, 16).unwrap();
        let w = [0.37, -1.2];
        let inv = invert_displacement(&GridVector::constant(&g, w), None).unwrap();
        for (i, p) in inv.psi.iter().enumerate() {
            assert!((p[0] - g.node(i)[0] + w[0]).abs() < 1e-10);
            assert!((p[1] - g.node(i)[1] + w[1]).abs() < 1e-10);
            assert!((inv.det.values[i] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn contraction_inverse_near_centre() {
        // Φ(x) = c + (x − c)e^{−T} near the centre of a large box
        let l = 200.0;
        let g = build_grid::<f64>(1, l, 256).unwrap();
        let c = g.center()[0];
        let t = 0.2f64;
        let disp = GridVector::from_fn(&g, |p| {
            let s = l / TAU * (TAU * (p[0] - c) / l).sin();
            [s * ((-t).exp() - 1.0), 0.0]
        });
        let inv = invert_displacement(&disp, None).unwrap();
        let i = 129;
        let x = g.node(i)[0] - c;
        assert!((inv.psi[i][0] - c - x * t.exp()).abs() < 1e-3);
        assert!((inv.det.values[i] - t.exp()).abs() < 1e-3);
    }

    #[test]
    fn fold_is_rejected() {
        let g = build_grid::<f64>(1, TAU, 32).unwrap();
        let disp = GridVector::from_fn(&g, |p| [-2.0 * p[0].sin(), 0.0]);
        assert!(matches!(invert_displacement(&disp, None), Err(CoreError::NotInjective { .. })));
    }

    #[test]
    fn orientation_seam_is_periodic() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let pos: Vec<Point<f64>> = (0..g.len()).map(|i| g.node(i)).collect();
        let h = g.spacing();
        assert!((min_simplex_orientation(&g, &pos) - h * h).abs() < 1e-12);
    }
}
