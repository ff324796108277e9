use crate::error::{CoreError, Result};
use crate::field::{Grid, Point, TimeGridVector, VectorSpline};
use crate::scalar::Scalar;

/// Spline interpolants of every slice of a time-dependent field, linear in time.
#[derive(Clone, Debug)]
pub struct SplineTimeField<T: Scalar> {
    times: Vec<T>,
    splines: Vec<VectorSpline<T>>,
}

impl<T: Scalar> SplineTimeField<T> {
    pub fn new(field: &TimeGridVector<T>) -> Self {
        Self { times: field.times.clone(), splines: field.slices.iter().map(VectorSpline::new).collect() }
    }

    pub fn eval(&self, t: T, p: Point<T>) -> Point<T> {
        let (i, w) = crate::field::locate_time(&self.times, t);
        let a = self.splines[i].eval(p);
        if w == T::zero() {
            return a;
        }
        let b = self.splines[i + 1].eval(p);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    }

    /// Value and Jacobian `J[i][j] = ∂_j v_i`.
    pub fn eval_jac(&self, t: T, p: Point<T>) -> (Point<T>, [[T; 2]; 2]) {
        let (i, w) = crate::field::locate_time(&self.times, t);
        let (a, ja) = self.splines[i].eval_jac(p);
        if w == T::zero() {
            return (a, ja);
        }
        let (b, jb) = self.splines[i + 1].eval_jac(p);
        let mut v = a;
        let mut j = ja;
        for r in 0..2 {
            v[r] = a[r] + w * (b[r] - a[r]);
            for c in 0..2 {
                j[r][c] = ja[r][c] + w * (jb[r][c] - ja[r][c]);
            }
        }
        (v, j)
    }
}

/// Drift and noise fields of the SDE with their spline interpolants.
#[derive(Clone, Debug)]
pub struct SdeCoefficients<T: Scalar> {
    pub b: TimeGridVector<T>,
    pub sigmas: Vec<TimeGridVector<T>>,
    b_spline: SplineTimeField<T>,
    sigma_splines: Vec<SplineTimeField<T>>,
}

/// Drift, noise fields and their Jacobians at one point.
pub struct PointCoeffs<T> {
    pub b: Point<T>,
    pub db: [[T; 2]; 2],
    pub sigma: Vec<Point<T>>,
    pub dsigma: Vec<[[T; 2]; 2]>,
}

impl<T: Scalar> SdeCoefficients<T> {
    pub fn new(b: TimeGridVector<T>, sigmas: Vec<TimeGridVector<T>>) -> Result<Self> {
        if sigmas.iter().any(|s| s.grid() != b.grid()) {
            return Err(CoreError::GridMismatch);
        }
        let b_spline = SplineTimeField::new(&b);
        let sigma_splines = sigmas.iter().map(SplineTimeField::new).collect();
        Ok(Self { b, sigmas, b_spline, sigma_splines })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.b.grid()
    }

    pub fn k_count(&self) -> usize {
        self.sigmas.len()
    }

    pub fn drift(&self, t: T, p: Point<T>) -> Point<T> {
        self.b_spline.eval(t, p)
    }

    pub fn eval(&self, t: T, p: Point<T>) -> PointCoeffs<T> {
        let (b, db) = self.b_spline.eval_jac(t, p);
        let mut sigma = Vec::with_capacity(self.sigma_splines.len());
        let mut dsigma = Vec::with_capacity(self.sigma_splines.len());
        for s in &self.sigma_splines {
            let (v, j) = s.eval_jac(t, p);
            sigma.push(v);
            dsigma.push(j);
        }
        PointCoeffs { b, db, sigma, dsigma }
    }
}
