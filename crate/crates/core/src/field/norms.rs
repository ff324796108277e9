use super::fields::GridScalar;
use super::grid::{Grid, Point};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Integration region: the whole box or an axis-aligned sub-box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region<T> {
    Full,
    SubBox { lo: Point<T>, hi: Point<T> },
}

impl<T: Scalar> Region<T> {
    /// The central half of the box, `[L/4, 3L/4]^n`.
    pub fn central_half(grid: &Grid<T>) -> Self {
        let q = grid.period() / T::of(4.0);
        let t = q * T::of(3.0);
        Region::SubBox { lo: [q, q], hi: [t, t] }
    }

    pub fn contains(&self, grid: &Grid<T>, p: Point<T>) -> bool {
        match self {
            Region::Full => true,
            Region::SubBox { lo, hi } => (0..grid.dim()).all(|a| p[a] >= lo[a] && p[a] <= hi[a]),
        }
    }
}

/// Discrete `L^p(region)` norm; `p = ∞` gives the max.
pub fn lp_norm<T: Scalar>(f: &GridScalar<T>, p: T, region: &Region<T>) -> Result<T> {
    if !(p >= T::one()) {
        return Err(CoreError::ExponentBelowOne(p.to64()));
    }
    let g = &f.grid;
    let inside = |i: usize| region.contains(g, g.node(i));
    if p.is_infinite() {
        return Ok((0..f.len()).filter(|&i| inside(i)).fold(T::zero(), |m, i| m.max(f.values[i].abs())));
    }
    let mut acc = T::zero();
    for (i, &v) in f.values.iter().enumerate() {
        if inside(i) {
            acc = acc + v.abs().powf(p);
        }
    }
    Ok((acc * g.cell_volume()).powf(T::one() / p))
}

/// Norm over time of a sampled series: `(∫ |v|^q dt)^{1/q}`, composite Simpson on uniform
/// grids with an even number of intervals, trapezoid otherwise; `q = ∞` gives the max.
pub fn time_norm<T: Scalar>(values: &[T], times: &[T], q: T) -> T {
    assert_eq!(values.len(), times.len());
    if q.is_infinite() {
        return values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    }
    let pw: Vec<T> = values.iter().map(|v| v.abs().powf(q)).collect();
    integrate_series(&pw, times).max(T::zero()).powf(T::one() / q)
}

/// `∫ v dt` over the sample instants.
pub fn integrate_series<T: Scalar>(v: &[T], times: &[T]) -> T {
    let m = v.len();
    if m < 2 {
        return T::zero();
    }
    let intervals = m - 1;
    let dt = (times[m - 1] - times[0]) / T::of_usize(intervals);
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= dt * T::of(1e-9));
    if uniform && intervals % 2 == 0 {
        let mut s = v[0] + v[m - 1];
        for (i, &x) in v.iter().enumerate().take(m - 1).skip(1) {
            s = s + x * if i % 2 == 1 { T::of(4.0) } else { T::of(2.0) };
        }
        s * dt / T::of(3.0)
    } else {
        let mut s = T::zero();
        for i in 0..intervals {
            s = s + (v[i] + v[i + 1]) * (times[i + 1] - times[i]) / T::of(2.0);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::build_grid;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn constant_l2() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let f = GridScalar::constant(&g, 1.0);
        assert!((lp_norm(&f, 2.0, &Region::Full).unwrap() - TAU.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_field_all_p() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        let f = GridScalar::zeros(&g);
        for p in [1.0, 2.0, 7.5, f64::INFINITY] {
            assert_eq!(lp_norm(&f, p, &Region::Full).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_p_below_one() {
        let g = build_grid::<f64>(1, 1.0, 8).unwrap();
        assert!(lp_norm(&GridScalar::zeros(&g), 0.5, &Region::Full).is_err());
    }

    #[test]
    fn sub_box_restricts() {
        let g = build_grid::<f64>(1, TAU, 64).unwrap();
        let f = GridScalar::from_fn(&g, |p| if p[0] < PI / 4.0 { 100.0 } else { 1.0 });
        let r = Region::central_half(&g);
        assert_eq!(lp_norm(&f, f64::INFINITY, &r).unwrap(), 1.0);
    }

    #[test]
    fn simpson_exact_for_cubic() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = times.iter().map(|t| t * t * t).collect();
        assert!((integrate_series(&v, &times) - 0.25).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in proptest::collection::vec(-5.0f64..5.0, 16),
                               b in proptest::collection::vec(-5.0f64..5.0, 16),
                               p in 1.0f64..6.0) {
            let g = build_grid::<f64>(1, 2.0, 16).unwrap();
            let fa = GridScalar::new(&g, a).unwrap();
            let fb = GridScalar::new(&g, b).unwrap();
            let s = &fa + &fb;
            let lhs = lp_norm(&s, p, &Region::Full).unwrap();
            let rhs = lp_norm(&fa, p, &Region::Full).unwrap() + lp_norm(&fb, p, &Region::Full).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }
}
