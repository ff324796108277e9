//! Named coefficient fields used by the experiments.

use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::field::{Grid, GridScalar, GridVector, TimeGridVector};
use crate::scalar::Scalar;

/// Time samples used for time-dependent presets.
pub const TIME_SAMPLES: usize = 32;

fn modulation(t: f64, t_final: f64) -> f64 {
    1.0 + 0.5 * (PI * t / t_final).cos()
}

/// `b(t,x) = c(t) a (sin x)` in 1-d and `c(t) a (sin x cos y, ½cos(x+y))` in 2-d,
/// with `c(t) = 1 + ½cos(πt/T)`.
pub fn trig_drift<T: Scalar>(grid: &Grid<T>, t_final: T, amp: T) -> TimeGridVector<T> {
    let tf = t_final.to64();
    let a = amp.to64();
    let dim = grid.dim();
    TimeGridVector::from_fn(grid, t_final, TIME_SAMPLES, |t, p| {
        let c = a * modulation(t.to64(), tf);
        let (x, y) = (p[0].to64(), p[1].to64());
        if dim == 1 {
            [T::of(c * x.sin()), T::zero()]
        } else {
            [T::of(c * x.sin() * y.cos()), T::of(c * 0.5 * (x + y).cos())]
        }
    })
}

/// Steady noise fields with non-zero divergence: `a cos x` in 1-d; `a(cos x, sin y)` and
/// `¾a(sin(x+y), cos(x−y))` in 2-d.
pub fn trig_noise<T: Scalar>(grid: &Grid<T>, t_final: T, amp: T) -> Vec<TimeGridVector<T>> {
    let a = amp.to64();
    if grid.dim() == 1 {
        return vec![TimeGridVector::steady(GridVector::from_fn(grid, |p| [T::of(a * p[0].to64().cos()), T::zero()]), t_final)];
    }
    vec![
        TimeGridVector::steady(GridVector::from_fn(grid, |p| [T::of(a * p[0].to64().cos()), T::of(a * p[1].to64().sin())]), t_final),
        TimeGridVector::steady(
            GridVector::from_fn(grid, |p| {
                let (x, y) = (p[0].to64(), p[1].to64());
                [T::of(0.75 * a * (x + y).sin()), T::of(0.75 * a * (x - y).cos())]
            }),
            t_final,
        ),
    ]
}

/// Divergence-free `a(−cos x sin y, sin x cos y)`, the rotated gradient of `cos x cos y`.
pub fn rotation_drift<T: Scalar>(grid: &Grid<T>, t_final: T, amp: T) -> Result<TimeGridVector<T>> {
    if grid.dim() != 2 {
        return Err(CoreError::BadDimension(grid.dim()));
    }
    let a = amp.to64();
    Ok(TimeGridVector::steady(
        GridVector::from_fn(grid, |p| {
            let (x, y) = (p[0].to64(), p[1].to64());
            [T::of(-a * x.cos() * y.sin()), T::of(a * x.sin() * y.cos())]
        }),
        t_final,
    ))
}

/// `σ^k = e_k`, `k = 1..n`.
pub fn unit_noise<T: Scalar>(grid: &Grid<T>, t_final: T) -> Vec<TimeGridVector<T>> {
    (0..grid.dim()).map(|k| TimeGridVector::steady(GridVector::unit(grid, k), t_final)).collect()
}

pub fn constant_drift<T: Scalar>(grid: &Grid<T>, t_final: T, c: [T; 2]) -> TimeGridVector<T> {
    TimeGridVector::steady(GridVector::constant(grid, c), t_final)
}

/// Band-limited square wave `(4/π) Σ sin((2j+1)x)/(2j+1)` with modes up to a quarter of the grid.
pub fn square_wave<T: Scalar>(grid: &Grid<T>) -> GridScalar<T> {
    let modes = grid.points() / 4;
    GridScalar::from_fn(grid, |p| {
        let x = p[0].to64();
        T::of((0..modes).map(|j| (((2 * j + 1) as f64) * x).sin() / (2 * j + 1) as f64).sum::<f64>() * 4.0 / PI)
    })
}

/// 1-d drift `c(t) a sq(x)` with the square wave above.
pub fn square_wave_drift<T: Scalar>(grid: &Grid<T>, t_final: T, amp: T) -> Result<TimeGridVector<T>> {
    if grid.dim() != 1 {
        return Err(CoreError::BadDimension(grid.dim()));
    }
    let sq = square_wave(grid);
    let tf = t_final.to64();
    let a = amp.to64();
    let times: Vec<T> = (0..=TIME_SAMPLES).map(|i| t_final * T::of_usize(i) / T::of_usize(TIME_SAMPLES)).collect();
    let slices = times
        .iter()
        .map(|&t| {
            let c = T::of(a * modulation(t.to64(), tf));
            GridVector { grid: grid.clone(), components: vec![sq.scale(c)] }
        })
        .collect();
    TimeGridVector::new(times, slices)
}

/// Smooth sign-changing initial density `½ + sin x cos y` (`½ + sin x` in 1-d).
pub fn trig_density<T: Scalar>(grid: &Grid<T>) -> GridScalar<T> {
    let dim = grid.dim();
    GridScalar::from_fn(grid, |p| {
        let (x, y) = (p[0].to64(), p[1].to64());
        T::of(0.5 + x.sin() * if dim == 2 { y.cos() } else { 1.0 })
    })
}

/// Smooth positive initial density `exp(cos x + ½ sin y)`.
pub fn positive_density<T: Scalar>(grid: &Grid<T>) -> GridScalar<T> {
    let dim = grid.dim();
    GridScalar::from_fn(grid, |p| {
        let (x, y) = (p[0].to64(), p[1].to64());
        T::of((x.cos() + if dim == 2 { 0.5 * y.sin() } else { 0.0 }).exp())
    })
}

/// Names accepted by [`drift_preset`].
pub const DRIFT_PRESETS: [&str; 5] = ["zero", "constant", "trig", "rotation", "square_wave"];
/// Names accepted by [`noise_preset`].
pub const NOISE_PRESETS: [&str; 3] = ["none", "unit", "trig"];

/// Drift by name; `constant` uses `c`.
pub fn drift_preset<T: Scalar>(name: &str, grid: &Grid<T>, t_final: T, amp: T, c: [T; 2]) -> Result<TimeGridVector<T>> {
    match name {
        "zero" => Ok(constant_drift(grid, t_final, [T::zero(); 2])),
        "constant" => Ok(constant_drift(grid, t_final, c)),
        "trig" => Ok(trig_drift(grid, t_final, amp)),
        "rotation" => rotation_drift(grid, t_final, amp),
        "square_wave" => square_wave_drift(grid, t_final, amp),
        _ => Err(CoreError::InvalidParameter(format!("unknown drift preset {name:?}"))),
    }
}

/// Noise fields by name.
pub fn noise_preset<T: Scalar>(name: &str, grid: &Grid<T>, t_final: T, amp: T) -> Result<Vec<TimeGridVector<T>>> {
    match name {
        "none" => Ok(vec![]),
        "unit" => Ok(unit_noise(grid, t_final)),
        "trig" => Ok(trig_noise(grid, t_final, amp)),
        _ => Err(CoreError::InvalidParameter(format!("unknown noise preset {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, divergence};
    use std::f64::consts::TAU;

    #[test]
    fn rotation_is_solenoidal() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        let b = rotation_drift(&g, 1.0, 0.8).unwrap();
        assert!(divergence(&b.slices[0]).max_abs() < 1e-12);
        assert!(rotation_drift(&build_grid::<f64>(1, TAU, 8).unwrap(), 1.0, 1.0).is_err());
    }

    #[test]
    fn trig_fields_have_divergence() {
        let g = build_grid::<f64>(2, TAU, 32).unwrap();
        assert!(divergence(&trig_drift(&g, 0.5, 0.6).slices[3]).max_abs() > 0.1);
        for s in trig_noise(&g, 0.5, 0.4) {
            assert!(divergence(&s.slices[0]).max_abs() > 0.1);
        }
    }

    #[test]
    fn square_wave_levels() {
        let g = build_grid::<f64>(1, TAU, 128).unwrap();
        let s = square_wave(&g);
        assert!((s.values[32] - 1.0).abs() < 0.05);
        assert!((s.values[96] + 1.0).abs() < 0.05);
    }

    #[test]
    fn names_resolve() {
        let g = build_grid::<f64>(2, TAU, 8).unwrap();
        for n in ["zero", "constant", "trig", "rotation"] {
            assert!(drift_preset(n, &g, 0.5, 0.6, [1.0, 0.0]).is_ok());
        }
        assert!(drift_preset("bogus", &g, 0.5, 0.6, [1.0, 0.0]).is_err());
        assert_eq!(noise_preset("unit", &g, 0.5, 0.4).unwrap().len(), 2);
    }
}
