use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Width of the cutoff transition of `B_ε`, in units of `1/ε`.
const CUTOFF_WIDTH: f64 = 2.5;

/// Renormalizer family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RenormKind<T> {
    Tanh,
    /// `Γ_ε = A_ε B_ε`, a smoothed and cut-off `|z|`.
    AbsEps(T),
    Linear,
    Constant(T),
}

/// `Γ` with closed-form derivatives and the derived `G`, `H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalizer<T> {
    pub kind: RenormKind<T>,
}

/// Quintic smoothstep and its first two derivatives on `[0, 1]`.
fn smoothstep<T: Scalar>(s: T) -> (T, T, T) {
    let s2 = s * s;
    let s3 = s2 * s;
    let v = s3 * (T::of(10.0) - T::of(15.0) * s + T::of(6.0) * s2);
    let d = T::of(30.0) * s2 * (T::one() - s) * (T::one() - s);
    let dd = T::of(60.0) * s * (T::one() - s) * (T::one() - T::of(2.0) * s);
    (v, d, dd)
}

impl<T: Scalar> Renormalizer<T> {
    pub fn new(kind: RenormKind<T>) -> Result<Self> {
        if let RenormKind::AbsEps(e) = kind {
            if !(e > T::zero()) {
                return Err(CoreError::InvalidParameter(format!("abs_eps needs ε > 0, got {e}")));
            }
        }
        Ok(Self { kind })
    }

    pub fn tag(&self) -> &'static str {
        match self.kind {
            RenormKind::Tanh => "tanh",
            RenormKind::AbsEps(_) => "abs_eps",
            RenormKind::Linear => "linear",
            RenormKind::Constant(_) => "constant",
        }
    }

    /// `(Γ, Γ', Γ'')` at `z`.
    pub fn eval(&self, z: T) -> (T, T, T) {
        let one = T::one();
        let two = T::of(2.0);
        match self.kind {
            RenormKind::Tanh => {
                let t = z.tanh();
                let s = one - t * t;
                (t, s, -two * t * s)
            }
            RenormKind::Linear => (z, one, T::zero()),
            RenormKind::Constant(c) => (c, T::zero(), T::zero()),
            RenormKind::AbsEps(e) => {
                let az = z.abs();
                let sg = if z < T::zero() { -one } else { one };
                let (a, a1, a2) =
                    if az < e { (z * z / (two * e) + e / two, z / e, one / e) } else { (az, sg, T::zero()) };
                let u = e * az;
                let w = T::of(CUTOFF_WIDTH);
                let (b, b1, b2) = if u <= one {
                    (one, T::zero(), T::zero())
                } else if u >= one + w {
                    (T::zero(), T::zero(), T::zero())
                } else {
                    let (s, ds, dds) = smoothstep((u - one) / w);
                    (one - s, -ds * e * sg / w, -dds * e * e / (w * w))
                };
                (a * b, a1 * b + a * b1, a2 * b + two * a1 * b1 + a * b2)
            }
        }
    }

    #[inline]
    pub fn gamma(&self, z: T) -> T {
        self.eval(z).0
    }
    #[inline]
    pub fn d1(&self, z: T) -> T {
        self.eval(z).1
    }
    #[inline]
    pub fn d2(&self, z: T) -> T {
        self.eval(z).2
    }

    /// `G(z) = zΓ'(z) − Γ(z)`.
    #[inline]
    pub fn g(&self, z: T) -> T {
        let (v, d, _) = self.eval(z);
        z * d - v
    }

    /// `H(z) = zG'(z) − G(z) = z²Γ'' − zΓ' + Γ`.
    #[inline]
    pub fn h(&self, z: T) -> T {
        let (v, d, dd) = self.eval(z);
        z * z * dd - z * d + v
    }

    /// `G'(z) = zΓ''(z)`.
    #[inline]
    pub fn g_prime(&self, z: T) -> T {
        z * self.d2(z)
    }
}

/// Convenience constructor used by configs (`tanh`, `linear`, `constant`, `abs_eps`).
pub fn make_renormalizer<T: Scalar>(kind: RenormKind<T>) -> Result<Renormalizer<T>> {
    Renormalizer::new(kind)
}
