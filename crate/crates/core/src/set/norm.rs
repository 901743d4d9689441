use std::fmt;

use crate::scalar::Scalar;

/// Norm order `p` of an ellipsotope's coefficient balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm<T> {
    Finite(T),
    Inf,
}

impl<T: Scalar> PNorm<T> {
    pub fn two() -> Self {
        PNorm::Finite(T::lit(2.0))
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, PNorm::Inf)
    }

    pub fn is_two(&self) -> bool {
        matches!(self, PNorm::Finite(p) if *p == T::lit(2.0))
    }

    pub fn value(&self) -> Option<T> {
        match self {
            PNorm::Finite(p) => Some(*p),
            PNorm::Inf => None,
        }
    }

    /// Hoelder conjugate `q` with `1/p + 1/q = 1`.
    pub fn dual(&self) -> Self {
        match *self {
            PNorm::Inf => PNorm::Finite(T::one()),
            PNorm::Finite(p) if p == T::one() => PNorm::Inf,
            PNorm::Finite(p) => PNorm::Finite(p / (p - T::one())),
        }
    }

    /// `p`-norm of the values yielded by `xs`.
    pub fn norm<I: IntoIterator<Item = T>>(&self, xs: I) -> T {
        match *self {
            PNorm::Inf => xs.into_iter().fold(T::zero(), |a, x| a.max(x.abs())),
            PNorm::Finite(p) if p == T::one() => xs.into_iter().fold(T::zero(), |a, x| a + x.abs()),
            PNorm::Finite(p) if p == T::lit(2.0) => {
                xs.into_iter().fold(T::zero(), |a, x| a + x * x).sqrt()
            }
            PNorm::Finite(p) => {
                let v: Vec<T> = xs.into_iter().map(|x| x.abs()).collect();
                let scale = v.iter().fold(T::zero(), |a, &x| a.max(x));
                if scale == T::zero() {
                    return T::zero();
                }
                let s = v.iter().fold(T::zero(), |a, &x| a + (x / scale).powf(p));
                scale * s.powf(T::one() / p)
            }
        }
    }

    /// Norm of the entries of `v` selected by `idx`.
    pub fn norm_of(&self, v: &[T], idx: &[usize]) -> T {
        self.norm(idx.iter().map(|&i| v[i]))
    }
}

impl<T: Scalar> fmt::Display for PNorm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Inf => f.write_str("inf"),
        }
    }
}
