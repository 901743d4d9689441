use nalgebra::DVector;

use crate::error::{EtopeError, Result};
use crate::scalar::Scalar;
use crate::set::{IndexSet, PNorm};

/// Euclidean projection of `v` onto the unit `p`-ball.
pub fn project_pball<T: Scalar>(v: &DVector<T>, p: PNorm<T>) -> Result<DVector<T>> {
    if let PNorm::Finite(q) = p {
        if !(q >= T::one()) {
            return Err(EtopeError::InvalidNorm(format!(
                "projection needs p >= 1, got {q}"
            )));
        }
    }
    let mut out = v.clone();
    project_slice(out.as_mut_slice(), p);
    Ok(out)
}

/// Blockwise projection onto the ball product of `blocks`.
pub fn project_ball_product<T: Scalar>(
    beta: &DVector<T>,
    blocks: &IndexSet,
    p: PNorm<T>,
) -> DVector<T> {
    let mut out = beta.clone();
    project_ball_product_in_place(&mut out, blocks, p);
    out
}

pub(crate) fn project_ball_product_in_place<T: Scalar>(
    beta: &mut DVector<T>,
    blocks: &IndexSet,
    p: PNorm<T>,
) {
    let mut buf = Vec::new();
    for block in blocks.blocks() {
        if block.len() == 1 {
            let j = block[0];
            beta[j] = clamp_unit(beta[j]);
            continue;
        }
        buf.clear();
        buf.extend(block.iter().map(|&j| beta[j]));
        project_slice(&mut buf, p);
        for (k, &j) in block.iter().enumerate() {
            beta[j] = buf[k];
        }
    }
}

fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// Projects `v` in place; assumes `p >= 1`.
pub(crate) fn project_slice<T: Scalar>(v: &mut [T], p: PNorm<T>) {
    match p {
        PNorm::Inf => v.iter_mut().for_each(|x| *x = clamp_unit(*x)),
        PNorm::Finite(q) if q == T::lit(2.0) => {
            let n = v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
            if n > T::one() {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        PNorm::Finite(q) if q == T::one() => project_l1(v),
        PNorm::Finite(q) => project_general(v, q),
    }
}

/// Sort-based simplex projection applied to `|v|`.
fn project_l1<T: Scalar>(v: &mut [T]) {
    let total = v.iter().fold(T::zero(), |a, &x| a + x.abs());
    if total <= T::one() {
        return;
    }
    let mut a: Vec<T> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (i, &ai) in a.iter().enumerate() {
        cum += ai;
        let t = (cum - T::one()) / T::from_usize_lossy(i + 1);
        if ai > t {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        let mag = (x.abs() - theta).max(T::zero());
        *x = if *x < T::zero() { -mag } else { mag };
    }
}

/// Projection for general finite `p > 1`. The multiplier `mu` of
/// `sum |y_i|^p <= 1` is found by bracketed Newton on the mass
/// `g(mu) = sum y_i(mu)^p - 1`, each coordinate solving
/// `y + mu p y^(p-1) = |v_i|`.
fn project_general<T: Scalar>(v: &mut [T], p: T) {
    let norm = PNorm::Finite(p).norm(v.iter().copied());
    if norm <= T::one() {
        return;
    }
    let a: Vec<T> = v.iter().map(|x| x.abs()).collect();
    let mut y = vec![T::zero(); a.len()];
    let pm1 = p - T::one();
    // Mass and its derivative at `mu`, filling `y`.
    let eval = |mu: T, y: &mut [T]| {
        let (mut g, mut dg) = (-T::one(), T::zero());
        for (yi, &ai) in y.iter_mut().zip(&a) {
            *yi = solve_coordinate(ai, mu, p);
            if *yi > T::zero() {
                let ypm1 = pow_fast(*yi, pm1);
                g += ypm1 * *yi;
                let dy = -p * ypm1 / (T::one() + mu * p * pm1 * ypm1 / *yi);
                dg += p * ypm1 * dy;
            }
        }
        (g, dg)
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut guard = 0;
    while eval(hi, &mut y).0 > T::zero() && guard < 400 {
        lo = hi;
        hi *= T::lit(2.0);
        guard += 1;
    }
    let tol = T::tol(1e-15);
    let mut mu = hi;
    for _ in 0..200 {
        let (g, dg) = eval(mu, &mut y);
        if g.abs() <= tol {
            break;
        }
        if g > T::zero() {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = if dg < T::zero() { mu - g / dg } else { lo - T::one() };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
        if next <= lo || next >= hi || hi - lo <= T::tol(1e-15) * hi {
            mu = hi;
            eval(mu, &mut y);
            break;
        }
        mu = next;
    }
    let n = PNorm::Finite(p).norm(y.iter().copied());
    let scale = if n > T::one() { n } else { T::one() };
    for (x, yi) in v.iter_mut().zip(&y) {
        let mag = *yi / scale;
        *x = if *x < T::zero() { -mag } else { mag };
    }
}

/// `y^e`, skipping `powf` for the exponents of the common norms.
fn pow_fast<T: Scalar>(y: T, e: T) -> T {
    if e == T::lit(2.0) {
        y * y
    } else if e == T::lit(0.5) {
        y.sqrt()
    } else if e == T::one() {
        y
    } else {
        y.powf(e)
    }
}

/// Root of `y + mu p y^(p-1) = a` on `[0, a]` by safeguarded Newton.
fn solve_coordinate<T: Scalar>(a: T, mu: T, p: T) -> T {
    if a <= T::zero() || mu <= T::zero() {
        return a.max(T::zero());
    }
    let c = mu * p;
    // Quadratic cases, in cancellation-free form.
    if p == T::lit(3.0) {
        return T::lit(2.0) * a / (T::one() + (T::one() + T::lit(4.0) * c * a).sqrt());
    }
    if p == T::lit(1.5) {
        let s = T::lit(2.0) * a / (c + (c * c + T::lit(4.0) * a).sqrt());
        return s * s;
    }
    let (mut lo, mut hi) = (T::zero(), a);
    let mut y = a.min((a / c).powf(T::one() / (p - T::one())));
    for _ in 0..100 {
        let h = y + c * y.powf(p - T::one()) - a;
        if h > T::zero() {
            hi = y;
        } else {
            lo = y;
        }
        if h == T::zero() {
            return y;
        }
        let dh = T::one() + c * (p - T::one()) * y.powf(p - T::lit(2.0));
        let mut next = y - h / dh;
        if !(next > lo && next < hi) {
            next = (lo + hi) * T::lit(0.5);
        }
        if (next - y).abs() <= T::default_epsilon() * a {
            return next;
        }
        y = next;
    }
    y
}
