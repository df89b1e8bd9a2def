//! Adaptive Dormand-Prince 5(4) integration of complex systems along the
//! straight segment from `t0` to `t1` in the complex plane.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C = Complex64;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step as a fraction of the segment.
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-14, h0: 1e-3, max_steps: 200_000 }
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const CS: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One trial step of size `h` in the path parameter; returns the fifth-order
/// solution and the scaled error estimate.
pub fn dopri_step<Fn_>(f: &mut Fn_, s: f64, y: &[C], h: f64, opts: &OdeOptions) -> Result<(Vec<C>, f64)>
where
    Fn_: FnMut(f64, &[C]) -> Result<Vec<C>>,
{
    let n = y.len();
    let mut k: Vec<Vec<C>> = Vec::with_capacity(7);
    k.push(f(s, y)?);
    for i in 0..6 {
        let yi: Vec<C> = (0..n)
            .map(|j| {
                let mut acc = y[j];
                for (m, km) in k.iter().enumerate() {
                    acc += km[j] * (h * A[i][m]);
                }
                acc
            })
            .collect();
        k.push(f(s + CS[i + 1] * h, &yi)?);
    }
    let mut y5 = y.to_vec();
    let mut err = 0.0f64;
    for j in 0..n {
        let mut d5 = C::new(0.0, 0.0);
        let mut d4 = C::new(0.0, 0.0);
        for m in 0..7 {
            d5 += k[m][j] * B5[m];
            d4 += k[m][j] * B4[m];
        }
        y5[j] += d5 * h;
        let sc = opts.atol + opts.rtol * y[j].norm().max(y5[j].norm());
        err = err.max(((d5 - d4) * h).norm() / sc);
    }
    if !err.is_finite() || y5.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InfiniteField);
    }
    Ok((y5, err))
}

/// Step-size update from a scaled error.
pub fn next_step(h: f64, err: f64) -> f64 {
    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    h * fac
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` along the straight segment.
/// Returns the accepted nodes `(t, y)`.
pub fn integrate(
    mut f: impl FnMut(C, &[C]) -> Result<Vec<C>>,
    t0: C,
    t1: C,
    y0: &[C],
    opts: &OdeOptions,
) -> Result<Vec<(C, Vec<C>)>> {
    let dt = t1 - t0;
    let mut out = vec![(t0, y0.to_vec())];
    if dt.norm() == 0.0 {
        return Ok(out);
    }
    let mut g = |s: f64, y: &[C]| -> Result<Vec<C>> { Ok(f(t0 + dt * s, y)?.into_iter().map(|v| v * dt).collect()) };
    let (mut s, mut h, mut y) = (0.0f64, opts.h0, y0.to_vec());
    let mut steps = 0;
    while s < 1.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Precondition("step budget exhausted".into()));
        }
        h = h.min(1.0 - s);
        match dopri_step(&mut g, s, &y, h, opts) {
            Ok((y5, err)) if err <= 1.0 => {
                s = if 1.0 - s - h < 1e-15 { 1.0 } else { s + h };
                y = y5;
                out.push((t0 + dt * s, y.clone()));
                h = next_step(h, err);
            }
            Ok((_, err)) => h = next_step(h, err),
            Err(Error::InfiniteField) | Err(Error::DivisionByZero) => h *= 0.25,
            Err(e) => return Err(e),
        }
        if h < 1e-14 {
            return Err(Error::Precondition("step size underflow".into()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_on_complex_path() {
        let t1 = C::new(1.0, 1.0);
        let nodes = integrate(|_, y| Ok(vec![y[0]]), C::new(0.0, 0.0), t1, &[C::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        let y = nodes.last().unwrap().1[0];
        assert!((y - t1.exp()).norm() < 1e-11);
    }
}
