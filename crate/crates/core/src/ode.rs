//! Adaptive Dormand–Prince 5(4) integrator with dense output and event location.
//!
//! Small fixed-size systems only; the state is a `[f64; N]`.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// One accepted step, with the continuous extension over `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct StepView<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    r: [[f64; N]; 5],
}

impl<const N: usize> StepView<N> {
    /// Dense output at `t` in `[t0, t1]` (fourth order).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

/// What the observer wants after seeing a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, handing each accepted step to `observer`.
///
/// Returns the final time and state (the end of the last accepted step).
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, [f64; N])>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&StepView<N>) -> Control,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = (t_end - t0).abs();
    if span == 0.0 {
        return Ok((t, y));
    }
    // crude initial step from the derivative scale
    let mut h = {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((k1[i] / sc).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span).min(opts.h_max) * 0.1
    };
    let mut facold: f64 = 1e-4;
    let mut steps = 0usize;
    while (t_end - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration(format!("step limit {} reached at t = {t}", opts.max_steps)));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
        let last = (t + dir * h - t_end) * dir >= 0.0;
        let hh = if last { (t_end - t).abs() } else { h };
        let sh = dir * hh;

        let mut tmp = [0.0; N];
        for i in 0..N {
            tmp[i] = y[i] + sh * A21 * k1[i];
        }
        let k2 = f(t + C2 * sh, &tmp);
        for i in 0..N {
            tmp[i] = y[i] + sh * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(t + C3 * sh, &tmp);
        for i in 0..N {
            tmp[i] = y[i] + sh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(t + C4 * sh, &tmp);
        for i in 0..N {
            tmp[i] = y[i] + sh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(t + C5 * sh, &tmp);
        for i in 0..N {
            tmp[i] = y[i] + sh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(t + sh, &tmp);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i] + sh * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = f(t + sh, &y1);

        let mut err = 0.0;
        for i in 0..N {
            let e = sh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        // PI step control as in Hairer's dopri5
        let fac11 = err.powf(0.2 - 0.04 * 0.75);
        let mut fac = fac11 / facold.powf(0.04);
        fac = (fac / 0.9).clamp(0.1, 5.0);
        let hnew = hh / fac;
        if err <= 1.0 {
            facold = err.max(1e-4);
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = sh * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - sh * k7[i] - bspl;
                r[4][i] = sh * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let view = StepView { t0: t, t1: t + sh, y0: y, y1, r };
            t += sh;
            y = y1;
            k1 = k7;
            if observer(&view) == Control::Stop {
                return Ok((t, y));
            }
            h = hnew.min(opts.h_max);
        } else {
            h = (hh / (fac11 / 0.9).min(10.0)).min(opts.h_max);
        }
    }
    Ok((t, y))
}

/// Locate a sign change of `g` inside one step by secant/bisection on the dense output.
pub fn locate_event<const N: usize, G>(step: &StepView<N>, g: G) -> Option<(f64, [f64; N])>
where
    G: Fn(f64, &[f64; N]) -> f64,
{
    let mut a = step.t0;
    let mut b = step.t1;
    let mut ga = g(a, &step.y0);
    let mut gb = g(b, &step.y1);
    if ga == 0.0 {
        return Some((a, step.y0));
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    // Illinois-modified regula falsi
    let mut side = 0i32;
    for _ in 0..200 {
        let c = (a * gb - b * ga) / (gb - ga);
        let yc = step.eval(c);
        let gc = g(c, &yc);
        if gc == 0.0 || (b - a).abs() < 1e-15 * c.abs().max(1.0) {
            return Some((c, yc));
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    let c = 0.5 * (a + b);
    Some((c, step.eval(c)))
}

/// Integrate and return the state at each of the requested (monotone) output times.
pub fn integrate_at<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    ts: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(ts.len());
    let mut idx = 0;
    while idx < ts.len() && ts[idx] == t0 {
        out.push(y0);
        idx += 1;
    }
    let Some(&t_end) = ts.last() else {
        return Ok(out);
    };
    if idx == ts.len() {
        return Ok(out);
    }
    integrate(f, t0, y0, t_end, opts, |st| {
        let (lo, hi) = if st.t1 >= st.t0 { (st.t0, st.t1) } else { (st.t1, st.t0) };
        while idx < ts.len() && ts[idx] >= lo && ts[idx] <= hi {
            out.push(if ts[idx] == st.t1 { st.y1 } else { st.eval(ts[idx]) });
            idx += 1;
        }
        Control::Continue
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = OdeOptions::default();
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let ys = integrate_at(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &ts, &opts).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn event_finds_first_zero_of_cosine() {
        let opts = OdeOptions::default();
        let mut hit = None;
        integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &opts,
            |st| {
                if let Some(ev) = locate_event(st, |_, y| y[0]) {
                    hit = Some(ev.0);
                    return Control::Stop;
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!((hit.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
