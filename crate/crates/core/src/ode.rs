//! Dormand–Prince 5(4) with FSAL and step-size control on complex vectors.

use num_complex::Complex64;

use crate::error::{CatError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (error weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_min: 1e-12, h_max: f64::INFINITY, max_steps: 5_000_000 }
    }
}

/// Single-trajectory integrator state. The previous accepted point is kept
/// for Hermite interpolation and exact re-stepping.
pub struct Stepper {
    pub tol: Tolerances,
    pub t: f64,
    pub y: Vec<Complex64>,
    h: f64,
    f0: Vec<Complex64>,
    fsal_valid: bool,
    pub t_prev: f64,
    pub y_prev: Vec<Complex64>,
    f_prev: Vec<Complex64>,
    k: [Vec<Complex64>; 6],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    pub steps: usize,
    pub rejected: usize,
}

impl Stepper {
    pub fn new(t0: f64, y0: Vec<Complex64>, tol: Tolerances) -> Self {
        let n = y0.len();
        let z = || vec![ZERO; n];
        Self {
            tol,
            t: t0,
            h: 0.0,
            f0: z(),
            fsal_valid: false,
            t_prev: t0,
            y_prev: y0.clone(),
            f_prev: z(),
            k: [z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            y: y0,
            steps: 0,
            rejected: 0,
        }
    }

    /// Replaces the state (after a jump or renormalization).
    pub fn reset(&mut self, t: f64, y: Vec<Complex64>) {
        self.t = t;
        self.y = y;
        self.fsal_valid = false;
    }

    fn stages<F>(&mut self, f: &mut F, h: f64)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let t = self.t;
        let y = &self.y;
        let [k2, k3, k4, k5, k6, k7] = &mut self.k;
        let k1 = &self.f0;
        let tmp = &mut self.tmp;
        let n = y.len();
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, tmp, k6);
        for i in 0..n {
            self.y_new[i] = y[i] + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * h;
        }
        f(t + h, &self.y_new, k7);
    }

    fn error_norm(&self, h: f64) -> f64 {
        let [k2, k3, k4, k5, k6, k7] = &self.k;
        let _ = k2;
        let k1 = &self.f0;
        let n = self.y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = self.tol.atol + self.tol.rtol * self.y[i].norm().max(self.y_new[i].norm());
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / n.max(1) as f64).sqrt()
    }

    fn ensure_fsal<F>(&mut self, f: &mut F)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        if !self.fsal_valid {
            f(self.t, &self.y, &mut self.f0);
            self.fsal_valid = true;
        }
    }

    fn initial_step(&self, span: f64) -> f64 {
        let d0 = rms(&self.y);
        let d1 = rms(&self.f0);
        let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).min(self.tol.h_max).max(self.tol.h_min)
    }

    /// Takes one accepted step without going past `t_max`.
    pub fn advance<F>(&mut self, f: &mut F, t_max: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        self.ensure_fsal(f);
        let span = t_max - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(span);
        }
        loop {
            let mut h = self.h.min(self.tol.h_max);
            let clipped = h >= span;
            if clipped {
                h = span;
            } else if span - h < 1e-3 * h {
                h = 0.5 * span;
            }
            self.stages(f, h);
            let err = self.error_norm(h);
            if !err.is_finite() {
                self.h = 0.1 * h;
                self.rejected += 1;
                if self.h < self.tol.h_min {
                    return Err(CatError::Integration { t: self.t, reason: "non-finite derivative".into() });
                }
                continue;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t_prev = self.t;
                std::mem::swap(&mut self.y_prev, &mut self.y);
                std::mem::swap(&mut self.f_prev, &mut self.f0);
                self.y.copy_from_slice(&self.y_new);
                self.f0.copy_from_slice(&self.k[5]);
                self.t = if clipped { t_max } else { self.t + h };
                // keep the natural step size when the step was only clipped
                let proposed = h * fac;
                self.h = if clipped { self.h.max(proposed) } else { proposed };
                self.steps += 1;
                if self.steps > self.tol.max_steps {
                    return Err(CatError::Integration { t: self.t, reason: "step budget exhausted".into() });
                }
                return Ok(());
            }
            self.rejected += 1;
            self.h = h * fac;
            if self.h < self.tol.h_min {
                return Err(CatError::Integration { t: self.t, reason: "step size fell below floor".into() });
            }
        }
    }

    /// Integrates up to exactly `t_end`.
    pub fn advance_to<F>(&mut self, f: &mut F, t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        while self.t < t_end {
            self.advance(f, t_end)?;
        }
        Ok(())
    }

    /// Cubic Hermite interpolant over the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [Complex64]) {
        let h = self.t - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_prev) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        for i in 0..out.len() {
            out[i] = self.y_prev[i] * h00 + self.f_prev[i] * (h10 * h) + self.y[i] * h01 + self.f0[i] * (h11 * h);
        }
    }

    /// Discards the last step and integrates from its start to `t` exactly.
    pub fn restep_to<F>(&mut self, f: &mut F, t: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let natural = self.h;
        self.t = self.t_prev;
        std::mem::swap(&mut self.y, &mut self.y_prev);
        std::mem::swap(&mut self.f0, &mut self.f_prev);
        self.fsal_valid = true;
        self.h = (t - self.t).max(self.tol.h_min);
        while self.t < t {
            self.advance(f, t)?;
        }
        self.h = natural;
        Ok(())
    }
}

fn rms(v: &[Complex64]) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(-0.5, 2.0) * y[0];
        };
        let mut s = Stepper::new(0.0, vec![Complex64::new(1.0, 0.0)], Tolerances::default());
        s.advance_to(&mut f, 3.0).unwrap();
        let exact = (Complex64::new(-0.5, 2.0) * 3.0).exp();
        assert!((s.y[0] - exact).norm() < 1e-8);
        assert_eq!(s.t, 3.0);
    }

    #[test]
    fn restep_lands_on_requested_time() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = -y[0];
        let mut s = Stepper::new(0.0, vec![Complex64::new(1.0, 0.0)], Tolerances::default());
        s.advance(&mut f, 10.0).unwrap();
        s.advance(&mut f, 10.0).unwrap();
        let mid = 0.5 * (s.t_prev + s.t);
        s.restep_to(&mut f, mid).unwrap();
        assert_eq!(s.t, mid);
        assert!((s.y[0].re - (-mid).exp()).abs() < 1e-9);
    }
}
