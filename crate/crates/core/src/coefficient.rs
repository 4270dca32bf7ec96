use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Scalar time dependence attached to Hamiltonian terms and jump operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeCoefficient {
    Constant(Complex64),
    /// `amplitude · exp(−(t − center)² / 2width²)` on `[start, end]`, zero outside.
    Gaussian { amplitude: f64, center: f64, width: f64, start: f64, end: f64 },
    /// First segment `[t_start, t_end)` containing t wins; zero elsewhere.
    Piecewise(Vec<(f64, f64, TimeCoefficient)>),
    /// `amplitude · exp(i(ωt + φ))`
    Rotating { amplitude: Complex64, omega: f64, phase: f64 },
    /// `amplitude · cos(ωt + φ)`, real.
    Cosine { amplitude: f64, omega: f64, phase: f64 },
}

impl TimeCoefficient {
    pub fn constant(v: f64) -> Self {
        TimeCoefficient::Constant(Complex64::new(v, 0.0))
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Constant `value` on `[0, t_end)` and zero afterwards.
    pub fn window(value: f64, t_end: f64) -> Self {
        TimeCoefficient::Piecewise(vec![(0.0, t_end, Self::constant(value))])
    }

    /// Gaussian centered on the window with width a sixth of its length,
    /// scaled so that its integral over the window equals `area`.
    pub fn gaussian_with_area(area: f64, start: f64, end: f64) -> Self {
        let center = 0.5 * (start + end);
        let width = (end - start) / 6.0;
        let unit = gaussian_integral(1.0, center, width, start, end);
        TimeCoefficient::Gaussian { amplitude: area / unit, center, width, start, end }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            TimeCoefficient::Constant(v) => *v,
            TimeCoefficient::Gaussian { amplitude, center, width, start, end } => {
                if t < *start || t > *end {
                    Complex64::new(0.0, 0.0)
                } else {
                    let z = (t - center) / width;
                    Complex64::new(amplitude * (-0.5 * z * z).exp(), 0.0)
                }
            }
            TimeCoefficient::Piecewise(segs) => segs
                .iter()
                .find(|(a, b, _)| t >= *a && t < *b)
                .map(|(_, _, c)| c.eval(t))
                .unwrap_or(Complex64::new(0.0, 0.0)),
            TimeCoefficient::Rotating { amplitude, omega, phase } => amplitude * Complex64::from_polar(1.0, omega * t + phase),
            TimeCoefficient::Cosine { amplitude, omega, phase } => Complex64::new(amplitude * (omega * t + phase).cos(), 0.0),
        }
    }

    /// Closed-form ∫_{t0}^{t1} c(t) dt.
    pub fn integral(&self, t0: f64, t1: f64) -> Complex64 {
        if t1 <= t0 {
            return Complex64::new(0.0, 0.0);
        }
        match self {
            TimeCoefficient::Constant(v) => v * (t1 - t0),
            TimeCoefficient::Gaussian { amplitude, center, width, start, end } => {
                let a = t0.max(*start);
                let b = t1.min(*end);
                if b <= a {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(gaussian_integral(*amplitude, *center, *width, a, b), 0.0)
            }
            TimeCoefficient::Piecewise(segs) => {
                let mut s = Complex64::new(0.0, 0.0);
                let mut covered = t0;
                for (a, b, c) in segs {
                    let lo = a.max(covered);
                    let hi = b.min(t1);
                    if hi > lo {
                        s += c.integral(lo, hi);
                        covered = covered.max(hi);
                    }
                }
                s
            }
            TimeCoefficient::Rotating { amplitude, omega, phase } => {
                if *omega == 0.0 {
                    amplitude * Complex64::from_polar(1.0, *phase) * (t1 - t0)
                } else {
                    let f = |t: f64| Complex64::from_polar(1.0, omega * t + phase) / Complex64::new(0.0, *omega);
                    amplitude * (f(t1) - f(t0))
                }
            }
            TimeCoefficient::Cosine { amplitude, omega, phase } => {
                let v = if *omega == 0.0 {
                    amplitude * phase.cos() * (t1 - t0)
                } else {
                    amplitude / omega * ((omega * t1 + phase).sin() - (omega * t0 + phase).sin())
                };
                Complex64::new(v, 0.0)
            }
        }
    }

    /// Times where the coefficient may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TimeCoefficient::Gaussian { start, end, .. } => vec![*start, *end],
            TimeCoefficient::Piecewise(segs) => {
                let mut v = Vec::new();
                for (a, b, c) in segs {
                    v.push(*a);
                    v.push(*b);
                    v.extend(c.breakpoints());
                }
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeCoefficient::Constant(v) => *v == Complex64::new(0.0, 0.0),
            TimeCoefficient::Gaussian { amplitude, .. } => *amplitude == 0.0,
            TimeCoefficient::Piecewise(segs) => segs.iter().all(|(_, _, c)| c.is_zero()),
            TimeCoefficient::Rotating { amplitude, .. } => *amplitude == Complex64::new(0.0, 0.0),
            TimeCoefficient::Cosine { amplitude, .. } => *amplitude == 0.0,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            TimeCoefficient::Constant(v) => v.im == 0.0,
            TimeCoefficient::Gaussian { .. } => true,
            TimeCoefficient::Piecewise(segs) => segs.iter().all(|(_, _, c)| c.is_real()),
            TimeCoefficient::Rotating { amplitude, .. } => *amplitude == Complex64::new(0.0, 0.0),
            TimeCoefficient::Cosine { .. } => true,
        }
    }

    /// Same profile scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            TimeCoefficient::Constant(v) => TimeCoefficient::Constant(v * s),
            TimeCoefficient::Gaussian { amplitude, center, width, start, end } => {
                TimeCoefficient::Gaussian { amplitude: amplitude * s, center: *center, width: *width, start: *start, end: *end }
            }
            TimeCoefficient::Piecewise(segs) => TimeCoefficient::Piecewise(segs.iter().map(|(a, b, c)| (*a, *b, c.scaled(s))).collect()),
            TimeCoefficient::Rotating { amplitude, omega, phase } => TimeCoefficient::Rotating { amplitude: amplitude * s, omega: *omega, phase: *phase },
            TimeCoefficient::Cosine { amplitude, omega, phase } => TimeCoefficient::Cosine { amplitude: amplitude * s, omega: *omega, phase: *phase },
        }
    }
}

fn gaussian_integral(amplitude: f64, center: f64, width: f64, a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * width;
    amplitude * width * (std::f64::consts::PI / 2.0).sqrt() * (libm::erf((b - center) / s) - libm::erf((a - center) / s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_area_is_exact() {
        let c = TimeCoefficient::gaussian_with_area(0.7, 0.0, 10.0);
        assert!((c.integral(0.0, 10.0).re - 0.7).abs() < 1e-12);
        // midpoint-rule oracle
        let n = 200_000;
        let h = 10.0 / n as f64;
        let s: f64 = (0..n).map(|k| c.eval((k as f64 + 0.5) * h).re * h).sum();
        assert!((s - 0.7).abs() < 1e-9);
    }

    #[test]
    fn gaussian_edges_are_small() {
        let c = TimeCoefficient::gaussian_with_area(1.0, 0.0, 6.0);
        assert!(c.eval(0.0).re / c.eval(3.0).re < 0.012);
    }

    #[test]
    fn piecewise_and_rotating_integrals() {
        let w = TimeCoefficient::window(2.0, 3.0);
        assert_eq!(w.eval(3.0), Complex64::new(0.0, 0.0));
        assert!((w.integral(0.0, 10.0).re - 6.0).abs() < 1e-15);
        let r = TimeCoefficient::Rotating { amplitude: Complex64::new(1.0, 0.0), omega: 2.0, phase: 0.0 };
        assert!(r.integral(0.0, std::f64::consts::PI).norm() < 1e-14);
    }
}
