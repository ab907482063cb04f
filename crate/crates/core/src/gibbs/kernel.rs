//! Autocovariances `C_f(s) = ⟨f_t f_{t+s}⟩` of the scalar forcing and their
//! spectral densities `a(λ) = (1/2π)∫ e^{−iλt} C_f(t) dt`.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Value of the centred cubic B-spline `M₄` (support `[−2, 2]`, unit mass).
fn cubic_bspline(x: f64) -> f64 {
    let x = x.abs();
    if x >= 2.0 {
        0.0
    } else if x >= 1.0 {
        (2.0 - x).powi(3) / 6.0
    } else {
        2.0 / 3.0 - x * x + 0.5 * x.powi(3)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `σ²δ(s)`.
    White { sigma2: f64 },
    /// `A·exp(−(s/ℓ)²)`.
    Gaussian { amplitude: f64, scale: f64 },
    /// `A·M₄(s/w)/M₄(0)`: a cubic B-spline bump supported on `|s| < 2w`.
    CubicBSpline { amplitude: f64, width: f64 },
    /// `A·exp(−r|s|)`, the autocovariance of an Ornstein–Uhlenbeck forcing.
    Exponential { amplitude: f64, rate: f64 },
    Sum(Vec<Kernel>),
}

impl Kernel {
    /// `exp(−s²)`.
    pub fn default_gaussian() -> Self {
        Kernel::Gaussian { amplitude: 1.0, scale: 1.0 }
    }

    pub fn zero() -> Self {
        Kernel::Sum(Vec::new())
    }

    /// Parses `white:SIGMA2`, `gauss`, `gauss:A,L`, `bspline:A,W`, `exp:A,R`,
    /// and `+`-separated sums of these.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split('+').map(str::trim).collect();
        if parts.len() > 1 {
            let k = Kernel::Sum(parts.into_iter().map(Self::parse).collect::<Result<_>>()?);
            k.validate()?;
            return Ok(k);
        }
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("kernel spec `{spec}`: {e}")))?
        };
        let k = match (kind.trim(), nums.as_slice()) {
            ("white", [s]) => Kernel::White { sigma2: *s },
            ("gauss", []) => Self::default_gaussian(),
            ("gauss", [a, l]) => Kernel::Gaussian { amplitude: *a, scale: *l },
            ("bspline", [a, w]) => Kernel::CubicBSpline { amplitude: *a, width: *w },
            ("exp", [a, r]) => Kernel::Exponential { amplitude: *a, rate: *r },
            ("zero", []) => Self::zero(),
            _ => return Err(Error::Parse(format!("unrecognised kernel spec `{spec}`"))),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("{msg} in kernel {self:?}")));
        match self {
            Kernel::White { sigma2 } if !(*sigma2 >= 0.0 && sigma2.is_finite()) => bad("negative intensity"),
            Kernel::Gaussian { amplitude, scale } | Kernel::CubicBSpline { amplitude, width: scale }
                if !(*amplitude >= 0.0 && *scale > 0.0 && amplitude.is_finite() && scale.is_finite()) =>
            {
                bad("non-positive parameter")
            }
            Kernel::Exponential { amplitude, rate }
                if !(*amplitude >= 0.0 && *rate > 0.0 && amplitude.is_finite() && rate.is_finite()) =>
            {
                bad("non-positive parameter")
            }
            Kernel::Sum(parts) => {
                if parts.iter().any(|k| matches!(k, Kernel::White { .. })) {
                    return bad("white component");
                }
                parts.iter().try_for_each(Kernel::validate)
            }
            _ => Ok(()),
        }
    }

    pub fn is_white(&self) -> bool {
        matches!(self, Kernel::White { .. })
    }

    /// `C_f(s)`; white noise has no pointwise value and yields `NaN` off zero.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Kernel::White { .. } => {
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Kernel::Gaussian { amplitude, scale } => amplitude * (-(s / scale).powi(2)).exp(),
            Kernel::CubicBSpline { amplitude, width } => amplitude * cubic_bspline(s / width) * 1.5,
            Kernel::Exponential { amplitude, rate } => amplitude * (-rate * s.abs()).exp(),
            Kernel::Sum(ref parts) => parts.iter().map(|k| k.eval(s)).sum(),
        }
    }

    /// `C_f(0)`, the variance of the forcing (infinite for white noise).
    pub fn variance(&self) -> f64 {
        self.eval(0.0)
    }

    /// `a(λ)`.
    pub fn spectral_density(&self, lambda: f64) -> f64 {
        match *self {
            Kernel::White { sigma2 } => sigma2 / (2.0 * PI),
            Kernel::Gaussian { amplitude, scale } => {
                amplitude * scale * (-(lambda * scale).powi(2) / 4.0).exp() / (2.0 * PI.sqrt())
            }
            Kernel::CubicBSpline { amplitude, width } => {
                1.5 * amplitude * width * sinc(0.5 * width * lambda).powi(4) / (2.0 * PI)
            }
            Kernel::Exponential { amplitude, rate } => amplitude * rate / (PI * (rate * rate + lambda * lambda)),
            Kernel::Sum(ref parts) => parts.iter().map(|k| k.spectral_density(lambda)).sum(),
        }
    }

    /// `∫_x^∞ |C_f(u)| du`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        match *self {
            Kernel::White { sigma2 } => {
                if x <= 0.0 {
                    sigma2
                } else {
                    0.0
                }
            }
            Kernel::Gaussian { amplitude, scale } => 0.5 * amplitude * scale * PI.sqrt() * erfc(x / scale),
            Kernel::CubicBSpline { amplitude, width } => {
                if x >= 2.0 * width {
                    0.0
                } else {
                    1.5 * amplitude * width
                }
            }
            Kernel::Exponential { amplitude, rate } => {
                if x >= 0.0 {
                    amplitude / rate * (-rate * x).exp()
                } else {
                    amplitude / rate * (2.0 - (rate * x).exp())
                }
            }
            Kernel::Sum(ref parts) => parts.iter().map(|k| k.tail_mass(x)).sum(),
        }
    }

    /// Points where `C_f` is not smooth (knots of the spline, the cusp of
    /// the exponential).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match *self {
            Kernel::CubicBSpline { width, .. } => (-2..=2).map(|k| k as f64 * width).collect(),
            Kernel::Exponential { .. } => vec![0.0],
            Kernel::Sum(ref parts) => parts.iter().flat_map(Kernel::breakpoints).collect(),
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Smallest time scale of the kernel, used to size quadrature panels.
    pub fn time_scale(&self) -> f64 {
        match *self {
            Kernel::White { .. } => 0.0,
            Kernel::Gaussian { scale, .. } => scale,
            Kernel::CubicBSpline { width, .. } => width,
            Kernel::Exponential { rate, .. } => 1.0 / rate,
            Kernel::Sum(ref parts) => parts.iter().map(Kernel::time_scale).fold(f64::INFINITY, f64::min),
        }
    }

    /// Bochner spot check, see [`bochner_min_ratio`].
    pub fn bochner_min_ratio(&self, half_width: f64, dt: f64) -> Result<f64> {
        if self.is_white() {
            return Ok(0.0);
        }
        bochner_min_ratio(|s| self.eval(s), half_width, dt)
    }
}

/// Discrete Fourier transform of an even function sampled on `[−L, L)` with
/// spacing `dt`. Returns the smallest transformed value relative to the
/// largest, which is non-negative for an autocovariance up to truncation and
/// aliasing error.
pub fn bochner_min_ratio(c: impl Fn(f64) -> f64, half_width: f64, dt: f64) -> Result<f64> {
    if !(half_width > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument("Bochner grid needs positive width and spacing".into()));
    }
    let n = (2.0 * half_width / dt).round() as usize;
    // Circular layout around zero keeps the transform real.
    let mut data: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let s = if k <= n / 2 { k as f64 * dt } else { (k as f64 - n as f64) * dt };
            Complex::new(c(s), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut data);
    let max = data.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min = data.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    Ok(if max > 0.0 { min / max } else { 0.0 })
}
