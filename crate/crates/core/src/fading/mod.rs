//! Fading power-gain laws, samplers and the logarithmic Jensen's gap.
//!
//! A [`FadingModel`] describes the law of `W = |g|^2` for one link. Its
//! `mean_power` is `E[W]`, i.e. the SNR or INR of the link in linear scale.

mod jensen;
pub mod quadrature;

pub use jensen::{
    expected_log_shifted, jensen_gap_closed_form, jensen_gap_numeric, log_moment_lower_bound,
    default_xi_grid, JensenGapReport, Method, XiPoint,
};

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Quadrature target for every 1-D expectation.
pub const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rayleigh,
    Gamma { k: f64 },
    Weibull { k: f64 },
    Deterministic,
    Tabulated(TabulatedPdf),
}

/// Declared near-zero bound `f(w) <= a * w^(b-1)` on the first grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub a: f64,
    pub b: f64,
}

/// Piecewise-linear density through `(w, f(w))` points, plus an optional
/// atom at zero. The table fixes the shape of the law; [`FadingModel`]
/// rescales it to the requested mean power.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPdf {
    points: Vec<(f64, f64)>,
    envelope: Option<Envelope>,
    zero_mass: f64,
    cdf: Vec<f64>,
    mean: f64,
}

impl TabulatedPdf {
    pub fn new(points: Vec<(f64, f64)>, envelope: Option<Envelope>, zero_mass: f64) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidModel(format!("tabulated pdf: {msg}")));
        if points.len() < 2 {
            return bad("need at least two grid points");
        }
        if !(0.0..1.0).contains(&zero_mass) {
            return bad("zero_mass must lie in [0, 1)");
        }
        if points.iter().any(|&(w, f)| !w.is_finite() || !f.is_finite() || f < 0.0) {
            return bad("grid values must be finite with f >= 0");
        }
        if points[0].0 < 0.0 || points.windows(2).any(|p| p[1].0 <= p[0].0) {
            return bad("grid must be nonnegative and strictly increasing");
        }
        let mut cdf = vec![0.0];
        let mut mean = 0.0;
        for p in points.windows(2) {
            let ((w0, f0), (w1, f1)) = (p[0], p[1]);
            let h = w1 - w0;
            cdf.push(cdf.last().unwrap() + 0.5 * h * (f0 + f1));
            mean += h * (f0 * (2.0 * w0 + w1) + f1 * (w0 + 2.0 * w1)) / 6.0;
        }
        let mass = *cdf.last().unwrap();
        if (mass - (1.0 - zero_mass)).abs() > 1e-6 {
            return bad(&format!(
                "density integrates to {mass} but 1 - zero_mass = {}",
                1.0 - zero_mass
            ));
        }
        if mean <= 0.0 {
            return bad("mean must be positive");
        }
        if points[0].0 == 0.0 {
            let Some(env) = envelope else {
                return bad("grid starting at w = 0 needs a near-zero envelope (a, b)");
            };
            if !(env.a >= 0.0 && env.b > 0.0) {
                return bad("envelope needs a >= 0 and b > 0");
            }
            let ((_, f0), (w1, f1)) = (points[0], points[1]);
            for i in 1..=64 {
                let t = f64::from(i) / 64.0;
                let w = t * w1;
                let f = f0 + (f1 - f0) * t;
                if f > env.a * w.powf(env.b - 1.0) * (1.0 + 1e-12) {
                    return bad(&format!("density {f} exceeds envelope at w = {w}"));
                }
            }
        }
        Ok(Self {
            points,
            envelope,
            zero_mass,
            cdf,
            mean,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    pub fn zero_mass(&self) -> f64 {
        self.zero_mass
    }

    /// Mean of the table before rescaling.
    pub fn table_mean(&self) -> f64 {
        self.mean
    }

    fn density(&self, w: f64) -> f64 {
        let i = self.points.partition_point(|p| p.0 <= w);
        if i == 0 || i == self.points.len() {
            return 0.0;
        }
        let ((w0, f0), (w1, f1)) = (self.points[i - 1], self.points[i]);
        f0 + (f1 - f0) * (w - w0) / (w1 - w0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.zero_mass {
            return 0.0;
        }
        let total = *self.cdf.last().unwrap();
        let target = (u - self.zero_mass) / (1.0 - self.zero_mass) * total;
        let i = self
            .cdf
            .partition_point(|&c| c <= target)
            .clamp(1, self.points.len() - 1);
        let ((w0, f0), (w1, f1)) = (self.points[i - 1], self.points[i]);
        let h = w1 - w0;
        let slope = (f1 - f0) / h;
        let r = target - self.cdf[i - 1];
        let root = (f0 * f0 + 2.0 * slope * r).max(0.0).sqrt();
        let d = if f0 + root > 0.0 { 2.0 * r / (f0 + root) } else { 0.0 };
        w0 + d.clamp(0.0, h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct FadingModel {
    shape: Shape,
    mean_power: f64,
}

impl FadingModel {
    pub fn new(shape: Shape, mean_power: f64) -> Result<Self> {
        if !mean_power.is_finite() || mean_power < 0.0 {
            return Err(Error::InvalidModel(format!(
                "mean_power must be finite and >= 0, got {mean_power}"
            )));
        }
        match &shape {
            Shape::Gamma { k } | Shape::Weibull { k } if !(k.is_finite() && *k > 0.0) => {
                return Err(Error::InvalidModel(format!("shape parameter k must be > 0, got {k}")));
            }
            Shape::Deterministic => {}
            _ if mean_power == 0.0 => {
                return Err(Error::InvalidModel(
                    "random fading needs mean_power > 0; use a deterministic link for an absent path"
                        .into(),
                ));
            }
            _ => {}
        }
        Ok(Self { shape, mean_power })
    }

    pub fn rayleigh(mean_power: f64) -> Result<Self> {
        Self::new(Shape::Rayleigh, mean_power)
    }

    pub fn deterministic(mean_power: f64) -> Result<Self> {
        Self::new(Shape::Deterministic, mean_power)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mean_power(&self) -> f64 {
        self.mean_power
    }

    /// Same law rescaled to a new mean power.
    pub fn with_mean_power(&self, mean_power: f64) -> Result<Self> {
        Self::new(self.shape.clone(), mean_power)
    }

    /// `E[W^2]`.
    pub fn second_moment(&self) -> f64 {
        let m = self.mean_power;
        match &self.shape {
            Shape::Rayleigh => 2.0 * m * m,
            Shape::Gamma { k } => m * m * (k + 1.0) / k,
            Shape::Weibull { k } => {
                let g1 = gamma(1.0 + 1.0 / k);
                m * m * gamma(1.0 + 2.0 / k) / (g1 * g1)
            }
            Shape::Deterministic => m * m,
            Shape::Tabulated(t) => {
                let s = m / t.mean;
                let mut acc = 0.0;
                for p in t.points.windows(2) {
                    let ((w0, f0), (w1, f1)) = (p[0], p[1]);
                    // Exact integral of w^2 times a linear density.
                    let h = w1 - w0;
                    let slope = (f1 - f0) / h;
                    let c0 = f0 - slope * w0;
                    acc += c0 * (w1.powi(3) - w0.powi(3)) / 3.0
                        + slope * (w1.powi(4) - w0.powi(4)) / 4.0;
                }
                acc * s * s
            }
        }
    }

    /// Probability of the atom `W = 0`.
    pub fn zero_mass(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated(t) => t.zero_mass,
            Shape::Deterministic if self.mean_power == 0.0 => 1.0,
            _ => 0.0,
        }
    }

    /// `ln(w f(w))` at `w = mean_power * e^s` for the parametric shapes.
    fn log_size_biased_density(&self, s: f64) -> f64 {
        match self.shape {
            Shape::Rayleigh => s - s.exp(),
            Shape::Gamma { k } => k * (k.ln() + s) - k * s.exp() - ln_gamma(k),
            Shape::Weibull { k } => {
                let z = k * (s + ln_gamma(1.0 + 1.0 / k));
                k.ln() + z - z.exp()
            }
            _ => unreachable!("only parametric shapes have a closed-form density"),
        }
    }

    /// `E[h(W)]` by deterministic quadrature, accurate to about [`QUAD_TOL`]
    /// when `h` grows at most logarithmically.
    pub fn expectation_quadrature<H: Fn(f64) -> f64>(&self, h: H) -> Result<f64> {
        let m = self.mean_power;
        match &self.shape {
            Shape::Deterministic => Ok(h(m)),
            Shape::Tabulated(t) => {
                let s = m / t.mean;
                let mut acc = 0.0;
                if t.zero_mass > 0.0 {
                    acc += t.zero_mass * h(0.0);
                }
                for p in t.points.windows(2) {
                    let (w0, w1) = (p[0].0, p[1].0);
                    acc += quadrature::integrate(|w| h(s * w) * t.density(w), w0, w1, QUAD_TOL)?;
                }
                Ok(acc)
            }
            _ => quadrature::integrate_real_line(
                |s| {
                    let ld = self.log_size_biased_density(s);
                    let w = m * s.exp();
                    // Far tails underflow before the integrand matters.
                    if ld < -745.0 || w == 0.0 || !w.is_finite() {
                        0.0
                    } else {
                        h(w) * ld.exp()
                    }
                },
                QUAD_TOL,
            ),
        }
    }
}

/// One i.i.d. draw of `W`.
pub fn sample_power<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> f64 {
    PowerLaw::new(model).sample(rng)
}

#[derive(Debug, Clone)]
enum PowerLaw {
    Constant(f64),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Weibull(Weibull<f64>),
    Table(TabulatedPdf, f64),
}

impl PowerLaw {
    fn new(model: &FadingModel) -> Self {
        let m = model.mean_power;
        // Parameters were validated by FadingModel::new.
        match &model.shape {
            Shape::Deterministic => PowerLaw::Constant(m),
            Shape::Rayleigh => PowerLaw::Exp(Exp::new(1.0 / m).expect("valid rate")),
            Shape::Gamma { k } => PowerLaw::Gamma(Gamma::new(*k, m / k).expect("valid gamma")),
            Shape::Weibull { k } => {
                let scale = m / gamma(1.0 + 1.0 / k);
                PowerLaw::Weibull(Weibull::new(scale, *k).expect("valid weibull"))
            }
            Shape::Tabulated(t) => PowerLaw::Table(t.clone(), m / t.mean),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PowerLaw::Constant(m) => *m,
            PowerLaw::Exp(d) => d.sample(rng),
            PowerLaw::Gamma(d) => d.sample(rng),
            PowerLaw::Weibull(d) => d.sample(rng),
            PowerLaw::Table(t, s) => s * t.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law", content = "phase")]
pub enum PhaseLaw {
    /// Uniform on `[0, 2π)`, independent of the magnitude.
    Uniform,
    Fixed(f64),
}

/// Complex link gain `g = sqrt(W) e^{iφ}`.
#[derive(Debug, Clone)]
pub struct ComplexGainSampler {
    model: FadingModel,
    phase: PhaseLaw,
    law: PowerLaw,
}

impl ComplexGainSampler {
    /// Uniform phase for random shapes, phase 0 for deterministic links.
    pub fn new(model: FadingModel) -> Self {
        let phase = match model.shape {
            Shape::Deterministic => PhaseLaw::Fixed(0.0),
            _ => PhaseLaw::Uniform,
        };
        Self::with_phase(model, phase)
    }

    pub fn with_phase(model: FadingModel, phase: PhaseLaw) -> Self {
        let law = PowerLaw::new(&model);
        Self { model, phase, law }
    }

    pub fn model(&self) -> &FadingModel {
        &self.model
    }

    pub fn phase_law(&self) -> PhaseLaw {
        self.phase
    }

    pub fn mean_power(&self) -> f64 {
        self.model.mean_power
    }

    pub fn sample_power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.law.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let w = self.law.sample(rng);
        let phi = match self.phase {
            PhaseLaw::Uniform => 2.0 * PI * rng.random::<f64>(),
            PhaseLaw::Fixed(p) => p,
        };
        Complex64::from_polar(w.sqrt(), phi)
    }
}

impl PartialEq for ComplexGainSampler {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.phase == other.phase
    }
}

/// `log2(x)`.
#[inline]
pub fn lg(x: f64) -> f64 {
    x.ln() / LN_2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    mean_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zero_mass: Option<f64>,
}

impl TryFrom<ModelRepr> for FadingModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let need_k = || {
            r.k
                .ok_or_else(|| Error::InvalidModel(format!("shape {} needs k", r.shape)))
        };
        let shape = match r.shape.to_ascii_lowercase().as_str() {
            "rayleigh" => Shape::Rayleigh,
            "gamma" | "nakagami" => Shape::Gamma { k: need_k()? },
            "weibull" => Shape::Weibull { k: need_k()? },
            "deterministic" | "static" => Shape::Deterministic,
            "tabulated" => {
                let grid = r
                    .grid
                    .ok_or_else(|| Error::InvalidModel("tabulated shape needs grid".into()))?;
                Shape::Tabulated(TabulatedPdf::new(grid, r.envelope, r.zero_mass.unwrap_or(0.0))?)
            }
            other => return Err(Error::InvalidModel(format!("unknown shape {other:?}"))),
        };
        FadingModel::new(shape, r.mean_power)
    }
}

impl From<FadingModel> for ModelRepr {
    fn from(m: FadingModel) -> Self {
        let mut r = ModelRepr {
            shape: String::new(),
            k: None,
            mean_power: m.mean_power,
            grid: None,
            envelope: None,
            zero_mass: None,
        };
        r.shape = match m.shape {
            Shape::Rayleigh => "rayleigh",
            Shape::Gamma { k } => {
                r.k = Some(k);
                "gamma"
            }
            Shape::Weibull { k } => {
                r.k = Some(k);
                "weibull"
            }
            Shape::Deterministic => "deterministic",
            Shape::Tabulated(t) => {
                r.grid = Some(t.points);
                r.envelope = t.envelope;
                r.zero_mass = (t.zero_mass > 0.0).then_some(t.zero_mass);
                "tabulated"
            }
        }
        .to_string();
        r
    }
}
