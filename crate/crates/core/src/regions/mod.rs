//! Inner and outer rate regions as lists of half-planes `c1 R1 + c2 R2 <= β`.

mod bounds;
mod certify;

pub use bounds::{
    fb_inner, fb_outer, imac_regions, nofb_exact, nofb_inner, nofb_outer, nphase_outer_sym,
    static_equivalent, static_equivalent_outer, Scheme,
};
pub use certify::{
    certify_fb, certify_imac, certify_nofb, certify_static, fb_union_gap, region_gap, rho_grid,
    static_deviation,
    standard_grid, sweep_csv, symmetric_sweep, symmetric_sweep_with, CertPoint, ConstraintDelta,
    GapReport, GridPoint, StaticDeviation, SweepInner, SweepRow, SWEEP_CSV_HEADER,
};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{ComplexGainSampler, FadingModel, Shape};

/// The four links of a two-user interference channel.
///
/// Gains are always ordered `[g11, g21, g22, g12]`, where `gij` runs from
/// transmitter `i` to receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    links: [ComplexGainSampler; 4],
}

pub const G11: usize = 0;
pub const G21: usize = 1;
pub const G22: usize = 2;
pub const G12: usize = 3;

impl ChannelSpec {
    pub fn new(
        g11: ComplexGainSampler,
        g21: ComplexGainSampler,
        g22: ComplexGainSampler,
        g12: ComplexGainSampler,
    ) -> Self {
        Self {
            links: [g11, g21, g22, g12],
        }
    }

    pub fn from_models(g11: FadingModel, g21: FadingModel, g22: FadingModel, g12: FadingModel) -> Self {
        Self::new(
            ComplexGainSampler::new(g11),
            ComplexGainSampler::new(g21),
            ComplexGainSampler::new(g22),
            ComplexGainSampler::new(g12),
        )
    }

    /// `g11 ~ g22` with mean `snr`, `g12 ~ g21` with mean `inr`.
    pub fn symmetric(snr: f64, inr: f64, shape: Shape) -> Result<Self> {
        let d = FadingModel::new(shape.clone(), snr)?;
        let c = FadingModel::new(shape, inr)?;
        Ok(Self::from_models(d.clone(), c.clone(), d, c))
    }

    /// Symmetric channel with `INR = SNR^alpha`.
    pub fn symmetric_alpha(snr: f64, alpha: f64, shape: Shape) -> Result<Self> {
        Self::symmetric(snr, snr.powf(alpha), shape)
    }

    pub fn link(&self, idx: usize) -> &ComplexGainSampler {
        &self.links[idx]
    }

    pub fn snr1(&self) -> f64 {
        self.links[G11].mean_power()
    }

    pub fn snr2(&self) -> f64 {
        self.links[G22].mean_power()
    }

    /// `E|g12|^2`, the interference user 1 causes at receiver 2.
    pub fn inr1(&self) -> f64 {
        self.links[G12].mean_power()
    }

    /// `E|g21|^2`.
    pub fn inr2(&self) -> f64 {
        self.links[G21].mean_power()
    }

    pub fn is_symmetric(&self) -> bool {
        self.links[G11].model() == self.links[G22].model()
            && self.links[G12].model() == self.links[G21].model()
    }

    pub fn is_deterministic(&self) -> bool {
        self.links
            .iter()
            .all(|l| matches!(l.model().shape(), Shape::Deterministic))
    }

    /// Static channel with real gains `sqrt(SNR_i)`, `sqrt(INR_i)`.
    pub fn static_equivalent(&self) -> Self {
        let det = |l: &ComplexGainSampler| {
            ComplexGainSampler::new(
                FadingModel::deterministic(l.mean_power()).expect("mean powers are validated"),
            )
        };
        Self {
            links: [
                det(&self.links[0]),
                det(&self.links[1]),
                det(&self.links[2]),
                det(&self.links[3]),
            ],
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> [Complex64; 4] {
        [
            self.links[0].sample(rng),
            self.links[1].sample(rng),
            self.links[2].sample(rng),
            self.links[3].sample(rng),
        ]
    }

    pub fn samplers(&self) -> &[ComplexGainSampler; 4] {
        &self.links
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ChannelRepr {
    pub g11: FadingModel,
    pub g21: FadingModel,
    pub g22: FadingModel,
    pub g12: FadingModel,
}

impl Serialize for ChannelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRepr {
            g11: self.links[G11].model().clone(),
            g21: self.links[G21].model().clone(),
            g22: self.links[G22].model().clone(),
            g12: self.links[G12].model().clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ChannelRepr::deserialize(d)?;
        Ok(Self::from_models(r.g11, r.g21, r.g22, r.g12))
    }
}

/// Power split between private and common codewords, plus the feedback
/// correlation `ρ = rho_mag e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub lambda_p1: f64,
    pub lambda_p2: f64,
    pub rho_mag: f64,
    pub theta: f64,
}

fn private_power(inr: f64, cap: f64) -> f64 {
    if inr > 0.0 {
        (1.0 / inr).min(cap)
    } else {
        cap
    }
}

impl SplitParams {
    /// `λ_pk = min(1/INR_k, 1)`.
    pub fn nofb(ch: &ChannelSpec) -> Self {
        Self {
            lambda_p1: private_power(ch.inr1(), 1.0),
            lambda_p2: private_power(ch.inr2(), 1.0),
            rho_mag: 0.0,
            theta: 0.0,
        }
    }

    /// `λ_pk = min(1/INR_k, 1 - |ρ|^2)`.
    pub fn fb(ch: &ChannelSpec, rho_mag: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_mag) {
            return Err(Error::RhoOutOfRange(rho_mag));
        }
        let cap = 1.0 - rho_mag * rho_mag;
        Ok(Self {
            lambda_p1: private_power(ch.inr1(), cap),
            lambda_p2: private_power(ch.inr2(), cap),
            rho_mag,
            theta: theta.rem_euclid(std::f64::consts::TAU),
        })
    }

    pub fn rho(&self) -> Complex64 {
        Complex64::from_polar(self.rho_mag, self.theta)
    }

    /// Checks the power-split rule for `ch` (no feedback when `feedback` is false).
    pub fn validate(&self, ch: &ChannelSpec, feedback: bool) -> Result<()> {
        let expect = if feedback {
            Self::fb(ch, self.rho_mag, self.theta)?
        } else {
            if self.rho_mag != 0.0 {
                return Err(Error::InvalidSplit("non-feedback split must have rho = 0".into()));
            }
            Self::nofb(ch)
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
        if close(self.lambda_p1, expect.lambda_p1) && close(self.lambda_p2, expect.lambda_p2) {
            Ok(())
        } else {
            Err(Error::InvalidSplit(format!(
                "private powers ({}, {}) do not follow min(1/INR, {}) = ({}, {})",
                self.lambda_p1,
                self.lambda_p2,
                1.0 - self.rho_mag * self.rho_mag,
                expect.lambda_p1,
                expect.lambda_p2
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConstraint {
    pub c1: u32,
    pub c2: u32,
    /// May be negative before clamping.
    pub bound: f64,
    pub stderr: f64,
    pub label: String,
}

impl RateConstraint {
    fn weight(&self) -> f64 {
        f64::from(self.c1 + self.c2)
    }

    fn clamped(&self) -> f64 {
        self.bound.max(0.0)
    }

    fn holds(&self, r: (f64, f64), tol: f64) -> bool {
        f64::from(self.c1) * r.0 + f64::from(self.c2) * r.1 <= self.clamped() + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    NofbInner,
    NofbOuter,
    /// Exact Gaussian-input evaluation of the non-feedback scheme.
    NofbExact,
    FbInner,
    FbOuter,
    ImacInner,
    ImacOuter,
    StaticInner,
    StaticOuter,
    NphaseOuterSym,
}

impl RegionKind {
    pub fn is_outer(self) -> bool {
        matches!(
            self,
            Self::NofbOuter | Self::FbOuter | Self::ImacOuter | Self::StaticOuter | Self::NphaseOuterSym
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub kind: RegionKind,
    pub params: Option<SplitParams>,
    pub constraints: Vec<RateConstraint>,
}

const GEOM_TOL: f64 = 1e-9;

impl RateRegion {
    pub fn constraint(&self, label: &str) -> Option<&RateConstraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Largest `R` with `(R, R)` in the region.
    pub fn sym_rate(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.bound / c.weight())
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Standard error of [`sym_rate`](Self::sym_rate) from its binding constraint.
    pub fn sym_rate_stderr(&self) -> f64 {
        self.constraints
            .iter()
            .min_by(|a, b| (a.bound / a.weight()).total_cmp(&(b.bound / b.weight())))
            .map_or(0.0, |c| c.stderr / c.weight())
    }

    pub fn max_stderr(&self) -> f64 {
        self.constraints.iter().map(|c| c.stderr).fold(0.0, f64::max)
    }

    /// Whether `r` satisfies every clamped constraint and `r >= 0`.
    pub fn contains(&self, r: (f64, f64), tol: f64) -> bool {
        r.0 >= -tol && r.1 >= -tol && self.constraints.iter().all(|c| c.holds(r, tol))
    }

    /// Corner points of the region intersected with the nonnegative
    /// quadrant, in counter-clockwise order starting at the origin.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut lines: Vec<(f64, f64, f64)> = self
            .constraints
            .iter()
            .map(|c| (f64::from(c.c1), f64::from(c.c2), c.clamped()))
            .collect();
        lines.push((1.0, 0.0, 0.0));
        lines.push((0.0, 1.0, 0.0));
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a1, b1, r1) = lines[i];
                let (a2, b2, r2) = lines[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let p = ((r1 * b2 - r2 * b1) / det, (a1 * r2 - a2 * r1) / det);
                let tol = GEOM_TOL * (1.0 + p.0.abs() + p.1.abs());
                if self.contains(p, tol) {
                    let p = (p.0.max(0.0), p.1.max(0.0));
                    if !pts
                        .iter()
                        .any(|q| (q.0 - p.0).abs() <= tol && (q.1 - p.1).abs() <= tol)
                    {
                        pts.push(p);
                    }
                }
            }
        }
        pts.sort_by(|a, b| a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)).then(a.0.total_cmp(&b.0)));
        pts
    }
}
