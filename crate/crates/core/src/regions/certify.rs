use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bounds::{
    fb_inner, fb_outer, imac_regions, nofb_exact, nofb_inner, nofb_outer, static_equivalent, Scheme,
};
use super::{ChannelSpec, RateRegion, RegionKind, SplitParams};
use crate::error::{Error, Result};
use crate::fading::Shape;
use crate::mc::McConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDelta {
    pub outer_label: String,
    pub inner_label: String,
    pub c1: u32,
    pub c2: u32,
    /// `(outer - inner) / (c1 + c2)`.
    pub delta: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub delta_vertex: f64,
    pub delta_constraintwise: Vec<ConstraintDelta>,
    /// Worst-case standard error of `delta_vertex`.
    pub delta_stderr: f64,
}

impl GapReport {
    pub fn max_constraintwise(&self) -> f64 {
        self.delta_constraintwise
            .iter()
            .map(|d| d.delta)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Nofb,
    Fb,
    Imac,
    Static,
    Nphase,
}

fn family(kind: RegionKind) -> Family {
    match kind {
        RegionKind::NofbInner | RegionKind::NofbOuter | RegionKind::NofbExact => Family::Nofb,
        RegionKind::FbInner | RegionKind::FbOuter => Family::Fb,
        RegionKind::ImacInner | RegionKind::ImacOuter => Family::Imac,
        RegionKind::StaticInner | RegionKind::StaticOuter => Family::Static,
        RegionKind::NphaseOuterSym => Family::Nphase,
    }
}

fn check_compatible(outer: &RateRegion, inner: &RateRegion) -> Result<()> {
    if family(outer.kind) != family(inner.kind) || outer.constraints.len() != inner.constraints.len() {
        return Err(Error::IncompatibleRegions(format!(
            "{:?} ({} constraints) vs {:?} ({} constraints)",
            outer.kind,
            outer.constraints.len(),
            inner.kind,
            inner.constraints.len()
        )));
    }
    if family(outer.kind) == Family::Fb {
        let rho = |r: &RateRegion| r.params.map(|p| p.rho());
        match (rho(outer), rho(inner)) {
            (Some(a), Some(b)) if (a - b).norm() <= 1e-9 => {}
            (a, b) => {
                return Err(Error::IncompatibleRegions(format!(
                    "feedback regions need matched rho, got {a:?} and {b:?}"
                )))
            }
        }
    }
    Ok(())
}

/// Smallest `t >= 0` such that `max(v - t(1,1), 0)` lies in `inner`.
fn backoff(inner: &RateRegion, v: (f64, f64)) -> f64 {
    let hi = v.0.max(v.1).max(0.0);
    inner
        .constraints
        .iter()
        .map(|c| {
            let load = |t: f64| {
                f64::from(c.c1) * (v.0 - t).max(0.0) + f64::from(c.c2) * (v.1 - t).max(0.0)
            };
            let cap = c.bound.max(0.0);
            if load(0.0) <= cap {
                return 0.0;
            }
            let (mut lo, mut up) = (0.0, hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if load(mid) <= cap {
                    up = mid;
                } else {
                    lo = mid;
                }
                if up - lo <= 1e-13 * (1.0 + hi) {
                    break;
                }
            }
            up
        })
        .fold(0.0, f64::max)
}

/// Capacity gap between an outer and an inner region, both vertex-wise and
/// per paired constraint.
pub fn region_gap(outer: &RateRegion, inner: &RateRegion) -> Result<GapReport> {
    check_compatible(outer, inner)?;
    let delta_vertex = outer
        .vertices()
        .into_iter()
        .map(|v| backoff(inner, v))
        .fold(0.0, f64::max);
    let delta_constraintwise = outer
        .constraints
        .iter()
        .zip(&inner.constraints)
        .map(|(o, i)| {
            let w = f64::from(o.c1 + o.c2);
            ConstraintDelta {
                outer_label: o.label.clone(),
                inner_label: i.label.clone(),
                c1: o.c1,
                c2: o.c2,
                delta: (o.bound - i.bound) / w,
                stderr: (o.stderr + i.stderr) / w,
            }
        })
        .collect();
    Ok(GapReport {
        delta_vertex,
        delta_constraintwise,
        delta_stderr: inner.max_stderr() + outer.max_stderr(),
    })
}

/// Fading bound against its static counterpart for one constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDeviation {
    pub label: String,
    pub c1: u32,
    pub c2: u32,
    pub fading: f64,
    pub static_bound: f64,
    /// `(static - fading) / (c1 + c2)`.
    pub deviation: f64,
    pub stderr: f64,
}

impl StaticDeviation {
    /// Whether the deviation lies in `[0, limit]` up to `sigmas` standard errors.
    pub fn within(&self, limit: f64, sigmas: f64) -> bool {
        let slack = sigmas * self.stderr;
        self.deviation >= -slack && self.deviation <= limit + slack
    }
}

/// Per-constraint deviation of the fading inner region from the static one.
/// Under feedback the fading region uses the scheme's `θ`.
pub fn static_deviation(ch: &ChannelSpec, scheme: Scheme, cfg: &McConfig) -> Result<Vec<StaticDeviation>> {
    let fading = match scheme {
        Scheme::NoFeedback => nofb_inner(ch, cfg)?,
        Scheme::Feedback { rho_mag, theta } => fb_inner(ch, SplitParams::fb(ch, rho_mag, theta)?, cfg)?,
    };
    let st = static_equivalent(ch, scheme)?;
    Ok(fading
        .constraints
        .iter()
        .zip(&st.constraints)
        .map(|(f, s)| {
            let w = f64::from(f.c1 + f.c2);
            StaticDeviation {
                label: f.label.clone(),
                c1: f.c1,
                c2: f.c2,
                fading: f.bound,
                static_bound: s.bound,
                deviation: (s.bound - f.bound) / w,
                stderr: f.stderr / w,
            }
        })
        .collect())
}

/// Point of a symmetric grid with `INR = SNR^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub snr: f64,
    pub alpha: f64,
}

impl GridPoint {
    pub fn inr(&self) -> f64 {
        self.snr.powf(self.alpha)
    }
}

/// SNR in {10, 10^3, 10^6} crossed with alpha in {0.25, 0.5, 1}.
pub fn standard_grid() -> Vec<GridPoint> {
    let mut grid = Vec::with_capacity(9);
    for snr in [1e1, 1e3, 1e6] {
        for alpha in [0.25, 0.5, 1.0] {
            grid.push(GridPoint { snr, alpha });
        }
    }
    grid
}

/// Outcome of one certification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertPoint {
    pub snr: f64,
    pub inr: f64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_mag: Option<f64>,
    pub delta: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CertPoint {
    fn new(p: GridPoint, rho_mag: Option<f64>, delta: f64, stderr: f64, bound: f64) -> Self {
        Self {
            snr: p.snr,
            inr: p.inr(),
            alpha: p.alpha,
            rho_mag,
            delta,
            stderr,
            bound,
            pass: delta <= bound + 3.0 * stderr,
        }
    }
}

/// Checks `delta_vertex <= c_jg + 1` for the non-feedback regions at every grid point.
pub fn certify_nofb(shape: &Shape, c_jg: f64, grid: &[GridPoint], cfg: &McConfig) -> Result<Vec<CertPoint>> {
    cfg.execution.try_map(grid.len(), |i| {
        let p = grid[i];
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), shape.clone())?;
        let gap = region_gap(&nofb_outer(&ch, cfg)?, &nofb_inner(&ch, cfg)?)?;
        Ok(CertPoint::new(p, None, gap.delta_vertex, gap.delta_stderr, c_jg + 1.0))
    })
}

/// Checks `delta_vertex <= c_jg + 2` for matched feedback pairs with `θ = 0`.
pub fn certify_fb(
    shape: &Shape,
    c_jg: f64,
    rho_mags: &[f64],
    grid: &[GridPoint],
    cfg: &McConfig,
) -> Result<Vec<CertPoint>> {
    let n = rho_mags.len();
    cfg.execution.try_map(grid.len() * n, |i| {
        let (p, rho_mag) = (grid[i / n], rho_mags[i % n]);
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), shape.clone())?;
        let sp = SplitParams::fb(&ch, rho_mag, 0.0)?;
        let gap = region_gap(&fb_outer(&ch, sp.rho(), cfg)?, &fb_inner(&ch, sp, cfg)?)?;
        Ok(CertPoint::new(p, Some(rho_mag), gap.delta_vertex, gap.delta_stderr, c_jg + 2.0))
    })
}

/// Checks `delta_vertex <= 1 + c_jg / 2` for the interference-MAC regions.
pub fn certify_imac(shape: &Shape, c_jg: f64, grid: &[GridPoint], cfg: &McConfig) -> Result<Vec<CertPoint>> {
    cfg.execution.try_map(grid.len(), |i| {
        let p = grid[i];
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), shape.clone())?;
        let (inner, outer) = imac_regions(&ch, cfg)?;
        let gap = region_gap(&outer, &inner)?;
        Ok(CertPoint::new(p, None, gap.delta_vertex, gap.delta_stderr, 1.0 + 0.5 * c_jg))
    })
}

/// Checks every static deviation lies in `[0, K c_jg]`, with `K = 2`
/// without feedback and `K = 3` with it. The reported delta is the largest
/// deviation and `pass` also requires the smallest to be nonnegative.
pub fn certify_static(
    shape: &Shape,
    scheme: Scheme,
    c_jg: f64,
    grid: &[GridPoint],
    cfg: &McConfig,
) -> Result<Vec<CertPoint>> {
    let (k, rho_mag) = match scheme {
        Scheme::NoFeedback => (2.0, None),
        Scheme::Feedback { rho_mag, .. } => (3.0, Some(rho_mag)),
    };
    let limit = k * c_jg;
    cfg.execution.try_map(grid.len(), |i| {
        let p = grid[i];
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), shape.clone())?;
        let devs = static_deviation(&ch, scheme, cfg)?;
        let worst = devs
            .iter()
            .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
            .expect("regions have constraints");
        let mut cp = CertPoint::new(p, rho_mag, worst.deviation, worst.stderr, limit);
        cp.pass = devs.iter().all(|d| d.within(limit, 3.0));
        Ok(cp)
    })
}

/// `21` magnitudes in `[0, 1)` crossed with `16` angles in `[0, 2π)`.
pub fn rho_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(21 * 16);
    for i in 0..21 {
        for j in 0..16 {
            out.push((i as f64 / 21.0, TAU * j as f64 / 16.0));
        }
    }
    out
}

/// Largest matched-pair gap over `pairs` of `(|ρ|, θ)`. This bounds the
/// gap between the unions of the feedback regions over `ρ`.
pub fn fb_union_gap(ch: &ChannelSpec, pairs: &[(f64, f64)], cfg: &McConfig) -> Result<(f64, f64)> {
    let gaps = cfg.execution.try_map(pairs.len(), |i| {
        let sp = SplitParams::fb(ch, pairs[i].0, pairs[i].1)?;
        let g = region_gap(&fb_outer(ch, sp.rho(), cfg)?, &fb_inner(ch, sp, cfg)?)?;
        Ok((g.delta_vertex, g.delta_stderr))
    })?;
    Ok(gaps
        .into_iter()
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a }))
}

/// Which inner region a sweep compares against the outer bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepInner {
    /// Exact Gaussian-input rates of the splitting scheme.
    #[default]
    Exact,
    /// The simplified form with constant penalties.
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub alpha: f64,
    pub sym_inner: f64,
    pub sym_outer: f64,
    pub gap: f64,
    pub stderr: f64,
}

pub const SWEEP_CSV_HEADER: &str = "snr_db,alpha,sym_inner,sym_outer,gap";

pub fn symmetric_sweep(alpha: f64, snr_db: &[f64], shape: &Shape, cfg: &McConfig) -> Result<Vec<SweepRow>> {
    symmetric_sweep_with(SweepInner::Exact, alpha, snr_db, shape, cfg)
}

/// Symmetric rates of the non-feedback regions with `INR = SNR^alpha`.
pub fn symmetric_sweep_with(
    inner: SweepInner,
    alpha: f64,
    snr_db: &[f64],
    shape: &Shape,
    cfg: &McConfig,
) -> Result<Vec<SweepRow>> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    cfg.execution.try_map(snr_db.len(), |i| {
        let snr = 10f64.powf(snr_db[i] / 10.0);
        let ch = ChannelSpec::symmetric_alpha(snr, alpha, shape.clone())?;
        let inner = match inner {
            SweepInner::Exact => nofb_exact(&ch, cfg)?,
            SweepInner::Simplified => nofb_inner(&ch, cfg)?,
        };
        let outer = nofb_outer(&ch, cfg)?;
        let (si, so) = (inner.sym_rate(), outer.sym_rate());
        Ok(SweepRow {
            snr_db: snr_db[i],
            alpha,
            sym_inner: si,
            sym_outer: so,
            gap: so - si,
            stderr: inner.sym_rate_stderr() + outer.sym_rate_stderr(),
        })
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.snr_db, r.alpha, r.sym_inner, r.sym_outer, r.gap);
    }
    s
}
