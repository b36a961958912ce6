use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ChannelSpec, RateConstraint, RateRegion, RegionKind, SplitParams, G11, G12, G21, G22};
use crate::error::{Error, Result};
use crate::fading::lg;
use crate::mc::{estimate_vector, McConfig};

/// Which family of constraint templates to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Scheme {
    NoFeedback,
    Feedback { rho_mag: f64, theta: f64 },
}

type Weights = [(u32, u32)];

const NOFB_WEIGHTS: [(u32, u32); 7] = [(1, 0), (0, 1), (1, 1), (1, 1), (1, 1), (2, 1), (1, 2)];
const FB_WEIGHTS: [(u32, u32); 6] = [(1, 0), (1, 0), (0, 1), (0, 1), (1, 1), (1, 1)];
const IMAC_WEIGHTS: [(u32, u32); 6] = [(1, 0), (0, 1), (0, 1), (1, 1), (1, 1), (1, 2)];

/// Evaluates every constraint from one shared stream of channel draws.
/// Each constraint's integrand is the per-draw sum of its terms, so its
/// standard error accounts for the correlation between them.
fn evaluate<F>(
    kind: RegionKind,
    params: Option<SplitParams>,
    prefix: &str,
    weights: &Weights,
    ch: &ChannelSpec,
    cfg: &McConfig,
    eval: F,
) -> Result<RateRegion>
where
    F: Fn(&[Complex64; 4], &mut [f64]) + Sync + Send,
{
    let cfg = if ch.is_deterministic() {
        cfg.with_samples(1)
    } else {
        *cfg
    };
    let est = estimate_vector(&cfg, weights.len(), |rng| ch.draw(rng), eval)?;
    Ok(RateRegion {
        kind,
        params,
        constraints: weights
            .iter()
            .zip(est)
            .enumerate()
            .map(|(i, (&(c1, c2), e))| RateConstraint {
                c1,
                c2,
                bound: e.mean,
                stderr: e.stderr,
                label: format!("{prefix}{}", i + 1),
            })
            .collect(),
    })
}

fn powers(g: &[Complex64; 4]) -> (f64, f64, f64, f64) {
    (
        g[G11].norm_sqr(),
        g[G21].norm_sqr(),
        g[G22].norm_sqr(),
        g[G12].norm_sqr(),
    )
}

fn nofb_inner_terms(sp: SplitParams, g: &[Complex64; 4], out: &mut [f64]) {
    let (w11, w21, w22, w12) = powers(g);
    let (l1, l2) = (sp.lambda_p1, sp.lambda_p2);
    let y1_full = lg(1.0 + w11 + w21);
    let y2_full = lg(1.0 + w22 + w12);
    let y1_priv = lg(1.0 + l1 * w11 + l2 * w21);
    let y2_priv = lg(1.0 + l2 * w22 + l1 * w12);
    let y1_mix = lg(1.0 + l1 * w11 + w21);
    let y2_mix = lg(1.0 + l2 * w22 + w12);
    out[0] = lg(1.0 + w11 + l2 * w21) - 1.0;
    out[1] = lg(1.0 + w22 + l1 * w12) - 1.0;
    out[2] = y2_full + y1_priv - 2.0;
    out[3] = y1_full + y2_priv - 2.0;
    out[4] = y1_mix + y2_mix - 2.0;
    out[5] = y1_full + y2_mix + y1_priv - 3.0;
    out[6] = y2_full + y1_mix + y2_priv - 3.0;
}

/// Non-feedback rate-splitting region with `λ_pk = min(1/INR_k, 1)`.
pub fn nofb_inner(ch: &ChannelSpec, cfg: &McConfig) -> Result<RateRegion> {
    let sp = SplitParams::nofb(ch);
    evaluate(
        RegionKind::NofbInner,
        Some(sp),
        "inner_nofb",
        &NOFB_WEIGHTS,
        ch,
        cfg,
        move |g, out| nofb_inner_terms(sp, g, out),
    )
}

/// Same scheme as [`nofb_inner`], but every mutual information is
/// evaluated exactly: each `-1` becomes `-E log2(1 + λ_p |g_cross|^2)` of
/// the receiver it belongs to.
pub fn nofb_exact(ch: &ChannelSpec, cfg: &McConfig) -> Result<RateRegion> {
    let sp = SplitParams::nofb(ch);
    evaluate(
        RegionKind::NofbExact,
        Some(sp),
        "ach_nofb",
        &NOFB_WEIGHTS,
        ch,
        cfg,
        move |g, out| {
            nofb_inner_terms(sp, g, out);
            let n1 = lg(1.0 + sp.lambda_p2 * g[G21].norm_sqr());
            let n2 = lg(1.0 + sp.lambda_p1 * g[G12].norm_sqr());
            // Undo the constant penalties, then subtract the per-receiver ones.
            let fix = [(1.0, n1, 0.0), (1.0, 0.0, n2), (2.0, n1, n2), (2.0, n1, n2), (2.0, n1, n2)];
            for (o, (c, a, b)) in out.iter_mut().zip(fix) {
                *o += c - a - b;
            }
            out[5] += 3.0 - 2.0 * n1 - n2;
            out[6] += 3.0 - n1 - 2.0 * n2;
        },
    )
}

fn nofb_outer_terms(g: &[Complex64; 4], out: &mut [f64]) {
    let (w11, w21, w22, w12) = powers(g);
    let y1_full = lg(1.0 + w11 + w21);
    let y2_full = lg(1.0 + w22 + w12);
    let s1 = lg(1.0 + w11 / (1.0 + w12));
    let s2 = lg(1.0 + w22 / (1.0 + w21));
    let z1 = lg(1.0 + w21 + w11 / (1.0 + w12));
    let z2 = lg(1.0 + w12 + w22 / (1.0 + w21));
    out[0] = lg(1.0 + w11);
    out[1] = lg(1.0 + w22);
    out[2] = y2_full + s1;
    out[3] = y1_full + s2;
    out[4] = z1 + z2;
    out[5] = y1_full + z2 + s1;
    out[6] = y2_full + z1 + s2;
}

/// Non-feedback outer bound; valid even with instantaneous CSIT.
pub fn nofb_outer(ch: &ChannelSpec, cfg: &McConfig) -> Result<RateRegion> {
    evaluate(
        RegionKind::NofbOuter,
        None,
        "outer_nofb",
        &NOFB_WEIGHTS,
        ch,
        cfg,
        nofb_outer_terms,
    )
}

fn fb_inner_terms(sp: SplitParams, g: &[Complex64; 4], out: &mut [f64]) {
    let (w11, w21, w22, w12) = powers(g);
    let (l1, l2) = (sp.lambda_p1, sp.lambda_p2);
    let r2 = sp.rho_mag * sp.rho_mag;
    let rot = Complex64::from_polar(1.0, sp.theta);
    let c11 = (rot * g[G11] * g[G21].conj()).re;
    let c22 = (rot * g[G22].conj() * g[G12]).re;
    let y1 = lg(w11 + w21 + 2.0 * r2 * c11 + 1.0);
    let y2 = lg(w22 + w12 + 2.0 * r2 * c22 + 1.0);
    let p1 = lg(1.0 + l1 * w11 + l2 * w21);
    let p2 = lg(1.0 + l2 * w22 + l1 * w12);
    out[0] = y1 - 1.0;
    out[1] = lg(1.0 + (1.0 - r2) * w12) + p1 - 2.0;
    out[2] = y2 - 1.0;
    out[3] = lg(1.0 + (1.0 - r2) * w21) + p2 - 2.0;
    out[4] = y2 + p1 - 2.0;
    out[5] = y1 + p2 - 2.0;
}

/// Feedback rate-splitting region for one `(|ρ|, θ)`.
pub fn fb_inner(ch: &ChannelSpec, sp: SplitParams, cfg: &McConfig) -> Result<RateRegion> {
    sp.validate(ch, true)?;
    evaluate(
        RegionKind::FbInner,
        Some(sp),
        "inner_fb",
        &FB_WEIGHTS,
        ch,
        cfg,
        move |g, out| fb_inner_terms(sp, g, out),
    )
}

fn fb_outer_terms(rho: Complex64, g: &[Complex64; 4], out: &mut [f64]) {
    let (w11, w21, w22, w12) = powers(g);
    let q = 1.0 - rho.norm_sqr();
    let y1 = lg(w11 + w21 + 2.0 * (rho * g[G11] * g[G21].conj()).re + 1.0);
    let y2 = lg(w22 + w12 + 2.0 * (rho * g[G22].conj() * g[G12]).re + 1.0);
    let s1 = lg(1.0 + q * w11 / (1.0 + q * w12));
    let s2 = lg(1.0 + q * w22 / (1.0 + q * w21));
    out[0] = y1;
    out[1] = lg(1.0 + q * w12) + s1;
    out[2] = y2;
    out[3] = lg(1.0 + q * w21) + s2;
    out[4] = y2 + s1;
    out[5] = y1 + s2;
}

/// Feedback outer bound for input correlation `ρ = E[X1 X2*]`.
pub fn fb_outer(ch: &ChannelSpec, rho: Complex64, cfg: &McConfig) -> Result<RateRegion> {
    let mag = rho.norm();
    if !(mag <= 1.0 + 1e-12) {
        return Err(Error::RhoOutOfRange(mag));
    }
    let rho = if mag > 1.0 { rho / mag } else { rho };
    let params = SplitParams {
        lambda_p1: f64::NAN,
        lambda_p2: f64::NAN,
        rho_mag: rho.norm(),
        theta: rho.arg().rem_euclid(std::f64::consts::TAU),
    };
    evaluate(
        RegionKind::FbOuter,
        Some(SplitParams {
            lambda_p1: 0.0,
            lambda_p2: 0.0,
            ..params
        }),
        "outer_fb",
        &FB_WEIGHTS,
        ch,
        cfg,
        move |g, out| fb_outer_terms(rho, g, out),
    )
}

/// Interference-MAC inner and outer regions. Receiver 1 decodes both
/// messages; only user 1 splits its power.
pub fn imac_regions(ch: &ChannelSpec, cfg: &McConfig) -> Result<(RateRegion, RateRegion)> {
    let mut sp = SplitParams::nofb(ch);
    sp.lambda_p2 = 1.0;
    let l1 = sp.lambda_p1;
    let inner = evaluate(
        RegionKind::ImacInner,
        Some(sp),
        "inner_IMA",
        &IMAC_WEIGHTS,
        ch,
        cfg,
        move |g, out| {
            let (w11, w21, w22, w12) = powers(g);
            let y2_full = lg(1.0 + w22 + w12);
            out[0] = lg(1.0 + w11);
            out[1] = lg(1.0 + w22 + l1 * w12) - 1.0;
            out[2] = lg(1.0 + w21);
            out[3] = lg(1.0 + w11 + w21);
            out[4] = y2_full + lg(1.0 + l1 * w11) - 1.0;
            out[5] = y2_full + lg(1.0 + l1 * w11 + w21) - 1.0;
        },
    )?;
    let outer = evaluate(
        RegionKind::ImacOuter,
        None,
        "outer_IMA",
        &IMAC_WEIGHTS,
        ch,
        cfg,
        |g, out| {
            let (w11, w21, w22, w12) = powers(g);
            let y2_full = lg(1.0 + w22 + w12);
            let s1 = w11 / (1.0 + w12);
            out[0] = lg(1.0 + w11);
            out[1] = lg(1.0 + w22);
            out[2] = lg(1.0 + w21);
            out[3] = lg(1.0 + w11 + w21);
            out[4] = y2_full + lg(1.0 + s1);
            out[5] = y2_full + lg(1.0 + s1 + w21);
        },
    )?;
    Ok((inner, outer))
}

/// Inner-bound templates evaluated on the static channel with real gains
/// `sqrt(SNR_i)`, `sqrt(INR_i)`. The feedback templates take `θ = 0`:
/// with real gains the rotation only ever lowers the bound.
pub fn static_equivalent(ch: &ChannelSpec, scheme: Scheme) -> Result<RateRegion> {
    let st = ch.static_equivalent();
    let one = McConfig::new(1, 0);
    let mut region = match scheme {
        Scheme::NoFeedback => {
            let mut r = nofb_inner(&st, &one)?;
            relabel(&mut r, "static_nofb");
            r
        }
        Scheme::Feedback { rho_mag, .. } => {
            let sp = SplitParams::fb(&st, rho_mag, 0.0)?;
            let mut r = fb_inner(&st, sp, &one)?;
            relabel(&mut r, "static_fb");
            r
        }
    };
    region.kind = RegionKind::StaticInner;
    Ok(region)
}

/// Outer-bound templates on the static channel (`ρ` real for feedback).
pub fn static_equivalent_outer(ch: &ChannelSpec, scheme: Scheme) -> Result<RateRegion> {
    let st = ch.static_equivalent();
    let one = McConfig::new(1, 0);
    let mut region = match scheme {
        Scheme::NoFeedback => {
            let mut r = nofb_outer(&st, &one)?;
            relabel(&mut r, "static_outer_nofb");
            r
        }
        Scheme::Feedback { rho_mag, .. } => {
            let mut r = fb_outer(&st, Complex64::new(rho_mag, 0.0), &one)?;
            relabel(&mut r, "static_outer_fb");
            r
        }
    };
    region.kind = RegionKind::StaticOuter;
    Ok(region)
}

fn relabel(r: &mut RateRegion, prefix: &str) {
    for (i, c) in r.constraints.iter_mut().enumerate() {
        c.label = format!("{prefix}{}", i + 1);
    }
}

/// Pentagon outer bound of a symmetric feedback channel that the n-phase
/// scheme is compared against: `R1, R2 <= A`, `R1 + R2 <= B`.
pub fn nphase_outer_sym(ch: &ChannelSpec, cfg: &McConfig) -> Result<RateRegion> {
    if !ch.is_symmetric() {
        return Err(Error::InvalidModel("n-phase bounds need a symmetric channel".into()));
    }
    evaluate(
        RegionKind::NphaseOuterSym,
        None,
        "outer_sym_fb",
        &[(1, 0), (0, 1), (1, 1)],
        ch,
        cfg,
        |g, out| {
            let wd = g[G11].norm_sqr();
            let wc = g[G12].norm_sqr();
            let a = lg(wd + wc + 1.0);
            out[0] = a;
            out[1] = a;
            out[2] = lg(1.0 + wd / (1.0 + wc)) + lg(wd + wc + 2.0 * (wd * wc).sqrt() + 1.0);
        },
    )
}
