//! The n-phase amplify-and-forward feedback scheme for the symmetric channel.
//!
//! Tx2 sends its message in phase 1 only and afterwards forwards the scaled
//! interference-plus-noise it learns through feedback. Rx1 then sees a
//! two-tap ISI channel in its own symbols, and Rx2 can combine its phase
//! outputs so that everything but the last phase's interference cancels.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{lg, ComplexGainSampler};
use crate::mc::{estimate_vector, EstimateResult, McConfig, StreamRng};
use crate::regions::{ChannelSpec, G11, G12, G21, G22};

/// Per-phase gains `g11(i), g21(i), g22(i), g12(i)` for `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDraw {
    pub g11: Vec<Complex64>,
    pub g21: Vec<Complex64>,
    pub g22: Vec<Complex64>,
    pub g12: Vec<Complex64>,
}

impl PhaseDraw {
    pub fn sample<R: Rng + ?Sized>(ch: &ChannelSpec, n: usize, rng: &mut R) -> Self {
        let mut d = Self::with_capacity(n);
        for _ in 0..n {
            d.push(ch.draw(rng));
        }
        d
    }

    /// Every phase uses the real plug-in gains `sqrt(snr)` and `sqrt(inr)`.
    pub fn plug_in(snr: f64, inr: f64, n: usize) -> Self {
        let (d, c) = (Complex64::new(snr.sqrt(), 0.0), Complex64::new(inr.sqrt(), 0.0));
        Self {
            g11: vec![d; n],
            g21: vec![c; n],
            g22: vec![d; n],
            g12: vec![c; n],
        }
    }

    fn with_capacity(n: usize) -> Self {
        Self {
            g11: Vec::with_capacity(n),
            g21: Vec::with_capacity(n),
            g22: Vec::with_capacity(n),
            g12: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, g: [Complex64; 4]) {
        self.g11.push(g[G11]);
        self.g21.push(g[G21]);
        self.g22.push(g[G22]);
        self.g12.push(g[G12]);
    }

    pub fn len(&self) -> usize {
        self.g11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g11.is_empty()
    }
}

/// Determinants `|K(1)|, ..., |K(n)|` of a growing tridiagonal family,
/// stored as base-2 logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetSequence {
    pub log2_values: Vec<f64>,
    /// `(a, b)` for a Toeplitz family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<(f64, f64)>,
}

impl DetSequence {
    /// Determinants in linear scale; overflows to infinity for long sequences.
    pub fn values(&self) -> Vec<f64> {
        self.log2_values.iter().map(|l| l.exp2()).collect()
    }

    /// `(1/i) log2 |K(i)|` for `i = 1..n`.
    pub fn growth(&self) -> Vec<f64> {
        self.log2_values
            .iter()
            .enumerate()
            .map(|(i, l)| l / (i + 1) as f64)
            .collect()
    }

    pub fn last_log2(&self) -> f64 {
        self.log2_values.last().copied().unwrap_or(0.0)
    }
}

/// Runs `|K(i)| = d_i |K(i-1)| - e_i |K(i-2)|` with `|K(0)| = 1` through the
/// ratios `r_i = |K(i)| / |K(i-1)| = d_i - e_i / r_{i-1}`.
fn tridiag_log2_dets<I>(coeffs: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut prev = f64::INFINITY;
    for (step, (d, e)) in coeffs.into_iter().enumerate() {
        let ratio = if step == 0 { d } else { d - e / prev };
        if !(ratio > 0.0) {
            return Err(Error::NonPositiveDeterminant { step: step + 1, ratio });
        }
        acc += lg(ratio);
        out.push(acc);
        prev = ratio;
    }
    Ok(out)
}

fn ky1_coeffs(draw: &PhaseDraw, inr: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let s = 1.0 + inr;
    (0..draw.len()).map(move |i| {
        let (w11, w21) = (draw.g11[i].norm_sqr(), draw.g21[i].norm_sqr());
        if i == 0 {
            (1.0 + w11 + w21, 0.0)
        } else {
            let w12p = draw.g12[i - 1].norm_sqr();
            let w11p = draw.g11[i - 1].norm_sqr();
            (w11 + w21 * (w12p + 1.0) / s + 1.0, w11p * w21 * w12p / s)
        }
    })
}

/// Covariance determinants of Rx1's outputs over phases `1..=n`.
pub fn ky1_dets(draw: &PhaseDraw, inr: f64) -> Result<DetSequence> {
    if draw.is_empty() {
        return Err(Error::Domain("need at least one phase".into()));
    }
    Ok(DetSequence {
        log2_values: tridiag_log2_dets(ky1_coeffs(draw, inr))?,
        params: None,
    })
}

/// `log2 |K_{Y1|X1}(n)|`: Rx1's noise covariance is diagonal.
pub fn ky1_cond_log2det(draw: &PhaseDraw, inr: f64) -> f64 {
    let s = 1.0 + inr;
    draw.g21
        .iter()
        .enumerate()
        .map(|(i, g)| if i == 0 { lg(g.norm_sqr() + 1.0) } else { lg(g.norm_sqr() / s + 1.0) })
        .sum()
}

/// `log2 |K(n)|` through the ratio recursion, or NaN when a ratio is not
/// positive so that Monte Carlo aborts with the offending draw.
fn log2_det_or_nan<I: IntoIterator<Item = (f64, f64)>>(coeffs: I) -> f64 {
    tridiag_log2_dets(coeffs).map_or(f64::NAN, |v| *v.last().unwrap_or(&0.0))
}

fn require_symmetric(ch: &ChannelSpec) -> Result<()> {
    if ch.is_symmetric() {
        Ok(())
    } else {
        Err(Error::InvalidModel("the n-phase scheme needs a symmetric channel".into()))
    }
}

fn require_phases(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("need at least one phase".into()))
    } else {
        Ok(())
    }
}

/// Estimates of `(1/n) E log2 |K_Y1(n)|` and of the user-1 rate
/// `(1/n) E log2(|K_Y1(n)| / |K_{Y1|X1}(n)|)` from the same draws.
pub fn ky1_rates(ch: &ChannelSpec, n: usize, cfg: &McConfig) -> Result<(EstimateResult, EstimateResult)> {
    require_symmetric(ch)?;
    require_phases(n)?;
    let inr = ch.inr1();
    let scale = 1.0 / n as f64;
    let mut est = estimate_vector(
        cfg,
        2,
        |rng| PhaseDraw::sample(ch, n, rng),
        |d, out| {
            let full = log2_det_or_nan(ky1_coeffs(d, inr));
            out[0] = full * scale;
            out[1] = (full - ky1_cond_log2det(d, inr)) * scale;
        },
    )?;
    let rate = est.pop().expect("two estimates");
    let det = est.pop().expect("two estimates");
    Ok((det, rate))
}

/// User 1's rate after `n` phases.
pub fn r1_rate(ch: &ChannelSpec, n: usize, cfg: &McConfig) -> Result<EstimateResult> {
    Ok(ky1_rates(ch, n, cfg)?.1)
}

/// Toeplitz parameters of Rx1's plug-in covariance: diagonal `a` and
/// off-diagonal magnitude `b`.
pub fn plug_in_params(snr: f64, inr: f64) -> (f64, f64) {
    (1.0 + snr + inr, (snr * inr * inr / (1.0 + inr)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagGrowth {
    pub dets: DetSequence,
    /// `(1/n) log2 |A_n|`.
    pub limit_estimate: f64,
    /// `log2(a + sqrt(a^2 - 4 b^2)) - 1`.
    pub limit_closed_form: f64,
    /// `log2 a - 1`.
    pub lower_bound: f64,
}

impl TridiagGrowth {
    /// Whether `(1/i) log2 |A_i| >= log2 a - 1` at every `i`.
    pub fn respects_lower_bound(&self) -> bool {
        self.dets.growth().iter().all(|g| *g >= self.lower_bound - 1e-12)
    }
}

/// Determinants of the `n x n` tridiagonal Toeplitz matrices with diagonal
/// `a` and off-diagonals `b`, `b*`.
pub fn tridiag_growth(a: f64, b: f64, n: usize) -> Result<TridiagGrowth> {
    require_phases(n)?;
    let disc = a * a - 4.0 * b * b;
    if !(a > 0.0 && disc > 0.0) {
        return Err(Error::NotDominant { a, b });
    }
    let log2_values = tridiag_log2_dets(std::iter::repeat_n((a, b * b), n))?;
    let limit_estimate = log2_values[n - 1] / n as f64;
    let out = TridiagGrowth {
        dets: DetSequence {
            log2_values,
            params: Some((a, b)),
        },
        limit_estimate,
        limit_closed_form: lg(a + disc.sqrt()) - 1.0,
        lower_bound: lg(a) - 1.0,
    };
    if !out.respects_lower_bound() {
        return Err(Error::Domain(format!(
            "growth fell below log2(a) - 1 for a = {a}, b = {b}"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Check {
    pub n: usize,
    /// `(1/n) E log2 |K(n)|`.
    pub fading: f64,
    pub stderr: f64,
    /// `(1/n) log2 |K_hat(n)|`.
    pub plug_in: f64,
    pub c_jg: f64,
    pub pass: bool,
}

/// Checks `(1/n) E log2 |K(n)| >= (1/n) log2 |K_hat(n)| - 3 c_jg` with
/// three standard errors of slack.
pub fn lemma4_check(ch: &ChannelSpec, n: usize, c_jg: f64, cfg: &McConfig) -> Result<Lemma4Check> {
    let (det, _) = ky1_rates(ch, n, cfg)?;
    let (a, b) = plug_in_params(ch.snr1(), ch.inr1());
    let plug_in = tridiag_growth(a, b, n)?.limit_estimate;
    Ok(Lemma4Check {
        n,
        fading: det.mean,
        stderr: det.stderr,
        plug_in,
        c_jg,
        pass: det.mean >= plug_in - 3.0 * c_jg - 3.0 * det.stderr,
    })
}

/// `max(log2 x, 0)`.
pub fn lg_plus(x: f64) -> f64 {
    lg(x).max(0.0)
}

/// `log2(1 + x) - log2+(x)`, at most one bit for every `x >= 0`.
pub fn claim3_excess(x: f64) -> f64 {
    lg(1.0 + x) - lg_plus(x)
}

/// User 2's rate `E log2+(|g_d|^2 / (1 + INR))`.
pub fn r2_rate(ch: &ChannelSpec, cfg: &McConfig) -> Result<EstimateResult> {
    require_symmetric(ch)?;
    let s = 1.0 + ch.inr1();
    crate::mc::estimate_with(cfg, |rng| ch.link(G22).sample_power(rng), |w| lg_plus(w / s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub block_len: usize,
    pub seed: u64,
    pub max_residual: f64,
}

fn cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Simulates Rx2's outputs symbol by symbol, forms the weighted combination
/// `Y2(n) + sum_i prod_{j>i} (-g22(j)/sqrt(1+INR)) Y2(i)` and compares it
/// with `g22(1) prod_{j>=2} (-g22(j)/sqrt(1+INR)) X2 + g12(n) X1(n) + Z2(n)`.
///
/// The residual of each symbol is relative to the sum of the magnitudes of
/// all terms involved.
pub fn cancellation_check(
    ch: &ChannelSpec,
    n: usize,
    block_len: usize,
    seed: u64,
    noise: bool,
) -> Result<CancellationReport> {
    if n < 2 || block_len == 0 {
        return Err(Error::Domain(format!("need n >= 2 and N >= 1, got n = {n}, N = {block_len}")));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    let s = (1.0 + ch.inr1()).sqrt();
    let mut max_residual: f64 = 0.0;
    for _ in 0..block_len {
        let gains = PhaseDraw::sample(ch, n, &mut rng);
        let x1: Vec<Complex64> = (0..n).map(|_| cn(&mut rng)).collect();
        let x2 = cn(&mut rng);
        let z2: Vec<Complex64> = (0..n)
            .map(|_| if noise { cn(&mut rng) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let mut tx2 = x2;
        let mut y2 = Vec::with_capacity(n);
        for i in 0..n {
            y2.push(gains.g22[i] * tx2 + gains.g12[i] * x1[i] + z2[i]);
            tx2 = (gains.g12[i] * x1[i] + z2[i]) / s;
        }
        let mut weight = Complex64::new(1.0, 0.0);
        let mut combined = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for i in (0..n).rev() {
            let term = weight * y2[i];
            combined += term;
            scale += term.norm();
            if i > 0 {
                weight *= -gains.g22[i] / s;
            }
        }
        let lead = gains.g22[0] * weight * x2;
        let tail = gains.g12[n - 1] * x1[n - 1] + z2[n - 1];
        scale += lead.norm() + tail.norm();
        let residual = (combined - lead - tail).norm();
        if scale > 0.0 {
            max_residual = max_residual.max(residual / scale);
        }
    }
    Ok(CancellationReport {
        n,
        block_len,
        seed,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerGap {
    /// Corner achieved with user 1 on the ISI side, and its swap.
    pub achieved: [(f64, f64); 2],
    pub outer: [(f64, f64); 2],
    /// Gap of the user on the ISI side and of the other user.
    pub user_gaps: (f64, f64),
    pub per_user_gap: f64,
    pub stderr: f64,
    /// `2 + 3 c_jg`.
    pub bound: f64,
    pub pass: bool,
}

/// Compares the scheme's two corner points with the two nontrivial corners
/// of the symmetric feedback outer pentagon.
pub fn nphase_corner_gap(ch: &ChannelSpec, c_jg: f64, cfg: &McConfig) -> Result<CornerGap> {
    require_symmetric(ch)?;
    let (snr, inr) = (ch.snr1(), ch.inr1());
    let cfg = if ch.is_deterministic() { cfg.with_samples(1) } else { *cfg };
    let est = estimate_vector(
        &cfg,
        4,
        |rng| (ch.link(G11).sample_power(rng), ch.link(G12).sample_power(rng)),
        |&(wd, wc), out| {
            out[0] = lg(wd + wc + 1.0);
            out[1] = lg(1.0 + wd / (1.0 + wc)) + lg(1.0 + 2.0 * (wd * wc).sqrt() / (1.0 + wd + wc));
            out[2] = lg_plus(wd / (1.0 + inr));
            out[3] = out[1] - out[2];
        },
    )?;
    let big = lg(1.0 + snr + inr) - 2.0 - 3.0 * c_jg;
    let small = est[2].mean;
    let (oa, ob) = (est[0].mean, est[1].mean);
    let user_gaps = (oa - big, est[3].mean);
    let (per_user_gap, stderr) = if user_gaps.0 >= user_gaps.1 {
        (user_gaps.0, est[0].stderr)
    } else {
        (user_gaps.1, est[3].stderr)
    };
    let bound = 2.0 + 3.0 * c_jg;
    Ok(CornerGap {
        achieved: [(big, small), (small, big)],
        outer: [(oa, ob), (ob, oa)],
        user_gaps,
        per_user_gap,
        stderr,
        bound,
        pass: per_user_gap <= bound + 3.0 * stderr,
    })
}

/// Capacity sandwich of the two-tap fading ISI channel
/// `Y(l) = g_d(l) X(l) + g_c(l) X(l-1) + Z(l)`.
pub fn isi_bounds(snr: f64, inr: f64, c_jg: f64) -> Result<(f64, f64)> {
    if !(snr >= 0.0 && inr >= 0.0) {
        return Err(Error::Domain(format!("powers must be nonnegative, got {snr}, {inr}")));
    }
    let l = lg(1.0 + snr + inr);
    Ok((l - 1.0 - 3.0 * c_jg, l + 1.0))
}

fn isi_coeffs<'a>(gd: &'a [Complex64], gc: &'a [Complex64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    (0..gd.len()).map(move |l| {
        let wd = gd[l].norm_sqr();
        if l == 0 {
            (1.0 + wd, 0.0)
        } else {
            let wc = gc[l].norm_sqr();
            (1.0 + wd + wc, wc * gd[l - 1].norm_sqr())
        }
    })
}

/// `(1/n) E log2 |K_Y(n)|` for i.i.d. unit-power Gaussian inputs on the ISI
/// channel; the noise covariance is the identity.
pub fn isi_rate(
    gd: &ComplexGainSampler,
    gc: &ComplexGainSampler,
    n: usize,
    cfg: &McConfig,
) -> Result<EstimateResult> {
    require_phases(n)?;
    let scale = 1.0 / n as f64;
    crate::mc::estimate_with(
        cfg,
        |rng| {
            let mut d = Vec::with_capacity(n);
            let mut c = Vec::with_capacity(n);
            for _ in 0..n {
                d.push(gd.sample(rng));
                c.push(gc.sample(rng));
            }
            (d, c)
        },
        |(d, c)| log2_det_or_nan(isi_coeffs(d, c)) * scale,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R1Row {
    pub n: usize,
    pub r1_estimate: f64,
    pub stderr: f64,
    pub lower_bound: f64,
}

/// User-1 rate for each phase count against `log2(1+SNR+INR) - 3 c_jg - 2`.
pub fn r1_table(ch: &ChannelSpec, ns: &[usize], c_jg: f64, cfg: &McConfig) -> Result<Vec<R1Row>> {
    let lower_bound = lg(1.0 + ch.snr1() + ch.inr1()) - 3.0 * c_jg - 2.0;
    ns.iter()
        .map(|&n| {
            let r = r1_rate(ch, n, cfg)?;
            Ok(R1Row {
                n,
                r1_estimate: r.mean,
                stderr: r.stderr,
                lower_bound,
            })
        })
        .collect()
}

pub const R1_CSV_HEADER: &str = "n,r1_estimate,lower_bound";
pub const TRIDIAG_CSV_HEADER: &str = "a,b,n,growth,closed_form";

pub fn r1_csv(rows: &[R1Row]) -> String {
    let mut s = format!("{R1_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.n, r.r1_estimate, r.lower_bound);
    }
    s
}

/// One row per `i = 1..n` of the growth sequence.
pub fn tridiag_csv(t: &TridiagGrowth) -> String {
    let (a, b) = t.dets.params.unwrap_or((f64::NAN, f64::NAN));
    let mut s = format!("{TRIDIAG_CSV_HEADER}\n");
    for (i, g) in t.dets.growth().iter().enumerate() {
        let _ = writeln!(s, "{a},{b},{},{g},{}", i + 1, t.limit_closed_form);
    }
    s
}
