use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{lg, ComplexGainSampler, FadingModel, Shape};
use crate::error::{Error, Result};
use crate::mc::{estimate_vector, estimate_with, EstimateResult, McConfig};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Deterministic quadrature (stderr reported as 0).
    #[default]
    Quadrature,
    #[serde(rename = "mc")]
    MonteCarlo,
}

/// `E[log2(a + W)]`.
pub fn expected_log_shifted(
    model: &FadingModel,
    a: f64,
    method: Method,
    cfg: &McConfig,
) -> Result<EstimateResult> {
    if !(a >= 0.0) {
        return Err(Error::NegativeShift(a));
    }
    if a == 0.0 && model.zero_mass() > 0.0 {
        return Err(Error::InfiniteJensenGap {
            zero_mass: model.zero_mass(),
        });
    }
    match method {
        Method::Quadrature => Ok(EstimateResult::exact(
            model.expectation_quadrature(|w| lg(a + w))?,
        )),
        Method::MonteCarlo => {
            let s = ComplexGainSampler::new(model.clone());
            estimate_with(cfg, |rng| s.sample_power(rng), |&w| lg(a + w))
        }
    }
}

/// Upper bound on the logarithmic Jensen's gap of a parametric shape.
/// It does not depend on the mean power.
pub fn jensen_gap_closed_form(model: &FadingModel) -> Result<f64> {
    let gamma_bound = |k: f64| LOG2_E / k - lg(1.0 + 1.0 / (2.0 * k));
    let weibull_bound = |k: f64| EULER_GAMMA * LOG2_E / k + ln_gamma(1.0 + 1.0 / k) * LOG2_E;
    match model.shape() {
        Shape::Rayleigh => Ok(gamma_bound(1.0).min(weibull_bound(1.0))),
        Shape::Gamma { k } => Ok(gamma_bound(*k)),
        Shape::Weibull { k } => Ok(weibull_bound(*k)),
        Shape::Deterministic => Ok(0.0),
        Shape::Tabulated(_) => Err(Error::NoClosedForm(
            "tabulated densities have no closed-form Jensen gap".into(),
        )),
    }
}

/// `0` followed by 41 log-spaced shifts in `[1e-3 E W, 1e3 E W]`.
pub fn default_xi_grid(mean_power: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend((0..41).map(|i| mean_power * 10f64.powf(-3.0 + 6.0 * f64::from(i) / 40.0)));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiPoint {
    pub a: f64,
    /// `ξ(a) = log2(a + E W) - E[log2(a + W)]`.
    pub xi: EstimateResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenGapReport {
    /// `log2(E W) - E[log2 W]`.
    pub gap_at_zero: EstimateResult,
    pub xi: Vec<XiPoint>,
    pub closed_form: Option<f64>,
}

impl JensenGapReport {
    /// `ξ(0)` dominates every grid value and `ξ` never increases along the
    /// (sorted) grid, both up to `sigmas` standard errors.
    pub fn maximal_at_zero(&self, sigmas: f64) -> bool {
        let g = self.gap_at_zero;
        self.xi
            .iter()
            .all(|p| p.xi.mean <= g.mean + sigmas * (g.stderr + p.xi.stderr) + 1e-9)
    }

    pub fn non_increasing(&self, sigmas: f64) -> bool {
        let mut pts: Vec<_> = self.xi.clone();
        pts.sort_by(|x, y| x.a.total_cmp(&y.a));
        pts.windows(2).all(|w| {
            w[1].xi.mean <= w[0].xi.mean + sigmas * (w[0].xi.stderr + w[1].xi.stderr) + 1e-9
        })
    }

    pub fn nonnegative(&self, sigmas: f64) -> bool {
        self.xi
            .iter()
            .all(|p| p.xi.mean >= -sigmas * p.xi.stderr - 1e-9)
    }

    pub fn within_closed_form(&self, sigmas: f64) -> Option<bool> {
        self.closed_form
            .map(|c| self.gap_at_zero.mean <= c + sigmas * self.gap_at_zero.stderr + 1e-9)
    }
}

/// Evaluates `ξ` on `a_grid` and at `a = 0`.
///
/// Monte Carlo evaluation shares one stream of draws across all shifts, so
/// differences between grid points carry little noise.
pub fn jensen_gap_numeric(
    model: &FadingModel,
    a_grid: &[f64],
    method: Method,
    cfg: &McConfig,
) -> Result<JensenGapReport> {
    if model.zero_mass() > 0.0 {
        return Err(Error::InfiniteJensenGap {
            zero_mass: model.zero_mass(),
        });
    }
    if let Some(&a) = a_grid.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::NegativeShift(a));
    }
    let mean = model.mean_power();
    let mut shifts = vec![0.0];
    shifts.extend_from_slice(a_grid);
    let logs: Vec<EstimateResult> = match method {
        Method::Quadrature => shifts
            .iter()
            .map(|&a| expected_log_shifted(model, a, method, cfg))
            .collect::<Result<_>>()?,
        Method::MonteCarlo => {
            let s = ComplexGainSampler::new(model.clone());
            estimate_vector(cfg, shifts.len(), |rng| s.sample_power(rng), |&w, row| {
                for (slot, &a) in row.iter_mut().zip(&shifts) {
                    *slot = lg(a + w);
                }
            })?
        }
    };
    let xi_of = |a: f64, e: EstimateResult| EstimateResult {
        mean: lg(a + mean) - e.mean,
        ..e
    };
    Ok(JensenGapReport {
        gap_at_zero: xi_of(0.0, logs[0]),
        xi: shifts[1..]
            .iter()
            .zip(&logs[1..])
            .map(|(&a, &e)| XiPoint { a, xi: xi_of(a, e) })
            .collect(),
        closed_form: jensen_gap_closed_form(model).ok(),
    })
}

/// Lower bound (nats) on `E[ln W]` for any `W` whose CDF obeys
/// `F(w) <= a w^b` on `[0, eps]`.
pub fn log_moment_lower_bound(a: f64, b: f64, eps: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("need a >= 0, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("need b > 0, got {b}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("need 0 < eps <= 1, got {eps}")));
    }
    let le = eps.ln();
    let aeb = a * eps.powf(b);
    Ok(le + aeb * le - aeb / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{Envelope, TabulatedPdf};
    use statrs::function::gamma::digamma;

    fn quad() -> McConfig {
        McConfig::new(1, 0)
    }

    /// Midpoint rule in probability space: `E[h(W)] ≈ mean h(F^{-1}(u_i))`.
    fn cdf_midpoint<Q: Fn(f64) -> f64>(inv_cdf: Q, h: impl Fn(f64) -> f64, n: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            acc += h(inv_cdf((i as f64 + 0.5) / n as f64));
        }
        acc / n as f64
    }

    #[test]
    fn deterministic_log_is_exact() {
        let m = FadingModel::deterministic(3.0).unwrap();
        for method in [Method::Quadrature, Method::MonteCarlo] {
            let r = expected_log_shifted(&m, 5.0, method, &McConfig::new(1000, 1)).unwrap();
            assert_eq!(r.mean, 3.0);
            assert_eq!(r.stderr, 0.0);
        }
    }

    #[test]
    fn rayleigh_log_moment() {
        let m = FadingModel::rayleigh(1.0).unwrap();
        let oracle = cdf_midpoint(|u| -(1.0 - u).ln(), lg, 1_000_000);
        let q = expected_log_shifted(&m, 0.0, Method::Quadrature, &quad()).unwrap();
        assert!((q.mean - oracle).abs() < 1e-4, "{} vs {oracle}", q.mean);
        assert!((q.mean + EULER_GAMMA * LOG2_E).abs() < 1e-6);
        assert!((q.mean + 0.8327).abs() < 5e-5);
        let mc = expected_log_shifted(&m, 0.0, Method::MonteCarlo, &McConfig::default()).unwrap();
        assert!((mc.mean - q.mean).abs() < 3.0 * mc.stderr);
    }

    #[test]
    fn gamma_log_moment_digamma() {
        let m = FadingModel::new(Shape::Gamma { k: 2.0 }, 2.0).unwrap();
        let q = expected_log_shifted(&m, 0.0, Method::Quadrature, &quad()).unwrap();
        let oracle = digamma(2.0) * LOG2_E;
        assert!((q.mean - oracle).abs() < 1e-6);
        assert!((q.mean - 0.6099).abs() < 5e-5);
    }

    #[test]
    fn shifted_log_matches_mc() {
        let m = FadingModel::new(Shape::Weibull { k: 0.6 }, 10.0).unwrap();
        let q = expected_log_shifted(&m, 1.0, Method::Quadrature, &quad()).unwrap();
        let mc = expected_log_shifted(&m, 1.0, Method::MonteCarlo, &McConfig::default()).unwrap();
        assert!((mc.mean - q.mean).abs() < 3.0 * mc.stderr, "{q:?} {mc:?}");
    }

    #[test]
    fn negative_shift_rejected() {
        let m = FadingModel::rayleigh(1.0).unwrap();
        assert_eq!(
            expected_log_shifted(&m, -1.0, Method::Quadrature, &quad()).unwrap_err(),
            Error::NegativeShift(-1.0)
        );
    }

    #[test]
    fn table_one() {
        let cases = [
            (Shape::Rayleigh, 0.83),
            (Shape::Gamma { k: 1.0 }, 0.86),
            (Shape::Gamma { k: 2.0 }, 0.40),
            (Shape::Gamma { k: 3.0 }, 0.26),
            (Shape::Weibull { k: 1.0 }, 0.83),
            (Shape::Weibull { k: 2.0 }, 0.24),
            (Shape::Weibull { k: 3.0 }, 0.11),
            (Shape::Deterministic, 0.0),
        ];
        for (shape, expect) in cases {
            let c = jensen_gap_closed_form(&FadingModel::new(shape.clone(), 1.0).unwrap()).unwrap();
            assert!((c - expect).abs() <= 0.005, "{shape:?}: {c}");
        }
    }

    #[test]
    fn exact_gaps_below_closed_forms() {
        // Exact gap of Gamma(k): log2 k - ψ(k) log2 e.
        for k in [1.0, 2.0, 3.0] {
            let m = FadingModel::new(Shape::Gamma { k }, 5.0).unwrap();
            let r = jensen_gap_numeric(&m, &[], Method::Quadrature, &quad()).unwrap();
            let exact = lg(k) - digamma(k) * LOG2_E;
            assert!((r.gap_at_zero.mean - exact).abs() < 1e-6, "k={k}");
            assert!(r.within_closed_form(3.0).unwrap());
        }
        let k3 = FadingModel::new(Shape::Gamma { k: 3.0 }, 1.0).unwrap();
        let g = jensen_gap_numeric(&k3, &[], Method::Quadrature, &quad()).unwrap();
        assert!((g.gap_at_zero.mean - 0.25367).abs() < 1e-4);
        assert!(g.gap_at_zero.mean <= 0.26);
    }

    #[test]
    fn rayleigh_gap_value() {
        let m = FadingModel::rayleigh(1.0).unwrap();
        let r = jensen_gap_numeric(&m, &[], Method::Quadrature, &quad()).unwrap();
        assert!((r.gap_at_zero.mean - EULER_GAMMA * LOG2_E).abs() < 1e-6);
        assert!(r.gap_at_zero.mean <= 0.8350);
    }

    #[test]
    fn xi_curve_shape() {
        let shapes = [
            Shape::Rayleigh,
            Shape::Gamma { k: 2.0 },
            Shape::Weibull { k: 0.5 },
            Shape::Deterministic,
        ];
        for shape in shapes {
            let m = FadingModel::new(shape, 20.0).unwrap();
            let grid = default_xi_grid(20.0);
            assert_eq!(grid.len(), 42);
            for method in [Method::Quadrature, Method::MonteCarlo] {
                let r = jensen_gap_numeric(&m, &grid, method, &McConfig::new(200_000, 4)).unwrap();
                assert!(r.maximal_at_zero(3.0), "{m:?} {method:?}");
                assert!(r.non_increasing(3.0), "{m:?} {method:?}");
                assert!(r.nonnegative(3.0), "{m:?} {method:?}");
            }
        }
    }

    #[test]
    fn deterministic_xi_is_zero() {
        let m = FadingModel::deterministic(2.0).unwrap();
        let r = jensen_gap_numeric(&m, &default_xi_grid(2.0), Method::Quadrature, &quad()).unwrap();
        assert!(r.gap_at_zero.mean.abs() < 1e-15);
        assert!(r.xi.iter().all(|p| p.xi.mean.abs() < 1e-12));
    }

    #[test]
    fn point_mass_at_zero_is_rejected() {
        let t = TabulatedPdf::new(vec![(1.0, 0.5), (2.0, 0.5)], None, 0.5).unwrap();
        let m = FadingModel::new(Shape::Tabulated(t), 1.0).unwrap();
        let err = jensen_gap_numeric(&m, &[1.0], Method::MonteCarlo, &quad()).unwrap_err();
        assert_eq!(err, Error::InfiniteJensenGap { zero_mass: 0.5 });
        assert!(err.to_string().contains("point mass at 0"));
        assert!(expected_log_shifted(&m, 1.0, Method::Quadrature, &quad()).is_ok());
        assert!(jensen_gap_closed_form(&m).is_err());
    }

    #[test]
    fn tabulated_gap_quadrature_vs_mc() {
        let t = TabulatedPdf::new(
            vec![(0.0, 2.0), (1.0, 0.0)],
            Some(Envelope { a: 2.0, b: 1.0 }),
            0.0,
        )
        .unwrap();
        let m = FadingModel::new(Shape::Tabulated(t), 4.0).unwrap();
        let q = jensen_gap_numeric(&m, &[], Method::Quadrature, &quad()).unwrap();
        let mc = jensen_gap_numeric(&m, &[], Method::MonteCarlo, &McConfig::default()).unwrap();
        assert!((q.gap_at_zero.mean - mc.gap_at_zero.mean).abs() < 3.0 * mc.gap_at_zero.stderr);
        // E ln T for f = 2 - 2w is -3/2; E T = 1/3.
        let exact = lg(1.0 / 3.0) + 1.5 * LOG2_E;
        assert!((q.gap_at_zero.mean - exact).abs() < 1e-6);
    }

    #[test]
    fn gap_is_mean_power_invariant() {
        for shape in [Shape::Rayleigh, Shape::Weibull { k: 2.0 }] {
            let base = jensen_gap_numeric(
                &FadingModel::new(shape.clone(), 1.0).unwrap(),
                &[],
                Method::Quadrature,
                &quad(),
            )
            .unwrap()
            .gap_at_zero
            .mean;
            for p in [1e-2, 1e2, 1e4] {
                let g = jensen_gap_numeric(
                    &FadingModel::new(shape.clone(), p).unwrap(),
                    &[],
                    Method::Quadrature,
                    &quad(),
                )
                .unwrap()
                .gap_at_zero
                .mean;
                assert!((g - base).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lemma_bound_values() {
        assert_eq!(log_moment_lower_bound(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((log_moment_lower_bound(1.0, 1.0, 1.0).unwrap() + 1.0).abs() < 1e-15);
        let v = log_moment_lower_bound(1.0, 2.0, 0.5).unwrap();
        let ln_half = 0.5f64.ln();
        assert!((v - (ln_half + 0.25 * ln_half - 0.125)).abs() < 1e-15);
        assert!((v + 0.991).abs() < 1e-3);
        assert!(log_moment_lower_bound(-1.0, 1.0, 0.5).is_err());
        assert!(log_moment_lower_bound(1.0, 0.0, 0.5).is_err());
        assert!(log_moment_lower_bound(1.0, 1.0, 1.5).is_err());
        assert!(log_moment_lower_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lemma_bound_holds_for_exponential() {
        // 1 - e^{-w} <= w on [0, 1].
        let m = FadingModel::rayleigh(1.0).unwrap();
        let eln = expected_log_shifted(&m, 0.0, Method::Quadrature, &quad()).unwrap().mean
            / LOG2_E;
        assert!((eln + EULER_GAMMA).abs() < 1e-6);
        assert!(eln >= log_moment_lower_bound(1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn lemma_bound_against_power_law_cdf() {
        // W with CDF F(w) = w^2 on [0, 1]: E ln W = -1/2 exactly.
        let oracle = cdf_midpoint(f64::sqrt, f64::ln, 1_000_000);
        assert!((oracle + 0.5).abs() < 1e-4);
        let bound = log_moment_lower_bound(1.0, 2.0, 0.5).unwrap();
        assert!(oracle >= bound);
    }
}
