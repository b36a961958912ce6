use std::time::Instant;

use ffic_core::afscheme::{
    cancellation_check, claim3_excess, isi_bounds, isi_rate, ky1_dets, lemma4_check, nphase_corner_gap,
    tridiag_growth, PhaseDraw,
};
use ffic_core::fading::{default_xi_grid, jensen_gap_closed_form, jensen_gap_numeric, Envelope, Method, TabulatedPdf};
use ffic_core::mc::StreamRng;
use ffic_core::regions::{
    certify_fb, certify_imac, certify_nofb, certify_static, nofb_inner, nofb_outer, standard_grid,
    symmetric_sweep, ChannelSpec, Scheme,
};
use ffic_core::{ComplexGainSampler, Execution, FadingModel, McConfig, Shape};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

const RAYLEIGH_CJG: f64 = 0.83;
const SAMPLES: u64 = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn table_one() -> Outcome {
    let cases = [
        ("rayleigh", Shape::Rayleigh, 0.83),
        ("gamma k=1", Shape::Gamma { k: 1.0 }, 0.86),
        ("gamma k=2", Shape::Gamma { k: 2.0 }, 0.40),
        ("gamma k=3", Shape::Gamma { k: 3.0 }, 0.26),
        ("weibull k=1", Shape::Weibull { k: 1.0 }, 0.83),
        ("weibull k=2", Shape::Weibull { k: 2.0 }, 0.24),
        ("weibull k=3", Shape::Weibull { k: 3.0 }, 0.11),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, shape, table) in cases {
        let m = FadingModel::new(shape, 1.0).unwrap();
        let closed = jensen_gap_closed_form(&m).unwrap();
        let rounded = (closed * 100.0).round() / 100.0;
        let mc = jensen_gap_numeric(&m, &[], Method::MonteCarlo, &McConfig::new(SAMPLES, 42)).unwrap();
        let quad = jensen_gap_numeric(&m, &[], Method::Quadrature, &McConfig::default()).unwrap();
        let ok = (rounded - table).abs() < 1e-9
            && mc.within_closed_form(3.0) == Some(true)
            && quad.within_closed_form(0.0) == Some(true);
        pass &= ok;
        parts.push(format!(
            "{name}: closed {closed:.4} mc {:.4}±{:.4}",
            mc.gap_at_zero.mean, mc.gap_at_zero.stderr
        ));
    }
    outcome(pass, parts.join("; "))
}

fn fig_four() -> Outcome {
    let cfg = McConfig::new(SAMPLES, 42);
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, target) in [(0.5, 1.48), (0.25, 1.51)] {
        let row = symmetric_sweep(alpha, &[60.0], &Shape::Rayleigh, &cfg).unwrap()[0];
        pass &= (row.gap - target).abs() <= 0.10;
        parts.push(format!("alpha={alpha}: gap {:.4} (target {target} ± 0.10)", row.gap));
    }
    outcome(pass, parts.join("; "))
}

fn certification() -> Outcome {
    let cfg = McConfig::new(SAMPLES, 42);
    let grid = standard_grid();
    let rhos = [0.0, 0.3, 0.7, 0.95];
    let c = RAYLEIGH_CJG;
    let worst = |pts: &[ffic_core::regions::CertPoint]| {
        pts.iter().map(|p| p.delta).fold(f64::NEG_INFINITY, f64::max)
    };
    let nofb = certify_nofb(&Shape::Rayleigh, c, &grid, &cfg).unwrap();
    let fb = certify_fb(&Shape::Rayleigh, c, &rhos, &grid, &cfg).unwrap();
    let imac = certify_imac(&Shape::Rayleigh, c, &grid, &cfg).unwrap();
    let st_nofb = certify_static(&Shape::Rayleigh, Scheme::NoFeedback, c, &grid, &cfg).unwrap();
    let mut st_fb = Vec::new();
    for rho_mag in rhos {
        let scheme = Scheme::Feedback { rho_mag, theta: 0.0 };
        st_fb.extend(certify_static(&Shape::Rayleigh, scheme, c, &grid, &cfg).unwrap());
    }
    let suites = [
        ("nofb", &nofb, 1.83),
        ("fb", &fb, 2.83),
        ("imac", &imac, 1.415),
        ("static nofb", &st_nofb, 2.0 * c),
        ("static fb", &st_fb, 3.0 * c),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pts, bound) in suites {
        let ok = pts.iter().all(|p| p.pass && (p.bound - bound).abs() < 1e-9);
        pass &= ok;
        parts.push(format!("{name} max {:.4} <= {bound:.4}", worst(pts)));
    }
    outcome(pass, parts.join("; "))
}

/// Rx1's outputs as a linear map of the unit-variance sources
/// `X1(1..n), X2, Z1(1..n), Z2(1..n-1)`.
fn dense_ky1_log2det(d: &PhaseDraw, inr: f64) -> f64 {
    let n = d.len();
    let s = (1.0 + inr).sqrt();
    let mut m = DMatrix::<Complex64>::zeros(n, 3 * n);
    for i in 0..n {
        m[(i, i)] = d.g11[i];
        m[(i, n + 1 + i)] = Complex64::new(1.0, 0.0);
        if i == 0 {
            m[(i, n)] = d.g21[0];
        } else {
            m[(i, i - 1)] = d.g21[i] * d.g12[i - 1] / s;
            m[(i, 2 * n + i)] = d.g21[i] / s;
        }
    }
    let k = &m * m.adjoint();
    k.lu().determinant().re.log2()
}

fn recursion_oracle() -> Outcome {
    let mut rng = StreamRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=12);
        let snr = 10f64.powf(rng.random_range(0.0..4.0));
        let inr = 10f64.powf(rng.random_range(-1.0..3.0));
        let ch = ChannelSpec::symmetric(snr, inr, Shape::Rayleigh).unwrap();
        let d = PhaseDraw::sample(&ch, n, &mut rng);
        let rec = ky1_dets(&d, inr).unwrap();
        let dense = dense_ky1_log2det(&d, inr);
        // Relative error of the determinant itself.
        let rel = ((rec.last_log2() - dense) * std::f64::consts::LN_2).exp_m1().abs();
        worst = worst.max(rel);
    }
    outcome(worst < 1e-9, format!("100 draws, max relative error {worst:.2e}"))
}

fn lemma_five() -> Outcome {
    let t = tridiag_growth(3.0, 1.0, 200).unwrap();
    let v = t.dets.values();
    let starts = v.iter().zip([3.0, 8.0, 21.0, 55.0]).all(|(x, y)| (x - y).abs() < 1e-9);
    let close = (t.limit_estimate - t.limit_closed_form).abs() < 0.01;
    let pass = starts && close && t.respects_lower_bound() && (t.limit_closed_form - 1.3885).abs() < 1e-4;
    outcome(
        pass,
        format!(
            "dets {:?}, growth(200) {:.5}, closed {:.5}, lower bound respected: {}",
            v[..4].iter().map(|x| x.round()).collect::<Vec<_>>(),
            t.limit_estimate,
            t.limit_closed_form,
            t.respects_lower_bound()
        ),
    )
}

fn lemma_four() -> Outcome {
    let ch = ChannelSpec::symmetric(100.0, 10.0, Shape::Rayleigh).unwrap();
    let cfg = McConfig::new(100_000, 42);
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [8, 32, 64] {
        let c = lemma4_check(&ch, n, RAYLEIGH_CJG, &cfg).unwrap();
        pass &= c.pass;
        parts.push(format!(
            "n={n}: {:.4}±{:.4} >= {:.4} - 3c",
            c.fading, c.stderr, c.plug_in
        ));
    }
    outcome(pass, parts.join("; "))
}

fn telescoping() -> Outcome {
    let ch = ChannelSpec::symmetric(100.0, 10.0, Shape::Rayleigh).unwrap();
    let mut worst: f64 = 0.0;
    for (n, big_n) in [(2, 1), (4, 8), (8, 16)] {
        for seed in 0..20 {
            let r = cancellation_check(&ch, n, big_n, seed, true).unwrap();
            worst = worst.max(r.max_residual);
        }
    }
    outcome(worst < 1e-10, format!("max relative residual {worst:.2e}"))
}

fn corner_gap() -> Outcome {
    let cfg = McConfig::new(SAMPLES, 42);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for p in standard_grid() {
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), Shape::Rayleigh).unwrap();
        let g = nphase_corner_gap(&ch, RAYLEIGH_CJG, &cfg).unwrap();
        pass &= g.pass && (g.bound - 4.49).abs() < 1e-9;
        worst = worst.max(g.per_user_gap);
    }
    let mut det_worst: f64 = 0.0;
    for p in standard_grid() {
        let ch = ChannelSpec::symmetric(p.snr, p.inr(), Shape::Deterministic).unwrap();
        let g = nphase_corner_gap(&ch, 0.0, &cfg).unwrap();
        pass &= g.per_user_gap <= 2.0 + 3.0 * g.stderr + 1e-12;
        det_worst = det_worst.max(g.per_user_gap);
    }
    let claim3 = (0..10_000).all(|i| {
        let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 9_999.0);
        claim3_excess(x) <= 1.0
    });
    pass &= claim3;
    outcome(
        pass,
        format!("rayleigh max {worst:.4} <= 4.49; deterministic max {det_worst:.4} <= 2; claim 3 on grid: {claim3}"),
    )
}

fn isi_sandwich() -> Outcome {
    let mut rng = StreamRng::seed_from_u64(77);
    let mut width_ok = true;
    for _ in 0..50 {
        let snr = 10f64.powf(rng.random_range(-2.0..6.0));
        let inr = 10f64.powf(rng.random_range(-2.0..6.0));
        let (lo, hi) = isi_bounds(snr, inr, RAYLEIGH_CJG).unwrap();
        width_ok &= ((hi - lo) - (2.0 + 3.0 * RAYLEIGH_CJG)).abs() <= 1e-12 * (1.0 + hi.abs());
    }
    let cfg = McConfig::new(20_000, 42);
    let mut inside = true;
    let mut parts = Vec::new();
    for (snr, inr) in [(100.0, 10.0), (1e3, 1e3), (1e4, 10.0)] {
        let gd = ComplexGainSampler::new(FadingModel::rayleigh(snr).unwrap());
        let gc = ComplexGainSampler::new(FadingModel::rayleigh(inr).unwrap());
        let r = isi_rate(&gd, &gc, 128, &cfg).unwrap();
        let (lo, hi) = isi_bounds(snr, inr, RAYLEIGH_CJG).unwrap();
        inside &= r.mean >= lo - 3.0 * r.stderr && r.mean <= hi + 3.0 * r.stderr;
        parts.push(format!("({snr},{inr}): {lo:.3} <= {:.3} <= {hi:.3}", r.mean));
    }
    outcome(
        width_ok && inside,
        format!("width = 2+3c on 50 points: {width_ok}; {}", parts.join("; ")),
    )
}

fn properties() -> Outcome {
    let tab = TabulatedPdf::new(
        vec![(0.0, 0.0), (0.5, 0.8), (1.0, 0.4), (3.5, 0.0)],
        Some(Envelope { a: 2.0, b: 2.0 }),
        0.0,
    )
    .unwrap();
    let shapes = [
        Shape::Rayleigh,
        Shape::Gamma { k: 0.5 },
        Shape::Gamma { k: 2.0 },
        Shape::Weibull { k: 0.5 },
        Shape::Weibull { k: 3.0 },
        Shape::Deterministic,
        Shape::Tabulated(tab),
    ];
    let mut xi_ok = true;
    for shape in &shapes {
        let m = FadingModel::new(shape.clone(), 5.0).unwrap();
        let grid = default_xi_grid(5.0);
        let quad = jensen_gap_numeric(&m, &grid[1..], Method::Quadrature, &McConfig::default()).unwrap();
        let mc = jensen_gap_numeric(&m, &grid[1..], Method::MonteCarlo, &McConfig::new(100_000, 3)).unwrap();
        xi_ok &= quad.xi.len() == 41 && quad.non_increasing(0.0) && quad.maximal_at_zero(0.0);
        xi_ok &= mc.non_increasing(3.0) && mc.maximal_at_zero(3.0);
    }

    let mut invariant = true;
    for shape in &shapes[..5] {
        let gap = |mean: f64| {
            let m = FadingModel::new(shape.clone(), mean).unwrap();
            jensen_gap_numeric(&m, &[], Method::Quadrature, &McConfig::default())
                .unwrap()
                .gap_at_zero
                .mean
        };
        let g1 = gap(1.0);
        invariant &= [1e-3, 10.0, 1e6].iter().all(|&m| (gap(m) - g1).abs() < 1e-7);
    }

    let ch = ChannelSpec::symmetric(1e3, 30.0, Shape::Rayleigh).unwrap();
    let json = |exec: Execution| {
        let cfg = McConfig::new(50_000, 9).with_partitions(4).with_execution(exec);
        serde_json::to_string(&nofb_inner(&ch, &cfg).unwrap()).unwrap()
    };
    let first = json(Execution::Parallel);
    let reproducible = first == json(Execution::Parallel) && first == json(Execution::Sequential);

    let mut rng = StreamRng::seed_from_u64(11);
    let mut nested = true;
    for i in 0..20 {
        let snr = 10f64.powf(rng.random_range(0.0..6.0));
        let alpha = rng.random_range(0.1..1.5);
        let ch = ChannelSpec::symmetric_alpha(snr, alpha, Shape::Rayleigh).unwrap();
        let cfg = McConfig::new(100_000, i);
        let inner = nofb_inner(&ch, &cfg).unwrap();
        let outer = nofb_outer(&ch, &cfg).unwrap();
        let tol = 3.0 * (inner.max_stderr() + outer.max_stderr());
        nested &= inner.vertices().into_iter().all(|v| outer.contains(v, tol));
    }
    outcome(
        xi_ok && invariant && reproducible && nested,
        format!(
            "xi monotone/maximal at 0: {xi_ok}; mean-power invariance: {invariant}; byte-identical reruns: {reproducible}; outer contains inner on 20 specs: {nested}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Jensen gap table", table_one),
        ("symmetric sweep at 60 dB", fig_four),
        ("gap certification suites", certification),
        ("determinant recursion vs dense", recursion_oracle),
        ("tridiagonal growth", lemma_five),
        ("fading determinant lower bound", lemma_four),
        ("telescoping cancellation", telescoping),
        ("n-phase corner gap", corner_gap),
        ("ISI sandwich", isi_sandwich),
        ("property suites", properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{status} criterion {} ({name}) [{:.1}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
