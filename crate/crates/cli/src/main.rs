mod args;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use ffic_core::afscheme::{
    cancellation_check, isi_bounds, isi_rate, lemma4_check, nphase_corner_gap, r1_csv, r1_table, r2_rate,
    tridiag_csv, tridiag_growth,
};
use ffic_core::fading::{default_xi_grid, jensen_gap_closed_form, jensen_gap_numeric};
use ffic_core::regions::{
    certify_fb, certify_imac, certify_nofb, certify_static, fb_inner, fb_outer, imac_regions, nofb_exact,
    nofb_inner, nofb_outer, nphase_outer_sym, static_equivalent, static_equivalent_outer, sweep_csv,
    symmetric_sweep_with, CertPoint, ChannelSpec, RateRegion, Scheme, SplitParams,
};
use ffic_core::{ComplexGainSampler, FadingModel, Shape};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use args::{
    AfCommand, ChannelArgs, CheckName, Cli, Command, Common, Format, RegionName, RunConfig, SymArgs,
};

const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));
const CANCELLATION_TOL: f64 = 1e-10;

/// Reason a run did not complete normally.
enum Failure {
    /// Bad arguments or inputs; exit code 2.
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Rendered output plus whether a theorem bound was violated.
struct Report {
    text: String,
    violated: bool,
}

fn meta(common: &Common) -> serde_json::Value {
    json!({
        "seed": common.seed,
        "samples": common.samples,
        "partitions": common.partitions,
        "version": VERSION,
    })
}

fn as_json<T: Serialize>(common: &Common, result: &T) -> Result<String, Failure> {
    let v = json!({ "meta": meta(common), "result": result });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn as_csv(common: &Common, body: &str) -> String {
    format!(
        "# ffic {VERSION} seed={} samples={} partitions={}\n{body}",
        common.seed, common.samples, common.partitions
    )
}

fn report(text: String, violated: bool) -> Report {
    Report { text, violated }
}

fn default_c_jg(shape: &Shape, given: Option<f64>) -> Result<f64, Failure> {
    match given {
        Some(c) => Ok(c),
        None => Ok(jensen_gap_closed_form(&FadingModel::new(shape.clone(), 1.0)?)?),
    }
}

fn channel(c: &ChannelArgs) -> Result<ChannelSpec, Failure> {
    let shape = c.shape.shape()?;
    let model = |p: f64| FadingModel::new(shape.clone(), p);
    Ok(ChannelSpec::from_models(
        model(c.snr)?,
        model(c.inr2.unwrap_or(c.inr))?,
        model(c.snr2.unwrap_or(c.snr))?,
        model(c.inr)?,
    ))
}

fn symmetric(s: &SymArgs) -> Result<(ChannelSpec, f64), Failure> {
    let shape = s.shape.shape()?;
    let c = default_c_jg(&shape, s.c_jg)?;
    Ok((ChannelSpec::symmetric(s.snr, s.inr, shape)?, c))
}

fn jensen_gap(common: &Common, a: &args::JensenGapArgs) -> Result<Report, Failure> {
    let model = match &a.model {
        Some(path) => serde_json::from_str::<FadingModel>(&fs::read_to_string(path)?)?,
        None => FadingModel::new(a.shape.shape()?, a.mean_power)?,
    };
    let grid = if a.no_curve {
        Vec::new()
    } else {
        default_xi_grid(model.mean_power())[1..].to_vec()
    };
    let r = jensen_gap_numeric(&model, &grid, a.method.into(), &common.mc())?;
    let violated = r.within_closed_form(3.0) == Some(false) || !r.maximal_at_zero(3.0) || !r.non_increasing(3.0);
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => as_json(common, &r)?,
        Format::Csv => {
            let mut body = format!("a,xi,stderr\n0,{},{}\n", r.gap_at_zero.mean, r.gap_at_zero.stderr);
            for p in &r.xi {
                body += &format!("{},{},{}\n", p.a, p.xi.mean, p.xi.stderr);
            }
            as_csv(common, &body)
        }
    };
    Ok(report(text, violated))
}

fn region(common: &Common, a: &args::RegionArgs) -> Result<Report, Failure> {
    let ch = channel(&a.channel)?;
    let cfg = common.mc();
    let scheme = if a.feedback {
        Scheme::Feedback {
            rho_mag: a.rho,
            theta: a.theta,
        }
    } else {
        Scheme::NoFeedback
    };
    let r: RateRegion = match a.kind {
        RegionName::NofbInner => nofb_inner(&ch, &cfg)?,
        RegionName::NofbOuter => nofb_outer(&ch, &cfg)?,
        RegionName::NofbExact => nofb_exact(&ch, &cfg)?,
        RegionName::FbInner => fb_inner(&ch, SplitParams::fb(&ch, a.rho, a.theta)?, &cfg)?,
        RegionName::FbOuter => fb_outer(&ch, Complex64::from_polar(a.rho, a.theta), &cfg)?,
        RegionName::ImacInner => imac_regions(&ch, &cfg)?.0,
        RegionName::ImacOuter => imac_regions(&ch, &cfg)?.1,
        RegionName::StaticInner => static_equivalent(&ch, scheme)?,
        RegionName::StaticOuter => static_equivalent_outer(&ch, scheme)?,
        RegionName::NphaseOuter => nphase_outer_sym(&ch, &cfg)?,
    };
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => as_json(common, &r)?,
        Format::Csv => {
            let mut body = String::from("label,c1,c2,bound,stderr\n");
            for c in &r.constraints {
                body += &format!("{},{},{},{},{}\n", c.label, c.c1, c.c2, c.bound, c.stderr);
            }
            as_csv(common, &body)
        }
    };
    Ok(report(text, false))
}

fn gap_check(common: &Common, a: &args::GapCheckArgs) -> Result<Report, Failure> {
    let shape = a.shape.shape()?;
    let c = default_c_jg(&shape, a.c_jg)?;
    let grid = a.grid_points()?;
    let cfg = common.mc();
    let points: Vec<CertPoint> = match a.kind {
        CheckName::Nofb => certify_nofb(&shape, c, &grid, &cfg)?,
        CheckName::Fb => certify_fb(&shape, c, &a.rho, &grid, &cfg)?,
        CheckName::Imac => certify_imac(&shape, c, &grid, &cfg)?,
        CheckName::StaticNofb => certify_static(&shape, Scheme::NoFeedback, c, &grid, &cfg)?,
        CheckName::StaticFb => {
            let mut all = Vec::new();
            for &rho_mag in &a.rho {
                let scheme = Scheme::Feedback { rho_mag, theta: 0.0 };
                all.extend(certify_static(&shape, scheme, c, &grid, &cfg)?);
            }
            all
        }
    };
    let passed = points.iter().filter(|p| p.pass).count();
    let ok = passed == points.len();
    eprintln!(
        "{} {}/{} points within bound (c_jg = {c})",
        if ok { "PASS" } else { "FAIL" },
        passed,
        points.len()
    );
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => as_json(
            common,
            &json!({ "kind": a.kind, "c_jg": c, "status": if ok { "PASS" } else { "FAIL" }, "points": points }),
        )?,
        Format::Csv => {
            let mut body = String::from("snr,inr,alpha,rho_mag,delta,stderr,bound,status\n");
            for p in &points {
                let rho = p.rho_mag.map(|r| r.to_string()).unwrap_or_default();
                body += &format!(
                    "{},{},{},{rho},{},{},{},{}\n",
                    p.snr,
                    p.inr,
                    p.alpha,
                    p.delta,
                    p.stderr,
                    p.bound,
                    if p.pass { "PASS" } else { "FAIL" }
                );
            }
            as_csv(common, &body)
        }
    };
    Ok(report(text, !ok))
}

fn sweep(common: &Common, a: &args::SweepArgs) -> Result<Report, Failure> {
    let rows = symmetric_sweep_with(a.inner.into(), a.alpha, &a.snr_db, &a.shape.shape()?, &common.mc())?;
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => as_csv(common, &sweep_csv(&rows)),
        Format::Json => as_json(common, &rows)?,
    };
    Ok(report(text, false))
}

fn af(common: &Common, cmd: &AfCommand) -> Result<Report, Failure> {
    let cfg = common.mc();
    let json_default = common.format.unwrap_or(Format::Json);
    Ok(match cmd {
        AfCommand::R1 { sym, n } => {
            let (ch, c) = symmetric(sym)?;
            let rows = r1_table(&ch, n, c, &cfg)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => report(as_csv(common, &r1_csv(&rows)), false),
                Format::Json => report(as_json(common, &rows)?, false),
            }
        }
        AfCommand::R2 { sym } => {
            let (ch, _) = symmetric(sym)?;
            let r = r2_rate(&ch, &cfg)?;
            report(single(common, json_default, "r2", r.mean, r.stderr)?, false)
        }
        AfCommand::Corners { sym } => {
            let (ch, c) = symmetric(sym)?;
            let g = nphase_corner_gap(&ch, c, &cfg)?;
            let text = match json_default {
                Format::Json => as_json(common, &g)?,
                Format::Csv => as_csv(
                    common,
                    &format!(
                        "user,achieved_r1,achieved_r2,outer_r1,outer_r2\n1,{},{},{},{}\n2,{},{},{},{}\n",
                        g.achieved[0].0,
                        g.achieved[0].1,
                        g.outer[0].0,
                        g.outer[0].1,
                        g.achieved[1].0,
                        g.achieved[1].1,
                        g.outer[1].0,
                        g.outer[1].1
                    ),
                ),
            };
            report(text, !g.pass)
        }
        AfCommand::Cancellation {
            sym,
            n,
            block_len,
            noiseless,
        } => {
            let (ch, _) = symmetric(sym)?;
            let r = cancellation_check(&ch, *n, *block_len, common.seed, !noiseless)?;
            let text = match json_default {
                Format::Json => serde_json::to_string_pretty(&r)? + "\n",
                Format::Csv => as_csv(
                    common,
                    &format!("n,N,seed,max_residual\n{},{},{},{}\n", r.n, r.block_len, r.seed, r.max_residual),
                ),
            };
            report(text, !(r.max_residual < CANCELLATION_TOL))
        }
        AfCommand::Tridiag { a, b, n } => {
            let t = tridiag_growth(*a, *b, *n)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => report(as_csv(common, &tridiag_csv(&t)), false),
                Format::Json => report(as_json(common, &t)?, false),
            }
        }
        AfCommand::Lemma4 { sym, n } => {
            let (ch, c) = symmetric(sym)?;
            let checks = n
                .iter()
                .map(|&n| lemma4_check(&ch, n, c, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let violated = checks.iter().any(|k| !k.pass);
            let text = match json_default {
                Format::Json => as_json(common, &checks)?,
                Format::Csv => {
                    let mut body = String::from("n,fading,stderr,plug_in,c_jg,pass\n");
                    for k in &checks {
                        body += &format!("{},{},{},{},{},{}\n", k.n, k.fading, k.stderr, k.plug_in, k.c_jg, k.pass);
                    }
                    as_csv(common, &body)
                }
            };
            report(text, violated)
        }
    })
}

fn single(common: &Common, format: Format, name: &str, mean: f64, stderr: f64) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => as_json(common, &json!({ name: mean, "stderr": stderr }))?,
        Format::Csv => as_csv(common, &format!("{name},stderr\n{mean},{stderr}\n")),
    })
}

fn isi(common: &Common, a: &args::IsiArgs) -> Result<Report, Failure> {
    let shape = a.sym.shape.shape()?;
    let c = default_c_jg(&shape, a.sym.c_jg)?;
    let (lower, upper) = isi_bounds(a.sym.snr, a.sym.inr, c)?;
    let mut out = json!({ "lower": lower, "upper": upper, "c_jg": c });
    let mut violated = false;
    if a.n > 0 {
        let gd = ComplexGainSampler::new(FadingModel::new(shape.clone(), a.sym.snr)?);
        let gc = ComplexGainSampler::new(FadingModel::new(shape, a.sym.inr)?);
        let r = isi_rate(&gd, &gc, a.n, &common.mc())?;
        violated = r.mean < lower - 3.0 * r.stderr || r.mean > upper + 3.0 * r.stderr;
        out["n"] = json!(a.n);
        out["estimate"] = json!(r.mean);
        out["stderr"] = json!(r.stderr);
    }
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => as_json(common, &out)?,
        Format::Csv => {
            let est = out.get("estimate").map(|v| v.to_string()).unwrap_or_default();
            as_csv(common, &format!("lower,estimate,upper\n{lower},{est},{upper}\n"))
        }
    };
    Ok(report(text, violated))
}

fn execute(common: &Common, command: &Command) -> Result<Report, Failure> {
    match command {
        Command::JensenGap(a) => jensen_gap(common, a),
        Command::Region(a) => region(common, a),
        Command::GapCheck(a) => gap_check(common, a),
        Command::Sweep(a) => sweep(common, a),
        Command::Af(a) => af(common, a),
        Command::Isi(a) => isi(common, a),
        Command::Run(_) => Err(Failure::Usage("configurations cannot nest `run`".into())),
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("FFIC_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("FFIC_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Failure::Usage("FFIC_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report, Failure> {
    configure_threads()?;
    let config = match cli.command {
        Command::Run(r) => {
            let mut cfg: RunConfig = serde_json::from_str(&fs::read_to_string(&r.config)?)?;
            if cli.common.output.is_some() {
                cfg.common.output = cli.common.output.clone();
            }
            cfg
        }
        command => RunConfig {
            common: cli.common,
            command,
        },
    };
    if cli.dump_config {
        return Ok(report(serde_json::to_string_pretty(&config)? + "\n", false));
    }
    let out = execute(&config.common, &config.command)?;
    if let Some(path) = &config.common.output {
        fs::write(path, &out.text)?;
        return Ok(Report {
            text: String::new(),
            ..out
        });
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(r) => {
            print!("{}", r.text);
            if r.violated {
                eprintln!("FAIL: a theorem bound was violated");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use args::ShapeArgs;

    #[test]
    fn grid_parsing() {
        assert_eq!(args::parse_grid("default").unwrap().len(), 9);
        let g = args::parse_grid("10:0.5, 1000:1").unwrap();
        assert_eq!(g[1].snr, 1000.0);
        assert!(args::parse_grid("10").is_err());
    }

    #[test]
    fn shape_needs_k() {
        let s = ShapeArgs {
            shape: args::ShapeName::Gamma,
            k: None,
            deterministic: false,
        };
        assert!(s.shape().is_err());
    }

    #[test]
    fn run_config_round_trip() {
        let cli = Cli::parse_from(["ffic", "sweep", "--alpha", "0.5", "--snr-db", "20,40", "--seed", "7"]);
        let cfg = RunConfig {
            common: cli.common,
            command: cli.command,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
