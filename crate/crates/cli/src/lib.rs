//! Experiment runner behind the `riesz-lab` binary.

pub mod cache;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;

use riesz_lab::analytic::{
    conversion_exponent_check, default_t_grid, growth_scan, residue_at_1, source_constant,
    ResidueMethod, ResidueOptions,
};
use riesz_lab::coeffs::{CoeffTable, LSeriesSpec};
use riesz_lab::fit::geometric_grid;
use riesz_lab::ingham::{chain_cutoff, chain_reduce, identity_scan, DeltaRule, GrowthLaw};
use riesz_lab::perron::{contour_residue_check, truncation_scan};
use riesz_lab::report::{self, Rendered, SCHEMA};
use riesz_lab::riesz::{k_threshold, riesz_report, Threshold};
use riesz_lab::testbeds::{make_testbed_with, TestbedId, TestbedOptions, DEFAULT_TAU_CAP};
use riesz_lab::{Error, ErrorClass, Result};

use cache::Cache;
use config::{one_line, Cli, CommandName, Format, Params, CACHE_ENV, DEFAULT_EPSILON, DEFAULT_T0};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CONTRACT: u8 = 3;
pub const EXIT_RESOURCE: u8 = 4;

/// Tolerance on the contour check's relative deviation.
pub const CONTOUR_TOLERANCE: f64 = 1e-3;

pub fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => EXIT_VALIDATION,
        ErrorClass::Numerical => EXIT_CONTRACT,
        ErrorClass::Resource | ErrorClass::Io => EXIT_RESOURCE,
    }
}

/// Parses arguments, runs, and returns the exit status. Errors are reported
/// on stderr as a single `error code=... exit=...` line.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return EXIT_OK;
            }
            eprintln!("riesz-lab: error code=usage exit={EXIT_VALIDATION}: {}", one_line(&e.to_string()));
            return EXIT_VALIDATION;
        }
    };
    match run(&cli) {
        Ok(status) => status,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("riesz-lab: error code={} exit={code}: {}", e.code(), one_line(&e.to_string()));
            code
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn count(name: &str, v: f64) -> Result<usize> {
    if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e12) {
        return Err(invalid(format!("{name} = {v} must be a positive integer")));
    }
    Ok(v as usize)
}

fn ratio(v: f64) -> Result<f64> {
    if !(v > 1.0 && v.is_finite()) {
        return Err(invalid(format!("grid ratio {v} must exceed 1")));
    }
    Ok(v)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} = {v} must be positive")));
    }
    Ok(v)
}

#[derive(Debug)]
struct Testbed {
    id: TestbedId,
    tau_cap: usize,
}

#[derive(Debug)]
enum Job {
    Coeffs { tb: Testbed, cutoff: usize },
    Riesz { tb: Testbed, k: u32, grid: Vec<f64>, opts: ResidueOptions },
    Perron { ks: Vec<u32>, ys: Vec<f64>, c: f64, t_grid: Vec<f64> },
    Contour { tb: Testbed, x: f64, k: u32, c: f64, t: f64, left_sigma: f64 },
    Reduce { tb: Testbed, k1: u32, residue: Option<f64>, grid: Vec<f64>, rule: DeltaRule, opts: ResidueOptions },
    Growth { tb: Testbed, sigma: f64, t_grid: Vec<f64>, epsilon: f64 },
    Conversion { tb: Testbed, sigma: f64, t_grid: Vec<f64> },
    Residue { tb: Testbed, opts: ResidueOptions },
    Probe { tb: Testbed, k: u32, grid: Vec<f64> },
}

/// Resolved settings; every range is checked before anything runs.
#[derive(Debug)]
struct Plan {
    job: Job,
    out: Option<PathBuf>,
    format: Format,
    workers: usize,
    cache_dir: PathBuf,
}

fn plan(p: &Params) -> Result<Plan> {
    let epsilon = p.epsilon.unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(invalid(format!("epsilon = {epsilon} outside (0, 0.5]")));
    }
    let workers = match p.workers {
        Some(0) => return Err(invalid("workers must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let cache_dir = p
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".riesz-cache"));
    let command = p.command.ok_or_else(|| invalid("no command given (flag or config `command`)"))?;

    let testbed = || -> Result<Testbed> {
        let label = p.testbed.as_deref().unwrap_or("zeta");
        let tau_cap = count("tau-cap", p.tau_cap.unwrap_or(DEFAULT_TAU_CAP as f64))?;
        Ok(Testbed {
            id: label.parse()?,
            tau_cap,
        })
    };
    let c = p.c.unwrap_or(1.0 + epsilon);
    let k_one = |default: u32| -> Result<u32> {
        match p.k.as_deref() {
            None => Ok(default),
            Some([k]) => Ok(*k),
            Some(ks) => Err(invalid(format!("expected a single k, got {ks:?}"))),
        }
    };
    let x_grid = |xmin: f64, xmax: f64| -> Result<Vec<f64>> {
        let lo = positive("xmin", p.xmin.unwrap_or(xmin))?;
        let hi = positive("xmax", p.xmax.unwrap_or(xmax))?;
        if lo < 1.0 || hi < lo {
            return Err(invalid(format!("need 1 <= xmin <= xmax, got {lo} and {hi}")));
        }
        let mut grid = geometric_grid(lo, hi, ratio(p.grid_ratio.unwrap_or(2f64.sqrt()))?)?;
        if *grid.last().unwrap() < hi * (1.0 - 1e-9) {
            grid.push(hi);
        }
        Ok(grid)
    };
    let residue_opts = || -> Result<ResidueOptions> {
        let mut o = ResidueOptions::default();
        if let Some(pc) = p.prime_cutoff {
            o.prime_cutoff = count("prime-cutoff", pc)?;
        }
        Ok(o)
    };

    let job = match command {
        CommandName::Coeffs => Job::Coeffs {
            tb: testbed()?,
            cutoff: count("cutoff", p.cutoff.unwrap_or(1e4))?,
        },
        CommandName::Riesz => {
            let k = k_one(k_threshold(2, Threshold::New)?)?;
            Job::Riesz {
                tb: testbed()?,
                k,
                grid: x_grid(10.0, 1e5)?,
                opts: residue_opts()?,
            }
        }
        CommandName::Perron => {
            let ks = p.k.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
            let ys = p.y.clone().unwrap_or_else(|| vec![0.5, 2.0, 10.0]);
            if ks.is_empty() || ys.is_empty() {
                return Err(invalid("perron needs at least one k and one y"));
            }
            let tmin = positive("tmin", p.tmin.unwrap_or(100.0))?;
            let tmax = positive("tmax", p.tmax.unwrap_or(3200.0))?;
            Job::Perron {
                ks,
                ys,
                c,
                t_grid: geometric_grid(tmin, tmax, 2.0)?,
            }
        }
        CommandName::Contour => {
            let x = positive("x", p.x.unwrap_or(50.0))?;
            Job::Contour {
                tb: testbed()?,
                x,
                k: k_one(2)?,
                c,
                t: positive("t", p.t.unwrap_or(x / 10.0))?,
                left_sigma: p.left_sigma.unwrap_or(-0.5),
            }
        }
        CommandName::Reduce => Job::Reduce {
            tb: testbed()?,
            k1: p.k1.unwrap_or(k_threshold(2, Threshold::New)?),
            residue: p.residue,
            grid: x_grid(1e3, 1e5)?,
            rule: DeltaRule {
                law: GrowthLaw::Linear {
                    factor: positive("e-factor", p.e_factor.unwrap_or(10.0))?,
                },
                factor: positive("delta-factor", p.delta_factor.unwrap_or(2.0))?,
            },
            opts: residue_opts()?,
        },
        CommandName::Growth if p.conversion == Some(true) => {
            let tmin = positive("tmin", p.tmin.unwrap_or(100.0))?;
            let tmax = positive("tmax", p.tmax.unwrap_or(1000.0))?;
            let step = positive("step", p.step.unwrap_or(1.0))?;
            if tmax <= tmin {
                return Err(invalid("tmax must exceed tmin"));
            }
            let n = ((tmax - tmin) / step).round() as usize;
            Job::Conversion {
                tb: testbed()?,
                sigma: p.sigma.unwrap_or(0.0),
                t_grid: (0..=n).map(|i| tmin + (tmax - tmin) * i as f64 / n.max(1) as f64).collect(),
            }
        }
        CommandName::Growth => {
            let t0 = positive("t0", p.t0.unwrap_or(DEFAULT_T0))?;
            let windows = p.windows.unwrap_or(8);
            Job::Growth {
                tb: testbed()?,
                sigma: p.sigma.unwrap_or(1.0 + epsilon),
                t_grid: default_t_grid(t0, windows, positive("step", p.step.unwrap_or(0.5))?),
                epsilon,
            }
        }
        CommandName::Residue => Job::Residue {
            tb: testbed()?,
            opts: residue_opts()?,
        },
        CommandName::ProbeIdentity => Job::Probe {
            tb: testbed()?,
            k: k_one(2)?,
            grid: x_grid(1e2, 1e5)?,
        },
    };
    Ok(Plan {
        job,
        out: p.out.clone(),
        format: p.format.unwrap_or(Format::Both),
        workers,
        cache_dir,
    })
}

fn make_spec(tb: &Testbed, cache: &mut Cache) -> Result<LSeriesSpec> {
    let mut opts = TestbedOptions {
        tau_cap: tb.tau_cap,
        tau_len: tb.tau_cap,
        tau: None,
    };
    if tb.id == TestbedId::RsDelta {
        opts.tau = Some(Arc::new(cache.tau(tb.tau_cap, tb.tau_cap)?));
    }
    make_testbed_with(&tb.id, &opts)
}

/// Sieved table, refusing RS_DELTA cutoffs beyond the tau cap up front.
fn sieved(tb: &Testbed, spec: &LSeriesSpec, cutoff: usize, cache: &mut Cache) -> Result<CoeffTable> {
    if tb.id == TestbedId::RsDelta && cutoff > tb.tau_cap {
        return Err(Error::Resource(format!(
            "rs-delta to {cutoff} needs tau beyond the cap {} (raise --tau-cap)",
            tb.tau_cap
        )));
    }
    cache.table(spec, cutoff)
}

struct Outcome {
    rendered: Rendered,
    contract_ok: bool,
    summary: String,
}

fn execute(job: &Job, cache: &mut Cache) -> Result<Outcome> {
    let ok = |rendered, summary| Outcome {
        rendered,
        contract_ok: true,
        summary,
    };
    Ok(match job {
        Job::Coeffs { tb, cutoff } => {
            let spec = make_spec(tb, cache)?;
            let t = sieved(tb, &spec, *cutoff, cache)?;
            ok(report::coeffs_report(&t)?, format!("{} coefficients to {cutoff}", spec.label))
        }
        Job::Riesz { tb, k, grid, opts } => {
            let spec = make_spec(tb, cache)?;
            let constant = source_constant(&spec, opts)?;
            let cutoff = grid.last().unwrap().ceil() as usize;
            let t = sieved(tb, &spec, cutoff, cache)?;
            let r = riesz_report(&t, *k, constant.value, constant.source, grid)?;
            let summary = format!(
                "{} k={}: max |error| {:.6}, fitted exponent {:?}",
                spec.label,
                k,
                r.max_abs_error(),
                r.fitted_exponent
            );
            ok(report::riesz_render(&r)?, summary)
        }
        Job::Perron { ks, ys, c, t_grid } => {
            let scan = truncation_scan(ys, ks, *c, t_grid)?;
            let slopes: Vec<String> = scan
                .cells
                .iter()
                .map(|cell| match cell.fit {
                    Some(f) => format!("y={} k={}: {:.3}", cell.y, cell.k, f.slope),
                    None => format!("y={} k={}: saturated", cell.y, cell.k),
                })
                .collect();
            Outcome {
                contract_ok: scan.all_within_contract(),
                rendered: report::perron_render(&scan)?,
                summary: slopes.join("; "),
            }
        }
        Job::Contour { tb, x, k, c, t, left_sigma } => {
            let spec = make_spec(tb, cache)?;
            let r = contour_residue_check(&spec, *x, *k, *c, *t, *left_sigma)?;
            Outcome {
                contract_ok: r.relative_deviation <= CONTOUR_TOLERANCE,
                rendered: report::contour_render(&spec.label, &r)?,
                summary: format!("{}: relative deviation {:.3e}", spec.label, r.relative_deviation),
            }
        }
        Job::Reduce { tb, k1, residue, grid, rule, opts } => {
            let spec = make_spec(tb, cache)?;
            let c = match residue {
                Some(c) => *c,
                None => source_constant(&spec, opts)?.value,
            };
            let cutoff = chain_cutoff(*k1, rule, *grid.last().unwrap());
            let t = Arc::new(sieved(tb, &spec, cutoff, cache)?);
            let trace = chain_reduce(t, *k1, c, grid, rule)?;
            let summary = format!(
                "{}: level-0 coefficient {:.6}, direct {:.6}, C = {c}, 2^k1 C/(k1+1) = {:.6}",
                spec.label,
                trace.level0_partial_sum_coefficient,
                trace.direct_partial_sum_coefficient,
                trace.paper_alternative_constant
            );
            ok(report::reduce_render(&trace)?, summary)
        }
        Job::Growth { tb, sigma, t_grid, epsilon } => {
            let spec = make_spec(tb, cache)?;
            let g = growth_scan(&spec, *sigma, t_grid, *epsilon)?;
            let summary = format!(
                "{} sigma={sigma}: exponent {:.4}, reference {:.4}",
                spec.label, g.measured_exponent, g.reference_exponent
            );
            ok(report::growth_render(&spec.label, &g)?, summary)
        }
        Job::Conversion { tb, sigma, t_grid } => {
            let spec = make_spec(tb, cache)?;
            let f = conversion_exponent_check(&spec, *sigma, t_grid)?;
            Outcome {
                contract_ok: f.within_contract(),
                summary: format!(
                    "{} sigma={sigma}: conversion exponent {:.4}, reference {:.4}",
                    spec.label, f.measured_exponent, f.reference_exponent
                ),
                rendered: report::conversion_render(&spec.label, &f)?,
            }
        }
        Job::Residue { tb, opts } => {
            let spec = make_spec(tb, cache)?;
            let chosen = source_constant(&spec, opts)?;
            let estimates: Vec<_> = [
                ResidueMethod::Closed,
                ResidueMethod::EulerProduct,
                ResidueMethod::Richardson,
            ]
            .into_iter()
            .filter_map(|m| residue_at_1(&spec, m, opts).ok())
            .collect();
            let summary = format!("{}: C = {} ({:?})", spec.label, chosen.value, chosen.source);
            ok(report::residue_render(&spec.label, &chosen, &estimates)?, summary)
        }
        Job::Probe { tb, k, grid } => {
            let spec = make_spec(tb, cache)?;
            let cutoff = grid.last().unwrap().ceil() as usize;
            let t = sieved(tb, &spec, cutoff, cache)?;
            let probes = identity_scan(&t, *k, grid)?;
            let last = probes.last().unwrap();
            let summary = format!("{} k={k}: gap/x at x={} is {:.6e}", spec.label, last.x, last.gap_over_x);
            ok(report::probe_render(&spec.label, *k, &probes)?, summary)
        }
    })
}

/// Writes through a sibling temp file and renames over the target.
pub fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| invalid(format!("bad output path {}", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(body.as_bytes())?;
    f.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Meta<'a> {
    schema: &'static str,
    generated_unix: u64,
    workers: usize,
    contract_ok: bool,
    files: Vec<PathBuf>,
    cache: &'a [cache::Event],
}

fn emit(plan: &Plan, outcome: &Outcome, cache: &Cache) -> Result<()> {
    let Some(stem) = &plan.out else {
        print!("{}", outcome.rendered.json);
        return Ok(());
    };
    let mut files = Vec::new();
    if plan.format != Format::Csv {
        let p = with_suffix(stem, ".json");
        write_atomic(&p, &outcome.rendered.json)?;
        files.push(p);
    }
    if plan.format != Format::Json {
        for (name, body) in &outcome.rendered.tables {
            let p = if name.is_empty() {
                with_suffix(stem, ".csv")
            } else {
                with_suffix(stem, &format!(".{name}.csv"))
            };
            write_atomic(&p, body)?;
            files.push(p);
        }
    }
    let meta = Meta {
        schema: SCHEMA,
        generated_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        workers: plan.workers,
        contract_ok: outcome.contract_ok,
        files,
        cache: &cache.events,
    };
    let body = serde_json::to_string_pretty(&meta).map_err(|e| invalid(e.to_string()))? + "\n";
    write_atomic(&with_suffix(stem, ".meta.json"), &body)
}

pub fn run(cli: &Cli) -> Result<u8> {
    let mut params = match &cli.config {
        Some(path) => Params::from_file(path)?,
        None => Params::default(),
    };
    params.apply(cli);
    let plan = plan(&params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let mut cache = Cache::new(plan.cache_dir.clone());
    let outcome = pool.install(|| execute(&plan.job, &mut cache))?;
    emit(&plan, &outcome, &cache)?;
    eprintln!("riesz-lab: {}", outcome.summary);
    if outcome.contract_ok {
        Ok(EXIT_OK)
    } else {
        eprintln!("riesz-lab: error code=contract exit={EXIT_CONTRACT}: {}", outcome.summary);
        Ok(EXIT_CONTRACT)
    }
}
