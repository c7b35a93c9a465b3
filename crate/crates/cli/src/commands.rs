use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use lrtc_core::data::{sample_mask, synth_lowrank};
use lrtc_core::io::{read_mask, read_tensor, write_log, write_mask, write_pgm, write_tensor};
use lrtc_core::metrics::{ergas, tensor_psnr, tensor_ssim};
use lrtc_core::solver::solve;
use lrtc_core::{DenseTensor, Error, ObservationMask, PenaltyKind, PenaltySpec, SolverConfig};

use crate::args::{AblateArgs, CompleteArgs, MetricsArgs, SampleMaskArgs, SolverArgs, SynthArgs};
use crate::report::{ConfigEcho, FinalIterate, Metrics, PenaltyEcho, RunReport};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn context(path: &Path, e: Error) -> CliError {
    match e {
        Error::Io(io) => CliError::Core(Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        ))),
        other => CliError::Core(other),
    }
}

fn load_tensor(path: &Path) -> CliResult<DenseTensor> {
    read_tensor(path).map_err(|e| context(path, e))
}

fn load_mask(path: &Path) -> CliResult<ObservationMask> {
    read_mask(path).map_err(|e| context(path, e))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn solver_config(penalty: PenaltySpec, a: &SolverArgs) -> SolverConfig {
    let mut cfg = SolverConfig::new(penalty);
    cfg.beta = a.beta.clone();
    cfg.rho0 = a.rho0.clone();
    cfg.mu = a.mu;
    cfg.eps = a.eps;
    cfg.max_iter = a.max_iter;
    cfg.mode_pairs = a.mode_pairs.clone();
    cfg.prox_weight = a.prox_weight.into();
    cfg.stop_rule = a.stop_rule.into();
    cfg.rho_cap = a.rho_cap;
    cfg
}

fn compute_metrics(reference: &DenseTensor, test: &DenseTensor, rescale: bool) -> CliResult<Metrics> {
    let (r, t) = if rescale {
        (reference * 255.0, test * 255.0)
    } else {
        (reference.clone(), test.clone())
    };
    let ergas = match ergas(&r, &t) {
        Ok(v) => Some(v),
        Err(Error::ZeroMeanSlice { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Metrics {
        psnr: tensor_psnr(&r, &t)?,
        ssim: tensor_ssim(&r, &t)?,
        ergas,
    })
}

pub fn complete(a: CompleteArgs) -> CliResult<()> {
    let started = Instant::now();
    let input = load_tensor(&a.input)?;
    let mask = load_mask(&a.mask)?;
    input.expect_shape(mask.shape())?;
    let reference = a.reference.as_deref().map(load_tensor).transpose()?;
    if let Some(r) = &reference {
        input.expect_shape(r.shape())?;
    }
    let penalty = PenaltySpec::from_tau_p(a.penalty.into(), a.p, a.tau_p)?;
    let cfg = solver_config(penalty, &a.solver);
    let pairs = cfg.resolve(input.order())?;

    let out = with_threads(a.solver.threads, || solve(&input, &mask, &cfg))??;

    write_tensor(&out.tensor, &a.output).map_err(|e| context(&a.output, e))?;
    let qs: Vec<usize> = pairs.iter().map(|p| p.pair.q).collect();
    write_log(&out.log, &qs, &a.log).map_err(|e| context(&a.log, e))?;
    for (index, path) in &a.export_slice {
        write_pgm(&out.tensor, *index, path).map_err(|e| context(path, e))?;
    }
    let metrics = reference
        .as_ref()
        .map(|r| compute_metrics(r, &out.tensor, a.rescale))
        .transpose()?;

    let last = out.log.last().expect("solver runs at least one iteration");
    let report = RunReport {
        command: "complete",
        version: env!("CARGO_PKG_VERSION"),
        config: ConfigEcho {
            input: a.input.display().to_string(),
            mask: a.mask.display().to_string(),
            output: a.output.display().to_string(),
            reference: a.reference.as_ref().map(|p| p.display().to_string()),
            penalty: PenaltyEcho {
                kind: penalty.kind().to_string(),
                p: penalty.p(),
                tau_p: a.tau_p,
                tau: penalty.tau(),
            },
            mode_pairs: qs,
            beta: pairs.iter().map(|p| p.beta).collect(),
            rho0: pairs.iter().map(|p| p.rho0).collect(),
            mu: cfg.mu,
            eps: cfg.eps,
            max_iter: cfg.max_iter,
            prox_weight: format!("{:?}", a.solver.prox_weight).to_lowercase(),
            stop_rule: match a.solver.stop_rule {
                crate::args::StopRuleArg::Change => "change".into(),
                crate::args::StopRuleArg::ChangeFeasibility => "change-feasibility".into(),
            },
            rho_cap: cfg.rho_cap,
            threads: a.solver.threads,
            rescale: a.rescale,
        },
        log: a.log.display().to_string(),
        iterations: out.iterations(),
        converged: out.converged,
        rho_capped: out.log.iter().any(|e| e.rho_capped),
        last: FinalIterate {
            rel_change: last.rel_change,
            primal_residuals: last.primal_residuals.clone(),
            multiplier_norms: last.multiplier_norms.clone(),
            objective: last.objective,
        },
        observed_fraction: mask.sr(),
        metrics,
        wall_time_secs: started.elapsed().as_secs_f64(),
        seed: None,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &a.report {
        Some(path) => {
            let mut f = File::create(path)?;
            writeln!(f, "{json}")?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn parse_grid<T: FromStr>(flag: &str, raw: &[String]) -> CliResult<Vec<T>> {
    let values = raw
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse `{s}`")))
        })
        .collect::<CliResult<Vec<T>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage(format!("{flag}: empty grid")));
    }
    Ok(values)
}

/// One grid point of an ablation.
struct GridPoint {
    kind: PenaltyKind,
    p: Option<f64>,
    tau_p: Option<f64>,
}

fn expand_grid(kinds: &[PenaltyKind], ps: &[f64], tau_ps: &[f64]) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &kind in kinds {
        match kind {
            PenaltyKind::Mpcp => {
                for &p in ps {
                    for &t in tau_ps {
                        points.push(GridPoint { kind, p: Some(p), tau_p: Some(t) });
                    }
                }
            }
            PenaltyKind::Mcp => {
                for &t in tau_ps {
                    points.push(GridPoint { kind, p: None, tau_p: Some(t) });
                }
            }
            PenaltyKind::Tnn => points.push(GridPoint { kind, p: None, tau_p: None }),
        }
    }
    points
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

pub fn ablate(a: AblateArgs) -> CliResult<()> {
    let kinds: Vec<PenaltyKind> = parse_grid("--penalties", &a.penalties)?;
    let ps: Vec<f64> = parse_grid("--p-grid", &a.p_grid)?;
    let tau_ps: Vec<f64> = parse_grid("--tau-p-grid", &a.tau_p_grid)?;
    let seeds: Vec<u64> = parse_grid("--seeds", &a.seeds)?;

    let input = load_tensor(&a.input)?;
    let reference = match &a.reference {
        Some(p) => load_tensor(p)?,
        None => input.clone(),
    };
    input.expect_shape(reference.shape())?;
    let fixed_mask = a.mask.as_deref().map(load_mask).transpose()?;
    if let Some(m) = &fixed_mask {
        input.expect_shape(m.shape())?;
    }

    let points = expand_grid(&kinds, &ps, &tau_ps);
    let mut specs = Vec::with_capacity(points.len());
    for pt in &points {
        let spec = PenaltySpec::from_tau_p(pt.kind, pt.p.unwrap_or(1.0), pt.tau_p.unwrap_or(2.0))?;
        let cfg = solver_config(spec, &a.solver);
        cfg.resolve(input.order())?;
        specs.push(cfg);
    }

    let mut w = csv::Writer::from_path(&a.out)
        .map_err(|e| CliError::Core(Error::InvalidParameter(format!("{}: {e}", a.out.display()))))?;
    let csv_err = |e: csv::Error| CliError::Core(Error::InvalidParameter(format!("csv: {e}")));
    w.write_record([
        "penalty", "p", "tau_p", "seed", "iterations", "converged", "psnr", "ssim", "ergas",
        "rel_error",
    ])
    .map_err(csv_err)?;
    let ref_norm = reference.frobenius_norm();
    for &seed in &seeds {
        let mask = match &fixed_mask {
            Some(m) => m.clone(),
            None => sample_mask(input.shape(), a.sr.expect("clap requires --mask or --sr"), seed)?,
        };
        for (pt, cfg) in points.iter().zip(&specs) {
            let out = with_threads(a.solver.threads, || solve(&input, &mask, cfg))??;
            let m = compute_metrics(&reference, &out.tensor, a.rescale)?;
            let rel = (&out.tensor - &reference).frobenius_norm() / ref_norm.max(f64::MIN_POSITIVE);
            w.write_record([
                pt.kind.to_string(),
                fmt_opt(pt.p),
                fmt_opt(pt.tau_p),
                seed.to_string(),
                out.iterations().to_string(),
                out.converged.to_string(),
                fmt_metric(m.psnr),
                m.ssim.to_string(),
                fmt_opt(m.ergas),
                rel.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn metrics(a: MetricsArgs) -> CliResult<()> {
    let reference = load_tensor(&a.reference)?;
    let test = load_tensor(&a.test)?;
    reference.expect_shape(test.shape())?;
    let m = compute_metrics(&reference, &test, a.rescale)?;
    println!("{}", serde_json::to_string(&m).expect("metrics serialize"));
    Ok(())
}

pub fn sample_mask_cmd(a: SampleMaskArgs) -> CliResult<()> {
    let mask = sample_mask(&a.shape, a.sr, a.seed)?;
    write_mask(&mask, &a.output).map_err(|e| context(&a.output, e))?;
    Ok(())
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let shape: [usize; 3] = a
        .shape
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--shape needs three extents, got {:?}", a.shape)))?;
    let t = synth_lowrank(shape, a.rank, a.seed)?;
    write_tensor(&t, &a.output).map_err(|e| context(&a.output, e))?;
    Ok(())
}
