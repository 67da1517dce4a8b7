//! Subcommand bodies. Each returns the table to emit after the metadata line.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};
use spqm::dists::{
    density_cartan_reduced, density_hc_reduced, feynman_kac_estimate, normalization, sigma_width, Estimate,
    FkConfig, Measure, Observable, ReducedPoint, Weight,
};
use spqm::fock::FockOperator;
use spqm::group::{gauge_hc, hc_to_cartan, Chart};
use spqm::par::map_chunks;
use spqm::moments::{analytic_determinant, analytic_moments, riccati_integrate, SchurRecursion};
use spqm::paths::{
    closed_form_hc, propagate_sde, sample_wiener_indexed, ModifiedMethod, ModifiedSampler, WienerPath,
};
use spqm::povm::{
    channel_monte_carlo, completeness_quadrature, late_time_coherent_residual, partition_function_check,
    ChannelConfig, MAX_CHANNEL_DIM,
};
use spqm::verify::{run_check, VerifyConfig, CHECKS};
use spqm::SpqmError;

use crate::config::{CommonArgs, ExperimentConfig};
use crate::output::{emit, num, Table};
use crate::CliError;

/// Result of a subcommand: extra metadata, the table, and whether every check passed.
pub struct Outcome {
    pub extra: Value,
    pub table: Table,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Plain,
    Modified,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "plain")]
    pub measure: MeasureArg,
    /// Per-step CSV dump (k, Re dw, Im dw, coordinates).
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Number of paths included in the dump.
    #[arg(long, default_value_t = 1)]
    pub dump_paths: usize,
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid points in (0, T].
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct PovmArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 40)]
    pub radial: usize,
    #[arg(long, default_value_t = 64)]
    pub angular: usize,
    /// Truncation for the channel Monte Carlo and its dense reference.
    #[arg(long, default_value_t = 8)]
    pub channel_dim: usize,
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Paths for the moment and Feynman-Kac Monte Carlo checks.
    #[arg(long, default_value_t = 100_000)]
    pub mc_paths: usize,
    /// Run only these criteria (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
}

/// Step counts `N_j = j·N/points`, `j = 1..=points`.
fn grid(steps: usize, points: usize) -> Result<Vec<usize>, CliError> {
    if points == 0 || !steps.is_multiple_of(points) {
        return Err(CliError::Usage(format!("--points {points} must divide the {steps} time steps")));
    }
    Ok((1..=points).map(|j| j * steps / points).collect())
}

fn c_cols(z: num_complex::Complex64) -> [Value; 2] {
    [num(z.re), num(z.im)]
}

fn sample(cfg: &ExperimentConfig, sampler: &Option<ModifiedSampler>, i: usize) -> WienerPath {
    match sampler {
        Some(s) => s.sample(cfg.seed, i as u64),
        None => sample_wiener_indexed(cfg.steps(), cfg.dt(), cfg.kappa, cfg.seed, i as u64),
    }
}

// Summary row, dump rows and recursion error for one path.
type PathRows = (Vec<Value>, Vec<Vec<Value>>, f64);

pub fn simulate(args: &SimulateArgs, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.steps();
    let sampler = match args.measure {
        MeasureArg::Plain => None,
        MeasureArg::Modified => Some(ModifiedSampler::new(n, cfg.dt(), cfg.kappa, ModifiedMethod::Banded)?),
    };
    let mut table = Table::new(&[
        "path", "re_nu", "im_nu", "r", "re_z", "im_z", "re_mu", "im_mu", "re_beta", "im_beta", "phi", "ell",
        "re_alpha", "im_alpha", "recursion_vs_sums", "cross_chart", "ell_vs_s_minus_f",
    ]);
    let mut dump = Table::new(&[
        "path", "k", "re_dw", "im_dw", "re_nu", "im_nu", "r", "re_z", "im_z", "re_mu", "im_mu", "re_beta",
        "im_beta", "phi", "ell", "re_alpha", "im_alpha",
    ]);
    let per_path = |i: usize| -> Result<PathRows, CliError> {
        let path = sample(cfg, &sampler, i);
        let tr = propagate_sde(&path, Chart::Cartan)?;
        let x = tr.hc[n];
        let sums = closed_form_hc(&path);
        let rec_err = (x.nu - sums.nu).norm().max((x.mu - sums.mu).norm()).max((x.z - sums.z).norm());
        let y = *tr.cartan.last().expect("non-empty path");
        let yt = hc_to_cartan(&x)?;
        let cross = (y.beta - yt.beta)
            .norm()
            .max((y.alpha - yt.alpha).norm())
            .max((y.ell - yt.ell).abs())
            .max((y.phi - yt.phi).abs());
        let ell_err = (y.ell - (x.s() - gauge_hc(&x)?.f)).abs();
        let mut row = vec![json!(i)];
        row.extend(c_cols(x.nu));
        row.push(num(x.r));
        row.extend(c_cols(x.z));
        row.extend(c_cols(x.mu));
        row.extend(c_cols(y.beta));
        row.extend([num(y.phi), num(y.ell)]);
        row.extend(c_cols(y.alpha));
        row.extend([num(rec_err), num(cross), num(ell_err)]);
        let mut steps = Vec::new();
        if args.dump.is_some() && i < args.dump_paths {
            for k in 0..=n {
                let dw = if k == 0 { None } else { Some(path.increments[k - 1]) };
                let x = tr.hc[k];
                let mut row = vec![json!(i), json!(k)];
                row.extend(dw.map_or([Value::Null, Value::Null], c_cols));
                row.extend(c_cols(x.nu));
                row.push(num(x.r));
                row.extend(c_cols(x.z));
                row.extend(c_cols(x.mu));
                match tr.cartan_at(k) {
                    Some(y) => {
                        row.extend(c_cols(y.beta));
                        row.extend([num(y.phi), num(y.ell)]);
                        row.extend(c_cols(y.alpha));
                    }
                    None => row.extend(std::iter::repeat_n(Value::Null, 6)),
                }
                steps.push(row);
            }
        }
        Ok((row, steps, rec_err))
    };
    let chunks = map_chunks(cfg.paths, 64, |range| range.map(per_path).collect::<Result<Vec<_>, _>>());
    let mut worst = 0.0f64;
    for chunk in chunks {
        for (row, steps, rec_err) in chunk? {
            table.push(row);
            dump.rows.extend(steps);
            worst = worst.max(rec_err);
        }
    }
    let extra = json!({
        "measure": format!("{:?}", args.measure).to_lowercase(),
        "steps": n,
        "cartan_start_kt": spqm::paths::CARTAN_SEED_KT,
    });
    if let Some(p) = &args.dump {
        let meta = crate::metadata("simulate-dump", cfg, &extra);
        emit(Some(p), &meta, &dump, crate::config::Format::Csv)?;
    }
    Ok(Outcome { extra: json!({"measure": extra["measure"], "steps": n, "max_recursion_vs_sums": worst}), table, passed: true })
}

pub fn moments(args: &SweepArgs, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let points = args.points.unwrap_or(50);
    let kt = cfg.kt();
    // Riccati grid of at least 1000 steps per unit κT, landing on every output point.
    let per = ((1000.0 * kt) / points as f64).ceil().max(1.0) as usize;
    let riccati = riccati_integrate(cfg.kappa, cfg.t_final, per * points)?;
    let mut cols = vec!["t", "kt", "n", "m", "q", "det", "sigma", "riccati_n", "riccati_m", "riccati_q"];
    let discrete = match cfg.dt {
        Some(dt) => {
            cols.extend(["direct_n", "direct_m", "direct_q", "direct_det"]);
            let marks = grid(cfg.steps(), points)?;
            let mut rec = SchurRecursion::new(dt, cfg.kappa)?;
            let mut out = Vec::with_capacity(points);
            for &m in &marks {
                while rec.size() < m {
                    rec.append()?;
                }
                out.push((rec.moments(), rec.det()));
            }
            Some(out)
        }
        None => None,
    };
    let mut table = Table::new(&cols);
    for j in 1..=points {
        let t = cfg.t_final * j as f64 / points as f64;
        let x = cfg.kappa * t;
        let a = analytic_moments(x);
        let (_, r) = riccati[j * per];
        let mut row = vec![
            num(t),
            num(x),
            num(a.n),
            num(a.m),
            num(a.q),
            num(analytic_determinant(x)),
            num(sigma_width(x)),
            num(r.n),
            num(r.m),
            num(r.q),
        ];
        if let Some(d) = &discrete {
            let (m, det) = d[j - 1];
            row.extend([num(m.n), num(m.m), num(m.q), num(det)]);
        }
        table.push(row);
    }
    Ok(Outcome { extra: json!({"points": points, "riccati_steps": per * points}), table, passed: true })
}

fn estimate_cols(e: Result<Estimate, SpqmError>) -> Result<[Value; 3], CliError> {
    match e {
        Ok(e) => Ok([num(e.mean), num(e.std_err), num(e.ess)]),
        Err(SpqmError::EssCollapse { ess, paths }) => {
            eprintln!("warning: weighted estimator collapsed (ESS {ess:.1} of {paths} paths); leaving it empty");
            Ok([Value::Null, Value::Null, num(ess)])
        }
        Err(e) => Err(e.into()),
    }
}

pub fn distributions(args: &SweepArgs, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let points = args.points.unwrap_or(5);
    let marks = grid(cfg.steps(), points)?;
    let dt = cfg.dt();
    let mut table = Table::new(&[
        "kt", "sigma", "normalization", "n", "m", "q", "c_peak", "b_origin", "plain_nu2", "plain_nu2_se",
        "plain_nu_conj_mu", "plain_nu_conj_mu_se", "weight", "weight_se", "weight_ess", "modified_nu2",
        "modified_nu2_se", "modified_q", "modified_q_se",
    ]);
    for (j, &n) in marks.iter().enumerate() {
        let x = cfg.kappa * dt * n as f64;
        let a = analytic_moments(x);
        let shell = |beta, alpha| ReducedPoint { r: 2.0 * x, beta, alpha };
        let zero = num_complex::Complex64::new(0.0, 0.0);
        let c_peak = density_cartan_reduced(&shell(zero, zero), x)?.value();
        let b_origin = density_hc_reduced(&shell(zero, zero), x, true)?.value();
        let seed = cfg.seed.wrapping_add(j as u64);
        let fk = |measure, weight| FkConfig::new(measure, weight, cfg.paths, n, dt, cfg.kappa, seed);
        let plain = feynman_kac_estimate(&fk(Measure::Plain, Weight::None), &[Observable::NuAbs2, Observable::ReNuConjMu])?;
        let weighted = feynman_kac_estimate(&fk(Measure::Plain, Weight::ExpMinus2S), &[Observable::One]).map(|v| v[0]);
        let modified =
            feynman_kac_estimate(&fk(Measure::Modified, Weight::None), &[Observable::NuAbs2, Observable::ReNuConjMu])?;
        let mut row = vec![
            num(x),
            num(sigma_width(x)),
            num(normalization(x)),
            num(a.n),
            num(a.m),
            num(a.q),
            num(c_peak),
            num(b_origin),
            num(plain[0].mean),
            num(plain[0].std_err),
            num(plain[1].mean),
            num(plain[1].std_err),
        ];
        row.extend(estimate_cols(weighted)?);
        row.extend([num(modified[0].mean), num(modified[0].std_err), num(modified[1].mean), num(modified[1].std_err)]);
        table.push(row);
    }
    Ok(Outcome { extra: json!({"points": points, "min_ess_fraction": 0.01}), table, passed: true })
}

pub fn povm(args: &PovmArgs, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    if args.channel_dim < 2 || args.channel_dim > MAX_CHANNEL_DIM {
        return Err(CliError::Usage(format!("--channel-dim must lie in 2..={MAX_CHANNEL_DIM}")));
    }
    let kt = cfg.kt();
    let mut table = Table::new(&[
        "check", "kt", "dim", "value", "reference", "deviation", "std_err", "paths", "nodes", "note",
    ]);
    let p = partition_function_check(kt, cfg.dim)?;
    table.push(vec![
        json!("partition"),
        num(kt),
        json!(cfg.dim),
        num(p.trace),
        num(p.closed_form),
        num(p.residual),
        Value::Null,
        Value::Null,
        Value::Null,
        json!(if p.truncation_warning { "truncation tail not negligible" } else { "" }),
    ]);
    let c = completeness_quadrature(kt, cfg.dim, args.radial, args.angular)?;
    table.push(vec![
        json!("completeness"),
        num(kt),
        json!(cfg.dim),
        num(c.deviation),
        num(0.0),
        num(c.deviation),
        Value::Null,
        Value::Null,
        json!(format!("{}x{}", c.radial_nodes, c.angular_nodes)),
        json!(format!("refined {:.3e}, converged {}", c.deviation_refined, c.grid_converged)),
    ]);
    let beta = num_complex::Complex64::new(0.5, 0.2);
    let alpha = num_complex::Complex64::new(-0.3, 0.4);
    let res = late_time_coherent_residual(kt, beta, alpha, cfg.dim)?;
    table.push(vec![
        json!("coherent_limit"),
        num(kt),
        json!(cfg.dim),
        num(res),
        num((-2.0 * kt).exp()),
        num((res - (-2.0 * kt).exp()).abs()),
        Value::Null,
        Value::Null,
        Value::Null,
        json!("beta=0.5+0.2i alpha=-0.3+0.4i"),
    ]);
    let dim = args.channel_dim;
    let mut rho = FockOperator::zeros(dim);
    rho[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
    let cc = ChannelConfig { kappa: cfg.kappa, kt, dt: cfg.dt(), dim, paths: cfg.paths, seed: cfg.seed };
    let r = channel_monte_carlo(&rho, &cc)?;
    table.push(vec![
        json!("channel_trace_distance"),
        num(kt),
        json!(dim),
        num(r.trace_distance),
        num(0.0),
        num(r.trace_distance),
        Value::Null,
        json!(cfg.paths),
        Value::Null,
        json!(format!("leakage {:.3e}", r.leakage)),
    ]);
    table.push(vec![
        json!("channel_trace"),
        num(kt),
        json!(dim),
        num(r.trace_mean),
        num(1.0),
        num((r.trace_mean - 1.0).abs()),
        num(r.trace_std_err),
        json!(cfg.paths),
        Value::Null,
        json!(format!("z={:.2}", r.trace_z)),
    ]);
    Ok(Outcome {
        extra: json!({"radial": args.radial, "angular": args.angular, "channel_dim": dim, "initial_state": "vacuum"}),
        table,
        passed: true,
    })
}

pub fn verify(args: &VerifyArgs, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let vc = VerifyConfig {
        kappa: cfg.kappa,
        t_final: cfg.t_final,
        dt: cfg.dt(),
        dim: cfg.dim,
        paths: cfg.paths,
        mc_paths: args.mc_paths,
        seed: cfg.seed,
    };
    if let Some(bad) = args.only.iter().find(|&&id| id == 0 || id as usize > CHECKS.len()) {
        return Err(CliError::Usage(format!("--only: no criterion {bad}")));
    }
    let mut table = Table::new(&["id", "name", "passed", "seconds", "detail"]);
    let mut passed = true;
    for (id, _, _) in CHECKS {
        if !args.only.is_empty() && !args.only.contains(&id) {
            continue;
        }
        let out = run_check(id, &vc);
        eprintln!("{out}");
        passed &= out.passed;
        table.push(vec![json!(out.id), json!(out.name), json!(out.passed), num(out.seconds), json!(out.detail)]);
    }
    Ok(Outcome { extra: json!({"mc_paths": args.mc_paths, "all_passed": passed}), table, passed })
}
