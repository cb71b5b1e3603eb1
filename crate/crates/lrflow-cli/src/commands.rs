//! One function per subcommand. Each reads its keys, calls the library and writes CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lrflow::cluster::{convergence_check, log_partition, ClusterActivity};
use lrflow::flow::{
    fixed_point, nu_eigenvalue_and_gamma, predict_two_point, run as run_flow, tune_critical_nu, FlowParams,
};
use lrflow::jet::JET_NAMES;
use lrflow::kernels::{resolvent, torus_frac_laplacian};
use lrflow::lattice::lexicographic_sites;
use lrflow::wsaw::{two_point_profile, McConfig, WalkSampler, RNG_DESCRIPTION};
use lrflow::{
    decompose_with, BlockLattice, DecompositionConfig, Jet, KernelField, LatticeScales, LatticeSpec, Polymer, ScaleData,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::{num, Table, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Kernel,
    Decompose,
    Flow,
    Tune,
    Predict,
    Gamma,
    Cluster,
    Mc,
    Fit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Decompose => "decompose",
            Command::Flow => "flow",
            Command::Tune => "tune",
            Command::Predict => "predict",
            Command::Gamma => "gamma",
            Command::Cluster => "cluster",
            Command::Mc => "mc",
            Command::Fit => "fit",
        }
    }
}

const LATTICE: [&str; 4] = ["d", "L", "N", "alpha"];
const FLOW_OPTIONS: [&str; 4] = ["backend", "order", "j_transient", "theta"];

fn keys<'a>(groups: &[&[&'a str]]) -> Vec<&'a str> {
    let mut out = vec!["output"];
    out.extend(groups.iter().flat_map(|g| g.iter().copied()));
    out
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match cmd {
        Command::Kernel => kernel(cfg),
        Command::Decompose => decompose(cfg),
        Command::Flow => flow(cfg),
        Command::Tune => tune(cfg),
        Command::Predict => predict(cfg),
        Command::Gamma => gamma(cfg),
        Command::Cluster => cluster(cfg),
        Command::Mc => mc(cfg),
        Command::Fit => fit(cfg),
    }
}

fn meta(cmd: Command, cfg: &RunConfig, seed: Option<u64>) -> Vec<String> {
    let mut m = vec![format!("lrflow {VERSION}"), format!("subcommand {}", cmd.name())];
    m.push(match seed {
        Some(s) => format!("seed {s}"),
        None => "seed none".into(),
    });
    m.extend(cfg.raw_lines().map(|l| format!("config {l}")));
    m
}

fn output(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    Ok(PathBuf::from(cfg.str("output")?))
}

fn spec(cfg: &RunConfig) -> Result<LatticeSpec, CliError> {
    Ok(LatticeSpec::new(cfg.get("d")?, cfg.get("L")?, cfg.get("N")?, cfg.real("alpha")?)?)
}

fn kernel_table(k: &KernelField, m2: f64, meta: Vec<String>) -> Result<Table, CliError> {
    let s = &k.spec;
    let mut header: Vec<String> = (1..=s.d).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let mut t = Table { meta, header, rows: Vec::new() };
    t.meta.push("d,L,N,alpha,m2".into());
    t.meta.push(format!("{},{},{},{},{}", s.d, s.l, s.n, num(s.alpha), num(m2)));
    for (idx, x) in lexicographic_sites(s)?.enumerate() {
        let mut row: Vec<String> = x.iter().map(|c| s.centered(*c).to_string()).collect();
        row.push(num(k.values[idx]));
        t.rows.push(row);
    }
    Ok(t)
}

fn kernel(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_keys(&keys(&[&LATTICE, &["m2", "kind"]]), &keys(&[&LATTICE]))?;
    let spec = spec(cfg)?;
    let kind = cfg.choice("kind", &["laplacian", "resolvent"], "laplacian")?;
    let (k, m2) = match kind {
        "laplacian" => (torus_frac_laplacian(&spec)?, cfg.real_or("m2", 0.0)?),
        _ => {
            let m2 = cfg.real("m2")?;
            (resolvent(&spec, m2)?, m2)
        }
    };
    kernel_table(&k, m2, meta(Command::Kernel, cfg, None))?.write(&output(cfg)?)
}

fn decompose(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_keys(&keys(&[&LATTICE, &["m2", "theta"]]), &keys(&[&LATTICE, &["m2"]]))?;
    let spec = spec(cfg)?;
    let m2 = cfg.real("m2")?;
    let dc = DecompositionConfig { theta: cfg.real_or("theta", DecompositionConfig::default().theta)? };
    let dec = decompose_with(&spec, m2, &dc)?;
    let dir = output(cfg)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?;
    let mut manifest = Table::new(&["j", "t_lo", "t_hi", "range", "max_amp", "trunc_mass"]);
    manifest.meta = meta(Command::Decompose, cfg, None);
    for (slice, diag) in dec.slices.iter().zip(&dec.diagnostics) {
        let mut m = meta(Command::Decompose, cfg, None);
        m.push(format!("slice {}", diag.j));
        kernel_table(slice, m2, m)?.write(&dir.join(format!("slice_{:02}.csv", diag.j)))?;
        manifest.push(vec![
            diag.j.to_string(),
            num(diag.s_lo),
            num(diag.s_hi),
            num(diag.range),
            num(diag.max_amp),
            num(diag.trunc_mass),
        ]);
    }
    manifest.write(&dir.join("manifest.csv"))
}

fn scale_data(cfg: &RunConfig) -> Result<Box<dyn ScaleData>, CliError> {
    let m2 = cfg.real("m2")?;
    let theta = cfg.real_or("theta", DecompositionConfig::default().theta)?;
    match cfg.choice("backend", &["zd", "torus"], "zd")? {
        "zd" => {
            let (d, l, n): (usize, u64, usize) = (cfg.get("d")?, cfg.get("L")?, cfg.get("N")?);
            let alpha = cfg.real("alpha")?;
            Ok(Box::new(LatticeScales::with_settings(d, alpha, l, n, m2, theta, Default::default())?))
        }
        _ => Ok(Box::new(decompose_with(&spec(cfg)?, m2, &DecompositionConfig { theta })?)),
    }
}

fn flow_params(cfg: &RunConfig, a: Vec<i64>, b: Vec<i64>) -> Result<FlowParams, CliError> {
    let mut p = FlowParams::new(cfg.get("n")?, cfg.real("g0")?, 0.0, a, b);
    p.second_order_nu = cfg.choice("order", &["second", "first"], "second")? == "second";
    p.j_transient = cfg.get_or("j_transient", p.j_transient)?;
    Ok(p)
}

/// ν₀ from the config, or tuned to criticality when absent.
fn initial_nu(cfg: &RunConfig, params: &FlowParams, scales: &dyn ScaleData) -> Result<(f64, bool), CliError> {
    if cfg.has("nu0") {
        Ok((cfg.real("nu0")?, false))
    } else {
        Ok((tune_critical_nu(params, scales)?.nu0_c, true))
    }
}

fn flow(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["m2", "n", "g0", "a", "b"];
    cfg.check_keys(&keys(&[&LATTICE, &base, &FLOW_OPTIONS, &["nu0"]]), &keys(&[&LATTICE, &base]))?;
    let d: usize = cfg.get("d")?;
    let scales = scale_data(cfg)?;
    let mut params = flow_params(cfg, cfg.point("a", d)?, cfg.point("b", d)?)?;
    let (nu0, tuned) = initial_nu(cfg, &params, scales.as_ref())?;
    params.nu0 = nu0;
    let traj = run_flow(&params, scales.as_ref())?;
    let mut t = Table::new(&["j", "g", "nu", "u", "lambda_a", "lambda_b", "q_a", "q_b", "g_hat", "C_diag", "C_ab", "w1"]);
    t.meta = meta(Command::Flow, cfg, None);
    t.meta.push(format!("nu0 {} ({})", num(nu0), if tuned { "tuned" } else { "given" }));
    t.meta.push(format!("j_ab {} j_m {}", traj.j_ab, traj.j_m));
    for r in &traj.records {
        let c = &r.couplings;
        t.push(vec![
            r.j.to_string(),
            num(c.g),
            num(c.nu),
            num(c.u),
            num(c.lambda_a),
            num(c.lambda_b),
            num(c.q_a),
            num(c.q_b),
            num(r.g_hat),
            num(r.c_diag),
            num(r.c_ab),
            num(r.w1),
        ]);
    }
    t.write(&output(cfg)?)
}

fn tune(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["m2", "n", "g0"];
    cfg.check_keys(&keys(&[&LATTICE, &base, &FLOW_OPTIONS]), &keys(&[&LATTICE, &base]))?;
    let d: usize = cfg.get("d")?;
    let scales = scale_data(cfg)?;
    let mut unit = vec![0; d];
    unit[0] = 1;
    let params = flow_params(cfg, vec![0; d], unit)?;
    let fp = fixed_point(scales.as_ref(), params.n, params.j_transient)?;
    let tuning = tune_critical_nu(&params, scales.as_ref())?;
    let mut t = Table::new(&["n", "g0", "nu0_c", "threshold", "iterations", "a", "s_bar"]);
    t.meta = meta(Command::Tune, cfg, None);
    t.push(vec![
        params.n.to_string(),
        num(params.g0),
        num(tuning.nu0_c),
        num(tuning.threshold),
        tuning.iterations.to_string(),
        num(fp.a),
        num(fp.s_bar),
    ]);
    t.write(&output(cfg)?)
}

/// r_min, 2 r_min, 4 r_min, … up to r_max.
fn radii(cfg: &RunConfig) -> Result<Vec<i64>, CliError> {
    let (lo, hi): (i64, i64) = (cfg.get("r_min")?, cfg.get("r_max")?);
    if lo < 1 || hi < lo {
        return Err(CliError::config(format!("need 1 ≤ r_min ≤ r_max, got {lo}, {hi}")));
    }
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi {
        out.push(r);
        r = r.checked_mul(2).ok_or_else(|| CliError::config("r_max too large"))?;
    }
    Ok(out)
}

fn axis_point(d: usize, r: i64) -> Vec<i64> {
    let mut p = vec![0; d];
    p[0] = r;
    p
}

fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["m2", "n", "g0", "r_min", "r_max"];
    cfg.check_keys(&keys(&[&LATTICE, &base, &FLOW_OPTIONS, &["nu0"]]), &keys(&[&LATTICE, &base]))?;
    let d: usize = cfg.get("d")?;
    let scales = scale_data(cfg)?;
    let mut params = flow_params(cfg, vec![0; d], axis_point(d, 1))?;
    let (nu0, tuned) = initial_nu(cfg, &params, scales.as_ref())?;
    params.nu0 = nu0;
    let mut t = Table::new(&["r", "G_pred", "C_free", "ratio"]);
    t.meta = meta(Command::Predict, cfg, None);
    t.meta.push(format!("nu0 {} ({})", num(nu0), if tuned { "tuned" } else { "given" }));
    for r in radii(cfg)? {
        params.b = axis_point(d, r);
        let g = predict_two_point(&params, scales.as_ref())?;
        let c = scales.resolvent_at(&params.b)?;
        t.push(vec![r.to_string(), num(g), num(c), num(g / c)]);
    }
    t.write(&output(cfg)?)
}

fn gamma(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["m2", "n"];
    cfg.check_keys(&keys(&[&LATTICE, &base, &FLOW_OPTIONS, &["g0"]]), &keys(&[&LATTICE, &base]))?;
    let d: usize = cfg.get("d")?;
    let scales = scale_data(cfg)?;
    let n: u32 = cfg.get("n")?;
    let j_transient = cfg.get_or("j_transient", 10)?;
    let fp = fixed_point(scales.as_ref(), n, j_transient)?;
    let g0 = cfg.real_or("g0", fp.s_bar)?;
    let mut params = FlowParams::new(n, g0, 0.0, vec![0; d], axis_point(d, 1));
    params.second_order_nu = cfg.choice("order", &["second", "first"], "second")? == "second";
    params.j_transient = j_transient;
    let nu0_c = tune_critical_nu(&params, scales.as_ref())?.nu0_c;
    let est = nu_eigenvalue_and_gamma(&params, scales.as_ref(), nu0_c)?;
    let eps = scales.epsilon();
    let target = 1.0 + (n as f64 + 2.0) / (n as f64 + 8.0) * eps / scales.alpha();
    let mut t = Table::new(&[
        "n",
        "g0",
        "nu0_c",
        "lambda_hat",
        "lambda_nu",
        "gamma_eff",
        "gamma_first_order",
        "window_lo",
        "window_hi",
        "log_ratio_std",
    ]);
    t.meta = meta(Command::Gamma, cfg, None);
    t.push(vec![
        n.to_string(),
        num(g0),
        num(nu0_c),
        num(est.lambda_hat),
        num(est.lambda_nu),
        num(est.gamma_eff),
        num(target),
        est.window.0.to_string(),
        est.window.1.to_string(),
        num(est.log_ratio_std),
    ]);
    t.write(&output(cfg)?)
}

fn read_activity(path: &Path, lat: &BlockLattice) -> Result<ClusterActivity<Jet>, CliError> {
    let table = Table::read(path)?;
    let col = |name: &str| {
        table.column(name).ok_or_else(|| CliError::config(format!("{}: no column `{name}`", path.display())))
    };
    let (pc, nc, vc) = (col("polymer_anchor_list")?, col("coefficient_name")?, col("value")?);
    let mut acc: BTreeMap<Polymer, Jet> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let bad = |msg: String| CliError::config(format!("{} row {}: {msg}", path.display(), i + 1));
        let x = lat.parse_polymer(&row[pc]).map_err(|e| bad(e.to_string()))?;
        let slot = JET_NAMES.iter().position(|n| *n == row[nc]).ok_or_else(|| {
            bad(format!("coefficient `{}` is not one of {}", row[nc], JET_NAMES.join(", ")))
        })?;
        let v: f64 = row[vc].parse().map_err(|_| bad(format!("`{}` is not a number", row[vc])))?;
        acc.entry(x).or_insert_with(|| Jet::constant(0.0)).c[slot] += v;
    }
    let mut act = ClusterActivity::new(lat.clone());
    for (x, v) in acc {
        act.insert(x, v)?;
    }
    Ok(act)
}

fn cluster(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["d", "L", "N", "j", "activity"];
    cfg.check_keys(&keys(&[&base, &["n_max", "threshold"]]), &keys(&[&base]))?;
    let spec = LatticeSpec::new(cfg.get("d")?, cfg.get("L")?, cfg.get("N")?, 1.0)?;
    let lat = BlockLattice::new(&spec, cfg.get("j")?)?;
    let act = read_activity(Path::new(cfg.str("activity")?), &lat)?;
    let series = log_partition(&act, cfg.get_or("n_max", 6)?)?;
    let report = convergence_check(&act, cfg.real_or("threshold", 1.0)?);
    let mut t = Table::new(&["quantity", "label", "value", "within"]);
    t.meta = meta(Command::Cluster, cfg, None);
    for (name, v) in JET_NAMES.iter().zip(series.value.c) {
        t.push(vec!["log_z".into(), name.to_string(), num(v), String::new()]);
    }
    t.push(vec!["tail_estimate".into(), series.n_max.to_string(), num(series.tail_estimate), String::new()]);
    for (b, (sum, ok)) in report.per_block.iter().zip(&report.within).enumerate() {
        let label = lat.format_polymer(&Polymer::new(lat.j, vec![b]));
        t.push(vec!["block_sum".into(), label, num(*sum), ok.to_string()]);
    }
    t.write(&output(cfg)?)
}

fn mc(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ["g", "nu", "samples", "seed", "r_min", "r_max"];
    cfg.check_keys(&keys(&[&LATTICE, &base, &["horizon_rate"]]), &keys(&[&LATTICE, &base]))?;
    let spec = spec(cfg)?;
    let seed: u64 = cfg.get("seed")?;
    let mut config = McConfig::new(spec.clone(), cfg.real("g")?, cfg.real("nu")?, cfg.get("samples")?, seed);
    if cfg.has("horizon_rate") {
        config.horizon_rate = Some(cfg.real("horizon_rate")?);
    }
    let rs = radii(cfg)?;
    if rs.iter().any(|r| *r as u64 >= spec.m / 2) {
        return Err(CliError::config(format!("r_max must stay below M/2 = {}", spec.m / 2)));
    }
    let ends: Vec<Vec<i64>> = rs.iter().map(|r| axis_point(spec.d, *r)).collect();
    let sampler = WalkSampler::new(&spec)?;
    let prof = two_point_profile(&config, &sampler, &vec![0; spec.d], &ends)?;
    let mut t = Table::new(&["r", "G_hat", "stderr", "n_samples", "wrap_fraction"]);
    t.meta = meta(Command::Mc, cfg, Some(seed));
    t.meta.push(format!("rng {RNG_DESCRIPTION}"));
    t.meta.push(format!(
        "susceptibility {} stderr {}",
        num(prof.susceptibility.mean),
        num(prof.susceptibility.stderr)
    ));
    for (r, e) in rs.iter().zip(&prof.estimates) {
        t.push(vec![r.to_string(), num(e.mean), num(e.stderr), e.samples.to_string(), num(prof.wrap_fraction)]);
    }
    t.write(&output(cfg)?)
}

fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_keys(&keys(&[&["input", "x_column", "y_column", "r_min", "r_max"]]), &keys(&[&["input"]]))?;
    let input = Table::read(Path::new(cfg.str("input")?))?;
    let xs = input.reals(cfg.str("x_column").unwrap_or("r"))?;
    let ys = input.reals(cfg.str("y_column").unwrap_or("G_pred"))?;
    let lo = cfg.real_or("r_min", f64::NEG_INFINITY)?;
    let hi = cfg.real_or("r_max", f64::INFINITY)?;
    let (x, y): (Vec<f64>, Vec<f64>) = xs.into_iter().zip(ys).filter(|(x, _)| *x >= lo && *x <= hi).unzip();
    let f = lrflow::fit::power_law_fit(&x, &y)?;
    let mut t = Table::new(&["slope", "intercept", "r_squared", "r_min", "r_max", "points"]);
    t.meta = meta(Command::Fit, cfg, None);
    let (a, b) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    t.push(vec![num(f.slope), num(f.intercept), num(f.r_squared), num(a), num(b), x.len().to_string()]);
    t.write(&output(cfg)?)
}
