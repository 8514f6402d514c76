//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use clap::ValueEnum;
use serde_json::json;
use thiserror::Error;

use macfb::bounds::{
    c_of_theta, compute_bounds, d_l, fmt_num, region_polygon, BoundReport, BoundsError, CapacitySurface, RatePair,
};
use macfb::channel_file::{parse_channel, ChannelDescription, ChannelFamily, ChannelFileError};
use macfb::info::Quad;
use macfb::sim::stats::Z95;
use macfb::sim::{
    analytic_predictor, composite_exponent, estimate, DataStageMode, Scheme, SchemeConfig, SimError, TestRule,
};
use macfb::QuadDistribution;

use crate::manifest::RunManifest;
use crate::{
    BoundsArgs, Cli, Command, ModeArg, RegionArgs, RuleArg, SchemeArgs, SimulateArgs, SweepArgs, SweepKind,
};

/// Frozen column order of simulation CSVs.
pub const SIM_HEADER: &str = "n,gamma,r1,r2,p_e_hat,p_e_ci_lo,p_e_ci_hi,mean_T,q_hat,exponent,e_lower,e_upper,seed";
/// Frozen column order of bound sweeps.
pub const BOUNDS_HEADER: &str = "p,r1,r2,d_l,d_u,gamma_star,e_lower,e_upper,e_upper_per_j,surface,in_region";
/// Frozen column order of region exports.
pub const REGION_HEADER: &str = "kind,index,r1,r2,theta,radius";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("rate pair ({r1}, {r2}) is not strictly inside the capacity region (gamma* = {gamma_star})")]
    OutOfRegion { r1: f64, r2: f64, gamma_star: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 1,
            CliError::OutOfRegion { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ChannelFileError> for CliError {
    fn from(e: ChannelFileError) -> Self {
        CliError::Input(format!("channel file: {e}"))
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::OutOfRegion { r1, r2, gamma_star } => CliError::OutOfRegion { r1, r2, gamma_star },
            BoundsError::Lp(_) | BoundsError::TooLarge { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::DegenerateTilt | SimError::TooLarge { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Command::Bounds(a) => cmd_bounds(a, cli.seed),
        Command::Region(a) => cmd_region(a, cli.seed),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.threads),
        Command::Sweep(a) => cmd_sweep(a, cli.seed, cli.threads),
    }
}

fn load_channel(path: &Path) -> Result<(ChannelDescription, serde_json::Value), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let desc = parse_channel(&text)?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((desc, raw))
}

/// Writes to `out` with a manifest, or to stdout.
fn emit(out: Option<&Path>, body: &str, manifest: RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut m = manifest;
            m.write_output(path, body)?;
            m.save()?;
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("--{name} must be a finite nonnegative number, got {v}")))
    }
}

fn cmd_bounds(a: &BoundsArgs, seed: u64) -> Result<(), CliError> {
    check_nonneg("r1", a.r1)?;
    check_nonneg("r2", a.r2)?;
    let (desc, raw) = load_channel(&a.channel)?;
    let surface = desc.surface()?;
    let rate = RatePair::new(a.r1, a.r2)?;
    let report = compute_bounds(&desc.channel, &surface, rate)?;
    if !report.in_region {
        return Err(CliError::OutOfRegion {
            r1: a.r1,
            r2: a.r2,
            gamma_star: report.gamma_star,
        });
    }
    let config = json!({
        "channel_file": a.channel.display().to_string(),
        "channel": raw,
        "r1": a.r1,
        "r2": a.r2,
    });
    emit(a.out.as_deref(), &report.to_record_string(), RunManifest::new("bounds", config, seed))
}

fn cmd_region(a: &RegionArgs, seed: u64) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Input("--samples must be positive".into()));
    }
    let (desc, raw) = load_channel(&a.channel)?;
    let surface = desc.surface()?;
    let region = region_polygon(&surface, a.samples)?;
    let mut body = String::new();
    writeln!(body, "{REGION_HEADER}").unwrap();
    for (i, &(x, y)) in region.vertices().iter().enumerate() {
        let theta = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
        writeln!(body, "vertex,{i},{},{},{},{}", fmt_num(x), fmt_num(y), fmt_num(theta), fmt_num(x.hypot(y))).unwrap();
    }
    for i in 0..a.thetas {
        let theta = if a.thetas == 1 {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2 * i as f64 / (a.thetas - 1) as f64
        };
        let c = c_of_theta(&region, theta)?;
        let (x, y) = (c * theta.cos(), c * theta.sin());
        writeln!(body, "theta,{i},{},{},{},{}", fmt_num(x), fmt_num(y), fmt_num(theta), fmt_num(c)).unwrap();
    }
    let config = json!({
        "channel_file": a.channel.display().to_string(),
        "channel": raw,
        "samples": a.samples,
        "thetas": a.thetas,
    });
    emit(a.out.as_deref(), &body, RunManifest::new("region", config, seed))
}

fn rule_of(s: &SchemeArgs) -> Result<TestRule, CliError> {
    if matches!(s.rule, RuleArg::Threshold | RuleArg::Margin) && !(s.delta_t.is_finite() && s.delta_t >= 0.0) {
        return Err(CliError::Input(format!("--delta-t must be nonnegative, got {}", s.delta_t)));
    }
    Ok(match s.rule {
        RuleArg::Ml => TestRule::Ml,
        RuleArg::Threshold => TestRule::Threshold { delta_t: s.delta_t },
        RuleArg::Margin => TestRule::Margin { delta_t: s.delta_t },
    })
}

/// `round(2^(n r))`, at least 1.
fn messages_for(n: usize, r: f64, name: &str) -> Result<u64, CliError> {
    check_nonneg(name, r)?;
    let bits = n as f64 * r;
    if bits >= 63.0 {
        return Err(CliError::Input(format!("--{name} {r} at n = {n} needs more than 2^63 messages")));
    }
    Ok((bits.exp2().round() as u64).max(1))
}

fn parse_quad(s: &str, desc: &ChannelDescription) -> Result<QuadDistribution, CliError> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("--quad: {e}")))?;
    let ch = &desc.channel;
    match parts[..] {
        [x1, x2, z1, z2] if x1 < ch.nx1() && z1 < ch.nx1() && x2 < ch.nx2() && z2 < ch.nx2() => {
            Ok(QuadDistribution::point_mass(ch, Quad::new(x1, x2, z1, z2)))
        }
        _ => Err(CliError::Input(format!(
            "--quad expects x1,x2,z1,z2 within alphabets {}x{}, got `{s}`",
            ch.nx1(),
            ch.nx2()
        ))),
    }
}

/// One fully resolved simulation point.
struct SimPoint {
    n: usize,
    gamma: f64,
    m1: u64,
    m2: u64,
}

fn resolve_point(s: &SchemeArgs, n: usize, gamma: f64, r1: f64, r2: f64) -> Result<SimPoint, CliError> {
    let m1 = match s.m1 {
        Some(m) => m,
        None => messages_for(n, r1, "r1")?,
    };
    let m2 = match s.m2 {
        Some(m) => m,
        None => messages_for(n, r2, "r2")?,
    };
    Ok(SimPoint {
        n,
        gamma,
        m1,
        m2,
    })
}

/// Runs one point and returns its CSV row and key-value records.
fn simulate_point(
    s: &SchemeArgs,
    desc: &ChannelDescription,
    surface: &CapacitySurface,
    quad_dist: &QuadDistribution,
    pt: &SimPoint,
    seed: u64,
    threads: Option<usize>,
) -> Result<(String, String), CliError> {
    if s.trials == 0 {
        return Err(CliError::Input("--trials must be positive".into()));
    }
    if !(0.0..=1.0).contains(&s.tilt) {
        return Err(CliError::Input(format!("--tilt must lie in [0, 1], got {}", s.tilt)));
    }
    let data_stage = match s.mode {
        ModeArg::Genie => DataStageMode::Genie { zeta: s.zeta },
        ModeArg::RandomCode => DataStageMode::RandomCodeTimeSharing,
    };
    let scheme = Scheme::new(SchemeConfig {
        channel: desc.channel.clone(),
        m1: pt.m1,
        m2: pt.m2,
        n: pt.n,
        gamma: pt.gamma,
        data_stage,
        rule: rule_of(s)?,
        quad_dist: quad_dist.clone(),
        seed,
        max_blocks: s.max_blocks,
    })?;
    let (r1, r2) = scheme.config().nominal_rates();
    let bounds: BoundReport = compute_bounds(&desc.channel, surface, RatePair::new(r1, r2)?)?;

    let mut records = Vec::new();
    let (stats, p_e, ci, exponent) = if s.is_samples > 0 {
        let c = composite_exponent(&scheme, s.trials, s.is_samples, s.tilt, threads)?;
        let se_eb = c
            .pattern_freq
            .iter()
            .zip(&c.miss)
            .map(|(f, m)| (f * m.std_err).powi(2))
            .sum::<f64>()
            .sqrt();
        let half = Z95 * se_eb / (1.0 - c.stats.q_hat);
        records.extend(c.record());
        (c.stats.clone(), c.p_e, ((c.p_e - half).max(0.0), c.p_e + half), c.exponent)
    } else {
        let st = estimate(&scheme, s.trials, threads)?;
        let (p, ci, e) = (st.p_e_hat, st.p_e_ci, st.exponent);
        (st, p, ci, e)
    };
    let zeta = match data_stage {
        DataStageMode::Genie { zeta } => zeta,
        DataStageMode::RandomCodeTimeSharing => 0.0,
    };
    let pred = analytic_predictor(&desc.channel, scheme.code(), zeta);
    let mut all = stats.record();
    all.extend(records);
    all.extend(pred.record());
    all.push(("identity_residual", fmt_num(stats.identity_residual())));
    let mut rec = String::new();
    for (k, v) in all {
        writeln!(rec, "{k}={v}").unwrap();
    }
    let row = [
        pt.n.to_string(),
        fmt_num(pt.gamma),
        fmt_num(r1),
        fmt_num(r2),
        fmt_num(p_e),
        fmt_num(ci.0),
        fmt_num(ci.1),
        fmt_num(stats.mean_t),
        fmt_num(stats.q_hat),
        fmt_num(exponent),
        fmt_num(bounds.e_lower),
        fmt_num(bounds.e_upper),
        seed.to_string(),
    ]
    .join(",");
    Ok((row, rec))
}

fn default_quad(s: &SchemeArgs, desc: &ChannelDescription) -> Result<QuadDistribution, CliError> {
    match &s.quad {
        Some(q) => parse_quad(q, desc),
        None => Ok(d_l(&desc.channel)?.1),
    }
}

fn scheme_config_json(s: &SchemeArgs, raw: &serde_json::Value) -> serde_json::Value {
    json!({
        "channel_file": s.channel.display().to_string(),
        "channel": raw,
        "r1": s.r1,
        "r2": s.r2,
        "m1": s.m1,
        "m2": s.m2,
        "n": s.n,
        "gamma": s.gamma,
        "trials": s.trials,
        "rule": value_name(s.rule),
        "delta_t": s.delta_t,
        "mode": value_name(s.mode),
        "zeta": s.zeta,
        "max_blocks": s.max_blocks,
        "quad": s.quad,
        "is_samples": s.is_samples,
        "tilt": s.tilt,
    })
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, threads: Option<usize>) -> Result<(), CliError> {
    let s = &a.scheme;
    let (desc, raw) = load_channel(&s.channel)?;
    let surface = desc.surface()?;
    let quad = default_quad(s, &desc)?;
    let pt = resolve_point(s, s.n, s.gamma, s.r1, s.r2)?;
    let (row, rec) = simulate_point(s, &desc, &surface, &quad, &pt, seed, threads)?;
    let body = format!("{SIM_HEADER}\n{row}\n");
    let mut manifest = RunManifest::new("simulate", scheme_config_json(s, &raw), seed);
    match &a.record {
        Some(p) => manifest.write_output(p, &rec)?,
        None => eprint!("{rec}"),
    }
    match &a.out {
        Some(p) => {
            // The CSV is the primary output; it names the manifest.
            manifest.outputs.insert(
                0,
                crate::manifest::OutputChecksum {
                    path: p.display().to_string(),
                    sha256: crate::manifest::sha256_hex(body.as_bytes()),
                },
            );
            fs::write(p, &body)?;
            manifest.save()?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            manifest.save()?;
        }
    }
    Ok(())
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

const AXES: [&str; 5] = ["n", "gamma", "r1", "r2", "p"];

/// Parses `name=v1,v2,...` specs into canonical axis order with sorted,
/// deduplicated values.
pub fn parse_axes(specs: &[String]) -> Result<Vec<(&'static str, Vec<f64>)>, CliError> {
    let mut found: Vec<Option<Vec<f64>>> = vec![None; AXES.len()];
    for item in specs {
        let (name, values) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--axis `{item}`: expected name=v1,v2,...")))?;
        let k = AXES
            .iter()
            .position(|&a| a == name.trim())
            .ok_or_else(|| CliError::Input(format!("--axis `{name}`: expected one of n, gamma, r1, r2, p")))?;
        if found[k].is_some() {
            return Err(CliError::Input(format!("--axis `{name}` given twice")));
        }
        let mut vals = values
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Input(format!("--axis `{name}`: `{t}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        found[k] = Some(vals);
    }
    Ok(AXES
        .iter()
        .zip(found)
        .filter_map(|(&a, v)| v.map(|v| (a, v)))
        .collect())
}

/// Cartesian product, first axis slowest.
pub fn grid(axes: &[(&'static str, Vec<f64>)]) -> Vec<Vec<(&'static str, f64)>> {
    let mut out: Vec<Vec<(&'static str, f64)>> = vec![Vec::new()];
    for (name, vals) in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((*name, v));
                    p
                })
            })
            .collect();
    }
    out
}

fn cmd_sweep(a: &SweepArgs, seed: u64, threads: Option<usize>) -> Result<(), CliError> {
    let s = &a.scheme;
    let axes = parse_axes(&a.axis)?;
    let (desc, raw) = load_channel(&s.channel)?;
    let has = |n: &str| axes.iter().any(|(a, _)| *a == n);
    if has("p") && !matches!(desc.family, ChannelFamily::Additive { .. }) {
        return Err(CliError::Input("--axis p needs an additive channel".into()));
    }
    let mut body = String::new();
    match a.kind {
        SweepKind::Bounds => {
            if has("n") || has("gamma") {
                return Err(CliError::Input("bound sweeps take only r1, r2 and p axes".into()));
            }
            writeln!(body, "{BOUNDS_HEADER}").unwrap();
            let base_surface = desc.surface()?;
            for point in grid(&axes) {
                let get = |n: &str, d: f64| point.iter().find(|(a, _)| *a == n).map_or(d, |x| x.1);
                let (r1, r2) = (get("r1", s.r1), get("r2", s.r2));
                check_nonneg("r1", r1)?;
                check_nonneg("r2", r2)?;
                let (d, surf, p) = if has("p") {
                    let p = get("p", 0.0);
                    let d = desc.with_noise(p)?;
                    let surf = d.surface()?;
                    (d, surf, fmt_num(p))
                } else {
                    let p = match desc.family {
                        ChannelFamily::Additive { p, .. } => fmt_num(p),
                        _ => String::new(),
                    };
                    (desc.clone(), base_surface.clone(), p)
                };
                let r = compute_bounds(&d.channel, &surf, RatePair::new(r1, r2)?)?;
                writeln!(
                    body,
                    "{p},{},{},{},{},{},{},{},{},{},{}",
                    fmt_num(r1),
                    fmt_num(r2),
                    fmt_num(r.d_l),
                    fmt_num(r.d_u),
                    fmt_num(r.gamma_star),
                    fmt_num(r.e_lower),
                    fmt_num(r.e_upper),
                    fmt_num(r.e_upper_per_j),
                    r.provenance,
                    r.in_region
                )
                .unwrap();
            }
        }
        SweepKind::Simulate => {
            if has("p") {
                return Err(CliError::Input(
                    "simulation sweeps do not take a p axis (the CSV has no noise column)".into(),
                ));
            }
            writeln!(body, "{SIM_HEADER}").unwrap();
            let pts = grid(&axes);
            if !pts.is_empty() {
                let surface = desc.surface()?;
                let quad = default_quad(s, &desc)?;
                for point in pts {
                    let get = |n: &str, d: f64| point.iter().find(|(a, _)| *a == n).map_or(d, |x| x.1);
                    let n = get("n", s.n as f64);
                    if n < 1.0 || n.fract() != 0.0 {
                        return Err(CliError::Input(format!("--axis n: `{n}` is not a positive integer")));
                    }
                    let pt = resolve_point(s, n as usize, get("gamma", s.gamma), get("r1", s.r1), get("r2", s.r2))?;
                    let (row, _) = simulate_point(s, &desc, &surface, &quad, &pt, seed, threads)?;
                    writeln!(body, "{row}").unwrap();
                }
            }
        }
    }
    let mut config = scheme_config_json(s, &raw);
    config["kind"] = json!(value_name(a.kind));
    config["axes"] = json!(axes.iter().map(|(n, v)| json!({"name": n, "values": v})).collect::<Vec<_>>());
    emit(a.out.as_deref(), &body, RunManifest::new("sweep", config, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_are_canonical_and_sorted() {
        let ax = parse_axes(&["r1=0.3,0.1,0.1".into(), "n=20".into()]).unwrap();
        assert_eq!(ax, vec![("n", vec![20.0]), ("r1", vec![0.1, 0.3])]);
        assert!(parse_axes(&["q=1".into()]).is_err());
        assert!(parse_axes(&["n=1".into(), "n=2".into()]).is_err());
        assert!(parse_axes(&["r1=x".into()]).is_err());
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = grid(&[("n", vec![1.0, 2.0]), ("r1", vec![0.1, 0.2])]);
        let flat: Vec<(f64, f64)> = g.iter().map(|p| (p[0].1, p[1].1)).collect();
        assert_eq!(flat, vec![(1.0, 0.1), (1.0, 0.2), (2.0, 0.1), (2.0, 0.2)]);
        assert!(grid(&[("r1", vec![])]).is_empty());
        assert_eq!(grid(&[]).len(), 1);
    }

    #[test]
    fn message_counts() {
        assert_eq!(messages_for(60, 0.2, "r1").unwrap(), 4096);
        assert_eq!(messages_for(10, 0.0, "r1").unwrap(), 1);
        assert!(messages_for(400, 0.2, "r1").is_err());
    }
}
