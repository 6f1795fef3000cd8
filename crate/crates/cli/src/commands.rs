use std::fmt::Write as _;
use std::path::Path;

use polarnet::chain::{find_k_user_split, path_rates, split_at_blocklength, ChannelOracle, MonotonePath};
use polarnet::channel::{DiscreteChannel, InputDistribution};
use polarnet::codec::{build_code, simulate, theorem1_check, CompoundCodeSpec, Role, TransmissionRecord};
use polarnet::polar::{stats_to_csv, synthesize_p2p};
use polarnet::region::{
    compound_mac_region, hk_auxiliary_region, hk_region, intersect, mac_region, strong_interference_check, superposition_regions,
    HkDistribution, InterferenceChannel, RatePolytope, Region2D, RegionExport,
};
use polarnet::util::wilson_interval;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{short_hash, RegionTask, Sweep};
use crate::{CliError, Context};

pub fn analyze(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let ch = cfg.channel_y()?;
    let n = log2(cfg.blocklength)?;
    let est = cfg.estimator();
    if ch.senders() == 1 {
        let stats = synthesize_p2p(&ch, n, &est)?;
        let sum: f64 = stats.iter().map(|s| s.mi).sum();
        ctx.write("analyze.csv", &ctx.tag_csv(&stats_to_csv(&stats)))?;
        let mode = stats.first().map(|s| s.mode.as_str()).unwrap_or("");
        return ctx.write_json("analyze.json", json!({"blocklength": cfg.blocklength, "sum_mi": sum, "mean_mi": sum / stats.len() as f64, "mode": mode}));
    }

    let k = ch.senders();
    let mut summary = serde_json::Map::new();
    let path = if let Some(s) = &cfg.path {
        let p = MonotonePath::parse(s, k)?;
        if p.blocklength() != cfg.blocklength {
            return Err(CliError::Config(format!("path has blocklength {}, config says {}", p.blocklength(), cfg.blocklength)));
        }
        p
    } else if let Some(t) = &cfg.target {
        let oracle = ChannelOracle { mac: &ch, estimator: &est };
        let split = if k == 2 { split_at_blocklength(&oracle, t, n)? } else { find_k_user_split(&oracle, t, cfg.epsilon, n)? };
        summary.insert("target".into(), json!(t));
        summary.insert("face_target".into(), json!(split.target.target));
        summary.insert("gap".into(), json!(split.gap));
        split.path
    } else {
        MonotonePath::sequential(k, cfg.blocklength, &(0..k).collect::<Vec<_>>())?
    };
    let prof = path_rates(&ch, &path, &est)?;
    let mut csv = String::from("step,user,index,mi,z,mode,samples\n");
    let mut next = vec![0usize; k];
    for (step, &j) in path.sequence().iter().enumerate() {
        let i = next[j];
        next[j] += 1;
        let _ = writeln!(
            csv,
            "{step},{},{i},{:.12e},{:.12e},{},{}",
            j + 1,
            prof.per_index_mi[j][i],
            prof.per_index_z[j][i],
            prof.mode.as_str(),
            prof.samples
        );
    }
    ctx.write("analyze.csv", &ctx.tag_csv(&csv))?;
    summary.insert("blocklength".into(), json!(cfg.blocklength));
    summary.insert("path".into(), json!(path.to_string()));
    summary.insert("rates".into(), json!(prof.rates));
    summary.insert("sum_rate".into(), json!(prof.sum_rate()));
    summary.insert("mode".into(), json!(prof.mode.as_str()));
    ctx.write_json("analyze.json", Value::Object(summary))
}

pub fn region(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let y = cfg.channel_y()?;
    let task = match (&cfg.region, &cfg.z) {
        (Some(t), _) => t.clone(),
        (None, Some(_)) => RegionTask::Compound { grid: 0 },
        (None, None) => RegionTask::Mac,
    };
    let mut polygons: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let body = match &task {
        RegionTask::Mac => {
            let p = cfg.input_distribution(&y)?;
            let all: Vec<usize> = (0..y.senders()).collect();
            let r = mac_region(&y, &p, &all)?;
            polygons.push(("mac".into(), ordered_vertices(&r)?));
            json!({"kind": "mac", "region": RegionExport::from(&r), "dominant_face": r.dominant_face().ok()})
        }
        RegionTask::Compound { grid } => {
            let z = cfg.channel_z()?;
            let p = cfg.input_distribution(&y)?;
            let ry = mac_region(&y, &p, &[0, 1])?;
            let rz = mac_region(&z, &p, &[0, 1])?;
            let both = intersect(&[ry.clone(), rz.clone()])?;
            let poly = Region2D::from_polytope(&both)?;
            let py = Region2D::from_polytope(&ry)?;
            let pz = Region2D::from_polytope(&rz)?;
            polygons.push(("y".into(), to_rows(&py)));
            polygons.push(("z".into(), to_rows(&pz)));
            polygons.push(("intersection".into(), to_rows(&poly)));
            let mut v = json!({
                "kind": "compound",
                "y": RegionExport::from(&ry),
                "z": RegionExport::from(&rz),
                "intersection": RegionExport::from(&both.without_redundancy()),
                "identical": py.same_as(&poly, 1e-9) && pz.same_as(&poly, 1e-9),
                "dominant_face": max_sum_face(&poly),
            });
            if *grid > 0 {
                let c = compound_mac_region(&y, &z, &product_grid(y.input_arities(), *grid)?)?;
                polygons.push(("convexified".into(), to_rows(&c.convexified)));
                v["grid_size"] = json!(c.grid_size);
                v["convexified"] = json!(c.convexified);
            }
            v
        }
        RegionTask::Hk { q_weights, marginals, maps } => {
            let ic = InterferenceChannel::new(y.clone(), cfg.channel_z()?)?;
            let p = HkDistribution::product(q_weights, marginals)?;
            let aux = hk_auxiliary_region(&ic, &p, maps)?;
            let r = hk_region(&ic, &p, maps)?;
            polygons.push(("hk".into(), to_rows(&r)));
            json!({"kind": "hk", "auxiliary": RegionExport::from(&aux), "region": r, "dominant_face": max_sum_face(&r)})
        }
        RegionTask::Superposition { p1, p2, map } => {
            let z = cfg.channel_z()?;
            let cases = superposition_regions([&y, &z], p1, p2, map)?;
            let union = Region2D::convex_union(&cases.iter().map(|c| c.region.clone()).collect::<Vec<_>>());
            let mut out = Vec::new();
            for c in &cases {
                polygons.push((format!("case{}", c.case), to_rows(&c.region)));
                let cons: Vec<Value> = c.constraints.iter().map(|s| json!({"text": s.to_string(), "value": s.value})).collect();
                out.push(json!({"case": c.case, "decode_sets": c.decode_sets, "constraints": cons, "region": c.region}));
            }
            polygons.push(("union".into(), to_rows(&union)));
            json!({"kind": "superposition", "cases": out, "union": union})
        }
        RegionTask::Strong { grid_resolution } => {
            let ic = InterferenceChannel::new(y.clone(), cfg.channel_z()?)?;
            json!({"kind": "strong", "report": strong_interference_check(&ic, *grid_resolution)?})
        }
    };
    ctx.write_json("region.json", body)?;
    if !polygons.is_empty() {
        let dim = polygons.iter().flat_map(|(_, v)| v.iter().map(Vec::len)).max().unwrap_or(2);
        let mut csv = String::from("region,vertex");
        for j in 1..=dim {
            let _ = write!(csv, ",r{j}");
        }
        csv.push('\n');
        for (name, verts) in &polygons {
            for (i, v) in verts.iter().enumerate() {
                let _ = write!(csv, "{name},{i}");
                for x in v {
                    let _ = write!(csv, ",{:.12e}", x + 0.0);
                }
                csv.push('\n');
            }
        }
        ctx.write("region.csv", &ctx.tag_csv(&csv))?;
    }
    Ok(())
}

/// Contents of `spec.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub config_hash: String,
    pub version: String,
    pub spec_hash: String,
    pub spec: CompoundCodeSpec,
}

pub fn spec_hash(spec: &CompoundCodeSpec) -> String {
    short_hash(&serde_json::to_vec(spec).expect("spec serializes"))
}

pub fn load_spec(path: &Path) -> Result<SpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: SpecFile = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid spec file {}: {e}", path.display())))?;
    let h = spec_hash(&file.spec);
    if h != file.spec_hash {
        return Err(CliError::Config(format!("spec file hash {} does not match its contents ({h})", file.spec_hash)));
    }
    Ok(file)
}

fn build_spec(ctx: &Context, levels: usize) -> Result<CompoundCodeSpec, CliError> {
    let cfg = &ctx.config;
    let mut cc = cfg.code_config();
    cc.levels = levels;
    Ok(build_code(&cfg.channel_y()?, &cfg.channel_z()?, cfg.target()?, &cc)?)
}

pub fn build(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let spec = build_spec(ctx, cfg.levels)?;
    let report = theorem1_check(&spec, cfg.epsilon);
    let sh = spec_hash(&spec);
    let file = SpecFile { config_hash: ctx.hash.clone(), version: ctx.version.to_string(), spec_hash: sh.clone(), spec };
    ctx.write("spec.json", &(serde_json::to_string(&file).map_err(runtime)? + "\n"))?;
    let spec = file.spec;

    let mut csv = String::from("user,target,rate_y,rate_z,jointly_good,gap_i,gap_ii,holds_i,holds_ii,epsilon\n");
    for (j, u) in report.users.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{}",
            j + 1,
            u.target,
            u.rate_y,
            u.rate_z,
            u.jointly_good,
            u.gap_i,
            u.gap_ii,
            u.holds_i,
            u.holds_ii,
            report.epsilon
        );
    }
    ctx.write("theorem1.csv", &ctx.tag_csv(&csv))?;

    let roles: Vec<Value> = (0..spec.users)
        .map(|j| {
            let counts: serde_json::Map<String, Value> =
                spec.role_counts(j).into_iter().map(|(r, c)| (role_name(r).to_string(), json!(c))).collect();
            Value::Object(counts)
        })
        .collect();
    let fractions: Vec<Vec<String>> =
        (0..spec.users).map(|j| spec.schedule.incompatible_fraction(j).iter().map(|r| r.to_string()).collect()).collect();
    ctx.write_json(
        "build.json",
        json!({
            "spec_hash": sh,
            "total_length": spec.total_length,
            "levels": spec.levels,
            "message_lengths": spec.message_lengths(),
            "rates": spec.rates,
            "union_bound": spec.union_bound(),
            "stat_mode": spec.stat_mode,
            "roles": roles,
            "incompatible_fraction": fractions,
            "schedule": spec.schedule.levels,
            "theorem1": report,
            "shortfall": !report.holds(),
        }),
    )?;
    if !report.holds() {
        eprintln!("note: achievability check not met at epsilon {}; see theorem1.csv", cfg.epsilon);
    }
    Ok(())
}

pub fn simulate_cmd(ctx: &Context, spec_path: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let y = cfg.channel_y()?;
    let z = cfg.channel_z()?;
    let loaded = spec_path.map(load_spec).transpose()?;
    let mut csv = String::from(
        "spec_hash,sweep,value,receiver,trials,block_errors,bler,bler_lo,bler_hi,bit_errors,info_bits,ber,ber_lo,ber_hi\n",
    );
    let fixed = |levels: usize| -> Result<(CompoundCodeSpec, String), CliError> {
        match &loaded {
            Some(f) => Ok((f.spec.clone(), f.spec_hash.clone())),
            None => {
                let s = build_spec(ctx, levels)?;
                let h = spec_hash(&s);
                Ok((s, h))
            }
        }
    };
    match &cfg.sweep {
        None => {
            let (spec, h) = fixed(cfg.levels)?;
            let rec = simulate(&spec, [&y, &z], cfg.trials, cfg.seed)?;
            push_rows(&mut csv, &h, "none", "", &rec);
        }
        Some(Sweep::Erasure { values }) => {
            let (spec, h) = fixed(cfg.levels)?;
            for &e in values {
                let ye = with_output_erasure(&y, e)?;
                let ze = with_output_erasure(&z, e)?;
                let rec = simulate(&spec, [&ye, &ze], cfg.trials, cfg.seed)?;
                push_rows(&mut csv, &h, "erasure", &e.to_string(), &rec);
            }
        }
        Some(Sweep::Levels { values }) => {
            if loaded.is_some() {
                return Err(CliError::Config("a levels sweep builds its own codes; drop --spec".into()));
            }
            for &k in values {
                let spec = build_spec(ctx, k)?;
                let h = spec_hash(&spec);
                let rec = simulate(&spec, [&y, &z], cfg.trials, cfg.seed)?;
                push_rows(&mut csv, &h, "levels", &k.to_string(), &rec);
            }
        }
    }
    ctx.write("simulate.csv", &ctx.tag_csv(&csv))
}

fn push_rows(csv: &mut String, spec_hash: &str, sweep: &str, value: &str, rec: &TransmissionRecord) {
    for (r, name) in ["y", "z"].iter().enumerate() {
        let bits = rec.trials * rec.info_bits[r];
        let (lo, hi) = wilson_interval(rec.bit_errors[r], bits);
        let _ = writeln!(
            csv,
            "{spec_hash},{sweep},{value},{name},{},{},{},{},{},{},{},{},{lo},{hi}",
            rec.trials,
            rec.block_errors[r],
            rec.bler[r],
            rec.bler_ci[r].0,
            rec.bler_ci[r].1,
            rec.bit_errors[r],
            rec.info_bits[r],
            rec.ber[r],
        );
    }
}

/// `ch` followed by an erasure of its output with probability `e`.
pub fn with_output_erasure(ch: &DiscreteChannel, e: f64) -> Result<DiscreteChannel, CliError> {
    if !(0.0..=1.0).contains(&e) {
        return Err(CliError::Config(format!("erasure probability {e} outside [0, 1]")));
    }
    if e == 0.0 {
        return Ok(ch.clone());
    }
    let rows = (0..ch.joint_inputs())
        .map(|r| {
            let mut row: Vec<f64> = ch.row(r).iter().map(|p| p * (1.0 - e)).collect();
            row.push(e);
            row
        })
        .collect();
    Ok(DiscreteChannel::from_rows(ch.input_arities().to_vec(), rows)?)
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Info => "info",
        Role::FrozenBadBoth => "frozen_bad_both",
        Role::FrozenMinus => "frozen_minus",
        Role::FrozenLeftover => "frozen_leftover",
        Role::FrozenIncompatible => "frozen_incompatible",
        Role::FrozenResidual => "frozen_residual",
        Role::FrozenUnselected => "frozen_unselected",
    }
}

fn log2(n: usize) -> Result<usize, CliError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(CliError::Config(format!("field `blocklength`: {n} is not a power of two")));
    }
    Ok(n.trailing_zeros() as usize)
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn to_rows(r: &Region2D) -> Vec<Vec<f64>> {
    r.vertices.iter().map(|v| v.to_vec()).collect()
}

/// Polygon order in two dimensions, enumeration order otherwise.
fn ordered_vertices(r: &RatePolytope) -> Result<Vec<Vec<f64>>, CliError> {
    if r.dimension() == 2 {
        Ok(to_rows(&Region2D::from_polytope(r)?))
    } else {
        Ok(r.vertices())
    }
}

/// Endpoints of the maximum-sum-rate edge (or vertex) of a polygon.
fn max_sum_face(r: &Region2D) -> Value {
    let best = r.vertices.iter().map(|v| v[0] + v[1]).fold(f64::NEG_INFINITY, f64::max);
    let on: Vec<[f64; 2]> = r.vertices.iter().copied().filter(|v| v[0] + v[1] >= best - 1e-9).collect();
    let lo = on.iter().copied().min_by(|a, b| a[0].total_cmp(&b[0]));
    let hi = on.iter().copied().max_by(|a, b| a[0].total_cmp(&b[0]));
    match (lo, hi) {
        (Some(a), Some(b)) => json!({"sum_rate": best, "endpoints": [a, b]}),
        _ => Value::Null,
    }
}

/// Product input distributions whose marginals have entries in multiples of
/// `1 / g`.
fn product_grid(arities: &[usize], g: usize) -> Result<Vec<InputDistribution>, CliError> {
    fn simplex(arity: usize, left: usize, g: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if arity == 1 {
            cur.push(left as f64 / g as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c as f64 / g as f64);
            simplex(arity - 1, left - c, g, cur, out);
            cur.pop();
        }
    }
    let per: Vec<Vec<Vec<f64>>> = arities
        .iter()
        .map(|&a| {
            let mut out = Vec::new();
            simplex(a, g, g, &mut Vec::new(), &mut out);
            out
        })
        .collect();
    let mut grid = vec![Vec::new()];
    for options in &per {
        grid = grid.into_iter().flat_map(|prefix: Vec<Vec<f64>>| options.iter().map(move |o| [prefix.clone(), vec![o.clone()]].concat())).collect();
    }
    grid.into_iter().map(|m| InputDistribution::product(m).map_err(CliError::from)).collect()
}
