//! `lcw`: curvature, classification and LCW decisions for metric files.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lcw::bivector::{orthonormal_frame, weyl_operator};
use lcw::classify::{CyKind, WeylType};
use lcw::curvature::curvature_point;
use lcw::decide::{self, classify_region, direction_sweep, eigenflag_directions, eigenflag_planes, Options, PointClass, PointRecord};
use lcw::distribution::{conformal_factor_decision, killing_check, killing_detect_surface, DistributionSpec};
use lcw::dsl::{parse_metric, MetricSpec};
use lcw::linalg::{self, Mat};
use lcw::region::{RegionSpec, SampleSet};
use lcw::{Exec, Tolerances};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "lcw", version, about = "Limiting Carleman weights of closed-form metrics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Metric file (`dim = n`, `g ij = expr`, optional `domain x > 0` lines).
    #[arg(long)]
    metric: PathBuf,
    /// Single point, comma separated.
    #[arg(long)]
    at: Option<String>,
    /// Region as `var:lo:hi[,var:lo:hi...]`; omitted variables use the default box.
    #[arg(long)]
    region: Option<String>,
    /// Check tolerance for the region criteria.
    #[arg(long)]
    tol: Option<f64>,
    /// Machine-readable report on stdout.
    #[arg(long)]
    json: bool,
    /// Seed for the quasi-random extra samples.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Extra samples inside the region.
    #[arg(long)]
    extra: Option<usize>,
    /// Run region sweeps on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Curvature tensors at a point.
    Curvature(Common),
    /// Weyl type (4D) or Cotton-York class (3D) at a point or over a region.
    Classify(Common),
    /// Eigenflag direction fields or planes over a region.
    Eigenflags(Common),
    /// Conformal-factor decision for a distribution.
    CheckFactor {
        #[command(flatten)]
        common: Common,
        /// `dt, dx` for a span, `perp: dx` for an orthogonal complement.
        #[arg(long)]
        dist: String,
    },
    /// Killing check for a vector field; surfaces may omit the field.
    CheckKilling {
        #[command(flatten)]
        common: Common,
        /// Linear in the coordinate fields, e.g. `dt` or `y*dt + dx`.
        #[arg(long)]
        field: Option<String>,
    },
    /// Umbilic-complement sweep of lines in a 2-plane.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = decide::DEFAULT_ANGLES)]
        angles: usize,
    },
    /// Full LCW decision.
    Decide(Common),
}

#[derive(Serialize)]
struct Report {
    input: Value,
    tolerances: Tolerances,
    per_point: Vec<Value>,
    summary: Value,
}

struct Outcome {
    report: Report,
    human: Vec<String>,
    ambiguous: bool,
}

struct Ctx {
    metric: MetricSpec,
    opts: Options,
    common: Common,
    command: &'static str,
}

impl Ctx {
    fn load(common: &Common, command: &'static str) -> Result<Ctx> {
        let text = std::fs::read_to_string(&common.metric).with_context(|| format!("reading {}", common.metric.display()))?;
        let metric = parse_metric(&text).map_err(|e| anyhow::anyhow!("{}: {e}", common.metric.display()))?;
        let mut tol = Tolerances::default();
        if let Some(t) = common.tol {
            if !t.is_finite() || t <= 0.0 {
                bail!("--tol must be positive");
            }
            tol = tol.with_check(t);
        }
        let exec = if common.sequential { Exec::Sequential } else { Exec::Parallel };
        Ok(Ctx {
            metric,
            opts: Options { tol, exec, ..Options::default() },
            common: common.clone(),
            command,
        })
    }

    fn point(&self) -> Result<Option<Vec<f64>>> {
        let Some(text) = &self.common.at else { return Ok(None) };
        let p: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad coordinate '{}' in --at", s.trim())))
            .collect::<Result<_>>()?;
        if p.len() != self.metric.dim {
            bail!("--at has {} coordinates, metric has {}", p.len(), self.metric.dim);
        }
        if !self.metric.in_domain(&p) {
            bail!("point {text} is outside the declared domain");
        }
        Ok(Some(p))
    }

    fn region(&self) -> Result<RegionSpec> {
        let mut r = RegionSpec::parse(self.common.region.as_deref().unwrap_or(""), &self.metric)?;
        if let Some(g) = self.common.grid {
            r.per_axis = g;
        }
        if let Some(e) = self.common.extra {
            r.extra = e;
        }
        if let Some(s) = self.common.seed {
            r.seed = s;
        }
        Ok(r)
    }

    fn input(&self, extra: Value) -> Result<Value> {
        let mut v = json!({
            "command": self.command,
            "metric": self.common.metric.display().to_string(),
            "dim": self.metric.dim,
            "variables": self.metric.var_names,
        });
        if let Some(p) = self.point()? {
            v["at"] = json!(p);
        } else {
            v["region"] = serde_json::to_value(self.region()?)?;
        }
        if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
            a.extend(b);
        }
        Ok(v)
    }

    fn report(&self, extra: Value, per_point: Vec<Value>, summary: Value) -> Result<Report> {
        Ok(Report {
            input: self.input(extra)?,
            tolerances: self.opts.tol,
            per_point,
            summary,
        })
    }
}

/// Shortest round-trip form, identical to the JSON encoding.
fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

/// `p/q` with a small denominator when it reproduces `v`, else the decimal.
fn fraction(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    for q in 1u32..=1000 {
        let p = (v * q as f64).round();
        if p != 0.0 && (v - p / q as f64).abs() <= 1e-10 * v.abs() {
            let sign = if p < 0.0 { "\u{2212}" } else { "" };
            return if q == 1 {
                format!("{sign}{}", p.abs())
            } else {
                format!("{sign}{}/{q}", p.abs())
            };
        }
    }
    num(v)
}

fn class_line(c: &PointClass) -> String {
    let amb = if c.ambiguous() { " (ambiguous)" } else { "" };
    match c {
        PointClass::Weyl(w) => {
            let l = w.lambdas().iter().map(|x| fraction(*x)).collect::<Vec<_>>().join(", ");
            match w.kind {
                WeylType::D => format!("type D, W = 0{amb}"),
                _ => format!("type {}, \u{3bb} = {{{l}}}{amb}", w.kind),
            }
        }
        PointClass::CottonYork(c) => match c.kind {
            CyKind::Zero => format!("CY = 0{amb}"),
            CyKind::Degenerate => format!("CY degenerate, det CY = {}, |CY| = {}{amb}", num(c.det), num(c.norm)),
            CyKind::Nondegenerate => format!("CY nondegenerate, det CY = {}{amb}", num(c.det)),
        },
    }
}

fn record_value(r: &PointRecord) -> Result<Value> {
    let mut v = serde_json::to_value(r)?;
    v["display"] = json!(class_line(&r.class));
    Ok(v)
}

fn mat_lines(name: &str, m: &Mat) -> Vec<String> {
    let mut out = vec![format!("{name}:")];
    out.extend(m.iter().map(|r| format!("  [{}]", nums(r))));
    out
}

fn curvature(ctx: &Ctx) -> Result<Outcome> {
    let p = ctx.point()?.context("curvature needs --at")?;
    let cp = curvature_point(&ctx.metric, &p)?;
    let vals = cp.values();
    let mut per = serde_json::to_value(&vals)?;
    let mut human = vec![format!("point ({})", nums(&p))];
    human.extend(mat_lines("g", &vals.g));
    for (k, c) in vals.christoffel.iter().enumerate() {
        human.extend(mat_lines(&format!("Gamma^{}", ctx.metric.var_names[k]), c));
    }
    human.extend(mat_lines("Ricci", &vals.ricci));
    human.push(format!("scalar curvature: {}", num(vals.scalar)));
    human.push(format!("max |Riemann|: {}", num(vals.riemann_max)));
    if let Some(cy) = &vals.cotton_york {
        human.extend(mat_lines("Cotton-York", cy));
    }
    if ctx.metric.dim == 4 {
        let frame = orthonormal_frame(&cp, &linalg::identity(4))?;
        let w = weyl_operator(&cp, &frame)?;
        human.push(format!("max |Weyl|: {}", num(vals.weyl_max.unwrap_or(0.0))));
        human.extend(mat_lines("Weyl operator (frame e_i / |d_i| Gram-Schmidt)", &w.matrix));
        per["weyl_operator"] = serde_json::to_value(&w)?;
    }
    let summary = json!({
        "scalar": vals.scalar,
        "riemann_max": vals.riemann_max,
        "weyl_max": vals.weyl_max,
        "flat": vals.riemann_max <= ctx.opts.tol.zero,
    });
    Ok(Outcome {
        report: ctx.report(json!({}), vec![per], summary)?,
        human,
        ambiguous: false,
    })
}

fn samples_or_point(ctx: &Ctx) -> Result<SampleSet> {
    match ctx.point()? {
        Some(p) => Ok(SampleSet {
            points: vec![p],
            grid_dims: vec![1; ctx.metric.dim],
            n_grid: 1,
            base: 0,
        }),
        None => Ok(ctx.region()?.samples()),
    }
}

fn counts(records: &[PointRecord]) -> Vec<(String, usize)> {
    let mut c: Vec<(String, usize)> = Vec::new();
    for r in records {
        let l = r.class.label();
        match c.iter_mut().find(|(k, _)| *k == l) {
            Some((_, n)) => *n += 1,
            None => c.push((l, 1)),
        }
    }
    c.sort();
    c
}

fn classify(ctx: &Ctx) -> Result<Outcome> {
    if !(3..=4).contains(&ctx.metric.dim) {
        bail!("classify needs a 3- or 4-dimensional metric");
    }
    let samples = samples_or_point(ctx)?;
    let records = classify_region(&ctx.metric, &samples, &ctx.opts)?;
    let ambiguous = records.iter().filter(|r| r.class.ambiguous()).count();
    let counts = counts(&records);
    let human = if records.len() == 1 {
        vec![class_line(&records[0].class)]
    } else {
        let mut h = vec![format!("{} samples", records.len())];
        h.extend(counts.iter().map(|(k, n)| format!("  {k}: {n}")));
        if ambiguous > 0 {
            h.push(format!("  ambiguous: {ambiguous}"));
        }
        h
    };
    let per = records.iter().map(record_value).collect::<Result<Vec<_>>>()?;
    let summary = json!({
        "counts": counts.iter().map(|(k, n)| json!({"class": k, "samples": n})).collect::<Vec<_>>(),
        "ambiguous_samples": ambiguous,
        "uniform": counts.len() == 1 && ambiguous == 0,
    });
    Ok(Outcome {
        report: ctx.report(json!({}), per, summary)?,
        human,
        ambiguous: ambiguous > 0 || counts.len() > 1,
    })
}

fn eigenflags(ctx: &Ctx) -> Result<Outcome> {
    let region = ctx.region()?;
    let samples = region.samples();
    let records = classify_region(&ctx.metric, &samples, &ctx.opts)?;
    let counts = counts(&records);
    let per = records.iter().map(record_value).collect::<Result<Vec<_>>>()?;
    let mut human = Vec::new();
    let mut summary = json!({"classes": counts.iter().map(|(k, n)| json!({"class": k, "samples": n})).collect::<Vec<_>>()});
    let mut ambiguous = records.iter().any(|r| r.class.ambiguous());
    if counts.len() != 1 {
        human.push(format!("class changes over the region: {counts:?}"));
        ambiguous = true;
    } else {
        let kind = counts[0].0.clone();
        match kind.as_str() {
            "B" | "Degenerate" => match eigenflag_directions(&ctx.metric, &samples, &records, &ctx.opts.tol) {
                Ok(dirs) => {
                    for d in &dirs {
                        human.push(format!("direction {} (snap residual {})", d.label, num(d.snap_residual)));
                    }
                    summary["directions"] = serde_json::to_value(&dirs)?;
                    let values: Vec<Value> = dirs.iter().map(|d| json!(d.values)).collect();
                    summary["direction_values"] = json!(values);
                }
                Err(e) => {
                    human.push(format!("directions cannot be tracked: {e}"));
                    summary["error"] = json!(e.to_string());
                    ambiguous = true;
                }
            },
            "C" => {
                let planes = eigenflag_planes(&ctx.metric, &samples, &records, &ctx.opts.tol)?;
                for p in &planes {
                    human.push(format!("plane {} (snap residual {})", p.label, num(p.snap_residual)));
                }
                summary["planes"] = serde_json::to_value(&planes)?;
            }
            "D" | "Zero" => human.push("every direction is an eigenflag (conformally flat)".into()),
            _ => human.push("no eigenflag directions".into()),
        }
    }
    Ok(Outcome {
        report: ctx.report(json!({}), per, summary)?,
        human,
        ambiguous,
    })
}

fn check_factor(ctx: &Ctx, dist: &str) -> Result<Outcome> {
    let d = DistributionSpec::parse(dist, &ctx.metric)?;
    let samples = ctx.region()?.samples();
    let f = conformal_factor_decision(&d, &ctx.metric, &samples, &ctx.opts.tol, ctx.opts.exec)?;
    let per = f
        .per_point
        .iter()
        .map(|p| serde_json::to_value(p).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    let mut human = vec![format!(
        "{}: {}",
        f.distribution,
        if f.is_factor { "conformal factor" } else { "not a conformal factor" }
    )];
    if let Some(s) = &f.failed_step {
        human.push(format!("  fails at: {s}"));
    }
    let w = &f.worst;
    for (name, m) in [
        ("integrability of D", w.integrable),
        ("integrability of D^perp", w.integrable_perp),
        ("umbilicity of D", w.umbilic),
        ("umbilicity of D^perp", w.umbilic_perp),
        ("closedness of (H1+H2)^flat", w.mean_closed),
        ("Lie conformality of g^D", w.lie_conformal),
        ("Lie conformality of g^perp", w.lie_conformal_perp),
        ("closedness of Phi", w.phi_closed),
    ] {
        human.push(format!("  {name}: {} (threshold {})", num(m.value), num(m.threshold)));
    }
    if f.inconsistent {
        human.push("  the Lie-derivative and mean-curvature criteria disagree".into());
    }
    let ambiguous = f.ambiguous || f.inconsistent;
    Ok(Outcome {
        report: ctx.report(json!({"dist": dist}), per, serde_json::to_value(&f)?)?,
        human,
        ambiguous,
    })
}

fn check_killing(ctx: &Ctx, field: Option<&str>) -> Result<Outcome> {
    let samples = ctx.region()?.samples();
    match field {
        Some(text) => {
            let x = ctx.metric.parse_field(text).map_err(|e| anyhow::anyhow!("--field: {e}"))?;
            let k = killing_check(&ctx.metric, &x, &samples, &ctx.opts.tol, ctx.opts.exec)?;
            let human = vec![
                format!("{}: {}", text, if k.pass { "Killing" } else { "not Killing" }),
                format!("  max |L_X g|: {} (threshold {})", num(k.worst.value), num(k.worst.threshold)),
            ];
            let per = k.per_point.iter().map(|v| json!({"lie_derivative_max": v})).collect();
            Ok(Outcome {
                report: ctx.report(json!({"field": text}), per, serde_json::to_value(&k)?)?,
                human,
                ambiguous: k.worst.ambiguous(),
            })
        }
        None => {
            if ctx.metric.dim != 2 {
                bail!("check-killing needs --field unless the metric is a surface");
            }
            let k = killing_detect_surface(&ctx.metric, &samples, &ctx.opts.tol, ctx.opts.exec)?;
            let mut human = vec![format!("Killing field: {}", k.kind)];
            if let Some(c) = k.coordinate {
                human.push(format!("  along d{}", ctx.metric.var_names[c]));
            }
            human.push(format!("  residual {} (threshold {})", num(k.residual.value), num(k.residual.threshold)));
            human.push(format!("  closedness {} (threshold {})", num(k.closed.value), num(k.closed.threshold)));
            if !k.flat_points.is_empty() {
                human.push(format!("  constant curvature at {} samples", k.flat_points.len()));
            }
            let per = k.gradient.iter().map(|m| json!({"curvature_gradient": m})).collect();
            Ok(Outcome {
                report: ctx.report(json!({}), per, serde_json::to_value(&k)?)?,
                human,
                ambiguous: k.ambiguous,
            })
        }
    }
}

fn sweep(ctx: &Ctx, dist: &str, angles: usize) -> Result<Outcome> {
    let d = DistributionSpec::parse(dist, &ctx.metric)?;
    let samples = ctx.region()?.samples();
    let opts = Options { n_angles: angles, ..ctx.opts };
    let s = direction_sweep(&d, &ctx.metric, &samples, &opts)?;
    let mut human = vec![format!("sweep of {} over {} angles", s.plane, s.n_angles)];
    for v in &s.survivors {
        human.push(format!(
            "  theta = {}{}: objective {} (threshold {})",
            num(v.theta),
            if v.snapped { " (snapped)" } else { "" },
            num(v.objective.value),
            num(v.objective.threshold)
        ));
    }
    if s.survivors.is_empty() {
        human.push(format!("  no survivors; min objective {}", num(s.min_objective)));
    }
    if s.degenerate {
        human.push("  every angle survives".into());
    }
    let per = s
        .survivors
        .iter()
        .map(|v| json!({"theta": v.theta, "directions": v.directions}))
        .collect();
    Ok(Outcome {
        report: ctx.report(json!({"dist": dist, "angles": angles}), per, serde_json::to_value(&s)?)?,
        human,
        ambiguous: s.degenerate || s.survivors.iter().any(|v| v.objective.ambiguous()),
    })
}

fn decide_cmd(ctx: &Ctx) -> Result<Outcome> {
    let region = ctx.region()?;
    let v = decide::decide(&ctx.metric, &region, &ctx.opts)?;
    let mut human = vec![v.headline()];
    human.extend(v.summary.reasons.iter().map(|r| format!("  {r}")));
    if v.summary.ambiguous {
        human.push("  ambiguous: margins within a factor 10 of threshold".into());
    }
    for c in &v.summary.partition {
        human.push(format!("  cell {}: {} samples", c.label, c.samples.len()));
    }
    let per = v.per_point.iter().map(record_value).collect::<Result<Vec<_>>>()?;
    let summary = json!({
        "headline": v.headline(),
        "verdict": v.summary,
        "directions": v.directions,
        "planes": v.planes,
        "plane_factors": v.plane_factors,
        "candidates": v.candidates,
        "sweeps": v.sweeps,
        "product": v.product,
    });
    Ok(Outcome {
        report: ctx.report(json!({}), per, summary)?,
        human,
        ambiguous: !v.is_decided(),
    })
}

fn run(cli: Cli) -> Result<(Outcome, bool)> {
    let (ctx, out) = match &cli.cmd {
        Cmd::Curvature(c) => {
            let ctx = Ctx::load(c, "curvature")?;
            let o = curvature(&ctx)?;
            (ctx, o)
        }
        Cmd::Classify(c) => {
            let ctx = Ctx::load(c, "classify")?;
            let o = classify(&ctx)?;
            (ctx, o)
        }
        Cmd::Eigenflags(c) => {
            let ctx = Ctx::load(c, "eigenflags")?;
            let o = eigenflags(&ctx)?;
            (ctx, o)
        }
        Cmd::CheckFactor { common, dist } => {
            let ctx = Ctx::load(common, "check-factor")?;
            let o = check_factor(&ctx, dist)?;
            (ctx, o)
        }
        Cmd::CheckKilling { common, field } => {
            let ctx = Ctx::load(common, "check-killing")?;
            let o = check_killing(&ctx, field.as_deref())?;
            (ctx, o)
        }
        Cmd::Sweep { common, dist, angles } => {
            let ctx = Ctx::load(common, "sweep")?;
            let o = sweep(&ctx, dist, *angles)?;
            (ctx, o)
        }
        Cmd::Decide(c) => {
            let ctx = Ctx::load(c, "decide")?;
            let o = decide_cmd(&ctx)?;
            (ctx, o)
        }
    };
    Ok((out, ctx.common.json))
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for ambiguous verdicts.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok((out, as_json)) => {
            let text = if as_json {
                match serde_json::to_string_pretty(&out.report) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                out.human.join("\n")
            };
            // A closed pipe is not an error of ours.
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{text}").and_then(|_| stdout.flush());
            if out.ambiguous {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
