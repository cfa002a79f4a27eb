//! Command-line front end. JSON results go to standard output, human
//! readable notes to standard error.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 a
//! precondition of the requested operation does not hold.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::actions::{
    cluster_oracle, containment, control_projection, hausdorff_one_sided, line_coverage, schottky_certificate,
    ConePrediction, Containment, GroupSpec, OracleConfig, PointCloud, SchottkyPairing,
};
use crate::cyclic::{classify_with, invariant_lines, kulkarni_limit_set, maximal_domains, LimitSetDesc};
use crate::error::Error;
use crate::gallery::{
    make_gamma_a, make_inoue_sm, make_inoue_sn, make_kissing_schottky, make_suspension, InoueSnParams, KissingParams,
    Sign,
};
use crate::mobius::{elementary_certificate, greenberg_limit_approx};
use crate::projective::{cx, json, Cpx, MobiusMap, ProjLine, ProjPoint, ProjTransform};
use crate::spectral::{RankChoice, RotationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Tolerance of the oracle checks against closed-form predictions.
pub const EPS_ACC: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "kulkarni", version, about = "Limit sets and classification of complex projective groups")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap on worker threads (0 uses the default).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one element and describe its cyclic group's limit set.
    Classify(ClassifyArgs),
    /// Limit set of a group from the closed-form table or the orbit oracle.
    LimitSet(LimitSetArgs),
    /// Project a group fixing a point to the Möbius group of a line.
    Project(ProjectArgs),
    /// Verify a Schottky pairing through the control projection.
    SchottkyVerify(SchottkyArgs),
    /// Build a group of one of the explicit families.
    Gallery(GalleryArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// JSON file with a matrix, a group or a gallery document.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Generator to classify when the file holds several.
    #[arg(long)]
    pub generator: Option<String>,
    /// Largest denominator examined when testing rotations.
    #[arg(long, default_value_t = 720)]
    pub q_max: u64,
    /// Known rotation angles as fractions of a turn, e.g. `1/3,2/5`.
    #[arg(long)]
    pub exact_rotations: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Table,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerArg {
    L0,
    L1,
    L2,
    Lambda,
}

#[derive(Debug, Args)]
pub struct LimitSetArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Table)]
    pub mode: Mode,
    /// Longest word enumerated by the oracle.
    #[arg(long, default_value_t = 200)]
    pub word_len: usize,
    /// Number of random base points.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Shortest word whose images count as accumulation.
    #[arg(long, default_value_t = 50)]
    pub n_min: usize,
    /// Radius of the excluded neighbourhoods of the first layers.
    #[arg(long, default_value_t = 0.02)]
    pub exclusion: f64,
    /// Deduplication cell size of the clouds.
    #[arg(long, default_value_t = 0.005)]
    pub resolution: f64,
    /// Cap on distinct enumerated elements.
    #[arg(long, default_value_t = crate::words::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Layer written to the CSV file.
    #[arg(long, value_enum, default_value_t = LayerArg::Lambda)]
    pub layer: LayerArg,
    /// CSV output path for the oracle cloud.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub group: PathBuf,
    /// Control point as JSON, e.g. `[[0,0],[0,0],[1,0]]`.
    #[arg(long)]
    pub point: Option<String>,
    /// Control line as the JSON dual vector.
    #[arg(long)]
    pub line: Option<String>,
    /// Word length for the kernel search, the elementary certificate and
    /// the limit-set sample.
    #[arg(long, default_value_t = 6)]
    pub word_len: usize,
}

#[derive(Debug, Args)]
pub struct SchottkyArgs {
    #[arg(long)]
    pub group: PathBuf,
    /// Pairing file; defaults to the `pairing` entry of the group document.
    #[arg(long)]
    pub pairing: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Suspension,
    GammaA,
    KissingSchottky,
    InoueSm,
    InoueSn,
}

#[derive(Debug, Args)]
pub struct GalleryArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Rotation parameter of the kissing Schottky group.
    #[arg(long, allow_hyphen_values = true, default_value_t = 2f64.sqrt() - 1.0)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true, default_value = "1,0")]
    pub eps2: String,
    #[arg(long, allow_hyphen_values = true, default_value = "1,0")]
    pub eps3: String,
    /// Diagonal parameter of the diagonal-permutation group.
    #[arg(long, allow_hyphen_values = true, default_value = "2,0")]
    pub a: String,
    /// Integer matrix, rows separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    pub int_matrix: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub r: i64,
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub t: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub c1: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
    pub c2: String,
    #[arg(long, default_value = "plus")]
    pub sign: String,
    /// JSON file with a list of 2x2 matrices; defaults to a classical
    /// two-generator Schottky group.
    #[arg(long)]
    pub mobius: Option<PathBuf>,
    /// Scalar generators, separated by `;`.
    #[arg(long, allow_hyphen_values = true, default_value = "-1,0")]
    pub scalars: String,
    /// Word length used to sample limit sets of projected groups.
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PreconditionViolation(_) | Error::NotControllable(_) | Error::SpectrumMismatch(_) => {
                EXIT_PRECONDITION
            }
            Error::InvalidInput(_) => EXIT_USAGE,
            _ => EXIT_CHECK_FAILED,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Outcome of a command: the JSON document and the exit code.
pub struct Outcome {
    pub json: Value,
    pub code: i32,
    pub notes: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

pub fn parse_cpx(s: &str) -> CliResult<Cpx> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| usage(format!("bad number {x:?} in {s:?}")));
    match parts.as_slice() {
        [re] => Ok(cx(num(re)?, 0.0)),
        [re, im] => Ok(cx(num(re)?, num(im)?)),
        _ => Err(usage(format!("expected `re,im`, got {s:?}"))),
    }
}

fn parse_int_rows<const N: usize>(s: &str) -> CliResult<[[i64; N]; N]> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != N {
        return Err(usage(format!("expected {N} rows in {s:?}")));
    }
    let mut out = [[0i64; N]; N];
    for (r, row) in rows.iter().enumerate() {
        let vals: Vec<&str> = row.split(',').map(str::trim).collect();
        if vals.len() != N {
            return Err(usage(format!("expected {N} entries in row {row:?}")));
        }
        for (c, v) in vals.iter().enumerate() {
            out[r][c] = v.parse().map_err(|_| usage(format!("bad integer {v:?}")))?;
        }
    }
    Ok(out)
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid JSON in {}: {e}", path.display())))
}

/// A group spec, either bare or under a `group` key; a lone matrix is read
/// as the cyclic group it generates.
fn group_of(doc: &Value) -> CliResult<GroupSpec> {
    if doc.is_array() || doc.get("matrix").is_some() {
        return Ok(GroupSpec::new(vec![("g", matrix_of(doc, None)?)])?);
    }
    let g = doc.get("group").unwrap_or(doc);
    let spec: GroupSpec = serde_json::from_value(g.clone()).map_err(|e| usage(format!("invalid group: {e}")))?;
    spec.validate()?;
    if spec.generators.is_empty() {
        return Err(usage("the group has no generators"));
    }
    Ok(spec)
}

fn matrix_of(doc: &Value, generator: Option<&str>) -> CliResult<ProjTransform> {
    if let Some(m) = doc.get("matrix") {
        return serde_json::from_value(m.clone()).map_err(|e| usage(format!("invalid matrix: {e}")));
    }
    if doc.is_array() {
        return serde_json::from_value(doc.clone()).map_err(|e| usage(format!("invalid matrix: {e}")));
    }
    let spec = group_of(doc)?;
    match generator {
        Some(name) => spec
            .generators
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.matrix)
            .ok_or_else(|| usage(format!("no generator named {name}"))),
        None if spec.generators.len() == 1 => Ok(spec.generators[0].matrix),
        None => Err(usage("the file holds several generators; choose one with --generator")),
    }
}

fn parse_exact(s: &str) -> CliResult<Vec<(i64, i64)>> {
    s.split(',')
        .map(|f| {
            let (p, q) = f.trim().split_once('/').ok_or_else(|| usage(format!("expected p/q, got {f:?}")))?;
            let p: i64 = p.trim().parse().map_err(|_| usage(format!("bad numerator in {f:?}")))?;
            let q: i64 = q.trim().parse().map_err(|_| usage(format!("bad denominator in {f:?}")))?;
            if q == 0 {
                return Err(usage("zero denominator"));
            }
            Ok((p, q))
        })
        .collect()
}

#[derive(Serialize)]
struct EigenReport {
    eigenvalues: [json::CpxRepr; 3],
    jordan_shape: crate::spectral::JordanShape,
    multiplicities: Vec<usize>,
    basis: Columns,
    residual: f64,
    condition: f64,
    ill_conditioned: bool,
}

type Columns = [[json::CpxRepr; 3]; 3];

fn classify_cmd(a: &ClassifyArgs) -> CliResult<Outcome> {
    let doc = read_json(&a.matrix)?;
    let g = matrix_of(&doc, a.generator.as_deref())?;
    let exact = a.exact_rotations.as_deref().map(parse_exact).transpose()?;
    let cfg = RotationConfig { q_max: a.q_max, exact, ..RotationConfig::default() };
    let c = classify_with(&g, &cfg, RankChoice::Auto);
    let e = &c.eigen;
    let eigen = EigenReport {
        eigenvalues: e.eigenvalues.map(json::from_cpx),
        jordan_shape: e.shape,
        multiplicities: e.multiplicities.clone(),
        basis: [0, 1, 2].map(|k| {
            let v = e.column(k);
            [json::from_cpx(v[0]), json::from_cpx(v[1]), json::from_cpx(v[2])]
        }),
        residual: e.residual,
        condition: e.condition,
        ill_conditioned: e.ill_conditioned,
    };
    let mut notes = vec![format!("class {}", c.class.name())];
    if e.ill_conditioned {
        notes.push("warning: the eigenbasis is ill-conditioned".into());
    }
    let json = serde_json::json!({
        "class": c.class,
        "eigen": to_value(&eigen),
        "frame": to_value(&c.frame),
        "rotations": to_value(&c.rotations),
        "limit_set": to_value(&kulkarni_limit_set(&c)),
        "invariant_lines": to_value(&invariant_lines(&c)),
        "maximal_domains": to_value(&maximal_domains(&c)),
    });
    Ok(Outcome { json, code: EXIT_OK, notes })
}

/// Table check of one oracle layer against its described set.
#[derive(Debug, Serialize)]
pub struct LayerCheck {
    pub layer: &'static str,
    pub points: usize,
    pub hausdorff: Option<f64>,
    pub lines: Vec<LineCheck>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct LineCheck {
    pub name: String,
    pub count: usize,
    pub max_gap: f64,
    pub pass: bool,
}

/// One-sided Hausdorff distance within `EPS_ACC`, and at least 50 points
/// with gaps of at most 0.2 on every described line. Unknown cells pass.
pub fn check_layer(layer: &'static str, cloud: &PointCloud, desc: &LimitSetDesc) -> LayerCheck {
    if desc.unknown {
        return LayerCheck { layer, points: cloud.len(), hausdorff: None, lines: Vec::new(), pass: true };
    }
    let h = hausdorff_one_sided(cloud, desc);
    let lines: Vec<LineCheck> = desc
        .lines
        .iter()
        .map(|l| {
            let c = line_coverage(cloud, &l.line, EPS_ACC);
            LineCheck { name: l.name.clone(), count: c.count, max_gap: c.max_gap, pass: c.count >= 50 && c.max_gap <= 0.2 }
        })
        .collect();
    let pass = (h <= EPS_ACC || desc.whole_plane) && lines.iter().all(|l| l.pass);
    LayerCheck { layer, points: cloud.len(), hausdorff: h.is_finite().then_some(h), lines, pass }
}

fn limit_set_cmd(a: &LimitSetArgs, seed: u64) -> CliResult<Outcome> {
    let doc = read_json(&a.group)?;
    let spec = group_of(&doc)?;
    match a.mode {
        Mode::Table => {
            if spec.generators.len() != 1 {
                return Err(usage("table mode needs a single generator; use --mode oracle"));
            }
            let c = crate::cyclic::classify(&spec.generators[0].matrix);
            let json = serde_json::json!({
                "mode": "table",
                "class": c.class,
                "limit_set": to_value(&kulkarni_limit_set(&c)),
            });
            Ok(Outcome { json, code: EXIT_OK, notes: vec![format!("class {}", c.class.name())] })
        }
        Mode::Oracle => {
            let cfg = OracleConfig {
                max_len: a.word_len,
                samples: a.samples,
                n_min: a.n_min,
                exclusion: a.exclusion,
                resolution: a.resolution,
                seed,
                budget: a.budget,
                ..OracleConfig::default()
            };
            let r = cluster_oracle(&spec, &cfg)?;
            let cloud = match a.layer {
                LayerArg::L0 => &r.l0,
                LayerArg::L1 => &r.l1,
                LayerArg::L2 => &r.l2,
                LayerArg::Lambda => &r.lambda,
            };
            if let Some(path) = &a.out {
                std::fs::write(path, cloud.to_csv()?)
                    .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            }
            let mut code = EXIT_OK;
            let mut notes = vec![format!(
                "{} words, {} long words, clouds L0 {} L1 {} L2 {} Lambda {}",
                r.words,
                r.long_words,
                r.l0.len(),
                r.l1.len(),
                r.l2.len(),
                r.lambda.len()
            )];
            let mut json = serde_json::json!({
                "mode": "oracle",
                "words": r.words,
                "long_words": r.long_words,
                "base_points_used": r.base_points_used,
                "counts": {"L0": r.l0.len(), "L1": r.l1.len(), "L2": r.l2.len(), "Lambda": r.lambda.len()},
                "config": to_value(&cfg),
            });
            if spec.generators.len() == 1 {
                let c = crate::cyclic::classify(&spec.generators[0].matrix);
                let k = kulkarni_limit_set(&c);
                let checks = [
                    check_layer("L0", &r.l0, &k.l0),
                    check_layer("L1", &r.l1, &k.l1),
                    check_layer("L2", &r.l2, &k.l2),
                    check_layer("Lambda", &r.lambda, &k.lambda),
                ];
                let pass = checks.iter().all(|c| c.pass);
                if !pass {
                    code = EXIT_CHECK_FAILED;
                }
                notes.push(format!("table check {}", if pass { "passed" } else { "failed" }));
                json["class"] = to_value(&c.class);
                json["table_check"] = serde_json::json!({"pass": pass, "layers": to_value(&checks)});
            }
            if let Some(p) = doc.get("prediction") {
                if let Ok(pred) = serde_json::from_value::<ConePrediction>(p.clone()) {
                    let rep: Containment = containment(&r.lambda, &pred, EPS_ACC);
                    if !rep.contained {
                        code = EXIT_CHECK_FAILED;
                    }
                    notes.push(format!("containment max distance {:.3e}", rep.max_distance));
                    json["containment"] = to_value(&rep);
                }
            }
            Ok(Outcome { json, code, notes })
        }
    }
}

fn project_cmd(a: &ProjectArgs) -> CliResult<Outcome> {
    let doc = read_json(&a.group)?;
    let mut spec = group_of(&doc)?;
    if let Some(p) = &a.point {
        spec.point = Some(serde_json::from_str::<ProjPoint>(p).map_err(|e| usage(format!("invalid point: {e}")))?);
    }
    if let Some(l) = &a.line {
        spec.line = Some(serde_json::from_str::<ProjLine>(l).map_err(|e| usage(format!("invalid line: {e}")))?);
    }
    let proj = control_projection(&spec, a.word_len)?;
    let maps: Vec<MobiusMap> = proj.maps();
    let cert = elementary_certificate(&maps, a.word_len);
    let cloud = greenberg_limit_approx(&maps, a.word_len)?;
    let notes = vec![
        format!("{} kernel words up to length {}", proj.kernel.len(), a.word_len),
        format!("elementary type {:?}", cert.kind),
    ];
    let json = serde_json::json!({
        "generators": to_value(&proj.generators),
        "kernel": to_value(&proj.kernel),
        "elementary": to_value(&cert),
        "limit_set_sample": to_value(&cloud),
    });
    Ok(Outcome { json, code: EXIT_OK, notes })
}

fn schottky_cmd(a: &SchottkyArgs) -> CliResult<Outcome> {
    let doc = read_json(&a.group)?;
    let spec = group_of(&doc)?;
    let pairing_doc = match &a.pairing {
        Some(p) => read_json(p)?,
        None => doc.get("pairing").cloned().ok_or_else(|| usage("no pairing given"))?,
    };
    let pd = pairing_doc.get("pairing").unwrap_or(&pairing_doc);
    let pairing: SchottkyPairing =
        serde_json::from_value(pd.clone()).map_err(|e| usage(format!("invalid pairing: {e}")))?;
    let rep = schottky_certificate(&spec, &pairing)?;
    let code = if rep.valid { EXIT_OK } else { EXIT_CHECK_FAILED };
    let notes = vec![format!("valid {} kissing {}", rep.valid, rep.kissing)];
    Ok(Outcome { json: to_value(&rep), code, notes })
}


fn gallery_cmd(a: &GalleryArgs) -> CliResult<Outcome> {
    let (json, notes) = match a.family {
        Family::Suspension => {
            let gens = match &a.mobius {
                Some(p) => serde_json::from_value::<Vec<MobiusMap>>(read_json(p)?)
                    .map_err(|e| usage(format!("invalid Möbius list: {e}")))?,
                None => crate::gallery::classical_schottky(),
            };
            let scalars = a.scalars.split(';').map(parse_cpx).collect::<CliResult<Vec<_>>>()?;
            let s = make_suspension(&gens, &scalars, a.depth)?;
            (to_value(&s), vec![format!("scalar group infinite: {}", s.scalar_group_infinite)])
        }
        Family::GammaA => {
            let g = make_gamma_a(parse_cpx(&a.a)?)?;
            (to_value(&g), Vec::new())
        }
        Family::KissingSchottky => {
            let p = KissingParams {
                theta: a.theta,
                eps2: json::from_cpx(parse_cpx(&a.eps2)?),
                eps3: json::from_cpx(parse_cpx(&a.eps3)?),
            };
            let k = make_kissing_schottky(&p, a.depth)?;
            let notes = k.diagnostics.warnings.iter().map(|w| format!("warning: {w}")).collect();
            (to_value(&k), notes)
        }
        Family::InoueSm => {
            let m = match &a.int_matrix {
                Some(s) => parse_int_rows::<3>(s)?,
                None => [[0, 0, 1], [1, 0, 1], [0, 1, 0]],
            };
            let s = make_inoue_sm(&m)?;
            (to_value(&s), vec![format!("family {:?}", s.family)])
        }
        Family::InoueSn => {
            let n = match &a.int_matrix {
                Some(s) => parse_int_rows::<2>(s)?,
                None => [[2, 1], [1, 1]],
            };
            let sign = match a.sign.as_str() {
                "plus" | "+" => Sign::Plus,
                "minus" | "-" => Sign::Minus,
                other => return Err(usage(format!("sign must be plus or minus, got {other:?}"))),
            };
            let p = InoueSnParams {
                n,
                r: a.r,
                t: json::from_cpx(parse_cpx(&a.t)?),
                c: [json::from_cpx(parse_cpx(&a.c1)?), json::from_cpx(parse_cpx(&a.c2)?)],
                sign,
            };
            let s = make_inoue_sn(&p)?;
            (
                to_value(&s),
                vec![
                    format!("family {:?}", s.family),
                    "note: the compatibility condition on c1, c2 is not checked".into(),
                ],
            )
        }
    };
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&json).expect("serializable output");
        std::fs::write(path, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(Outcome { json, code: EXIT_OK, notes })
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Classify(a) => classify_cmd(a),
        Command::LimitSet(a) => limit_set_cmd(a, cli.seed),
        Command::Project(a) => project_cmd(a),
        Command::SchottkyVerify(a) => schottky_cmd(a),
        Command::Gallery(a) => gallery_cmd(a),
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let run = || dispatch(&cli);
    let result = if cli.threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(usage(format!("cannot start thread pool: {e}"))),
        }
    } else {
        run()
    };
    match result {
        Ok(o) => {
            for n in &o.notes {
                let _ = writeln!(err, "{n}");
            }
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&o.json).expect("serializable output"));
            o.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            let _ = writeln!(out, "{}", serde_json::json!({"error": f.message, "exit_code": f.code}));
            f.code
        }
    }
}
