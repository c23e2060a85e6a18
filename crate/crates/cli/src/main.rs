use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use elliptic_ybe::abel::{
    conserved_q1, conserved_q2, double_pole_residual, elliptic_divisor, elliptic_identity_check,
    integrate_flow, integrate_reciprocal_flow, moment_sum, partial_fraction_residual, Divisor, FlowOptions,
    HyperPoly,
};
use elliptic_ybe::elliptic::{amplitude, complete_quarter_period, jacobi};
use elliptic_ybe::ising::{
    couplings_crossing, couplings_from_v, star_triangle_residual, verify_difference_property,
};
use elliptic_ybe::spherical::{
    spectral_coordinates, triangle_from_spectral, triangle_from_vectors, verify_vector_identities,
    SphericalTriangle, TriangleVectors, Vec3,
};
use elliptic_ybe::su2::{transport_compare, verify_triangle_identity, verify_ybe_spectral, Rep};
use elliptic_ybe::verify::{self, RunConfig, RunReport, Suite, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "eybe", version, about = "Elliptic functions, spherical triangles and the Ising star-triangle relation")]
struct Cli {
    /// Seed for randomized verification.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Sample count for every randomized check.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Tolerance for every upper-bound check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output file (the trajectory CSV for `flow`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Three points `sn(u_i)` on the quartic `(1 - x²)(1 - k² x²)`.
    Elliptic,
    /// `f = (x² - 1)²` with points at `-1, 0, 1`.
    Stationary,
}

#[derive(Subcommand)]
enum Command {
    /// Jacobi functions and the quarter period.
    Ell {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        /// Grid such as `u=0:0.1:4,k=0.7` (start:step:end, inclusive).
        #[arg(long)]
        grid: Option<String>,
    },
    /// Spherical triangle from vertex directions or spectral parameters.
    Sphere {
        /// Three vertex directions `x,y,z;x,y,z;x,y,z`.
        #[arg(long, allow_hyphen_values = true)]
        vectors: Option<String>,
        /// Spectral parameters `u1,u3`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        spectral: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<f64>,
    },
    /// Rotation-word identity residuals in both representations.
    Ybe {
        #[arg(long)]
        u1: Option<f64>,
        #[arg(long)]
        u3: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        /// Vertex directions `x,y,z;x,y,z;x,y,z` instead of spectral parameters.
        #[arg(long, allow_hyphen_values = true)]
        vectors: Option<String>,
    },
    /// Elliptic Ising couplings and their star-triangle residual.
    Ising {
        #[arg(long)]
        v1: f64,
        #[arg(long)]
        v3: f64,
        #[arg(long)]
        k: f64,
        /// Use the crossing form in `u` with modulus `k` instead of `v` with modulus `k'`.
        #[arg(long)]
        crossing: bool,
    },
    /// Partial-fraction sums and conserved quantities of a divisor.
    Abel {
        #[arg(long)]
        n: Option<usize>,
        /// Coefficients `A_0..A_{2n-2}` of `f`, lowest degree first.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Evaluation point for the partial-fraction identities.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// Three-point sums at `u1,u2` with `u3 = -u1 - u2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        elliptic: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<f64>,
    },
    /// Seeded randomized verification: elliptic, spherical, su2, ising, abel or all.
    Verify { suite: String },
    /// Integrate the divisor flow and write the trajectory CSV.
    Flow {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Branch signs `±1` of `√f(x_i)`; all `+1` by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        signs: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Integrate in the reciprocal variables, which conserve `Q2`.
        #[arg(long)]
        reciprocal: bool,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Modulus of the elliptic preset.
        #[arg(long, default_value_t = 0.6)]
        k: f64,
    },
}

/// Library output plus the process status it implies.
struct Outcome {
    value: Value,
    /// Rows for CSV output; `None` flattens `value` into `key,value` rows.
    table: Option<(Vec<String>, Vec<Vec<f64>>)>,
    /// Replaces the flattened form in text output.
    text: Option<String>,
    code: u8,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Self { value, table: None, text: None, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let outcome = match &cli.command {
        Command::Ell { u, k, grid } => cmd_ell(*u, *k, grid.as_deref())?,
        Command::Sphere { vectors, spectral, k } => cmd_sphere(vectors.as_deref(), spectral.as_deref(), *k)?,
        Command::Ybe { u1, u3, k, vectors } => cmd_ybe(*u1, *u3, *k, vectors.as_deref())?,
        Command::Ising { v1, v3, k, crossing } => cmd_ising(*v1, *v3, *k, *crossing)?,
        Command::Abel { n, coeffs, x0, x, elliptic, k } => {
            cmd_abel(*n, coeffs.as_deref(), x0.as_deref(), *x, elliptic.as_deref(), *k)?
        }
        Command::Verify { suite } => cmd_verify(suite, cli)?,
        Command::Flow { n, coeffs, x0, signs, t_end, dt, reciprocal, preset, k } => {
            let system = flow_system(*preset, *k, *n, coeffs.as_deref(), x0.as_deref(), signs.as_deref())?;
            return cmd_flow(system, *t_end, *dt, *reciprocal, cli);
        }
    };
    let rendered = render(&outcome, cli.format)?;
    emit(cli.out.as_deref(), &rendered)?;
    Ok(outcome.code)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn render(o: &Outcome, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut v = Map::new();
            v.insert("schema".into(), json!(SCHEMA_VERSION));
            if let Value::Object(m) = &o.value {
                v.extend(m.clone());
            }
            Ok(serde_json::to_string_pretty(&Value::Object(v))? + "\n")
        }
        Format::Csv => match &o.table {
            Some((header, rows)) => Ok(csv_table(header, rows)),
            None => {
                let mut s = String::from("key,value\n");
                for (k, v) in flatten(&o.value) {
                    s.push_str(&format!("{k},{v}\n"));
                }
                Ok(s)
            }
        },
        Format::Text => match (&o.text, &o.table) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some((header, rows))) => Ok(csv_table(header, rows)),
            (None, None) => Ok(flatten(&o.value).into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()),
        },
    }
}

fn csv_table(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",") + "\n";
    for r in rows {
        s.push_str(&r.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Dotted `key=value` pairs of a JSON tree.
fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(&join(k), v, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| walk(&join(&i.to_string()), v, out)),
            Value::Number(n) => {
                let s = match (n.as_i64(), n.as_u64(), n.as_f64()) {
                    (Some(i), _, _) => i.to_string(),
                    (_, Some(u), _) => u.to_string(),
                    (_, _, Some(f)) => fmt_float(f),
                    _ => n.to_string(),
                };
                out.push((prefix.to_string(), s));
            }
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
            Value::Null => out.push((prefix.to_string(), String::new())),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out
}

/// Plain notation for moderate magnitudes, exponent notation otherwise.
fn fmt_float(f: f64) -> String {
    if f == 0.0 || (1e-4..1e15).contains(&f.abs()) {
        f.to_string()
    } else {
        format!("{f:e}")
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in grid"));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, h, b] => {
            let (a, h, b) = (num(a)?, num(h)?, num(b)?);
            if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                bail!("grid range {s} needs start <= end and a positive step");
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            if count > 10_000_000 {
                bail!("grid range {s} has too many points");
            }
            Ok((0..count).map(|i| a + i as f64 * h).collect())
        }
        _ => bail!("grid range `{s}` must be a number or start:step:end"),
    }
}

fn cmd_ell(u: Option<f64>, k: Option<f64>, grid: Option<&str>) -> Result<Outcome> {
    if let Some(g) = grid {
        let (mut us, mut ks) = (None, None);
        for item in g.split(',') {
            match item.split_once('=') {
                Some(("u", r)) => us = Some(parse_range(r)?),
                Some(("k", r)) => ks = Some(parse_range(r)?),
                _ => bail!("grid item `{item}` must be u=... or k=..."),
            }
        }
        let us = us.context("grid needs u=start:step:end")?;
        let k = match ks.as_deref().or(k.as_ref().map(std::slice::from_ref)) {
            Some([k]) => *k,
            _ => bail!("grid needs a single modulus k"),
        };
        let mut rows = Vec::with_capacity(us.len());
        for u in us {
            let t = jacobi(u, k)?;
            rows.push(vec![u, t.sn, t.cn, t.dn]);
        }
        let header: Vec<String> = ["u", "sn", "cn", "dn"].map(String::from).to_vec();
        let value = json!({ "k": k, "columns": header, "rows": rows });
        return Ok(Outcome { value, table: Some((header, rows)), text: None, code: 0 });
    }
    let k = k.context("--k is required")?;
    let big_k = complete_quarter_period(k)?;
    let value = match u {
        Some(u) => {
            let t = jacobi(u, k)?;
            json!({ "u": u, "k": k, "sn": t.sn, "cn": t.cn, "dn": t.dn, "am": amplitude(u, k)?.phi, "K": big_k })
        }
        None => json!({ "k": k, "K": big_k }),
    };
    Ok(Outcome::ok(value))
}

fn parse_vectors(s: &str) -> Result<TriangleVectors> {
    let vs: Vec<Vec3> = s
        .split(';')
        .map(|part| {
            let c: Vec<f64> = part
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("bad vector `{part}`"))?;
            match c.as_slice() {
                [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
                _ => bail!("vector `{part}` needs three components"),
            }
        })
        .collect::<Result<_>>()?;
    match vs.as_slice() {
        [a, b, c] => Ok(TriangleVectors::from_directions(*a, *b, *c)?),
        _ => bail!("--vectors needs three vectors separated by `;`"),
    }
}

fn triangle_value(t: &SphericalTriangle) -> Value {
    json!({
        "arcs": t.arcs,
        "angles": t.angles,
        "regime": t.regime(),
        "k_ratio": t.k_ratio,
        "law_residual": t.max_law_residual(),
    })
}

fn cmd_sphere(vectors: Option<&str>, spectral: Option<&[f64]>, k: Option<f64>) -> Result<Outcome> {
    let mut value = Map::new();
    let t = match (vectors, spectral) {
        (Some(v), None) => {
            let v = parse_vectors(v)?;
            let (t, _) = triangle_from_vectors(&v)?;
            value.insert("vector_identities".into(), serde_json::to_value(verify_vector_identities(&v)?)?);
            t
        }
        (None, Some([u1, u3])) => triangle_from_spectral(*u1, *u3, k.context("--spectral needs --k")?)?,
        (None, Some(_)) => bail!("--spectral needs exactly two values u1,u3"),
        _ => bail!("give exactly one of --vectors or --spectral"),
    };
    value.insert("triangle".into(), triangle_value(&t));
    match spectral_coordinates(&t) {
        Ok(c) => value.insert("spectral".into(), serde_json::to_value(c)?),
        Err(e) => value.insert("spectral".into(), json!({ "error": e.to_string() })),
    };
    Ok(Outcome::ok(Value::Object(value)))
}

fn cmd_ybe(u1: Option<f64>, u3: Option<f64>, k: Option<f64>, vectors: Option<&str>) -> Result<Outcome> {
    let value = match (vectors, u1, u3, k) {
        (Some(v), None, None, None) => {
            let (t, _) = triangle_from_vectors(&parse_vectors(v)?)?;
            let mut m = Map::new();
            for (name, rep) in [("spin_half", Rep::SpinHalf), ("spin_one", Rep::SpinOne)] {
                m.insert(
                    name.into(),
                    json!({
                        "triangle_residual": verify_triangle_identity(&t, rep),
                        "transport_residual": transport_compare(&t, rep).residual,
                    }),
                );
            }
            m.insert("triangle".into(), triangle_value(&t));
            Value::Object(m)
        }
        (None, Some(u1), Some(u3), Some(k)) => json!({
            "u1": u1,
            "u3": u3,
            "k": k,
            "spin_half": verify_ybe_spectral(u1, u3, k, Rep::SpinHalf)?,
            "spin_one": verify_ybe_spectral(u1, u3, k, Rep::SpinOne)?,
        }),
        _ => bail!("give --u1, --u3 and --k, or --vectors alone"),
    };
    Ok(Outcome::ok(value))
}

fn cmd_ising(v1: f64, v3: f64, k: f64, crossing: bool) -> Result<Outcome> {
    let p = if crossing { couplings_crossing(v1, v3, k)? } else { couplings_from_v(v1, v3, k)? };
    let st = star_triangle_residual(&p.couplings);
    let mut value = json!({
        "form": if crossing { "crossing" } else { "v" },
        "params": [v1, v3, k],
        "K": p.couplings.big_k,
        "L_star": p.couplings.l_star,
        "star_triangle_residual": st.residual,
        "lambda": [st.scalar.re, st.scalar.im],
        "hyperbolic_defect": p.hyperbolic_defect(),
    });
    if !crossing {
        value["difference_residual"] = json!(verify_difference_property(v1, v3, k)?);
    }
    Ok(Outcome::ok(value))
}

fn polynomial(n: Option<usize>, coeffs: Option<&[f64]>, x0: Option<&[f64]>) -> Result<(HyperPoly, Vec<f64>)> {
    let n = n.context("--n is required")?;
    let f = HyperPoly::new(n, coeffs.context("--coeffs is required")?.to_vec())?;
    let x0 = x0.context("--x0 is required")?.to_vec();
    if x0.len() != n {
        bail!("--x0 has {} points, expected n = {n}", x0.len());
    }
    Ok((f, x0))
}

fn cmd_abel(
    n: Option<usize>,
    coeffs: Option<&[f64]>,
    x0: Option<&[f64]>,
    x: Option<f64>,
    elliptic: Option<&[f64]>,
    k: Option<f64>,
) -> Result<Outcome> {
    if let Some(u) = elliptic {
        let [u1, u2] = u else { bail!("--elliptic needs exactly two values u1,u2") };
        let k = k.context("--elliptic needs --k")?;
        return Ok(Outcome::ok(serde_json::to_value(elliptic_identity_check(*u1, *u2, k, None)?)?));
    }
    let (f, x0) = polynomial(n, coeffs, x0)?;
    let d = Divisor::positive(x0)?;
    let moments = (0..d.len()).map(|j| moment_sum(&d, j)).collect::<elliptic_ybe::Result<Vec<_>>>()?;
    let mut value = json!({
        "moments": moments,
        "Q1": conserved_q1(&f, &d)?,
        "Q2": conserved_q2(&f, &d).ok(),
    });
    if let Some(x) = x {
        let pf = (0..d.len())
            .map(|j| partial_fraction_residual(&d, j, x))
            .collect::<elliptic_ybe::Result<Vec<_>>>()?;
        value["partial_fraction_residuals"] = json!(pf);
        value["double_pole_residual"] = json!(double_pole_residual(&f, &d, x)?);
    }
    Ok(Outcome::ok(value))
}

fn cmd_verify(name: &str, cli: &Cli) -> Result<Outcome> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(name).with_context(|| {
            format!("unknown suite `{name}`; expected elliptic, spherical, su2, ising, abel or all")
        })?]
    };
    let cfg = RunConfig::new(cli.seed, cli.samples, cli.tol)?;
    let report = verify::run(&suites, &cfg);
    let code = if report.pass { 0 } else { 1 };
    let value = match cli.format {
        Format::Csv => csv_report(&report),
        _ => serde_json::to_value(&report)?,
    };
    Ok(Outcome { value, table: None, text: Some(summary(&report)), code })
}

/// One CSV-flattenable object per check, keyed `suite.check`.
fn csv_report(r: &RunReport) -> Value {
    let mut m = Map::new();
    m.insert("pass".into(), json!(r.pass));
    for c in r.checks() {
        m.insert(
            format!("{}.{}", c.suite, c.check),
            json!({
                "samples": c.samples,
                "observed": c.observed,
                "threshold": c.threshold,
                "pass": c.pass,
                "failures": c.failure_count,
            }),
        );
    }
    Value::Object(m)
}

fn summary(r: &RunReport) -> String {
    let mut s = String::new();
    for c in r.checks() {
        let relation = match c.bound {
            verify::Bound::Upper => "<=",
            verify::Bound::Lower => ">=",
        };
        s.push_str(&format!(
            "{} {}.{}: {:.3e} {relation} {:.1e} over {} samples ({} failing, {:.2}s)\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.check,
            c.observed,
            c.threshold,
            c.samples,
            c.failure_count,
            c.wall_time_s
        ));
    }
    s.push_str(if r.pass { "all checks passed\n" } else { "some checks failed\n" });
    s
}

fn flow_system(
    preset: Option<Preset>,
    k: f64,
    n: Option<usize>,
    coeffs: Option<&[f64]>,
    x0: Option<&[f64]>,
    signs: Option<&[f64]>,
) -> Result<(HyperPoly, Divisor)> {
    match preset {
        Some(Preset::Elliptic) => Ok(elliptic_divisor([0.7, 0.4, -1.1], k)?),
        Some(Preset::Stationary) => Ok((
            HyperPoly::new(3, vec![1.0, 0.0, -2.0, 0.0, 1.0])?,
            Divisor::positive(vec![-1.0, 0.0, 1.0])?,
        )),
        None => {
            let (f, x0) = polynomial(n, coeffs, x0)?;
            let signs = signs.map_or_else(|| vec![1.0; x0.len()], <[f64]>::to_vec);
            Ok((f, Divisor::new(x0, signs)?))
        }
    }
}

fn cmd_flow(system: (HyperPoly, Divisor), t_end: f64, dt: f64, reciprocal: bool, cli: &Cli) -> Result<u8> {
    let (f, d) = system;
    let opts = FlowOptions::new(t_end, dt)?;
    let traj = if reciprocal { integrate_reciprocal_flow(&f, &d, opts)? } else { integrate_flow(&f, &d, opts)? };
    if let Some(path) = &cli.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        traj.write_csv(io::BufWriter::new(file))?;
    }
    let value = json!({
        "kind": traj.kind,
        "n": traj.n,
        "dt": traj.dt,
        "final_time": traj.final_time(),
        "samples": traj.samples.len(),
        "Q1_drift": traj.q1_drift,
        "Q2_drift": traj.q2_drift,
        "invariant_drift": traj.invariant_drift(),
        "constraint_max": traj.constraint_max,
        "p_equation_max": traj.eq_p_max,
        "sign_flips": traj.sign_flips,
        "halt": traj.halt.as_ref().map(|h| h.to_string()),
    });
    let rendered = render(&Outcome::ok(value), cli.format)?;
    io::stdout().write_all(rendered.as_bytes())?;
    if let Some(h) = &traj.halt {
        eprintln!("flow halted: {h}");
        return Ok(1);
    }
    Ok(0)
}
