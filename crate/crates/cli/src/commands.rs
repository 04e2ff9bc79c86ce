//! One handler per subcommand. Handlers print their own output and report
//! failures through [`Failure`], which `main` maps to exit codes.

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use curvgraph_core::canonical::fmt_float;
use curvgraph_core::curvature::linear::{k_linear, k_ollivier};
use curvgraph_core::curvature::nonlinear::{
    k_exponential_estimate, k_quadratic_estimate, OptimizerConfig,
};
use curvgraph_core::generators::{generate, LatticeSpec};
use curvgraph_core::graph::{VertexFunction, WeightedGraph};
use curvgraph_core::semigroup::{
    harnack_check, positive_test_functions, random_test_functions, spectrum as laplace_spectrum,
    trace_g_monotone, verify_decay_bounds, verify_exponential_gradient_estimate,
    verify_linear_gradient_estimate, verify_quadratic_gradient_estimate, VerificationTrace,
    DEFAULT_TOLERANCE,
};
use curvgraph_core::transport::{
    curvature_bounds_from_defect, defect as transport_defect, TransportCertificate,
};
use curvgraph_core::{CurvatureResult, SandwichResult, Value};

use crate::report::{csv_row, emit, load_graph, print_line, CsvField};
use crate::{
    resolve_seed, CurvatureArgs, DefectArgs, Failure, Family, Format, GenArgs, SpectrumArgs,
    Theorem, VariantArg, VerifyArgs,
};

impl From<curvgraph_core::CurvatureError> for Failure {
    fn from(e: curvgraph_core::CurvatureError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<curvgraph_core::SemigroupError> for Failure {
    fn from(e: curvgraph_core::SemigroupError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn split_two(raw: &str, what: &str) -> Result<(String, String), Failure> {
    match raw.split_once(',') {
        Some((a, b)) => Ok((a.trim().to_string(), b.trim().to_string())),
        None => Err(Failure::Input(format!("{what} must be two comma-separated values, got {raw:?}"))),
    }
}

fn parse_usize(raw: &str, what: &str) -> Result<usize, Failure> {
    raw.parse()
        .map_err(|_| Failure::Input(format!("{what} must be an unsigned integer, got {raw:?}")))
}

fn parse_pair_spec(raw: &str) -> Result<(usize, usize), Failure> {
    let (a, b) = split_two(raw, "--pair")?;
    Ok((parse_usize(&a, "--pair")?, parse_usize(&b, "--pair")?))
}

/// Every ordered pair with `0 < d(x, y) <= radius`, in lexicographic order.
fn ordered_pairs(g: &WeightedGraph, radius: u32) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for x in g.vertices() {
        for y in g.vertices() {
            if x != y && matches!(g.distance(x, y), Some(d) if d <= radius) {
                pairs.push((x, y));
            }
        }
    }
    pairs
}

fn select_pairs(
    g: &WeightedGraph,
    radius: u32,
    pair: &Option<String>,
    all_pairs: bool,
) -> Result<Vec<(usize, usize)>, Failure> {
    match (pair, all_pairs) {
        (Some(raw), false) => Ok(vec![parse_pair_spec(raw)?]),
        (None, true) => Ok(ordered_pairs(g, radius)),
        _ => Err(Failure::Input("pass --pair X,Y or --all-pairs".to_string())),
    }
}

fn witness_json(w: &Option<VertexFunction>) -> Json {
    match w {
        Some(f) => json!(f.values()),
        None => Json::Null,
    }
}

pub fn gen(args: GenArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    let spec = match args.family {
        Family::HexTorus | Family::SquareTorus => {
            let (w, h) = split_two(&args.size, "--size")?;
            let width = parse_usize(&w, "--size")?;
            let height = parse_usize(&h, "--size")?;
            if args.family == Family::HexTorus {
                LatticeSpec::HexTorus { width, height }
            } else {
                LatticeSpec::SquareTorus { width, height }
            }
        }
        Family::Cycle => LatticeSpec::Cycle { n: parse_usize(&args.size, "--size")? },
        Family::Path => LatticeSpec::Path { n: parse_usize(&args.size, "--size")? },
        Family::Complete => LatticeSpec::Complete { n: parse_usize(&args.size, "--size")? },
        Family::Star => LatticeSpec::Star { leaves: parse_usize(&args.size, "--size")? },
        Family::Tree => LatticeSpec::Tree { n: parse_usize(&args.size, "--size")? },
        Family::Gnp => {
            let (n, p) = split_two(&args.size, "--size")?;
            let n = parse_usize(&n, "--size")?;
            let p: f64 = p
                .parse()
                .map_err(|_| Failure::Input(format!("--size: edge probability {p:?} is not a number")))?;
            LatticeSpec::Gnp { n, p, seed }
        }
    };
    let generated = generate(&spec).map_err(|e| Failure::Input(e.to_string()))?;
    let rendered = format!("{}\n", generated.graph.to_canonical_json());
    match args.out {
        Some(path) => std::fs::write(&path, rendered)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        None => print_line(rendered.trim_end()),
    }
    Ok(())
}

fn exact_result_json(res: &CurvatureResult, include_witness: bool) -> Json {
    let mut body = json!({
        "x": res.x,
        "y": res.y,
        "value": res.value.to_json(),
        "kind": res.kind.as_str(),
    });
    if include_witness {
        let map = body.as_object_mut().expect("object");
        map.insert("witness".into(), witness_json(&res.witness));
        map.insert("support".into(), json!(res.support));
    }
    body
}

fn sandwich_json(res: &SandwichResult, include_witness: bool) -> Json {
    let mut body = json!({
        "x": res.x,
        "y": res.y,
        "lower": res.lower.to_json(),
        "upper": res.upper.to_json(),
        "gap": res.gap,
        "truncated_support": res.truncated_support,
        "converged": res.converged,
        "diagnostics": serde_json::to_value(&res.diagnostics).expect("serializable"),
    });
    if include_witness {
        let map = body.as_object_mut().expect("object");
        map.insert("witness".into(), witness_json(&res.witness));
        map.insert("support".into(), json!(res.support));
    }
    body
}

fn value_field(v: Value) -> CsvField {
    match v {
        Value::Finite(x) => CsvField::Float(x),
        Value::NegInfinity => CsvField::Text("-inf".to_string()),
    }
}

pub fn curvature(args: CurvatureArgs) -> Result<(), Failure> {
    let g = load_graph(&args.graph)?;
    let seed = resolve_seed(args.seed)?;
    if args.variant == VariantArg::Ollivier && args.radius != 1 {
        return Err(Failure::Input(
            "the edge curvature is a scale-1 quantity; leave --radius at 1".to_string(),
        ));
    }
    let pairs = select_pairs(&g, args.radius, &args.pair, args.all_pairs)?;
    let include_witness = args.pair.is_some();
    let mut cfg = OptimizerConfig { seed, ..OptimizerConfig::default() };
    if let Some(r) = args.restarts {
        cfg.restarts = r;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }

    enum Row {
        Exact(CurvatureResult),
        Sandwich(SandwichResult),
    }
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|&(x, y)| -> Result<Row, Failure> {
            Ok(match args.variant {
                VariantArg::Linear => Row::Exact(k_linear(&g, x, y, args.radius)?),
                VariantArg::Ollivier => Row::Exact(k_ollivier(&g, x, y)?),
                VariantArg::Quadratic => {
                    Row::Sandwich(k_quadratic_estimate(&g, x, y, args.radius, &cfg)?)
                }
                VariantArg::Exponential => {
                    Row::Sandwich(k_exponential_estimate(&g, x, y, args.radius, &cfg)?)
                }
            })
        })
        .collect::<Result<_, _>>()?;

    match args.format {
        Format::Json => {
            let results: Vec<Json> = rows
                .iter()
                .map(|row| match row {
                    Row::Exact(r) => exact_result_json(r, include_witness),
                    Row::Sandwich(r) => sandwich_json(r, include_witness),
                })
                .collect();
            let echo = json!({
                "graph": args.graph,
                "variant": variant_name(args.variant),
                "radius": args.radius,
                "all_pairs": args.all_pairs,
                "pair": args.pair,
                "seed": seed,
                "restarts": cfg.restarts,
                "max_iters": cfg.max_iters,
            });
            emit("curvature", echo, &g, json!({ "results": results }), "ok");
        }
        Format::Csv => {
            let sandwich = matches!(args.variant, VariantArg::Quadratic | VariantArg::Exponential);
            print_line(if sandwich { "x,y,lower,upper,gap" } else { "x,y,value" });
            for row in &rows {
                let fields = match row {
                    Row::Exact(r) => {
                        vec![CsvField::Int(r.x), CsvField::Int(r.y), value_field(r.value)]
                    }
                    Row::Sandwich(r) => vec![
                        CsvField::Int(r.x),
                        CsvField::Int(r.y),
                        value_field(r.lower),
                        value_field(r.upper),
                        match r.gap {
                            Some(gap) => CsvField::Float(gap),
                            None => CsvField::Text(String::new()),
                        },
                    ],
                };
                print_line(&csv_row(&fields));
            }
        }
    }
    Ok(())
}

/// Certified bounds under a uniform rate `q`: the unit-rate bounds scale
/// linearly. Without a uniform rate the certificate proves nothing.
fn scaled_bounds_json(cert: &TransportCertificate, q: f64) -> Json {
    let bounds = curvature_bounds_from_defect(cert);
    let scale = |v: Value| match v {
        Value::Finite(x) => json!(q * x),
        Value::NegInfinity => json!("-inf"),
    };
    json!({
        "linear": scale(bounds.linear),
        "quadratic": scale(bounds.quadratic),
        "exponential": scale(bounds.exponential),
    })
}

pub fn defect(args: DefectArgs) -> Result<(), Failure> {
    let g = load_graph(&args.graph)?;
    let pairs = select_pairs(&g, args.radius, &args.pair, args.all_pairs)?;
    let rate = g.uniform_rate();
    let certs: Vec<TransportCertificate> = pairs
        .par_iter()
        .map(|&(x, y)| {
            transport_defect(&g, y, x, args.radius).map_err(|e| Failure::Input(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    match args.format {
        Format::Json => {
            let results: Vec<Json> = certs
                .iter()
                .map(|cert| {
                    json!({
                        "x": cert.x,
                        "y": cert.y,
                        "defect": cert.defect.to_json(),
                        "assignment": &cert.assignment,
                        "hall_witness": &cert.hall_witness,
                        "bounds": rate.map(|q| scaled_bounds_json(cert, q)),
                    })
                })
                .collect();
            let echo = json!({
                "graph": args.graph,
                "radius": args.radius,
                "all_pairs": args.all_pairs,
                "pair": args.pair,
                "uniform_rate": rate,
            });
            emit("defect", echo, &g, json!({ "results": results }), "ok");
        }
        Format::Csv => {
            print_line("x,y,defect");
            for cert in &certs {
                print_line(&csv_row(&[
                    CsvField::Int(cert.x),
                    CsvField::Int(cert.y),
                    CsvField::Text(cert.defect.to_string()),
                ]));
            }
        }
    }
    Ok(())
}

fn variant_name(v: VariantArg) -> &'static str {
    match v {
        VariantArg::Linear => "linear",
        VariantArg::Ollivier => "ollivier",
        VariantArg::Quadratic => "quadratic",
        VariantArg::Exponential => "exponential",
    }
}

fn theorem_name(t: Theorem) -> &'static str {
    match t {
        Theorem::Linear => "linear",
        Theorem::Quadratic => "quadratic",
        Theorem::Exponential => "exponential",
        Theorem::Decay => "decay",
        Theorem::Gmono => "gmono",
        Theorem::Harnack => "harnack",
    }
}

enum RateSpec {
    Auto,
    Fixed(f64),
}

fn parse_rate(raw: &str) -> Result<RateSpec, Failure> {
    if raw == "auto" {
        return Ok(RateSpec::Auto);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Failure::Input(format!("--K must be a number or `auto`, got {raw:?}")))?;
    if !v.is_finite() {
        return Err(Failure::Input("--K must be finite".to_string()));
    }
    Ok(RateSpec::Fixed(v))
}

/// Exact linear-curvature minimum over all ordered pairs within the radius,
/// sharpened by the defect certificate when the graph has a uniform rate
/// (the certificate is combinatorially exact where the LP carries rounding).
fn best_linear_lower(g: &WeightedGraph, radius: u32) -> Result<Value, Failure> {
    let pairs = ordered_pairs(g, radius);
    if pairs.is_empty() {
        return Err(Failure::Input("graph has no vertex pairs within the radius".to_string()));
    }
    let values: Vec<Value> = pairs
        .par_iter()
        .map(|&(x, y)| k_linear(g, x, y, radius).map(|r| r.value).map_err(Failure::from))
        .collect::<Result<_, _>>()?;
    let exact = values
        .into_iter()
        .reduce(|a, b| if a.as_f64() <= b.as_f64() { a } else { b })
        .expect("nonempty");
    match (exact, certified_lower_mins(g, radius)?) {
        (Value::Finite(lp), Some((lin, _, _))) => Ok(Value::Finite(lp.max(lin))),
        (v, _) => Ok(v),
    }
}

/// Scaled defect-certificate minima `(linear, quadratic, exponential)` over
/// all ordered pairs, or `None` without a uniform rate.
#[allow(clippy::type_complexity)]
fn certified_lower_mins(
    g: &WeightedGraph,
    radius: u32,
) -> Result<Option<(f64, Value, Value)>, Failure> {
    let Some(q) = g.uniform_rate() else {
        return Ok(None);
    };
    let pairs = ordered_pairs(g, radius);
    if pairs.is_empty() {
        return Err(Failure::Input("graph has no vertex pairs within the radius".to_string()));
    }
    let scale = |v: Value| match v {
        Value::Finite(x) => Value::Finite(q * x),
        Value::NegInfinity => Value::NegInfinity,
    };
    let mut lin = f64::INFINITY;
    let mut quad = Value::Finite(f64::INFINITY);
    let mut expo = Value::Finite(f64::INFINITY);
    let certs: Vec<TransportCertificate> = pairs
        .par_iter()
        .map(|&(x, y)| {
            transport_defect(g, y, x, radius).map_err(|e| Failure::Input(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    for cert in &certs {
        let bounds = curvature_bounds_from_defect(cert);
        lin = lin.min(scale(bounds.linear).as_f64());
        if scale(bounds.quadratic).as_f64() < quad.as_f64() {
            quad = scale(bounds.quadratic);
        }
        if scale(bounds.exponential).as_f64() < expo.as_f64() {
            expo = scale(bounds.exponential);
        }
    }
    Ok(Some((lin, quad, expo)))
}

fn finite_or_err(v: Value, what: &str) -> Result<f64, Failure> {
    v.finite().ok_or_else(|| {
        Failure::Input(format!(
            "{what} is unbounded below at this radius; no finite rate exists, pass --K explicitly"
        ))
    })
}

fn resolve_rate(
    g: &WeightedGraph,
    radius: u32,
    theorem: Theorem,
    spec: RateSpec,
) -> Result<Option<f64>, Failure> {
    if matches!(theorem, Theorem::Harnack) {
        return Ok(None);
    }
    if let RateSpec::Fixed(v) = spec {
        return Ok(Some(v));
    }
    let k = match theorem {
        Theorem::Linear | Theorem::Gmono => {
            finite_or_err(best_linear_lower(g, radius)?, "the linear curvature")?
        }
        Theorem::Quadratic => {
            let (_, quad, _) = certified_lower_mins(g, radius)?.ok_or_else(non_uniform_rate)?;
            finite_or_err(quad, "the certified quadratic bound")?
        }
        Theorem::Exponential => {
            let (_, _, expo) = certified_lower_mins(g, radius)?.ok_or_else(non_uniform_rate)?;
            finite_or_err(expo, "the certified exponential bound")?
        }
        Theorem::Decay => {
            // The entropy form needs a quadratic-variant rate, the flat form
            // a linear one; the smaller certified value covers both.
            let (_, quad, _) = certified_lower_mins(g, radius)?.ok_or_else(non_uniform_rate)?;
            let lin = finite_or_err(best_linear_lower(g, radius)?, "the linear curvature")?;
            lin.min(finite_or_err(quad, "the certified quadratic bound")?)
        }
        Theorem::Harnack => unreachable!("handled above"),
    };
    Ok(Some(k))
}

fn non_uniform_rate() -> Failure {
    Failure::Input(
        "automatic rates for this check need transport certificates, which require a \
         uniform-rate graph; pass --K explicitly"
            .to_string(),
    )
}

fn write_trace_csv(
    path: &std::path::Path,
    trace: &VerificationTrace,
    column: &str,
) -> Result<(), Failure> {
    let mut out = format!("{column},margin\n");
    for (g, m) in trace.grid.iter().zip(&trace.margins) {
        out.push_str(&csv_row(&[CsvField::Float(*g), CsvField::Float(*m)]));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let g = load_graph(&args.graph)?;
    let seed = resolve_seed(args.seed)?;
    let rate_spec = parse_rate(&args.k)?;
    let k = resolve_rate(&g, args.radius, args.theorem, rate_spec)?;
    let ts = curvgraph_core::semigroup::default_time_grid();

    let trace = match args.theorem {
        Theorem::Linear => {
            let fs = random_test_functions(g.n(), args.samples, seed);
            verify_linear_gradient_estimate(
                &g,
                args.radius,
                k.expect("rate resolved"),
                &fs,
                &ts,
                DEFAULT_TOLERANCE,
            )?
        }
        Theorem::Quadratic => {
            let fs = positive_test_functions(g.n(), args.samples, seed);
            verify_quadratic_gradient_estimate(
                &g,
                args.radius,
                k.expect("rate resolved"),
                &fs,
                &ts,
                DEFAULT_TOLERANCE,
            )?
        }
        Theorem::Exponential => {
            let fs = positive_test_functions(g.n(), args.samples, seed);
            verify_exponential_gradient_estimate(
                &g,
                args.radius,
                k.expect("rate resolved"),
                &fs,
                &ts,
                DEFAULT_TOLERANCE,
            )?
        }
        Theorem::Decay => {
            let fs = positive_test_functions(g.n(), args.samples, seed);
            verify_decay_bounds(
                &g,
                args.radius,
                k.expect("rate resolved"),
                &fs,
                &ts,
                DEFAULT_TOLERANCE,
            )?
        }
        Theorem::Gmono => {
            let f = random_test_functions(g.n(), 1, seed).remove(0);
            trace_g_monotone(
                &g,
                args.radius,
                k.expect("rate resolved"),
                &f,
                args.vertex,
                args.time,
                args.steps,
                DEFAULT_TOLERANCE,
            )?
        }
        Theorem::Harnack => harnack_check(&g, args.radius, args.certify, DEFAULT_TOLERANCE)?,
    };

    if let Some(path) = &args.csv {
        let column = match args.theorem {
            Theorem::Gmono => "s",
            Theorem::Harnack => "lambda",
            _ => "t",
        };
        write_trace_csv(path, &trace, column)?;
    }

    let echo = json!({
        "graph": args.graph,
        "theorem": theorem_name(args.theorem),
        "radius": args.radius,
        "k": args.k,
        "k_value": k,
        "seed": seed,
        "samples": args.samples,
        "certify": args.certify,
    });
    let status = if trace.verdict { "pass" } else { "fail" };
    let body = json!({ "trace": serde_json::to_value(&trace).expect("serializable") });
    emit("verify", echo, &g, body, status);
    if trace.verdict {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

pub fn spectrum(args: SpectrumArgs) -> Result<(), Failure> {
    let g = load_graph(&args.graph)?;
    let eigenvalues = laplace_spectrum(&g);
    match args.format {
        Format::Json => {
            let echo = json!({ "graph": args.graph });
            emit("spectrum", echo, &g, json!({ "eigenvalues": eigenvalues }), "ok");
        }
        Format::Csv => {
            print_line("index,eigenvalue");
            for (i, lambda) in eigenvalues.iter().enumerate() {
                print_line(&format!("{i},{}", fmt_float(*lambda)));
            }
        }
    }
    Ok(())
}
