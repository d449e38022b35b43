//! `hhs`: audits, combinations, graph products and probes from JSON inputs.
//!
//! Exit status: 0 when every check passes, 1 on a hypothesis failure (with a
//! witness on stdout), 2 when an input does not parse against its schema.

mod examples;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hhs::audit::{audit_axioms, AuditOptions};
use hhs::graph::{build, GraphError, ProductSpec, ProductSpecJson};
use hhs::model::{HHSModel, ModelJson};
use hhs::probe::theorem_b_probe;
use hhs::regions::{distance_formula_fit, realize, ConsistentTuple, HieroJson, Hieromorphism};
use hhs::tree::{audit_combined, build_combined, decorate, CombineOptions, TreeError, TreeJson, TreeOfHHS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hhs", version, about = "Finite hierarchically hyperbolic models: audits, combinations and probes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Window radius for fixtures and graph products.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Largest clipping threshold for `distance-formula`.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    s: u32,
    /// Seed for the randomized realization round trip of `audit`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Decorate trees with at most this many parallel copies per element.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    copy_cap: Option<u64>,
    /// Directory receiving `report.json` and one `.dot` file per rendering.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Audit the axioms of a model.
    Audit { file: PathBuf },
    /// Combine a tree of models and audit the result.
    Combine { file: PathBuf },
    /// Build a graph product and its certificate chain.
    Product { file: PathBuf },
    /// Fit the distance formula for every threshold up to `--s`.
    DistanceFormula { file: PathBuf },
    /// Measure the five conditions for a map between two models.
    ProbeTheoremB { file: PathBuf },
    /// Run a shipped fixture and its checks.
    Examples {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(hhs::fixtures::NAMES))]
        name: String,
    },
}

/// Input of `probe-theorem-b`.
#[derive(Serialize, Deserialize)]
struct ProbeInput {
    source: ModelJson,
    target: ModelJson,
    map: HieroJson,
}

pub struct Outcome {
    pub header: String,
    pub pass: bool,
    pub report: Value,
    pub dots: Vec<(String, String)>,
}

pub enum Failure {
    Schema(String),
    Hypothesis { error: String, witness: Value },
}

impl Failure {
    pub fn hypothesis<E: Display + Serialize>(e: E) -> Failure {
        Failure::Hypothesis { error: e.to_string(), witness: serde_json::to_value(&e).unwrap_or(Value::Null) }
    }

    fn schema(e: impl Display) -> Failure {
        Failure::Schema(e.to_string())
    }
}

fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn model(path: &Path) -> Result<HHSModel, Failure> {
    HHSModel::from_json(&read::<ModelJson>(path)?).map_err(Failure::schema)
}

fn audit(cli: &Cli, path: &Path) -> Result<Outcome, Failure> {
    let m = model(path)?;
    let report = audit_axioms(&m);
    let mut pass = report.pass();
    let mut out = json!({ "audit": report });
    if let Some(seed) = cli.seed {
        // realize the tuple of random points; each must come back with no defect
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for _ in 0..m.n_points().min(32) {
            let x = rng.gen_range(0..m.n_points());
            let back = realize(&m, &ConsistentTuple::of_point(&m, x, 0));
            let ok = matches!(back, Ok((_, 0)));
            pass &= ok;
            rows.push(json!({
                "point": m.space.label(x),
                "realized": back.as_ref().ok().map(|&(y, _)| m.space.label(y)),
                "defect": back.as_ref().ok().map(|&(_, d)| d),
                "pass": ok,
            }));
        }
        out["realize_sample"] = json!({ "seed": seed, "rows": rows });
    }
    Ok(Outcome {
        header: format!("Axiom audit of {}", m.name),
        pass,
        report: out,
        dots: vec![("space".into(), m.space.to_dot(&m.name)), ("lattice".into(), m.lattice.to_dot(&m.name))],
    })
}

fn combine(cli: &Cli, path: &Path) -> Result<Outcome, Failure> {
    let mut t = TreeOfHHS::from_json(&read::<TreeJson>(path)?).map_err(|e| match e {
        TreeError::Malformed(_) | TreeError::NotATree(_) => Failure::schema(e),
        other => Failure::hypothesis(other),
    })?;
    if let Some(k) = cli.copy_cap {
        t = decorate(&t, k as usize);
    }
    let c = build_combined(&t, &CombineOptions::default()).map_err(Failure::hypothesis)?;
    let audit = audit_combined(&c, AuditOptions::default());
    Ok(Outcome {
        header: format!("Combination of {}", t.name),
        pass: audit.pass,
        report: json!({ "combined": c.to_json(), "audit": audit }),
        dots: c.dots(),
    })
}

fn product(cli: &Cli, path: &Path) -> Result<Outcome, Failure> {
    let mut spec = ProductSpec::from_json(&read::<ProductSpecJson>(path)?).map_err(|e| match e {
        GraphError::Malformed(_) | GraphError::MissingBase(_) | GraphError::NotSimplicial(_) => Failure::schema(e),
        other => Failure::hypothesis(other),
    })?;
    if let Some(r) = cli.radius {
        spec.window_radius = r;
    }
    if let Some(k) = cli.copy_cap {
        spec.copy_cap = k as usize;
    }
    let g = build(&spec).map_err(Failure::hypothesis)?;
    let mut dots = vec![("lattice".into(), g.model.lattice.to_dot(&g.model.name))];
    if let Some(c) = &g.combined {
        dots = c.dots();
    }
    Ok(Outcome {
        header: format!("Graph product over {}", spec.vertices.join(",")),
        pass: g.chain.pass(),
        report: json!({
            "points": g.model.n_points(),
            "elements": g.model.n_elements(),
            "lattice": g.model.lattice.to_json(),
            "chain": g.chain,
        }),
        dots,
    })
}

fn distance_formula(cli: &Cli, path: &Path) -> Result<Outcome, Failure> {
    let m = model(path)?;
    let rows: Vec<Value> = (1..=cli.s)
        .map(|s| {
            let f = distance_formula_fit(&m, s);
            json!({ "s": s, "k": f.k, "c": f.c, "worst": f.worst })
        })
        .collect();
    let pass = rows.iter().all(|r| r["k"].as_f64().is_some_and(f64::is_finite));
    Ok(Outcome { header: format!("Distance formula fit for {}", m.name), pass, report: json!({ "fits": rows }), dots: vec![] })
}

fn probe(path: &Path) -> Result<Outcome, Failure> {
    let input: ProbeInput = read(path)?;
    let src = HHSModel::from_json(&input.source).map_err(Failure::schema)?;
    let tgt = HHSModel::from_json(&input.target).map_err(Failure::schema)?;
    let phi = Hieromorphism::from_json(&input.map, &src, &tgt).map_err(Failure::schema)?;
    let r = theorem_b_probe(&src, &tgt, &phi).map_err(|e| {
        let witness = match &e {
            hhs::probe::ProbeError::NotFull(v) => json!({ "violations": v }),
            hhs::probe::ProbeError::NotHQC(hq) => json!({ "hq": hq }),
        };
        Failure::Hypothesis { error: e.to_string(), witness }
    })?;
    Ok(Outcome {
        header: format!("Map from {} into {}", src.name, tgt.name),
        pass: r.eta_ok && r.rho_ok,
        report: serde_json::to_value(&r).expect("report serializes"),
        dots: vec![],
    })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.cmd {
        Cmd::Audit { file } => audit(cli, file),
        Cmd::Combine { file } => combine(cli, file),
        Cmd::Product { file } => product(cli, file),
        Cmd::DistanceFormula { file } => distance_formula(cli, file),
        Cmd::ProbeTheoremB { file } => probe(file),
        Cmd::Examples { name } => examples::run(name, cli.radius, cli.copy_cap.map(|k| k as usize)),
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_out(dir: &Path, doc: &Value, dots: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(doc)? + "\n")?;
    for (i, (name, dot)) in dots.iter().enumerate() {
        std::fs::write(dir.join(format!("{i:02}-{}.dot", file_stem(name))), dot)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (doc, dots, code) = match run(&cli) {
        Ok(o) => {
            let status = if o.pass { "pass" } else { "fail" };
            let doc = json!({ "header": o.header, "status": status, "report": o.report });
            (doc, o.dots, if o.pass { 0 } else { 1 })
        }
        Err(Failure::Hypothesis { error, witness }) => {
            (json!({ "status": "hypothesis-failure", "error": error, "witness": witness }), vec![], 1)
        }
        Err(Failure::Schema(e)) => {
            eprintln!("{}", json!({ "status": "schema-error", "error": e }));
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &cli.out {
        if let Err(e) = write_out(dir, &doc, &dots) {
            eprintln!("{}", json!({ "status": "io-error", "error": e.to_string() }));
            return ExitCode::from(2);
        }
    }
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes")),
        Format::Dot if dots.is_empty() => println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes")),
        Format::Dot => {
            for (_, dot) in &dots {
                println!("{dot}");
            }
        }
    }
    ExitCode::from(code)
}
