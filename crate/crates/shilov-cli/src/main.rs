//! Command-line front end: classify boundary triples and pairs, emit
//! standard representatives and orbit enumerations, reduce matrix triples to
//! the torus with a witness, and run the deterministic selftest suites.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use shilov::invariants::cartan_invariant;
use shilov::polydisc::circle_maslov;
use shilov::{
    direct_invariants, embed_torus, enumerate_orbits, pair_class, reduce_to_torus, standard_triple,
    to_monotone_tuple, torus_invariants, transversality_index, BoundaryMatrix, Error, Flavor,
    MoebiusElement, MonotoneTuple, OrbitInvariant, TorusPoint, Turn,
};

type C64 = Complex<f64>;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Polydisc,
    Symmetric,
    Hermitian,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Flavor {
        match f {
            FlavorArg::Polydisc => Flavor::Polydisc,
            FlavorArg::Symmetric => Flavor::Symmetric,
            FlavorArg::Hermitian => Flavor::Hermitian,
        }
    }
}

#[derive(Parser)]
#[command(name = "shilov", version, about = "Orbit classification of triples on matrix Shilov boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Tolerance for rank and residual decisions
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a triple of boundary matrices or torus points into its orbit
    ClassifyTriple {
        /// JSON input file ('-' for stdin) with {"matrices":[..]} or {"points":[..]}
        #[arg(long)]
        input: Option<PathBuf>,
        /// Inline JSON with the same schema as --input
        #[arg(long)]
        json: Option<String>,
        /// Torus point as comma-separated turns (repeat three times)
        #[arg(long = "point")]
        points: Vec<String>,
        /// Include the group witness and the reduced torus points (matrix input)
        #[arg(long)]
        witness: bool,
    },
    /// Classify a pair of boundary matrices or torus points
    ClassifyPair {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: Option<String>,
        /// Torus point as comma-separated turns (repeat twice)
        #[arg(long = "point")]
        points: Vec<String>,
    },
    /// Emit the standard representative triple of an orbit type
    Standard {
        /// Orbit tuple as five comma-separated integers, e.g. 0,0,0,0,1
        #[arg(long)]
        tuple: String,
        #[arg(long)]
        rank: usize,
        /// Also embed the triple as boundary matrices of this flavor
        #[arg(long, value_enum)]
        flavor: Option<FlavorArg>,
    },
    /// List every orbit tuple of a given rank with its invariant
    Enumerate {
        #[arg(long)]
        rank: usize,
    },
    /// Reduce a matrix triple to the torus and print the witness
    Reduce {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: Option<String>,
    },
    /// Maslov index of three circle points given as turns
    Maslov {
        /// Three turns, e.g. 0/1 1/2 3/4
        turns: Vec<String>,
    },
    /// Cross-ratio invariant of three isotropic lines for the (n,1) form
    Cartan {
        /// JSON input file ('-' for stdin) with {"vectors":[{"re":[..],"im":[..]},..]}
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: Option<String>,
    },
    /// Run every acceptance suite with a fixed seed
    Selftest {
        #[arg(long, default_value_t = 0x5155_AD1C)]
        seed: u64,
    },
}

#[derive(Deserialize)]
struct TripleInput {
    #[serde(default)]
    matrices: Option<Vec<BoundaryMatrix>>,
    #[serde(default)]
    points: Option<Vec<TorusPoint>>,
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Deserialize)]
struct CartanInput {
    vectors: Vec<VectorRepr>,
}

fn read_input(input: &Option<PathBuf>, inline: &Option<String>) -> Result<String, Error> {
    match (input, inline) {
        (Some(_), Some(_)) => Err(Error::Parse("give either --input or --json, not both".into())),
        (None, Some(s)) => Ok(s.clone()),
        (Some(p), None) if p.as_os_str() == "-" => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Parse(format!("stdin: {}", e)))?;
            Ok(s)
        }
        (Some(p), None) => std::fs::read_to_string(p)
            .map_err(|e| Error::Parse(format!("{}: {}", p.display(), e))),
        (None, None) => Err(Error::Parse("no input: pass --input, --json, or --point".into())),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, Error> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_point(s: &str) -> Result<TorusPoint, Error> {
    let turns = s.split(',').map(Turn::parse).collect::<Result<Vec<_>, _>>()?;
    if turns.is_empty() {
        return Err(Error::Parse("empty torus point".into()));
    }
    Ok(TorusPoint::new(turns))
}

fn parse_tuple(s: &str) -> Result<MonotoneTuple, Error> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| Error::Parse(format!("tuple entry '{}': {}", p, e))))
        .collect::<Result<Vec<_>, _>>()?;
    let arr: [usize; 5] = parts
        .try_into()
        .map_err(|v: Vec<usize>| Error::Parse(format!("expected 5 tuple entries, got {}", v.len())))?;
    MonotoneTuple::new(arr)
}

fn fixed<const N: usize, T: Clone>(v: Vec<T>, what: &str) -> Result<[T; N], Error> {
    let len = v.len();
    v.try_into()
        .map_err(|_| Error::Parse(format!("expected {} {}, got {}", N, what, len)))
}

fn fmt_point(p: &TorusPoint) -> String {
    let parts: Vec<String> = p.turns().iter().map(|t| t.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn fmt_invariant(inv: &OrbitInvariant) -> String {
    format!(
        "r={} n12={} n23={} n31={} n123={} iota={}",
        inv.r, inv.n12, inv.n23, inv.n31, inv.n123, inv.iota
    )
}

fn fmt_tuple(n: &MonotoneTuple) -> String {
    let e = n.entries();
    format!("N = ({},{},{},{},{})", e[0], e[1], e[2], e[3], e[4])
}

fn fmt_matrix(m: &nalgebra::DMatrix<C64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:+.6}{:+.6}i", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str("  [");
        out.push_str(&row.join("  "));
        out.push_str("]\n");
    }
    out
}

/// (JSON value, text rendering) pair every command produces.
struct Report {
    value: serde_json::Value,
    text: String,
}

fn classify_triple(
    input: Option<PathBuf>,
    inline: Option<String>,
    points: Vec<String>,
    witness: bool,
    tol: f64,
) -> Result<Report, Error> {
    let (invariant, source, witness_part): (OrbitInvariant, &str, Option<(MoebiusElement, [TorusPoint; 3])>) =
        if !points.is_empty() {
            let pts: Vec<TorusPoint> = points.iter().map(|s| parse_point(s)).collect::<Result<_, _>>()?;
            let [p1, p2, p3] = fixed::<3, _>(pts, "torus points")?;
            (torus_invariants(&p1, &p2, &p3)?, "torus", None)
        } else {
            let parsed: TripleInput = parse_json(&read_input(&input, &inline)?)?;
            if let Some(pts) = parsed.points {
                let [p1, p2, p3] = fixed::<3, _>(pts, "torus points")?;
                (torus_invariants(&p1, &p2, &p3)?, "torus", None)
            } else if let Some(ms) = parsed.matrices {
                let [u1, u2, u3] = fixed::<3, _>(ms, "boundary matrices")?;
                let flavor = u1.flavor();
                let inv = direct_invariants(flavor, &u1, &u2, &u3, tol)?;
                let w = if witness {
                    let (g, pts) = reduce_to_torus(flavor, &u1, &u2, &u3, tol)?;
                    Some((g, pts))
                } else {
                    None
                };
                (inv, "matrix", w)
            } else {
                return Err(Error::Parse("input needs a 'matrices' or 'points' field".into()));
            }
        };

    let tuple = to_monotone_tuple(&invariant)?;
    let (s1, s2, s3) = standard_triple(&tuple, invariant.r)?;

    let mut value = json!({
        "source": source,
        "invariant": invariant,
        "tuple": tuple,
        "standard": [s1, s2, s3],
    });
    let mut text = format!(
        "invariant: {}\n{}\nstandard triple: {} {} {}\n",
        fmt_invariant(&invariant),
        fmt_tuple(&tuple),
        fmt_point(&s1),
        fmt_point(&s2),
        fmt_point(&s3)
    );
    if let Some((g, pts)) = witness_part {
        text.push_str(&format!(
            "reduced points: {} {} {}\nwitness:\n{}",
            fmt_point(&pts[0]),
            fmt_point(&pts[1]),
            fmt_point(&pts[2]),
            fmt_matrix(g.matrix())
        ));
        value["reduced"] = json!(pts.to_vec());
        value["witness"] = json!(g);
    }
    Ok(Report { value, text })
}

fn classify_pair(
    input: Option<PathBuf>,
    inline: Option<String>,
    points: Vec<String>,
    tol: f64,
) -> Result<Report, Error> {
    let (mu, r) = if !points.is_empty() {
        let pts: Vec<TorusPoint> = points.iter().map(|s| parse_point(s)).collect::<Result<_, _>>()?;
        let [p, q] = fixed::<2, _>(pts, "torus points")?;
        if p.rank() != q.rank() {
            return Err(Error::DimensionMismatch("pair must share rank".into()));
        }
        let mu = p.turns().iter().zip(q.turns()).filter(|(a, b)| a == b).count();
        (mu, p.rank())
    } else {
        let parsed: TripleInput = parse_json(&read_input(&input, &inline)?)?;
        let ms = parsed.matrices.ok_or_else(|| Error::Parse("input needs a 'matrices' field".into()))?;
        let [u, v] = fixed::<2, _>(ms, "boundary matrices")?;
        (transversality_index(&u, &v, tol)?, u.n())
    };
    let class = pair_class(mu, r)?;
    let text = format!(
        "mu = {} of rank {}  transversal: {}\nclass: {}\nrepresentative second point: {}\n",
        class.mu,
        class.r,
        class.transversal,
        class.label,
        fmt_point(&class.representative)
    );
    Ok(Report { value: json!({ "mu": mu, "class": class }), text })
}

fn cmd_standard(tuple: String, rank: usize, flavor: Option<FlavorArg>) -> Result<Report, Error> {
    let n = parse_tuple(&tuple)?;
    let (x1, x2, x3) = standard_triple(&n, rank)?;
    let inv = torus_invariants(&x1, &x2, &x3)?;
    let mut value = json!({
        "tuple": n,
        "rank": rank,
        "points": [x1, x2, x3],
        "invariant": inv,
    });
    let mut text = format!(
        "{} at rank {}\npoints: {} {} {}\ninvariant: {}\n",
        fmt_tuple(&n),
        rank,
        fmt_point(&x1),
        fmt_point(&x2),
        fmt_point(&x3),
        fmt_invariant(&inv)
    );
    if let Some(f) = flavor {
        let flavor: Flavor = f.into();
        let ms: Vec<BoundaryMatrix> = [&x1, &x2, &x3]
            .iter()
            .map(|p| embed_torus(flavor, p))
            .collect::<Result<_, _>>()?;
        for (k, m) in ms.iter().enumerate() {
            text.push_str(&format!("matrix {} ({}):\n{}", k + 1, flavor, fmt_matrix(m.matrix())));
        }
        value["matrices"] = json!(ms);
    }
    Ok(Report { value, text })
}

fn cmd_enumerate(rank: usize) -> Result<Report, Error> {
    if rank == 0 {
        return Err(Error::OutOfRange("rank must be at least 1".into()));
    }
    let tuples = enumerate_orbits(rank);
    let mut rows = Vec::with_capacity(tuples.len());
    let mut text = format!("{} orbits at rank {}\n", tuples.len(), rank);
    for n in &tuples {
        let (x1, x2, x3) = standard_triple(n, rank)?;
        let inv = torus_invariants(&x1, &x2, &x3)?;
        text.push_str(&format!("{:24} {}\n", fmt_tuple(n), fmt_invariant(&inv)));
        rows.push(json!({ "tuple": n, "invariant": inv }));
    }
    Ok(Report { value: json!({ "rank": rank, "count": tuples.len(), "orbits": rows }), text })
}

fn cmd_reduce(input: Option<PathBuf>, inline: Option<String>, tol: f64) -> Result<Report, Error> {
    let parsed: TripleInput = parse_json(&read_input(&input, &inline)?)?;
    let ms = parsed.matrices.ok_or_else(|| Error::Parse("input needs a 'matrices' field".into()))?;
    let [u1, u2, u3] = fixed::<3, _>(ms, "boundary matrices")?;
    let flavor = u1.flavor();
    let (g, pts) = reduce_to_torus(flavor, &u1, &u2, &u3, tol)?;
    let inv = torus_invariants(&pts[0], &pts[1], &pts[2])?;
    let text = format!(
        "reduced points: {} {} {}\ninvariant: {}\nwitness:\n{}",
        fmt_point(&pts[0]),
        fmt_point(&pts[1]),
        fmt_point(&pts[2]),
        fmt_invariant(&inv),
        fmt_matrix(g.matrix())
    );
    Ok(Report {
        value: json!({ "points": pts.to_vec(), "invariant": inv, "witness": g }),
        text,
    })
}

fn cmd_maslov(turns: Vec<String>) -> Result<Report, Error> {
    let ts: Vec<Turn> = turns.iter().map(|s| Turn::parse(s)).collect::<Result<_, _>>()?;
    let [a, b, c] = fixed::<3, _>(ts, "turns")?;
    let m = circle_maslov(a, b, c);
    Ok(Report {
        value: json!({ "turns": [a.to_string(), b.to_string(), c.to_string()], "maslov": m }),
        text: format!("maslov({}, {}, {}) = {}\n", a, b, c, m),
    })
}

fn cmd_cartan(input: Option<PathBuf>, inline: Option<String>, tol: f64) -> Result<Report, Error> {
    let parsed: CartanInput = parse_json(&read_input(&input, &inline)?)?;
    let vs: Vec<DVector<C64>> = parsed
        .vectors
        .iter()
        .map(|v| {
            if v.re.len() != v.im.len() {
                return Err(Error::Parse("re/im lengths differ".into()));
            }
            Ok(DVector::from_fn(v.re.len(), |i, _| C64::new(v.re[i], v.im[i])))
        })
        .collect::<Result<_, _>>()?;
    let [v1, v2, v3] = fixed::<3, _>(vs, "vectors")?;
    let f = cartan_invariant(&v1, &v2, &v3, tol)?;
    Ok(Report {
        value: json!({ "re": f.re, "im": f.im, "modulus": f.norm() }),
        text: format!("F = {:+.12}{:+.12}i  (|F| = {:.12})\n", f.re, f.im, f.norm()),
    })
}

fn cmd_selftest(seed: u64) -> Result<Report, Error> {
    let reports = shilov::selftest::run_all(seed);
    let mut text = format!("selftest seed {:#x}\n", seed);
    let mut rows = Vec::with_capacity(reports.len());
    let mut all = true;
    for (i, r) in reports.iter().enumerate() {
        all &= r.passed;
        text.push_str(&format!(
            "suite {} [{}]: {} — {}\n",
            i + 1,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        ));
        rows.push(json!({ "name": r.name, "passed": r.passed, "detail": r.detail }));
    }
    text.push_str(if all { "all suites passed\n" } else { "some suites FAILED\n" });
    Ok(Report { value: json!({ "seed": seed, "passed": all, "suites": rows }), text })
}

fn print_report(report: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report.value).unwrap()),
        Format::Text => print!("{}", report.text),
    }
}

fn run(cli: Cli) -> Result<Report, Error> {
    match cli.command {
        Command::ClassifyTriple { input, json, points, witness } => {
            classify_triple(input, json, points, witness, cli.tol)
        }
        Command::ClassifyPair { input, json, points } => classify_pair(input, json, points, cli.tol),
        Command::Standard { tuple, rank, flavor } => cmd_standard(tuple, rank, flavor),
        Command::Enumerate { rank } => cmd_enumerate(rank),
        Command::Reduce { input, json } => cmd_reduce(input, json, cli.tol),
        Command::Maslov { turns } => cmd_maslov(turns),
        Command::Cartan { input, json } => cmd_cartan(input, json, cli.tol),
        Command::Selftest { seed } => cmd_selftest(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{}", e);
            return ExitCode::from(3);
        }
        Err(e) => {
            // --help / --version
            print!("{}", e);
            return ExitCode::SUCCESS;
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(report) => {
            print_report(&report, format);
            // selftest signals suite failure through its exit code
            if report.value.get("passed") == Some(&serde_json::Value::Bool(false)) {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            if format == Format::Json {
                println!("{}", json!({ "error": { "code": e.code(), "message": e.to_string() } }));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
