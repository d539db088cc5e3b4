//! JSON report front end for the reflection-representation library.
//!
//! Every subcommand reads JSON documents (Coxeter matrices, representation
//! data, or explicit matrices), runs one stage of the pipeline, and emits a
//! single JSON report on stdout or to `--out`.  Exit codes: 0 on success,
//! 1 on domain errors (invalid or inconsistent mathematical input), 2 on
//! usage errors (bad flags, unreadable files).

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use reflrep::analysis::{
    dual_datum, dual_representation, invariant_form_construct, invariant_form_exists_theorem,
    invariant_form_oracle, is_irreducible_ggr, matrix_a, FormKind, StructureError,
};
use reflrep::coxeter::{coxeter_graph, CoxeterError, CoxeterMatrix};
use reflrep::factor::{
    enumerate_admissible, factor_reflection_rep, quotient_group, FactorError,
    GeneratorPartition,
};
use reflrep::ggr::{
    cmat_to_pairs, intertwining_residual, parse_representation_matrices, verify_relations,
    CheckKind, GgrDatum, GgrError, Representation,
};
use reflrep::homology::{connected_components, evaluate_on_path, spanning_forest, HomologyError};
use reflrep::linalg::{in_span, orthonormalize, re64, CMat};
use reflrep::Settings;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

#[derive(Parser)]
#[command(
    name = "reflrep",
    version,
    about = "Build, classify, and analyze reflection representations of Coxeter groups"
)]
struct Cli {
    /// Numerical tolerance for rank decisions and residual checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Largest rotation order searched when recognizing rational angles.
    #[arg(long = "max-m", global = true, default_value_t = 60)]
    max_m: u32,

    /// Seed echoed into reports that describe randomized runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Circuit basis and components of the Coxeter graph of a system.
    Homology { file: PathBuf },
    /// Build generator matrices from a representation datum.
    Build { file: PathBuf },
    /// Check involutions, braid relations, and reflection shape.
    Verify { file: PathBuf },
    /// Decide whether two data over the same system are isomorphic.
    Classify { first: PathBuf, second: PathBuf },
    /// Coupling matrix, determinant, rank, fixed space, irreducibility.
    Analyze { file: PathBuf },
    /// Invariant bilinear and sesquilinear forms: criterion, oracle, matrix.
    Forms { file: PathBuf },
    /// Dual representation: dual datum when semisimple, span report otherwise.
    Dual { file: PathBuf },
    /// Admissible generator partitions with their quotient systems.
    Partitions { file: PathBuf },
    /// Factor explicit reflection matrices through a quotient system.
    Factor { file: PathBuf },
    /// Reproduce the worked examples as one report.
    Demo,
}

enum CliError {
    Usage(String),
    Domain(String),
}

impl From<GgrError> for CliError {
    fn from(e: GgrError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CoxeterError> for CliError {
    fn from(e: CoxeterError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<StructureError> for CliError {
    fn from(e: StructureError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<FactorError> for CliError {
    fn from(e: FactorError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<HomologyError> for CliError {
    fn from(e: HomologyError) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let mut text =
                serde_json::to_string_pretty(&report).expect("reports are serializable");
            text.push('\n');
            match &cli.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        process::exit(2);
                    }
                }
                None => print!("{text}"),
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            process::exit(2);
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            process::exit(1);
        }
    }
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let settings = settings_from(cli)?;
    match &cli.command {
        Command::Homology { file } => homology_report(&read(file)?),
        Command::Build { file } => build_report(&read(file)?),
        Command::Verify { file } => verify_report(&read(file)?, &settings),
        Command::Classify { first, second } => {
            classify_report(&read(first)?, &read(second)?, &settings)
        }
        Command::Analyze { file } => analyze_report(&read(file)?, &settings),
        Command::Forms { file } => forms_report(&read(file)?, &settings),
        Command::Dual { file } => dual_report(&read(file)?, &settings),
        Command::Partitions { file } => partitions_report_from(&read(file)?),
        Command::Factor { file } => factor_report(&read(file)?, &settings),
        Command::Demo => demo_report(cli, &settings),
    }
}

fn settings_from(cli: &Cli) -> Result<Settings, CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    if cli.max_m < 3 {
        return Err(CliError::Usage(format!(
            "--max-m must be at least 3, got {}",
            cli.max_m
        )));
    }
    Ok(Settings { tol: cli.tol, angle_max_m: cli.max_m })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn cpx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn names(m: &CoxeterMatrix, indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| m.generator_name(i).to_string()).collect()
}

fn homology_report(text: &str) -> Result<Value, CliError> {
    let m = CoxeterMatrix::parse(text)?;
    let g = coxeter_graph(&m);
    let basis = spanning_forest(&g);
    let components: Vec<Vec<String>> = connected_components(&g)
        .iter()
        .map(|c| names(&m, c))
        .collect();
    let forest: Vec<Vec<String>> = basis
        .forest_edges
        .iter()
        .map(|&(a, b)| names(&m, &[a, b]))
        .collect();
    let circuits: Vec<Vec<String>> = basis
        .circuits
        .iter()
        .map(|c| names(&m, &c.circuit))
        .collect();
    Ok(json!({
        "generators": m.generators(),
        "components": components,
        "circuit_rank": basis.circuits.len(),
        "forest_edges": forest,
        "circuits": circuits,
    }))
}

fn build_report(text: &str) -> Result<Value, CliError> {
    let d = GgrDatum::parse(text)?;
    let rep = d.build_representation().to_json_value();
    Ok(json!({
        "coxeter": d.coxeter().to_json_value(),
        "basis": rep["basis"],
        "matrices": rep["matrices"],
    }))
}

/// A representation document carries explicit matrices; anything else is
/// treated as a datum and built first.
fn load_representation(
    text: &str,
) -> Result<(CoxeterMatrix, Representation), CliError> {
    let probe: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Domain(format!("malformed JSON: {e}")))?;
    if probe.get("matrices").is_some() {
        let coxeter = probe.get("coxeter").ok_or_else(|| {
            CliError::Domain(
                "a representation document needs a \"coxeter\" block alongside \
                 \"basis\" and \"matrices\""
                    .into(),
            )
        })?;
        let m = CoxeterMatrix::parse(&coxeter.to_string())?;
        let (basis, matrices) = parse_representation_matrices(text)?;
        if basis != m.generators() {
            return Err(CliError::Domain(
                "the \"basis\" list must match the system's generators in order".into(),
            ));
        }
        let rep = Representation {
            generators: basis,
            matrices,
            reflection_vectors: Vec::new(),
        };
        Ok((m, rep))
    } else {
        let d = GgrDatum::parse(text)?;
        let rep = d.build_representation();
        Ok((d.coxeter().clone(), rep))
    }
}

fn verify_report(text: &str, settings: &Settings) -> Result<Value, CliError> {
    let (m, rep) = load_representation(text)?;
    let report = verify_relations(&rep, &m, settings.tol);
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            let kind = match c.kind {
                CheckKind::Involution => "involution",
                CheckKind::Braid => "braid",
                CheckKind::Reflection => "reflection",
            };
            json!({"label": c.label, "kind": kind, "deviation": c.deviation})
        })
        .collect();
    Ok(json!({
        "relations_hold": report.relations_hold(settings.tol),
        "reflections_ok": report.all_reflections(settings.tol),
        "max_relation_deviation": report.max_relation_deviation(),
        "checks": checks,
    }))
}

fn classify_report(
    first: &str,
    second: &str,
    settings: &Settings,
) -> Result<Value, CliError> {
    let d1 = GgrDatum::parse(first)?;
    let d2 = GgrDatum::parse(second)?;
    let isomorphic = d1.isomorphic(&d2, settings)?;
    if !isomorphic {
        return Ok(json!({"isomorphic": false}));
    }
    let phi = d1.intertwiner(&d2, settings)?;
    let residual =
        intertwining_residual(&phi, &d1.build_representation(), &d2.build_representation());
    Ok(json!({
        "isomorphic": true,
        "intertwiner": cmat_to_pairs(&phi),
        "residual": residual,
    }))
}

fn analyze_report(text: &str, settings: &Settings) -> Result<Value, CliError> {
    let d = GgrDatum::parse(text)?;
    let a = matrix_a(&d);
    let rank = a.rank(settings.tol);
    let mut report = json!({
        "matrix_a": cmat_to_pairs(&a),
        "det_a": cpx(a.det()),
        "rank": rank,
        "fixed_dimension": d.rank() - rank,
    });
    match is_irreducible_ggr(&d, settings) {
        Ok(flag) => {
            report["irreducible"] = json!(flag);
        }
        Err(StructureError::PreconditionViolated(msg)) => {
            report["irreducible"] = Value::Null;
            report["irreducible_note"] = json!(msg);
        }
        Err(e) => return Err(e.into()),
    }
    Ok(report)
}

fn forms_report(text: &str, settings: &Settings) -> Result<Value, CliError> {
    let d = GgrDatum::parse(text)?;
    let rep = d.build_representation();
    let mut report = serde_json::Map::new();
    for (key, kind) in [
        ("bilinear", FormKind::Bilinear),
        ("sesquilinear", FormKind::Sesquilinear),
    ] {
        let oracle_dimension = invariant_form_oracle(&rep, kind, settings.tol).len();
        let mut entry = json!({"oracle_dimension": oracle_dimension});
        match invariant_form_exists_theorem(&d, kind, settings) {
            Ok(exists) => {
                entry["exists_by_criterion"] = json!(exists);
                if exists {
                    match invariant_form_construct(&d, kind, settings) {
                        Ok(b) => entry["form"] = json!(cmat_to_pairs(&b)),
                        Err(StructureError::NoForm(msg)) => {
                            entry["form"] = Value::Null;
                            entry["note"] = json!(msg);
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Err(StructureError::PreconditionViolated(msg)) => {
                entry["exists_by_criterion"] = Value::Null;
                entry["note"] = json!(msg);
            }
            Err(e) => return Err(e.into()),
        }
        report.insert(key.to_string(), entry);
    }
    Ok(Value::Object(report))
}

fn dual_report(text: &str, settings: &Settings) -> Result<Value, CliError> {
    let d = GgrDatum::parse(text)?;
    let n = d.rank();
    let semisimple = matrix_a(&d).rank(settings.tol) == n;
    if semisimple {
        return match dual_datum(&d, settings) {
            Ok(dual) => Ok(json!({
                "semisimple": true,
                "dual_datum": dual.to_json_value(),
            })),
            Err(StructureError::PreconditionViolated(msg)) => Ok(json!({
                "semisimple": true,
                "dual_datum": Value::Null,
                "note": msg,
            })),
            Err(e) => Err(e.into()),
        };
    }
    // Degenerate case: report the span of the dual reflection vectors and
    // check that it is invariant with a trivial quotient action.
    let dual = dual_representation(&d);
    let cols: Vec<_> = (0..n).map(|j| dual.gamma.col(j)).collect();
    let span = orthonormalize(&cols, settings.tol);
    let guard = settings.tol.max(1e-8);
    let identity = CMat::identity(n);
    let mut span_invariant = true;
    let mut quotient_trivial = true;
    for ds in &dual.rep.matrices {
        let moved = ds.sub(&identity);
        for col in &cols {
            span_invariant &= in_span(&span, &ds.mul_vec(col), guard);
        }
        for j in 0..n {
            quotient_trivial &= in_span(&span, &moved.col(j), guard);
        }
    }
    Ok(json!({
        "semisimple": false,
        "gamma": cmat_to_pairs(&dual.gamma),
        "span_dimension": span.len(),
        "span_invariant": span_invariant,
        "quotient_trivial": quotient_trivial,
    }))
}

fn partition_entry(
    p: &GeneratorPartition,
    m: &CoxeterMatrix,
) -> Result<Value, CliError> {
    let blocks: Vec<Vec<String>> = p.blocks().iter().map(|b| names(m, b)).collect();
    let q = quotient_group(p, m)?;
    Ok(json!({
        "blocks": blocks,
        "trivial": p.is_trivial(),
        "discrete": p.is_discrete(),
        "quotient": q.quotient.to_json_value(),
    }))
}

fn partitions_report(m: &CoxeterMatrix) -> Result<Value, CliError> {
    let list = enumerate_admissible(m)?;
    let entries: Vec<Value> = list
        .iter()
        .map(|p| partition_entry(p, m))
        .collect::<Result<_, _>>()?;
    Ok(json!({
        "generators": m.generators(),
        "count": entries.len(),
        "partitions": entries,
    }))
}

fn partitions_report_from(text: &str) -> Result<Value, CliError> {
    partitions_report(&CoxeterMatrix::parse(text)?)
}

fn factor_report(text: &str, settings: &Settings) -> Result<Value, CliError> {
    let probe: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Domain(format!("malformed JSON: {e}")))?;
    if probe.get("matrices").is_none() {
        return Err(CliError::Domain(
            "factor expects a representation document with \"coxeter\", \"basis\", \
             and \"matrices\""
                .into(),
        ));
    }
    let (m, rep) = load_representation(text)?;
    let fac = factor_reflection_rep(&rep.matrices, &m, settings)?;
    let blocks: Vec<Vec<String>> =
        fac.partition.blocks().iter().map(|b| names(&m, b)).collect();
    Ok(json!({
        "partition": blocks,
        "quotient": fac.quotient.quotient.to_json_value(),
        "representation": fac.representation.to_json_value(),
    }))
}

/// Three-generator cycle (adjacent bonds of order 3) with closing scalar `x`
/// on the pair (first, last); generalized to `n + 1` generators.
fn cycle_datum(n: usize, x: Complex64) -> Result<GgrDatum, CliError> {
    let rank = n + 1;
    let gen_names: Vec<String> = (0..rank).map(|i| format!("s{i}")).collect();
    let mut orders = vec![vec![1u32; rank]; rank];
    for i in 0..rank {
        for j in 0..rank {
            if i != j {
                let adjacent =
                    j == i + 1 || i == j + 1 || (i.min(j), i.max(j)) == (0, rank - 1);
                orders[i][j] = if adjacent { 3 } else { 2 };
            }
        }
    }
    let doc = json!({
        "coxeter": {"generators": gen_names, "orders": orders},
        "scalars": [{"from": "s0", "to": format!("s{n}"), "a": [x.re, x.im]}],
    });
    Ok(GgrDatum::parse(&doc.to_string())?)
}

fn demo_report(cli: &Cli, settings: &Settings) -> Result<Value, CliError> {
    // 1. Character of the 3-cycle with closing scalar 2: one basis circuit,
    //    plus a closed walk showing the reciprocal orientation.
    let d = cycle_datum(2, re64(2.0))?;
    let m = d.coxeter().clone();
    let ag = d.associated_graph(settings);
    let chi = d.associated_character(settings);
    let edge_chi = d.edge_character(&ag);
    let walk = [0usize, 2, 1, 0];
    let walk_value = evaluate_on_path(&edge_chi, &walk)?;
    let circuits: Vec<Vec<String>> = chi
        .basis
        .circuits
        .iter()
        .map(|c| names(&m, &c.circuit))
        .collect();
    let character_example = json!({
        "datum": d.to_json_value(),
        "circuits": circuits,
        "character": chi.values.iter().map(|v| cpx(*v)).collect::<Vec<_>>(),
        "closed_walk": names(&m, &walk),
        "walk_value": cpx(walk_value),
    });

    // 2. Determinant table for cycles of 3 to 5 generators.
    let mut table = Vec::new();
    for n in [2usize, 3, 4] {
        for x in [re64(0.5), re64(1.0), re64(2.0), Complex64::new(1.0, 1.0)] {
            let d = cycle_datum(n, x)?;
            let det = matrix_a(&d).det();
            let expected = (re64(2.0) - x - x.inv()) / re64(2.0f64.powi(n as i32 + 1));
            let irreducible = is_irreducible_ggr(&d, settings)?;
            table.push(json!({
                "generators": n + 1,
                "x": cpx(x),
                "det_a": cpx(det),
                "expected": cpx(expected),
                "irreducible": irreducible,
            }));
        }
    }

    // 3. Admissible partitions of the rank-3 path system and the 4-cycle.
    let path3 = CoxeterMatrix::parse(
        &json!({
            "generators": ["s1", "s2", "s3"],
            "orders": [[1, 3, 2], [3, 1, 3], [2, 3, 1]],
        })
        .to_string(),
    )?;
    let cycle4 = CoxeterMatrix::parse(
        &json!({
            "generators": ["s0", "s1", "s2", "s3"],
            "orders": [[1, 3, 2, 3], [3, 1, 3, 2], [2, 3, 1, 3], [3, 2, 3, 1]],
        })
        .to_string(),
    )?;

    Ok(json!({
        "config": {
            "tol": settings.tol,
            "max_m": settings.angle_max_m,
            "seed": cli.seed,
        },
        "character_example": character_example,
        "determinant_table": table,
        "partition_examples": {
            "path_3": partitions_report(&path3)?,
            "cycle_4": partitions_report(&cycle4)?,
        },
    }))
}
