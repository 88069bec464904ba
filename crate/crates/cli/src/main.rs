//! Command-line front end: parse matrices, complexes and data vectors, run
//! the checks, and emit JSON/CSV/DOT reports.
//!
//! Exit codes: 0 success (and passing verdicts), 1 parse/validation errors
//! and failing verdicts, 2 precondition failures (an operation that needs
//! the GRIP on a matrix without it), 3 resource bounds.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use partition_mle::error::Error;
use partition_mle::fraction::{vector_sum, Fraction};
use partition_mle::grip::grip_check;
use partition_mle::hierarchical::{
    is_decomposable, matrix_from_complex, parse_complex_text, rip_check, rip_order_search,
    SimplicialComplex,
};
use partition_mle::ips::{
    ips_run, iteration_experiment, ExperimentConfig, IpsConfig, IpsMode, IpsResult, IpsVector,
};
use partition_mle::matrix::{
    format_matrix_text, parse_matrix_text, validate_blocks, MultipartitionMatrix,
};
use partition_mle::mle::closed_form_mle;
use partition_mle::staged_tree::{
    balance_check, is_stratified, matrix_from_tree, to_dot, tree_from_matrix, BalanceOutcome,
};
use partition_mle::tfp::{
    binomial_in_kernel, build_tfp_instance, generators_to_json, kernel_binomials, lift_binomial,
    quad_generators, verify_tfp_equality, Binomial, Side,
};

const VERSION_HEADER: &str = "# partition-mle v0.1";

#[derive(Parser)]
#[command(
    name = "partition-mle",
    version,
    about = "Exact toolkit for log-linear partition models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output style for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a matrix file against the multipartition invariants.
    Validate { file: PathBuf },
    /// Check the generalized running intersection property.
    Grip { file: PathBuf },
    /// Closed-form MLE of a GRIP matrix for a data vector.
    Mle {
        file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Include the per-column factor breakdown.
        #[arg(long)]
        explain: bool,
    },
    /// Run iterative proportional scaling.
    Ips {
        file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Float-mode step-size tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_cycles: usize,
    },
    /// Step-count statistics over random data vectors (float mode).
    Experiment {
        file: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-trial step bound.
        #[arg(long, default_value_t = 10_000_000)]
        max_steps: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the staged tree of a matrix and test it.
    Tree {
        file: PathBuf,
        /// Write a DOT rendering here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Hierarchical models: RIP checks and the facet-ordered matrix.
    Hier {
        file: PathBuf,
        /// Facet order as 1-based comma-separated indices, e.g. 2,1,3.
        #[arg(long)]
        order: Option<String>,
        /// Search for an order satisfying the RIP.
        #[arg(long)]
        find_rip: bool,
        /// Write the block matrix of the (given or found) order here.
        #[arg(long)]
        emit_matrix: Option<PathBuf>,
    },
    /// Verify the toric fiber product split at one level.
    Tfp {
        file: PathBuf,
        /// 1-based prefix length of the split.
        #[arg(long)]
        level: usize,
        /// Dump Quad and Lift generator families.
        #[arg(long)]
        generators: bool,
    },
    /// Matrix -> tree -> matrix chain verdict in both directions.
    Roundtrip { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::GripRequired { .. } | Error::FloretsUndefined { .. } | Error::NotStratified(_) => 2,
        Error::FacetCountTooLarge { .. } => 3,
        _ => 1,
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<MultipartitionMatrix, Error> {
    let blocks = parse_matrix_text(&read_file(path)?)?;
    let report = validate_blocks(&blocks);
    if !report.ok() {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        return Err(Error::Validation(report.violations.len()));
    }
    MultipartitionMatrix::new(blocks)
}

/// Reads one rational per line. Exact mode demands an exactly normalized
/// vector; float mode normalizes with a warning.
fn read_data(path: &Path, exact: bool) -> Result<Vec<Fraction>, Error> {
    let text = read_file(path)?;
    let mut data = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        data.push(Fraction::parse(line)?);
    }
    if data.is_empty() {
        return Err(Error::Parse("no data entries found".into()));
    }
    let total = vector_sum(&data);
    if !total.is_one() {
        if exact {
            return Err(Error::NonNormalizedData(total.to_string()));
        }
        eprintln!("warning: data sums to {total}; normalizing for float mode");
        for x in data.iter_mut() {
            *x /= &total;
        }
    }
    Ok(data)
}

fn emit(cli: &Cli, value: &Value) {
    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable")
        ),
        Format::Text => {
            println!("{VERSION_HEADER}");
            print_text(value, 0);
        }
    }
}

fn print_text(value: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}{k}:");
                        print_text(v, indent + 1);
                    }
                    _ => println!("{pad}{k} = {v}"),
                }
            }
        }
        Value::Array(items) => {
            for v in items {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}-");
                        print_text(v, indent + 1);
                    }
                    _ => println!("{pad}- {v}"),
                }
            }
        }
        other => println!("{pad}{other}"),
    }
}

fn pass_fail(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Validate { file } => {
            let blocks = parse_matrix_text(&read_file(file)?)?;
            let report = validate_blocks(&blocks);
            let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            emit(cli, &json!({ "ok": report.ok(), "violations": violations }));
            Ok(pass_fail(report.ok()))
        }
        Command::Grip { file } => {
            let mat = read_matrix(file)?;
            let report = grip_check(&mat);
            emit(cli, &report.to_json());
            Ok(pass_fail(report.overall))
        }
        Command::Mle {
            file,
            data,
            explain,
        } => {
            let mat = read_matrix(file)?;
            let d = read_data(data, true)?;
            let report = grip_check(&mat);
            let result = closed_form_mle(&mat, &d, &report, *explain)?;
            emit(cli, &result.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Ips {
            file,
            data,
            mode,
            tol,
            max_cycles,
        } => {
            let mat = read_matrix(file)?;
            let exact = *mode == Mode::Exact;
            let d = read_data(data, exact)?;
            let config = IpsConfig {
                mode: if exact {
                    IpsMode::Exact
                } else {
                    IpsMode::Float
                },
                max_cycles: *max_cycles,
                float_tolerance: *tol,
                record_history: false,
            };
            let result = ips_run(&mat, &d, &config)?;
            emit(cli, &ips_result_json(&result, exact));
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment {
            file,
            trials,
            tol,
            seed,
            max_steps,
            output,
        } => {
            let mat = read_matrix(file)?;
            let config = ExperimentConfig {
                trials: *trials,
                tolerance: *tol,
                seed: *seed,
                max_steps: *max_steps,
            };
            let stats = iteration_experiment(&mat, &config);
            let mut csv = String::from("trial,steps,final_birch_residual\n");
            for o in &stats.outcomes {
                csv.push_str(&format!(
                    "{},{},{:e}\n",
                    o.trial, o.steps, o.final_birch_residual
                ));
            }
            match output {
                Some(path) => fs::write(path, &csv)
                    .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            println!("mean={:.2} min={} max={}", stats.mean, stats.min, stats.max);
            Ok(ExitCode::SUCCESS)
        }
        Command::Tree { file, dot } => {
            let mat = read_matrix(file)?;
            match tree_from_matrix(&mat) {
                Ok(tree) => {
                    if let Some(path) = dot {
                        fs::write(path, to_dot(&tree)).map_err(|e| {
                            Error::Parse(format!("cannot write {}: {e}", path.display()))
                        })?;
                    }
                    let stratified = is_stratified(&tree);
                    let balanced = balance_check(&tree) == BalanceOutcome::Balanced;
                    emit(
                        cli,
                        &json!({
                            "balanced": balanced,
                            "leaves": tree.leaves().len(),
                            "staged": true,
                            "stratified": stratified,
                            "vertices": tree.n_vertices(),
                        }),
                    );
                    Ok(pass_fail(stratified && balanced))
                }
                Err(Error::NotStaged { vertex_a, vertex_b }) => {
                    emit(
                        cli,
                        &json!({
                            "staged": false,
                            "witness": [vertex_a, vertex_b],
                        }),
                    );
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e),
            }
        }
        Command::Hier {
            file,
            order,
            find_rip,
            emit_matrix,
        } => {
            let cx = parse_complex_text(&read_file(file)?)?;
            run_hier(
                cli,
                &cx,
                order.as_deref(),
                *find_rip,
                emit_matrix.as_deref(),
            )
        }
        Command::Tfp {
            file,
            level,
            generators,
        } => {
            let mat = read_matrix(file)?;
            let report = grip_check(&mat);
            let equal = verify_tfp_equality(&mat, &report, *level)?;
            let mut obj = serde_json::Map::new();
            obj.insert("equal".into(), json!(equal));
            obj.insert("level".into(), json!(level));
            if *generators {
                let instance = build_tfp_instance(&mat, &report, *level)?;
                let quads = quad_generators(&instance);
                let rows = instance.parametrization_matrix();
                let mut lifts: Vec<Binomial> = Vec::new();
                for (side, matrix_rows) in [
                    (Side::Left, instance.prefix_compression.stacked_rows(*level)),
                    (Side::Right, instance.next_compression.rows().to_vec()),
                ] {
                    for f in kernel_binomials(&matrix_rows) {
                        lifts.extend(lift_binomial(&instance, side, &f)?);
                    }
                }
                let sound = quads
                    .iter()
                    .chain(&lifts)
                    .all(|b| binomial_in_kernel(&rows, b));
                obj.insert("generators_in_kernel".into(), json!(sound));
                obj.insert("lifts".into(), generators_to_json(&instance, &lifts));
                obj.insert("quads".into(), generators_to_json(&instance, &quads));
                obj.insert("z_variables".into(), json!(instance.z_to_column.len()));
            }
            emit(cli, &Value::Object(obj));
            Ok(pass_fail(equal))
        }
        Command::Roundtrip { file } => {
            let mat = read_matrix(file)?;
            run_roundtrip(cli, &mat)
        }
    }
}

fn ips_result_json(result: &IpsResult, exact: bool) -> Value {
    let final_p = match &result.final_p {
        IpsVector::Exact(v) => {
            Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect())
        }
        IpsVector::Float(v) => Value::Array(v.iter().map(|&x| json!(x)).collect()),
    };
    let birch: Value = match &result.birch_residual_exact {
        Some(r) => Value::String(r.to_string()),
        None => json!(result.birch_residual_float),
    };
    json!({
        "birch_residual": birch,
        "converged": result.converged,
        "cycles_taken": result.cycles_taken.to_string(),
        "final": final_p,
        "mode": if exact { "exact" } else { "float" },
        "one_cycle_exact": result.one_cycle_exact,
        "steps_taken": result.steps_taken,
    })
}

fn run_hier(
    cli: &Cli,
    cx: &SimplicialComplex,
    order: Option<&str>,
    find_rip: bool,
    emit_matrix: Option<&Path>,
) -> Result<ExitCode, Error> {
    let decomposable = is_decomposable(cx)?;
    let mut obj = serde_json::Map::new();
    obj.insert("decomposable".into(), json!(decomposable));
    obj.insert(
        "facets".into(),
        json!(cx
            .facets()
            .iter()
            .map(|f| f.iter().copied().collect::<Vec<_>>())
            .collect::<Vec<_>>()),
    );
    let (ok, chosen_order): (bool, Option<Vec<usize>>) = if let Some(text) = order {
        let parsed: Result<Vec<usize>, _> =
            text.split(',').map(|t| t.trim().parse::<usize>()).collect();
        let one_based =
            parsed.map_err(|_| Error::InvalidFacetOrder(format!("cannot parse {text:?}")))?;
        if one_based.contains(&0) {
            return Err(Error::InvalidFacetOrder("facet indices are 1-based".into()));
        }
        let zero_based: Vec<usize> = one_based.iter().map(|&i| i - 1).collect();
        match rip_check(cx, &zero_based)? {
            Ok(()) => {
                obj.insert("rip".into(), json!(true));
                (true, Some(zero_based))
            }
            Err(violation) => {
                obj.insert("rip".into(), json!(false));
                obj.insert(
                    "violation".into(),
                    json!({
                        "intersection": violation.intersection,
                        "position": violation.position + 1,
                    }),
                );
                (false, Some(zero_based))
            }
        }
    } else if find_rip {
        match rip_order_search(cx)? {
            Some(found) => {
                obj.insert(
                    "found_order".into(),
                    json!(found.iter().map(|i| i + 1).collect::<Vec<_>>()),
                );
                (true, Some(found))
            }
            None => {
                obj.insert("found_order".into(), Value::Null);
                (false, None)
            }
        }
    } else {
        let identity: Vec<usize> = (0..cx.n_facets()).collect();
        let rip = rip_check(cx, &identity)?.is_ok();
        obj.insert("rip".into(), json!(rip));
        (rip, Some(identity))
    };
    if let Some(path) = emit_matrix {
        match &chosen_order {
            Some(ord) => {
                let mat = matrix_from_complex(cx, ord)?;
                fs::write(path, format_matrix_text(&mat))
                    .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
            }
            None => {
                return Err(Error::InvalidFacetOrder(
                    "no order available to emit a matrix for".into(),
                ))
            }
        }
    }
    emit(cli, &Value::Object(obj));
    Ok(pass_fail(ok))
}

fn run_roundtrip(cli: &Cli, mat: &MultipartitionMatrix) -> Result<ExitCode, Error> {
    let report = grip_check(mat);
    let duplicate_free = mat.column_labeling(mat.k())?.beta == mat.n_cols();
    let mut obj = serde_json::Map::new();
    obj.insert("duplicate_free".into(), json!(duplicate_free));
    obj.insert("grip".into(), json!(report.overall));
    let (staged, stratified, balanced, rebuilt_grip) = match tree_from_matrix(mat) {
        Ok(tree) => {
            let stratified = is_stratified(&tree);
            let balanced = balance_check(&tree) == BalanceOutcome::Balanced;
            let rebuilt = matrix_from_tree(&tree)?;
            let rebuilt_grip = grip_check(&rebuilt).overall;
            (true, stratified, balanced, Some(rebuilt_grip))
        }
        Err(Error::NotStaged { .. }) => (false, false, false, None),
        Err(e) => return Err(e),
    };
    obj.insert("balanced".into(), json!(balanced));
    obj.insert("rebuilt_grip".into(), json!(rebuilt_grip));
    obj.insert("staged".into(), json!(staged));
    obj.insert("stratified".into(), json!(stratified));
    // Forward: GRIP forces a balanced stratified staged tree whose
    // duplicate-free matrix is again GRIP. Backward (duplicate-free
    // matrices only): a balanced stratified staged tree forces the GRIP.
    let forward =
        !report.overall || (staged && stratified && balanced && rebuilt_grip == Some(true));
    let backward = !(duplicate_free && staged && stratified && balanced) || report.overall;
    obj.insert("consistent".into(), json!(forward && backward));
    emit(cli, &Value::Object(obj));
    Ok(pass_fail(forward && backward))
}
