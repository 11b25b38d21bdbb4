//! Command-line front end: runs convergence studies from presets or JSON
//! configuration files, exports meshes and single-level solutions, and
//! checks the equivalence of the two solution schemes.
//!
//! Exit codes: 0 success, 2 malformed configuration or arguments, 3 solver
//! failure, 1 any other error.

use clap::{ArgGroup, Parser, Subcommand};
use measfem::analysis::{run_study_with_threads, RefinementLadder};
use measfem::assembly::{assemble_load_l2, assemble_measure_rhs, CoefficientField};
use measfem::config::{preset, ExperimentConfig, LevelRange, SchemeChoice};
use measfem::fespace::build_space;
use measfem::scheme::{relative_discrepancy, solve_berggren_rhs, solve_standard_rhs};
use measfem::FemError;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "measfem",
    version,
    about = "Finite element convergence studies for equations with measure right-hand sides"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and print its report table.
    #[command(group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
    Run {
        /// Built-in study name: example1, example2, example3, calibration.
        #[arg(long)]
        preset: Option<String>,
        /// JSON configuration file describing the study.
        #[arg(long, conflicts_with_all = ["degree", "levels"])]
        config: Option<PathBuf>,
        /// Override the polynomial degree of a preset (1, 2, or 3).
        #[arg(long)]
        degree: Option<usize>,
        /// Override the level range of a preset, written A..B (inclusive).
        #[arg(long)]
        levels: Option<String>,
        /// Directory for report.csv, report.md, and the resolved config.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve the study levels concurrently (MEASFEM_THREADS overrides).
        #[arg(long)]
        parallel: bool,
    },
    /// Build a preset's mesh at a refinement level and write it to a file.
    Mesh {
        #[arg(long)]
        preset: String,
        /// Number of uniform refinements applied to the initial mesh.
        #[arg(long)]
        refine: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a single level of a configured study and export the solution.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        level: usize,
        /// Output file for the coefficients; a .meta sidecar is written too.
        #[arg(long)]
        export: PathBuf,
    },
    /// Solve one level with both schemes and report their discrepancy.
    CheckEquivalence {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        level: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    };
    std::process::exit(code);
}

fn exit_code_for(err: &FemError) -> i32 {
    match err {
        FemError::Config(_)
        | FemError::MeshFormat { .. }
        | FemError::FunctionFormat { .. }
        | FemError::InvalidDegree(_) => 2,
        FemError::SolverStalled { .. } | FemError::NotSpd(_) => 3,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<(), FemError> {
    match cli.command {
        Command::Run { preset, config, degree, levels, out, parallel } => {
            run_command(preset, config, degree, levels, out, parallel)
        }
        Command::Mesh { preset, refine, out } => mesh_command(&preset, refine, &out),
        Command::Solve { config, level, export } => solve_command(&config, level, &export),
        Command::CheckEquivalence { preset, degree, level } => {
            check_equivalence_command(&preset, degree, level)
        }
    }
}

/// Reads and validates a configuration file, turning JSON syntax errors into
/// line/column diagnostics.
fn load_config(path: &Path) -> Result<ExperimentConfig, FemError> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        FemError::Config(format!("cannot read config file '{}': {err}", path.display()))
    })?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|err| {
        FemError::Config(format!(
            "malformed config '{}' at line {} column {}: {err}",
            path.display(),
            err.line(),
            err.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_level_range(text: &str) -> Result<LevelRange, FemError> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| FemError::Config(format!("levels must be written A..B, got '{text}'")))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let first: usize = a
        .trim()
        .parse()
        .map_err(|_| FemError::Config(format!("levels: '{a}' is not a level number")))?;
    let last: usize = b
        .trim()
        .parse()
        .map_err(|_| FemError::Config(format!("levels: '{b}' is not a level number")))?;
    Ok(LevelRange { first, last })
}

fn thread_count(parallel: bool) -> Result<usize, FemError> {
    if let Ok(value) = std::env::var("MEASFEM_THREADS") {
        let n: usize = value.parse().map_err(|_| {
            FemError::Config(format!("MEASFEM_THREADS must be a positive integer, got '{value}'"))
        })?;
        if n == 0 {
            return Err(FemError::Config("MEASFEM_THREADS must be at least 1".into()));
        }
        return Ok(n);
    }
    if parallel {
        Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    } else {
        Ok(1)
    }
}

fn run_command(
    preset_name: Option<String>,
    config_path: Option<PathBuf>,
    degree: Option<usize>,
    levels: Option<String>,
    out: Option<PathBuf>,
    parallel: bool,
) -> Result<(), FemError> {
    let mut cfg = match (&preset_name, &config_path) {
        (Some(name), None) => preset(name, degree)?,
        (None, Some(path)) => load_config(path)?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    if let Some(text) = &levels {
        cfg.levels = parse_level_range(text)?;
        cfg.validate()?;
    }
    let threads = thread_count(parallel)?;

    let report = run_study_with_threads(&cfg, threads)?;
    print!("{}", report.to_markdown());

    if let Some(dir) = out.or_else(|| cfg.output.clone().map(PathBuf::from)) {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("report.csv"), report.to_csv())?;
        std::fs::write(dir.join("report.md"), report.to_markdown())?;
        let resolved = serde_json::to_string_pretty(&cfg)
            .map_err(|err| FemError::Config(format!("cannot serialize config: {err}")))?;
        std::fs::write(dir.join("config.json"), resolved)?;
        eprintln!("wrote report.csv, report.md, config.json to {}", dir.display());
    }
    Ok(())
}

fn mesh_command(preset_name: &str, refine: usize, out: &Path) -> Result<(), FemError> {
    let cfg = preset(preset_name, None)?;
    let ladder = RefinementLadder::build(cfg.domain.build()?, refine)?;
    let mesh = ladder.mesh(refine);
    let file = std::fs::File::create(out)?;
    mesh.write_text(&mut std::io::BufWriter::new(file))?;
    eprintln!(
        "wrote level-{refine} {} mesh ({} vertices, {} cells) to {}",
        cfg.domain.label(),
        mesh.n_vertices(),
        mesh.n_cells(),
        out.display()
    );
    Ok(())
}

fn solve_command(config_path: &Path, level: usize, export: &Path) -> Result<(), FemError> {
    let cfg = load_config(config_path)?;
    if level > cfg.reference_level {
        return Err(FemError::Config(format!(
            "level {level} exceeds reference_level {}",
            cfg.reference_level
        )));
    }
    let initial = cfg.domain.build()?;
    let measure = cfg.build_measure()?;
    if let Some(m) = &measure {
        m.validate_against(&initial)?;
    }
    let ladder = RefinementLadder::build(initial, level)?;
    let space = Arc::new(build_space(ladder.mesh(level).clone(), cfg.degree)?);
    let field = CoefficientField::Identity;
    let rhs = match &measure {
        Some(m) => assemble_measure_rhs(&space, m)?,
        None => {
            let problem = cfg.smooth_problem().expect("smooth study has a load");
            assemble_load_l2(&space, problem.load)?
        }
    };

    let (solution, extra) = match cfg.scheme {
        SchemeChoice::Standard => (solve_standard_rhs(&space, &field, rhs, cfg.solver_tol)?, None),
        SchemeChoice::Berggren => (solve_berggren_rhs(&space, &field, rhs, cfg.solver_tol)?, None),
        SchemeChoice::Both => {
            let standard = solve_standard_rhs(&space, &field, rhs.clone(), cfg.solver_tol)?;
            let berggren = solve_berggren_rhs(&space, &field, rhs, cfg.solver_tol)?;
            let disc = relative_discrepancy(
                &standard.function.coefficients,
                &berggren.function.coefficients,
            );
            (standard, Some((disc, berggren.stats)))
        }
    };

    let file = std::fs::File::create(export)?;
    solution.function.write_text(&mut std::io::BufWriter::new(file))?;

    let mut meta = String::new();
    meta.push_str(&format!("scheme={}\n", cfg.scheme.label()));
    meta.push_str(&format!("tol={:e}\n", cfg.solver_tol));
    let iterations: Vec<String> =
        solution.stats.iter().map(|s| s.iterations.to_string()).collect();
    meta.push_str(&format!("iterations={}\n", iterations.join(",")));
    if let Some((disc, berggren_stats)) = extra {
        let its: Vec<String> =
            berggren_stats.iter().map(|s| s.iterations.to_string()).collect();
        meta.push_str(&format!("berggren_iterations={}\n", its.join(",")));
        meta.push_str(&format!("scheme_discrepancy={disc:e}\n"));
    }
    let meta_path = export.with_extension(match export.extension() {
        Some(ext) => format!("{}.meta", ext.to_string_lossy()),
        None => "meta".to_string(),
    });
    std::fs::write(&meta_path, meta)?;
    eprintln!(
        "wrote level-{level} solution ({} coefficients) to {} (metadata: {})",
        solution.function.coefficients.len(),
        export.display(),
        meta_path.display()
    );
    Ok(())
}

fn check_equivalence_command(
    preset_name: &str,
    degree: usize,
    level: usize,
) -> Result<(), FemError> {
    const THRESHOLD: f64 = 1e-8;
    let cfg = preset(preset_name, Some(degree))?;
    let initial = cfg.domain.build()?;
    let measure = cfg.build_measure()?;
    if let Some(m) = &measure {
        m.validate_against(&initial)?;
    }
    let ladder = RefinementLadder::build(initial, level)?;
    let space = Arc::new(build_space(ladder.mesh(level).clone(), cfg.degree)?);
    let field = CoefficientField::Identity;
    let rhs = match &measure {
        Some(m) => assemble_measure_rhs(&space, m)?,
        None => {
            let problem = cfg.smooth_problem().expect("smooth study has a load");
            assemble_load_l2(&space, problem.load)?
        }
    };
    let standard = solve_standard_rhs(&space, &field, rhs.clone(), cfg.solver_tol)?;
    let berggren = solve_berggren_rhs(&space, &field, rhs, cfg.solver_tol)?;
    let disc = relative_discrepancy(
        &standard.function.coefficients,
        &berggren.function.coefficients,
    );
    println!(
        "preset {preset_name} degree {degree} level {level}: \
         max relative coefficient discrepancy {disc:.3e} (solver tol {:.1e})",
        cfg.solver_tol
    );
    if disc <= THRESHOLD {
        println!("schemes agree within {THRESHOLD:.1e}");
        Ok(())
    } else {
        println!("schemes DISAGREE: discrepancy {disc:.3e} exceeds {THRESHOLD:.1e}");
        std::process::exit(1);
    }
}
