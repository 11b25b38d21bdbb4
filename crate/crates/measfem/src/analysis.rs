//! Convergence analysis: refinement ladders, nested-space prolongation,
//! error norms restricted to regions, empirical convergence rates, and the
//! study driver that turns a configuration into a report.
//!
//! Exact solutions are unavailable for measure data, so a solution on a much
//! finer mesh stands in as the reference: study solutions are prolonged
//! (exactly, through the nested spaces) to the reference mesh and the error
//! is integrated there over the selected cells.

use crate::assembly::{assemble_load_l2, assemble_measure_rhs, CoefficientField, MeasureData};
use crate::config::{ExperimentConfig, NormKind, SchemeChoice};
use crate::error::FemError;
use crate::fespace::{basis, build_space, quadrature_for, FeFunction, FeSpace};
use crate::mesh::{RegionPredicate, SimplicialMesh};
use crate::scheme::{
    relative_discrepancy, solve_berggren_rhs, solve_standard_rhs, DiscreteSolution,
};
use std::sync::Arc;

/// A nested hierarchy of uniformly refined meshes, level 0 upward.
#[derive(Debug)]
pub struct RefinementLadder {
    meshes: Vec<Arc<SimplicialMesh>>,
}

impl RefinementLadder {
    /// Refines `initial` repeatedly so that levels `0..=top_level` exist.
    pub fn build(initial: SimplicialMesh, top_level: usize) -> Result<RefinementLadder, FemError> {
        let mut meshes = Vec::with_capacity(top_level + 1);
        meshes.push(Arc::new(initial));
        for _ in 0..top_level {
            let next = meshes.last().unwrap().refine_uniform()?;
            meshes.push(Arc::new(next));
        }
        Ok(RefinementLadder { meshes })
    }

    pub fn top_level(&self) -> usize {
        self.meshes.len() - 1
    }

    pub fn mesh(&self, level: usize) -> &Arc<SimplicialMesh> {
        &self.meshes[level]
    }
}

/// Represents a coarse-level function exactly on a finer level of the same
/// ladder: every target DOF node is evaluated in its ancestor coarse cell,
/// found by walking the parent maps. Nestedness of the Lagrange spaces under
/// red refinement makes this exact up to rounding.
pub fn prolong(
    coarse: &FeFunction,
    target_space: &Arc<FeSpace>,
    ladder: &RefinementLadder,
) -> FeFunction {
    let coarse_level = coarse.space.mesh().level();
    let target_level = target_space.mesh().level();
    assert!(
        Arc::ptr_eq(coarse.space.mesh(), ladder.mesh(coarse_level)),
        "coarse function does not live on the ladder"
    );
    assert!(
        Arc::ptr_eq(target_space.mesh(), ladder.mesh(target_level)),
        "target space does not live on the ladder"
    );
    assert!(coarse_level <= target_level, "prolongation goes from coarse to fine");

    let coarse_mesh = ladder.mesh(coarse_level);
    let mut coefficients = vec![0.0_f64; target_space.n_dofs()];
    for (dof, value) in coefficients.iter_mut().enumerate() {
        let mut cell = target_space.dof_cell(dof);
        for level in (coarse_level..target_level).rev() {
            cell = ladder
                .mesh(level + 1)
                .parent_of_cell(cell)
                .expect("refined mesh must carry parent maps");
        }
        let x = target_space.dof_position(dof);
        let lambda = coarse_mesh.barycentric(cell, x);
        *value = coarse.value_in_cell(cell, &lambda);
    }
    FeFunction::new(target_space.clone(), coefficients)
}

/// L2 and H1-seminorm of a difference, accumulated in one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

impl ErrorNorms {
    pub fn get(&self, norm: NormKind) -> f64 {
        match norm {
            NormKind::L2 => self.l2,
            NormKind::H1Seminorm => self.h1,
        }
    }
}

fn eval_value_and_gradient(
    f: &FeFunction,
    c: usize,
    lambda: &[f64],
    lam_grads: &[[f64; 3]; 4],
) -> (f64, [f64; 3]) {
    let dim = f.space.mesh().dim();
    let k = f.space.degree();
    let n = f.space.n_local();
    let mut values = [0.0_f64; 20];
    let mut grads = [[0.0_f64; 4]; 20];
    basis::eval_basis(dim, k, lambda, &mut values[..n], Some(&mut grads[..n]));
    let dofs = f.space.cell_dofs(c);
    let mut v = 0.0;
    let mut g = [0.0_f64; 3];
    for (b, &dof) in dofs.iter().enumerate() {
        let coeff = f.coefficients[dof as usize];
        v += coeff * values[b];
        for i in 0..=dim {
            let w = coeff * grads[b][i];
            for d in 0..dim {
                g[d] += w * lam_grads[i][d];
            }
        }
    }
    (v, g)
}

/// ‖a − b‖ over the given cells of the mesh both functions share. The spaces
/// may have different degrees; the quadrature is exact for the difference.
pub fn error_norms_on_cells(
    a: &FeFunction,
    b: &FeFunction,
    cells: &[usize],
) -> Result<ErrorNorms, FemError> {
    assert!(
        Arc::ptr_eq(a.space.mesh(), b.space.mesh()),
        "error integration needs both functions on the same mesh"
    );
    let mesh = a.space.mesh();
    let dim = mesh.dim();
    let degree = 2 * a.space.degree().max(b.space.degree());
    let rule = quadrature_for(dim, degree)?;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for &c in cells {
        let (lam_grads, vol) = mesh.barycentric_gradients(c);
        for (qp, &w) in rule.points.iter().zip(&rule.weights) {
            let (va, ga) = eval_value_and_gradient(a, c, &qp[..dim + 1], &lam_grads);
            let (vb, gb) = eval_value_and_gradient(b, c, &qp[..dim + 1], &lam_grads);
            let dv = va - vb;
            let dg = [ga[0] - gb[0], ga[1] - gb[1], ga[2] - gb[2]];
            l2 += w * vol * dv * dv;
            h1 += w * vol * (dg[0] * dg[0] + dg[1] * dg[1] + dg[2] * dg[2]);
        }
    }
    Ok(ErrorNorms { l2: l2.sqrt(), h1: h1.sqrt() })
}

/// ‖u − exact‖ over the given cells, with a degree-6 rule for the smooth
/// exact solution.
pub fn error_vs_exact(
    u: &FeFunction,
    exact: fn(&[f64]) -> f64,
    exact_gradient: fn(&[f64]) -> [f64; 3],
    cells: &[usize],
) -> Result<ErrorNorms, FemError> {
    let mesh = u.space.mesh();
    let dim = mesh.dim();
    let rule = quadrature_for(dim, 6)?;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for &c in cells {
        let (lam_grads, vol) = mesh.barycentric_gradients(c);
        for (qp, &w) in rule.points.iter().zip(&rule.weights) {
            let (vu, gu) = eval_value_and_gradient(u, c, &qp[..dim + 1], &lam_grads);
            let x = mesh.point_from_barycentric(c, &qp[..dim + 1]);
            let ve = exact(&x[..dim]);
            let ge = exact_gradient(&x[..dim]);
            let dv = vu - ve;
            let dg = [gu[0] - ge[0], gu[1] - ge[1], gu[2] - ge[2]];
            l2 += w * vol * dv * dv;
            h1 += w * vol * (dg[0] * dg[0] + dg[1] * dg[1] + dg[2] * dg[2]);
        }
    }
    Ok(ErrorNorms { l2: l2.sqrt(), h1: h1.sqrt() })
}

/// Selects region cells, failing loudly when the region captures nothing.
pub fn select_region_cells(
    mesh: &SimplicialMesh,
    name: &str,
    region: &RegionPredicate,
) -> Result<Vec<usize>, FemError> {
    let cells = mesh.select_cells(region);
    if cells.is_empty() {
        return Err(FemError::EmptyRegion(format!(
            "region '{name}' selects no cells on the level-{} mesh",
            mesh.level()
        )));
    }
    Ok(cells)
}

/// One error value in the shape of the reporting tables: prolongs the study
/// solution to the reference level, selects the region there, integrates.
pub fn error_norm(
    u_level: &FeFunction,
    u_reference: &FeFunction,
    ladder: &RefinementLadder,
    region: &RegionPredicate,
    norm: NormKind,
) -> Result<f64, FemError> {
    let target_space = if u_level.space.degree() == u_reference.space.degree() {
        u_reference.space.clone()
    } else {
        Arc::new(build_space(
            u_reference.space.mesh().clone(),
            u_level.space.degree(),
        )?)
    };
    let prolonged = prolong(u_level, &target_space, ladder);
    let cells = select_region_cells(u_reference.space.mesh(), "anonymous", region)?;
    Ok(error_norms_on_cells(&prolonged, u_reference, &cells)?.get(norm))
}

/// r_l = log2(e_{l-1} / e_l); `None` where undefined (first level, zero or
/// non-finite errors).
pub fn compute_rates(errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let (prev, cur) = (errors[i - 1], errors[i]);
            if prev > 0.0 && cur > 0.0 && prev.is_finite() && cur.is_finite() {
                Some((prev / cur).log2())
            } else {
                None
            }
        })
        .collect()
}

/// Error series and rates of one named region.
#[derive(Debug, Clone)]
pub struct RegionSeries {
    pub name: String,
    pub l2: Vec<f64>,
    pub l2_rates: Vec<Option<f64>>,
    pub h1: Vec<f64>,
    pub h1_rates: Vec<Option<f64>>,
}

/// Everything a study produces, ready for CSV or markdown emission.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub name: String,
    pub domain: String,
    pub degree: usize,
    pub scheme: String,
    pub reference: String,
    pub norms: Vec<NormKind>,
    pub levels: Vec<usize>,
    pub h: Vec<f64>,
    pub n_dofs: Vec<usize>,
    pub regions: Vec<RegionSeries>,
    /// Per-level max coefficient discrepancy between the two schemes;
    /// empty unless the study ran with scheme = both.
    pub scheme_discrepancies: Vec<f64>,
}

impl ConvergenceReport {
    pub fn region(&self, name: &str) -> Option<&RegionSeries> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// One row per level; per (region, norm): an error column in full
    /// precision and a rate column (empty when undefined).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,h,n_dofs");
        for region in &self.regions {
            for &norm in &self.norms {
                out.push_str(&format!(
                    ",{n}_{r},rate_{n}_{r}",
                    n = norm.label(),
                    r = region.name
                ));
            }
        }
        out.push('\n');
        for (i, &level) in self.levels.iter().enumerate() {
            out.push_str(&format!("{level},{:.17e},{}", self.h[i], self.n_dofs[i]));
            for region in &self.regions {
                for &norm in &self.norms {
                    let (err, rate) = match norm {
                        NormKind::L2 => (region.l2[i], region.l2_rates[i]),
                        NormKind::H1Seminorm => (region.h1[i], region.h1_rates[i]),
                    };
                    out.push_str(&format!(",{err:.17e}"));
                    match rate {
                        Some(r) => out.push_str(&format!(",{r:.6}")),
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned table in the layout of the reporting convention: one row per
    /// level, error/rate column pairs per (norm, region).
    pub fn to_markdown(&self) -> String {
        let mut header: Vec<String> = vec!["level".into(), "h".into(), "n_dofs".into()];
        for region in &self.regions {
            for &norm in &self.norms {
                header.push(format!("{}({})", norm.label(), region.name));
                header.push("rate".into());
            }
        }
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (i, &level) in self.levels.iter().enumerate() {
            let mut row = vec![
                level.to_string(),
                format!("{:.3e}", self.h[i]),
                self.n_dofs[i].to_string(),
            ];
            for region in &self.regions {
                for &norm in &self.norms {
                    let (err, rate) = match norm {
                        NormKind::L2 => (region.l2[i], region.l2_rates[i]),
                        NormKind::H1Seminorm => (region.h1[i], region.h1_rates[i]),
                    };
                    row.push(format!("{err:.3e}"));
                    row.push(rate.map_or("---".into(), |r| format!("{r:.2}")));
                }
            }
            rows.push(row);
        }
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let fmt_row = |cells: &[String]| -> String {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}", w = w))
                .collect();
            format!("| {} |", padded.join(" | "))
        };
        let mut out = String::new();
        out.push_str(&format!(
            "## {} — {}, degree {}, scheme {}, reference {}\n\n",
            self.name, self.domain, self.degree, self.scheme, self.reference
        ));
        out.push_str(&fmt_row(&header));
        out.push('\n');
        let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&format!("|-{}-|", sep.join("-|-")));
        out.push('\n');
        for row in &rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        if !self.scheme_discrepancies.is_empty() {
            let max = self.scheme_discrepancies.iter().cloned().fold(0.0_f64, f64::max);
            out.push_str(&format!(
                "\nmax scheme discrepancy across levels: {max:.3e}\n"
            ));
        }
        out
    }
}

struct LevelSolve {
    level: usize,
    h: f64,
    n_dofs: usize,
    solution: FeFunction,
    discrepancy: Option<f64>,
}

fn solve_level(
    space: &Arc<FeSpace>,
    field: &CoefficientField,
    rhs: Vec<f64>,
    scheme: SchemeChoice,
    tol: f64,
) -> Result<(DiscreteSolution, Option<f64>), FemError> {
    match scheme {
        SchemeChoice::Standard => Ok((solve_standard_rhs(space, field, rhs, tol)?, None)),
        SchemeChoice::Berggren => Ok((solve_berggren_rhs(space, field, rhs, tol)?, None)),
        SchemeChoice::Both => {
            let standard = solve_standard_rhs(space, field, rhs.clone(), tol)?;
            let berggren = solve_berggren_rhs(space, field, rhs, tol)?;
            let disc = relative_discrepancy(
                &standard.function.coefficients,
                &berggren.function.coefficients,
            );
            Ok((standard, Some(disc)))
        }
    }
}

/// Runs the level solves either sequentially or with a small worker pool.
fn run_level_solves<F>(levels: &[usize], threads: usize, solve: F) -> Result<Vec<LevelSolve>, FemError>
where
    F: Fn(usize) -> Result<LevelSolve, FemError> + Sync,
{
    if threads <= 1 || levels.len() <= 1 {
        return levels.iter().map(|&l| solve(l)).collect();
    }
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<LevelSolve, FemError>>>> =
        levels.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(levels.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= levels.len() {
                    break;
                }
                let result = solve(levels[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Runs the full study described by the configuration. `threads` > 1 solves
/// study levels concurrently; results are identical either way.
pub fn run_study_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ConvergenceReport, FemError> {
    cfg.validate()?;
    let field = CoefficientField::Identity;
    let initial = cfg.domain.build()?;
    match cfg.smooth_problem() {
        Some(problem) => run_study_exact(cfg, initial, &field, problem, threads),
        None => run_study_reference(cfg, initial, &field, threads),
    }
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport, FemError> {
    run_study_with_threads(cfg, 1)
}

fn assemble_report(
    cfg: &ExperimentConfig,
    reference: String,
    solves: &[LevelSolve],
    region_errors: Vec<(String, Vec<ErrorNorms>)>,
) -> ConvergenceReport {
    let regions = region_errors
        .into_iter()
        .map(|(name, norms)| {
            let l2: Vec<f64> = norms.iter().map(|n| n.l2).collect();
            let h1: Vec<f64> = norms.iter().map(|n| n.h1).collect();
            RegionSeries {
                name,
                l2_rates: compute_rates(&l2),
                h1_rates: compute_rates(&h1),
                l2,
                h1,
            }
        })
        .collect();
    ConvergenceReport {
        name: cfg.name.clone(),
        domain: cfg.domain.label(),
        degree: cfg.degree,
        scheme: cfg.scheme.label().into(),
        reference,
        norms: cfg.norms.clone(),
        levels: solves.iter().map(|s| s.level).collect(),
        h: solves.iter().map(|s| s.h).collect(),
        n_dofs: solves.iter().map(|s| s.n_dofs).collect(),
        regions,
        scheme_discrepancies: solves.iter().filter_map(|s| s.discrepancy).collect(),
    }
}

fn run_study_exact(
    cfg: &ExperimentConfig,
    initial: SimplicialMesh,
    field: &CoefficientField,
    problem: crate::config::SmoothProblem,
    threads: usize,
) -> Result<ConvergenceReport, FemError> {
    let ladder = RefinementLadder::build(initial, cfg.levels.last)?;
    let levels: Vec<usize> = (cfg.levels.first..=cfg.levels.last).collect();

    let solves = run_level_solves(&levels, threads, |level| {
        let mesh = ladder.mesh(level).clone();
        let space = Arc::new(build_space(mesh.clone(), cfg.degree)?);
        let rhs = assemble_load_l2(&space, problem.load)?;
        let (solution, discrepancy) =
            solve_level(&space, field, rhs, cfg.scheme, cfg.solver_tol)?;
        Ok(LevelSolve {
            level,
            h: mesh.max_diameter(),
            n_dofs: space.n_dofs(),
            solution: solution.function,
            discrepancy,
        })
    })?;

    let mut region_errors: Vec<(String, Vec<ErrorNorms>)> = Vec::new();
    for named in &cfg.regions {
        let mut series = Vec::with_capacity(solves.len());
        for solve in &solves {
            let mesh = ladder.mesh(solve.level);
            let cells = select_region_cells(mesh, &named.name, &named.region)?;
            series.push(error_vs_exact(
                &solve.solution,
                problem.exact,
                problem.exact_gradient,
                &cells,
            )?);
        }
        region_errors.push((named.name.clone(), series));
    }

    Ok(assemble_report(cfg, "exact solution".into(), &solves, region_errors))
}

fn run_study_reference(
    cfg: &ExperimentConfig,
    initial: SimplicialMesh,
    field: &CoefficientField,
    threads: usize,
) -> Result<ConvergenceReport, FemError> {
    let measure: MeasureData = cfg
        .build_measure()?
        .expect("non-smooth study always has a measure");
    measure.validate_against(&initial)?;

    let ladder = RefinementLadder::build(initial, cfg.reference_level)?;
    let reference_mesh = ladder.mesh(cfg.reference_level).clone();
    let reference_degree = cfg.reference_degree();

    // Reference solve: standard scheme at the reference level.
    let reference_space = Arc::new(build_space(reference_mesh.clone(), reference_degree)?);
    let reference_rhs = assemble_measure_rhs(&reference_space, &measure)?;
    let u_reference =
        solve_standard_rhs(&reference_space, field, reference_rhs, cfg.solver_tol)?.function;

    // Region selection happens once, on the reference mesh.
    let mut region_cells: Vec<(String, Vec<usize>)> = Vec::new();
    for named in &cfg.regions {
        region_cells.push((
            named.name.clone(),
            select_region_cells(&reference_mesh, &named.name, &named.region)?,
        ));
    }

    let levels: Vec<usize> = (cfg.levels.first..=cfg.levels.last).collect();
    let solves = run_level_solves(&levels, threads, |level| {
        let mesh = ladder.mesh(level).clone();
        let space = Arc::new(build_space(mesh.clone(), cfg.degree)?);
        let rhs = assemble_measure_rhs(&space, &measure)?;
        let (solution, discrepancy) =
            solve_level(&space, field, rhs, cfg.scheme, cfg.solver_tol)?;
        Ok(LevelSolve {
            level,
            h: mesh.max_diameter(),
            n_dofs: space.n_dofs(),
            solution: solution.function,
            discrepancy,
        })
    })?;

    // Prolong each study solution to the reference mesh and integrate there.
    let target_space = if cfg.degree == reference_degree {
        reference_space.clone()
    } else {
        Arc::new(build_space(reference_mesh.clone(), cfg.degree)?)
    };
    let mut region_errors: Vec<(String, Vec<ErrorNorms>)> =
        cfg.regions.iter().map(|r| (r.name.clone(), Vec::new())).collect();
    for solve in &solves {
        let prolonged = prolong(&solve.solution, &target_space, &ladder);
        for (series, (_, cells)) in region_errors.iter_mut().zip(&region_cells) {
            series.1.push(error_norms_on_cells(&prolonged, &u_reference, cells)?);
        }
    }

    let reference = format!("level {} (degree {reference_degree})", cfg.reference_level);
    Ok(assemble_report(cfg, reference, &solves, region_errors))
}
