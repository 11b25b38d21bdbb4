//! Experiment configuration: a JSON-serializable description of a convergence
//! study, plus built-in presets for the bundled experiments.
//!
//! A configuration names the domain, the polynomial degree, the scheme, the
//! range of refinement levels, the reference level used in place of an exact
//! solution, the measure on the right-hand side, and the named regions over
//! which errors are reported.

use crate::assembly::{CurveAtom, MeasureData, PointAtom};
use crate::error::FemError;
use crate::mesh::{
    generate_cube, generate_hexagon, generate_lshape, generate_unit_square, hexagon_vertices,
    RegionPredicate, SimplicialMesh,
};
use serde::{Deserialize, Serialize};

/// Initial (level-0) mesh of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// L-shaped domain (-1,1)^2 minus the closed quadrant [0,1)x(-1,0],
    /// meshed with n subdivisions per unit length.
    Lshape { n: usize },
    /// Irregular hexagon, fanned from its centroid and pre-refined.
    Hexagon { pre_refinements: usize },
    /// Unit cube (0,1)^3, n^3 subcubes split into six tetrahedra each.
    Cube { n: usize },
    /// Unit square (0,1)^2, n^2 squares split into two triangles each.
    UnitSquare { n: usize },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Cube { .. } => 3,
            _ => 2,
        }
    }

    pub fn build(&self) -> Result<SimplicialMesh, FemError> {
        match *self {
            DomainSpec::Lshape { n } => generate_lshape(n),
            DomainSpec::Hexagon { pre_refinements } => generate_hexagon(pre_refinements),
            DomainSpec::Cube { n } => generate_cube(n),
            DomainSpec::UnitSquare { n } => generate_unit_square(n),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DomainSpec::Lshape { n } => format!("lshape(n={n})"),
            DomainSpec::Hexagon { pre_refinements } => {
                format!("hexagon(pre_refinements={pre_refinements})")
            }
            DomainSpec::Cube { n } => format!("cube(n={n})"),
            DomainSpec::UnitSquare { n } => format!("unit_square(n={n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Standard,
    Berggren,
    /// Solve with both schemes, report errors of the standard solution, and
    /// record the largest coefficient discrepancy between the two.
    Both,
}

impl SchemeChoice {
    pub fn label(self) -> &'static str {
        match self {
            SchemeChoice::Standard => "standard",
            SchemeChoice::Berggren => "berggren",
            SchemeChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
    H1Seminorm,
}

impl NormKind {
    pub fn label(self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::H1Seminorm => "h1",
        }
    }
}

/// Inclusive range of study levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub first: usize,
    pub last: usize,
}

/// A point source `{x, w}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub x: Vec<f64>,
    #[serde(default = "default_weight")]
    pub w: f64,
}

/// A line source: a named parametric curve or an explicit sample list,
/// with weight per unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub curve: CurveSource,
    #[serde(default = "default_weight")]
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSource {
    Named(String),
    Samples(Vec<Vec<f64>>),
}

fn default_weight() -> f64 {
    1.0
}

/// The right-hand side: either a sum of point/line sources, or the smooth
/// manufactured problem with known exact solution (for calibration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Atoms {
        #[serde(default)]
        points: Vec<PointSpec>,
        #[serde(default)]
        curves: Vec<CurveSpec>,
    },
    SmoothSinProduct,
}

/// A region with a CSV-safe name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRegion {
    pub name: String,
    pub region: RegionPredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub degree: usize,
    pub scheme: SchemeChoice,
    pub levels: LevelRange,
    pub reference_level: usize,
    #[serde(default)]
    pub reference_degree_override: Option<usize>,
    pub measure: MeasureSpec,
    pub regions: Vec<NamedRegion>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::L2, NormKind::H1Seminorm]
}

fn default_solver_tol() -> f64 {
    1e-12
}

impl ExperimentConfig {
    /// Checks internal consistency; every error names the offending field.
    pub fn validate(&self) -> Result<(), FemError> {
        let fail = |msg: String| Err(FemError::Config(msg));
        if !(1..=3).contains(&self.degree) {
            return fail(format!("degree: must be 1, 2, or 3, got {}", self.degree));
        }
        if let Some(d) = self.reference_degree_override {
            if !(1..=3).contains(&d) {
                return fail(format!("reference_degree_override: must be 1, 2, or 3, got {d}"));
            }
        }
        if self.levels.first > self.levels.last {
            return fail(format!(
                "levels: first {} exceeds last {}",
                self.levels.first, self.levels.last
            ));
        }
        if self.reference_level < self.levels.last + 1 {
            return fail(format!(
                "reference_level: {} must be at least levels.last + 1 = {}",
                self.reference_level,
                self.levels.last + 1
            ));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1e-2) {
            return fail(format!("solver_tol: {} out of range (0, 1e-2)", self.solver_tol));
        }
        if self.regions.is_empty() {
            return fail("regions: at least one named region is required".into());
        }
        let dim = self.domain.dim();
        for r in &self.regions {
            if r.name.is_empty()
                || !r.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return fail(format!(
                    "regions: name '{}' must be nonempty [A-Za-z0-9_]",
                    r.name
                ));
            }
            match &r.region {
                RegionPredicate::WholeDomain => {}
                RegionPredicate::Ball { center, radius }
                | RegionPredicate::BallComplement { center, radius } => {
                    if center.len() != dim {
                        return fail(format!(
                            "regions: '{}' center has {} coordinates, domain is {}D",
                            r.name,
                            center.len(),
                            dim
                        ));
                    }
                    if !(*radius > 0.0) {
                        return fail(format!("regions: '{}' radius must be positive", r.name));
                    }
                }
            }
        }
        let mut names: Vec<&str> = self.regions.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.regions.len() {
            return fail("regions: names must be unique".into());
        }
        if self.norms.is_empty() {
            return fail("norms: at least one of l2, h1_seminorm is required".into());
        }
        match &self.measure {
            MeasureSpec::Atoms { points, curves } => {
                for (i, p) in points.iter().enumerate() {
                    if p.x.len() != dim {
                        return fail(format!(
                            "measure.points[{i}]: position has {} coordinates, domain is {}D",
                            p.x.len(),
                            dim
                        ));
                    }
                    if !p.w.is_finite() {
                        return fail(format!("measure.points[{i}]: weight must be finite"));
                    }
                }
                for (i, c) in curves.iter().enumerate() {
                    match &c.curve {
                        CurveSource::Named(name) => {
                            if helix_shift(name).is_none() {
                                return fail(format!(
                                    "measure.curves[{i}]: unknown curve preset '{name}' \
                                     (known: helix1, helix2, helix3)"
                                ));
                            }
                            if dim != 3 {
                                return fail(format!(
                                    "measure.curves[{i}]: preset '{name}' is a 3D curve"
                                ));
                            }
                        }
                        CurveSource::Samples(pts) => {
                            if pts.len() < 2 {
                                return fail(format!(
                                    "measure.curves[{i}]: needs at least 2 sample points"
                                ));
                            }
                            if pts.iter().any(|p| p.len() != dim) {
                                return fail(format!(
                                    "measure.curves[{i}]: sample points must have {dim} \
                                     coordinates"
                                ));
                            }
                        }
                    }
                    if !c.w.is_finite() {
                        return fail(format!("measure.curves[{i}]: weight must be finite"));
                    }
                }
            }
            MeasureSpec::SmoothSinProduct => {
                let ok = matches!(
                    self.domain,
                    DomainSpec::UnitSquare { .. } | DomainSpec::Lshape { .. } | DomainSpec::Cube { .. }
                );
                if !ok {
                    return fail(
                        "measure: smooth_sin_product needs a domain whose boundary lies on \
                         integer grid lines (unit_square, lshape, cube)"
                            .into(),
                    );
                }
            }
        }
        Ok(())
    }

    /// Materializes the measure; `None` for the smooth manufactured problem.
    pub fn build_measure(&self) -> Result<Option<MeasureData>, FemError> {
        let dim = self.domain.dim();
        match &self.measure {
            MeasureSpec::SmoothSinProduct => Ok(None),
            MeasureSpec::Atoms { points, curves } => {
                let mut data = MeasureData::default();
                for (i, p) in points.iter().enumerate() {
                    data.points.push(PointAtom {
                        position: p.x.clone(),
                        weight: p.w,
                        label: format!("points[{i}]"),
                    });
                }
                for (i, c) in curves.iter().enumerate() {
                    let (points, label) = match &c.curve {
                        CurveSource::Named(name) => {
                            let shift = helix_shift(name).ok_or_else(|| {
                                FemError::Config(format!("unknown curve preset '{name}'"))
                            })?;
                            (sample_helix(shift), name.clone())
                        }
                        CurveSource::Samples(pts) => {
                            let mut flat = Vec::with_capacity(pts.len() * dim);
                            for p in pts {
                                flat.extend_from_slice(p);
                            }
                            (flat, format!("curves[{i}]"))
                        }
                    };
                    data.curves.push(CurveAtom { points, dim, density: c.w, label });
                }
                Ok(Some(data))
            }
        }
    }

    /// The manufactured problem, when the measure is the smooth one.
    pub fn smooth_problem(&self) -> Option<SmoothProblem> {
        match self.measure {
            MeasureSpec::SmoothSinProduct => Some(smooth_sin_product(self.domain.dim())),
            _ => None,
        }
    }

    pub fn reference_degree(&self) -> usize {
        self.reference_degree_override.unwrap_or(self.degree)
    }
}

/// Exact solution, gradient, and load of a manufactured smooth problem.
#[derive(Clone, Copy)]
pub struct SmoothProblem {
    pub dim: usize,
    pub exact: fn(&[f64]) -> f64,
    pub exact_gradient: fn(&[f64]) -> [f64; 3],
    pub load: fn(&[f64]) -> f64,
}

/// u = prod_i sin(pi x_i), f = dim * pi^2 * u; u vanishes on every integer
/// grid line, hence on the unit square, L-shape, and unit cube boundaries.
pub fn smooth_sin_product(dim: usize) -> SmoothProblem {
    use std::f64::consts::PI;
    fn u2(x: &[f64]) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin()
    }
    fn g2(x: &[f64]) -> [f64; 3] {
        [
            PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            0.0,
        ]
    }
    fn f2(x: &[f64]) -> f64 {
        2.0 * PI * PI * u2(x)
    }
    fn u3(x: &[f64]) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()
    }
    fn g3(x: &[f64]) -> [f64; 3] {
        [
            PI * (PI * x[0]).cos() * (PI * x[1]).sin() * (PI * x[2]).sin(),
            PI * (PI * x[0]).sin() * (PI * x[1]).cos() * (PI * x[2]).sin(),
            PI * (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).cos(),
        ]
    }
    fn f3(x: &[f64]) -> f64 {
        3.0 * PI * PI * u3(x)
    }
    match dim {
        2 => SmoothProblem { dim, exact: u2, exact_gradient: g2, load: f2 },
        3 => SmoothProblem { dim, exact: u3, exact_gradient: g3, load: f3 },
        _ => panic!("smooth problem defined for dim 2 and 3 only"),
    }
}

fn helix_shift(name: &str) -> Option<usize> {
    match name {
        "helix1" => Some(0),
        "helix2" => Some(1),
        "helix3" => Some(2),
        _ => None,
    }
}

/// Component functions of the helix arcs: the three curves are cyclic
/// coordinate shifts of (f1, f2, f3) on t in [0, 0.4].
fn helix_components(t: f64) -> [f64; 3] {
    use std::f64::consts::PI;
    [
        0.5 + 0.1 * (1.0 - t) * (4.0 * PI * t).sin(),
        0.5 + 0.1 * (1.0 - t) * (4.0 * PI * t).cos(),
        0.3 + t,
    ]
}

fn helix_point(shift: usize, t: f64) -> [f64; 3] {
    let f = helix_components(t);
    [f[shift % 3], f[(shift + 1) % 3], f[(shift + 2) % 3]]
}

fn polyline_length(flat: &[f64]) -> f64 {
    let n = flat.len() / 3;
    let mut total = 0.0;
    for s in 1..n {
        let (p, q) = (&flat[(s - 1) * 3..s * 3], &flat[s * 3..(s + 1) * 3]);
        total += ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2)).sqrt();
    }
    total
}

/// Samples a helix arc as a polyline: 512 uniform parameter segments,
/// doubled until the chord length stabilizes to a relative 1e-10.
fn sample_helix(shift: usize) -> Vec<f64> {
    const T_END: f64 = 0.4;
    let sample = |segments: usize| -> Vec<f64> {
        let mut flat = Vec::with_capacity((segments + 1) * 3);
        for i in 0..=segments {
            let t = T_END * i as f64 / segments as f64;
            flat.extend_from_slice(&helix_point(shift, t));
        }
        flat
    };
    let mut n = 512usize;
    let mut pts = sample(n);
    let mut len = polyline_length(&pts);
    loop {
        n *= 2;
        let next = sample(n);
        let next_len = polyline_length(&next);
        if (next_len - len).abs() <= 1e-10 * next_len {
            return next;
        }
        pts = next;
        len = next_len;
        if n >= 1 << 21 {
            return pts;
        }
    }
}

/// Built-in experiment presets. `degree` overrides the preset's default
/// polynomial degree.
pub fn preset(name: &str, degree: Option<usize>) -> Result<ExperimentConfig, FemError> {
    let k = degree.unwrap_or(1);
    let third = 1.0 / 6.0;
    let cfg = match name {
        "example1" => ExperimentConfig {
            name: "example1".into(),
            domain: DomainSpec::Lshape { n: 4 },
            degree: k,
            scheme: SchemeChoice::Both,
            levels: LevelRange { first: 0, last: 4 },
            reference_level: 6,
            reference_degree_override: Some(1),
            measure: MeasureSpec::Atoms {
                points: vec![PointSpec { x: vec![-0.5, 0.5], w: 1.0 }],
                curves: Vec::new(),
            },
            regions: vec![
                NamedRegion { name: "omega".into(), region: RegionPredicate::WholeDomain },
                NamedRegion {
                    name: "omega_minus_b1".into(),
                    region: RegionPredicate::BallComplement {
                        center: vec![-0.5, 0.5],
                        radius: third,
                    },
                },
                NamedRegion {
                    name: "omega_minus_b2".into(),
                    region: RegionPredicate::BallComplement {
                        center: vec![-0.5, 0.5],
                        radius: 0.1,
                    },
                },
                NamedRegion {
                    name: "b3".into(),
                    region: RegionPredicate::Ball { center: vec![0.0, 0.0], radius: third },
                },
            ],
            norms: default_norms(),
            solver_tol: 1e-12,
            output: None,
        },
        "example2" => {
            let v6 = hexagon_vertices()[5];
            ExperimentConfig {
                name: "example2".into(),
                domain: DomainSpec::Hexagon { pre_refinements: 1 },
                degree: k,
                scheme: SchemeChoice::Both,
                levels: LevelRange { first: 0, last: 4 },
                reference_level: 6,
                reference_degree_override: None,
                measure: MeasureSpec::Atoms {
                    points: vec![PointSpec { x: vec![0.0, 0.0], w: 1.0 }],
                    curves: Vec::new(),
                },
                regions: vec![
                    NamedRegion { name: "omega".into(), region: RegionPredicate::WholeDomain },
                    NamedRegion {
                        name: "omega_minus_b1".into(),
                        region: RegionPredicate::BallComplement {
                            center: vec![0.0, 0.0],
                            radius: third,
                        },
                    },
                    NamedRegion {
                        name: "omega_minus_b2".into(),
                        region: RegionPredicate::BallComplement {
                            center: vec![0.0, 0.0],
                            radius: 0.1,
                        },
                    },
                    NamedRegion {
                        name: "b3".into(),
                        region: RegionPredicate::Ball { center: v6.to_vec(), radius: third },
                    },
                ],
                norms: default_norms(),
                solver_tol: 1e-12,
                output: None,
            }
        }
        "example3" => ExperimentConfig {
            name: "example3".into(),
            domain: DomainSpec::Cube { n: 2 },
            degree: k,
            scheme: SchemeChoice::Both,
            levels: LevelRange { first: 0, last: 3 },
            // The level-5 reference with higher-order elements exceeds the
            // intended machine budget; cap it at 4 for k > 1.
            reference_level: if k == 1 { 5 } else { 4 },
            reference_degree_override: None,
            measure: MeasureSpec::Atoms {
                points: Vec::new(),
                curves: vec![
                    CurveSpec { curve: CurveSource::Named("helix1".into()), w: 1.6 },
                    CurveSpec { curve: CurveSource::Named("helix2".into()), w: 0.8 },
                    CurveSpec { curve: CurveSource::Named("helix3".into()), w: 1.2 },
                ],
            },
            regions: vec![
                NamedRegion { name: "omega".into(), region: RegionPredicate::WholeDomain },
                NamedRegion {
                    name: "omega_minus_b1".into(),
                    region: RegionPredicate::BallComplement {
                        center: vec![0.5, 0.5, 0.5],
                        radius: 0.3,
                    },
                },
                NamedRegion {
                    name: "omega_minus_b2".into(),
                    region: RegionPredicate::BallComplement {
                        center: vec![0.5, 0.5, 0.5],
                        radius: 0.4,
                    },
                },
            ],
            norms: default_norms(),
            solver_tol: 1e-10,
            output: None,
        },
        "calibration" => ExperimentConfig {
            name: "calibration".into(),
            domain: DomainSpec::UnitSquare { n: 1 },
            degree: k,
            scheme: SchemeChoice::Standard,
            levels: LevelRange { first: 1, last: 5 },
            reference_level: 6,
            reference_degree_override: None,
            measure: MeasureSpec::SmoothSinProduct,
            regions: vec![NamedRegion {
                name: "omega".into(),
                region: RegionPredicate::WholeDomain,
            }],
            norms: default_norms(),
            solver_tol: 1e-12,
            output: None,
        },
        other => {
            return Err(FemError::Config(format!(
                "unknown preset '{other}' (known: example1, example2, example3, calibration)"
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
