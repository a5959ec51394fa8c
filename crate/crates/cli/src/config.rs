//! Run configuration: TOML sections `[mesh]`, `[materials]`, `[source]`,
//! `[receivers]`, `[refinement]`, `[solver]`, `[output]` and `[mms]`.
//!
//! Every key is optional at parse time; [`RunConfig::validate`] checks the
//! keys each run mode needs and names the offending key on failure.

use edgefem::assembly::MaterialModel;
use edgefem::mesh::BoxBounds;
use edgefem::postproc::MmsSpec;
use edgefem::refine::{PlanMode, Threshold};
use edgefem::solver::{Method, PreconditionerKind, SolverConfig};
use edgefem::{CVec3, Complex64, Vec3};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

fn require<T>(value: Option<T>, key: &'static str) -> Result<T, ConfigError> {
    value.ok_or(ConfigError::MissingKey(key))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<MeshSection>,
    pub materials: Option<MaterialsSection>,
    pub source: Option<SourceSection>,
    pub receivers: Option<ReceiversSection>,
    pub refinement: Option<RefinementSection>,
    pub solver: Option<SolverSection>,
    pub output: Option<OutputSection>,
    pub mms: Option<MmsSection>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub msh: Option<PathBuf>,
    #[serde(rename = "box")]
    pub structured: Option<BoxSection>,
    pub graded: Option<GradedSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub min: Option<[f64; 3]>,
    pub max: Option<[f64; 3]>,
    pub divisions: Option<[usize; 3]>,
    /// Nested per-axis division counts of a convergence study.
    pub levels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedSection {
    pub min: Option<[f64; 3]>,
    pub max: Option<[f64; 3]>,
    pub focus_min: Option<[f64; 3]>,
    pub focus_max: Option<[f64; 3]>,
    /// Spacing inside the focus box; derived from the meshing rules if absent.
    pub spacing: Option<f64>,
    pub growth: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    #[serde(default)]
    pub region: Vec<RegionEntry>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionEntry {
    pub id: Option<i32>,
    pub rho_h: Option<f64>,
    pub rho_v: Option<f64>,
    #[serde(default)]
    pub air: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub frequency: Option<f64>,
    pub position: Option<[f64; 3]>,
    pub direction: Option<[f64; 3]>,
    pub moment: Option<f64>,
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiversSection {
    pub points: Option<Vec<[f64; 3]>>,
    pub line: Option<LineSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub start: Option<[f64; 3]>,
    pub end: Option<[f64; 3]>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(i64),
    Many(Vec<i64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSection {
    pub mode: Option<String>,
    pub p: Option<OneOrMany>,
    pub edge: Option<i64>,
    pub face: Option<i64>,
    pub interior: Option<i64>,
    pub orders: Option<Vec<i64>>,
    pub low: Option<i64>,
    pub high: Option<i64>,
    pub fraction: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Option<String>,
    pub tolerance: Option<f64>,
    pub restart: Option<usize>,
    pub max_iterations: Option<usize>,
    pub preconditioner: Option<String>,
    pub ssor_omega: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub timings: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsSection {
    pub k0: Option<f64>,
    pub sigma: Option<f64>,
    pub omega: Option<f64>,
    pub direction: Option<[f64; 3]>,
    pub polarization_re: Option<[f64; 3]>,
    pub polarization_im: Option<[f64; 3]>,
    pub quad_degree: Option<usize>,
}

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Msh(PathBuf),
    Box {
        bounds: BoxBounds,
        divisions: Option<[usize; 3]>,
        levels: Option<Vec<usize>>,
    },
    Graded {
        bounds: BoxBounds,
        focus: BoxBounds,
        spacing: Option<f64>,
        growth: f64,
    },
}

/// One polynomial-order plan.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanSpec {
    Uniform(u8),
    EntityLevel { edge: u8, face: u8, interior: u8 },
    PerElement(Vec<u8>),
    /// Fraction `fraction` of the elements, spread evenly over element ids,
    /// at order `high`; the rest at `low`.
    Mixed { low: u8, high: u8, fraction: f64 },
}

impl PlanSpec {
    pub fn label(&self) -> String {
        match self {
            PlanSpec::Uniform(p) => format!("uniform p={p}"),
            PlanSpec::EntityLevel { edge, face, interior } => {
                format!("entity edge={edge} face={face} interior={interior}")
            }
            PlanSpec::PerElement(_) => "per-element".to_string(),
            PlanSpec::Mixed { low, high, fraction } => format!("mixed p={low}/{high} fraction={fraction}"),
        }
    }

    pub fn max_order(&self) -> u8 {
        match self {
            PlanSpec::Uniform(p) => *p,
            PlanSpec::EntityLevel { edge, face, interior } => *edge.max(face).max(interior),
            PlanSpec::PerElement(o) => o.iter().copied().max().unwrap_or(1),
            PlanSpec::Mixed { high, low, .. } => *high.max(low),
        }
    }

    /// Refinement mode for a mesh with `num_tets` elements.
    pub fn mode(&self, num_tets: usize) -> PlanMode {
        match self {
            PlanSpec::Uniform(p) => PlanMode::Uniform(*p),
            PlanSpec::EntityLevel { edge, face, interior } => PlanMode::EntityLevel {
                edge: *edge,
                face: *face,
                interior: *interior,
            },
            PlanSpec::PerElement(o) => PlanMode::PerElement(o.clone()),
            PlanSpec::Mixed { low, high, fraction } => PlanMode::PerElement(mixed_orders(num_tets, *low, *high, *fraction)),
        }
    }
}

/// Evenly interleaved orders: element `t` is `high` when
/// `floor((t + 1) f) > floor(t f)`.
pub fn mixed_orders(num_tets: usize, low: u8, high: u8, fraction: f64) -> Vec<u8> {
    (0..num_tets)
        .map(|t| {
            let a = (t as f64 * fraction).floor();
            let b = ((t + 1) as f64 * fraction).floor();
            if b > a {
                high
            } else {
                low
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub plans: Vec<PlanSpec>,
    pub threshold: Threshold,
}

impl Refinement {
    /// The single plan of forward and mesh-rules runs.
    pub fn single(&self) -> Result<&PlanSpec, ConfigError> {
        match self.plans.as_slice() {
            [plan] => Ok(plan),
            _ => Err(invalid("refinement.p", "this mode takes a single polynomial order")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub position: Vec3,
}

fn order(value: i64, key: &'static str) -> Result<u8, ConfigError> {
    if (1..=edgefem::MAX_ORDER as i64).contains(&value) {
        Ok(value as u8)
    } else {
        Err(invalid(key, format!("polynomial order {value} outside [1, {}]", edgefem::MAX_ORDER)))
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn bounds(min: Option<[f64; 3]>, max: Option<[f64; 3]>, kmin: &'static str, kmax: &'static str) -> Result<BoxBounds, ConfigError> {
    let (lo, hi) = (vec3(require(min, kmin)?), vec3(require(max, kmax)?));
    if (0..3).any(|a| !(hi[a] > lo[a])) {
        return Err(invalid(kmax, "every component must exceed the minimum corner"));
    }
    Ok(BoxBounds::new(lo, hi))
}

fn unit(a: [f64; 3], key: &'static str) -> Result<Vec3, ConfigError> {
    let v = vec3(a);
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid(key, "direction must be a nonzero vector"));
    }
    Ok(v / n)
}

fn positive(value: f64, key: &'static str) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn mesh_source(&self) -> Result<MeshSource, ConfigError> {
        let mesh = require(self.mesh.as_ref(), "mesh")?;
        let count = mesh.msh.is_some() as usize + mesh.structured.is_some() as usize + mesh.graded.is_some() as usize;
        match count {
            0 => return Err(ConfigError::MissingKey("mesh.msh | mesh.box | mesh.graded")),
            1 => {}
            _ => return Err(invalid("mesh", "exactly one of msh, box and graded must be given")),
        }
        if let Some(path) = &mesh.msh {
            return Ok(MeshSource::Msh(self.base_dir.join(path)));
        }
        if let Some(b) = &mesh.structured {
            let divisions = b.divisions;
            if let Some(d) = divisions {
                if d.contains(&0) {
                    return Err(invalid("mesh.box.divisions", "division counts must be positive"));
                }
            }
            if let Some(levels) = &b.levels {
                if levels.contains(&0) {
                    return Err(invalid("mesh.box.levels", "division counts must be positive"));
                }
            }
            return Ok(MeshSource::Box {
                bounds: bounds(b.min, b.max, "mesh.box.min", "mesh.box.max")?,
                divisions,
                levels: b.levels.clone(),
            });
        }
        let g = mesh.graded.as_ref().expect("one source present");
        let outer = bounds(g.min, g.max, "mesh.graded.min", "mesh.graded.max")?;
        let focus = bounds(g.focus_min, g.focus_max, "mesh.graded.focus_min", "mesh.graded.focus_max")?;
        if (0..3).any(|a| focus.min[a] < outer.min[a] || focus.max[a] > outer.max[a]) {
            return Err(invalid("mesh.graded.focus_max", "focus box must lie inside the mesh box"));
        }
        let spacing = g.spacing.map(|s| positive(s, "mesh.graded.spacing")).transpose()?;
        let growth = g.growth.unwrap_or(1.3);
        if !(growth >= 1.0 && growth.is_finite()) {
            return Err(invalid("mesh.graded.growth", "growth factor must be at least 1"));
        }
        Ok(MeshSource::Graded {
            bounds: outer,
            focus,
            spacing,
            growth,
        })
    }

    pub fn materials(&self) -> Result<MaterialModel, ConfigError> {
        let section = require(self.materials.as_ref(), "materials")?;
        if section.region.is_empty() {
            return Err(ConfigError::MissingKey("materials.region"));
        }
        let mut model = MaterialModel::new();
        for r in &section.region {
            let id = require(r.id, "materials.region.id")?;
            if r.air {
                model.insert_air(id);
                continue;
            }
            let rho_h = positive(require(r.rho_h, "materials.region.rho_h")?, "materials.region.rho_h")?;
            let rho_v = positive(r.rho_v.unwrap_or(rho_h), "materials.region.rho_v")?;
            model
                .insert_resistivity(id, rho_h, rho_v)
                .map_err(|e| invalid("materials.region", e.to_string()))?;
        }
        Ok(model)
    }

    fn source_section(&self) -> Result<&SourceSection, ConfigError> {
        self.source.as_ref().ok_or(ConfigError::MissingKey("source"))
    }

    pub fn frequency(&self) -> Result<f64, ConfigError> {
        let f = require(self.source_section()?.frequency, "source.frequency")?;
        positive(f, "source.frequency")
    }

    pub fn source(&self) -> Result<edgefem::assembly::SourceSpec, ConfigError> {
        let s = self.source_section()?;
        Ok(edgefem::assembly::SourceSpec {
            position: vec3(require(s.position, "source.position")?),
            direction: unit(s.direction.unwrap_or([1.0, 0.0, 0.0]), "source.direction")?,
            moment: s.moment.unwrap_or(1.0),
            length: s.length.map(|l| positive(l, "source.length")).transpose()?.unwrap_or(1.0),
            frequency: self.frequency()?,
        })
    }

    /// Source length for the source-spacing rule, if given.
    pub fn source_length(&self) -> Result<Option<f64>, ConfigError> {
        match &self.source {
            Some(s) => s.length.map(|l| positive(l, "source.length")).transpose(),
            None => Ok(None),
        }
    }

    pub fn receivers(&self) -> Result<Vec<Receiver>, ConfigError> {
        let r = require(self.receivers.as_ref(), "receivers")?;
        let points = match (&r.points, &r.line) {
            (Some(points), None) => points.iter().map(|&p| vec3(p)).collect(),
            (None, Some(line)) => {
                let start = vec3(require(line.start, "receivers.line.start")?);
                let end = vec3(require(line.end, "receivers.line.end")?);
                let count = require(line.count, "receivers.line.count")?;
                match count {
                    0 => return Err(invalid("receivers.line.count", "at least one receiver required")),
                    1 => vec![start],
                    n => (0..n).map(|i| start + (end - start) * (i as f64 / (n - 1) as f64)).collect(),
                }
            }
            (None, None) => return Err(ConfigError::MissingKey("receivers.points | receivers.line")),
            (Some(_), Some(_)) => return Err(invalid("receivers", "give either points or line, not both")),
        };
        if points.is_empty() {
            return Err(invalid("receivers.points", "at least one receiver required"));
        }
        Ok(points.into_iter().map(|position| Receiver { position }).collect())
    }

    pub fn refinement(&self) -> Result<Refinement, ConfigError> {
        let r = require(self.refinement.as_ref(), "refinement")?;
        let threshold = Threshold::from_percent(r.threshold.unwrap_or(3.0))
            .map_err(|e| invalid("refinement.threshold", e.to_string()))?;
        let mode = r.mode.as_deref().unwrap_or("uniform");
        let plans = match mode {
            "uniform" => match require(r.p.clone(), "refinement.p")? {
                OneOrMany::One(p) => vec![PlanSpec::Uniform(order(p, "refinement.p")?)],
                OneOrMany::Many(ps) => {
                    if ps.is_empty() {
                        return Err(invalid("refinement.p", "list of orders is empty"));
                    }
                    ps.into_iter()
                        .map(|p| order(p, "refinement.p").map(PlanSpec::Uniform))
                        .collect::<Result<_, _>>()?
                }
            },
            "entity_level" => vec![PlanSpec::EntityLevel {
                edge: order(require(r.edge, "refinement.edge")?, "refinement.edge")?,
                face: order(require(r.face, "refinement.face")?, "refinement.face")?,
                interior: order(require(r.interior, "refinement.interior")?, "refinement.interior")?,
            }],
            "per_element" => {
                let orders = require(r.orders.clone(), "refinement.orders")?;
                vec![PlanSpec::PerElement(
                    orders
                        .into_iter()
                        .map(|p| order(p, "refinement.orders"))
                        .collect::<Result<_, _>>()?,
                )]
            }
            "mixed" => {
                let fraction = r.fraction.unwrap_or(0.5);
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(invalid("refinement.fraction", "must lie in [0, 1]"));
                }
                vec![PlanSpec::Mixed {
                    low: order(require(r.low, "refinement.low")?, "refinement.low")?,
                    high: order(require(r.high, "refinement.high")?, "refinement.high")?,
                    fraction,
                }]
            }
            other => {
                return Err(invalid(
                    "refinement.mode",
                    format!("unknown mode `{other}` (uniform, entity_level, per_element, mixed)"),
                ))
            }
        };
        Ok(Refinement { plans, threshold })
    }

    pub fn solver(&self) -> Result<SolverConfig, ConfigError> {
        let mut cfg = SolverConfig::default();
        let Some(s) = &self.solver else {
            return Ok(cfg);
        };
        if let Some(m) = &s.method {
            cfg.method = match m.as_str() {
                "krylov" => Method::Krylov,
                "dense" => Method::Dense,
                other => return Err(invalid("solver.method", format!("unknown method `{other}` (krylov, dense)"))),
            };
        }
        if let Some(t) = s.tolerance {
            cfg.tolerance = t;
        }
        if let Some(r) = s.restart {
            cfg.restart = r;
        }
        if let Some(m) = s.max_iterations {
            cfg.max_iterations = m;
        }
        if let Some(p) = &s.preconditioner {
            cfg.preconditioner = match p.as_str() {
                "none" => PreconditionerKind::None,
                "diagonal" => PreconditionerKind::Diagonal,
                "ssor" => PreconditionerKind::Ssor {
                    omega: s.ssor_omega.unwrap_or(1.0),
                },
                other => {
                    return Err(invalid(
                        "solver.preconditioner",
                        format!("unknown preconditioner `{other}` (none, diagonal, ssor)"),
                    ))
                }
            };
        }
        cfg.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .as_ref()
            .and_then(|o| o.dir.clone())
            .map(|d| self.base_dir.join(d))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn timings(&self) -> bool {
        self.output.as_ref().and_then(|o| o.timings).unwrap_or(true)
    }

    pub fn mms(&self) -> Result<(MmsSpec, usize), ConfigError> {
        let d = MmsSpec::default();
        let Some(m) = &self.mms else {
            return Ok((d, edgefem::quadrature::MAX_TET_DEGREE));
        };
        let re = m.polarization_re.unwrap_or([1.0, 1.0, 0.0]);
        let im = m.polarization_im.unwrap_or([0.0; 3]);
        let spec = MmsSpec {
            e_pol: CVec3::from_fn(|i, _| Complex64::new(re[i], im[i])),
            k_dir: m.direction.map(|a| unit(a, "mms.direction")).transpose()?.unwrap_or(d.k_dir),
            k0: m.k0.unwrap_or(d.k0),
            sigma: positive(m.sigma.unwrap_or(d.sigma), "mms.sigma")?,
            omega: positive(m.omega.unwrap_or(d.omega), "mms.omega")?,
        };
        let degree = m.quad_degree.unwrap_or(edgefem::quadrature::MAX_TET_DEGREE);
        if !(1..=edgefem::quadrature::MAX_TET_DEGREE).contains(&degree) {
            return Err(invalid(
                "mms.quad_degree",
                format!("degree {degree} outside [1, {}]", edgefem::quadrature::MAX_TET_DEGREE),
            ));
        }
        Ok((spec, degree))
    }
}
