//! The three run modes.

use crate::config::{MeshSource, PlanSpec, Receiver, RunConfig};
use crate::{CliError, ConfigError};
use edgefem::assembly::{
    apply_constraints, apply_homogeneous_dirichlet, assemble, dipole_rhs, mms_rhs, project_dirichlet_trace, AssemblyError,
    MaterialModel,
};
use edgefem::basis::{dof_count, ElementOrders};
use edgefem::mesh::{build_connectivity, graded_axis, read_msh_file, structured_box_mesh, tensor_box_mesh, BoxBounds, Mesh};
use edgefem::postproc::{evaluate_field, l2_error, ConvergenceRecord, LevelRecord, PostprocError, SolutionField};
use edgefem::refine::{
    assign_orders, build_dofmap, characteristic_spacing, h_rule_params, skin_depth, source_spacing, AIR_RESISTIVITY,
};
use edgefem::solver::{solve, SolveReport};
use edgefem::{CVec3, Vec3};
use log::{info, warn};
use serde::Serialize;
use std::time::Instant;

fn mesh_err(e: impl std::fmt::Display) -> CliError {
    CliError::Mesh(e.to_string())
}

fn assembly_err(e: AssemblyError) -> CliError {
    match e {
        AssemblyError::Mesh(m) => CliError::Mesh(m.to_string()),
        AssemblyError::SingularElement { .. } => CliError::Mesh(e.to_string()),
        AssemblyError::UnknownRegion(_) => CliError::Config(ConfigError::Invalid {
            key: "materials.region",
            message: e.to_string(),
        }),
        other => CliError::Run(other.to_string()),
    }
}

fn postproc_err(e: PostprocError) -> CliError {
    match e {
        PostprocError::OutsideMesh { .. } => CliError::Mesh(e.to_string()),
        other => CliError::Run(other.to_string()),
    }
}

fn graded_mesh(bounds: &BoxBounds, focus: &BoxBounds, spacing: f64, growth: f64) -> Result<Mesh, CliError> {
    let axis = |a: usize| graded_axis(bounds.min[a], bounds.max[a], focus.min[a], focus.max[a], spacing, growth);
    let (xs, ys, zs) = (axis(0).map_err(mesh_err)?, axis(1).map_err(mesh_err)?, axis(2).map_err(mesh_err)?);
    build_connectivity(tensor_box_mesh(&xs, &ys, &zs).map_err(mesh_err)?).map_err(mesh_err)
}

/// Builds the single mesh of forward runs.
pub fn forward_mesh(config: &RunConfig, plan: &PlanSpec) -> Result<Mesh, CliError> {
    match config.mesh_source()? {
        MeshSource::Msh(path) => {
            let import = read_msh_file(&path).map_err(|e| CliError::Mesh(format!("{}: {e}", path.display())))?;
            if import.ignored_total() > 0 {
                info!("ignored {} non-tetrahedral elements", import.ignored_total());
            }
            let mesh = build_connectivity(import.mesh).map_err(mesh_err)?;
            if !mesh.repaired().is_empty() {
                warn!("reoriented {} inverted elements", mesh.repaired().len());
            }
            Ok(mesh)
        }
        MeshSource::Box { bounds, divisions, .. } => {
            let divisions = divisions.ok_or(ConfigError::MissingKey("mesh.box.divisions"))?;
            build_connectivity(structured_box_mesh(&bounds, divisions).map_err(mesh_err)?).map_err(mesh_err)
        }
        MeshSource::Graded {
            bounds,
            focus,
            spacing,
            growth,
        } => {
            let spacing = match spacing {
                Some(s) => s,
                None => {
                    let threshold = config.refinement()?.threshold;
                    characteristic_spacing(&config.materials()?, config.frequency()?, plan.max_order(), threshold)
                        .map_err(|e| CliError::Config(ConfigError::Invalid {
                            key: "mesh.graded.spacing",
                            message: e.to_string(),
                        }))?
                }
            };
            graded_mesh(&bounds, &focus, spacing, growth)
        }
    }
}

fn orders_for(mesh: &Mesh, plan: &PlanSpec) -> Result<edgefem::refine::DofMap, CliError> {
    let orders = assign_orders(mesh, &plan.mode(mesh.num_tets())).map_err(|e| {
        CliError::Config(ConfigError::Invalid {
            key: "refinement.orders",
            message: e.to_string(),
        })
    })?;
    Ok(build_dofmap(mesh, &orders))
}

/// MMS convergence study over the nested levels of `[mesh.box]`, one record
/// per refinement plan. Non-converged levels are recorded and the study
/// continues.
pub fn run_mms(config: &RunConfig) -> Result<Vec<ConvergenceRecord>, CliError> {
    let MeshSource::Box { bounds, levels, .. } = config.mesh_source()? else {
        return Err(ConfigError::Invalid {
            key: "mesh",
            message: "mms runs need a structured [mesh.box] source".into(),
        }
        .into());
    };
    let levels = levels.ok_or(ConfigError::MissingKey("mesh.box.levels"))?;
    if levels.len() < 2 {
        return Err(ConfigError::Invalid {
            key: "mesh.box.levels",
            message: "at least two levels required".into(),
        }
        .into());
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Invalid {
            key: "mesh.box.levels",
            message: "levels must be strictly increasing".into(),
        }
        .into());
    }
    let refinement = config.refinement()?;
    let solver = config.solver()?;
    let (spec, quad) = config.mms()?;
    spec.validate().map_err(|e| ConfigError::Invalid {
        key: "mms",
        message: e.to_string(),
    })?;
    let material = MaterialModel::homogeneous(spec.sigma).map_err(|e| ConfigError::Invalid {
        key: "mms.sigma",
        message: e.to_string(),
    })?;
    let frequency = spec.omega / (2.0 * std::f64::consts::PI);
    let extent = bounds.extent();
    let size = extent.x.max(extent.y).max(extent.z);

    let meshes = levels
        .iter()
        .map(|&n| build_connectivity(structured_box_mesh(&bounds, [n; 3]).map_err(mesh_err)?).map_err(mesh_err))
        .collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::new();
    for plan in &refinement.plans {
        let mut rows = Vec::new();
        for (&n, mesh) in levels.iter().zip(&meshes) {
            let start = Instant::now();
            let dm = orders_for(mesh, plan)?;
            let mut sys = assemble(mesh, &dm, &material, frequency, None).map_err(assembly_err)?;
            sys.rhs = mms_rhs(mesh, &dm, &|r: &Vec3| spec.forcing(r), quad).map_err(assembly_err)?;
            let trace = project_dirichlet_trace(mesh, &dm, &|r: &Vec3| spec.field(r)).map_err(assembly_err)?;
            apply_constraints(&mut sys, &trace);
            let (x, report) = solve(&sys, &solver).map_err(|e| CliError::Run(e.to_string()))?;
            let field = SolutionField::new(mesh, &dm, &x).map_err(postproc_err)?;
            let error = l2_error(&field, &|r: &Vec3| spec.field(r), quad).map_err(postproc_err)?;
            if !report.converged {
                warn!("{}: level {n} did not converge (residual {:.3e})", plan.label(), report.residual);
            }
            info!("{}: n={n} dof={} error={error:.6e} iterations={}", plan.label(), dm.total_dof(), report.iterations);
            rows.push(LevelRecord {
                divisions: n,
                h: size / n as f64,
                dof: dm.total_dof(),
                error,
                iterations: report.iterations,
                residual: report.residual,
                converged: report.converged,
                wall_time: Some(start.elapsed().as_secs_f64()),
            });
        }
        records.push(ConvergenceRecord::new(plan.label(), rows).map_err(postproc_err)?);
    }
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub plan: String,
    pub receivers: Vec<Receiver>,
    pub fields: Vec<CVec3>,
    pub report: SolveReport,
    pub num_tets: usize,
    pub dof: usize,
    pub assembly_time: f64,
}

/// Dipole forward run with `n x E = 0` on the whole boundary.
pub fn run_forward(config: &RunConfig) -> Result<ForwardResult, CliError> {
    let refinement = config.refinement()?;
    let plan = refinement.single()?.clone();
    let material = config.materials()?;
    let source = config.source()?;
    let receivers = config.receivers()?;
    let solver = config.solver()?;
    let mesh = forward_mesh(config, &plan)?;

    for (i, r) in receivers.iter().enumerate() {
        if mesh.locate_point(&r.position).is_err() {
            return Err(CliError::Mesh(format!(
                "receiver {i} at ({}, {}, {}) is outside the mesh",
                r.position.x, r.position.y, r.position.z
            )));
        }
    }
    if mesh.locate_point(&source.position).is_err() {
        return Err(CliError::Mesh(format!(
            "source at ({}, {}, {}) is outside the mesh",
            source.position.x, source.position.y, source.position.z
        )));
    }

    let start = Instant::now();
    let dm = orders_for(&mesh, &plan)?;
    info!("{} elements, {} dof", mesh.num_tets(), dm.total_dof());
    let mut sys = assemble(&mesh, &dm, &material, source.frequency, None).map_err(assembly_err)?;
    sys.rhs = dipole_rhs(&mesh, &dm, &source).map_err(assembly_err)?;
    apply_homogeneous_dirichlet(&mut sys, &dm, &mesh);
    let assembly_time = start.elapsed().as_secs_f64();
    let (x, report) = solve(&sys, &solver).map_err(|e| CliError::Run(e.to_string()))?;
    info!("solve: {} iterations, residual {:.3e}", report.iterations, report.residual);
    let field = SolutionField::new(&mesh, &dm, &x).map_err(postproc_err)?;
    let points: Vec<Vec3> = receivers.iter().map(|r| r.position).collect();
    let fields = evaluate_field(&field, &points).map_err(postproc_err)?;
    Ok(ForwardResult {
        plan: plan.label(),
        receivers,
        fields,
        report,
        num_tets: mesh.num_tets(),
        dof: dm.total_dof(),
        assembly_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSkinDepth {
    pub region: i32,
    pub rho_h: f64,
    pub skin_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformEstimate {
    pub volume: f64,
    pub cells: f64,
    pub tetrahedra: f64,
    pub dof: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingReport {
    pub frequency: f64,
    pub p: u8,
    pub threshold_percent: f64,
    pub regions: Vec<RegionSkinDepth>,
    pub rho_min: f64,
    pub skin_depth_min: f64,
    pub lambda_delta: f64,
    pub r_s: f64,
    pub d_delta: f64,
    pub source_length: Option<f64>,
    pub d_s: Option<f64>,
    pub uniform_mesh: Option<UniformEstimate>,
}

/// Kuhn meshes of a large box have per cell about one node, 7 edges,
/// 12 faces and 6 elements.
fn uniform_estimate(volume: f64, spacing: f64, p: u8) -> UniformEstimate {
    let cells = volume / spacing.powi(3);
    let per_tet = dof_count(&ElementOrders::uniform(p));
    let per_cell = 7.0 * (per_tet.edges / 6) as f64 + 12.0 * (per_tet.faces / 4) as f64 + 6.0 * per_tet.interior as f64;
    UniformEstimate {
        volume,
        cells,
        tetrahedra: 6.0 * cells,
        dof: cells * per_cell,
    }
}

fn domain_volume(config: &RunConfig) -> Result<Option<f64>, CliError> {
    let Some(mesh) = &config.mesh else {
        return Ok(None);
    };
    if mesh.msh.is_none() && mesh.structured.is_none() && mesh.graded.is_none() {
        return Ok(None);
    }
    Ok(Some(match config.mesh_source()? {
        MeshSource::Box { bounds, .. } | MeshSource::Graded { bounds, .. } => bounds.volume(),
        MeshSource::Msh(path) => {
            let import = read_msh_file(&path).map_err(|e| CliError::Mesh(format!("{}: {e}", path.display())))?;
            let mesh = build_connectivity(import.mesh).map_err(mesh_err)?;
            let (lo, hi) = mesh.bounding_box();
            BoxBounds::new(lo, hi).volume()
        }
    }))
}

/// Skin depths and the spacings of the meshing rules.
pub fn run_mesh_rules(config: &RunConfig) -> Result<SpacingReport, CliError> {
    let refinement = config.refinement()?;
    let p = refinement.single()?.max_order();
    let threshold = refinement.threshold;
    let material = config.materials()?;
    let frequency = config.frequency()?;
    let cfg_err = |key: &'static str| {
        move |e: edgefem::refine::RefineError| {
            CliError::Config(ConfigError::Invalid {
                key,
                message: e.to_string(),
            })
        }
    };
    let mut regions = Vec::new();
    for (id, c) in material.regions() {
        let rho = 1.0 / c.sigma_h;
        if rho >= AIR_RESISTIVITY {
            continue;
        }
        regions.push(RegionSkinDepth {
            region: id,
            rho_h: rho,
            skin_depth: skin_depth(rho, frequency).map_err(cfg_err("materials.region"))?,
        });
    }
    let rho_min = material
        .min_resistivity(AIR_RESISTIVITY)
        .ok_or(ConfigError::Invalid {
            key: "materials.region",
            message: "no conductive region".into(),
        })?;
    let params = h_rule_params(p, threshold).map_err(cfg_err("refinement.p"))?;
    let d_delta = characteristic_spacing(&material, frequency, p, threshold).map_err(cfg_err("materials.region"))?;
    let source_length = config.source_length()?;
    let d_s = source_length
        .map(|l| source_spacing(l, d_delta, p, threshold))
        .transpose()
        .map_err(cfg_err("source.length"))?;
    let uniform_mesh = domain_volume(config)?.map(|v| uniform_estimate(v, d_delta, p));
    Ok(SpacingReport {
        frequency,
        p,
        threshold_percent: threshold.percent(),
        regions,
        rho_min,
        skin_depth_min: skin_depth(rho_min, frequency).map_err(cfg_err("materials.region"))?,
        lambda_delta: params.lambda_delta,
        r_s: params.r_s,
        d_delta,
        source_length,
        d_s,
        uniform_mesh,
    })
}
