use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use geoxray_core::geometry::{simplicity_check, ConformalSurface};
use geoxray_core::inversion::{
    adjoint_apply, assemble_forward, boundary_vanishing_basis, cgls_weighted, degree_test, kernel_analysis,
    one_sided_solution, one_sided_test, potential_degree, DegreeOptions, ForwardMode, GapRule, Side,
};
use geoxray_core::random::random_boundary_vanishing_tensor;
use geoxray_core::sphere_bundle::{parse_scalar, Attenuation, FnPhase, SpatialGrid};
use geoxray_core::transforms::{full_transform, kernel_element, XrayOptions};
use geoxray_core::{Point, Warning, C64};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub comparison: &'static str,
    pub tolerance: f64,
    pub passed: bool,
}

impl Criterion {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Criterion { name: name.into(), value, comparison: "<=", tolerance, passed: value <= tolerance }
    }

    fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Criterion { name: name.into(), value, comparison: ">=", tolerance, passed: value >= tolerance }
    }

    fn equal(name: &str, value: usize, expected: usize) -> Self {
        Criterion {
            name: name.into(),
            value: value as f64,
            comparison: "==",
            tolerance: expected as f64,
            passed: value == expected,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<Warning>,
    pub artifacts: Vec<PathBuf>,
}

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub config_hash: String,
    pub out: PathBuf,
    pub rng: ChaCha8Rng,
}

impl Context<'_> {
    fn surface(&self) -> Result<ConformalSurface, CliError> {
        Ok(ConformalSurface::parse(&self.config.surface)?)
    }

    fn attenuation(&mut self) -> Result<Attenuation, CliError> {
        let a = &self.config.attenuation;
        Ok(Attenuation::parse(&a.h, &a.alpha1, &a.alpha2, &mut self.rng)?)
    }

    fn rank(&self) -> Result<usize, CliError> {
        match self.config.rank {
            0 => Err(CliError::Config("rank must be at least 1".into())),
            m => Ok(m),
        }
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T, outcome: &mut Outcome) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        outcome.artifacts.push(path);
        Ok(())
    }
}

pub fn validate_surface(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let report = simplicity_check(&surface, &ctx.config.simplicity);
    let mut out = Outcome::default();
    out.criteria.push(Criterion::at_least("boundary_curvature", report.min_boundary_curvature, 0.0));
    out.criteria.push(Criterion::equal("conjugate_points", report.conjugate_points.len(), 0));
    out.criteria.push(Criterion::equal("trapped_geodesics", report.trapped, 0));
    ctx.write_json("validate_surface.json", &report, &mut out)?;
    Ok(out)
}

pub fn forward(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let f = parse_scalar(&ctx.config.forward.integrand, &mut ctx.rng)?;
    let psi = FnPhase(move |x: Point, _| f.value(x));
    let opts = XrayOptions { trace: ctx.config.trace, underresolved_threshold: ctx.config.forward.underresolved_threshold };
    let mut data = full_transform(&psi, &atten, &surface, &ctx.config.rays, &opts)?;
    data.meta.integrand = ctx.config.forward.integrand.clone();
    data.meta.config_hash = Some(ctx.config_hash.clone());
    let stem = ctx.out.join("forward");
    data.write(&stem)?;
    let mut out = Outcome { warnings: data.warnings.clone(), ..Default::default() };
    let nonfinite = data.values.iter().filter(|v| !v.is_finite()).count();
    out.criteria.push(Criterion::equal("nonfinite_values", nonfinite, 0));
    out.artifacts.push(stem.with_extension("csv"));
    out.artifacts.push(stem.with_extension("json"));
    Ok(out)
}

pub fn kernel_check(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let m = ctx.rank()?;
    let cfg = &ctx.config.kernel;
    let coarse_opts = XrayOptions { trace: ctx.config.trace, underresolved_threshold: None };
    let mut fine_opts = coarse_opts;
    fine_opts.trace.step /= 2.0;
    let mut rows = Vec::new();
    let (mut worst, mut worst_ratio) = (0.0_f64, f64::INFINITY);
    for k in 0..cfg.potentials {
        let p = random_boundary_vanishing_tensor(&mut ctx.rng, m - 1, cfg.potential_degree, cfg.scale);
        let el = kernel_element(&p, &atten, &surface)?;
        let psi = el.integrand(&surface);
        let sup = full_transform(&psi, &atten, &surface, &ctx.config.rays, &coarse_opts)?.sup_norm();
        worst = worst.max(sup);
        let mut row = json!({ "potential": k, "sup": sup });
        if cfg.min_halving_ratio > 0.0 {
            let fine = full_transform(&psi, &atten, &surface, &ctx.config.rays, &fine_opts)?.sup_norm();
            let ratio = sup / fine;
            worst_ratio = worst_ratio.min(ratio);
            row["sup_half_step"] = json!(fine);
            row["halving_ratio"] = json!(ratio);
        }
        rows.push(row);
    }
    let mut out = Outcome::default();
    out.criteria.push(Criterion::at_most("kernel_sup", worst, cfg.tolerance));
    if cfg.min_halving_ratio > 0.0 && cfg.potentials > 0 {
        out.criteria.push(Criterion::at_least("halving_ratio", worst_ratio, cfg.min_halving_ratio));
    }
    let report = json!({ "rank": m, "step": coarse_opts.trace.step, "potentials": rows });
    ctx.write_json("kernel_check.json", &report, &mut out)?;
    Ok(out)
}

pub fn degree_check(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let m = ctx.rank()?;
    let cfg = &ctx.config.degree;
    let opts = DegreeOptions {
        grid_resolution: cfg.grid_resolution,
        n_angles: cfg.n_angles,
        trace: ctx.config.trace,
        degree_tolerance: cfg.tolerance,
    };
    let p = random_boundary_vanishing_tensor(&mut ctx.rng, m - 1, cfg.potential_degree, 1.0);
    let report = degree_test(&p, &atten, &surface, &opts)?;
    let mut out = Outcome::default();
    out.criteria.push(Criterion::at_most("high_mode_energy", report.high_mode_energy, cfg.tolerance));
    out.criteria.push(Criterion::at_most("sup_error", report.sup_error, cfg.tolerance));
    out.criteria.push(Criterion::at_most("degree", report.degree as f64, (m - 1) as f64));
    let mut one_sided = Vec::new();
    if cfg.one_sided {
        for side in [Side::Negative, Side::Positive] {
            let u = one_sided_solution(&mut ctx.rng, m, side, 2);
            let rep = one_sided_test(&u, m, side, &atten, &surface, &opts)?;
            let name = match side {
                Side::Negative => "one_sided_negative",
                Side::Positive => "one_sided_positive",
            };
            out.criteria.push(Criterion::at_most(name, rep.forbidden_energy, cfg.tolerance));
            one_sided.push(rep);
        }
    }
    ctx.write_json("degree_check.json", &json!({ "degree": report, "one_sided": one_sided }), &mut out)?;
    Ok(out)
}

pub fn adjoint_test(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let m = ctx.rank()?;
    let cfg = &ctx.config.adjoint;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for mode in [ForwardMode::Scalar, ForwardMode::Pair { m }] {
        let a = assemble_forward(mode, cfg.basis_degree, &atten, &ctx.config.rays, &surface, &ctx.config.trace, usize::MAX)?;
        for _ in 0..cfg.pairs {
            let rng = &mut ctx.rng;
            let f = DVector::from_fn(a.cols(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let d = DVector::from_fn(a.rows(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let af = a.apply(&f)?;
            let ad = adjoint_apply(&a, &d)?;
            let defect = (d.dotc(&af) - ad.dotc(&f)).norm() / (af.norm() * d.norm()).max(f64::MIN_POSITIVE);
            worst = worst.max(defect);
            rows.push(json!({ "mode": mode, "relative_defect": defect }));
        }
    }
    let mut out = Outcome::default();
    out.criteria.push(Criterion::at_most("adjoint_defect", worst, cfg.tolerance));
    ctx.write_json("adjoint_test.json", &json!({ "pairs": rows }), &mut out)?;
    Ok(out)
}

pub fn invert(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let cfg = &ctx.config.invert;
    let phantom = parse_scalar(&cfg.phantom, &mut ctx.rng)?;
    let a = assemble_forward(
        ForwardMode::Scalar,
        cfg.basis_degree,
        &atten,
        &ctx.config.rays,
        &surface,
        &ctx.config.trace,
        cfg.size_cap,
    )?;
    let truth = phantom.clone();
    let psi = FnPhase(move |x: Point, _| truth.value(x));
    let opts = XrayOptions { trace: ctx.config.trace, underresolved_threshold: None };
    let data = full_transform(&psi, &atten, &surface, &ctx.config.rays, &opts)?;
    let b = DVector::from_vec(data.values);
    let weights = a.basis.smoothness_weights(cfg.smoothness);
    let sol = cgls_weighted(&a.matrix, &b, &weights, cfg.max_iter, cfg.rtol);

    let grid = SpatialGrid::new(cfg.reference_resolution)?;
    let path = ctx.out.join("invert.csv");
    let mut csv = BufWriter::new(fs::File::create(&path)?);
    writeln!(csv, "x,y,re,im,truth_re,truth_im")?;
    let (mut num, mut den) = (0.0, 0.0);
    for &x in grid.nodes() {
        let (f, g) = (a.basis.combine(sol.x.as_slice(), x), phantom.value(x));
        num += (f - g).norm_sqr();
        den += g.norm_sqr();
        writeln!(csv, "{:?},{:?},{:?},{:?},{:?},{:?}", x[0], x[1], f.re, f.im, g.re, g.im)?;
    }
    csv.flush()?;
    let error = (num / den.max(f64::MIN_POSITIVE)).sqrt();

    let mut out = Outcome::default();
    out.artifacts.push(path);
    out.criteria.push(Criterion::at_most("relative_l2_error", error, cfg.tolerance));
    out.criteria.push(Criterion::at_most("iterations", sol.iterations as f64, cfg.max_iter as f64));
    let report = json!({
        "basis_functions": a.cols(),
        "rays": a.rows(),
        "provenance": a.provenance,
        "relative_l2_error": error,
        "solver": sol,
    });
    ctx.write_json("invert.json", &report, &mut out)?;
    Ok(out)
}

pub fn kernel_analysis_cmd(ctx: &mut Context) -> Result<Outcome, CliError> {
    let surface = ctx.surface()?;
    let atten = ctx.attenuation()?;
    let m = ctx.rank()?;
    let cfg = &ctx.config.kernel_analysis;
    let a = assemble_forward(
        ForwardMode::Pair { m },
        cfg.basis_degree,
        &atten,
        &ctx.config.rays,
        &surface,
        &ctx.config.trace,
        usize::MAX,
    )?;
    let p_basis = boundary_vanishing_basis(m - 1, potential_degree(cfg.basis_degree, &atten))?;
    let rule = GapRule { ceiling: cfg.ceiling, min_ratio: cfg.min_gap_ratio };
    let report = kernel_analysis(&a, &atten, &p_basis, &rule)?;
    let mut out = Outcome::default();
    out.criteria.push(Criterion::equal("near_null_dimension", report.near_null_dimension, p_basis.len()));
    out.criteria.push(Criterion::at_most("max_angle", report.max_angle, cfg.angle_tolerance));
    out.criteria.push(Criterion::at_least(
        "complement_min_singular",
        report.complement_min_singular,
        cfg.complement_factor * report.ceiling,
    ));
    if cfg.dump_matrix {
        let path = ctx.out.join("forward_matrix.bin");
        a.dump(&path)?;
        out.artifacts.push(path);
    }
    let value: Value = json!({ "columns": a.cols(), "provenance": a.provenance, "report": report });
    ctx.write_json("kernel_analysis.json", &value, &mut out)?;
    Ok(out)
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)?;
    Ok(())
}
