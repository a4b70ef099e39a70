//! Running one scenario: hypotheses, solve, analyses, files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};
use obstacle_core::blowup::{classify_point, write_classification_csv, ClassificationResult};
use obstacle_core::field::{Evaluator, FnEvaluator, Jet};
use obstacle_core::geometry::{extract_free_boundary, growth_constants, CoincidenceGeometry, GrowthReport};
use obstacle_core::monotone::{
    default_radii, dyadic_radii, freezing_defect, monneau_curve, verdict, weiss_curve, MonotonicityReport, OmegaSpec,
};
use obstacle_core::normalize::{build_frame, NormalizedFrame};
use obstacle_core::problem::{check_hypotheses, HypothesisReport, ObstacleProblem};
use obstacle_core::solve::{solve_active_set_with, solve_psor_with, DiscreteSolution};
use obstacle_core::{fmt9, Point};
use rayon::prelude::*;

use crate::config::{AnalysisConfig, Config, Kind, Method, RadiiConfig, Selector};
use crate::summary::{
    num, AnalysisRecord, ClassRecord, CurveRecord, FreezingRecord, GrowthRecord, Hypotheses, PointRecord,
    SolverRecord, Summary,
};
use crate::CliError;

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Overrides the solver named in the file.
    pub solver: Option<Method>,
    pub strict: bool,
    pub out: PathBuf,
    /// Run the `[[analysis]]` entries after solving.
    pub analyze: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    SolverFailure,
    HypothesisFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::SolverFailure => 1,
            Status::HypothesisFailure => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::SolverFailure => "solver_failure",
            Status::HypothesisFailure => "hypothesis_failure",
        }
    }
}

pub struct RunOutcome {
    pub status: Status,
    pub dir: PathBuf,
    pub summary: Summary,
}

fn hypotheses_record(report: &HypothesisReport) -> Hypotheses {
    Hypotheses {
        lambda: num(report.lambda),
        c0: num(report.c0),
        dini_value: report.dini_value.and_then(num),
        double_dini_value: report.double_dini_value.and_then(num),
        log_dini_value: report.log_dini_value.and_then(num),
        a: num(report.a),
        pass_h1: report.pass_h1,
        h1_indicative: report.h1_indicative,
        pass_h2: report.pass_h2,
        pass_h3: report.pass_h3,
        pass_h4: report.pass_h4,
        sampling_slack: num(report.sampling_slack),
        failures: report.failures().iter().map(|s| s.to_string()).collect(),
        warnings: report.warnings.clone(),
    }
}

/// Runs one scenario and writes its files under `<out>/<name>/`.
pub fn run(config: &Config, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let spec = config.spec()?;
    let problem = ObstacleProblem::from_spec(&spec)
        .map_err(|e| config.error_at(config.problem.span().start, format!("[problem] {e}")))?;
    let dir = opts.out.join(&config.name);
    std::fs::create_dir_all(&dir)?;

    let report = check_hypotheses(&problem)?;
    let hypotheses = hypotheses_record(&report);
    let failed = !hypotheses.failures.is_empty() || (opts.strict && !hypotheses.warnings.is_empty());
    for w in &hypotheses.warnings {
        eprintln!("{}: warning: {w}", config.name);
    }
    if !hypotheses.failures.is_empty() {
        eprintln!("{}: hypotheses {} not satisfied", config.name, hypotheses.failures.join(", "));
    }

    let mut summary = Summary {
        name: config.name.clone(),
        scenario: config.problem.get_ref().scenario.map(|s| s.as_str().to_string()),
        resolution: spec.resolution,
        h: num(problem.grid().spacing()),
        status: String::new(),
        exit_code: 0,
        hypotheses: Some(hypotheses),
        solver: None,
        plan: config.plan(),
        analyses: Vec::new(),
    };
    let finish = |mut summary: Summary, status: Status| -> Result<RunOutcome, CliError> {
        summary.status = status.name().to_string();
        summary.exit_code = status.code();
        summary.write(&dir)?;
        Ok(RunOutcome {
            status,
            dir: dir.clone(),
            summary,
        })
    };
    if failed && opts.strict {
        return finish(summary, Status::HypothesisFailure);
    }

    let method = opts.solver.unwrap_or(config.solver.method);
    let options = config.solver.options();
    let solved = match method {
        Method::ActiveSet => solve_active_set_with(&problem, &options),
        Method::Psor => solve_psor_with(&problem, &options),
    };
    let solution = match solved {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: solver failed: {e}", config.name);
            summary.solver = Some(SolverRecord {
                method: method.as_str().to_string(),
                iterations: None,
                complementarity_residual: None,
                energy: None,
                active_nodes: None,
                error: Some(e.to_string()),
            });
            let status = if failed { Status::HypothesisFailure } else { Status::SolverFailure };
            return finish(summary, status);
        }
    };
    summary.solver = Some(SolverRecord {
        method: method.as_str().to_string(),
        iterations: Some(solution.iterations),
        complementarity_residual: num(solution.complementarity_residual),
        energy: num(solution.energy_value),
        active_nodes: Some(solution.active_count()),
        error: None,
    });
    let mut dump = BufWriter::new(File::create(dir.join("solution.dump"))?);
    solution.write_dump(&mut dump)?;
    dump.flush()?;

    if opts.analyze {
        summary.analyses = analyse(config, &problem, &solution, &report, &dir)?;
    }
    finish(summary, if failed { Status::HypothesisFailure } else { Status::Ok })
}

fn select(geometry: &CoincidenceGeometry, selector: &Selector) -> Vec<(Point, f64)> {
    match selector {
        Selector::All => geometry.boundary_points.iter().map(|p| (*p, 0.0)).collect(),
        Selector::Every(k) => geometry.boundary_points.iter().step_by(*k).map(|p| (*p, 0.0)).collect(),
        Selector::Nearest(x) => vec![geometry.snap(*x)],
    }
}

/// Radii in the normalized frame, inside `[8 cells, r_max]`.
fn resolve_radii(spec: &RadiiConfig, frame: &NormalizedFrame) -> Result<Vec<f64>, String> {
    let lo = frame.min_radius(8.0);
    let hi = frame.r_max;
    let radii = match spec {
        RadiiConfig::Default => default_radii(frame),
        RadiiConfig::List(v) => {
            if let Some(r) = v.iter().find(|r| **r < lo || **r > hi) {
                return Err(format!("radius {r} outside [{lo}, {hi}]"));
            }
            v.clone()
        }
        RadiiConfig::Range { min, max, per_octave } => {
            dyadic_radii(min.unwrap_or(lo).max(lo), max.unwrap_or(hi).min(hi), *per_octave)
        }
    };
    if radii.is_empty() {
        return Err(format!("no radius in [{lo}, {hi}]"));
    }
    Ok(radii)
}

fn test_fields() -> [(&'static str, FnEvaluator); 2] {
    let e = Vector2::new(1.0, 0.0);
    [
        (
            "half_space",
            FnEvaluator::new(move |x: Point| {
                let s = x.dot(&e).max(0.0);
                Jet {
                    value: 0.5 * s * s,
                    grad: e * s,
                    hess: if s > 0.0 { e * e.transpose() } else { Matrix2::zeros() },
                }
            }),
        ),
        (
            "quadratic",
            FnEvaluator::new(|x: Point| Jet {
                value: 0.25 * x.norm_squared(),
                grad: x * 0.5,
                hess: Matrix2::identity() * 0.5,
            }),
        ),
    ]
}

#[derive(Default)]
struct PointOutput {
    record: PointRecord,
    weiss: Option<MonotonicityReport>,
    monneau: Option<MonotonicityReport>,
    classify: Option<ClassificationResult>,
    growth: Option<GrowthReport>,
    freezing: Vec<String>,
}

fn curve_record(r: &MonotonicityReport) -> CurveRecord {
    CurveRecord {
        c_min: num(r.c_min),
        phi0: num(r.phi0),
        phi0_uncertainty: num(r.phi0_uncertainty),
        pass: r.pass,
        violations: r.violations.len(),
    }
}

struct Context<'a> {
    problem: &'a ObstacleProblem,
    solution: &'a DiscreteSolution,
    omega: OmegaSpec,
}

fn analyse_point(ctx: &Context, entry: &AnalysisConfig, x0: Point, snap: f64) -> PointOutput {
    let mut out = PointOutput::default();
    out.record.x0 = [num(x0.x), num(x0.y)];
    out.record.snap_distance = num(snap);
    let frame = match build_frame(ctx.problem, ctx.solution, x0) {
        Ok(f) => f,
        Err(e) => {
            out.record.errors.push(format!("frame: {e}"));
            return out;
        }
    };
    let radii = match resolve_radii(&entry.radii, &frame) {
        Ok(r) => r,
        Err(e) => {
            out.record.errors.push(format!("radii: {e}"));
            return out;
        }
    };
    out.record.radii = radii.len();
    let mut kinds = entry.kinds.clone();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        let fail = |e: obstacle_core::Error| format!("{}: {e}", kind.as_str());
        match kind {
            Kind::Weiss => match weiss_curve(&frame, &radii).and_then(|c| verdict(&c, &ctx.omega, None)) {
                Ok(r) => {
                    out.record.weiss = Some(curve_record(&r));
                    out.weiss = Some(r);
                }
                Err(e) => out.record.errors.push(fail(e)),
            },
            Kind::Monneau => {
                match monneau_curve(&frame, &entry.profile(), &radii).and_then(|c| verdict(&c, &ctx.omega, None)) {
                    Ok(r) => {
                        out.record.monneau = Some(curve_record(&r));
                        out.monneau = Some(r);
                    }
                    Err(e) => out.record.errors.push(fail(e)),
                }
            }
            Kind::Classify => match classify_point(&frame, &ctx.omega, &radii) {
                Ok(c) => {
                    out.record.classify = Some(ClassRecord {
                        verdict: c.verdict.name().to_string(),
                        phi0: num(c.phi0),
                        uncertainty: num(c.uncertainty),
                        c_min: num(c.monotonicity.c_min),
                        fit_kind: c.fit.as_ref().map(|f| f.kind.name().to_string()),
                        fit_residual: c.fit.as_ref().and_then(|f| num(f.residual)),
                    });
                    out.classify = Some(c);
                }
                Err(e) => out.record.errors.push(fail(e)),
            },
            Kind::Growth => {
                // physical radii: the balls must stay inside the grid
                let room = ctx.problem.grid().distance_to_boundary(x0);
                let physical: Vec<f64> = radii.iter().copied().filter(|r| *r <= room).collect();
                if physical.is_empty() {
                    out.record.errors.push(format!("growth: no radius fits inside the domain (room {room})"));
                    continue;
                }
                match growth_constants(&ctx.solution.evaluator(), x0, &physical) {
                    Ok(g) => {
                        out.record.growth = Some(GrowthRecord {
                            theta_lower: num(g.theta_lower),
                            c_upper: num(g.c_upper),
                        });
                        out.growth = Some(g);
                    }
                    Err(e) => out.record.errors.push(fail(e)),
                }
            }
            Kind::Freezing => {
                let mut record = FreezingRecord {
                    pairs: 0,
                    exceeded: 0,
                    max_ratio: Some(0.0),
                };
                let mut worst = 0.0_f64;
                for (name, v) in test_fields() {
                    for &r in &radii {
                        match freezing_defect(&frame, &ctx.omega, r, &v as &dyn Evaluator) {
                            Ok(f) => {
                                record.pairs += 1;
                                record.exceeded += usize::from(f.exceeded);
                                if f.rhs > 0.0 {
                                    worst = worst.max(f.lhs / f.rhs);
                                } else if f.lhs > 0.0 {
                                    worst = f64::INFINITY;
                                }
                                out.freezing.push(format!(
                                    "{},{},{},{},{},{},{}",
                                    name,
                                    fmt9(r),
                                    fmt9(f.lhs),
                                    fmt9(f.rhs),
                                    fmt9(f.energy),
                                    fmt9(f.quadrature_error),
                                    f.exceeded
                                ));
                            }
                            Err(e) => out.record.errors.push(fail(e)),
                        }
                    }
                }
                record.max_ratio = num(worst);
                out.record.freezing = Some(record);
            }
        }
    }
    out
}

fn prefixed_csv(path: &Path, header: &str, blocks: &[(usize, Point, Vec<u8>)]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "point,x0x,x0y,{header}")?;
    for (k, x0, body) in blocks {
        let text = String::from_utf8_lossy(body);
        for line in text.lines().skip(1) {
            writeln!(w, "{k},{},{},{line}", fmt9(x0.x), fmt9(x0.y))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn analyse(
    config: &Config,
    problem: &ObstacleProblem,
    solution: &DiscreteSolution,
    report: &HypothesisReport,
    dir: &Path,
) -> Result<Vec<AnalysisRecord>, CliError> {
    let geometry = extract_free_boundary(solution);
    let ctx = Context {
        problem,
        solution,
        omega: OmegaSpec::new(report.omega_f.clone(), 2, problem.p()),
    };
    let mut records = Vec::new();
    for (k, spanned) in config.analyses.iter().enumerate() {
        let entry = spanned.get_ref();
        let index = k + 1;
        let (points, note) = match &geometry {
            Ok(g) => {
                let p = select(g, &entry.points);
                let note = p.is_empty().then(|| "selector matched no free-boundary point".to_string());
                (p, note)
            }
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let outputs: Vec<PointOutput> = points.par_iter().map(|&(x0, d)| analyse_point(&ctx, entry, x0, d)).collect();
        let x0s: Vec<Point> = points.iter().map(|p| p.0).collect();
        let file = |kind: Kind| dir.join(format!("analysis{index}_{}.csv", kind.as_str()));
        let curve_header = "r,value,quad_err,correction,corrected_value,rhs_lower_bound";
        for kind in [Kind::Weiss, Kind::Monneau, Kind::Classify, Kind::Growth, Kind::Freezing] {
            if !entry.kinds.contains(&kind) {
                continue;
            }
            match kind {
                Kind::Weiss | Kind::Monneau => {
                    let mut blocks = Vec::new();
                    for (i, o) in outputs.iter().enumerate() {
                        let rep = if kind == Kind::Weiss { &o.weiss } else { &o.monneau };
                        if let Some(rep) = rep {
                            let mut body = Vec::new();
                            rep.write_csv(&mut body)?;
                            blocks.push((i, x0s[i], body));
                        }
                    }
                    prefixed_csv(&file(kind), curve_header, &blocks)?;
                }
                Kind::Classify => {
                    let results: Vec<ClassificationResult> = outputs.iter().filter_map(|o| o.classify.clone()).collect();
                    let mut w = BufWriter::new(File::create(file(kind))?);
                    write_classification_csv(&mut w, &results)?;
                    w.flush()?;
                }
                Kind::Growth => {
                    let mut w = BufWriter::new(File::create(file(kind))?);
                    writeln!(w, "x0x,x0y,r,sup_u_r2,sup_grad_r,sphere_sup_r2")?;
                    for g in outputs.iter().filter_map(|o| o.growth.as_ref()) {
                        let mut body = Vec::new();
                        g.write_csv(&mut body)?;
                        for line in String::from_utf8_lossy(&body).lines().skip(1) {
                            writeln!(w, "{line}")?;
                        }
                    }
                    w.flush()?;
                }
                Kind::Freezing => {
                    let mut w = BufWriter::new(File::create(file(kind))?);
                    writeln!(w, "point,x0x,x0y,test,r,lhs,rhs,energy,quad_err,exceeded")?;
                    for (i, o) in outputs.iter().enumerate() {
                        for row in &o.freezing {
                            writeln!(w, "{i},{},{},{row}", fmt9(x0s[i].x), fmt9(x0s[i].y))?;
                        }
                    }
                    w.flush()?;
                }
            }
        }
        records.push(AnalysisRecord {
            index,
            plan: entry.describe(),
            note,
            points: outputs.into_iter().map(|o| o.record).collect(),
        });
    }
    Ok(records)
}
