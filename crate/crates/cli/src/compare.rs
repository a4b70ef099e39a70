//! Point-by-point comparison of two runs of one scenario, typically at
//! two resolutions.

use std::io::Write;
use std::path::Path;

use obstacle_core::fmt9;

use crate::summary::{CurveRecord, PointRecord, Summary};
use crate::CliError;

/// `C_min` values below this are treated as equal to it before taking ratios,
/// so that two round-off sized constants are not reported as a large change.
pub const C_MIN_FLOOR: f64 = 1e-6;
pub const RATIO_LIMIT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub analysis: usize,
    pub point: usize,
    pub kind: &'static str,
    pub x0_a: [Option<f64>; 2],
    pub x0_b: [Option<f64>; 2],
    pub c_min_a: Option<f64>,
    pub c_min_b: Option<f64>,
    pub ratio: Option<f64>,
    pub phi0_a: Option<f64>,
    pub phi0_b: Option<f64>,
    pub phi0_delta: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict_a: Option<String>,
    pub verdict_b: Option<String>,
    pub flags: Vec<&'static str>,
}

fn distance(a: &PointRecord, b: &PointRecord) -> f64 {
    match (a.x0, b.x0) {
        ([Some(ax), Some(ay)], [Some(bx), Some(by)]) => (ax - bx).hypot(ay - by),
        _ => f64::INFINITY,
    }
}

/// Pairs points by index when the counts agree, else each point of `a` with
/// the nearest point of `b`.
fn pair<'a>(a: &'a [PointRecord], b: &'a [PointRecord]) -> Vec<(usize, &'a PointRecord, &'a PointRecord)> {
    if a.len() == b.len() {
        return a.iter().zip(b).enumerate().map(|(i, (p, q))| (i, p, q)).collect();
    }
    a.iter()
        .enumerate()
        .filter_map(|(i, p)| {
            b.iter()
                .min_by(|x, y| distance(p, x).total_cmp(&distance(p, y)))
                .map(|q| (i, p, q))
        })
        .collect()
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?.max(C_MIN_FLOOR), b?.max(C_MIN_FLOOR));
    Some(a.max(b) / a.min(b))
}

struct Sample {
    c_min: Option<f64>,
    phi0: Option<f64>,
    uncertainty: Option<f64>,
    verdict: Option<String>,
}

fn curve(c: &Option<CurveRecord>) -> Option<Sample> {
    c.as_ref().map(|c| Sample {
        c_min: c.c_min,
        phi0: c.phi0,
        uncertainty: c.phi0_uncertainty,
        verdict: Some(if c.pass { "pass" } else { "fail" }.to_string()),
    })
}

fn samples(p: &PointRecord) -> [(&'static str, Option<Sample>); 3] {
    [
        ("weiss", curve(&p.weiss)),
        ("monneau", curve(&p.monneau)),
        (
            "classify",
            p.classify.as_ref().map(|c| Sample {
                c_min: c.c_min,
                phi0: c.phi0,
                uncertainty: c.uncertainty,
                verdict: Some(c.verdict.clone()),
            }),
        ),
    ]
}

pub fn compare(a: &Summary, b: &Summary) -> Result<Vec<Row>, CliError> {
    if a.name != b.name {
        return Err(CliError::Usage(format!("runs `{}` and `{}` are different scenarios", a.name, b.name)));
    }
    if a.plan != b.plan {
        return Err(CliError::Usage(format!(
            "runs `{}` and `{}` have different analysis plans",
            a.name, b.name
        )));
    }
    let mut rows = Vec::new();
    for (ra, rb) in a.analyses.iter().zip(&b.analyses) {
        for (point, pa, pb) in pair(&ra.points, &rb.points) {
            for ((kind, sa), (_, sb)) in samples(pa).into_iter().zip(samples(pb)) {
                let (Some(sa), Some(sb)) = (sa, sb) else { continue };
                let ratio = ratio(sa.c_min, sb.c_min);
                let phi0_delta = sa.phi0.zip(sb.phi0).map(|(x, y)| y - x);
                let tolerance = Some(sa.uncertainty.unwrap_or(0.0) + sb.uncertainty.unwrap_or(0.0));
                let mut flags = Vec::new();
                if ratio.is_some_and(|r| r > RATIO_LIMIT) {
                    flags.push("c_min_ratio");
                }
                if phi0_delta.zip(tolerance).is_some_and(|(d, t)| d.abs() > t) {
                    flags.push("phi0_shift");
                }
                if sa.verdict != sb.verdict {
                    flags.push("verdict_changed");
                }
                rows.push(Row {
                    analysis: ra.index,
                    point,
                    kind,
                    x0_a: pa.x0,
                    x0_b: pb.x0,
                    c_min_a: sa.c_min,
                    c_min_b: sb.c_min,
                    ratio,
                    phi0_a: sa.phi0,
                    phi0_b: sb.phi0,
                    phi0_delta,
                    tolerance,
                    verdict_a: sa.verdict,
                    verdict_b: sb.verdict,
                    flags,
                });
            }
        }
    }
    Ok(rows)
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt9).unwrap_or_else(|| "-".to_string())
}

pub fn print_table(out: &mut impl Write, a: &Summary, b: &Summary, rows: &[Row]) -> std::io::Result<()> {
    writeln!(out, "A: {} (h = {})", a.name, cell(a.h))?;
    writeln!(out, "B: {} (h = {})", b.name, cell(b.h))?;
    writeln!(
        out,
        "{:>3} {:>5} {:<9} {:>15} {:>15} {:>8} {:>15} {:>15} {:<12} {:<12} flags",
        "an", "point", "kind", "c_min A", "c_min B", "ratio", "phi0 delta", "tolerance", "verdict A", "verdict B"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:>3} {:>5} {:<9} {:>15} {:>15} {:>8} {:>15} {:>15} {:<12} {:<12} {}",
            r.analysis,
            r.point,
            r.kind,
            cell(r.c_min_a),
            cell(r.c_min_b),
            r.ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into()),
            cell(r.phi0_delta),
            cell(r.tolerance),
            r.verdict_a.as_deref().unwrap_or("-"),
            r.verdict_b.as_deref().unwrap_or("-"),
            r.flags.join(" ")
        )?;
    }
    let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
    writeln!(out, "{} rows, {flagged} flagged", rows.len())
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "analysis,point,kind,x0x_a,x0y_a,x0x_b,x0y_b,c_min_a,c_min_b,ratio,phi0_a,phi0_b,phi0_delta,tolerance,verdict_a,verdict_b,flags"
    )?;
    let field = |x: Option<f64>| x.map(fmt9).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.analysis,
            r.point,
            r.kind,
            field(r.x0_a[0]),
            field(r.x0_a[1]),
            field(r.x0_b[0]),
            field(r.x0_b[1]),
            field(r.c_min_a),
            field(r.c_min_b),
            field(r.ratio),
            field(r.phi0_a),
            field(r.phi0_b),
            field(r.phi0_delta),
            field(r.tolerance),
            r.verdict_a.as_deref().unwrap_or(""),
            r.verdict_b.as_deref().unwrap_or(""),
            r.flags.join(" ")
        )?;
    }
    w.flush()?;
    Ok(())
}
