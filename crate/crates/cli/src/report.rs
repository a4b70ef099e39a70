//! Human-readable rendering of `summary.json`.

use std::io::Write;

use obstacle_core::fmt9;

use crate::summary::{CurveRecord, Summary};

fn cell(x: Option<f64>) -> String {
    x.map(fmt9).unwrap_or_else(|| "-".to_string())
}

fn curve(c: &CurveRecord) -> String {
    format!(
        "C_min {} phi0 {} +- {} {} ({} violations)",
        cell(c.c_min),
        cell(c.phi0),
        cell(c.phi0_uncertainty),
        if c.pass { "pass" } else { "fail" },
        c.violations
    )
}

pub fn render(out: &mut impl Write, s: &Summary) -> std::io::Result<()> {
    writeln!(out, "run        {}", s.name)?;
    writeln!(out, "scenario   {}", s.scenario.as_deref().unwrap_or("custom"))?;
    writeln!(out, "grid       {} nodes per side, h = {}", s.resolution, cell(s.h))?;
    writeln!(out, "status     {} (exit {})", s.status, s.exit_code)?;
    if let Some(h) = &s.hypotheses {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(
            out,
            "hypotheses H1 {}{} H2 {} H3 {} H4 {}",
            mark(h.pass_h1),
            if h.h1_indicative { " (indicative)" } else { "" },
            mark(h.pass_h2),
            mark(h.pass_h3),
            mark(h.pass_h4)
        )?;
        writeln!(
            out,
            "           lambda {} c0 {} dini {} double dini {} log dini {} (a = {})",
            cell(h.lambda),
            cell(h.c0),
            cell(h.dini_value),
            cell(h.double_dini_value),
            cell(h.log_dini_value),
            cell(h.a)
        )?;
        for w in &h.warnings {
            writeln!(out, "warning    {w}")?;
        }
    }
    if let Some(sv) = &s.solver {
        match &sv.error {
            Some(e) => writeln!(out, "solver     {} failed: {e}", sv.method)?,
            None => writeln!(
                out,
                "solver     {} in {} iterations, residual {}, energy {}, {} active nodes",
                sv.method,
                sv.iterations.unwrap_or(0),
                cell(sv.complementarity_residual),
                cell(sv.energy),
                sv.active_nodes.unwrap_or(0)
            )?,
        }
    }
    for a in &s.analyses {
        writeln!(out, "analysis {}: {}", a.index, a.plan)?;
        if let Some(note) = &a.note {
            writeln!(out, "  {note}")?;
        }
        for (i, p) in a.points.iter().enumerate() {
            writeln!(
                out,
                "  point {i} at ({}, {}), snapped {}, {} radii",
                cell(p.x0[0]),
                cell(p.x0[1]),
                cell(p.snap_distance),
                p.radii
            )?;
            if let Some(c) = &p.weiss {
                writeln!(out, "    weiss    {}", curve(c))?;
            }
            if let Some(c) = &p.monneau {
                writeln!(out, "    monneau  {}", curve(c))?;
            }
            if let Some(c) = &p.classify {
                writeln!(
                    out,
                    "    classify {} phi0 {} +- {}, fit {}",
                    c.verdict,
                    cell(c.phi0),
                    cell(c.uncertainty),
                    c.fit_kind.as_deref().unwrap_or("none")
                )?;
            }
            if let Some(g) = &p.growth {
                writeln!(out, "    growth   theta {} C {}", cell(g.theta_lower), cell(g.c_upper))?;
            }
            if let Some(f) = &p.freezing {
                writeln!(
                    out,
                    "    freezing {} of {} pairs exceeded, max ratio {}",
                    f.exceeded,
                    f.pairs,
                    cell(f.max_ratio)
                )?;
            }
            for e in &p.errors {
                writeln!(out, "    error    {e}")?;
            }
        }
    }
    Ok(())
}
