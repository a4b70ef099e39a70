//! Plain-text field dumps.
//!
//! Header line `2 h nx ny ox oy ex ey`, then `ny` lines of `nx` values.
//! Solution dumps append one line `active <flags>` with one `0`/`1` per
//! node in storage order.

use std::io::{BufRead, Write};

use nalgebra::Vector2;

use super::{Grid, Point, ScalarField};
use crate::{Error, Result};

pub fn write_field(out: &mut impl Write, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let e = g.extent();
    writeln!(
        out,
        "2 {} {} {} {} {} {} {}",
        g.spacing(),
        g.nx(),
        g.ny(),
        g.origin().x,
        g.origin().y,
        e.x,
        e.y
    )?;
    for row in field.values().chunks(g.nx()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_solution_dump(out: &mut impl Write, field: &ScalarField, active: &[bool]) -> Result<()> {
    write_field(out, field)?;
    let flags: String = active.iter().map(|&a| if a { '1' } else { '0' }).collect();
    writeln!(out, "active {flags}")?;
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn read_body(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>) -> Result<ScalarField> {
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 8 || parts[0] != "2" {
        return Err(parse_err(ln + 1, "expected header `2 h nx ny ox oy ex ey`"));
    }
    let num = |k: usize| -> Result<f64> {
        parts[k]
            .parse::<f64>()
            .map_err(|e| parse_err(ln + 1, format!("field {k}: {e}")))
    };
    let int = |k: usize| -> Result<usize> {
        parts[k]
            .parse::<usize>()
            .map_err(|e| parse_err(ln + 1, format!("field {k}: {e}")))
    };
    let (h, nx, ny) = (num(1)?, int(2)?, int(3)?);
    let origin = Point::new(num(4)?, num(5)?);
    let extent = Vector2::new(num(6)?, num(7)?);
    let grid = Grid::with_spacing(origin, h, nx, ny)?;
    if (grid.extent() - extent).norm() > 1e-9 * extent.norm() {
        return Err(parse_err(ln + 1, "extent disagrees with spacing and node counts"));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..ny {
        let (ln, line) = lines.next().ok_or_else(|| parse_err(ln + 2, "missing value rows"))?;
        let line = line?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(ln + 1, e)))
            .collect::<Result<_>>()?;
        if row.len() != nx {
            return Err(parse_err(ln + 1, format!("expected {nx} values, found {}", row.len())));
        }
        values.extend(row);
    }
    ScalarField::new(grid, values)
}

pub fn read_field(input: impl BufRead) -> Result<ScalarField> {
    read_body(&mut input.lines().enumerate())
}

pub fn read_solution_dump(input: impl BufRead) -> Result<(ScalarField, Vec<bool>)> {
    let mut lines = input.lines().enumerate();
    let field = read_body(&mut lines)?;
    let (ln, line) = lines.next().ok_or_else(|| parse_err(field.grid().ny() + 2, "missing active line"))?;
    let line = line?;
    let flags = line
        .strip_prefix("active ")
        .ok_or_else(|| parse_err(ln + 1, "expected `active <flags>`"))?;
    let active: Vec<bool> = flags
        .trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(parse_err(ln + 1, format!("unexpected flag {other:?}"))),
        })
        .collect::<Result<_>>()?;
    if active.len() != field.grid().len() {
        return Err(parse_err(ln + 1, "flag count does not match the grid"));
    }
    Ok((field, active))
}
