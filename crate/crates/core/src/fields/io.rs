//! Plain-text field format and CSV export.
//!
//! ```text
//! field dims=4,3 spacing=0.5e0,0.25e0 origin=0e0,0e0 boundary=periodic geometry=cartesian components=1 kind=scalar
//! 1.25e0
//! ...
//! ```
//!
//! One node per line in row-major order (last axis fastest). Vector fields
//! carry one column per component; wave functions carry `re im` columns and
//! add `mass=` and `hbar=` to the header. Floats use the shortest
//! representation that round-trips.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use super::{Boundary, FieldError, Geometry, Grid, ScalarField, VectorField, WaveFunction};

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FieldIoError {
    FieldIoError::Parse {
        line,
        message: message.into(),
    }
}

fn join<T: std::fmt::LowerExp>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn header(grid: &Grid, components: usize, kind: &str, extra: &str) -> String {
    let dims = grid
        .dims()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "field dims={dims} spacing={} origin={} boundary={} geometry={} components={components} kind={kind}{extra}",
        join(grid.spacing()),
        join(grid.origin()),
        grid.boundary().as_str(),
        grid.geometry().as_str(),
    )
}

fn write_rows<W: Write>(mut w: W, head: &str, n: usize, row: impl Fn(usize) -> Vec<f64>) -> std::io::Result<()> {
    writeln!(w, "{head}")?;
    for i in 0..n {
        let cols: Vec<String> = row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", cols.join(" "))?;
    }
    Ok(())
}

pub fn write_scalar<W: Write>(f: &ScalarField, w: W) -> std::io::Result<()> {
    let head = header(f.grid(), 1, "scalar", "");
    write_rows(w, &head, f.grid().len(), |i| vec![f.get(i)])
}

pub fn write_vector<W: Write>(f: &VectorField, w: W) -> std::io::Result<()> {
    let head = header(f.grid(), f.ndim(), "vector", "");
    write_rows(w, &head, f.grid().len(), |i| {
        f.components().iter().map(|c| c[i]).collect()
    })
}

pub fn write_wavefunction<W: Write>(psi: &WaveFunction, w: W) -> std::io::Result<()> {
    let extra = format!(" mass={:e} hbar={:e}", psi.mass(), psi.hbar());
    let head = header(psi.grid(), 2, "complex", &extra);
    write_rows(w, &head, psi.grid().len(), |i| {
        let a = psi.amplitudes()[i];
        vec![a.re, a.im]
    })
}

struct Parsed {
    grid: Grid,
    kind: String,
    keys: BTreeMap<String, String>,
    rows: Vec<Vec<f64>>,
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, s: &str) -> Result<Vec<T>, FieldIoError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad value {p:?} for {key}")))
        })
        .collect()
}

fn parse<R: BufRead>(r: R) -> Result<Parsed, FieldIoError> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let first = first?;
    let mut tokens = first.split_whitespace();
    if tokens.next() != Some("field") {
        return Err(parse_err(1, "header must start with `field`"));
    }
    let mut keys = BTreeMap::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("expected key=value, got {t:?}")))?;
        keys.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        keys.get(k)
            .cloned()
            .ok_or_else(|| parse_err(1, format!("missing header key `{k}`")))
    };
    let dims: Vec<usize> = parse_list(1, "dims", &get("dims")?)?;
    let spacing: Vec<f64> = parse_list(1, "spacing", &get("spacing")?)?;
    let origin: Vec<f64> = parse_list(1, "origin", &get("origin")?)?;
    let boundary = Boundary::parse(&get("boundary")?)
        .ok_or_else(|| parse_err(1, "boundary must be dirichlet-zero, reflecting or periodic"))?;
    let geometry = match keys.get("geometry") {
        Some(g) => Geometry::parse(g).ok_or_else(|| parse_err(1, "unknown geometry"))?,
        None => Geometry::Cartesian,
    };
    let components: usize = get("components")?
        .parse()
        .map_err(|_| parse_err(1, "bad components"))?;
    let kind = keys.get("kind").cloned().unwrap_or_else(|| "scalar".into());
    let grid = Grid::with_geometry(dims, spacing, origin, boundary, geometry)?;

    let mut rows = Vec::with_capacity(grid.len());
    for (i, l) in lines {
        let l = l?;
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = l
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(i + 1, format!("bad number {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != components {
            return Err(parse_err(
                i + 1,
                format!("expected {components} columns, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != grid.len() {
        return Err(FieldError::LengthMismatch {
            expected: grid.len(),
            got: rows.len(),
        }
        .into());
    }
    Ok(Parsed {
        grid,
        kind,
        keys,
        rows,
    })
}

fn expect_kind(p: &Parsed, kind: &str) -> Result<(), FieldIoError> {
    if p.kind != kind {
        return Err(parse_err(1, format!("expected kind={kind}, got kind={}", p.kind)));
    }
    Ok(())
}

pub fn read_scalar<R: BufRead>(r: R) -> Result<ScalarField, FieldIoError> {
    let p = parse(r)?;
    expect_kind(&p, "scalar")?;
    Ok(ScalarField::new(p.grid, p.rows.into_iter().map(|r| r[0]).collect())?)
}

pub fn read_vector<R: BufRead>(r: R) -> Result<VectorField, FieldIoError> {
    let p = parse(r)?;
    expect_kind(&p, "vector")?;
    let comps = (0..p.grid.ndim())
        .map(|a| p.rows.iter().map(|r| r[a]).collect())
        .collect();
    Ok(VectorField::new(p.grid, comps)?)
}

/// Reads a wave function and renormalizes it.
pub fn read_wavefunction<R: BufRead>(r: R) -> Result<WaveFunction, FieldIoError> {
    let p = parse(r)?;
    expect_kind(&p, "complex")?;
    let num = |k: &str| -> Result<f64, FieldIoError> {
        p.keys
            .get(k)
            .ok_or_else(|| parse_err(1, format!("missing header key `{k}`")))?
            .parse()
            .map_err(|_| parse_err(1, format!("bad {k}")))
    };
    let (mass, hbar) = (num("mass")?, num("hbar")?);
    let amps = p.rows.iter().map(|r| Complex64::new(r[0], r[1])).collect();
    Ok(WaveFunction::normalized(p.grid, amps, mass, hbar)?)
}

pub fn scalar_to_string(f: &ScalarField) -> String {
    let mut buf = Vec::new();
    write_scalar(f, &mut buf).expect("write to Vec");
    String::from_utf8(buf).expect("ascii")
}

pub fn scalar_from_str(s: &str) -> Result<ScalarField, FieldIoError> {
    read_scalar(s.as_bytes())
}

/// CSV with coordinate columns followed by value columns.
pub fn write_csv<W: Write>(grid: &Grid, columns: &[(&str, &[f64])], mut w: W) -> std::io::Result<()> {
    let axes = ["x", "y", "z"];
    let mut head: Vec<&str> = axes[..grid.ndim()].to_vec();
    head.extend(columns.iter().map(|(n, _)| *n));
    writeln!(w, "{}", head.join(","))?;
    for i in 0..grid.len() {
        let pos = grid.position(i);
        let mut cells: Vec<String> = pos[..grid.ndim()].iter().map(|x| format!("{x:e}")).collect();
        cells.extend(columns.iter().map(|(_, c)| format!("{:e}", c[i])));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
