//! The `planimm field v1` text format.
//!
//! ```text
//! # planimm field v1 <nx> <ny> <x0> <y0> <x1> <y1> <ncomp>
//! <i> <j> <v1> [<v2> ...]
//! ```
//!
//! One line per node, `j` outer and `i` inner. Values are written in Rust's
//! shortest round-trip form, so reading back reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use planimm_core::{Grid2, MapField, Metric2, MetricField, ScalarField, Vector2};

const MAGIC: &str = "# planimm field v1";

#[derive(Debug, thiserror::Error)]
pub enum FieldFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("expected {expected} node lines, found {found}")]
    NodeCount { expected: usize, found: usize },
    #[error("expected {expected} components, file has {found}")]
    Components { expected: usize, found: usize },
    #[error(transparent)]
    Field(#[from] planimm_core::Error),
}

/// Any field that fits the format.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Map(MapField),
    Metric(MetricField),
}

impl FieldData {
    pub fn grid(&self) -> &Grid2 {
        match self {
            FieldData::Scalar(f) => f.grid(),
            FieldData::Map(f) => f.grid(),
            FieldData::Metric(f) => f.grid(),
        }
    }

    pub fn components(&self) -> usize {
        match self {
            FieldData::Scalar(_) => 1,
            FieldData::Map(_) => 2,
            FieldData::Metric(_) => 3,
        }
    }

    fn node(&self, k: usize) -> Vec<f64> {
        match self {
            FieldData::Scalar(f) => vec![f.values()[k]],
            FieldData::Map(f) => {
                let v = f.values()[k];
                vec![v.x, v.y]
            }
            FieldData::Metric(f) => {
                let g = f.values()[k];
                vec![g.g11, g.g12, g.g22]
            }
        }
    }
}

pub fn write_field<W: Write>(mut out: W, field: &FieldData) -> io::Result<()> {
    let g = field.grid();
    writeln!(
        out,
        "{MAGIC} {} {} {:?} {:?} {:?} {:?} {}",
        g.nx,
        g.ny,
        g.x0,
        g.y0,
        g.x1,
        g.y1,
        field.components()
    )?;
    let mut line = String::new();
    for k in 0..g.len() {
        let (i, j) = g.node_of(k);
        line.clear();
        write!(line, "{i} {j}").unwrap();
        for v in field.node(k) {
            write!(line, " {v:?}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

fn parse<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, String> {
    token.parse().map_err(|_| format!("cannot parse {what} from {token:?}"))
}

fn parse_header(line: &str) -> Result<(Grid2, usize), FieldFileError> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| FieldFileError::Header(format!("expected {MAGIC:?} prefix")))?;
    let t: Vec<&str> = rest.split_whitespace().collect();
    if t.len() != 7 {
        return Err(FieldFileError::Header(format!("expected 7 fields after the prefix, found {}", t.len())));
    }
    fn h<T>(r: Result<T, String>) -> Result<T, FieldFileError> {
        r.map_err(FieldFileError::Header)
    }
    let nx = h(parse(t[0], "nx"))?;
    let ny = h(parse(t[1], "ny"))?;
    let mut rect = [0.0; 4];
    for (k, r) in rect.iter_mut().enumerate() {
        *r = h(parse(t[2 + k], "rectangle bound"))?;
    }
    let ncomp: usize = h(parse(t[6], "ncomp"))?;
    if !(1..=3).contains(&ncomp) {
        return Err(FieldFileError::Header(format!("ncomp must be 1, 2 or 3, got {ncomp}")));
    }
    Ok((Grid2::new(nx, ny, rect[0], rect[1], rect[2], rect[3])?, ncomp))
}

pub fn read_field<R: BufRead>(input: R) -> Result<FieldData, FieldFileError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| FieldFileError::Header("empty file".into()))??;
    let (grid, ncomp) = parse_header(header.trim_end())?;
    let mut values = Vec::with_capacity(grid.len() * ncomp);
    let mut found = 0;
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        if found == grid.len() {
            return Err(FieldFileError::NodeCount { expected: grid.len(), found: found + 1 });
        }
        let bad = |message: String| FieldFileError::Line { line: lineno, message };
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 2 + ncomp {
            return Err(bad(format!("expected {} tokens, found {}", 2 + ncomp, t.len())));
        }
        let i: usize = parse(t[0], "i").map_err(bad)?;
        let j: usize = parse(t[1], "j").map_err(bad)?;
        if (i, j) != grid.node_of(found) {
            let (ei, ej) = grid.node_of(found);
            return Err(bad(format!("expected node ({ei}, {ej}), found ({i}, {j})")));
        }
        for tok in &t[2..] {
            values.push(parse::<f64>(tok, "value").map_err(bad)?);
        }
        found += 1;
    }
    if found != grid.len() {
        return Err(FieldFileError::NodeCount { expected: grid.len(), found });
    }
    Ok(match ncomp {
        1 => FieldData::Scalar(ScalarField::new(grid, values)?),
        2 => FieldData::Map(MapField::new(grid, values.chunks(2).map(|c| Vector2::new(c[0], c[1])).collect())?),
        _ => FieldData::Metric(MetricField::new(grid, values.chunks(3).map(|c| Metric2::new(c[0], c[1], c[2])).collect())?),
    })
}

pub fn save(path: &Path, field: &FieldData) -> io::Result<()> {
    write_field(io::BufWriter::new(fs::File::create(path)?), field)
}

pub fn load(path: &Path) -> Result<FieldData, FieldFileError> {
    read_field(BufReader::new(fs::File::open(path)?))
}

pub fn load_scalar(path: &Path) -> Result<ScalarField, FieldFileError> {
    match load(path)? {
        FieldData::Scalar(f) => Ok(f),
        other => Err(FieldFileError::Components { expected: 1, found: other.components() }),
    }
}

pub fn load_map(path: &Path) -> Result<MapField, FieldFileError> {
    match load(path)? {
        FieldData::Map(f) => Ok(f),
        other => Err(FieldFileError::Components { expected: 2, found: other.components() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let g = Grid2::new(3, 3, 0.0, -1.0, 2.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x + 10.0 * y).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &FieldData::Scalar(f)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# planimm field v1 3 3 0.0 -1.0 2.0 1.0 1");
        assert_eq!(lines[1], "0 0 -10.0");
        assert_eq!(lines[2], "1 0 -9.0");
        assert_eq!(lines[4], "0 1 0.0");
        assert_eq!(lines.len(), 10);
    }

    fn valid(ncomp: usize) -> Vec<String> {
        let mut lines = vec![format!("# planimm field v1 3 3 0 0 1 1 {ncomp}")];
        for j in 0..3 {
            for i in 0..3 {
                lines.push(format!("{i} {j}{}", " 1".repeat(ncomp)));
            }
        }
        lines
    }

    #[test]
    fn rejects_malformed_input() {
        let ok = valid(1);
        assert!(read_field(ok.join("\n").as_bytes()).is_ok());
        let mut cases: Vec<Vec<String>> = Vec::new();
        cases.push(Vec::new());
        let mut c = ok.clone();
        c[0] = "# other format 3 3 0 0 1 1 1".into();
        cases.push(c);
        let mut c = ok.clone();
        c[0] = "# planimm field v1 3 3 0 0 1 1 4".into();
        cases.push(c);
        let mut c = ok.clone();
        c[0] = "# planimm field v1 2 2 0 0 1 1 1".into();
        cases.push(c);
        let mut c = ok.clone();
        c.pop();
        cases.push(c);
        let mut c = ok.clone();
        c.swap(1, 2);
        cases.push(c);
        let mut c = ok.clone();
        c[3] = "2 0 x".into();
        cases.push(c);
        let mut c = ok.clone();
        c[3] = "2 0 1 1".into();
        cases.push(c);
        let mut c = ok.clone();
        c.push("0 3 1".into());
        cases.push(c);
        let mut c = valid(2);
        c[5] = "1 1 NaN 0".into();
        cases.push(c);
        for c in cases {
            let text = c.join("\n");
            assert!(read_field(text.as_bytes()).is_err(), "{text}");
        }
    }

    #[test]
    fn metric_must_be_positive_definite() {
        let mut c = valid(3);
        c[5] = "1 1 1 2 1".into();
        assert!(matches!(read_field(c.join("\n").as_bytes()), Err(FieldFileError::Field(_))));
    }
}
