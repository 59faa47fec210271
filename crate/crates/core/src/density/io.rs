//! Text formats for problem instances.
//!
//! All formats are UTF-8, whitespace separated, with `#` starting a comment
//! that runs to the end of the line.
//!
//! ```text
//! graph <num_vertices> <num_edges>      # then one "u v" line per edge
//! matrix <rows> <cols>                  # then <rows> lines of decimals
//! explicit <n> <k>                      # then lines "i1 .. ik weight"
//! ```
//!
//! Graph edges are numbered by line order; that numbering is the ground set.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::BigRational;

use super::{ExplicitDensity, Graph};
use crate::error::{Error, Result};
use crate::linalg::parse_decimal_rational;

/// A dense matrix as read from disk. The decimal tokens are kept so that the
/// same file can back an exact rational matroid.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    tokens: Vec<String>,
}

impl MatrixData {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        let tokens = values.iter().map(|v| format!("{v:?}")).collect();
        MatrixData {
            rows,
            cols,
            values,
            tokens,
        }
    }

    /// Exact rational entries parsed from the original decimal text.
    pub fn to_rational(&self) -> Result<Vec<BigRational>> {
        self.tokens
            .iter()
            .map(|t| {
                parse_decimal_rational(t).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("entry {t:?} is not an exact decimal"),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Instance {
    Graph(Graph),
    Matrix(MatrixData),
    /// `(n, k, entries)` of an explicit density table.
    Explicit {
        n: usize,
        k: usize,
        entries: Vec<(Vec<usize>, f64)>,
    },
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Graph(_) => "graph",
            Instance::Matrix(_) => "matrix",
            Instance::Explicit { .. } => "explicit",
        }
    }

    pub fn into_explicit(self) -> Result<ExplicitDensity> {
        match self {
            Instance::Explicit { n, k, entries } => ExplicitDensity::new(n, k, entries),
            other => Err(Error::InvalidParameter(format!(
                "expected an explicit table, found a {}",
                other.kind()
            ))),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn tokens_of(line: &str) -> Vec<&str> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    body.split_whitespace().collect()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {tok:?}")))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, tokens_of(l)))
        .filter(|(_, t)| !t.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty input"))?;
    if header.len() != 3 {
        return Err(parse_err(hline, "header must be `<kind> <a> <b>`"));
    }
    let a: usize = parse_num(header[1], hline)?;
    let b: usize = parse_num(header[2], hline)?;
    match header[0] {
        "graph" => {
            let mut edges = Vec::with_capacity(b);
            for (ln, toks) in lines {
                if toks.len() != 2 {
                    return Err(parse_err(ln, "edge lines hold exactly two vertices"));
                }
                edges.push((parse_num(toks[0], ln)?, parse_num(toks[1], ln)?));
            }
            if edges.len() != b {
                return Err(parse_err(hline, format!("header promises {b} edges, found {}", edges.len())));
            }
            Ok(Instance::Graph(Graph::new(a, edges).map_err(|e| parse_err(hline, e.to_string()))?))
        }
        "matrix" => {
            let mut values = Vec::with_capacity(a * b);
            let mut tokens = Vec::with_capacity(a * b);
            let mut rows = 0;
            for (ln, toks) in lines {
                if toks.len() != b {
                    return Err(parse_err(ln, format!("expected {b} columns, found {}", toks.len())));
                }
                for t in toks {
                    let v: f64 = parse_num(t, ln)?;
                    if !v.is_finite() {
                        return Err(parse_err(ln, format!("entry {t:?} is not finite")));
                    }
                    values.push(v);
                    tokens.push(t.to_string());
                }
                rows += 1;
            }
            if rows != a {
                return Err(parse_err(hline, format!("header promises {a} rows, found {rows}")));
            }
            Ok(Instance::Matrix(MatrixData {
                rows: a,
                cols: b,
                values,
                tokens,
            }))
        }
        "explicit" => {
            let (n, k) = (a, b);
            let mut entries = Vec::new();
            for (ln, toks) in lines {
                if toks.len() != k + 1 {
                    return Err(parse_err(ln, format!("expected {k} indices and a weight")));
                }
                let idx = toks[..k]
                    .iter()
                    .map(|t| parse_num::<usize>(t, ln))
                    .collect::<Result<Vec<_>>>()?;
                let w: f64 = parse_num(toks[k], ln)?;
                entries.push((idx, w));
            }
            Ok(Instance::Explicit { n, k, entries })
        }
        other => Err(parse_err(hline, format!("unknown instance kind {other:?}"))),
    }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("graph {} {}\n", g.vertex_count(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn format_matrix(m: &MatrixData) -> String {
    let mut out = format!("matrix {} {}\n", m.rows, m.cols);
    for r in 0..m.rows {
        let row: Vec<&str> = m.tokens[r * m.cols..(r + 1) * m.cols]
            .iter()
            .map(String::as_str)
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::LogDensityOracle;

    #[test]
    fn graph_roundtrip_with_comments() {
        let text = "# K3\ngraph 3 3\n0 1\n1 2 # second\n\n0 2\n";
        let Instance::Graph(g) = parse_instance(text).unwrap() else {
            panic!("expected graph")
        };
        assert_eq!(g, Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap());
        let again = parse_instance(&format_graph(&g)).unwrap();
        assert!(matches!(again, Instance::Graph(h) if h == g));
    }

    #[test]
    fn matrix_and_explicit() {
        let Instance::Matrix(m) = parse_instance("matrix 2 2\n1 0.5\n0.5 1\n").unwrap() else {
            panic!()
        };
        assert_eq!(m.values, vec![1.0, 0.5, 0.5, 1.0]);
        assert_eq!(m.to_rational().unwrap()[1], BigRational::new(1.into(), 2.into()));
        let d = parse_instance("explicit 4 2\n1 3 2.5\n")
            .unwrap()
            .into_explicit()
            .unwrap();
        assert_eq!(d.support_point().unwrap().elements(), &[1, 3]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_instance("graph 3 2\n0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(parse_instance("graph 3 2\n0 1\n").is_err());
        assert!(parse_instance("matrix 2 2\n1 2\n3\n").is_err());
        assert!(parse_instance("tree 1 2\n").is_err());
        assert!(parse_instance("# nothing\n").is_err());
    }
}
