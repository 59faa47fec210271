use std::path::Path;

use isosample::density::io::{read_instance, Instance, MatrixData};
use isosample::exact::ExactTable;
use isosample::suite::graphic_rank;
use isosample::{DppDensity, ForestDensity, LinearMatroidDensity, LogDensityOracle};
use num_traits::ToPrimitive;

use crate::{Failure, Format};

/// A loaded density plus what is needed for exact cross-checks.
pub struct Problem {
    pub oracle: Box<dyn LogDensityOracle>,
    pub forest: Option<ForestDensity>,
    pub label: String,
}

impl Problem {
    /// Exact `Z` and the method used to get it.
    pub fn exact_partition(&self) -> Result<(f64, String, &'static str), Failure> {
        if let Some(f) = &self.forest {
            let z = isosample::counting::exact_count_crosscheck(f)?;
            let method = if f.degree() + 1 == f.graph().vertex_count() {
                "matrix-tree"
            } else {
                "enumeration"
            };
            return Ok((z.to_f64().unwrap_or(f64::INFINITY), z.to_string(), method));
        }
        let table = ExactTable::enumerate(&self.oracle)?;
        Ok((table.partition(), format!("{}", table.partition()), "enumeration"))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn load(path: &Path, format: Option<Format>, k: Option<usize>) -> Result<Problem, Failure> {
    let instance = read_instance(path).map_err(|e| match e {
        isosample::Error::Io(io) => Failure::Runtime(format!("{}: {io}", path.display())),
        other => usage(format!("{}: {other}", path.display())),
    })?;
    let format = match (format, &instance) {
        (Some(f), _) => f,
        (None, Instance::Graph(_)) => Format::Graph,
        (None, Instance::Matrix(_)) => Format::MatrixDpp,
        (None, Instance::Explicit { .. }) => Format::Explicit,
    };
    match (format, instance) {
        (Format::Graph, Instance::Graph(g)) => {
            let k = k.unwrap_or_else(|| graphic_rank(&g));
            let f = ForestDensity::new(g, k)?;
            let label = format!("forest(vertices={}, edges={}, k={k})", f.graph().vertex_count(), f.graph().edge_count());
            Ok(Problem {
                oracle: Box::new(f.clone()),
                forest: Some(f),
                label,
            })
        }
        (Format::MatrixDpp, Instance::Matrix(m)) => {
            if m.rows != m.cols {
                return Err(usage(format!("a DPP kernel must be square, got {}x{}", m.rows, m.cols)));
            }
            let k = k.ok_or_else(|| usage("matrix-dpp needs -k"))?;
            let d = DppDensity::new(m.rows, m.values, k)?;
            Ok(Problem {
                oracle: Box::new(d),
                forest: None,
                label: format!("dpp(n={}, k={k})", m.rows),
            })
        }
        (Format::MatrixLinear, Instance::Matrix(m)) => {
            let k = k.unwrap_or(m.rows);
            let label = format!("linear(rows={}, cols={}, k={k})", m.rows, m.cols);
            Ok(Problem {
                oracle: Box::new(linear(m, k)?),
                forest: None,
                label,
            })
        }
        (Format::Explicit, inst @ Instance::Explicit { .. }) => {
            let d = inst.into_explicit()?;
            if let Some(k) = k {
                if k != d.degree() {
                    return Err(usage(format!("-k {k} disagrees with the table's k = {}", d.degree())));
                }
            }
            let label = format!("explicit(n={}, k={})", d.ground_size(), d.degree());
            Ok(Problem {
                oracle: Box::new(d),
                forest: None,
                label,
            })
        }
        (f, inst) => Err(usage(format!("format {f:?} does not match a {} file", inst.kind()))),
    }
}

/// Exact rational arithmetic when every entry is a plain decimal.
fn linear(m: MatrixData, k: usize) -> Result<LinearMatroidDensity, Failure> {
    match m.to_rational() {
        Ok(values) => Ok(LinearMatroidDensity::rational(m.rows, m.cols, values, k)?),
        Err(_) => Ok(LinearMatroidDensity::new(m.rows, m.cols, m.values, k)?),
    }
}
