use super::ExactTable;
use crate::density::{ExplicitDensity, LogDensityOracle};
use crate::error::{invalid_param, Result};

/// Ceiling on the number of support entries of a subdivided density.
const MAX_ENTRIES: usize = 4_000_000;

/// A density whose ground set splits element `i` into `multiplicity[i]` copies.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub density: ExplicitDensity,
    /// `projection[j]` is the original element that copy `j` came from.
    pub projection: Vec<usize>,
    /// `multiplicity[i]` copies of original element `i`.
    pub multiplicity: Vec<usize>,
}

impl Subdivision {
    /// Copies of original element `i`.
    pub fn copies_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.projection
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p == i)
            .map(|(j, _)| j)
    }
}

/// `mu'(S') = mu(pi(S')) * prod_{j in S'} 1 / mult(pi(j))` when `pi` is
/// injective on `S'`, and zero otherwise.
///
/// The partition function is unchanged and the marginal of each copy is
/// `q_{pi(j)} / mult(pi(j))`.
pub fn subdivide<O: LogDensityOracle + ?Sized>(
    density: &O,
    multiplicity: &[usize],
) -> Result<Subdivision> {
    subdivide_table(&ExactTable::enumerate(density)?, multiplicity)
}

/// [`subdivide`] starting from an already enumerated table.
pub fn subdivide_table(table: &ExactTable, multiplicity: &[usize]) -> Result<Subdivision> {
    let (n, k) = (table.n(), table.k());
    if multiplicity.len() != n {
        return Err(invalid_param(format!(
            "expected {n} multiplicities, got {}",
            multiplicity.len()
        )));
    }
    if multiplicity.contains(&0) {
        return Err(invalid_param("multiplicities must be positive"));
    }
    let mut offset = Vec::with_capacity(n);
    let mut projection = Vec::new();
    for (i, &m) in multiplicity.iter().enumerate() {
        offset.push(projection.len());
        projection.extend(std::iter::repeat_n(i, m));
    }
    let log_z = table.log_partition();
    let mut entries = Vec::new();
    let mut overflow = false;
    table.for_each_support(|s, p| {
        if overflow {
            return;
        }
        let log_w = p.ln() + log_z - s.iter().map(|&i| (multiplicity[i] as f64).ln()).sum::<f64>();
        // Odometer over the copy chosen for each element of s.
        let mut choice = vec![0usize; s.len()];
        loop {
            let lifted: Vec<usize> = s.iter().zip(&choice).map(|(&i, &c)| offset[i] + c).collect();
            entries.push((lifted, log_w));
            if entries.len() > MAX_ENTRIES {
                overflow = true;
                return;
            }
            let mut pos = 0;
            while pos < s.len() {
                choice[pos] += 1;
                if choice[pos] < multiplicity[s[pos]] {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == s.len() {
                break;
            }
        }
    });
    if overflow {
        return Err(invalid_param(format!(
            "subdivided support exceeds {MAX_ENTRIES} entries"
        )));
    }
    let density = ExplicitDensity::from_log_weights(projection.len(), k, entries)?;
    Ok(Subdivision {
        density,
        projection,
        multiplicity: multiplicity.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DppDensity, ExplicitDensity, ForestDensity, Graph};

    fn check(table: &ExactTable, mult: &[usize]) {
        let sub = subdivide_table(table, mult).unwrap();
        let lifted = ExactTable::enumerate(&sub.density).unwrap();
        assert!((lifted.log_partition() - table.log_partition()).abs() < 1e-10);
        for (j, &q) in lifted.marginals().iter().enumerate() {
            let i = sub.projection[j];
            let want = table.marginals()[i] / mult[i] as f64;
            assert!((q - want).abs() < 1e-12, "copy {j} of {i}: {q} vs {want}");
        }
    }

    #[test]
    fn preserves_partition_and_splits_marginals() {
        let d = DppDensity::diagonal(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let t = ExactTable::enumerate(&d).unwrap();
        check(&t, &[1, 2, 3, 1]);
        let f = ForestDensity::new(Graph::complete(4), 3).unwrap();
        check(&ExactTable::enumerate(&f).unwrap(), &[2, 1, 1, 1, 3, 1]);
    }

    #[test]
    fn copies_never_collide() {
        let d = DppDensity::diagonal(&[1.0, 1.0, 1.0], 2).unwrap();
        let sub = subdivide(&d, &[2, 1, 1]).unwrap();
        let copies: Vec<usize> = sub.copies_of(0).collect();
        assert_eq!(copies, vec![0, 1]);
        assert_eq!(sub.density.eval(&copies), f64::NEG_INFINITY);
        assert!(subdivide(&d, &[0, 1, 1]).is_err());
    }

    #[test]
    fn identity_and_small_split() {
        let d = DppDensity::diagonal(&[1.0, 2.0, 5.0], 2).unwrap();
        let same = subdivide(&d, &[1, 1, 1]).unwrap();
        crate::subset::for_each_subset(3, 2, |s| {
            assert!((same.density.eval(s) - d.eval(s)).abs() < 1e-12);
        });
        let u21 = ExplicitDensity::new(2, 1, vec![(vec![0], 1.0), (vec![1], 1.0)]).unwrap();
        let split = ExactTable::enumerate(&subdivide(&u21, &[2, 1]).unwrap().density).unwrap();
        for (q, want) in split.marginals().iter().zip([0.25, 0.25, 0.5]) {
            assert!((q - want).abs() < 1e-15);
        }
    }
}
