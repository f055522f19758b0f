//! Recursive equal-count binary partitioning of the domain's bounding
//! rectangle into cells.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Rect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub bounds: Rect,
    /// Domain indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    pub levels: u32,
    pub cells: Vec<Cell>,
    /// `cell_of[location index]`
    cell_of: Vec<usize>,
}

impl PartitionTree {
    pub fn cell_of(&self, loc: usize) -> usize {
        self.cell_of[loc]
    }

    pub fn to_export(&self, domain: &Domain) -> CellsExport {
        CellsExport {
            levels: self.levels,
            cells: self
                .cells
                .iter()
                .map(|c| ExportedCell {
                    id: c.id,
                    bounds: c.bounds,
                    member_ids: c.members.iter().map(|&m| domain.id(m)).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedCell {
    pub id: usize,
    pub bounds: Rect,
    pub member_ids: Vec<u32>,
}

/// `cells.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellsExport {
    pub levels: u32,
    pub cells: Vec<ExportedCell>,
}

/// Number of halving levels: the largest `L` with `n0 * 2^L <= n`.
pub fn partition_levels(n: usize, n0: usize) -> u32 {
    let mut levels = 0;
    while n0.checked_mul(1 << (levels + 1)).is_some_and(|v| v <= n) {
        levels += 1;
    }
    levels
}

/// Splits the tight bounding box `levels` times. Each split cuts
/// perpendicular to the longer edge (width on ties) at the median, the lower
/// half taking the extra member when the count is odd; ties on the split
/// coordinate are broken by index. The cut plane sits halfway between the two
/// straddling members.
pub fn binary_partition(domain: &Domain, n0: usize) -> Result<PartitionTree> {
    if n0 < 2 {
        return Err(Error::InvalidConfig(format!("n0 must be >= 2, got {n0}")));
    }
    if domain.len() < n0 {
        return Err(Error::InvalidConfig(format!(
            "domain has {} locations, fewer than n0 = {n0}",
            domain.len()
        )));
    }
    let levels = partition_levels(domain.len(), n0);
    let mut cells = vec![(domain.bounds(), (0..domain.len()).collect::<Vec<_>>())];
    for _ in 0..levels {
        cells = cells
            .into_iter()
            .flat_map(|(rect, members)| {
                let (a, b) = split(domain, rect, members);
                [a, b]
            })
            .collect();
    }

    let mut cell_of = vec![0; domain.len()];
    let cells: Vec<Cell> = cells
        .into_iter()
        .enumerate()
        .map(|(id, (bounds, mut members))| {
            members.sort_unstable();
            for &m in &members {
                cell_of[m] = id;
            }
            Cell { id, bounds, members }
        })
        .collect();
    Ok(PartitionTree {
        levels,
        cells,
        cell_of,
    })
}

type Half = (Rect, Vec<usize>);

fn split(domain: &Domain, rect: Rect, mut members: Vec<usize>) -> (Half, Half) {
    let along_x = rect.width() >= rect.height();
    let coord = |i: usize| {
        let l = domain.location(i);
        if along_x {
            l.x
        } else {
            l.y
        }
    };
    members.sort_by(|&a, &b| coord(a).total_cmp(&coord(b)).then(a.cmp(&b)));
    let left_len = members.len().div_ceil(2);
    let right = members.split_off(left_len);
    let cut = match (members.last(), right.first()) {
        (Some(&l), Some(&r)) => (coord(l) + coord(r)) / 2.0,
        _ if along_x => rect.max_x,
        _ => rect.max_y,
    };
    let (mut lo, mut hi) = (rect, rect);
    if along_x {
        lo.max_x = cut;
        hi.min_x = cut;
    } else {
        lo.max_y = cut;
        hi.min_y = cut;
    }
    ((lo, members), (hi, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{load_domain, DatasetSpec, Location};

    fn line(n: usize) -> Domain {
        Domain::with_uniform_prior(
            (0..n)
                .map(|i| Location {
                    id: i as u32,
                    x: i as f64,
                    y: (i % 3) as f64 * 0.01,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn level_counts() {
        assert_eq!(partition_levels(400, 33), 3);
        assert_eq!(partition_levels(40, 33), 0);
        assert_eq!(partition_levels(100, 25), 2);
        assert_eq!(partition_levels(3000, 33), 6);
    }

    #[test]
    fn fig4_configuration() {
        let d = load_domain(&DatasetSpec::benchmark_400(1)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        assert_eq!(t.levels, 3);
        assert_eq!(t.cells.len(), 8);
        assert!(t.cells.iter().all(|c| c.members.len() == 50));
        // 12 x 6 km box: first cut is left/right.
        let right_of_first_cut = t.cells[4].bounds.min_x;
        assert!(t.cells[..4].iter().all(|c| c.bounds.max_x <= right_of_first_cut));
    }

    #[test]
    fn small_examples() {
        let t = binary_partition(&line(40), 33).unwrap();
        assert_eq!((t.levels, t.cells.len(), t.cells[0].members.len()), (0, 1, 40));
        let t = binary_partition(&line(100), 25).unwrap();
        assert_eq!(t.levels, 2);
        assert!(t.cells.iter().all(|c| c.members.len() == 25));
    }

    #[test]
    fn odd_split_gives_lower_half_the_extra() {
        let t = binary_partition(&line(7), 3).unwrap();
        assert_eq!(t.cells[0].members, vec![0, 1, 2, 3]);
        assert_eq!(t.cells[1].members, vec![4, 5, 6]);
        assert_eq!(t.cells[0].bounds.max_x, 3.5);
    }

    #[test]
    fn rejects_bad_n0() {
        assert!(matches!(binary_partition(&line(10), 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(binary_partition(&line(10), 11), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn members_inside_bounds_and_cover() {
        let d = load_domain(&DatasetSpec::benchmark_400(9)).unwrap();
        let t = binary_partition(&d, 20).unwrap();
        let mut seen = vec![0; d.len()];
        for c in &t.cells {
            for &m in &c.members {
                seen[m] += 1;
                let l = d.location(m);
                assert!(c.bounds.contains(l.x, l.y));
                assert_eq!(t.cell_of(m), c.id);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }
}
