//! Exponential-mechanism obfuscation over per-PLS reporting ranges, and
//! verifiers for the privacy guarantees it is supposed to provide.
//!
//! The kernel for a true location `x` in PLS `j` is
//! `f(x'|x) ∝ exp(-eps_j * d(x, x') / (2 D_j))` over `x'` in the PLS's
//! reporting range, where `eps_j` is the PLS's own adaptively allocated
//! budget (at most `epsilon0`) and `D_j` its diameter, the sensitivity of the
//! distance score.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::pls::{Pls, PlsPartition};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    /// Ascending domain indices.
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
}

impl MatrixRow {
    /// `f(output | this row's location)`; zero off-support.
    pub fn prob(&self, output: usize) -> f64 {
        self.support
            .binary_search(&output)
            .map_or(0.0, |i| self.probs[i])
    }
}

/// Row-stochastic reporting distribution, one sparse row per location.
#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationMatrix {
    rows: Vec<MatrixRow>,
    /// `columns[x']` = every `(x, f(x'|x))` with positive mass, ascending `x`.
    columns: Vec<Vec<(usize, f64)>>,
}

impl ObfuscationMatrix {
    pub fn from_rows(rows: Vec<MatrixRow>) -> Result<Self> {
        let n = rows.len();
        let mut columns = vec![Vec::new(); n];
        for (x, row) in rows.iter().enumerate() {
            if row.support.len() != row.probs.len() {
                return Err(Error::InvalidArgument(format!("row {x}: support/probs length mismatch")));
            }
            if row.support.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!("row {x}: support must be strictly ascending")));
            }
            for (&o, &p) in row.support.iter().zip(&row.probs) {
                if o >= n {
                    return Err(Error::InvalidArgument(format!("row {x}: output index {o} out of range")));
                }
                if p > 0.0 {
                    columns[o].push((x, p));
                }
            }
        }
        Ok(ObfuscationMatrix { rows, columns })
    }

    /// Every location reports itself.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|x| MatrixRow {
                support: vec![x],
                probs: vec![1.0],
            })
            .collect();
        Self::from_rows(rows).expect("identity rows are well formed")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, x: usize) -> &MatrixRow {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[MatrixRow] {
        &self.rows
    }

    pub fn column(&self, output: usize) -> &[(usize, f64)] {
        &self.columns[output]
    }

    pub fn to_export(&self, domain: &Domain) -> MatrixExport {
        MatrixExport {
            rows: self
                .rows
                .iter()
                .enumerate()
                .map(|(x, r)| ExportedRow {
                    true_id: domain.id(x),
                    support: r.support.iter().map(|&s| domain.id(s)).collect(),
                    probs: r.probs.clone(),
                })
                .collect(),
        }
    }

    pub fn from_export(export: &MatrixExport, domain: &Domain) -> Result<Self> {
        if export.rows.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} rows for a {}-location domain",
                export.rows.len(),
                domain.len()
            )));
        }
        let idx = |id: u32| {
            domain
                .index_of(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown location id {id}")))
        };
        let mut rows = vec![None; domain.len()];
        for r in &export.rows {
            let x = idx(r.true_id)?;
            let mut pairs = r
                .support
                .iter()
                .zip(&r.probs)
                .map(|(&s, &p)| Ok((idx(s)?, p)))
                .collect::<Result<Vec<_>>>()?;
            if r.support.len() != r.probs.len() {
                return Err(Error::InvalidArgument(format!("row {}: support/probs length mismatch", r.true_id)));
            }
            pairs.sort_by_key(|p| p.0);
            rows[x] = Some(MatrixRow {
                support: pairs.iter().map(|p| p.0).collect(),
                probs: pairs.iter().map(|p| p.1).collect(),
            });
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| r.ok_or_else(|| Error::InvalidArgument(format!("no row for location {}", domain.id(x)))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    /// Compact little-endian form:
    ///
    /// ```text
    /// magic   8 bytes  "GMOBFMAT"
    /// version u32      1
    /// rows    u32
    /// per row: true_id u32, len u32, len x u32 support ids, len x f64 probs
    /// ```
    pub fn write_binary(&self, domain: &Domain, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u32).to_le_bytes())?;
        for (x, r) in self.rows.iter().enumerate() {
            w.write_all(&domain.id(x).to_le_bytes())?;
            w.write_all(&(r.support.len() as u32).to_le_bytes())?;
            for &s in &r.support {
                w.write_all(&domain.id(s).to_le_bytes())?;
            }
            for &p in &r.probs {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(domain: &Domain, mut r: impl Read) -> Result<Self> {
        let schema = |m: &str| Error::Schema {
            path: "<binary matrix>".into(),
            message: m.into(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| schema("truncated header"))?;
        if &magic != BINARY_MAGIC {
            return Err(schema("bad magic"));
        }
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut u32_buf).map_err(|_| schema("truncated"))?;
            Ok(u32::from_le_bytes(u32_buf))
        };
        if read_u32(&mut r)? != BINARY_VERSION {
            return Err(schema("unsupported version"));
        }
        let n = read_u32(&mut r)? as usize;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let true_id = read_u32(&mut r)?;
            let len = read_u32(&mut r)? as usize;
            let support = (0..len).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
            let mut probs = Vec::with_capacity(len);
            for _ in 0..len {
                let mut b = [0u8; 8];
                r.read_exact(&mut b).map_err(|_| schema("truncated"))?;
                probs.push(f64::from_le_bytes(b));
            }
            rows.push(ExportedRow { true_id, support, probs });
        }
        Self::from_export(&MatrixExport { rows }, domain)
    }
}

const BINARY_MAGIC: &[u8; 8] = b"GMOBFMAT";
const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedRow {
    pub true_id: u32,
    pub support: Vec<u32>,
    pub probs: Vec<f64>,
}

/// Matrix JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixExport {
    pub rows: Vec<ExportedRow>,
}

/// Reporting distribution of `x` over `range` under its PLS's budget.
pub fn mechanism_row(domain: &Domain, x: usize, pls: &Pls, range: &[usize]) -> Result<MatrixRow> {
    if pls.members.binary_search(&x).is_err() {
        return Err(Error::InvalidArgument(format!(
            "location {} is not a member of the given PLS",
            domain.id(x)
        )));
    }
    if !(pls.diameter > 0.0) {
        return Err(Error::DegeneratePls {
            member: domain.id(pls.members[0]),
        });
    }
    let rate = pls.epsilon / (2.0 * pls.diameter);
    Ok(kernel_row(domain, x, rate, range))
}

/// `exp(-rate * d)` normalized over `range`; exponents are shifted by the
/// smallest distance so the largest weight is exactly one.
pub(crate) fn kernel_row(domain: &Domain, x: usize, rate: f64, range: &[usize]) -> MatrixRow {
    let mut support = range.to_vec();
    support.sort_unstable();
    let dists: Vec<f64> = support.iter().map(|&o| domain.dist(x, o)).collect();
    let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = dists.iter().map(|&d| (-rate * (d - dmin)).exp()).collect();
    let total: f64 = weights.iter().sum();
    MatrixRow {
        support,
        probs: weights.iter().map(|w| w / total).collect(),
    }
}

/// One row per location, each over its PLS's reporting range.
pub fn build_matrix(partition: &PlsPartition, domain: &Domain) -> Result<ObfuscationMatrix> {
    let mut rows: Vec<Option<MatrixRow>> = vec![None; domain.len()];
    for (pls, range) in partition.plss.iter().zip(&partition.reporting_ranges) {
        for &x in &pls.members {
            rows[x] = Some(mechanism_row(domain, x, pls, range)?);
        }
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(x, r)| r.ok_or_else(|| Error::InvalidArgument(format!("location {} is in no PLS", domain.id(x)))))
        .collect::<Result<Vec<_>>>()?;
    ObfuscationMatrix::from_rows(rows)
}

/// Draws a pseudo-location for `x` by inverse CDF over the row's ascending support.
pub fn sample_pseudo(matrix: &ObfuscationMatrix, x: usize, rng: &mut impl rand::Rng) -> Result<usize> {
    let row = matrix
        .rows
        .get(x)
        .ok_or_else(|| Error::InvalidArgument(format!("location index {x} not in matrix")))?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (&o, &p) in row.support.iter().zip(&row.probs) {
        acc += p;
        if u < acc {
            return Ok(o);
        }
    }
    // Rounding left `acc` a hair under one: take the last positive entry.
    row.support
        .iter()
        .zip(&row.probs)
        .rev()
        .find(|(_, &p)| p > 0.0)
        .map(|(&o, _)| o)
        .ok_or_else(|| Error::InvalidArgument(format!("row {x} has no positive mass")))
}

/// Expected distance between `x` and its report.
pub fn quality_loss_at(x: usize, matrix: &ObfuscationMatrix, domain: &Domain) -> f64 {
    let row = &matrix.rows[x];
    row.support
        .iter()
        .zip(&row.probs)
        .map(|(&o, &p)| p * domain.dist(x, o))
        .sum()
}

/// The location pair and output achieving a reported ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioWitness {
    pub x: u32,
    pub y: u32,
    pub output: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
    pub worst: Option<RatioWitness>,
}

/// Largest `f(x'|x) / f(x'|y)` over every PLS, pair `x, y` in it and output
/// in its range. Passes iff it is at most `e^{epsilon0} (1 + 1e-9)`.
pub fn verify_dp_within_pls(
    matrix: &ObfuscationMatrix,
    partition: &PlsPartition,
    domain: &Domain,
    epsilon0: f64,
) -> DpReport {
    let mut max_ratio: f64 = 1.0;
    let mut worst = None;
    for (pls, range) in partition.plss.iter().zip(&partition.reporting_ranges) {
        for &o in range {
            let (mut hi, mut hi_x) = (f64::NEG_INFINITY, 0);
            let (mut lo, mut lo_y) = (f64::INFINITY, 0);
            for &m in &pls.members {
                let p = matrix.rows[m].prob(o);
                if p > hi {
                    (hi, hi_x) = (p, m);
                }
                if p < lo {
                    (lo, lo_y) = (p, m);
                }
            }
            let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = Some(RatioWitness {
                    x: domain.id(hi_x),
                    y: domain.id(lo_y),
                    output: domain.id(o),
                });
            }
        }
    }
    let bound = epsilon0.exp();
    DpReport {
        max_ratio,
        bound,
        pass: max_ratio <= bound * (1.0 + 1e-9),
        worst,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub i: usize,
    pub j: usize,
    /// False when the two reporting ranges are disjoint.
    pub applicable: bool,
    pub observed_max: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks, for `x` in PLS `i`, `y` in PLS `j` and every shared output `x'`,
/// `f(x'|x)/f(x'|y) <= |Y_j|/|Y_i| * exp(epsilon0/2 * (D(Y_j)/D_j + D(Y_i)/D_i))`.
/// The bound is not tight; both numbers are reported.
pub fn verify_cross_pls(
    matrix: &ObfuscationMatrix,
    partition: &PlsPartition,
    domain: &Domain,
    i: usize,
    j: usize,
    epsilon0: f64,
) -> CrossReport {
    let range_diameter = |k: usize| domain.diameter(&partition.reporting_ranges[k]);
    cross_check(matrix, partition, i, j, epsilon0, range_diameter(i), range_diameter(j))
}

fn cross_check(
    matrix: &ObfuscationMatrix,
    partition: &PlsPartition,
    i: usize,
    j: usize,
    epsilon0: f64,
    range_diam_i: f64,
    range_diam_j: f64,
) -> CrossReport {
    let (yi, yj) = (&partition.reporting_ranges[i], &partition.reporting_ranges[j]);
    let shared: Vec<usize> = yi.iter().copied().filter(|o| yj.binary_search(o).is_ok()).collect();
    let (pi, pj) = (&partition.plss[i], &partition.plss[j]);
    let bound = yj.len() as f64 / yi.len() as f64
        * (epsilon0 / 2.0 * (range_diam_j / pj.diameter + range_diam_i / pi.diameter)).exp();
    if shared.is_empty() {
        return CrossReport {
            i,
            j,
            applicable: false,
            observed_max: 0.0,
            bound,
            pass: true,
        };
    }
    let mut observed: f64 = 0.0;
    for &o in &shared {
        let hi = pi.members.iter().map(|&x| matrix.rows[x].prob(o)).fold(0.0, f64::max);
        let lo = pj
            .members
            .iter()
            .map(|&y| matrix.rows[y].prob(o))
            .fold(f64::INFINITY, f64::min);
        observed = observed.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    CrossReport {
        i,
        j,
        applicable: true,
        observed_max: observed,
        bound,
        pass: observed <= bound * (1.0 + 1e-9),
    }
}

/// Runs [`verify_cross_pls`] on every ordered pair of distinct PLSs whose
/// ranges intersect; returns only applicable reports.
pub fn verify_all_cross_pls(
    matrix: &ObfuscationMatrix,
    partition: &PlsPartition,
    domain: &Domain,
    epsilon0: f64,
) -> Vec<CrossReport> {
    let diam: Vec<f64> = partition.reporting_ranges.iter().map(|r| domain.diameter(r)).collect();
    let n = partition.plss.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = cross_check(matrix, partition, i, j, epsilon0, diam[i], diam[j]);
            if r.applicable {
                out.push(r);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoIndReport {
    /// Largest `ln(f(x'|x)/f(x'|y)) - eps_g (d(x,y) + D)`; at most zero when the property holds.
    pub max_excess: f64,
    pub pass: bool,
}

/// Checks `(eps_g, D)`-geo-indistinguishability within every PLS, with
/// `eps_g = eps_j / (2 D_j)`.
pub fn verify_geo_indistinguishability(
    matrix: &ObfuscationMatrix,
    partition: &PlsPartition,
    domain: &Domain,
) -> GeoIndReport {
    let mut max_excess = f64::NEG_INFINITY;
    for (pls, range) in partition.plss.iter().zip(&partition.reporting_ranges) {
        let eg = pls.epsilon_g();
        for &x in &pls.members {
            for &y in &pls.members {
                let allowed = eg * (domain.dist(x, y) + pls.diameter);
                for &o in range {
                    let lr = matrix.rows[x].prob(o).ln() - matrix.rows[y].prob(o).ln();
                    max_excess = max_excess.max(lr - allowed);
                }
            }
        }
    }
    GeoIndReport {
        max_excess,
        pass: max_excess <= 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticityReport {
    pub max_deviation: f64,
    pub worst_row: Option<u32>,
    pub pass: bool,
}

/// Every row must be nonnegative and sum to one within 1e-9.
pub fn verify_row_stochastic(matrix: &ObfuscationMatrix, domain: &Domain) -> StochasticityReport {
    let mut max_deviation: f64 = 0.0;
    let mut worst_row = None;
    for (x, r) in matrix.rows.iter().enumerate() {
        let dev = if r.probs.iter().any(|&p| !(p >= 0.0)) {
            f64::INFINITY
        } else {
            (r.probs.iter().sum::<f64>() - 1.0).abs()
        };
        if dev > max_deviation {
            max_deviation = dev;
            worst_row = Some(domain.id(x));
        }
    }
    StochasticityReport {
        max_deviation,
        worst_row,
        pass: max_deviation <= 1e-9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Location;
    use crate::rng;

    fn two_point() -> (Domain, PlsPartition) {
        let d = Domain::with_uniform_prior(vec![
            Location { id: 0, x: 0.0, y: 0.0 },
            Location { id: 1, x: 1.0, y: 0.0 },
        ])
        .unwrap();
        let p = PlsPartition {
            plss: vec![Pls {
                cell: 0,
                members: vec![0, 1],
                diameter: 1.0,
                e_prime: 0.5,
                epsilon: 2.0,
            }],
            reporting_ranges: vec![vec![0, 1]],
            objectives: None,
        };
        (d, p)
    }

    #[test]
    fn two_point_row() {
        let (d, p) = two_point();
        let row = mechanism_row(&d, 0, &p.plss[0], &p.reporting_ranges[0]).unwrap();
        let expect = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((row.probs[0] - expect).abs() < 1e-15);
        assert!((row.probs[0] - 0.7311).abs() < 1e-4);
        assert!((row.probs[1] - 0.2689).abs() < 1e-4);

        let m = build_matrix(&p, &d).unwrap();
        assert!((quality_loss_at(0, &m, &d) - (1.0 - expect)).abs() < 1e-15);
        let rep = verify_dp_within_pls(&m, &p, &d, 2.0);
        assert!((rep.max_ratio - 1f64.exp()).abs() < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn tiny_budget_is_uniform() {
        let (d, mut p) = two_point();
        p.plss[0].epsilon = 1e-12;
        let row = mechanism_row(&d, 1, &p.plss[0], &[0, 1]).unwrap();
        assert!(row.probs.iter().all(|&q| (q - 0.5).abs() < 1e-9));
        let m = build_matrix(&p, &d).unwrap();
        assert!((quality_loss_at(0, &m, &d) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_foreign_inputs() {
        let (d, mut p) = two_point();
        p.plss[0].diameter = 0.0;
        assert!(matches!(
            mechanism_row(&d, 0, &p.plss[0], &[0, 1]),
            Err(Error::DegeneratePls { member: 0 })
        ));
        let (d, p) = two_point();
        let other = Pls {
            members: vec![1],
            ..p.plss[0].clone()
        };
        assert!(matches!(mechanism_row(&d, 0, &other, &[0, 1]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sampler_degenerate_deterministic_and_unknown() {
        let m = ObfuscationMatrix::identity(3);
        let mut r = rng::stream(1, &[]);
        assert!((0..50).all(|_| sample_pseudo(&m, 2, &mut r).unwrap() == 2));
        assert!(sample_pseudo(&m, 3, &mut r).is_err());

        let (d, p) = two_point();
        let m = build_matrix(&p, &d).unwrap();
        let draw = |seed| {
            let mut r = rng::stream(seed, &[]);
            (0..64).map(|_| sample_pseudo(&m, 0, &mut r).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn sampler_frequencies_within_three_sigma() {
        let (d, p) = two_point();
        let m = build_matrix(&p, &d).unwrap();
        let mut r = rng::stream(77, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_pseudo(&m, 0, &mut r).unwrap() == 0).count();
        let q = m.row(0).probs[0];
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        assert!((hits as f64 - n as f64 * q).abs() <= 3.0 * sigma);
    }

    #[test]
    fn binary_and_json_roundtrip() {
        let (d, p) = two_point();
        let m = build_matrix(&p, &d).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&d, &mut buf).unwrap();
        assert_eq!(ObfuscationMatrix::read_binary(&d, buf.as_slice()).unwrap(), m);
        let json = serde_json::to_string(&m.to_export(&d)).unwrap();
        let back: MatrixExport = serde_json::from_str(&json).unwrap();
        assert_eq!(ObfuscationMatrix::from_export(&back, &d).unwrap(), m);
        assert!(ObfuscationMatrix::read_binary(&d, &b"NOTMAGIC"[..]).is_err());
    }

    #[test]
    fn identical_ranges_have_unit_prefactor() {
        let d = Domain::with_uniform_prior(
            (0..4).map(|i| Location { id: i, x: i as f64, y: 0.0 }).collect(),
        )
        .unwrap();
        let mk = |m: Vec<usize>| Pls {
            cell: 0,
            diameter: d.diameter(&m),
            members: m,
            e_prime: 1.0,
            epsilon: 1.0,
        };
        let p = PlsPartition {
            plss: vec![mk(vec![0, 1]), mk(vec![2, 3])],
            reporting_ranges: vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]],
            objectives: None,
        };
        let m = build_matrix(&p, &d).unwrap();
        let r = verify_cross_pls(&m, &p, &d, 0, 1, 1.0);
        assert!(r.applicable && r.pass);
        assert!((r.bound - (0.5 * (3.0 + 3.0f64)).exp()).abs() < 1e-12);
        assert!(r.observed_max > 1.0 && r.observed_max < r.bound);

        let disjoint = PlsPartition {
            reporting_ranges: vec![vec![0, 1], vec![2, 3]],
            ..p.clone()
        };
        let m = build_matrix(&disjoint, &d).unwrap();
        assert!(!verify_cross_pls(&m, &disjoint, &d, 0, 1, 1.0).applicable);
        assert!(verify_geo_indistinguishability(&m, &disjoint, &d).pass);
    }

    #[test]
    fn corrupted_row_fails_stochasticity() {
        let (d, p) = two_point();
        let m = build_matrix(&p, &d).unwrap();
        let mut rows = m.rows().to_vec();
        rows[1].probs = vec![0.45, 0.45];
        let bad = ObfuscationMatrix::from_rows(rows).unwrap();
        let r = verify_row_stochastic(&bad, &d);
        assert!(!r.pass);
        assert_eq!(r.worst_row, Some(1));
        assert!(verify_row_stochastic(&m, &d).pass);
    }
}
