//! Protection Location Sets: the inference-error lower bound `E'`, adaptive
//! budget allocation, cluster-count search, clustering with retreats, and
//! reporting-range construction.

use rand::seq::index::sample;
use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::adversary::ObjectivePair;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::{Cell, PartitionTree};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Total privacy budget.
    pub epsilon0: f64,
    /// Lower bound (km) on the conditional expected inference error.
    pub e_m: f64,
    /// Cell size floor for the binary partition.
    pub n0: usize,
    pub min_report_locations: usize,
    pub min_report_plss: usize,
    /// Restrict the attack point in `E'` to the PLS's own cell. Faster but
    /// only an approximation of the full-domain bound.
    pub cell_restricted_attack: bool,
    /// k-means restarts per candidate cluster count.
    pub kmeans_restarts: usize,
    /// Randomized clustering attempts per cell before the deterministic fallback.
    pub retc_attempts: usize,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            epsilon0: 1.0,
            e_m: 0.1,
            n0: 33,
            min_report_locations: 50,
            min_report_plss: 2,
            cell_restricted_attack: false,
            kmeans_restarts: 10,
            retc_attempts: 20,
        }
    }
}

impl PrivacyConfig {
    pub fn new(epsilon0: f64, e_m: f64) -> Self {
        PrivacyConfig {
            epsilon0,
            e_m,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0 && self.epsilon0.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon0 must be > 0, got {}", self.epsilon0)));
        }
        if !(self.e_m > 0.0 && self.e_m.is_finite()) {
            return Err(Error::InvalidConfig(format!("e_m must be > 0, got {}", self.e_m)));
        }
        if self.n0 < 2 {
            return Err(Error::InvalidConfig(format!("n0 must be >= 2, got {}", self.n0)));
        }
        if self.min_report_plss < 1 || self.kmeans_restarts < 1 || self.retc_attempts < 1 {
            return Err(Error::InvalidConfig(
                "min_report_plss, kmeans_restarts and retc_attempts must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `e^{epsilon0} * E_m`: the bound a PLS must reach to carry the full budget.
    pub fn strict_threshold(&self) -> f64 {
        self.epsilon0.exp() * self.e_m
    }

    pub fn satisfies_strict(&self, e_prime: f64) -> bool {
        e_prime >= self.strict_threshold()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pls {
    pub cell: usize,
    /// Domain indices, ascending.
    pub members: Vec<usize>,
    pub diameter: f64,
    pub e_prime: f64,
    pub epsilon: f64,
}

impl Pls {
    /// Geo-indistinguishability rate `epsilon / (2 D)`.
    pub fn epsilon_g(&self) -> f64 {
        self.epsilon / (2.0 * self.diameter)
    }

    /// Member minimizing the summed distance to the other members, ties to
    /// the lowest index. Used as the PLS's cluster center by the genetic
    /// operators.
    pub fn medoid(&self, domain: &Domain) -> usize {
        medoid(&self.members, domain)
    }
}

pub(crate) fn medoid(members: &[usize], domain: &Domain) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &c in members {
        let s: f64 = members.iter().map(|&m| domain.dist(c, m)).sum();
        if s < best.0 || (s == best.0 && c < best.1) {
            best = (s, c);
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsPartition {
    pub plss: Vec<Pls>,
    /// Per PLS, the ascending domain indices it may report.
    pub reporting_ranges: Vec<Vec<usize>>,
    pub objectives: Option<ObjectivePair>,
}

/// Prior-conditioned minimal expected distortion of the best point estimate
/// against `members`, the estimate ranging over the whole domain.
pub fn e_prime(members: &[usize], domain: &Domain) -> Result<f64> {
    e_prime_among(members, domain, None)
}

/// [`e_prime`] with the estimate optionally restricted to `candidates`.
pub fn e_prime_among(members: &[usize], domain: &Domain, candidates: Option<&[usize]>) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("e_prime of an empty set".into()));
    }
    let mass: f64 = members.iter().map(|&m| domain.prior()[m]).sum();
    let weights: Vec<(usize, f64)> = members.iter().map(|&m| (m, domain.prior()[m] / mass)).collect();
    Ok(match candidates {
        None => domain.weighted_median(&weights).1,
        Some(c) => domain.weighted_median_among(&weights, c).1,
    })
}

/// Adaptive budget `min(ln(E'/E_m), epsilon0)`; `None` when it is not positive.
pub fn allocate_epsilon(e_prime: f64, cfg: &PrivacyConfig) -> Option<f64> {
    let eps = (e_prime / cfg.e_m).ln().min(cfg.epsilon0);
    (eps > 0.0).then_some(eps)
}

/// Outcome of the cluster-count search for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KSearch {
    pub k: usize,
    /// The qualifying clustering (every cluster meets the strict bound).
    pub clustering: Vec<Vec<usize>>,
}

/// Largest `k` in `[1, |cell|/2]` for which some k-means++ restart yields
/// clusters that all have at least two members and meet the strict bound.
pub fn find_k(cell: &Cell, domain: &Domain, cfg: &PrivacyConfig, rng: &mut Rng) -> Result<KSearch> {
    let n = cell.members.len();
    let candidates = cfg.cell_restricted_attack.then_some(cell.members.as_slice());
    for k in (1..=n / 2).rev() {
        let restarts = if k == 1 { 1 } else { cfg.kmeans_restarts };
        let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
        for _ in 0..restarts {
            let (sse, clusters) = kmeans(&cell.members, k, domain, rng);
            if best.as_ref().is_some_and(|b| b.0 <= sse) {
                continue;
            }
            let ok = clusters.iter().all(|c| c.len() >= 2)
                && clusters.iter().all(|c| {
                    e_prime_among(c, domain, candidates).is_ok_and(|e| cfg.satisfies_strict(e))
                });
            if ok {
                best = Some((sse, clusters));
            }
        }
        if let Some((_, clustering)) = best {
            return Ok(KSearch { k, clustering });
        }
    }
    let whole = if n == 0 {
        0.0
    } else {
        e_prime_among(&cell.members, domain, candidates)?
    };
    Err(Error::CellInfeasible {
        cell: cell.id,
        reason: format!(
            "no clustering reaches E' >= e^eps0 * E_m = {:.6} (whole cell E' = {whole:.6}, {n} locations)",
            cfg.strict_threshold()
        ),
    })
}

/// Lloyd's k-means on coordinates with k-means++ seeding. Returns the
/// within-cluster squared error and clusters of ascending indices.
fn kmeans(points: &[usize], k: usize, domain: &Domain, rng: &mut Rng) -> (f64, Vec<Vec<usize>>) {
    let xy = |i: usize| {
        let l = domain.location(i);
        (l.x, l.y)
    };
    let sq = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);

    let mut centers = Vec::with_capacity(k);
    centers.push(xy(points[rng.gen_range(0..points.len())]));
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|&p| centers.iter().map(|&c| sq(xy(p), c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(xy(points[next]));
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, &center) in centers.iter().enumerate() {
                let d = sq(xy(p), center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if assign[i] != best.1 {
                assign[i] = best.1;
                changed = true;
            }
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (i, &p) in points.iter().enumerate() {
            let (x, y) = xy(p);
            let s = &mut sums[assign[i]];
            s.0 += x;
            s.1 += y;
            s.2 += 1;
        }
        for (c, s) in sums.iter().enumerate() {
            if s.2 > 0 {
                centers[c] = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq(xy(points[a]), centers[assign[a]]).total_cmp(&sq(xy(points[b]), centers[assign[b]]))
                    })
                    .expect("nonempty");
                centers[c] = xy(points[far]);
                assign[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut clusters = vec![Vec::new(); k];
    let mut sse = 0.0;
    for (i, &p) in points.iter().enumerate() {
        sse += sq(xy(p), centers[assign[i]]);
        clusters[assign[i]].push(p);
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    (sse, clusters)
}

/// Which bound a finished PLS must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    /// `E' > E_m`, budget from the adaptive allocation.
    Loose,
    /// `E' >= e^{epsilon0} E_m`, budget fixed at `epsilon0`.
    Strict,
}

/// Per-cell result of the cluster-count search, computed once per run.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPlan {
    pub cell: usize,
    pub k: usize,
    pub fallback: Vec<Vec<usize>>,
}

const STREAM_K_SEARCH: u64 = 0x6b;
const STREAM_ATTEMPT: u64 = 0x61;

/// Clustering with retreats over every cell of a partition tree.
#[derive(Debug, Clone)]
pub struct RetC<'a> {
    pub domain: &'a Domain,
    pub tree: &'a PartitionTree,
    pub cfg: &'a PrivacyConfig,
    pub plans: Vec<CellPlan>,
}

struct Growing {
    members: Vec<usize>,
    /// `(E', D)` after each insertion; entry `i` describes the first `i + 1` members.
    history: Vec<(f64, f64)>,
}

impl<'a> RetC<'a> {
    /// Runs the cluster-count search for every cell. Fails with
    /// `CellInfeasible` naming the first cell where no clustering qualifies.
    pub fn new(domain: &'a Domain, tree: &'a PartitionTree, cfg: &'a PrivacyConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let plans = tree
            .cells
            .iter()
            .map(|cell| {
                let mut rng = rng::stream(seed, &[STREAM_K_SEARCH, cell.id as u64]);
                let ks = find_k(cell, domain, cfg, &mut rng)?;
                Ok(CellPlan {
                    cell: cell.id,
                    k: ks.k,
                    fallback: ks.clustering,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RetC {
            domain,
            tree,
            cfg,
            plans,
        })
    }

    fn candidates(&self, cell: usize) -> Option<&'a [usize]> {
        self.cfg
            .cell_restricted_attack
            .then_some(self.tree.cells[cell].members.as_slice())
    }

    fn e_prime(&self, cell: usize, members: &[usize]) -> f64 {
        e_prime_among(members, self.domain, self.candidates(cell)).expect("nonempty cluster")
    }

    fn feasible(&self, e_prime: f64, diameter: f64, mode: Feasibility) -> bool {
        diameter > 0.0
            && match mode {
                Feasibility::Loose => e_prime > self.cfg.e_m,
                Feasibility::Strict => self.cfg.satisfies_strict(e_prime),
            }
    }

    /// Picks `k_i` or `k_i + 1` (capped at `|cell| / 2`).
    pub fn draw_k(&self, cell: usize, rng: &mut Rng) -> usize {
        let plan = &self.plans[cell];
        let cap = (self.tree.cells[cell].members.len() / 2).max(1);
        (plan.k + rng.gen_range(0..2usize)).min(cap)
    }

    /// One pass of the assignment-with-retreats loop seeded with `centers`.
    ///
    /// Unassigned locations join the cluster at the smallest single-linkage
    /// distance, nearest first. When a cluster first meets the strict bound
    /// (and other clusters are still growing) it is frozen at the prefix of
    /// its growth history with the largest `epsilon_g`; the locations it
    /// added after that prefix return to the pool. The last growing cluster
    /// absorbs what remains. Returns `None` if any resulting cluster fails
    /// `mode`.
    pub fn grow_cell(&self, cell: usize, centers: &[usize], mode: Feasibility) -> Option<Vec<Pls>> {
        let members = &self.tree.cells[cell].members;
        if centers.is_empty() {
            return None;
        }
        let mut active: Vec<Growing> = centers
            .iter()
            .map(|&c| Growing {
                members: vec![c],
                history: vec![(0.0, 0.0)],
            })
            .collect();
        let mut pool: Vec<usize> = members.iter().copied().filter(|m| !centers.contains(m)).collect();
        let mut frozen: Vec<Vec<usize>> = Vec::new();

        while !pool.is_empty() {
            let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
            for (pi, &p) in pool.iter().enumerate() {
                for (ci, g) in active.iter().enumerate() {
                    let d = g
                        .members
                        .iter()
                        .map(|&m| self.domain.dist(p, m))
                        .fold(f64::INFINITY, f64::min);
                    if d < best.0 {
                        best = (d, pi, ci);
                    }
                }
            }
            let (_, pi, ci) = best;
            let p = pool.remove(pi);
            let g = &mut active[ci];
            let grown_d = g
                .members
                .iter()
                .map(|&m| self.domain.dist(p, m))
                .fold(g.history.last().expect("nonempty").1, f64::max);
            g.members.push(p);
            let e = self.e_prime(cell, &g.members);
            g.history.push((e, grown_d));

            if active.len() > 1 && self.cfg.satisfies_strict(e) {
                let g = active.remove(ci);
                let keep = self.best_prefix(&g, mode);
                let (kept, returned) = g.members.split_at(keep);
                frozen.push(kept.to_vec());
                for &r in returned {
                    let at = pool.partition_point(|&q| q < r);
                    pool.insert(at, r);
                }
            }
        }

        frozen
            .into_iter()
            .chain(active.into_iter().map(|g| g.members))
            .map(|mut c| {
                c.sort_unstable();
                self.make_pls(cell, c, mode)
            })
            .collect()
    }

    /// Prefix length with the largest `epsilon_g`, ties to the smaller
    /// diameter and then the shorter prefix.
    fn best_prefix(&self, g: &Growing, mode: Feasibility) -> usize {
        let mut best: Option<(f64, f64, usize)> = None;
        for (i, &(e, d)) in g.history.iter().enumerate().skip(1) {
            if !self.feasible(e, d, mode) {
                continue;
            }
            let eps = allocate_epsilon(e, self.cfg).unwrap_or(0.0);
            let eps = if mode == Feasibility::Strict { self.cfg.epsilon0 } else { eps };
            let eg = eps / (2.0 * d);
            let better = match best {
                None => true,
                Some((beg, bd, _)) => eg > beg || (eg == beg && d < bd),
            };
            if better {
                best = Some((eg, d, i + 1));
            }
        }
        best.map_or(g.members.len(), |b| b.2)
    }

    fn make_pls(&self, cell: usize, members: Vec<usize>, mode: Feasibility) -> Option<Pls> {
        if members.len() < 2 {
            return None;
        }
        let diameter = self.domain.diameter(&members);
        let e_prime = self.e_prime(cell, &members);
        if !self.feasible(e_prime, diameter, mode) {
            return None;
        }
        let epsilon = match mode {
            Feasibility::Strict => self.cfg.epsilon0,
            Feasibility::Loose => allocate_epsilon(e_prime, self.cfg)?,
        };
        Some(Pls {
            cell,
            members,
            diameter,
            e_prime,
            epsilon,
        })
    }

    /// Randomized construction of one cell: up to `retc_attempts` draws of
    /// `k` and random centers, then the qualifying k-means clustering.
    pub fn build_cell(&self, cell: usize, seed: u64, mode: Feasibility) -> Result<Vec<Pls>> {
        let members = &self.tree.cells[cell].members;
        for attempt in 0..self.cfg.retc_attempts {
            let mut rng = rng::stream(seed, &[STREAM_ATTEMPT, cell as u64, attempt as u64]);
            let k = self.draw_k(cell, &mut rng);
            let centers: Vec<usize> = sample(&mut rng, members.len(), k)
                .into_iter()
                .map(|i| members[i])
                .collect();
            if let Some(plss) = self.grow_cell(cell, &centers, mode) {
                return Ok(plss);
            }
        }
        self.fallback_cell(cell, mode)
    }

    /// The qualifying clustering found by the cluster-count search.
    pub fn fallback_cell(&self, cell: usize, mode: Feasibility) -> Result<Vec<Pls>> {
        self.plans[cell]
            .fallback
            .iter()
            .map(|c| self.make_pls(cell, c.clone(), mode))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::CellInfeasible {
                cell,
                reason: "fallback clustering failed validation".into(),
            })
    }

    /// A full random partition with reporting ranges.
    pub fn partition(&self, rng: &mut impl RngCore) -> Result<PlsPartition> {
        let seed = rng.next_u64();
        let cells = (0..self.tree.cells.len())
            .map(|c| self.build_cell(c, seed, Feasibility::Loose))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.assemble(cells))
    }

    /// Joins per-cell PLS lists (in cell order) and builds reporting ranges.
    pub fn assemble(&self, cells: Vec<Vec<Pls>>) -> PlsPartition {
        let plss = cells.into_iter().flatten().collect();
        build_reporting_ranges(plss, self.domain, self.cfg)
    }

    /// Cluster centers (medoids) of `partition`'s PLSs, grouped by cell.
    pub fn centers_by_cell(&self, partition: &PlsPartition) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.tree.cells.len()];
        for p in &partition.plss {
            out[p.cell].push(p.medoid(self.domain));
        }
        out
    }

    /// PLSs of `partition` lying in `cell`.
    pub fn cell_plss(partition: &PlsPartition, cell: usize) -> Vec<Pls> {
        partition.plss.iter().filter(|p| p.cell == cell).cloned().collect()
    }
}

/// Randomized clustering with retreats over every cell, then reporting ranges.
pub fn ret_c(tree: &PartitionTree, domain: &Domain, cfg: &PrivacyConfig, rng: &mut Rng) -> Result<PlsPartition> {
    let planner = RetC::new(domain, tree, cfg, rng.next_u64())?;
    planner.partition(rng)
}

/// For each PLS, starts from the PLS itself and absorbs whole PLSs in order
/// of centroid distance until at least `min_report_plss` PLSs and
/// `min_report_locations` locations are covered (or nothing is left).
pub fn build_reporting_ranges(plss: Vec<Pls>, domain: &Domain, cfg: &PrivacyConfig) -> PlsPartition {
    let centroids: Vec<(f64, f64)> = plss
        .iter()
        .map(|p| {
            let (sx, sy) = p.members.iter().fold((0.0, 0.0), |(sx, sy), &m| {
                let l = domain.location(m);
                (sx + l.x, sy + l.y)
            });
            let n = p.members.len() as f64;
            (sx / n, sy / n)
        })
        .collect();
    let reporting_ranges = (0..plss.len())
        .map(|j| {
            let (cx, cy) = centroids[j];
            let mut others: Vec<(f64, usize)> = (0..plss.len())
                .filter(|&o| o != j)
                .map(|o| ((centroids[o].0 - cx).hypot(centroids[o].1 - cy), o))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut range = plss[j].members.clone();
            let mut included = 1;
            for (_, o) in others {
                if included >= cfg.min_report_plss && range.len() >= cfg.min_report_locations {
                    break;
                }
                range.extend_from_slice(&plss[o].members);
                included += 1;
            }
            range.sort_unstable();
            range
        })
        .collect();
    PlsPartition {
        plss,
        reporting_ranges,
        objectives: None,
    }
}

impl PlsPartition {
    /// Index of the PLS containing each location.
    pub fn pls_of(&self, domain_len: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; domain_len];
        for (j, p) in self.plss.iter().enumerate() {
            for &m in &p.members {
                out[m] = j;
            }
        }
        out
    }

    /// Checks disjoint cover, per-PLS bounds and budgets, and (when
    /// `check_range_sizes`) the reporting-range size rules.
    pub fn validate(
        &self,
        domain: &Domain,
        cfg: &PrivacyConfig,
        tree: Option<&PartitionTree>,
        check_range_sizes: bool,
    ) -> Result<()> {
        let bad = |m: String| Err(Error::Invariant(m));
        let mut owner = vec![usize::MAX; domain.len()];
        for (j, p) in self.plss.iter().enumerate() {
            for &m in &p.members {
                if m >= domain.len() {
                    return bad(format!("PLS {j} references unknown location index {m}"));
                }
                if owner[m] != usize::MAX {
                    return bad(format!("location {} is in PLS {} and {j}", domain.id(m), owner[m]));
                }
                owner[m] = j;
                if let Some(t) = tree {
                    if t.cell_of(m) != p.cell {
                        return bad(format!("PLS {j} straddles cells {} and {}", p.cell, t.cell_of(m)));
                    }
                }
            }
            if p.members.len() < 2 {
                return bad(format!("PLS {j} has {} member(s)", p.members.len()));
            }
            if !(p.diameter > 0.0) {
                return bad(format!("PLS {j} has zero diameter"));
            }
            if !(p.e_prime > cfg.e_m) {
                return bad(format!("PLS {j}: E' = {} <= E_m = {}", p.e_prime, cfg.e_m));
            }
            if !(p.epsilon > 0.0 && p.epsilon <= cfg.epsilon0) {
                return bad(format!("PLS {j}: epsilon {} outside (0, {}]", p.epsilon, cfg.epsilon0));
            }
            if p.e_prime < p.epsilon.exp() * cfg.e_m * (1.0 - 1e-12) {
                return bad(format!(
                    "PLS {j}: E' = {} < e^eps * E_m = {}",
                    p.e_prime,
                    p.epsilon.exp() * cfg.e_m
                ));
            }
        }
        if let Some(m) = owner.iter().position(|&o| o == usize::MAX) {
            return bad(format!("location {} is not covered", domain.id(m)));
        }
        if self.reporting_ranges.len() != self.plss.len() {
            return bad("one reporting range per PLS required".into());
        }
        for (j, range) in self.reporting_ranges.iter().enumerate() {
            let mut touched = vec![0usize; self.plss.len()];
            for &x in range {
                touched[owner[x]] += 1;
            }
            if touched[j] != self.plss[j].members.len() {
                return bad(format!("reporting range {j} does not contain its own PLS"));
            }
            let mut whole = 0;
            for (o, &t) in touched.iter().enumerate() {
                if t != 0 && t != self.plss[o].members.len() {
                    return bad(format!("reporting range {j} contains part of PLS {o}"));
                }
                if t != 0 {
                    whole += 1;
                }
            }
            if check_range_sizes && range.len() < domain.len() {
                if whole < cfg.min_report_plss.min(self.plss.len()) {
                    return bad(format!("reporting range {j} spans only {whole} PLS(s)"));
                }
                if range.len() < cfg.min_report_locations {
                    return bad(format!("reporting range {j} has only {} locations", range.len()));
                }
            }
        }
        Ok(())
    }

    pub fn to_export(&self, domain: &Domain, cfg: &PrivacyConfig) -> PartitionExport {
        PartitionExport {
            epsilon0: cfg.epsilon0,
            e_m: cfg.e_m,
            objectives: self.objectives,
            plss: self
                .plss
                .iter()
                .zip(&self.reporting_ranges)
                .map(|(p, r)| ExportedPls {
                    cell: p.cell,
                    members: p.members.iter().map(|&m| domain.id(m)).collect(),
                    epsilon: p.epsilon,
                    diameter: p.diameter,
                    e_prime: p.e_prime,
                    reporting_range: r.iter().map(|&m| domain.id(m)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_export(export: &PartitionExport, domain: &Domain) -> Result<Self> {
        let idx = |id: u32| {
            domain
                .index_of(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown location id {id}")))
        };
        let mut plss = Vec::with_capacity(export.plss.len());
        let mut reporting_ranges = Vec::with_capacity(export.plss.len());
        for p in &export.plss {
            let mut members = p.members.iter().map(|&m| idx(m)).collect::<Result<Vec<_>>>()?;
            members.sort_unstable();
            let mut range = p.reporting_range.iter().map(|&m| idx(m)).collect::<Result<Vec<_>>>()?;
            range.sort_unstable();
            plss.push(Pls {
                cell: p.cell,
                members,
                diameter: p.diameter,
                e_prime: p.e_prime,
                epsilon: p.epsilon,
            });
            reporting_ranges.push(range);
        }
        Ok(PlsPartition {
            plss,
            reporting_ranges,
            objectives: export.objectives,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedPls {
    pub cell: usize,
    pub members: Vec<u32>,
    pub epsilon: f64,
    pub diameter: f64,
    pub e_prime: f64,
    pub reporting_range: Vec<u32>,
}

/// Partition file layout (`{plss: [...]}` plus the privacy knobs it was built for).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub epsilon0: f64,
    pub e_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectives: Option<ObjectivePair>,
    pub plss: Vec<ExportedPls>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{load_domain, DatasetSpec, Location};
    use crate::grid::binary_partition;

    fn domain(points: &[(f64, f64)], prior: &[f64]) -> Domain {
        Domain::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Location { id: i as u32, x, y })
                .collect(),
            prior.to_vec(),
        )
        .unwrap()
    }

    fn single_cell(d: &Domain) -> PartitionTree {
        binary_partition(d, d.len()).unwrap()
    }

    #[test]
    fn e_prime_examples() {
        let d = domain(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], &[1.0, 1.0, 1.0]);
        assert_eq!(e_prime(&[0, 1], &d).unwrap(), 0.5);
        assert_eq!(e_prime(&[0], &d).unwrap(), 0.0);
        assert!(matches!(e_prime(&[], &d), Err(Error::InvalidArgument(_))));

        let d = domain(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)], &[0.9, 0.1, 1.0]);
        assert!((e_prime(&[0, 1], &d).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn e_prime_can_pick_an_outside_estimate() {
        // Three corners of a square; the fourth corner is not better, but the
        // center location (outside the set) is.
        let d = domain(
            &[(0.0, 0.0), (2.0, 0.0), (1.0, 2.0f64.sqrt()), (1.0, 0.5)],
            &[1.0, 1.0, 1.0, 1.0],
        );
        let inside = d.weighted_median_among(&[(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)], &[0, 1, 2]).1;
        let full = e_prime(&[0, 1, 2], &d).unwrap();
        assert!(full < inside);
    }

    #[test]
    fn allocate_epsilon_examples() {
        let cfg = PrivacyConfig::new(1.0, 0.1);
        assert_eq!(allocate_epsilon(0.5, &cfg), Some(1.0));
        assert!((allocate_epsilon(0.2, &cfg).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(allocate_epsilon(0.1, &cfg), None);
        assert_eq!(allocate_epsilon(0.0, &cfg), None);
    }

    #[test]
    fn find_k_examples() {
        let cfg = PrivacyConfig::new(1.0, 0.1);
        let d = domain(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], &[1.0; 4]);
        let t = single_cell(&d);
        let mut rng = rng::stream(1, &[]);
        let ks = find_k(&t.cells[0], &d, &cfg, &mut rng).unwrap();
        assert_eq!(ks.k, 2);
        assert_eq!(ks.clustering.len(), 2);

        let d = domain(&[(0.0, 0.0), (1.0, 0.0)], &[1.0; 2]);
        let t = single_cell(&d);
        assert_eq!(find_k(&t.cells[0], &d, &cfg, &mut rng).unwrap().k, 1);

        let d = domain(&[(1.0, 1.0), (1.0, 1.0)], &[1.0; 2]);
        let t = single_cell(&d);
        assert!(matches!(
            find_k(&t.cells[0], &d, &cfg, &mut rng),
            Err(Error::CellInfeasible { cell: 0, .. })
        ));
    }

    #[test]
    fn two_location_cell_is_one_pls_at_full_budget() {
        let cfg = PrivacyConfig::new(1.0, 0.1);
        let d = domain(&[(0.0, 0.0), (2.0, 0.0)], &[1.0; 2]);
        let t = single_cell(&d);
        let p = ret_c(&t, &d, &cfg, &mut rng::stream(3, &[])).unwrap();
        assert_eq!(p.plss.len(), 1);
        assert_eq!(p.plss[0].members, vec![0, 1]);
        assert_eq!(p.plss[0].epsilon, 1.0);
        assert_eq!(p.plss[0].e_prime, 1.0);
        assert_eq!(p.reporting_ranges[0], vec![0, 1]);
    }

    #[test]
    fn oversized_error_bound_is_infeasible() {
        let cfg = PrivacyConfig::new(1.0, 50.0);
        let d = load_domain(&DatasetSpec::benchmark_400(1)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        assert!(matches!(
            ret_c(&t, &d, &cfg, &mut rng::stream(3, &[])),
            Err(Error::CellInfeasible { .. })
        ));
    }

    #[test]
    fn benchmark_partition_is_valid() {
        let cfg = PrivacyConfig::new(1.0, 0.1);
        let d = load_domain(&DatasetSpec::benchmark_400(1)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        for seed in 0..3 {
            let p = ret_c(&t, &d, &cfg, &mut rng::stream(seed, &[])).unwrap();
            p.validate(&d, &cfg, Some(&t), true).unwrap();
            for pls in &p.plss {
                assert!(pls.e_prime >= pls.epsilon.exp() * cfg.e_m * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn strict_partitions_also_pass_loose_checks() {
        let cfg = PrivacyConfig::new(1.0, 0.1);
        let d = load_domain(&DatasetSpec::benchmark_400(2)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        let planner = RetC::new(&d, &t, &cfg, 5).unwrap();
        for seed in 0..4 {
            let cells = (0..t.cells.len())
                .map(|c| planner.build_cell(c, seed, Feasibility::Strict))
                .collect::<Result<Vec<_>>>()
                .unwrap();
            let p = planner.assemble(cells);
            assert!(p.plss.iter().all(|x| cfg.satisfies_strict(x.e_prime) && x.epsilon == cfg.epsilon0));
            p.validate(&d, &cfg, Some(&t), true).unwrap();
            assert!(p.plss.iter().all(|x| allocate_epsilon(x.e_prime, &cfg) == Some(cfg.epsilon0)));
        }
    }

    #[test]
    fn reporting_range_rules() {
        let cfg = PrivacyConfig::default();
        let mk = |cell, members: Vec<usize>| Pls {
            cell,
            members,
            diameter: 1.0,
            e_prime: 1.0,
            epsilon: 1.0,
        };
        // 30 + 25 + 10 locations laid out along x; PLS 1 is nearest to PLS 0.
        let pts: Vec<(f64, f64)> = (0..65).map(|i| (if i < 30 { 0.0 } else if i < 55 { 1.0 } else { 5.0 }, i as f64 * 1e-3)).collect();
        let d = domain(&pts, &vec![1.0; 65]);
        let p = build_reporting_ranges(
            vec![mk(0, (0..30).collect()), mk(0, (30..55).collect()), mk(0, (55..65).collect())],
            &d,
            &cfg,
        );
        assert_eq!(p.reporting_ranges[0].len(), 55);
        // 10-location PLS keeps absorbing until 50 reached: 10 + 25 + 30
        assert_eq!(p.reporting_ranges[2].len(), 65);

        // A 60-location PLS still absorbs one neighbour.
        let pts: Vec<(f64, f64)> = (0..64).map(|i| (if i < 60 { 0.0 } else { 1.0 }, i as f64 * 1e-3)).collect();
        let d = domain(&pts, &vec![1.0; 64]);
        let p = build_reporting_ranges(vec![mk(0, (0..60).collect()), mk(0, (60..64).collect())], &d, &cfg);
        assert_eq!(p.reporting_ranges[0].len(), 64);

        // Domains under 50 locations: whole domain.
        let pts: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 0.0)).collect();
        let d = domain(&pts, &vec![1.0; 40]);
        let p = build_reporting_ranges(
            (0..20).map(|j| mk(0, vec![2 * j, 2 * j + 1])).collect(),
            &d,
            &cfg,
        );
        assert!(p.reporting_ranges.iter().all(|r| r.len() == 40));
    }

    #[test]
    fn export_roundtrip() {
        let cfg = PrivacyConfig::default();
        let d = load_domain(&DatasetSpec::benchmark_400(4)).unwrap();
        let t = binary_partition(&d, 33).unwrap();
        let p = ret_c(&t, &d, &cfg, &mut rng::stream(1, &[])).unwrap();
        let json = serde_json::to_string(&p.to_export(&d, &cfg)).unwrap();
        let back: PartitionExport = serde_json::from_str(&json).unwrap();
        assert_eq!(PlsPartition::from_export(&back, &d).unwrap(), p);
    }
}
