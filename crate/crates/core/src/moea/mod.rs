//! Elitist multi-objective search over PLS partitions: non-dominated
//! sorting, crowding, tournament selection, center-based crossover and
//! mutation, and hypervolume tracking. Objectives are `(QLoss, -ExpErr)`,
//! both minimized.

mod baselines;

pub use baselines::{dpive_baseline, matched_iterations, pso_baseline, scalarized, PsoConfig, PsoSolution, DEFAULT_ALPHAS};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{self, ObjectivePair};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::PartitionTree;
use crate::mechanism::build_matrix;
use crate::pls::{medoid, Feasibility, PartitionExport, PlsPartition, PrivacyConfig, RetC};
use crate::rng::{self, Rng};

/// `(qloss, -exp_err)`.
pub type Objectives = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeaConfig {
    /// Population size; even, at least 4.
    pub population: usize,
    pub max_generations: usize,
    /// Stall threshold on the per-generation hypervolume gain, relative to
    /// the initial hypervolume.
    pub hv_epsilon: f64,
    /// Consecutive stalled generations before stopping.
    pub patience: usize,
    /// Parents pooled by one crossover.
    pub tournament_pool: usize,
    pub seed: u64,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        MoeaConfig {
            population: 40,
            max_generations: 500,
            hv_epsilon: 1e-6,
            patience: 10,
            tournament_pool: 5,
            seed: 0,
        }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population must be even and >= 4, got {}",
                self.population
            )));
        }
        if self.max_generations < 1 {
            return Err(Error::InvalidConfig("max_generations must be >= 1".into()));
        }
        if self.tournament_pool < 1 || self.patience < 1 {
            return Err(Error::InvalidConfig("tournament_pool and patience must be >= 1".into()));
        }
        if !(self.hv_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("hv_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub partition: PlsPartition,
    pub objectives: Objectives,
    pub min_conditional_error: f64,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    /// Builds the mechanism for `partition` and scores it.
    pub fn evaluate(mut partition: PlsPartition, domain: &Domain) -> Result<Self> {
        let matrix = build_matrix(&partition, domain)?;
        let eval = adversary::evaluate(domain, &matrix);
        partition.objectives = Some(eval.objectives());
        Ok(Individual {
            partition,
            objectives: [eval.qloss, -eval.exp_err],
            min_conditional_error: eval.min_conditional_error,
            rank: 0,
            crowding: 0.0,
        })
    }

    pub fn qloss(&self) -> f64 {
        self.objectives[0]
    }

    pub fn exp_err(&self) -> f64 {
        -self.objectives[1]
    }

    pub fn pair(&self) -> ObjectivePair {
        ObjectivePair {
            qloss: self.qloss(),
            exp_err: self.exp_err(),
        }
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fronts of indices into `points`, best first; each front ascending.
pub fn fast_nondominated_sort(points: &[Objectives]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order). Boundary
/// members get infinity; an objective with zero range contributes nothing.
pub fn crowding_distance(points: &[Objectives], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][obj]
                .total_cmp(&points[front[b]][obj])
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]][obj];
        let hi = points[front[order[m - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..m - 1 {
            let gap = points[front[order[w + 1]]][obj] - points[front[order[w - 1]]][obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// Sets `rank` and `crowding` on every individual.
pub fn assign_rank_and_crowding(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let points: Vec<Objectives> = pop.iter().map(|i| i.objectives).collect();
    let fronts = fast_nondominated_sort(&points);
    for (r, front) in fronts.iter().enumerate() {
        let cd = crowding_distance(&points, front);
        for (&i, c) in front.iter().zip(cd) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

/// Index of the winner of one binary tournament between two distinct
/// uniformly drawn members.
pub fn binary_tournament(pop: &[Individual], rng: &mut impl RngCore) -> usize {
    if pop.len() < 2 {
        return 0;
    }
    let a = rng.gen_range(0..pop.len());
    let b = (a + rng.gen_range(1..pop.len())) % pop.len();
    let (pa, pb) = (&pop[a], &pop[b]);
    if pa.rank != pb.rank {
        return if pa.rank < pb.rank { a } else { b };
    }
    if pa.crowding != pb.crowding {
        return if pa.crowding > pb.crowding { a } else { b };
    }
    if rng.gen::<bool>() {
        a
    } else {
        b
    }
}

/// Area dominated by `points` inside the box bounded by `reference`.
/// Every point must be componentwise `<=` the reference.
pub fn hypervolume(points: &[Objectives], reference: Objectives) -> Result<f64> {
    if let Some(p) = points.iter().find(|p| p[0] > reference[0] || p[1] > reference[1]) {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}) lies beyond reference ({}, {})",
            p[0], p[1], reference[0], reference[1]
        )));
    }
    Ok(hypervolume_clipped(points, reference))
}

/// [`hypervolume`] that silently ignores points outside the reference box.
pub fn hypervolume_clipped(points: &[Objectives], reference: Objectives) -> f64 {
    let mut inside: Vec<Objectives> = points
        .iter()
        .copied()
        .filter(|p| p[0] <= reference[0] && p[1] <= reference[1])
        .collect();
    inside.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in inside {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Fixed per-run reference point: each coordinate's maximum pushed out by a
/// tenth of its magnitude or spread, whichever is larger.
pub fn reference_point(points: &[Objectives]) -> Objectives {
    let mut r = [0.0; 2];
    for (obj, slot) in r.iter_mut().enumerate() {
        let hi = points.iter().map(|p| p[obj]).fold(f64::NEG_INFINITY, f64::max);
        let lo = points.iter().map(|p| p[obj]).fold(f64::INFINITY, f64::min);
        let pad = 0.1 * hi.abs().max(hi - lo);
        *slot = hi + if pad > 0.0 { pad } else { 1e-9 };
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    /// Mutually non-dominated, ascending QLoss.
    pub members: Vec<Individual>,
    /// Hypervolume after initialization and after each generation.
    pub hv_trace: Vec<f64>,
    pub reference: Objectives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedSolution {
    pub qloss: f64,
    pub exp_err: f64,
    pub min_conditional_error: f64,
    pub partition: PartitionExport,
}

/// `front.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontExport {
    /// `[qloss, -exp_err]` reference point of the hypervolume trace.
    pub reference: [f64; 2],
    pub hypervolume: f64,
    pub solutions: Vec<ExportedSolution>,
}

impl ParetoFront {
    pub fn points(&self) -> Vec<Objectives> {
        self.members.iter().map(|m| m.objectives).collect()
    }

    pub fn hypervolume(&self) -> f64 {
        hypervolume_clipped(&self.points(), self.reference)
    }

    /// Member with the smallest QLoss.
    pub fn min_qloss(&self) -> Option<&Individual> {
        self.members.first()
    }

    pub fn to_export(&self, domain: &Domain, cfg: &PrivacyConfig) -> FrontExport {
        FrontExport {
            reference: self.reference,
            hypervolume: self.hypervolume(),
            solutions: self
                .members
                .iter()
                .map(|m| ExportedSolution {
                    qloss: m.qloss(),
                    exp_err: m.exp_err(),
                    min_conditional_error: m.min_conditional_error,
                    partition: m.partition.to_export(domain, cfg),
                })
                .collect(),
        }
    }
}

const STREAM_PLAN: u64 = 0x70;
const STREAM_INIT: u64 = 0x69;
const STREAM_SELECT: u64 = 0x73;
const STREAM_OFFSPRING: u64 = 0x6f;

/// Cluster-count plans shared by the search and its baselines.
pub fn planner<'a>(
    domain: &'a Domain,
    tree: &'a PartitionTree,
    cfg: &'a PrivacyConfig,
    seed: u64,
) -> Result<RetC<'a>> {
    RetC::new(domain, tree, cfg, rng::derive_key(seed, &[STREAM_PLAN]))
}

/// `n` independent random partitions, evaluated.
pub fn initial_population(planner: &RetC, n: usize, seed: u64) -> Result<Vec<Individual>> {
    (0..n)
        .into_par_iter()
        .map(|slot| {
            let mut r = rng::stream(seed, &[STREAM_INIT, slot as u64]);
            Individual::evaluate(planner.partition(&mut r)?, planner.domain)
        })
        .collect()
}

/// Rebuilds one cell from `centers`, falling back to a fresh randomized
/// construction when the seeded growth fails.
fn rebuild_cell(planner: &RetC, cell: usize, centers: &[usize], rng: &mut Rng) -> Result<Vec<crate::pls::Pls>> {
    match planner.grow_cell(cell, centers, Feasibility::Loose) {
        Some(plss) => Ok(plss),
        None => planner.build_cell(cell, rng.next_u64(), Feasibility::Loose),
    }
}

/// Per cell, pools the parents' PLS medoids and draws `k_i` or `k_i + 1`
/// distinct centers from the pool to seed a fresh growth.
pub fn crossover(parents: &[&PlsPartition], planner: &RetC, rng: &mut Rng) -> Result<PlsPartition> {
    let ncells = planner.tree.cells.len();
    let mut pools = vec![Vec::new(); ncells];
    for p in parents {
        for pls in &p.plss {
            pools[pls.cell].push(pls.medoid(planner.domain));
        }
    }
    let mut cells = Vec::with_capacity(ncells);
    for (cell, mut pool) in pools.into_iter().enumerate() {
        pool.sort_unstable();
        pool.dedup();
        let k = planner.draw_k(cell, rng);
        if pool.len() < k {
            let rest: Vec<usize> = planner.tree.cells[cell]
                .members
                .iter()
                .copied()
                .filter(|m| pool.binary_search(m).is_err())
                .collect();
            let extra = sample(rng, rest.len(), k - pool.len());
            pool.extend(extra.into_iter().map(|i| rest[i]));
        }
        let centers: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
        cells.push(rebuild_cell(planner, cell, &centers, rng)?);
    }
    Ok(planner.assemble(cells))
}

/// Per cell, replaces `ceil(k/2)` of the parent's PLS medoids with random
/// non-center locations of the cell and regrows.
pub fn mutate(parent: &PlsPartition, planner: &RetC, rng: &mut Rng) -> Result<PlsPartition> {
    let mut cells = Vec::with_capacity(planner.tree.cells.len());
    for (cell, mut centers) in planner.centers_by_cell(parent).into_iter().enumerate() {
        let members = &planner.tree.cells[cell].members;
        let replace = centers.len().div_ceil(2);
        let slots = sample(rng, centers.len(), replace).into_vec();
        let mut fresh: Vec<usize> = members.iter().copied().filter(|m| !centers.contains(m)).collect();
        fresh.shuffle(rng);
        for (slot, new) in slots.into_iter().zip(fresh) {
            centers[slot] = new;
        }
        cells.push(rebuild_cell(planner, cell, &centers, rng)?);
    }
    Ok(planner.assemble(cells))
}

/// Keeps every point not dominated by (or equal to) anything seen so far.
fn update_archive(archive: &mut Vec<Individual>, newcomers: &[Individual]) {
    for ind in newcomers {
        if archive
            .iter()
            .any(|a| a.objectives == ind.objectives || dominates(&a.objectives, &ind.objectives))
        {
            continue;
        }
        archive.retain(|a| !dominates(&ind.objectives, &a.objectives));
        archive.push(ind.clone());
    }
}

/// Keeps `n` of `pop`, whole fronts first, the split front by descending
/// crowding (ties to the earlier individual).
fn environmental_selection(mut pop: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = assign_rank_and_crowding(&mut pop);
    let mut keep = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            let mut last = front;
            last.sort_by(|&a, &b| pop[b].crowding.total_cmp(&pop[a].crowding).then(a.cmp(&b)));
            keep.extend(last.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    let mut survivors: Vec<Individual> = keep.into_iter().map(|i| slots[i].take().expect("unique")).collect();
    assign_rank_and_crowding(&mut survivors);
    survivors
}

/// Snapshot handed to the progress observer after each generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub hypervolume: f64,
    pub archive_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub front: ParetoFront,
    pub population: Vec<Individual>,
    pub generations: usize,
    /// True when the stall rule fired before `max_generations`.
    pub converged: bool,
}

/// Runs the search and returns its non-dominated front.
pub fn evolve(domain: &Domain, tree: &PartitionTree, cfg: &PrivacyConfig, mcfg: &MoeaConfig) -> Result<ParetoFront> {
    Ok(evolve_with(domain, tree, cfg, mcfg, |_| {})?.front)
}

/// [`evolve`] with a per-generation observer and the full final state.
///
/// The returned front and `hv_trace` are taken over every non-dominated
/// solution evaluated during the run, so the trace cannot decrease even when
/// crowding truncation drops a first-front member from the population.
pub fn evolve_with(
    domain: &Domain,
    tree: &PartitionTree,
    cfg: &PrivacyConfig,
    mcfg: &MoeaConfig,
    mut observer: impl FnMut(&GenerationStats),
) -> Result<Evolution> {
    mcfg.validate()?;
    let seed = mcfg.seed;
    let planner = planner(domain, tree, cfg, seed)?;
    let n = mcfg.population;

    let mut pop = initial_population(&planner, n, seed)?;
    assign_rank_and_crowding(&mut pop);
    let reference = reference_point(&pop.iter().map(|i| i.objectives).collect::<Vec<_>>());
    let mut archive = Vec::new();
    update_archive(&mut archive, &pop);
    let hv = |a: &[Individual]| hypervolume_clipped(&a.iter().map(|i| i.objectives).collect::<Vec<_>>(), reference);
    let hv0 = hv(&archive);
    let mut hv_trace = vec![hv0];
    let tolerance = mcfg.hv_epsilon * hv0;
    let mut stalled = 0;
    let mut generations = 0;
    let mut converged = false;

    for gen in 1..=mcfg.max_generations {
        let mut sel = rng::stream(seed, &[STREAM_SELECT, gen as u64]);
        let n_cross = n / 2;
        let picks: Vec<Vec<usize>> = (0..n)
            .map(|slot| {
                let parents = if slot < n_cross { mcfg.tournament_pool } else { 1 };
                (0..parents).map(|_| binary_tournament(&pop, &mut sel)).collect()
            })
            .collect();
        let offspring = picks
            .par_iter()
            .enumerate()
            .map(|(slot, parents)| {
                let mut r = rng::stream(seed, &[STREAM_OFFSPRING, gen as u64, slot as u64]);
                let child = if slot < n_cross {
                    let ps: Vec<&PlsPartition> = parents.iter().map(|&p| &pop[p].partition).collect();
                    crossover(&ps, &planner, &mut r)?
                } else {
                    mutate(&pop[parents[0]].partition, &planner, &mut r)?
                };
                child.validate(domain, cfg, Some(tree), true)?;
                Individual::evaluate(child, domain)
            })
            .collect::<Result<Vec<_>>>()?;

        update_archive(&mut archive, &offspring);
        let mut merged = pop;
        merged.extend(offspring);
        pop = environmental_selection(merged, n);

        let h = hv(&archive);
        let gain = h - hv_trace.last().copied().unwrap_or(0.0);
        hv_trace.push(h);
        generations = gen;
        observer(&GenerationStats {
            generation: gen,
            hypervolume: h,
            archive_size: archive.len(),
        });
        stalled = if gain < tolerance { stalled + 1 } else { 0 };
        if stalled >= mcfg.patience {
            converged = true;
            break;
        }
    }

    archive.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]).then(a.objectives[1].total_cmp(&b.objectives[1])));
    assign_rank_and_crowding(&mut archive);
    Ok(Evolution {
        front: ParetoFront {
            members: archive,
            hv_trace,
            reference,
        },
        population: pop,
        generations,
        converged,
    })
}

/// Medoids of each PLS in `plss`.
pub(crate) fn medoids(plss: &[crate::pls::Pls], domain: &Domain) -> Vec<usize> {
    plss.iter().map(|p| medoid(&p.members, domain)).collect()
}
