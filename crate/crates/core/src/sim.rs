//! Spatial-crowdsourcing simulation: workers report pseudo-locations, each
//! task is geocast to the nearest idle workers by reported position, and
//! one of them travels to it.

use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Rect};
use crate::error::{Error, Result};
use crate::mechanism::{sample_pseudo, ObfuscationMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerMode {
    Uniform,
    /// 80% of workers inside a random subregion holding 20% of the locations.
    OneToFour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponderModel {
    /// Each geocast candidate equally likely to answer first.
    Uniform,
    /// Answer probability inversely proportional to true travel distance.
    DistanceWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub workers: usize,
    pub tasks: usize,
    pub mode: WorkerMode,
    pub geocast_k: usize,
    /// Workers stay idle after serving a task.
    pub shared_workers: bool,
    pub responder: ResponderModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            workers: 200,
            tasks: 200,
            mode: WorkerMode::OneToFour,
            geocast_k: 3,
            shared_workers: true,
            responder: ResponderModel::Uniform,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers < 1 || self.tasks < 1 || self.geocast_k < 1 {
            return Err(Error::InvalidConfig("workers, tasks and geocast_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Worker {
    pub id: u32,
    /// Domain index.
    pub true_location: usize,
    /// Domain index.
    pub pseudo_location: usize,
    pub idle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u32,
    /// Domain index.
    pub location: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub task_id: u32,
    pub worker_id: u32,
    pub wtd: f64,
}

/// Nearest domain location to `(x, y)`, ties to the lowest index.
pub fn snap(domain: &Domain, x: f64, y: f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, l) in domain.locations().iter().enumerate() {
        let d = (l.x - x).hypot(l.y - y);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Bounding box of the `round(0.2 N)` locations closest (Chebyshev
/// distance, ties by index) to a random location, and every location inside it.
pub fn dense_subregion(domain: &Domain, rng: &mut impl RngCore) -> (Rect, Vec<usize>) {
    let n = domain.len();
    let c = domain.location(rng.gen_range(0..n));
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let l = domain.location(i);
            ((l.x - c.x).abs().max((l.y - c.y).abs()), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let take = ((0.2 * n as f64).round() as usize).max(1);
    let chosen: Vec<usize> = order[..take].iter().map(|p| p.1).collect();
    let rect = Rect::bounding(chosen.iter().map(|&i| domain.location(i))).expect("nonempty");
    let inside = (0..n)
        .filter(|&i| {
            let l = domain.location(i);
            rect.contains(l.x, l.y)
        })
        .collect();
    (rect, inside)
}

/// Idle workers at domain locations; pseudo-locations start equal to the
/// true ones.
pub fn spawn_workers(domain: &Domain, count: usize, mode: WorkerMode, rng: &mut impl RngCore) -> Result<Vec<Worker>> {
    if count < 1 {
        return Err(Error::InvalidArgument("worker count must be >= 1".into()));
    }
    let n = domain.len();
    let mut places = Vec::with_capacity(count);
    match mode {
        WorkerMode::Uniform => places.extend((0..count).map(|_| rng.gen_range(0..n))),
        WorkerMode::OneToFour => {
            let (_, inside) = dense_subregion(domain, rng);
            let mut is_inside = vec![false; n];
            for &i in &inside {
                is_inside[i] = true;
            }
            let outside: Vec<usize> = (0..n).filter(|&i| !is_inside[i]).collect();
            let dense = (0.8 * count as f64).round() as usize;
            places.extend((0..dense).map(|_| inside[rng.gen_range(0..inside.len())]));
            let rest = if outside.is_empty() { &inside } else { &outside };
            places.extend((dense..count).map(|_| rest[rng.gen_range(0..rest.len())]));
        }
    }
    Ok(places
        .into_iter()
        .enumerate()
        .map(|(id, loc)| Worker {
            id: id as u32,
            true_location: loc,
            pseudo_location: loc,
            idle: true,
        })
        .collect())
}

/// Tasks at uniformly drawn domain locations.
pub fn spawn_tasks(domain: &Domain, count: usize, rng: &mut impl RngCore) -> Vec<Task> {
    (0..count)
        .map(|id| Task {
            id: id as u32,
            location: rng.gen_range(0..domain.len()),
        })
        .collect()
}

/// Indices into `workers` of the `min(k, idle)` idle workers whose reported
/// location is nearest the task, nearest first, ties by worker id.
pub fn geocast(task: &Task, workers: &[Worker], k: usize, domain: &Domain) -> Result<Vec<usize>> {
    let mut idle: Vec<(f64, u32, usize)> = workers
        .iter()
        .enumerate()
        .filter(|(_, w)| w.idle)
        .map(|(i, w)| (domain.dist(task.location, w.pseudo_location), w.id, i))
        .collect();
    if idle.is_empty() {
        return Err(Error::NoWorker { task: task.id });
    }
    idle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(idle.into_iter().take(k).map(|t| t.2).collect())
}

/// Picks the responder among `candidates` and measures its true travel distance.
pub fn assign(
    task: &Task,
    candidates: &[usize],
    workers: &[Worker],
    domain: &Domain,
    model: ResponderModel,
    rng: &mut impl RngCore,
) -> Result<Assignment> {
    if candidates.is_empty() {
        return Err(Error::NoWorker { task: task.id });
    }
    let wtd = |c: usize| domain.dist(task.location, workers[c].true_location);
    let pick = match model {
        ResponderModel::Uniform => candidates[rng.gen_range(0..candidates.len())],
        ResponderModel::DistanceWeighted => {
            let w: Vec<f64> = candidates.iter().map(|&c| 1.0 / (wtd(c) + 1e-9)).collect();
            let mut u = rng.gen::<f64>() * w.iter().sum::<f64>();
            let mut pick = *candidates.last().expect("nonempty");
            for (&c, &wc) in candidates.iter().zip(&w) {
                if u < wc {
                    pick = c;
                    break;
                }
                u -= wc;
            }
            pick
        }
    };
    Ok(Assignment {
        task_id: task.id,
        worker_id: workers[pick].id,
        wtd: wtd(pick),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub assignments: Vec<Assignment>,
    pub mean_wtd: f64,
}

const STREAM_PSEUDO: u64 = 0x70;
const STREAM_ASSIGN: u64 = 0x61;

/// Each worker draws one pseudo-location from `matrix` (or reports its true
/// location when `matrix` is `None`), then tasks are served in id order.
/// Pseudo-location draws and responder choices use separate streams, so an
/// identity matrix reproduces the unobfuscated run exactly.
pub fn run_simulation(
    domain: &Domain,
    matrix: Option<&ObfuscationMatrix>,
    workers: &[Worker],
    tasks: &[Task],
    cfg: &SimConfig,
    seed: u64,
) -> Result<SimOutcome> {
    let mut workers = workers.to_vec();
    if let Some(m) = matrix {
        if m.len() != domain.len() {
            return Err(Error::InvalidArgument("matrix does not match the domain".into()));
        }
        let mut r = rng::stream(seed, &[STREAM_PSEUDO]);
        for w in &mut workers {
            w.pseudo_location = sample_pseudo(m, w.true_location, &mut r)?;
        }
    } else {
        for w in &mut workers {
            w.pseudo_location = w.true_location;
        }
    }
    let mut r = rng::stream(seed, &[STREAM_ASSIGN]);
    let mut assignments = Vec::with_capacity(tasks.len());
    for task in tasks {
        let cands = geocast(task, &workers, cfg.geocast_k, domain)?;
        let a = assign(task, &cands, &workers, domain, cfg.responder, &mut r)?;
        if !cfg.shared_workers {
            if let Some(w) = workers.iter_mut().find(|w| w.id == a.worker_id) {
                w.idle = false;
            }
        }
        assignments.push(a);
    }
    let mean_wtd = if assignments.is_empty() {
        0.0
    } else {
        assignments.iter().map(|a| a.wtd).sum::<f64>() / assignments.len() as f64
    };
    Ok(SimOutcome { assignments, mean_wtd })
}

/// Workers and tasks for one seeded scenario.
pub fn scenario(domain: &Domain, cfg: &SimConfig, seed: u64) -> Result<(Vec<Worker>, Vec<Task>)> {
    cfg.validate()?;
    let workers = spawn_workers(domain, cfg.workers, cfg.mode, &mut rng::stream(seed, &[0x77]))?;
    let tasks = spawn_tasks(domain, cfg.tasks, &mut rng::stream(seed, &[0x74]));
    Ok((workers, tasks))
}
