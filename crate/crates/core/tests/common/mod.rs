#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

pub fn schema_errors(schema: &str, instance: &Value) -> Vec<String> {
    let path = schema_dir().join(format!("{schema}.schema.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect()
}

/// Validates a JSON file against `docs/schemas/<schema>.schema.json`.
pub fn assert_json_valid(file: &Path, schema: &str) {
    let text = std::fs::read_to_string(file).unwrap_or_else(|e| panic!("{}: {e}", file.display()));
    let v: Value = serde_json::from_str(&text).unwrap();
    let errs = schema_errors(schema, &v);
    assert!(errs.is_empty(), "{} vs {schema}: {errs:?}", file.display());
}

/// Validates each CSV record (numeric cells parsed) against `<schema>.row`.
/// Returns the record count.
pub fn assert_csv_valid(file: &Path, schema: &str) -> usize {
    let mut r = csv::Reader::from_path(file).unwrap_or_else(|e| panic!("{}: {e}", file.display()));
    let headers = r.headers().unwrap().clone();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let obj: serde_json::Map<String, Value> = headers
            .iter()
            .zip(rec.iter())
            .map(|(h, c)| {
                let v = if let Ok(i) = c.parse::<u64>() {
                    Value::from(i)
                } else if let Ok(f) = c.parse::<f64>() {
                    Value::from(f)
                } else {
                    Value::from(c)
                };
                (h.to_string(), v)
            })
            .collect();
        let errs = schema_errors(&format!("{schema}.row"), &Value::Object(obj));
        assert!(errs.is_empty(), "{} record {n} vs {schema}: {errs:?}", file.display());
        n += 1;
    }
    n
}

pub fn geomoea(args: &[&str]) -> Output {
    geomoea_env(args, &[])
}

pub fn geomoea_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geomoea"));
    c.args(args).env_remove("GEOMOEA_SEED");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("spawn geomoea")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

use geomoea::domain::{Domain, Location};
use geomoea::mechanism::{MatrixRow, ObfuscationMatrix};
use geomoea::pls::{e_prime, Pls, PlsPartition};

/// Random domain of `n` locations with shuffled ids and a random positive
/// prior. Half the time coordinates sit on a small integer grid so that
/// distance ties occur.
pub fn random_domain(n: usize, rng: &mut impl rand::Rng) -> Domain {
    let grid = rng.gen_bool(0.5);
    let mut ids: Vec<u32> = (0..n as u32).map(|i| i * 3 + 1).collect();
    for i in (1..n).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let mut locs: Vec<Location> = Vec::with_capacity(n);
    while locs.len() < n {
        let (x, y) = if grid {
            (rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64)
        } else {
            (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))
        };
        if locs.iter().any(|l| l.x == x && l.y == y) {
            continue;
        }
        locs.push(Location { id: ids[locs.len()], x, y });
    }
    let prior = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    Domain::new(locs, prior).unwrap()
}

/// Random row-stochastic matrix; each row has a random nonempty support.
pub fn random_matrix(n: usize, rng: &mut impl rand::Rng) -> ObfuscationMatrix {
    let rows = (0..n)
        .map(|_| {
            let mut support: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if support.is_empty() {
                support.push(rng.gen_range(0..n));
            }
            let w: Vec<f64> = support.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
            let t: f64 = w.iter().sum();
            MatrixRow {
                support,
                probs: w.iter().map(|v| v / t).collect(),
            }
        })
        .collect();
    ObfuscationMatrix::from_rows(rows).unwrap()
}

pub fn dense(m: &ObfuscationMatrix) -> Vec<Vec<f64>> {
    let n = m.len();
    m.rows()
        .iter()
        .map(|r| (0..n).map(|o| r.prob(o)).collect())
        .collect()
}

/// Euclidean distance from raw coordinates.
pub fn euclid(d: &Domain, a: usize, b: usize) -> f64 {
    let (p, q) = (d.location(a), d.location(b));
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Random PLS partition of a small domain: shuffled chunks of at least two
/// members, each reporting over a random superset of itself.
pub fn random_partition(d: &Domain, r: &mut impl rand::Rng) -> PlsPartition {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], r);
    let mut plss = Vec::new();
    let mut ranges = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let take = if rest.len() <= 3 { rest.len() } else { r.gen_range(2..=rest.len() - 2) };
        let mut members = rest[..take].to_vec();
        rest = &rest[take..];
        members.sort_unstable();
        let mut range: Vec<usize> = (0..n).filter(|x| members.contains(x) || r.gen_bool(0.5)).collect();
        range.dedup();
        plss.push(Pls {
            cell: 0,
            diameter: d.diameter(&members),
            e_prime: e_prime(&members, d).unwrap(),
            epsilon: r.gen_range(0.2..2.0),
            members,
        });
        ranges.push(range);
    }
    PlsPartition {
        plss,
        reporting_ranges: ranges,
        objectives: None,
    }
}

/// A location at the origin and one point per sampled distance on a circle
/// of that radius, so the distance multiset from the origin is exact.
pub fn ring_domain(r: &mut impl rand::Rng) -> (Domain, usize, Vec<f64>) {
    let k = r.gen_range(2..=11);
    let mut dists: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..6.0)).collect();
    if r.gen_bool(0.3) {
        dists[1] = dists[0];
    }
    let mut locs = vec![Location { id: 0, x: 0.0, y: 0.0 }];
    for (i, &dd) in dists.iter().enumerate() {
        let t = std::f64::consts::TAU * i as f64 / k as f64;
        locs.push(Location {
            id: i as u32 + 1,
            x: dd * t.cos(),
            y: dd * t.sin(),
        });
    }
    let d = Domain::with_uniform_prior(locs).unwrap();
    let ds = (1..d.len()).map(|o| euclid(&d, 0, o)).collect();
    (d, 0, ds)
}

/// QLoss of the origin under a PLS with diameter 1 and budget `2 * rate`,
/// reporting over the other points.
pub fn ring_quality_loss(d: &Domain, x: usize, rate: f64) -> f64 {
    let pls = Pls {
        cell: 0,
        members: vec![x, x + 1],
        diameter: 1.0,
        e_prime: 1.0,
        epsilon: 2.0 * rate,
    };
    let range: Vec<usize> = (0..d.len()).filter(|&o| o != x).collect();
    let row = geomoea::mechanism::mechanism_row(d, x, &pls, &range).unwrap();
    row.support.iter().zip(&row.probs).map(|(&o, &p)| p * d.dist(x, o)).sum()
}
