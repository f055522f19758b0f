//! The discrete location universe: coordinates (km, local tangent plane),
//! prior mass, Euclidean metric, and dataset ingestion / synthesis.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Unit every distance in this crate is expressed in.
pub const DISTANCE_UNIT: &str = "km";

const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: u32,
    /// km east
    pub x: f64,
    /// km north
    pub y: f64,
}

/// Euclidean distance in km.
pub fn distance(a: &Location, b: &Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Axis-aligned rectangle in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Tight bounding box; `None` for an empty iterator.
    pub fn bounding<'a>(locs: impl IntoIterator<Item = &'a Location>) -> Option<Rect> {
        let mut it = locs.into_iter();
        let first = it.next()?;
        let mut r = Rect {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for l in it {
            r.min_x = r.min_x.min(l.x);
            r.min_y = r.min_y.min(l.y);
            r.max_x = r.max_x.max(l.x);
            r.max_y = r.max_y.max(l.y);
        }
        Some(r)
    }
}

/// Immutable location universe. Locations are stored sorted by id; every
/// other module addresses them by their position (`usize` index) in that order.
#[derive(Debug, Clone)]
pub struct Domain {
    locations: Vec<Location>,
    prior: Vec<f64>,
    /// Row-major pairwise distances, kept for domains up to `DENSE_LIMIT`.
    dists: Option<Vec<f64>>,
    neighbors: OnceLock<Vec<Vec<u32>>>,
}

const DENSE_LIMIT: usize = 4096;

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.locations == other.locations && self.prior == other.prior
    }
}

impl Domain {
    /// Builds a domain from locations and a (not necessarily normalized)
    /// positive prior. The prior is normalized to sum to one.
    pub fn new(locations: Vec<Location>, prior: Vec<f64>) -> Result<Self> {
        if locations.len() < 2 {
            return Err(Error::DomainTooSmall {
                count: locations.len(),
            });
        }
        if prior.len() != locations.len() {
            return Err(Error::InvalidArgument(format!(
                "prior has {} entries for {} locations",
                prior.len(),
                locations.len()
            )));
        }
        let mut seen = HashSet::with_capacity(locations.len());
        for l in &locations {
            if !seen.insert(l.id) {
                return Err(Error::InvalidArgument(format!("duplicate location id {}", l.id)));
            }
            if !l.x.is_finite() || !l.y.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "location {} has non-finite coordinates",
                    l.id
                )));
            }
        }
        if prior.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "prior masses must be finite and strictly positive".into(),
            ));
        }

        let mut order: Vec<usize> = (0..locations.len()).collect();
        order.sort_by_key(|&i| locations[i].id);
        let locations: Vec<Location> = order.iter().map(|&i| locations[i]).collect();
        let raw: Vec<f64> = order.iter().map(|&i| prior[i]).collect();
        let total: f64 = raw.iter().sum();
        let prior = raw.iter().map(|p| p / total).collect();
        let n = locations.len();
        let dists = (n <= DENSE_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = distance(&locations[i], &locations[j]);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            m
        });

        Ok(Domain {
            locations,
            prior,
            dists,
            neighbors: OnceLock::new(),
        })
    }

    /// Uniform prior over the given locations.
    pub fn with_uniform_prior(locations: Vec<Location>) -> Result<Self> {
        let n = locations.len();
        Self::new(locations, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location(&self, idx: usize) -> &Location {
        &self.locations[idx]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn id(&self, idx: usize) -> u32 {
        self.locations[idx].id
    }

    /// Index of the location with external id `id`.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.locations.binary_search_by_key(&id, |l| l.id).ok()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.dists {
            Some(m) => m[a * self.locations.len() + b],
            None => distance(&self.locations[a], &self.locations[b]),
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect::bounding(&self.locations).expect("domain is nonempty")
    }

    /// Largest pairwise distance among `members`.
    pub fn diameter(&self, members: &[usize]) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                d = d.max(self.dist(a, b));
            }
        }
        d
    }

    /// For each location, all location indices ordered by distance from it
    /// (itself first), ties by index. Built on first use.
    pub fn neighbors(&self, idx: usize) -> &[u32] {
        &self.neighbor_table()[idx]
    }

    fn neighbor_table(&self) -> &Vec<Vec<u32>> {
        self.neighbors.get_or_init(|| {
            let n = self.len();
            (0..n)
                .map(|i| {
                    let mut keyed: Vec<(f64, u32)> =
                        (0..n).map(|j| (self.dist(i, j), j as u32)).collect();
                    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    keyed.into_iter().map(|(_, j)| j).collect()
                })
                .collect()
        })
    }

    /// Exact discrete weighted 1-median over the whole domain:
    /// `argmin_{c in domain} sum_i w_i * d(c, x_i)`, ties to the lowest index.
    ///
    /// Candidates are scanned outward from an anchor near the weighted
    /// centroid; by the triangle inequality no candidate farther than
    /// `(best + S(anchor)) / W` from the anchor can improve, so the scan stops there.
    pub fn weighted_median(&self, points: &[(usize, f64)]) -> (usize, f64) {
        assert!(!points.is_empty(), "weighted_median of empty set");
        let total: f64 = points.iter().map(|p| p.1).sum();
        let (cx, cy) = points.iter().fold((0.0, 0.0), |(sx, sy), &(i, w)| {
            let l = &self.locations[i];
            (sx + w * l.x, sy + w * l.y)
        });
        let (cx, cy) = (cx / total, cy / total);
        let anchor = points
            .iter()
            .map(|&(i, _)| i)
            .min_by(|&a, &b| {
                let la = &self.locations[a];
                let lb = &self.locations[b];
                let da = (la.x - cx).hypot(la.y - cy);
                let db = (lb.x - cx).hypot(lb.y - cy);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("nonempty");

        let cost = |c: usize| -> f64 { points.iter().map(|&(i, w)| w * self.dist(c, i)).sum() };
        let anchor_cost = cost(anchor);
        let mut best = (anchor, anchor_cost);
        let slack = 1e-9 * (anchor_cost.abs() + total);
        for &c in self.neighbors(anchor) {
            let c = c as usize;
            let bound = total * self.dist(c, anchor) - anchor_cost;
            if bound > best.1 + slack {
                break;
            }
            if c == anchor {
                continue;
            }
            let v = cost(c);
            if v < best.1 || (v == best.1 && c < best.0) {
                best = (c, v);
            }
        }
        best
    }

    /// Same minimization restricted to an explicit candidate list.
    pub fn weighted_median_among(&self, points: &[(usize, f64)], candidates: &[usize]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for &c in candidates {
            let v: f64 = points.iter().map(|&(i, w)| w * self.dist(c, i)).sum();
            if v < best.1 || (v == best.1 && c < best.0) {
                best = (c, v);
            }
        }
        best
    }

    pub fn to_export(&self) -> DomainExport {
        DomainExport {
            units: DISTANCE_UNIT.to_string(),
            locations: self
                .locations
                .iter()
                .zip(&self.prior)
                .map(|(l, &p)| ExportedLocation {
                    id: l.id,
                    x: l.x,
                    y: l.y,
                    prior: p,
                })
                .collect(),
        }
    }

    pub fn from_export(export: &DomainExport) -> Result<Self> {
        let locations = export
            .locations
            .iter()
            .map(|l| Location {
                id: l.id,
                x: l.x,
                y: l.y,
            })
            .collect();
        let prior = export.locations.iter().map(|l| l.prior).collect();
        Self::new(locations, prior)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedLocation {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub prior: f64,
}

/// `domain.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainExport {
    pub units: String,
    pub locations: Vec<ExportedLocation>,
}

/// Gaussian blob in the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub cx: f64,
    pub cy: f64,
    /// standard deviation, km
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub count: usize,
    /// `[min_x, min_y, max_x, max_y]` in km
    pub bbox: [f64; 4],
    #[serde(default)]
    pub clusters: Vec<ClusterSpec>,
    /// Relative weight of the uniform background component.
    #[serde(default = "one")]
    pub background_weight: f64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticSpec {
    /// The 400-location desk benchmark: uniform points over a 12 km x 6 km
    /// rectangle, wider than tall so the first cut is left/right.
    pub fn benchmark_400() -> Self {
        SyntheticSpec {
            count: 400,
            bbox: [0.0, 0.0, 12.0, 6.0],
            clusters: Vec::new(),
            background_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        /// Rows are `id,lon,lat` degrees instead of `id,x,y` km.
        #[serde(default)]
        geo: bool,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DatasetSource,
    /// meters
    #[serde(default)]
    pub blur_radius: f64,
    #[serde(default = "default_prior_range")]
    pub prior_range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

fn default_prior_range() -> [f64; 2] {
    [0.0005, 0.0015]
}

impl DatasetSpec {
    pub fn benchmark_400(seed: u64) -> Self {
        DatasetSpec {
            source: DatasetSource::Synthetic(SyntheticSpec::benchmark_400()),
            blur_radius: 80.0,
            prior_range: default_prior_range(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blur_radius >= 0.0) {
            return Err(Error::InvalidConfig("blur_radius must be >= 0".into()));
        }
        let [lo, hi] = self.prior_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "prior_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if let DatasetSource::Synthetic(s) = &self.source {
            if s.count < 2 {
                return Err(Error::DomainTooSmall { count: s.count });
            }
            let [x0, y0, x1, y1] = s.bbox;
            if !(x0 < x1 && y0 < y1) {
                return Err(Error::InvalidConfig("synthetic bbox must have positive extent".into()));
            }
        }
        Ok(())
    }
}

const STREAM_GENERATE: u64 = 1;
const STREAM_BLUR: u64 = 2;
const STREAM_PRIOR: u64 = 3;

/// Loads or synthesizes the raw positions, blurs each uniformly within a disk
/// of `blur_radius` meters, samples a prior uniformly in `prior_range` and
/// normalizes it. Deterministic given the spec.
pub fn load_domain(spec: &DatasetSpec) -> Result<Domain> {
    spec.validate()?;
    let mut raw = match &spec.source {
        DatasetSource::Csv { path, geo } => read_csv(path, *geo)?,
        DatasetSource::Synthetic(s) => synthesize(s, spec.seed),
    };
    if raw.len() < 2 {
        return Err(Error::DomainTooSmall { count: raw.len() });
    }

    if spec.blur_radius > 0.0 {
        let radius_km = spec.blur_radius / 1000.0;
        let mut rng = rng::stream(spec.seed, &[STREAM_BLUR]);
        for l in &mut raw {
            let r = radius_km * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            l.x += r * theta.cos();
            l.y += r * theta.sin();
        }
    }

    let [lo, hi] = spec.prior_range;
    let mut rng = rng::stream(spec.seed, &[STREAM_PRIOR]);
    let prior = raw
        .iter()
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
        .collect();
    Domain::new(raw, prior)
}

fn synthesize(s: &SyntheticSpec, seed: u64) -> Vec<Location> {
    let mut rng = rng::stream(seed, &[STREAM_GENERATE]);
    let [x0, y0, x1, y1] = s.bbox;
    let total_w: f64 = s.background_weight.max(0.0) + s.clusters.iter().map(|c| c.weight.max(0.0)).sum::<f64>();
    (0..s.count)
        .map(|i| {
            let mut pick = rng.gen::<f64>() * total_w;
            let mut chosen = None;
            for c in &s.clusters {
                if pick < c.weight.max(0.0) {
                    chosen = Some(c);
                    break;
                }
                pick -= c.weight.max(0.0);
            }
            let (x, y) = match chosen {
                Some(c) => {
                    // Box-Muller, clamped to the bounding box.
                    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                    let u2: f64 = rng.gen();
                    let r = (-2.0 * u1.ln()).sqrt() * c.sigma;
                    let t = std::f64::consts::TAU * u2;
                    ((c.cx + r * t.cos()).clamp(x0, x1), (c.cy + r * t.sin()).clamp(y0, y1))
                }
                None => (rng.gen_range(x0..x1), rng.gen_range(y0..y1)),
            };
            Location { id: i as u32, x, y }
        })
        .collect()
}

/// Reads `id,x,y` (km) or, with `geo`, `id,lon,lat` rows projected
/// equirectangularly about the bounding-box centroid.
pub fn read_csv(path: &Path, geo: bool) -> Result<Vec<Location>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let display = path.display().to_string();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            path: display.clone(),
            row,
            message: e.to_string(),
        })?;
        if record.len() < 3 {
            return Err(Error::Parse {
                path: display.clone(),
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let field = |k: usize, name: &str| -> Result<f64> {
            let v: f64 = record[k].parse().map_err(|_| Error::Parse {
                path: display.clone(),
                row,
                message: format!("{name} {:?} is not a number", &record[k]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    path: display.clone(),
                    row,
                    message: format!("{name} is not finite"),
                })
            }
        };
        let id: u32 = record[0].parse().map_err(|_| Error::Parse {
            path: display.clone(),
            row,
            message: format!("id {:?} is not a non-negative integer", &record[0]),
        })?;
        rows.push((id, field(1, "x")?, field(2, "y")?));
    }

    if !geo {
        return Ok(rows.into_iter().map(|(id, x, y)| Location { id, x, y }).collect());
    }
    let (mut lon0, mut lon1, mut lat0, mut lat1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(_, lon, lat) in &rows {
        lon0 = lon0.min(lon);
        lon1 = lon1.max(lon);
        lat0 = lat0.min(lat);
        lat1 = lat1.max(lat);
    }
    let (clon, clat) = ((lon0 + lon1) / 2.0, (lat0 + lat1) / 2.0);
    let coslat = clat.to_radians().cos();
    Ok(rows
        .into_iter()
        .map(|(id, lon, lat)| Location {
            id,
            x: EARTH_RADIUS_KM * (lon - clon).to_radians() * coslat,
            y: EARTH_RADIUS_KM * (lat - clat).to_radians(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn loc(id: u32, x: f64, y: f64) -> Location {
        Location { id, x, y }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&loc(0, 0.0, 0.0), &loc(1, 3.0, 4.0)), 5.0);
        assert_eq!(distance(&loc(0, 1.0, 1.0), &loc(1, 1.0, 1.0)), 0.0);
        assert!((distance(&loc(0, 0.0, 0.0), &loc(1, 1.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_domains() {
        assert!(matches!(
            Domain::with_uniform_prior(vec![loc(0, 0.0, 0.0)]),
            Err(Error::DomainTooSmall { count: 1 })
        ));
        let mut spec = DatasetSpec::benchmark_400(1);
        if let DatasetSource::Synthetic(s) = &mut spec.source {
            s.count = 1;
        }
        assert!(matches!(load_domain(&spec), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn duplicate_coordinates_are_legal() {
        let d = Domain::with_uniform_prior(vec![loc(3, 1.0, 1.0), loc(1, 1.0, 1.0)]).unwrap();
        assert_eq!(d.dist(0, 1), 0.0);
        assert_eq!(d.id(0), 1);
        assert_eq!(d.index_of(3), Some(1));
    }

    #[test]
    fn blur_stays_within_radius() {
        let mut spec = DatasetSpec::benchmark_400(11);
        spec.blur_radius = 0.0;
        let raw = load_domain(&spec).unwrap();
        spec.blur_radius = 80.0;
        let blurred = load_domain(&spec).unwrap();
        let mut moved = 0;
        for (a, b) in raw.locations().iter().zip(blurred.locations()) {
            let d = distance(a, b);
            assert!(d <= 0.080 + 1e-12, "moved {d} km");
            if d > 0.0 {
                moved += 1;
            }
        }
        assert!(moved > 390);
    }

    #[test]
    fn prior_normalization_bounds() {
        let mut spec = DatasetSpec::benchmark_400(5);
        if let DatasetSource::Synthetic(s) = &mut spec.source {
            s.count = 1000;
        }
        spec.prior_range = [0.0005, 0.0015];
        let d = load_domain(&spec).unwrap();
        let sum: f64 = d.prior().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let lo = 0.0005 / (1000.0 * 0.0015);
        let hi = 0.0015 / (1000.0 * 0.0005);
        assert!(d.prior().iter().all(|&p| p >= lo && p <= hi));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("locs.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "id,x,y\n0,0.0,0.0\n1,3.0,4.0\n2,1.5,2").unwrap();
        drop(f);
        let spec = DatasetSpec {
            source: DatasetSource::Csv {
                path: path.clone(),
                geo: false,
            },
            blur_radius: 0.0,
            prior_range: [1.0, 1.0],
            seed: 0,
        };
        let d = load_domain(&spec).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.location(1).x, 3.0);
        assert!((d.prior()[0] - 1.0 / 3.0).abs() < 1e-15);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "id,x,y\n0,0,0\n1,abc,2\n").unwrap();
        let spec = DatasetSpec {
            source: DatasetSource::Csv { path: bad, geo: false },
            ..spec
        };
        match load_domain(&spec) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn geo_projection_is_local_km() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.csv");
        std::fs::write(&path, "id,lon,lat\n0,-73.99,40.75\n1,-73.98,40.75\n2,-73.985,40.76\n").unwrap();
        let locs = read_csv(&path, true).unwrap();
        let d = distance(&locs[0], &locs[1]);
        // 0.01 degree of longitude at ~40.755N
        let expected = EARTH_RADIUS_KM * 0.01f64.to_radians() * 40.755f64.to_radians().cos();
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn weighted_median_matches_exhaustive() {
        let spec = DatasetSpec::benchmark_400(3);
        let d = load_domain(&spec).unwrap();
        let all: Vec<usize> = (0..d.len()).collect();
        for start in [0usize, 17, 123, 399] {
            let pts: Vec<(usize, f64)> = (start..d.len().min(start + 9)).map(|i| (i, d.prior()[i])).collect();
            let fast = d.weighted_median(&pts);
            let slow = d.weighted_median_among(&pts, &all);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn load_is_deterministic() {
        let spec = DatasetSpec::benchmark_400(42);
        assert_eq!(load_domain(&spec).unwrap(), load_domain(&spec).unwrap());
    }
}
