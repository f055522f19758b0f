//! C ABI over the `geomoea` library.
//!
//! Objects cross the boundary as opaque handles created by `gm_*_new`/`load`
//! style functions and released with the matching `gm_*_free`. Every
//! fallible call returns a [`GmStatus`]; on failure a description is
//! available from [`gm_last_error`] on the same thread until the next call.
//! Location ids are the dataset ids, never internal indices.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use geomoea::adversary;
use geomoea::cli::{read_domain, read_matrix, verify_artifacts};
use geomoea::config::write_json;
use geomoea::domain::{load_domain, DatasetSource, DatasetSpec, Domain};
use geomoea::grid::binary_partition;
use geomoea::mechanism::{build_matrix, sample_pseudo, ObfuscationMatrix};
use geomoea::moea::{evolve, Individual, MoeaConfig};
use geomoea::pls::{ret_c, PlsPartition, PrivacyConfig};
use geomoea::{rng, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MissingFile = 3,
    Io = 4,
    Parse = 5,
    Schema = 6,
    InvalidConfig = 7,
    Infeasible = 8,
    NotFound = 9,
    Internal = 10,
}

pub struct GmDomain(Domain);

pub struct GmPartition {
    partition: PlsPartition,
    privacy: PrivacyConfig,
}

pub struct GmMatrix(ObfuscationMatrix);

pub struct GmFront {
    members: Vec<Individual>,
    privacy: PrivacyConfig,
    hypervolume: f64,
}

/// Objective values of a matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GmEvaluation {
    pub qloss: f64,
    pub exp_err: f64,
    pub min_conditional_error: f64,
}

/// Verifier outcomes; each flag is 1 on pass, 0 on failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GmVerifyReport {
    pub within_pls: u8,
    pub within_pls_max_ratio: f64,
    pub cross_pls: u8,
    pub cross_pls_violations: u32,
    pub geo_indistinguishability: u8,
    pub row_stochastic: u8,
    pub row_max_deviation: f64,
    pub error_floor: u8,
    pub min_conditional_error: f64,
    pub all: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GmStatus {
    match e {
        Error::MissingFile(_) => GmStatus::MissingFile,
        Error::Io { .. } => GmStatus::Io,
        Error::Parse { .. } => GmStatus::Parse,
        Error::Schema { .. } | Error::Json(_) => GmStatus::Schema,
        Error::InvalidConfig(_) => GmStatus::InvalidConfig,
        Error::InvalidArgument(_) | Error::DomainTooSmall { .. } => GmStatus::InvalidArgument,
        Error::CellInfeasible { .. } | Error::DegeneratePls { .. } => GmStatus::Infeasible,
        Error::UnreachableOutput { .. } | Error::NoWorker { .. } => GmStatus::NotFound,
        Error::Invariant(_) => GmStatus::Internal,
    }
}

struct Fail(GmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GmStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(GmStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GmStatus::Internal
        }
    }
}

unsafe fn by_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

fn index(domain: &Domain, id: u32) -> Result<usize, Fail> {
    domain
        .index_of(id)
        .ok_or_else(|| Fail(GmStatus::NotFound, format!("location id {id} not in domain")))
}

fn privacy(epsilon0: f64, e_m: f64, n0: u32) -> Result<PrivacyConfig, Fail> {
    let cfg = PrivacyConfig {
        epsilon0,
        e_m,
        n0: n0 as usize,
        ..PrivacyConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next `gm_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn gm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The 400-location synthetic benchmark generated from `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_benchmark(seed: u64, out: *mut *mut GmDomain) -> GmStatus {
    guard(|| put(out, GmDomain(load_domain(&DatasetSpec::benchmark_400(seed))?)))
}

/// Loads a CSV dataset (`id,x,y` km, or `id,lon,lat` when `geo` is nonzero).
/// `blur_radius_m` and `seed` control the location blur and random priors.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_load_csv(
    path: *const c_char,
    geo: u8,
    blur_radius_m: f64,
    seed: u64,
    out: *mut *mut GmDomain,
) -> GmStatus {
    guard(|| {
        let mut spec = DatasetSpec::benchmark_400(seed);
        spec.source = DatasetSource::Csv {
            path: path_arg(path, "path")?,
            geo: geo != 0,
        };
        spec.blur_radius = blur_radius_m;
        put(out, GmDomain(load_domain(&spec)?))
    })
}

/// Reads a `domain.json` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_read_json(path: *const c_char, out: *mut *mut GmDomain) -> GmStatus {
    guard(|| put(out, GmDomain(read_domain(&path_arg(path, "path")?)?)))
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_write_json(domain: *const GmDomain, path: *const c_char) -> GmStatus {
    guard(|| {
        let d = by_ref(domain, "domain")?;
        Ok(write_json(&path_arg(path, "path")?, &d.0.to_export())?)
    })
}

/// Number of locations, 0 for NULL.
///
/// # Safety
/// `domain` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_len(domain: *const GmDomain) -> usize {
    domain.as_ref().map_or(0, |d| d.0.len())
}

/// Id of the location at position `index` (0-based) in the domain order.
///
/// # Safety
/// `domain` must be a live handle and `out_id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_id(domain: *const GmDomain, index: usize, out_id: *mut u32) -> GmStatus {
    guard(|| {
        let d = &by_ref(domain, "domain")?.0;
        if index >= d.len() {
            return Err(invalid(format!("index {index} out of range (len {})", d.len())));
        }
        write(out_id, d.id(index))
    })
}

/// # Safety
/// `domain` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_domain_free(domain: *mut GmDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Binary cell split with `n0` locations per cell, then one randomized PLS
/// partition of every cell.
///
/// # Safety
/// `domain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_partition_random(
    domain: *const GmDomain,
    epsilon0: f64,
    e_m: f64,
    n0: u32,
    seed: u64,
    out: *mut *mut GmPartition,
) -> GmStatus {
    guard(|| {
        let d = &by_ref(domain, "domain")?.0;
        let cfg = privacy(epsilon0, e_m, n0)?;
        let tree = binary_partition(d, cfg.n0)?;
        let partition = ret_c(&tree, d, &cfg, &mut rng::stream(seed, &[0x9a]))?;
        put(out, GmPartition { partition, privacy: cfg })
    })
}

/// Number of PLSs, 0 for NULL.
///
/// # Safety
/// `partition` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_partition_len(partition: *const GmPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.partition.plss.len())
}

/// Budget allocated to PLS `index`.
///
/// # Safety
/// `partition` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_partition_epsilon(partition: *const GmPartition, index: usize, out: *mut f64) -> GmStatus {
    guard(|| {
        let p = by_ref(partition, "partition")?;
        let pls = p
            .partition
            .plss
            .get(index)
            .ok_or_else(|| invalid(format!("PLS index {index} out of range")))?;
        write(out, pls.epsilon)
    })
}

/// # Safety
/// `partition` and `domain` must be live handles; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gm_partition_write_json(
    partition: *const GmPartition,
    domain: *const GmDomain,
    path: *const c_char,
) -> GmStatus {
    guard(|| {
        let p = by_ref(partition, "partition")?;
        let d = &by_ref(domain, "domain")?.0;
        Ok(write_json(&path_arg(path, "path")?, &p.partition.to_export(d, &p.privacy))?)
    })
}

/// # Safety
/// `partition` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_partition_free(partition: *mut GmPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Obfuscation matrix of a partition.
///
/// # Safety
/// `partition` and `domain` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_build(
    partition: *const GmPartition,
    domain: *const GmDomain,
    out: *mut *mut GmMatrix,
) -> GmStatus {
    guard(|| {
        let p = by_ref(partition, "partition")?;
        let d = &by_ref(domain, "domain")?.0;
        put(out, GmMatrix(build_matrix(&p.partition, d)?))
    })
}

/// Reads a JSON or binary matrix file.
///
/// # Safety
/// `path` must be NUL-terminated, `domain` live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_read(path: *const c_char, domain: *const GmDomain, out: *mut *mut GmMatrix) -> GmStatus {
    guard(|| {
        let d = &by_ref(domain, "domain")?.0;
        put(out, GmMatrix(read_matrix(&path_arg(path, "path")?, d)?))
    })
}

/// # Safety
/// `matrix` and `domain` must be live handles; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_write_json(matrix: *const GmMatrix, domain: *const GmDomain, path: *const c_char) -> GmStatus {
    guard(|| {
        let m = &by_ref(matrix, "matrix")?.0;
        let d = &by_ref(domain, "domain")?.0;
        Ok(write_json(&path_arg(path, "path")?, &m.to_export(d))?)
    })
}

/// Probability of reporting `output_id` from `true_id`.
///
/// # Safety
/// `matrix` and `domain` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_prob(
    matrix: *const GmMatrix,
    domain: *const GmDomain,
    true_id: u32,
    output_id: u32,
    out: *mut f64,
) -> GmStatus {
    guard(|| {
        let m = &by_ref(matrix, "matrix")?.0;
        let d = &by_ref(domain, "domain")?.0;
        write(out, m.row(index(d, true_id)?).prob(index(d, output_id)?))
    })
}

/// Draws a reported location for `true_id`, deterministic in `seed`.
///
/// # Safety
/// `matrix` and `domain` must be live handles and `out_id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_sample(
    matrix: *const GmMatrix,
    domain: *const GmDomain,
    true_id: u32,
    seed: u64,
    out_id: *mut u32,
) -> GmStatus {
    guard(|| {
        let m = &by_ref(matrix, "matrix")?.0;
        let d = &by_ref(domain, "domain")?.0;
        let o = sample_pseudo(m, index(d, true_id)?, &mut rng::stream(seed, &[]))?;
        write(out_id, d.id(o))
    })
}

/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_matrix_free(matrix: *mut GmMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Quality loss, expected inference error and the smallest per-output error.
///
/// # Safety
/// `domain` and `matrix` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_evaluate(domain: *const GmDomain, matrix: *const GmMatrix, out: *mut GmEvaluation) -> GmStatus {
    guard(|| {
        let d = &by_ref(domain, "domain")?.0;
        let m = &by_ref(matrix, "matrix")?.0;
        let e = adversary::evaluate(d, m);
        write(
            out,
            GmEvaluation {
                qloss: e.qloss,
                exp_err: e.exp_err,
                min_conditional_error: e.min_conditional_error,
            },
        )
    })
}

/// Runs every verifier on a matrix built for `partition`. Returns `Ok`
/// even when a check fails; inspect the report.
///
/// # Safety
/// All handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_verify(
    matrix: *const GmMatrix,
    partition: *const GmPartition,
    domain: *const GmDomain,
    out: *mut GmVerifyReport,
) -> GmStatus {
    guard(|| {
        let m = &by_ref(matrix, "matrix")?.0;
        let p = by_ref(partition, "partition")?;
        let d = &by_ref(domain, "domain")?.0;
        if m.len() != d.len() {
            return Err(invalid("matrix and domain sizes differ"));
        }
        let r = verify_artifacts(m, &p.partition, d, p.privacy.epsilon0, p.privacy.e_m);
        write(
            out,
            GmVerifyReport {
                within_pls: r.within_pls.pass as u8,
                within_pls_max_ratio: r.within_pls.max_ratio,
                cross_pls: r.cross_pls.pass as u8,
                cross_pls_violations: r.cross_pls.violations as u32,
                geo_indistinguishability: r.geo_indistinguishability.pass as u8,
                row_stochastic: r.row_stochastic.pass as u8,
                row_max_deviation: r.row_stochastic.max_deviation,
                error_floor: r.error_floor.pass as u8,
                min_conditional_error: r.error_floor.min_conditional_error,
                all: r.pass as u8,
            },
        )
    })
}

/// Multi-objective search with default settings apart from the arguments.
///
/// # Safety
/// `domain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_evolve(
    domain: *const GmDomain,
    epsilon0: f64,
    e_m: f64,
    n0: u32,
    population: u32,
    max_generations: u32,
    seed: u64,
    out: *mut *mut GmFront,
) -> GmStatus {
    guard(|| {
        let d = &by_ref(domain, "domain")?.0;
        let cfg = privacy(epsilon0, e_m, n0)?;
        let mcfg = MoeaConfig {
            population: population as usize,
            max_generations: max_generations as usize,
            seed,
            ..MoeaConfig::default()
        };
        let tree = binary_partition(d, cfg.n0)?;
        let front = evolve(d, &tree, &cfg, &mcfg)?;
        let hypervolume = front.hypervolume();
        put(
            out,
            GmFront {
                members: front.members,
                privacy: cfg,
                hypervolume,
            },
        )
    })
}

/// Number of front solutions, 0 for NULL.
///
/// # Safety
/// `front` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_front_len(front: *const GmFront) -> usize {
    front.as_ref().map_or(0, |f| f.members.len())
}

/// # Safety
/// `front` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_front_hypervolume(front: *const GmFront) -> f64 {
    front.as_ref().map_or(0.0, |f| f.hypervolume)
}

/// Objectives of solution `index` (solutions are in ascending QLoss).
///
/// # Safety
/// `front` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_front_get(front: *const GmFront, index: usize, out: *mut GmEvaluation) -> GmStatus {
    guard(|| {
        let f = by_ref(front, "front")?;
        let s = f
            .members
            .get(index)
            .ok_or_else(|| invalid(format!("front index {index} out of range")))?;
        write(
            out,
            GmEvaluation {
                qloss: s.qloss(),
                exp_err: s.exp_err(),
                min_conditional_error: s.min_conditional_error,
            },
        )
    })
}

/// Copies solution `index`'s partition into a new handle.
///
/// # Safety
/// `front` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_front_partition(front: *const GmFront, index: usize, out: *mut *mut GmPartition) -> GmStatus {
    guard(|| {
        let f = by_ref(front, "front")?;
        let s = f
            .members
            .get(index)
            .ok_or_else(|| invalid(format!("front index {index} out of range")))?;
        put(
            out,
            GmPartition {
                partition: s.partition.clone(),
                privacy: f.privacy.clone(),
            },
        )
    })
}

/// # Safety
/// `front` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_front_free(front: *mut GmFront) {
    if !front.is_null() {
        drop(Box::from_raw(front));
    }
}
