//! C ABI over `atd-core`.
//!
//! Every function returns an [`AtdStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be fetched with
//! [`atd_last_error_message`]. Matrices and trees are opaque handles owned
//! by the caller and released with their `*_free` function. Strings handed
//! out by the library are released with [`atd_string_free`].
//!
//! Pointer arguments must be valid for the stated lengths; null is reported
//! as `ATD_STATUS_NULL_POINTER` rather than dereferenced.

#![allow(clippy::missing_safety_doc)]

use atd_core::matrix::{read_matrix, DistanceMatrix};
use atd_core::phylo::{cophenetic, from_newick, nj_build, to_newick, PhyloTree};
use atd_core::stats::{mann_whitney_u, Sided};
use atd_core::transport::{cramer_l2, sinkhorn_divergence, w2_exact, SinkhornConfig};
use atd_core::AtdError;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtdSided {
    Two = 0,
    Less = 1,
    Greater = 2,
}

/// Mirrors the core Sinkhorn settings; fill with
/// [`atd_sinkhorn_default_config`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AtdSinkhornConfig {
    pub blur: f64,
    pub scaling: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

pub struct AtdMatrix(DistanceMatrix);

pub struct AtdTree(PhyloTree);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(AtdStatus, String);

impl From<AtdError> for Failure {
    fn from(e: AtdError) -> Self {
        let status = match &e {
            AtdError::Parse { .. } | AtdError::Newick { .. } | AtdError::Json(_) => AtdStatus::Parse,
            AtdError::Io(_) => AtdStatus::Io,
            AtdError::IndexOutOfRange { .. } | AtdError::UnknownLabel(_) => AtdStatus::OutOfRange,
            _ => AtdStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AtdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AtdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            AtdStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AtdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AtdStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn string_out(s: String, dst: &mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(AtdStatus::InvalidInput, "string contains NUL".into()))?;
    *dst = c.into_raw();
    Ok(())
}

unsafe fn pair_distance(
    p: *const f64,
    q: *const f64,
    n: usize,
    result: *mut f64,
    f: fn(&[f64], &[f64]) -> atd_core::Result<f64>,
) -> AtdStatus {
    guard(|| {
        let (p, q) = (slice(p, n, "p")?, slice(q, n, "q")?);
        let r = out(result, "out")?;
        *r = f(p, q)?;
        Ok(())
    })
}

/// Exact 1-D Wasserstein-2 distance on the index grid `0..n`.
#[no_mangle]
pub unsafe extern "C" fn atd_w2_exact(p: *const f64, q: *const f64, n: usize, result: *mut f64) -> AtdStatus {
    pair_distance(p, q, n, result, w2_exact)
}

/// L2 norm of the CDF difference.
#[no_mangle]
pub unsafe extern "C" fn atd_cramer_l2(p: *const f64, q: *const f64, n: usize, result: *mut f64) -> AtdStatus {
    pair_distance(p, q, n, result, cramer_l2)
}

#[no_mangle]
pub extern "C" fn atd_sinkhorn_default_config() -> AtdSinkhornConfig {
    let c = SinkhornConfig::default();
    AtdSinkhornConfig {
        blur: c.blur,
        scaling: c.scaling,
        tolerance: c.tolerance,
        max_iterations: c.max_iterations,
    }
}

/// Debiased Sinkhorn divergence on the unit grid. `converged` may be null.
#[no_mangle]
pub unsafe extern "C" fn atd_sinkhorn_divergence(
    p: *const f64,
    q: *const f64,
    n: usize,
    config: *const AtdSinkhornConfig,
    result: *mut f64,
    converged: *mut bool,
) -> AtdStatus {
    guard(|| {
        let (p, q) = (slice(p, n, "p")?, slice(q, n, "q")?);
        let c = handle(config, "config")?;
        let r = out(result, "out")?;
        let cfg = SinkhornConfig {
            blur: c.blur,
            scaling: c.scaling,
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
        };
        let s = sinkhorn_divergence(p, q, &cfg)?;
        *r = s.divergence;
        if let Some(flag) = converged.as_mut() {
            *flag = s.converged;
        }
        Ok(())
    })
}

/// Matrix from `n` labels and `n*n` row-major values.
#[no_mangle]
pub unsafe extern "C" fn atd_matrix_new(
    labels: *const *const c_char,
    n: usize,
    values: *const f64,
    matrix: *mut *mut AtdMatrix,
) -> AtdStatus {
    guard(|| {
        let dst = out(matrix, "matrix")?;
        if labels.is_null() && n > 0 {
            return Err(null("labels"));
        }
        let names = (0..n)
            .map(|i| text(*labels.add(i), "label").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let flat = slice(values, n * n, "values")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let m = DistanceMatrix::from_rows(names, &rows[..n.min(rows.len())])?;
        *dst = Box::into_raw(Box::new(AtdMatrix(m)));
        Ok(())
    })
}

/// Read a matrix file (text table or JSON).
#[no_mangle]
pub unsafe extern "C" fn atd_matrix_read(path: *const c_char, matrix: *mut *mut AtdMatrix) -> AtdStatus {
    guard(|| {
        let dst = out(matrix, "matrix")?;
        let m = read_matrix(text(path, "path")?)?.matrix;
        *dst = Box::into_raw(Box::new(AtdMatrix(m)));
        Ok(())
    })
}

/// Number of languages; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn atd_matrix_size(matrix: *const AtdMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn atd_matrix_get(matrix: *const AtdMatrix, i: usize, j: usize, result: *mut f64) -> AtdStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let r = out(result, "out")?;
        if i >= m.len() || j >= m.len() {
            return Err(Failure(AtdStatus::OutOfRange, format!("index ({i}, {j}) outside {}", m.len())));
        }
        *r = m.get(i, j);
        Ok(())
    })
}

/// Label of row `i`, as a new string for [`atd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn atd_matrix_label(matrix: *const AtdMatrix, i: usize, label: *mut *mut c_char) -> AtdStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let dst = out(label, "label")?;
        let l = m
            .labels()
            .get(i)
            .ok_or_else(|| Failure(AtdStatus::OutOfRange, format!("index {i} outside {}", m.len())))?;
        string_out(l.clone(), dst)
    })
}

#[no_mangle]
pub unsafe extern "C" fn atd_matrix_free(matrix: *mut AtdMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Neighbor-Joining tree of a matrix with at least three languages.
#[no_mangle]
pub unsafe extern "C" fn atd_nj_build(matrix: *const AtdMatrix, tree: *mut *mut AtdTree) -> AtdStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let dst = out(tree, "tree")?;
        *dst = Box::into_raw(Box::new(AtdTree(nj_build(m)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn atd_tree_from_newick(newick: *const c_char, tree: *mut *mut AtdTree) -> AtdStatus {
    guard(|| {
        let dst = out(tree, "tree")?;
        let t = from_newick(text(newick, "newick")?)?;
        *dst = Box::into_raw(Box::new(AtdTree(t)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn atd_tree_to_newick(tree: *const AtdTree, newick: *mut *mut c_char) -> AtdStatus {
    guard(|| {
        let t = &handle(tree, "tree")?.0;
        let dst = out(newick, "newick")?;
        string_out(to_newick(t), dst)
    })
}

#[no_mangle]
pub unsafe extern "C" fn atd_tree_leaf_count(tree: *const AtdTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.leaves().len())
}

#[no_mangle]
pub unsafe extern "C" fn atd_tree_free(tree: *mut AtdTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Pearson and Spearman correlation between matrix and tree distances.
/// An undefined correlation (constant input) is returned as NaN.
#[no_mangle]
pub unsafe extern "C" fn atd_cophenetic(
    matrix: *const AtdMatrix,
    tree: *const AtdTree,
    pearson: *mut f64,
    spearman: *mut f64,
) -> AtdStatus {
    guard(|| {
        let m = &handle(matrix, "matrix")?.0;
        let t = &handle(tree, "tree")?.0;
        let (r, rho) = (out(pearson, "pearson")?, out(spearman, "spearman")?);
        let c = cophenetic(m, t)?;
        *r = c.pearson.unwrap_or(f64::NAN);
        *rho = c.spearman.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Mann-Whitney U of `a` against `b`; `exact` may be null.
#[no_mangle]
pub unsafe extern "C" fn atd_mann_whitney_u(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    sided: AtdSided,
    u: *mut f64,
    p: *mut f64,
    exact: *mut bool,
) -> AtdStatus {
    guard(|| {
        let (a, b) = (slice(a, n_a, "a")?, slice(b, n_b, "b")?);
        let (u, p) = (out(u, "u")?, out(p, "p")?);
        let sided = match sided {
            AtdSided::Two => Sided::Two,
            AtdSided::Less => Sided::Less,
            AtdSided::Greater => Sided::Greater,
        };
        let r = mann_whitney_u(a, b, sided)?;
        *u = r.u;
        *p = r.p;
        if let Some(flag) = exact.as_mut() {
            *flag = r.method == atd_core::stats::PMethod::Exact;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn atd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn atd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn atd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
