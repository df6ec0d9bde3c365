//! C ABI over `maxent-core`.
//!
//! Problems and solutions are opaque handles created and freed through this
//! API. Every fallible call returns a [`MaxentStatus`]; on failure the
//! message is available from [`maxent_last_error`] on the same thread.
//! Array outputs are copied into caller-owned buffers whose length must be
//! at least the count reported by the matching `*_count` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use maxent_core::cli::ResultBundle;
use maxent_core::{
    align_indicator_knots, discrete_entropy, maxent_utility_from_assessments, solve_interval,
    utility_volume, validate_problem, Assessment, Base, ConstraintFunction, ConstraintSpec, Error,
    MaxEntSolution, SolverOptions, Support,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxentStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Infeasible = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Opaque problem builder.
pub struct MaxentProblem {
    support: Support,
    constraints: Vec<ConstraintSpec>,
    assessments: Vec<Assessment>,
}

/// Opaque solved problem.
pub struct MaxentSolution {
    solution: MaxEntSolution,
    bundle: ResultBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: MaxentStatus, msg: impl Into<String>) -> MaxentStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> MaxentStatus {
    let status = if e.is_infeasible() {
        MaxentStatus::Infeasible
    } else {
        MaxentStatus::InvalidInput
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> MaxentStatus) -> MaxentStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(MaxentStatus::Ok) => {
            set_error("");
            MaxentStatus::Ok
        }
        Ok(status) => status,
        Err(_) => fail(MaxentStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn maxent_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_new_continuous(
    a: f64,
    b: f64,
    nodes: usize,
    out: *mut *mut MaxentProblem,
) -> MaxentStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaxentStatus::NullPointer, "out is null");
        }
        match Support::continuous(a, b, nodes) {
            Ok(support) => {
                let handle = Box::new(MaxentProblem {
                    support,
                    constraints: Vec::new(),
                    assessments: Vec::new(),
                });
                *out = Box::into_raw(handle);
                MaxentStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `points` must point to `len` readable doubles; `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_new_discrete(
    points: *const f64,
    len: usize,
    out: *mut *mut MaxentProblem,
) -> MaxentStatus {
    guard(|| {
        if out.is_null() || points.is_null() {
            return fail(MaxentStatus::NullPointer, "null argument");
        }
        let points = std::slice::from_raw_parts(points, len).to_vec();
        match Support::discrete(points) {
            Ok(support) => {
                *out = Box::into_raw(Box::new(MaxentProblem {
                    support,
                    constraints: Vec::new(),
                    assessments: Vec::new(),
                }));
                MaxentStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from `maxent_problem_new_*`.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_free(problem: *mut MaxentProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn push(problem: *mut MaxentProblem, spec: ConstraintSpec) -> MaxentStatus {
    guard(|| match problem.as_mut() {
        Some(p) => {
            p.constraints.push(spec);
            MaxentStatus::Ok
        }
        None => fail(MaxentStatus::NullPointer, "problem is null"),
    })
}

/// Adds E[x^k] = target.
///
/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_power(
    problem: *mut MaxentProblem,
    k: u32,
    target: f64,
) -> MaxentStatus {
    push(
        problem,
        ConstraintSpec::equal(ConstraintFunction::Power(k), target),
    )
}

/// Adds lo ≤ E[x^k] ≤ hi.
///
/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_power_interval(
    problem: *mut MaxentProblem,
    k: u32,
    lo: f64,
    hi: f64,
) -> MaxentStatus {
    push(
        problem,
        ConstraintSpec::between(ConstraintFunction::Power(k), lo, hi),
    )
}

/// Adds P(from ≤ X ≤ to) = target.
///
/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_indicator(
    problem: *mut MaxentProblem,
    from: f64,
    to: f64,
    target: f64,
) -> MaxentStatus {
    push(
        problem,
        ConstraintSpec::equal(ConstraintFunction::Indicator { lo: from, hi: to }, target),
    )
}

/// Adds lo ≤ P(from ≤ X ≤ to) ≤ hi.
///
/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_indicator_interval(
    problem: *mut MaxentProblem,
    from: f64,
    to: f64,
    lo: f64,
    hi: f64,
) -> MaxentStatus {
    push(
        problem,
        ConstraintSpec::between(ConstraintFunction::Indicator { lo: from, hi: to }, lo, hi),
    )
}

/// Adds E[h] = target for h tabulated at every grid node. `derivative` may
/// be null.
///
/// # Safety
/// `problem` must be a live handle; `values` (and `derivative` when not
/// null) must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_tabulated(
    problem: *mut MaxentProblem,
    values: *const f64,
    derivative: *const f64,
    len: usize,
    target: f64,
) -> MaxentStatus {
    if values.is_null() {
        return fail(MaxentStatus::NullPointer, "values is null");
    }
    let values = std::slice::from_raw_parts(values, len).to_vec();
    let derivative =
        (!derivative.is_null()).then(|| std::slice::from_raw_parts(derivative, len).to_vec());
    push(
        problem,
        ConstraintSpec::equal(ConstraintFunction::Tabulated { values, derivative }, target),
    )
}

/// Adds an assessed utility point U(x) = u.
///
/// # Safety
/// `problem` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_problem_add_assessment(
    problem: *mut MaxentProblem,
    x: f64,
    u: f64,
) -> MaxentStatus {
    guard(|| match problem.as_mut() {
        Some(p) => {
            p.assessments.push(Assessment { x, u });
            MaxentStatus::Ok
        }
        None => fail(MaxentStatus::NullPointer, "problem is null"),
    })
}

/// Solves the problem. `tol <= 0` and `max_iter == 0` select the defaults.
///
/// # Safety
/// `problem` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn maxent_solve(
    problem: *const MaxentProblem,
    tol: f64,
    max_iter: usize,
    out: *mut *mut MaxentSolution,
) -> MaxentStatus {
    guard(|| {
        let (Some(p), false) = (problem.as_ref(), out.is_null()) else {
            return fail(MaxentStatus::NullPointer, "null argument");
        };
        let defaults = SolverOptions::default();
        let options = SolverOptions {
            tol: (tol > 0.0).then_some(tol),
            max_iter: if max_iter == 0 {
                defaults.max_iter
            } else {
                max_iter
            },
            ..defaults
        };
        let solved = if p.assessments.is_empty() {
            align_indicator_knots(p.support.clone(), &p.constraints)
                .and_then(|s| validate_problem(s, p.constraints.clone()))
                .and_then(|problem| solve_interval(&problem, &options))
        } else if p.constraints.is_empty() {
            maxent_utility_from_assessments(&p.support, &p.assessments, &options)
                .map(|fit| fit.solution)
        } else {
            return fail(
                MaxentStatus::InvalidInput,
                "constraints and assessments cannot both drive a solve",
            );
        };
        match solved {
            Ok(solution) => {
                let bundle = ResultBundle::from_solution(&solution, Base::Natural);
                *out = Box::into_raw(Box::new(MaxentSolution { solution, bundle }));
                MaxentStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `solution` must be null or a handle from `maxent_solve`.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_free(solution: *mut MaxentSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Grid node count; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_node_count(solution: *const MaxentSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.bundle.rows.len())
}

/// Constraint (multiplier) count; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_constraint_count(
    solution: *const MaxentSolution,
) -> usize {
    solution
        .as_ref()
        .map_or(0, |s| s.solution.multipliers().len())
}

/// Entropy in nats; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_entropy(solution: *const MaxentSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.entropy())
}

/// log Z; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_log_partition(solution: *const MaxentSolution) -> f64 {
    solution
        .as_ref()
        .map_or(f64::NAN, |s| s.solution.log_partition())
}

#[derive(Clone, Copy)]
enum Column {
    Nodes,
    Density,
    Curve,
    Gamma,
    Multipliers,
}

unsafe fn copy_column(
    solution: *const MaxentSolution,
    column: Column,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), buf.is_null()) else {
            return fail(MaxentStatus::NullPointer, "null argument");
        };
        let values: Vec<f64> = match column {
            Column::Nodes => s.bundle.rows.iter().map(|r| r.x).collect(),
            Column::Density => s.bundle.rows.iter().map(|r| r.u).collect(),
            Column::Curve => s.bundle.rows.iter().map(|r| r.curve).collect(),
            Column::Gamma => s
                .bundle
                .rows
                .iter()
                .map(|r| r.gamma.unwrap_or(f64::NAN))
                .collect(),
            Column::Multipliers => s.solution.multipliers().to_vec(),
        };
        if len < values.len() {
            return fail(
                MaxentStatus::BufferTooSmall,
                format!("buffer holds {len}, need {}", values.len()),
            );
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        MaxentStatus::Ok
    })
}

/// Grid nodes.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_nodes(
    solution: *const MaxentSolution,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    copy_column(solution, Column::Nodes, buf, len)
}

/// Density (continuous) or mass (discrete) per node.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_density(
    solution: *const MaxentSolution,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    copy_column(solution, Column::Density, buf, len)
}

/// Utility curve U per node (the cumulative mass for discrete supports).
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_curve(
    solution: *const MaxentSolution,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    copy_column(solution, Column::Curve, buf, len)
}

/// Arrow–Pratt risk aversion per node; NaN where undefined.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_gamma(
    solution: *const MaxentSolution,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    copy_column(solution, Column::Gamma, buf, len)
}

/// Lagrange multipliers, one per constraint.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxent_solution_multipliers(
    solution: *const MaxentSolution,
    buf: *mut f64,
    len: usize,
) -> MaxentStatus {
    copy_column(solution, Column::Multipliers, buf, len)
}

/// Shannon entropy of `len` masses, in bits when `base2` is set.
///
/// # Safety
/// `masses` must point to `len` readable doubles; `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn maxent_discrete_entropy(
    masses: *const f64,
    len: usize,
    base2: bool,
    out: *mut f64,
) -> MaxentStatus {
    guard(|| {
        if masses.is_null() || out.is_null() {
            return fail(MaxentStatus::NullPointer, "null argument");
        }
        let p = std::slice::from_raw_parts(masses, len);
        let base = if base2 { Base::Base2 } else { Base::Natural };
        match discrete_entropy(p, base) {
            Ok(v) => {
                *out = v.value;
                MaxentStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// 1/(K−2)!, the volume of admissible utility vectors for K prospects.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn maxent_utility_volume(k: usize, out: *mut f64) -> MaxentStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaxentStatus::NullPointer, "out is null");
        }
        match utility_volume(k) {
            Ok(v) => {
                *out = v;
                MaxentStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
