//! Numerical toolkit for spacelike 2-surfaces (and zonal `(n-1)`-surfaces)
//! lying in standard null cones of static spherically symmetric spacetimes.
//!
//! Modules follow the geometry bottom-up: warping models and coordinates,
//! spectral calculus on the round sphere, null-cone surfaces and their
//! frames, a finite-difference curvature oracle, the linearized
//! constant-null-normal operator with its kernel, and the constant-|H|²
//! solver with conformal-geometry identities.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cmc;
pub mod curvature;
pub mod error;
pub mod quadrature;
pub mod report;
pub mod rigidity;
pub mod spacetime;
pub mod sphere;
pub mod surface;
pub mod verify;
pub mod zonal;

pub use error::{Error, Result};
pub use spacetime::{ModelDescriptor, ModelKind, WarpingModel};

/// Worker threads for parallel loops: `NULLCONE_THREADS` if set, else the
/// available parallelism.
pub fn thread_count() -> usize {
    std::env::var("NULLCONE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Applies `f` to every index in `0..n` on up to [`thread_count`] threads,
/// preserving order.
pub(crate) fn parallel_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = thread_count().min(n.max(1));
    if threads <= 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                s.spawn(move || (t * chunk..((t + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
