//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) these dispatch to rayon;
//! without it, or after `set_enabled(false)`, they run sequentially. The
//! runtime switch exists so one binary can benchmark both paths.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(true);

pub fn set_enabled(on: bool) {
    ENABLED.store(on, Ordering::Relaxed);
}

pub fn enabled() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if enabled() {
        return rayon::join(a, b);
    }
    (a(), b())
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if enabled() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Parallel map followed by a reduction with `combine`; `identity` must be
/// a neutral element.
pub fn map_reduce<T, R, F, C, I>(items: &[T], identity: I, f: F, combine: C) -> R
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
    C: Fn(R, R) -> R + Sync + Send,
    I: Fn() -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if enabled() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).reduce(identity, combine);
    }
    items.iter().map(f).fold(identity(), combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let data: Vec<u64> = (0..1000).collect();
        let par = map_reduce(&data, || 0u64, |x| x * x, |a, b| a + b);
        let seq: u64 = data.iter().map(|x| x * x).sum();
        assert_eq!(par, seq);
        assert_eq!(map(&data, |x| x + 1)[999], 1000);
        assert_eq!(join(|| 1, || 2), (1, 2));
    }
}
