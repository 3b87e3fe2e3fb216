//! Replica-level parallelism with deterministic ordering.
//!
//! Work items are indexed; results come back in index order regardless
//! of scheduling, so Monte Carlo runs are reproducible.  The worker
//! count honors the `HEXISO_THREADS` environment variable and falls
//! back to the machine's parallelism.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

pub fn worker_count() -> usize {
    if let Ok(s) = std::env::var("HEXISO_THREADS") {
        if let Ok(n) = s.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Evaluate `f(0..n)` across the worker pool, returning results in
/// index order.
pub fn parallel_map<T, F>(n: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u32) -> T + Sync,
{
    let workers = worker_count().min(n.max(1) as usize);
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicU32::new(0);
    let out: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                out.lock().unwrap()[i as usize] = Some(v);
            });
        }
    });
    out.into_inner()
        .unwrap()
        .into_iter()
        .map(|v| v.expect("every index filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_in_index_order() {
        let got = parallel_map(64, |i| i * i);
        assert_eq!(got, (0..64).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn zero_items() {
        let got: Vec<u32> = parallel_map(0, |i| i);
        assert!(got.is_empty());
    }
}
