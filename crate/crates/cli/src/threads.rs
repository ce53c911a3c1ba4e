use std::num::NonZeroUsize;
use std::thread;

pub const THREADS_ENV: &str = "INTRAGEN_THREADS";

/// Worker threads: `INTRAGEN_THREADS` when it is a positive integer,
/// otherwise the machine's available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<NonZeroUsize>().ok())
        .or_else(|| thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get)
}

/// Applies `f` to every index in `0..n` on up to `threads` workers; results
/// come back in index order regardless of scheduling.
pub fn parallel_map<R: Send>(n: usize, threads: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let f = &f;
                s.spawn(move || (w..n).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every index computed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_thread_count() {
        let one = parallel_map(37, 1, |i| i * i);
        for t in [2, 3, 8, 64] {
            assert_eq!(parallel_map(37, t, |i| i * i), one);
        }
        assert!(parallel_map(0, 4, |i| i).is_empty());
    }
}
