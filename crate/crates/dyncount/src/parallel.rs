//! Deterministic parallel trial runner.
//!
//! Work is split into fixed-size chunks; workers pull chunks from a shared
//! counter and each chunk's partial result is stored by chunk index. The
//! final reduction walks chunks in order, so the result is bit-identical
//! regardless of the number of threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const CHUNK: usize = 256;

/// Runs `trials` units of work split into fixed chunks. `work` maps a trial
/// index range to a partial result; `fold` combines partials in chunk order.
pub fn run_chunked<R, A>(
    trials: usize,
    threads: Option<usize>,
    work: impl Fn(std::ops::Range<usize>) -> R + Sync,
    init: A,
    mut fold: impl FnMut(A, R) -> A,
) -> A
where
    R: Send,
{
    if trials == 0 {
        return init;
    }
    let n_chunks = trials.div_ceil(CHUNK);
    let threads = threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, n_chunks);

    if threads == 1 {
        let mut acc = init;
        for c in 0..n_chunks {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            acc = fold(acc, work(lo..hi));
        }
        return acc;
    }

    let partials: Mutex<Vec<Option<R>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                if c >= n_chunks {
                    break;
                }
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(trials);
                let r = work(lo..hi);
                partials.lock().unwrap()[c] = Some(r);
            });
        }
    });
    let mut acc = init;
    for r in partials.into_inner().unwrap() {
        acc = fold(acc, r.expect("chunk result missing"));
    }
    acc
}
