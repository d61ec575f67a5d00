//! Worker-thread budget for stage-internal parallelism.

/// Number of worker threads to use: the machine's available parallelism,
/// capped by the `REPFORGE_THREADS` environment variable when it holds a
/// positive integer. Unset or unparsable values leave the cap off.
pub fn worker_threads() -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("REPFORGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(usize::MAX);
    available.min(cap).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_threads_is_positive() {
        assert!(worker_threads() >= 1);
    }
}
