//! Scenario-file front end for the `nsbem` solver.

pub mod config;
pub mod run;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "NSBEM_THREADS";

/// Applies `NSBEM_THREADS` (if set) to rayon and faer. Call once, before any
/// parallel work.
pub fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got '{v}'")
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
    Ok(())
}
