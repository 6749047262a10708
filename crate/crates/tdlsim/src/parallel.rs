//! Thread-pooled shard execution with a deterministic merge.
//!
//! Shard results are collected into slots indexed by shard number and
//! merged in shard order, so the number of worker threads only changes
//! scheduling, never the result. `TDLSIM_THREADS` overrides the default
//! worker count (the machine's available parallelism).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use tdlsim_core::{
    density_shard, interval_shard, shard_layout, shard_seed, Calibration, DensityRun,
    IntervalAccum, PreparedTdc,
};

use crate::commands::CliError;

/// Worker threads to use: `TDLSIM_THREADS` when set, otherwise the
/// machine's available parallelism.
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("TDLSIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!(
                "TDLSIM_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Err(e) => Err(CliError::Config(format!("TDLSIM_THREADS: {e}"))),
    }
}

/// Runs `job(0..n_jobs)` on up to `threads` workers and returns the
/// results in job order.
fn run_jobs<T, F>(n_jobs: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let slots: Vec<Mutex<Option<T>>> = (0..n_jobs).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.min(n_jobs).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_jobs {
                    break;
                }
                let out = job(i);
                *slots[i].lock().expect("worker never panics holding the slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("no poisoned slots").expect("every job ran"))
        .collect()
}

/// Parallel code density run. Equivalent to
/// [`tdlsim_core::code_density_run`] bit for bit: same shard layout, same
/// per-shard seeds, merged in shard order.
pub fn density_run(
    tdc: &PreparedTdc,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<DensityRun, CliError> {
    let layout = shard_layout(samples);
    if layout.is_empty() {
        return Err(CliError::Config("samples must be positive".into()));
    }
    let mut shards = run_jobs(layout.len(), threads, |i| {
        density_shard(tdc, layout[i], shard_seed(seed, i as u64))
    })
    .into_iter();
    let mut acc = shards.next().expect("at least one shard");
    for s in shards {
        acc.merge(&s);
    }
    Ok(acc)
}

/// Parallel interval sweep. Equivalent to
/// [`tdlsim_core::time_interval_run`] bit for bit: jobs are (interval,
/// shard) pairs with the serial run's stream seeds, merged per interval
/// in shard order.
pub fn interval_run(
    tdc: &PreparedTdc,
    cal: &Calibration,
    settings: &tdlsim_core::IntervalSettings,
    seed: u64,
    threads: usize,
) -> Result<tdlsim_core::IntervalResult, CliError> {
    cal.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if settings.steps == 0 || settings.reps == 0 {
        return Err(CliError::Config("interval sweep needs steps and reps".into()));
    }
    let layout = shard_layout(settings.reps);
    let per_interval = layout.len();
    let n_jobs = settings.steps * per_interval;
    let accums = run_jobs(n_jobs, threads, |idx| {
        let i = idx / per_interval;
        let j = idx % per_interval;
        let true_interval = settings.start + i as f64 * settings.step;
        interval_shard(
            tdc,
            cal,
            true_interval,
            layout[j],
            shard_seed(seed, (i * per_interval + j) as u64),
        )
    });
    let mut rows = Vec::with_capacity(settings.steps);
    for i in 0..settings.steps {
        let mut acc = IntervalAccum::default();
        for j in 0..per_interval {
            acc.merge(&accums[i * per_interval + j]);
        }
        let true_interval = settings.start + i as f64 * settings.step;
        rows.push(tdlsim_core::experiment::row_from_accum(true_interval, &acc));
    }
    let stds: Vec<f64> = rows.iter().filter(|r| r.shots > 0).map(|r| r.std_dev).collect();
    let (rms_resolution, sigma_rms) = tdlsim_core::rms_resolution(&stds)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(tdlsim_core::IntervalResult { rows, rms_resolution, sigma_rms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdlsim_core::{code_density_run, time_interval_run, DelayLineConfig, TdcSystem, Variant};

    fn system() -> PreparedTdc {
        let mut sys = TdcSystem::new(
            DelayLineConfig {
                num_carry8: 4,
                mismatch_sigma: 0.8,
                seed: 5,
                element_jitter_sigma: 0.2,
                ..DelayLineConfig::default()
            },
            Variant::Plain,
        );
        sys.sigma_clk = 3.0;
        sys.prepare().unwrap()
    }

    #[test]
    fn threaded_density_matches_serial_exactly() {
        let tdc = system();
        let samples = tdlsim_core::SHARD_SHOTS * 3 + 1234;
        let serial = code_density_run(&tdc, samples, 17);
        for threads in [1, 2, 7] {
            let par = density_run(&tdc, samples, 17, threads).unwrap();
            assert_eq!(par, serial);
        }
    }

    #[test]
    fn threaded_interval_matches_serial_exactly() {
        let tdc = system();
        let cal = tdlsim_core::ground_truth_calibration(&tdc).unwrap();
        let settings = tdlsim_core::IntervalSettings {
            start: 10.0,
            step: 13.0,
            steps: 4,
            reps: tdlsim_core::SHARD_SHOTS + 999,
        };
        let serial = time_interval_run(&tdc, &cal, &settings, 23).unwrap();
        for threads in [1, 3] {
            let par = interval_run(&tdc, &cal, &settings, 23, threads).unwrap();
            assert_eq!(par, serial);
        }
    }
}
