//! Time sources: wall time, or virtual time advanced by simplex work so that
//! runs are reproducible.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

pub trait Clock: Send + Sync {
    /// Seconds since the clock was created.
    fn now(&self) -> f64;
    /// Account for `iterations` simplex pivots of work. No-op for wall time.
    fn charge(&self, iterations: usize);
    /// Wait until `t`: sleep for wall time, jump for virtual time.
    fn idle_until(&self, t: f64);
}

#[derive(Debug, Clone)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn charge(&self, _iterations: usize) {}

    fn idle_until(&self, t: f64) {
        let dt = t - self.now();
        if dt > 0.0 {
            std::thread::sleep(std::time::Duration::from_secs_f64(dt));
        }
    }
}

/// Virtual clock; clones share the same time.
#[derive(Debug, Clone)]
pub struct VirtualClock {
    // f64 bits
    t: Arc<AtomicU64>,
    secs_per_iter: f64,
}

impl VirtualClock {
    pub fn new(secs_per_iter: f64) -> Self {
        assert!(secs_per_iter > 0.0);
        VirtualClock { t: Arc::new(AtomicU64::new(0f64.to_bits())), secs_per_iter }
    }

    pub fn advance(&self, secs: f64) {
        let t = f64::from_bits(self.t.load(Ordering::SeqCst));
        self.t.store((t + secs).to_bits(), Ordering::SeqCst);
    }

    /// Move forward to `t` if it lies in the future.
    pub fn advance_to(&self, t: f64) {
        if t > self.now() {
            self.t.store(t.to_bits(), Ordering::SeqCst);
        }
    }

    pub fn secs_per_iter(&self) -> f64 {
        self.secs_per_iter
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        f64::from_bits(self.t.load(Ordering::SeqCst))
    }

    /// Every charge costs at least one iteration so time always moves.
    fn charge(&self, iterations: usize) {
        self.advance(iterations.max(1) as f64 * self.secs_per_iter);
    }

    fn idle_until(&self, t: f64) {
        self.advance_to(t);
    }
}
