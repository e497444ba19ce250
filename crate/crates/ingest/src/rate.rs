use std::sync::Mutex;
use std::time::{Duration, Instant};

pub const DEFAULT_REQUESTS_PER_SECOND: f64 = 8.0;

/// Token bucket shared by all requests of a client.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    /// `per_second` tokens refill each second, up to a burst of `capacity`.
    pub fn new(per_second: f64, capacity: f64) -> Self {
        assert!(
            per_second > 0.0 && capacity >= 1.0,
            "rate limiter needs a positive rate and capacity >= 1"
        );
        RateLimiter {
            capacity,
            per_second,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn per_second(per_second: f64) -> Self {
        Self::new(per_second, 1.0)
    }

    /// Time to wait before a token is available, taking it if there is none to wait for.
    fn reserve(&self) -> Duration {
        let mut state = self.state.lock().expect("rate limiter lock");
        let now = Instant::now();
        let (tokens, last) = *state;
        let refilled = (tokens + now.duration_since(last).as_secs_f64() * self.per_second).min(self.capacity);
        let remaining = refilled - 1.0;
        *state = (remaining, now);
        if remaining >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-remaining / self.per_second)
        }
    }

    /// Blocks until a request may be issued.
    pub fn acquire(&self) {
        let wait = self.reserve();
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

impl Default for RateLimiter {
    fn default() -> Self {
        Self::per_second(DEFAULT_REQUESTS_PER_SECOND)
    }
}
