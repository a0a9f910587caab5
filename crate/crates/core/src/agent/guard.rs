use crate::time::SimTime;

const UNIT: u128 = 1_000_000_000;

/// Token bucket with exact integer accounting: one token is 10^9 units and
/// refill adds `rate` units per elapsed nanosecond.
#[derive(Debug, Clone)]
pub(crate) struct TokenBucket {
    rate_per_sec: u128,
    capacity: u128,
    units: u128,
    last: SimTime,
}

impl TokenBucket {
    /// Starts full.
    pub(crate) fn new(rate_per_sec: u32, burst: u32, now: SimTime) -> Self {
        let capacity = u128::from(burst.max(1)) * UNIT;
        TokenBucket {
            rate_per_sec: u128::from(rate_per_sec),
            capacity,
            units: capacity,
            last: now,
        }
    }

    pub(crate) fn try_take(&mut self, now: SimTime) -> bool {
        if now > self.last {
            let elapsed = u128::from(now.as_nanos() - self.last.as_nanos());
            self.units = (self.units + elapsed * self.rate_per_sec).min(self.capacity);
            self.last = now;
        }
        if self.units >= UNIT {
            self.units -= UNIT;
            true
        } else {
            false
        }
    }
}
