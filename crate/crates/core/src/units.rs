//! Time units. The event loop runs on integer nanoseconds; trace and
//! receiver APIs speak milliseconds.

/// Simulation time in nanoseconds.
pub type Nanos = u64;

pub const NANOS_PER_MICRO: Nanos = 1_000;
pub const NANOS_PER_MILLI: Nanos = 1_000_000;
pub const NANOS_PER_SEC: Nanos = 1_000_000_000;

/// Milliseconds to nanoseconds, rounded to the nearest tick.
pub fn ms_to_ns(ms: f64) -> Nanos {
    (ms * 1e6).round() as Nanos
}

/// Microseconds to nanoseconds, rounded to the nearest tick.
pub fn us_to_ns(us: f64) -> Nanos {
    (us * 1e3).round() as Nanos
}

pub fn ns_to_ms(ns: Nanos) -> f64 {
    ns as f64 / 1e6
}

pub fn ns_to_secs(ns: Nanos) -> f64 {
    ns as f64 / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_on_typical_grid() {
        assert_eq!(ms_to_ns(100.0), 100 * NANOS_PER_MILLI);
        assert_eq!(ms_to_ns(16.67), 16_670_000);
        assert_eq!(ns_to_ms(16_670_000), 16.67);
        assert_eq!(us_to_ns(58.0), 58_000);
    }
}
