/// Monotone simulated wall clock, in simulated seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: f64,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Moves the clock forward to `t`.
    ///
    /// # Panics
    ///
    /// If `t` lies in the past or is not finite.
    pub fn advance_to(&mut self, t: f64) {
        assert!(
            t.is_finite() && t >= self.now,
            "clock cannot move from {} to {t}",
            self.now
        );
        self.now = t;
    }
}
