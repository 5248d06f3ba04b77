use std::cell::Cell;
use std::time::Instant;

/// Time source for a single solve. `on_lp_solve` is called after every LP
/// relaxation solved on behalf of the solve, including strong-branching
/// probes, so a deterministic clock can charge a fixed cost per LP.
pub trait Clock {
    /// Seconds since the start of the solve.
    fn now(&self) -> f64;
    fn on_lp_solve(&self) {}
    fn label(&self) -> &'static str;
}

pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn label(&self) -> &'static str {
        "wall"
    }
}

/// Advances a fixed step (1 ms by default) per LP solve and never otherwise.
pub struct FakeClock {
    ticks: Cell<u64>,
    step: f64,
}

impl FakeClock {
    pub fn new() -> Self {
        Self::with_step(1e-3)
    }

    pub fn with_step(step: f64) -> Self {
        Self { ticks: Cell::new(0), step }
    }

    pub fn ticks(&self) -> u64 {
        self.ticks.get()
    }
}

impl Default for FakeClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for FakeClock {
    fn now(&self) -> f64 {
        self.ticks.get() as f64 * self.step
    }

    fn on_lp_solve(&self) {
        self.ticks.set(self.ticks.get() + 1);
    }

    fn label(&self) -> &'static str {
        "fake"
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    #[default]
    Wall,
    Fake,
}

impl ClockKind {
    pub fn label(self) -> &'static str {
        match self {
            ClockKind::Wall => "wall",
            ClockKind::Fake => "fake",
        }
    }

    pub fn make(self) -> Box<dyn Clock> {
        match self {
            ClockKind::Wall => Box::new(WallClock::start()),
            ClockKind::Fake => Box::new(FakeClock::new()),
        }
    }
}
