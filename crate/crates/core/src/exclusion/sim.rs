//! Event-driven exact simulation.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::{Configuration, ExclusionError, ExclusionSystem, Transition};

/// Partial-sum tree over transition rates.
#[derive(Debug, Clone)]
pub struct RateTree {
    size: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    pub fn new(rates: &[f64]) -> Self {
        let size = rates.len().next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * size];
        nodes[size..size + rates.len()].copy_from_slice(rates);
        for i in (1..size).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { size, nodes }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    pub fn set(&mut self, i: usize, rate: f64) {
        let mut k = self.size + i;
        self.nodes[k] = rate;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Index `i` with `prefix(i) <= u < prefix(i + 1)`, skipping zero-rate leaves.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

/// Receives the exact piecewise-constant path.
pub trait Observer {
    /// `eta` is held on `[from, to)`.
    fn hold(&mut self, eta: &Configuration, from: f64, to: f64);
    /// Called after a jump at time `t` (`eta` is the new state).
    fn jump(&mut self, _t: f64, _transition: Transition, _eta: &Configuration) {}
    /// Called once with the state at the horizon.
    fn finish(&mut self, _eta: &Configuration, _t: f64) {}
}

impl Observer for () {
    fn hold(&mut self, _: &Configuration, _: f64, _: f64) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn hold(&mut self, eta: &Configuration, from: f64, to: f64) {
        self.0.hold(eta, from, to);
        self.1.hold(eta, from, to);
    }
    fn jump(&mut self, t: f64, tr: Transition, eta: &Configuration) {
        self.0.jump(t, tr, eta);
        self.1.jump(t, tr, eta);
    }
    fn finish(&mut self, eta: &Configuration, t: f64) {
        self.0.finish(eta, t);
        self.1.finish(eta, t);
    }
}

/// Records the configuration at fixed observation times (each in `[0, horizon]`).
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
}

impl Snapshots {
    pub fn new(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        Self { times, states: Vec::new() }
    }
}

impl Observer for Snapshots {
    fn hold(&mut self, eta: &Configuration, _from: f64, to: f64) {
        while self.states.len() < self.times.len() && self.times[self.states.len()] < to {
            self.states.push(eta.clone());
        }
    }
    fn finish(&mut self, eta: &Configuration, _t: f64) {
        while self.states.len() < self.times.len() {
            self.states.push(eta.clone());
        }
    }
}

/// Time integral of a function of the configuration.
pub struct Integral<F: Fn(&Configuration) -> f64> {
    pub f: F,
    pub value: f64,
}

impl<F: Fn(&Configuration) -> f64> Integral<F> {
    pub fn new(f: F) -> Self {
        Self { f, value: 0.0 }
    }
}

impl<F: Fn(&Configuration) -> f64> Observer for Integral<F> {
    fn hold(&mut self, eta: &Configuration, from: f64, to: f64) {
        self.value += (self.f)(eta) * (to - from);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Present when event recording was requested.
    pub events: Option<Vec<Event>>,
    pub event_count: u64,
    pub initial: Configuration,
    pub final_state: Configuration,
    pub horizon: f64,
    /// True if the process reached a configuration with no active transition.
    pub absorbed: bool,
}

impl Trajectory {
    /// Configuration at time `t`, rebuilt from the event log.
    pub fn state_at(&self, t: f64) -> Option<Configuration> {
        let events = self.events.as_ref()?;
        let mut eta = self.initial.clone();
        for e in events.iter().take_while(|e| e.time <= t) {
            match e.transition {
                Transition::Swap(x, y) => eta.swap(x, y),
                Transition::Flip(a) => eta.flip(a),
            }
        }
        Some(eta)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Speed-up factor multiplying every rate.
    pub time_scale: f64,
    pub horizon: f64,
    pub record_events: bool,
}

/// Runs one trajectory from `eta0` and streams the path to `observer`.
pub fn simulate<R: Rng + ?Sized, O: Observer + ?Sized>(
    sys: &ExclusionSystem,
    eta0: &Configuration,
    opts: SimOptions,
    observer: &mut O,
    rng: &mut R,
) -> Result<Trajectory, ExclusionError> {
    if !(opts.time_scale > 0.0 && opts.time_scale.is_finite()) {
        return Err(ExclusionError::InvalidParameter(format!("time scale {}", opts.time_scale)));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(ExclusionError::InvalidParameter(format!("horizon {}", opts.horizon)));
    }
    if eta0.len() != sys.n_sites() {
        return Err(ExclusionError::InvalidParameter("configuration length differs from site count".into()));
    }
    let mut eta = eta0.clone();
    let rates: Vec<f64> = (0..sys.transition_count()).map(|i| sys.rate(i, &eta)).collect();
    let mut tree = RateTree::new(&rates);
    let mut events = opts.record_events.then(Vec::new);
    let mut t = 0.0;
    let mut count = 0u64;
    let mut absorbed = false;
    loop {
        let total = tree.total();
        if total <= 0.0 {
            absorbed = true;
            observer.hold(&eta, t, opts.horizon);
            break;
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / (total * opts.time_scale);
        let next = t + wait;
        if next >= opts.horizon {
            observer.hold(&eta, t, opts.horizon);
            break;
        }
        observer.hold(&eta, t, next);
        let u = rng.random::<f64>() * total;
        let i = tree.find(u);
        let transition = sys.transition(i);
        sys.apply(i, &mut eta);
        let sites: &[usize] = match transition {
            Transition::Swap(x, y) => &[x, y],
            Transition::Flip(a) => &[a],
        };
        for &s in sites {
            for &j in sys.touching(s) {
                tree.set(j, sys.rate(j, &eta));
            }
        }
        t = next;
        count += 1;
        observer.jump(t, transition, &eta);
        if let Some(log) = events.as_mut() {
            log.push(Event { time: t, transition });
        }
    }
    observer.finish(&eta, opts.horizon);
    Ok(Trajectory { events, event_count: count, initial: eta0.clone(), final_state: eta, horizon: opts.horizon, absorbed })
}
