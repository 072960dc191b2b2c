//! Random Waypoint mobility.
//!
//! A user pauses, then picks a uniform destination in the rectangle and a
//! uniform speed in `[v_min, v_max]`, and travels there in a straight line.
//! The heading is the bearing from the current position to the destination.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.random_range(0.0..=self.width), rng.random_range(0.0..=self.height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub bounds: Bounds,
    pub v_min: f64,
    pub v_max: f64,
    pub pause_s: f64,
}

impl MobilityParams {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            bounds: Bounds {
                width: cfg.area_width_m,
                height: cfg.area_height_m,
            },
            v_min: cfg.v_min_mps,
            v_max: cfg.v_max_mps,
            pause_s: cfg.pause_s,
        }
    }

    fn draw_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.v_max > self.v_min {
            rng.random_range(self.v_min..=self.v_max)
        } else {
            self.v_min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Moving,
    Paused,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    pub position: Point,
    pub destination: Point,
    pub speed: f64,
    pub pause_remaining: f64,
    pub phase: Phase,
}

impl MobilityState {
    /// Uniform initial position, starting with a full pause.
    pub fn initial<R: Rng + ?Sized>(params: &MobilityParams, rng: &mut R) -> Self {
        let position = params.bounds.sample(rng);
        Self {
            position,
            destination: position,
            speed: 0.0,
            pause_remaining: params.pause_s,
            phase: Phase::Paused,
        }
    }

    /// Heading towards the destination, in radians.
    pub fn heading(&self) -> f64 {
        (self.destination.y - self.position.y).atan2(self.destination.x - self.position.x)
    }
}

/// Advances one user by `dt` seconds.
pub fn step_waypoint<R: Rng + ?Sized>(
    state: MobilityState,
    dt: f64,
    params: &MobilityParams,
    rng: &mut R,
) -> MobilityState {
    debug_assert!(dt > 0.0);
    let mut next = state;
    match state.phase {
        Phase::Paused => {
            next.pause_remaining -= dt;
            if next.pause_remaining <= 0.0 {
                next.pause_remaining = 0.0;
                next.destination = params.bounds.sample(rng);
                next.speed = params.draw_speed(rng);
                next.phase = Phase::Moving;
            }
        }
        Phase::Moving => {
            let remaining = state.position.distance(state.destination);
            let travel = state.speed * dt;
            if travel >= remaining {
                next.position = state.destination;
                next.phase = Phase::Paused;
                next.pause_remaining = params.pause_s;
            } else {
                let theta = state.heading();
                next.position = params.bounds.clamp(Point::new(
                    state.position.x + travel * theta.cos(),
                    state.position.y + travel * theta.sin(),
                ));
            }
        }
    }
    next
}

/// Positions of the PU and every SU during one sensing period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    pub pu: Point,
    pub sus: Vec<Point>,
}

impl Positions {
    pub fn distances(&self) -> Vec<f64> {
        self.sus.iter().map(|s| s.distance(self.pu)).collect()
    }
}

/// Simulates the PU and `su_count` SUs for `periods` sensing periods. Entry
/// `u` holds the positions during period `u`; the first period uses the
/// initial placement.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    params: &MobilityParams,
    su_count: usize,
    periods: usize,
    dt: f64,
    rng: &mut R,
) -> Vec<Positions> {
    let mut users: Vec<MobilityState> = (0..=su_count).map(|_| MobilityState::initial(params, rng)).collect();
    let mut out = Vec::with_capacity(periods);
    for _ in 0..periods {
        out.push(Positions {
            pu: users[0].position,
            sus: users[1..].iter().map(|u| u.position).collect(),
        });
        for u in users.iter_mut() {
            *u = step_waypoint(*u, dt, params, rng);
        }
    }
    out
}
