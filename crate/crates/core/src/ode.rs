//! Classical fixed-step fourth-order Runge-Kutta.

/// Position of an evaluation inside one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Mid,
    End,
}

impl Stage {
    pub fn fraction(self) -> f64 {
        match self {
            Stage::Start => 0.0,
            Stage::Mid => 0.5,
            Stage::End => 1.0,
        }
    }
}

/// Upper bound on the state dimension handled without allocation.
pub const MAX_DIM: usize = 4;

/// Advances `y` by one step of size `dt`. The rate callback receives the
/// stage, the stage state and an output slice for dy/dt.
pub fn rk4_step<F>(y: &mut [f64], dt: f64, mut rate: F)
where
    F: FnMut(Stage, &[f64], &mut [f64]),
{
    let n = y.len();
    assert!(n <= MAX_DIM, "state dimension {n} exceeds {MAX_DIM}");
    let mut k1 = [0.0; MAX_DIM];
    let mut k2 = [0.0; MAX_DIM];
    let mut k3 = [0.0; MAX_DIM];
    let mut k4 = [0.0; MAX_DIM];
    let mut tmp = [0.0; MAX_DIM];

    rate(Stage::Start, y, &mut k1[..n]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    rate(Stage::Mid, &tmp[..n], &mut k2[..n]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    rate(Stage::Mid, &tmp[..n], &mut k3[..n]);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    rate(Stage::End, &tmp[..n], &mut k4[..n]);
    for i in 0..n {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}
