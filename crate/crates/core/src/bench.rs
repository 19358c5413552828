//! Single-thread timing of one knot's dynamics and its derivatives.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use crate::centroidal::{step, step_derivatives};
use crate::check::KnotSampler;
use crate::robot::RobotParams;

/// Mean and standard deviation in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub mean_us: f64,
    pub std_us: f64,
}

impl Timing {
    fn from_samples(us: &[f64]) -> Self {
        let n = us.len() as f64;
        let mean = us.iter().sum::<f64>() / n;
        let var = us.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean_us: mean,
            std_us: var.sqrt(),
        }
    }
}

impl fmt::Display for Timing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2} µs", self.mean_us, self.std_us)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub samples: usize,
    /// Discrete step.
    pub calc: Timing,
    /// Discrete step with analytic derivatives.
    pub calc_diff: Timing,
    /// Sum over all evaluated outputs; depends on the seed only.
    pub checksum: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} samples, seed {}", self.samples, self.seed)?;
        writeln!(f, "  calc      {}", self.calc)?;
        writeln!(f, "  calcDiff  {}", self.calc_diff)?;
        write!(f, "  checksum  {:.17e}", self.checksum)
    }
}

pub fn bench(params: &RobotParams, seed: u64, samples: usize, dt: f64) -> BenchReport {
    let mut sampler = KnotSampler::new(seed);
    let knots: Vec<_> = (0..samples)
        .map(|_| (sampler.state(params), sampler.control()))
        .collect();
    let mut calc = Vec::with_capacity(samples);
    let mut calc_diff = Vec::with_capacity(samples);
    let mut checksum = 0.0;
    for (x, u) in &knots {
        let start = Instant::now();
        let next = black_box(step(black_box(params), black_box(x), black_box(u), dt));
        calc.push(start.elapsed().as_secs_f64() * 1e6);

        let start = Instant::now();
        let d = black_box(step_derivatives(black_box(params), black_box(x), black_box(u), dt));
        calc_diff.push(start.elapsed().as_secs_f64() * 1e6);

        checksum += next.pose.position.sum() + next.v.sum() + next.omega.sum();
        if let Ok(d) = d {
            checksum += d.fx.sum() + d.fu.sum();
        }
    }
    BenchReport {
        seed,
        samples,
        calc: Timing::from_samples(&calc),
        calc_diff: Timing::from_samples(&calc_diff),
        checksum,
    }
}
