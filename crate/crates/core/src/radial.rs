//! Closed-form radial solutions of `-(1/r)(r u')' = f(r)` on a disk of radius
//! `R` with `u(R) = 0`, for `f` piecewise constant on concentric rings.
//!
//! On ring `k` the solution is `u(r) = a_k + b_k ln r - f_k r^2 / 4`. Flux
//! continuity fixes `b_k` by forward integration of `r u'` from the center
//! (`b_0 = 0` for regularity); the boundary condition and continuity of `u`
//! then fix `a_k` from the outside in.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialConfig {
    radius: f64,
    /// `(outer_radius, f_value)` ordered from the center outwards.
    rings: Vec<(f64, f64)>,
}

impl RadialConfig {
    pub fn new(rings: Vec<(f64, f64)>) -> Result<Self> {
        let radius = rings.last().ok_or(Error::InvalidRings)?.0;
        let mut prev = 0.0;
        for &(r, f) in &rings {
            if !(r > prev) || !r.is_finite() {
                return Err(Error::InvalidRings);
            }
            if !f.is_finite() || f < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "ring value {f} must be finite and non-negative"
                )));
            }
            prev = r;
        }
        Ok(RadialConfig { radius, rings })
    }

    /// Two rings: `inner` up to radius `split`, `outer` from there to `radius`.
    pub fn two_rings(split: f64, inner: f64, radius: f64, outer: f64) -> Result<Self> {
        Self::new(vec![(split, inner), (radius, outer)])
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rings(&self) -> &[(f64, f64)] {
        &self.rings
    }

    /// Value of `f` at radius `r` (inner ring wins on an interface).
    pub fn f_at(&self, r: f64) -> f64 {
        self.rings
            .iter()
            .find(|&&(outer, _)| r <= outer)
            .map_or(0.0, |&(_, f)| f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingCoefficients {
    pub inner: f64,
    pub outer: f64,
    pub f: f64,
    pub a: f64,
    pub b: f64,
}

impl RingCoefficients {
    fn u(&self, r: f64) -> f64 {
        let log_term = if self.b == 0.0 { 0.0 } else { self.b * r.ln() };
        self.a + log_term - self.f * r * r / 4.0
    }

    /// `r u'(r)`
    fn flux(&self, r: f64) -> f64 {
        self.b - self.f * r * r / 2.0
    }

    /// `∫ r u(r) dr` over `[inner, outer]`.
    fn moment(&self) -> f64 {
        let prim = |r: f64| {
            let log_part = if r > 0.0 && self.b != 0.0 {
                self.b * (0.5 * r * r * r.ln() - 0.25 * r * r)
            } else {
                0.0
            };
            0.5 * self.a * r * r + log_part - self.f * r.powi(4) / 16.0
        };
        prim(self.outer) - prim(self.inner)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub rings: Vec<RingCoefficients>,
    pub psi: f64,
}

pub fn radial_solve(config: &RadialConfig) -> RadialSolution {
    let mut rings = Vec::with_capacity(config.rings.len());
    let mut inner = 0.0;
    // enclosed "mass" ∫_0^r f s ds at the current inner radius
    let mut enclosed = 0.0;
    for &(outer, f) in &config.rings {
        // r u' = -enclosed(r) = b - f r^2/2  with enclosed(r) = enclosed + f (r^2 - inner^2)/2
        let b = -enclosed + f * inner * inner / 2.0;
        rings.push(RingCoefficients {
            inner,
            outer,
            f,
            a: 0.0,
            b,
        });
        enclosed += f * (outer * outer - inner * inner) / 2.0;
        inner = outer;
    }
    rings[0].b = 0.0;
    let mut boundary_value = 0.0;
    for ring in rings.iter_mut().rev() {
        // a so that u(outer) equals the value imposed from outside
        ring.a = 0.0;
        ring.a = boundary_value - ring.u(ring.outer);
        // ring 0 starts at r = 0 where b = 0, so u(0) = a
        boundary_value = ring.u(ring.inner);
    }
    let mut solution = RadialSolution { rings, psi: 0.0 };
    solution.psi = radial_psi(&solution);
    solution
}

/// `Ψ = Σ_k f_k ∫ 2π r u(r) dr` from the exact antiderivatives.
pub fn radial_psi(solution: &RadialSolution) -> f64 {
    solution
        .rings
        .iter()
        .map(|ring| ring.f * 2.0 * PI * ring.moment())
        .sum()
}

pub fn radial_eval(solution: &RadialSolution, r: f64) -> Result<f64> {
    let radius = solution.rings.last().map_or(0.0, |g| g.outer);
    if !(0.0..=radius).contains(&r) {
        return Err(Error::RadiusOutOfRange { r, radius });
    }
    let ring = solution
        .rings
        .iter()
        .find(|g| r <= g.outer)
        .expect("r within radius");
    Ok(ring.u(r))
}

impl RadialSolution {
    pub fn eval(&self, r: f64) -> Result<f64> {
        radial_eval(self, r)
    }

    /// Jumps of `r u'` across each interface.
    pub fn flux_jumps(&self) -> Vec<f64> {
        self.rings
            .windows(2)
            .map(|w| w[1].flux(w[0].outer) - w[0].flux(w[0].outer))
            .collect()
    }

    /// Jumps of `u` across each interface.
    pub fn value_jumps(&self) -> Vec<f64> {
        self.rings
            .windows(2)
            .map(|w| w[1].u(w[0].outer) - w[0].u(w[0].outer))
            .collect()
    }

    /// `r,u` samples for plotting.
    pub fn samples_csv(&self, n: usize) -> String {
        use std::fmt::Write as _;
        let radius = self.rings.last().map_or(0.0, |g| g.outer);
        let mut out = String::from("r,u\n");
        for k in 0..=n {
            let r = radius * k as f64 / n as f64;
            let u = self.eval(r).unwrap_or(0.0);
            let _ = writeln!(
                out,
                "{},{}",
                crate::output::fmt_f64(r),
                crate::output::fmt_f64(u)
            );
        }
        out
    }
}
