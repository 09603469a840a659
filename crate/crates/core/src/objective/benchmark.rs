use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};

// Minimizer of (x^2 - 1)^2 + x/2, i.e. the negative root of 4x^3 - 4x + 1/2.
const DOUBLE_WELL_ARGMIN: f64 = -1.057_453_770_738_377_899_257_807;

/// Two-dimensional multimodal test function with a known global minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkFn {
    name: &'static str,
    lo: f64,
    hi: f64,
    minimizer: [f64; 2],
    minimum: f64,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Rastrigin,
    DoubleWell,
}

impl BenchmarkFn {
    /// `20 + sum(x_i^2 - 10 cos(2 pi x_i))` on `[-5.12, 5.12]^2`; a lattice of
    /// local minima near the integer points and the global minimum 0 at the
    /// origin.
    pub fn rastrigin() -> Self {
        Self {
            name: "rastrigin",
            lo: -5.12,
            hi: 5.12,
            minimizer: [0.0, 0.0],
            minimum: 0.0,
            kind: Kind::Rastrigin,
        }
    }

    /// Tilted double well `h(x) + h(y) - 2 h(x*)` with `h(t) = (t^2 - 1)^2 + t/2`
    /// on `[-2, 2]^2`. Four local minima near `(+-1, +-1)`; the tilt makes
    /// `(x*, x*)` with `x* ~ -1.0575` the unique global minimum, shifted to 0.
    pub fn double_well() -> Self {
        Self {
            name: "double-well",
            lo: -2.0,
            hi: 2.0,
            minimizer: [DOUBLE_WELL_ARGMIN; 2],
            minimum: 0.0,
            kind: Kind::DoubleWell,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "rastrigin" => Ok(Self::rastrigin()),
            "double-well" => Ok(Self::double_well()),
            other => Err(Error::Config(format!("unknown benchmark function '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn minimizer(&self) -> [f64; 2] {
        self.minimizer
    }

    pub fn minimum(&self) -> f64 {
        self.minimum
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.iter().all(|&x| x >= self.lo && x <= self.hi)
    }

    /// Clamps a point onto the domain box.
    pub fn project(&self, w: &mut [f64]) {
        for x in w {
            *x = x.clamp(self.lo, self.hi);
        }
    }

    /// Value and analytic gradient at `w`.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, [f64; 2])> {
        check_len("benchmark point", 2, w.len())?;
        if !self.contains(w) {
            return Err(Error::Domain {
                name: self.name,
                point: [w[0], w[1]],
                lo: self.lo,
                hi: self.hi,
            });
        }
        let (x, y) = (w[0], w[1]);
        Ok(match self.kind {
            Kind::Rastrigin => {
                let term = |t: f64| (t * t - 10.0 * (2.0 * PI * t).cos(), 2.0 * t + 20.0 * PI * (2.0 * PI * t).sin());
                let ((fx, gx), (fy, gy)) = (term(x), term(y));
                (20.0 + (fx + fy), [gx, gy])
            }
            Kind::DoubleWell => {
                let h = |t: f64| ((t * t - 1.0).powi(2) + 0.5 * t, 4.0 * t * (t * t - 1.0) + 0.5);
                let ((fx, gx), (fy, gy)) = (h(x), h(y));
                let base = h(DOUBLE_WELL_ARGMIN).0;
                (fx + fy - 2.0 * base, [gx, gy])
            }
        })
    }
}
