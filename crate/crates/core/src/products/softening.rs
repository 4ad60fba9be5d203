use serde::{Deserialize, Serialize};

use super::ProductError;

/// Sampling density of softened profiles (points per unit return).
const SAMPLES_PER_UNIT: usize = 10_000;
/// Slack on hull membership; keeps rounding noise from creating convex kinks.
const HULL_SLACK: f64 = 1e-13;
/// Arcs are built this fraction under the gamma bound so rounding in the
/// samples cannot push second differences above it.
const GAMMA_SHADE: f64 = 1e-7;

/// Bounds on payoff slope (delta) and slope change per unit return (gamma).
/// `None` leaves the corresponding bound off.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SofteningPolicy {
    #[serde(default)]
    pub max_delta: Option<f64>,
    #[serde(default)]
    pub max_gamma: Option<f64>,
}

impl SofteningPolicy {
    pub fn new(max_delta: Option<f64>, max_gamma: Option<f64>) -> Result<Self, ProductError> {
        let p = Self { max_delta, max_gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        for (name, v) in [("max_delta", self.max_delta), ("max_gamma", self.max_gamma)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(ProductError::Invalid(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_unbounded(&self) -> bool {
        self.max_delta.is_none() && self.max_gamma.is_none()
    }
}

/// Breakpoint of a piecewise-linear payoff. The payoff equals `right` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

/// Piecewise-linear terminal payoff in the underlying's return, with jumps
/// allowed at knots and linear extension beyond the outer knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    knots: Vec<Knot>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<Knot>, left_slope: f64, right_slope: f64) -> Result<Self, ProductError> {
        if knots.is_empty() {
            return Err(ProductError::Invalid("profile needs at least one knot".into()));
        }
        if knots.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(ProductError::Invalid("profile knots must be strictly increasing".into()));
        }
        Ok(Self {
            knots,
            left_slope,
            right_slope,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            knots: vec![Knot { x: 1.0, left: c, right: c }],
            left_slope: 0.0,
            right_slope: 0.0,
        }
    }

    pub fn put(strike: f64) -> Self {
        Self {
            knots: vec![Knot { x: strike, left: 0.0, right: 0.0 }],
            left_slope: -1.0,
            right_slope: 0.0,
        }
    }

    pub fn call(strike: f64) -> Self {
        Self {
            knots: vec![Knot { x: strike, left: 0.0, right: 0.0 }],
            left_slope: 0.0,
            right_slope: 1.0,
        }
    }

    /// Pays `leverage` strictly below the strike.
    pub fn digital_put(strike: f64, leverage: f64) -> Self {
        Self {
            knots: vec![Knot { x: strike, left: leverage, right: 0.0 }],
            left_slope: 0.0,
            right_slope: 0.0,
        }
    }

    /// Pays `leverage` at or above the strike.
    pub fn digital_call(strike: f64, leverage: f64) -> Self {
        Self {
            knots: vec![Knot { x: strike, left: 0.0, right: leverage }],
            left_slope: 0.0,
            right_slope: 0.0,
        }
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            knots: self
                .knots
                .iter()
                .map(|k| Knot { x: k.x, left: a * k.left, right: a * k.right })
                .collect(),
            left_slope: a * self.left_slope,
            right_slope: a * self.right_slope,
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut xs: Vec<f64> = self.knots.iter().chain(&other.knots).map(|k| k.x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let knots = xs
            .into_iter()
            .map(|x| Knot {
                x,
                left: self.left_limit(x) + other.left_limit(x),
                right: self.value(x) + other.value(x),
            })
            .collect();
        Self {
            knots,
            left_slope: self.left_slope + other.left_slope,
            right_slope: self.right_slope + other.right_slope,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let first = self.knots[0];
        if x < first.x {
            return first.left + self.left_slope * (x - first.x);
        }
        let k = self.knots.partition_point(|k| k.x <= x) - 1;
        let a = self.knots[k];
        if x == a.x {
            return a.right;
        }
        match self.knots.get(k + 1) {
            Some(b) => a.right + (b.left - a.right) * (x - a.x) / (b.x - a.x),
            None => a.right + self.right_slope * (x - a.x),
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self.knots.iter().find(|k| k.x == x) {
            Some(k) => k.left,
            None => self.value(x),
        }
    }
}

/// Payoff tabulated on a uniform return grid from zero, linear in between,
/// flat below zero and extended with `right_slope` past the last sample.
/// Never evaluates below `floor`, the profile it was derived from, so
/// interpolation rounding cannot break dominance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    samples_per_unit: usize,
    values: Vec<f64>,
    right_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor: Option<Box<PayoffProfile>>,
}

impl SampledProfile {
    fn x(&self, i: usize) -> f64 {
        i as f64 / self.samples_per_unit as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn value(&self, x: f64) -> f64 {
        let v = self.interpolate(x);
        match &self.floor {
            Some(f) => v.max(f.value(x)),
            None => v,
        }
    }

    fn interpolate(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        let pos = x * self.samples_per_unit as f64;
        if pos >= last as f64 {
            return self.values[last] + self.right_slope * (x - self.x(last));
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            (1.0 - w) * self.values[i] + w * self.values[i + 1]
        }
    }
}

/// Terminal payoff as a function of the return `S_T / S_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PayoffProfile {
    Piecewise(PiecewiseLinear),
    Sampled(SampledProfile),
}

impl PayoffProfile {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Piecewise(p) => p.value(x),
            Self::Sampled(s) => s.value(x),
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        match self {
            Self::Piecewise(p) => p.left_limit(x),
            Self::Sampled(s) => s.value(x),
        }
    }

    fn right_slope(&self) -> f64 {
        match self {
            Self::Piecewise(p) => p.right_slope,
            Self::Sampled(s) => s.right_slope,
        }
    }
}

impl From<PiecewiseLinear> for PayoffProfile {
    fn from(p: PiecewiseLinear) -> Self {
        Self::Piecewise(p)
    }
}

/// Smallest profile above `payoff` with `|slope| ≤ max_delta` and
/// `slope change per unit return ≤ max_gamma`.
///
/// Jumps turn into ramps of width `jump / max_delta` on the side that keeps
/// the result above the input; convex kinks turn into parabolic blends of
/// curvature `max_gamma`. The delta bound is the sup-convolution
/// `sup_y f(y) − M|x − y|`; the gamma bound is the concave envelope of
/// `g − Γx²/2` shifted back by `Γx²/2`. Both are taken on a 1e-4 return grid
/// holding every knot. Concave kinks are left in place: they do not add to
/// the short-gamma of the desk paying the profile.
///
/// A right tail steeper than `max_delta` keeps its slope past the grid.
pub fn soften(payoff: &PayoffProfile, policy: &SofteningPolicy) -> PayoffProfile {
    if policy.is_unbounded() {
        return payoff.clone();
    }
    let n_per = SAMPLES_PER_UNIT;
    let x_max = match payoff {
        PayoffProfile::Sampled(s) => s.x_max(),
        PayoffProfile::Piecewise(p) => (p.knots[p.knots.len() - 1].x + 1.0).max(3.0).ceil(),
    };
    let n = (x_max as usize) * n_per + 1;
    let h = 1.0 / n_per as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n_per as f64).collect();

    let mut g: Vec<f64> = xs.iter().map(|&x| payoff.value(x).max(payoff.left_limit(x))).collect();
    if let PayoffProfile::Piecewise(p) = payoff {
        // Knots strictly between samples: lift both neighbours to the local max.
        for k in &p.knots {
            if !(k.x > 0.0 && k.x < x_max) {
                continue;
            }
            let i = (k.x * n_per as f64).floor() as usize;
            if xs[i] == k.x || i + 1 >= n {
                continue;
            }
            let m = g[i].max(g[i + 1]).max(k.left).max(k.right);
            g[i] = m;
            g[i + 1] = m;
        }
    }

    if let Some(m) = policy.max_delta {
        let step = m * h;
        for i in 1..n {
            g[i] = g[i].max(g[i - 1] - step);
        }
        for i in (0..n - 1).rev() {
            g[i] = g[i].max(g[i + 1] - step);
        }
    }

    if let Some(gamma) = policy.max_gamma {
        let gamma = gamma * (1.0 - GAMMA_SHADE);
        // Parabola of curvature Γ through (a, g_a) and (c, g_c), at x.
        let arc = |g: &[f64], a: usize, c: usize, x: f64| {
            let (xa, xc) = (xs[a], xs[c]);
            let chord = (g[c] - g[a]) / (xc - xa);
            g[a] + chord * (x - xa) + 0.5 * gamma * (x - xa) * (x - xc)
        };
        let mut hull: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            while hull.len() >= 2 {
                let b = hull[hull.len() - 1];
                let a = hull[hull.len() - 2];
                if g[b] <= arc(&g, a, i, xs[b]) + HULL_SLACK {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        let mut out = g.clone();
        for w in hull.windows(2) {
            let (a, c) = (w[0], w[1]);
            for (i, o) in out.iter_mut().enumerate().take(c).skip(a + 1) {
                *o = arc(&g, a, c, xs[i]);
            }
        }
        g = out;
    }

    PayoffProfile::Sampled(SampledProfile {
        samples_per_unit: n_per,
        values: g,
        right_slope: payoff.right_slope(),
        floor: Some(Box::new(match payoff {
            PayoffProfile::Sampled(SampledProfile { floor: Some(f), .. }) => (**f).clone(),
            other => other.clone(),
        })),
    })
}
