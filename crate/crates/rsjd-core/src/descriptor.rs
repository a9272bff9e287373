//! Time-dependent parameter descriptors.
//!
//! Every driving quantity of the model — drift `c_i`, jump size `h_i`,
//! volatility `σ_i`, hazard rate `γ_ij` — is a deterministic function of the
//! elapsed holding time since the last regime switch. This module provides a
//! small closed family of such functions with exact integrals
//! `∫₀ᵗ v(u) du`, exact squared integrals `∫₀ᵗ v(u)² du`, and exact inverses
//! of the cumulative integral (needed for competing-risks sampling).
//!
//! Algebra (`add`, `mul`, `div`, ...) stays in closed form whenever possible:
//! sums and products of piecewise-constant descriptors live on the merged
//! breakpoint set, and power laws compose under multiplication/division.
//! Combinations that leave the family degrade to a dense tabulation on a
//! working grid ([`TabulationGrid`]) with linear interpolation between nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working grid used when a descriptor combination has no closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulationGrid {
    /// Right end of the working horizon; tabulated values extend past it
    /// as a constant.
    pub horizon: f64,
    /// Number of grid segments (nodes = steps + 1).
    pub steps: usize,
}

impl TabulationGrid {
    /// Default resolution: horizon split into 2048 segments.
    pub const DEFAULT_STEPS: usize = 2048;

    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            steps: Self::DEFAULT_STEPS,
        }
    }

    pub fn with_steps(horizon: f64, steps: usize) -> Self {
        Self { horizon, steps }
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

/// A deterministic function of elapsed time `t ≥ 0`.
///
/// Serialized either as a bare number (constant) or as a `{"kind": ...}`
/// object; see the JSON schema in the repository README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DescriptorRepr", try_from = "DescriptorRepr")]
pub enum Descriptor {
    /// `v(t) = value`.
    Constant(f64),
    /// Step function: `v(t) = values[k]` on `[breakpoints[k], breakpoints[k+1])`,
    /// with `breakpoints[0] = 0` and the last value extending to infinity.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `v(t) = scale · t^exponent`.
    PowerLaw { scale: f64, exponent: f64 },
    /// Values on the uniform grid `0, step, 2·step, …`, linearly interpolated,
    /// constant at the last value beyond the final node. Produced by the
    /// descriptor algebra when no closed form exists.
    Tabulated { step: f64, values: Vec<f64> },
}

impl Descriptor {
    /// Structural well-formedness: shapes, monotone breakpoints, finite data.
    /// This is distinct from model invariants (positivity, integrability),
    /// which are collected by the validators in `model`.
    pub fn check_structure(&self, location: &str) -> Result<()> {
        let fail = |msg: String| Err(Error::Structural(format!("{location}: {msg}")));
        match self {
            Descriptor::Constant(v) => {
                if !v.is_finite() {
                    return fail(format!("non-finite constant {v}"));
                }
            }
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() {
                    return fail("empty breakpoint list".into());
                }
                if breakpoints[0] != 0.0 {
                    return fail(format!(
                        "first breakpoint must be 0, got {}",
                        breakpoints[0]
                    ));
                }
                if breakpoints.len() != values.len() {
                    return fail(format!(
                        "{} breakpoints vs {} values",
                        breakpoints.len(),
                        values.len()
                    ));
                }
                for w in breakpoints.windows(2) {
                    if !(w[1] > w[0]) {
                        return fail(format!(
                            "breakpoints not strictly increasing at {} -> {}",
                            w[0], w[1]
                        ));
                    }
                }
                if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
                    return fail("non-finite breakpoint or value".into());
                }
            }
            Descriptor::PowerLaw { scale, exponent } => {
                if !scale.is_finite() || !exponent.is_finite() {
                    return fail("non-finite power-law parameter".into());
                }
            }
            Descriptor::Tabulated { step, values } => {
                if !(*step > 0.0) {
                    return fail(format!("tabulation step must be positive, got {step}"));
                }
                if values.len() < 2 {
                    return fail("tabulation needs at least two nodes".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return fail("non-finite tabulated value".into());
                }
            }
        }
        Ok(())
    }

    /// Point evaluation `v(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Descriptor::Constant(v) => *v,
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = match breakpoints.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
                    Ok(i) => i,
                    Err(0) => 0,
                    Err(i) => i - 1,
                };
                values[idx]
            }
            Descriptor::PowerLaw { scale, exponent } => scale * t.powf(*exponent),
            Descriptor::Tabulated { step, values } => {
                let last = values.len() - 1;
                let x = t / step;
                if x >= last as f64 {
                    return values[last];
                }
                let k = x.floor() as usize;
                let frac = x - k as f64;
                values[k] + frac * (values[k + 1] - values[k])
            }
        }
    }

    /// Cumulative integral `∫₀ᵗ v(u) du` in closed form.
    pub fn integral(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Descriptor::Constant(v) => v * t,
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let mut acc = 0.0;
                for k in 0..breakpoints.len() {
                    let lo = breakpoints[k];
                    if t <= lo {
                        break;
                    }
                    let hi = if k + 1 < breakpoints.len() {
                        breakpoints[k + 1].min(t)
                    } else {
                        t
                    };
                    acc += values[k] * (hi - lo);
                }
                acc
            }
            Descriptor::PowerLaw { scale, exponent } => {
                if t == 0.0 {
                    0.0
                } else if *exponent > -1.0 {
                    scale * t.powf(exponent + 1.0) / (exponent + 1.0)
                } else {
                    // not integrable at the origin
                    f64::INFINITY * scale.signum()
                }
            }
            Descriptor::Tabulated { step, values } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                for k in 0..values.len() - 1 {
                    let hi = (k + 1) as f64 * step;
                    if t <= lo {
                        return acc;
                    }
                    let end = hi.min(t);
                    let va = values[k];
                    let vb = values[k + 1];
                    let frac_end = (end - lo) / step;
                    // linear segment: ∫ (va + (vb-va) u/step) du over [0, end-lo]
                    let x = end - lo;
                    acc += va * x + 0.5 * (vb - va) * frac_end * x;
                    lo = hi;
                }
                if t > lo {
                    acc += values[values.len() - 1] * (t - lo);
                }
                acc
            }
        }
    }

    /// `∫ₐᵇ v(u) du`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.integral(b) - self.integral(a)
    }

    /// Cumulative squared integral `∫₀ᵗ v(u)² du` in closed form.
    pub fn square_integral(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Descriptor::Constant(v) => v * v * t,
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let mut acc = 0.0;
                for k in 0..breakpoints.len() {
                    let lo = breakpoints[k];
                    if t <= lo {
                        break;
                    }
                    let hi = if k + 1 < breakpoints.len() {
                        breakpoints[k + 1].min(t)
                    } else {
                        t
                    };
                    acc += values[k] * values[k] * (hi - lo);
                }
                acc
            }
            Descriptor::PowerLaw { scale, exponent } => {
                let p = 2.0 * exponent + 1.0;
                if t == 0.0 {
                    0.0
                } else if p > 0.0 {
                    scale * scale * t.powf(p) / p
                } else {
                    f64::INFINITY
                }
            }
            Descriptor::Tabulated { step, values } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                for k in 0..values.len() - 1 {
                    let hi = (k + 1) as f64 * step;
                    if t <= lo {
                        return acc;
                    }
                    let end = hi.min(t);
                    let x = end - lo;
                    let va = values[k];
                    let m = (values[k + 1] - values[k]) / step;
                    // ∫₀ˣ (va + m u)² du
                    acc += va * va * x + va * m * x * x + m * m * x * x * x / 3.0;
                    lo = hi;
                }
                if t > lo {
                    let v = values[values.len() - 1];
                    acc += v * v * (t - lo);
                }
                acc
            }
        }
    }

    /// `∫ₐᵇ v(u)² du`.
    pub fn square_integral_between(&self, a: f64, b: f64) -> f64 {
        self.square_integral(b) - self.square_integral(a)
    }

    /// Smallest `t` with `∫₀ᵗ v(u) du = target` (for nonnegative descriptors).
    /// Returns `None` when the cumulative integral never reaches the target.
    pub fn inverse_integral(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        match self {
            Descriptor::Constant(v) => {
                if *v > 0.0 {
                    Some(target / v)
                } else {
                    None
                }
            }
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let mut rem = target;
                for k in 0..breakpoints.len() {
                    let lo = breakpoints[k];
                    let v = values[k];
                    if k + 1 < breakpoints.len() {
                        let len = breakpoints[k + 1] - lo;
                        let seg = v * len;
                        if rem <= seg {
                            return Some(lo + rem / v);
                        }
                        rem -= seg;
                    } else if v > 0.0 {
                        return Some(lo + rem / v);
                    } else {
                        return None;
                    }
                }
                None
            }
            Descriptor::PowerLaw { scale, exponent } => {
                if *scale > 0.0 && *exponent > -1.0 {
                    Some((target * (exponent + 1.0) / scale).powf(1.0 / (exponent + 1.0)))
                } else {
                    None
                }
            }
            Descriptor::Tabulated { step, values } => {
                let mut rem = target;
                let mut lo = 0.0;
                for k in 0..values.len() - 1 {
                    let va = values[k];
                    let vb = values[k + 1];
                    let seg = 0.5 * (va + vb) * step;
                    if rem <= seg {
                        // solve va·x + m x²/2 = rem on [0, step], m = (vb-va)/step
                        let m = (vb - va) / step;
                        let x = if m.abs() < 1e-300 {
                            if va > 0.0 {
                                rem / va
                            } else {
                                *step
                            }
                        } else {
                            let disc = (va * va + 2.0 * m * rem).max(0.0);
                            (disc.sqrt() - va) / m
                        };
                        return Some(lo + x.clamp(0.0, *step));
                    }
                    rem -= seg;
                    lo += step;
                }
                let v = values[values.len() - 1];
                if v > 0.0 {
                    Some(lo + rem / v)
                } else {
                    None
                }
            }
        }
    }

    /// Interior breakpoints / interpolation nodes strictly inside `(0, upto)`.
    /// These are the times where the descriptor changes its analytic form.
    pub fn kink_points(&self, upto: f64) -> Vec<f64> {
        match self {
            Descriptor::Constant(_) | Descriptor::PowerLaw { .. } => Vec::new(),
            Descriptor::PiecewiseConstant { breakpoints, .. } => breakpoints
                .iter()
                .copied()
                .filter(|&b| b > 0.0 && b < upto)
                .collect(),
            Descriptor::Tabulated { step, values } => (1..values.len())
                .map(|k| k as f64 * step)
                .filter(|&b| b < upto)
                .collect(),
        }
    }

    /// The value the descriptor settles to for large `t` (last segment /
    /// node value; the power-law tail has no constant value and reports its
    /// limit sign via ±∞ or 0).
    pub fn tail_value(&self) -> f64 {
        match self {
            Descriptor::Constant(v) => *v,
            Descriptor::PiecewiseConstant { values, .. } => *values.last().unwrap(),
            Descriptor::PowerLaw { scale, exponent } => {
                if *scale == 0.0 || *exponent < 0.0 {
                    0.0
                } else if *exponent == 0.0 {
                    *scale
                } else {
                    f64::INFINITY * scale.signum()
                }
            }
            Descriptor::Tabulated { values, .. } => *values.last().unwrap(),
        }
    }

    /// Whether `∫₀^∞ v = +∞` (hazard non-exploding condition), assuming the
    /// descriptor is a valid nonnegative hazard.
    pub fn diverges_at_infinity(&self) -> bool {
        match self {
            Descriptor::Constant(v) => *v > 0.0,
            Descriptor::PiecewiseConstant { values, .. } => *values.last().unwrap() > 0.0,
            Descriptor::PowerLaw { scale, exponent } => *scale > 0.0 && *exponent > -1.0,
            Descriptor::Tabulated { values, .. } => *values.last().unwrap() > 0.0,
        }
    }

    /// Exact minimum over `[0, upto]` for piecewise-flat kinds; for power
    /// laws the minimum is attained at an endpoint (monotone), for tabulated
    /// data at a node.
    pub fn min_on(&self, upto: f64) -> f64 {
        match self {
            Descriptor::Constant(v) => *v,
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => breakpoints
                .iter()
                .zip(values)
                .filter(|(b, _)| **b < upto)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min),
            Descriptor::PowerLaw { .. } => self.value(0.0).min(self.value(upto)),
            Descriptor::Tabulated { step, values } => {
                let last = ((upto / step).ceil() as usize).min(values.len() - 1);
                values[..=last].iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn as_piecewise(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Descriptor::Constant(v) => Some((vec![0.0], vec![*v])),
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => Some((breakpoints.clone(), values.clone())),
            _ => None,
        }
    }

    fn from_piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Descriptor {
        if values.len() == 1 || values.windows(2).all(|w| w[0] == w[1]) {
            Descriptor::Constant(values[0])
        } else {
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            }
        }
    }

    /// Pointwise combination on the merged breakpoint set; `None` if either
    /// side is not piecewise-constant.
    fn combine_piecewise(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Option<Descriptor> {
        let (b1, v1) = self.as_piecewise()?;
        let (b2, v2) = other.as_piecewise()?;
        let mut merged: Vec<f64> = b1.iter().chain(b2.iter()).copied().collect();
        merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
        merged.dedup();
        let seg_value = |bps: &[f64], vals: &[f64], t: f64| -> f64 {
            let idx = match bps.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
                Ok(i) => i,
                Err(0) => 0,
                Err(i) => i - 1,
            };
            vals[idx]
        };
        let values: Vec<f64> = merged
            .iter()
            .map(|&t| f(seg_value(&b1, &v1, t), seg_value(&b2, &v2, t)))
            .collect();
        Some(Descriptor::from_piecewise(merged, values))
    }

    /// Dense fallback: sample `f(t)` on the working grid. A non-finite
    /// origin sample (integrable power-law singularity) is replaced by the
    /// value half a step in.
    fn tabulate(grid: &TabulationGrid, f: impl Fn(f64) -> f64) -> Descriptor {
        let step = grid.step();
        let mut values: Vec<f64> = (0..=grid.steps).map(|k| f(k as f64 * step)).collect();
        if !values[0].is_finite() {
            values[0] = f(0.5 * step);
        }
        Descriptor::Tabulated { step, values }
    }

    pub fn scale(&self, k: f64) -> Descriptor {
        match self {
            Descriptor::Constant(v) => Descriptor::Constant(k * v),
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => Descriptor::from_piecewise(
                breakpoints.clone(),
                values.iter().map(|v| k * v).collect(),
            ),
            Descriptor::PowerLaw { scale, exponent } => Descriptor::PowerLaw {
                scale: k * scale,
                exponent: *exponent,
            },
            Descriptor::Tabulated { step, values } => Descriptor::Tabulated {
                step: *step,
                values: values.iter().map(|v| k * v).collect(),
            },
        }
    }

    /// `self + k`; closed for every kind except the power law (which
    /// tabulates unless `k = 0`).
    pub fn offset(&self, k: f64, grid: &TabulationGrid) -> Descriptor {
        if k == 0.0 {
            return self.clone();
        }
        match self {
            Descriptor::Constant(v) => Descriptor::Constant(v + k),
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => Descriptor::from_piecewise(
                breakpoints.clone(),
                values.iter().map(|v| v + k).collect(),
            ),
            Descriptor::Tabulated { step, values } => Descriptor::Tabulated {
                step: *step,
                values: values.iter().map(|v| v + k).collect(),
            },
            Descriptor::PowerLaw { .. } => Self::tabulate(grid, |t| self.value(t) + k),
        }
    }

    pub fn add(&self, other: &Self, grid: &TabulationGrid) -> Descriptor {
        if let Some(r) = self.combine_piecewise(other, |a, b| a + b) {
            return r;
        }
        if let (
            Descriptor::PowerLaw {
                scale: s1,
                exponent: e1,
            },
            Descriptor::PowerLaw {
                scale: s2,
                exponent: e2,
            },
        ) = (self, other)
        {
            if e1 == e2 {
                return Descriptor::PowerLaw {
                    scale: s1 + s2,
                    exponent: *e1,
                };
            }
        }
        if let Descriptor::Constant(k) = other {
            return self.offset(*k, grid);
        }
        if let Descriptor::Constant(k) = self {
            return other.offset(*k, grid);
        }
        Self::tabulate(grid, |t| self.value(t) + other.value(t))
    }

    pub fn sub(&self, other: &Self, grid: &TabulationGrid) -> Descriptor {
        self.add(&other.scale(-1.0), grid)
    }

    pub fn mul(&self, other: &Self, grid: &TabulationGrid) -> Descriptor {
        if let Some(r) = self.combine_piecewise(other, |a, b| a * b) {
            return r;
        }
        match (self, other) {
            (Descriptor::Constant(k), _) => return other.scale(*k),
            (_, Descriptor::Constant(k)) => return self.scale(*k),
            (
                Descriptor::PowerLaw {
                    scale: s1,
                    exponent: e1,
                },
                Descriptor::PowerLaw {
                    scale: s2,
                    exponent: e2,
                },
            ) => {
                return Descriptor::PowerLaw {
                    scale: s1 * s2,
                    exponent: e1 + e2,
                }
            }
            _ => {}
        }
        Self::tabulate(grid, |t| self.value(t) * other.value(t))
    }

    /// Pointwise ratio with the dead-zone convention `0/0 = 1` (used when
    /// both measures assign zero switching intensity to the same interval).
    /// Callers are responsible for ruling out `x/0` with `x ≠ 0` beforehand.
    pub fn div(&self, other: &Self, grid: &TabulationGrid) -> Descriptor {
        let ratio = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 1.0 } else { a / b };
        if let Some(r) = self.combine_piecewise(other, ratio) {
            return r;
        }
        match (self, other) {
            (_, Descriptor::Constant(k)) if *k != 0.0 => return self.scale(1.0 / k),
            (
                Descriptor::PowerLaw {
                    scale: s1,
                    exponent: e1,
                },
                Descriptor::PowerLaw {
                    scale: s2,
                    exponent: e2,
                },
            ) if *s2 != 0.0 => {
                return Descriptor::PowerLaw {
                    scale: s1 / s2,
                    exponent: e1 - e2,
                }
            }
            _ => {}
        }
        Self::tabulate(grid, |t| ratio(self.value(t), other.value(t)))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DescriptorRepr {
    Number(f64),
    Tagged(TaggedDescriptor),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TaggedDescriptor {
    Constant {
        value: f64,
    },
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    PowerLaw {
        scale: f64,
        exponent: f64,
    },
    Tabulated {
        step: f64,
        values: Vec<f64>,
    },
}

impl From<Descriptor> for DescriptorRepr {
    fn from(d: Descriptor) -> Self {
        match d {
            Descriptor::Constant(v) => DescriptorRepr::Number(v),
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => DescriptorRepr::Tagged(TaggedDescriptor::PiecewiseConstant {
                breakpoints,
                values,
            }),
            Descriptor::PowerLaw { scale, exponent } => {
                DescriptorRepr::Tagged(TaggedDescriptor::PowerLaw { scale, exponent })
            }
            Descriptor::Tabulated { step, values } => {
                DescriptorRepr::Tagged(TaggedDescriptor::Tabulated { step, values })
            }
        }
    }
}

impl TryFrom<DescriptorRepr> for Descriptor {
    type Error = String;

    fn try_from(r: DescriptorRepr) -> std::result::Result<Self, String> {
        Ok(match r {
            DescriptorRepr::Number(v) => Descriptor::Constant(v),
            DescriptorRepr::Tagged(TaggedDescriptor::Constant { value }) => {
                Descriptor::Constant(value)
            }
            DescriptorRepr::Tagged(TaggedDescriptor::PiecewiseConstant {
                breakpoints,
                values,
            }) => Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            },
            DescriptorRepr::Tagged(TaggedDescriptor::PowerLaw { scale, exponent }) => {
                Descriptor::PowerLaw { scale, exponent }
            }
            DescriptorRepr::Tagged(TaggedDescriptor::Tabulated { step, values }) => {
                Descriptor::Tabulated { step, values }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite-Simpson oracle, independent of the closed-form integrals.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    // Simpson split at the integrand's kink points, so discontinuities sit
    // on panel boundaries. Each panel samples just inside its right end,
    // where the left segment's value still applies.
    fn segmented_simpson(d: &Descriptor, t: f64, n_per_seg: usize) -> f64 {
        let mut cuts = vec![0.0];
        cuts.extend(d.kink_points(t));
        cuts.push(t);
        cuts.windows(2)
            .map(|w| {
                let inside = w[1] - 1e-9 * (w[1] - w[0]);
                simpson(|u| d.value(u.clamp(w[0], inside)), w[0], w[1], n_per_seg)
            })
            .sum()
    }

    fn pwc(bp: &[f64], v: &[f64]) -> Descriptor {
        Descriptor::PiecewiseConstant {
            breakpoints: bp.to_vec(),
            values: v.to_vec(),
        }
    }

    #[test]
    fn constant_basics() {
        let d = Descriptor::Constant(2.0);
        assert_eq!(d.value(3.0), 2.0);
        assert_eq!(d.integral(3.0), 6.0);
        assert_eq!(d.square_integral(3.0), 12.0);
        assert_eq!(d.inverse_integral(4.0), Some(2.0));
    }

    #[test]
    fn piecewise_integral_matches_hand_value() {
        // 2 on [0,1), 1 after: ∫₀^1.5 = 2.5
        let d = pwc(&[0.0, 1.0], &[2.0, 1.0]);
        assert!((d.integral(1.5) - 2.5).abs() < 1e-15);
        assert!((d.value(0.5) - 2.0).abs() < 1e-15);
        assert!((d.value(1.0) - 1.0).abs() < 1e-15);
        // inverse round trip across the kink
        let t = d.inverse_integral(2.5).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
    }

    #[test]
    fn power_law_integral_and_inverse() {
        let d = Descriptor::PowerLaw {
            scale: 3.0,
            exponent: 0.5,
        };
        // Simpson converges slowly near the √t endpoint singularity
        let quad = simpson(|u| d.value(u), 0.0, 2.0, 4000);
        assert!((d.integral(2.0) - quad).abs() < 1e-5);
        let t = d.inverse_integral(d.integral(2.0)).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_not_integrable_below_minus_one() {
        let d = Descriptor::PowerLaw {
            scale: 1.0,
            exponent: -1.5,
        };
        assert!(d.integral(1.0).is_infinite());
        assert_eq!(d.inverse_integral(1.0), None);
    }

    #[test]
    fn tabulated_interpolation_and_integral() {
        // hat function: 0,1,0 on nodes 0, 0.5, 1.0
        let d = Descriptor::Tabulated {
            step: 0.5,
            values: vec![0.0, 1.0, 0.0],
        };
        assert!((d.value(0.25) - 0.5).abs() < 1e-15);
        assert!((d.integral(1.0) - 0.5).abs() < 1e-15);
        let quad = simpson(|u| d.value(u), 0.0, 1.0, 4000);
        assert!((d.integral(1.0) - quad).abs() < 1e-9);
        let sq = simpson(|u| d.value(u) * d.value(u), 0.0, 1.0, 4000);
        assert!((d.square_integral(1.0) - sq).abs() < 1e-9);
        // constant extension past the last node
        assert_eq!(d.value(5.0), 0.0);
    }

    #[test]
    fn tabulated_inverse_round_trip() {
        let d = Descriptor::Tabulated {
            step: 0.5,
            values: vec![0.5, 1.5, 1.0],
        };
        for target in [0.1, 0.4, 0.9, 2.0, 7.3] {
            let t = d.inverse_integral(target).unwrap();
            assert!(
                (d.integral(t) - target).abs() < 1e-12,
                "target {target}: got t={t}"
            );
        }
    }

    #[test]
    fn piecewise_algebra_closed_on_merged_breakpoints() {
        let g = TabulationGrid::new(10.0);
        let a = pwc(&[0.0, 1.0], &[1.0, 2.0]);
        let b = pwc(&[0.0, 0.5], &[3.0, 4.0]);
        let p = a.mul(&b, &g);
        match &p {
            Descriptor::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                assert_eq!(breakpoints, &vec![0.0, 0.5, 1.0]);
                assert_eq!(values, &vec![3.0, 4.0, 8.0]);
            }
            other => panic!("expected piecewise, got {other:?}"),
        }
        let s = a.add(&b, &g);
        assert_eq!(s.value(0.25), 4.0);
        assert_eq!(s.value(0.75), 5.0);
        assert_eq!(s.value(1.5), 6.0);
    }

    #[test]
    fn power_law_products_stay_closed() {
        let g = TabulationGrid::new(10.0);
        let a = Descriptor::PowerLaw {
            scale: 2.0,
            exponent: 0.5,
        };
        let b = Descriptor::PowerLaw {
            scale: 3.0,
            exponent: 0.25,
        };
        match a.mul(&b, &g) {
            Descriptor::PowerLaw { scale, exponent } => {
                assert_eq!(scale, 6.0);
                assert_eq!(exponent, 0.75);
            }
            other => panic!("expected power law, got {other:?}"),
        }
        match a.div(&b, &g) {
            Descriptor::PowerLaw { scale, exponent } => {
                assert!((scale - 2.0 / 3.0).abs() < 1e-15);
                assert_eq!(exponent, 0.25);
            }
            other => panic!("expected power law, got {other:?}"),
        }
    }

    #[test]
    fn mixed_kinds_degrade_to_tabulation() {
        let g = TabulationGrid::with_steps(2.0, 64);
        let a = Descriptor::PowerLaw {
            scale: 1.0,
            exponent: 1.0,
        };
        let b = pwc(&[0.0, 1.0], &[1.0, 2.0]);
        let p = a.mul(&b, &g);
        assert!(matches!(p, Descriptor::Tabulated { .. }));
        // exact at grid nodes
        assert!((p.value(0.5) - 0.5).abs() < 1e-12);
        assert!((p.value(1.5) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn div_dead_zone_convention() {
        let g = TabulationGrid::new(2.0);
        let a = pwc(&[0.0, 1.0], &[0.0, 2.0]);
        let b = pwc(&[0.0, 1.0], &[0.0, 4.0]);
        let r = a.div(&b, &g);
        assert_eq!(r.value(0.5), 1.0); // 0/0 -> 1
        assert_eq!(r.value(1.5), 0.5);
    }

    #[test]
    fn structure_rejects_non_monotone_breakpoints() {
        let d = pwc(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert!(d.check_structure("here").is_err());
        let d = pwc(&[0.5, 1.0], &[1.0, 2.0]);
        assert!(d.check_structure("here").is_err());
    }

    #[test]
    fn serde_bare_number_is_constant() {
        let d: Descriptor = serde_json::from_str("2.5").unwrap();
        assert_eq!(d, Descriptor::Constant(2.5));
        assert_eq!(serde_json::to_string(&Descriptor::Constant(2.5)).unwrap(), "2.5");
    }

    #[test]
    fn serde_tagged_kinds_round_trip() {
        let d = pwc(&[0.0, 1.0], &[2.0, 0.5]);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("piecewise_constant"));
        let back: Descriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);

        let d = Descriptor::PowerLaw {
            scale: 1.5,
            exponent: -0.5,
        };
        let back: Descriptor = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_pwc() -> impl Strategy<Value = Descriptor> {
            (1usize..5).prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.01f64..2.0, n),
                    proptest::collection::vec(0.0f64..5.0, n + 1),
                )
                    .prop_map(|(gaps, values)| {
                        let mut bp = vec![0.0];
                        for g in gaps {
                            bp.push(bp.last().unwrap() + g);
                        }
                        Descriptor::PiecewiseConstant {
                            breakpoints: bp,
                            values,
                        }
                    })
            })
        }

        proptest! {
            #[test]
            fn integral_matches_quadrature(d in arb_pwc(), t in 0.0f64..12.0) {
                let quad = segmented_simpson(&d, t, 512);
                prop_assert!((d.integral(t) - quad).abs() < 1e-8 * (1.0 + quad.abs()));
            }

            #[test]
            fn inverse_integral_is_right_inverse(d in arb_pwc(), target in 0.0f64..8.0) {
                if let Some(t) = d.inverse_integral(target) {
                    prop_assert!((d.integral(t) - target).abs() < 1e-9 * (1.0 + target));
                }
            }

            #[test]
            fn serde_round_trip(d in arb_pwc()) {
                let s = serde_json::to_string(&d).unwrap();
                let back: Descriptor = serde_json::from_str(&s).unwrap();
                prop_assert_eq!(back, d);
            }
        }
    }
}
