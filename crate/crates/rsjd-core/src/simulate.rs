//! Path simulation and Monte Carlo estimators.
//!
//! Paths are built segment by segment. Holding times come from a
//! competing-risks draw: for each target `j ≠ i` an Exp(1) variate is pushed
//! through the inverse cumulative hazard `Γ_ij^{-1}`, and the earliest
//! target wins, so the marginal law of the holding time has survival
//! `F̄_i` exactly. Within a segment the components accumulate as
//!
//! - `T^c`: the deterministic drift integral `l_i` restarted at each switch,
//! - `N^h`: a jump of `h_{ε(τ_{n−1})}(T_n)` at each switch time,
//! - `W^σ`: Gaussian increments with the exact variance `∫σ² du` per
//!   sub-interval — no Euler discretisation.
//!
//! The Brownian sub-intervals ("pieces") are cut at grid nodes and at the
//! volatility's own breakpoints, so `σ` is constant on each piece and the
//! underlying Brownian increment `ΔB = z√Δt` is recoverable from the stored
//! standard normal draw. That is what makes the Radon–Nikodým weight
//! computable from the same noise: `W^{σ*}` is reassembled piece by piece
//! for any change `σ*` that is constant on each piece (always true for
//! constant `σ*`; piecewise `σ*` should align its breakpoints with the
//! grid).
//!
//! Estimators run one ChaCha sub-stream per path index, so parallel and
//! serial runs produce bit-identical results, and reductions use pairwise
//! summation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeasureChangeSpec, ModelSpec};
use crate::numeric::mean_and_se;
use crate::volterra::UniformGrid;

/// Safety cap on switches per path; the non-exploding condition makes the
/// switch count a.s. finite, so hitting this is a diagnostic, not a law.
pub const SWITCH_CAP: u64 = 10_000_000;

/// Result of one competing-risks holding-time draw.
#[derive(Debug, Clone, Copy)]
pub struct HoldingDraw {
    /// Holding time, capped at `cap` when censored.
    pub time: f64,
    /// Winning target regime (meaningless when censored).
    pub next_regime: usize,
    /// True when no transition fired before `cap`.
    pub censored: bool,
}

/// Draw the next holding time and target out of regime `i`: independent
/// latent times `T_ij = Γ_ij^{-1}(E_ij)` with `E_ij ~ Exp(1)`, minimum wins.
pub fn sample_holding(
    spec: &ModelSpec,
    i: usize,
    cap: f64,
    rng: &mut impl Rng,
) -> HoldingDraw {
    let mut best_time = f64::INFINITY;
    let mut best_target = i;
    for j in 0..spec.regime_count() {
        if j == i {
            continue;
        }
        let e: f64 = rng.sample(Exp1);
        if let Some(t) = spec.hazard(i, j).inverse_integral(e) {
            if t < best_time {
                best_time = t;
                best_target = j;
            }
        }
    }
    if best_time > cap {
        HoldingDraw {
            time: cap,
            next_regime: i,
            censored: true,
        }
    } else {
        HoldingDraw {
            time: best_time,
            next_regime: best_target,
            censored: false,
        }
    }
}

/// One Brownian sub-interval: `σ` is constant on it and the increment of
/// the driving Brownian motion is `z·√(t_end − t_start)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BrownianPiece {
    pub t_start: f64,
    pub t_end: f64,
    pub regime: usize,
    /// Elapsed holding time at `t_start` within the current segment.
    pub elapsed_start: f64,
    /// Standard normal draw for this piece.
    pub z: f64,
}

/// One realised trajectory with its components on a uniform grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Path {
    /// Switching times `τ₀ = 0 < τ₁ < …` (those that occurred before the
    /// horizon).
    pub switch_times: Vec<f64>,
    /// Regime `ε(τ_n)` entered at each switching time.
    pub regimes: Vec<usize>,
    /// Holding times `T_n = τ_n − τ_{n−1}` of the realised switches.
    pub holding_times: Vec<f64>,
    pub grid: UniformGrid,
    pub tc: Vec<f64>,
    pub nh: Vec<f64>,
    pub wsigma: Vec<f64>,
    /// Brownian pieces in time order, for density reconstruction.
    pub pieces: Vec<BrownianPiece>,
}

impl Path {
    /// `X(t_k) = T^c + N^h + W^σ` at grid node `k`.
    pub fn x(&self, k: usize) -> f64 {
        self.tc[k] + self.nh[k] + self.wsigma[k]
    }

    pub fn terminal_x(&self) -> f64 {
        self.x(self.grid.segments)
    }

    fn node_index(&self, t: f64) -> Result<usize> {
        let k = (t / self.grid.step).round() as usize;
        if k > self.grid.segments || (self.grid.node(k) - t).abs() > 1e-9 * self.grid.step.max(t) {
            return Err(Error::Precondition(format!(
                "t={t} is not a grid node (step {})",
                self.grid.step
            )));
        }
        Ok(k)
    }

    /// `X(t)` at a grid-aligned time.
    pub fn x_at(&self, t: f64) -> Result<f64> {
        Ok(self.x(self.node_index(t)?))
    }

    /// Number of switches up to time `t`: `N(t) = #{n ≥ 1 : τ_n ≤ t}`.
    pub fn switch_count(&self, t: f64) -> usize {
        self.switch_times[1..]
            .iter()
            .take_while(|&&tau| tau <= t + 1e-12 * t.max(1.0))
            .count()
    }

    /// Regime occupied at time `t`.
    pub fn regime_at(&self, t: f64) -> usize {
        self.regimes[self.switch_count(t)]
    }
}

/// Simulate one path of the model from regime `i0` up to the horizon,
/// recording component values at every node of the `grid_step` grid.
pub fn simulate_path(
    spec: &ModelSpec,
    i0: usize,
    horizon: f64,
    grid_step: f64,
    rng: &mut impl Rng,
) -> Result<Path> {
    simulate_path_with_cap(spec, i0, horizon, grid_step, rng, SWITCH_CAP)
}

fn simulate_path_with_cap(
    spec: &ModelSpec,
    i0: usize,
    horizon: f64,
    grid_step: f64,
    rng: &mut impl Rng,
    switch_cap: u64,
) -> Result<Path> {
    if i0 >= spec.regime_count() {
        return Err(Error::Precondition(format!(
            "initial regime {i0} out of range (d={})",
            spec.regime_count()
        )));
    }
    let grid = UniformGrid::covering(horizon, grid_step)?;
    let n = grid.segments;
    let step = grid.step;
    let tol = 1e-9 * step;

    let mut tc = vec![0.0; n + 1];
    let mut nh = vec![0.0; n + 1];
    let mut wsigma = vec![0.0; n + 1];
    let mut pieces = Vec::new();
    let mut switch_times = vec![0.0];
    let mut regimes = vec![i0];
    let mut holding_times = Vec::new();

    let mut tau = 0.0;
    let mut regime = i0;
    let mut tc_base = 0.0;
    let mut nh_cur = 0.0;
    let mut w_cum = 0.0;
    let mut switches: u64 = 0;

    loop {
        let draw = sample_holding(spec, regime, grid.horizon() - tau, rng);
        let seg_end = if draw.censored {
            grid.horizon()
        } else {
            tau + draw.time
        };
        let sigma = &spec.regime(regime).sigma;
        let drift = &spec.regime(regime).c;

        // cut points: grid nodes in (tau, seg_end], σ breakpoints, segment end
        let mut cuts: Vec<(f64, Option<usize>)> = Vec::new();
        let k_first = ((tau + tol) / step).floor() as usize + 1;
        let k_last = (((seg_end + tol) / step).floor() as usize).min(n);
        for k in k_first..=k_last {
            cuts.push((grid.node(k).min(seg_end), Some(k)));
        }
        for kink in sigma.kink_points(seg_end - tau) {
            let t = tau + kink;
            if t > tau + tol && t < seg_end - tol {
                cuts.push((t, None));
            }
        }
        if cuts.last().map_or(true, |&(t, _)| t < seg_end - tol) {
            cuts.push((seg_end, None));
        }
        cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut prev = tau;
        for &(cut, node) in &cuts {
            if cut > prev + tol {
                let e0 = prev - tau;
                let e1 = cut - tau;
                let z: f64 = rng.sample(StandardNormal);
                let var = sigma.square_integral_between(e0, e1);
                w_cum += z * var.max(0.0).sqrt();
                pieces.push(BrownianPiece {
                    t_start: prev,
                    t_end: cut,
                    regime,
                    elapsed_start: e0,
                    z,
                });
                prev = cut;
            }
            if let Some(k) = node {
                tc[k] = tc_base + drift.integral(grid.node(k) - tau);
                nh[k] = nh_cur;
                wsigma[k] = w_cum;
            }
        }

        if draw.censored {
            break;
        }
        tau = seg_end;
        tc_base += drift.integral(draw.time);
        nh_cur += spec.regime(regime).h.value(draw.time);
        switch_times.push(tau);
        regimes.push(draw.next_regime);
        holding_times.push(draw.time);
        regime = draw.next_regime;
        switches += 1;
        if switches >= switch_cap {
            return Err(Error::SwitchCapExceeded {
                cap: switch_cap,
                time: tau,
            });
        }
    }

    Ok(Path {
        switch_times,
        regimes,
        holding_times,
        grid,
        tc,
        nh,
        wsigma,
        pieces,
    })
}

/// A functional value paired with a Radon–Nikodým density.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedSample {
    /// `X(t)` of the path the weight was computed on.
    pub value: f64,
    /// `Z(t) = exp(log_weight)`.
    pub weight: f64,
    pub log_weight: f64,
}

/// Walk the path's regime segments up to `t`: `on_switch(regime, T_n)` for
/// every completed holding interval, then `on_partial(regime, t − τ_N)` for
/// the running one.
fn for_each_segment(
    path: &Path,
    t: f64,
    mut on_switch: impl FnMut(usize, f64) -> Result<()>,
    on_partial: impl FnOnce(usize, f64) -> Result<()>,
) -> Result<()> {
    let count = path.switch_count(t);
    for n in 0..count {
        on_switch(path.regimes[n], path.holding_times[n])?;
    }
    on_partial(path.regimes[count], t - path.switch_times[count])
}

/// Radon–Nikodým density `Z(t) = E_t(X*)` of the change along a realised
/// path:
/// `ln Z = T^{c*−(σ*)²/2}(t) + Σ_{n≤N(t)} ln(1 + h*_{ε(τ_{n−1})}(T_n)) + W^{σ*}(t)`.
/// The Wiener part is rebuilt from the stored per-piece normal draws, so it
/// rides the same noise as the simulated path. `t` must be grid-aligned.
pub fn radon_nikodym_weight(
    path: &Path,
    spec_p: &ModelSpec,
    change: &MeasureChangeSpec,
    t: f64,
) -> Result<WeightedSample> {
    if change.regime_count() != spec_p.regime_count() {
        return Err(Error::Precondition(
            "measure change regime count mismatch".into(),
        ));
    }
    let k = path.node_index(t)?;
    let t = path.grid.node(k);

    let mut log_w = 0.0;
    for_each_segment(
        path,
        t,
        |regime, hold| {
            log_w += change.c_star[regime].integral(hold)
                - 0.5 * change.sigma_star[regime].square_integral(hold);
            let jump = 1.0 + change.h_star[regime].value(hold);
            if jump <= 0.0 {
                return Err(Error::Domain(format!(
                    "1 + h* = {jump} at a realised jump (regime {}, holding {hold})",
                    regime + 1
                )));
            }
            log_w += jump.ln();
            Ok(())
        },
        |regime, part| {
            log_w += change.c_star[regime].integral(part)
                - 0.5 * change.sigma_star[regime].square_integral(part);
            Ok(())
        },
    )?;

    let tol = 1e-9 * path.grid.step;
    for p in &path.pieces {
        if p.t_end > t + tol {
            break;
        }
        let dt = p.t_end - p.t_start;
        if dt <= 0.0 {
            continue;
        }
        let s_star = change.sigma_star[p.regime]
            .integral_between(p.elapsed_start, p.elapsed_start + dt);
        log_w += p.z * s_star / dt.sqrt();
    }

    Ok(WeightedSample {
        value: path.x(k),
        weight: log_w.exp(),
        log_weight: log_w,
    })
}

/// The entropy integrand `T^{c*+(σ*)²/2}(t) + N^{ln(1+h*)}(t)` along a path
/// (deterministic given the switching skeleton).
pub fn entropy_integrand(path: &Path, change: &MeasureChangeSpec, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for_each_segment(
        path,
        t,
        |regime, hold| {
            acc += change.c_star[regime].integral(hold)
                + 0.5 * change.sigma_star[regime].square_integral(hold);
            let jump = 1.0 + change.h_star[regime].value(hold);
            if jump <= 0.0 {
                return Err(Error::Domain(format!(
                    "1 + h* = {jump} at a realised jump (regime {})",
                    regime + 1
                )));
            }
            acc += jump.ln();
            Ok(())
        },
        |regime, part| {
            acc += change.c_star[regime].integral(part)
                + 0.5 * change.sigma_star[regime].square_integral(part);
            Ok(())
        },
    )?;
    Ok(acc)
}

/// Monte Carlo estimate with standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Generic Monte Carlo driver: simulate `n_paths` paths (one ChaCha
/// sub-stream each, parallel across paths) and average `f`.
pub fn mc_estimate<F>(
    spec: &ModelSpec,
    i0: usize,
    horizon: f64,
    grid_step: f64,
    n_paths: usize,
    seed: u64,
    f: F,
) -> Result<Estimate>
where
    F: Fn(&Path) -> Result<f64> + Sync,
{
    if n_paths < 2 {
        return Err(Error::Precondition("need at least 2 paths".into()));
    }
    let samples: Result<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let path = simulate_path(spec, i0, horizon, grid_step, &mut rng)?;
            f(&path)
        })
        .collect();
    let samples = samples?;
    let (value, std_error) = mean_and_se(&samples);
    Ok(Estimate {
        value,
        std_error,
        n_paths,
    })
}

/// Path functionals with Monte Carlo estimators.
#[derive(Debug, Clone)]
pub enum Functional {
    /// `X(t)` — targets the moment functions `μ_i(t)`.
    TerminalX,
    /// `T^{c*+(σ*)²/2}(t) + N^{ln(1+h*)}(t)` — under the transformed
    /// dynamics its mean is the relative entropy `H_i(t)`.
    TerminalEntropyIntegrand(MeasureChangeSpec),
}

/// Unbiased sample mean of the functional at time `t`, deterministic in the
/// seed. For the entropy integrand, pass the transformed (Q-)dynamics as
/// `spec`.
pub fn mc_expectation(
    spec: &ModelSpec,
    i0: usize,
    functional: &Functional,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Estimate> {
    if n_paths < 100 {
        return Err(Error::Precondition(format!(
            "need at least 100 paths, got {n_paths}"
        )));
    }
    // terminal statistics are grid-free; a coarse grid keeps paths cheap
    let grid_step = t / 16.0;
    match functional {
        Functional::TerminalX => {
            mc_estimate(spec, i0, t, grid_step, n_paths, seed, |p| Ok(p.terminal_x()))
        }
        Functional::TerminalEntropyIntegrand(change) => {
            if change.regime_count() != spec.regime_count() {
                return Err(Error::Precondition(
                    "measure change regime count mismatch".into(),
                ));
            }
            mc_estimate(spec, i0, t, grid_step, n_paths, seed, |p| {
                entropy_integrand(p, change, t)
            })
        }
    }
}
