//! Model specifications and measure changes.
//!
//! A regime-switching jump-diffusion is characterised per regime `i` by the
//! triplet `⟨c_i, h_i, σ_i⟩` (drift, jump size at the elapsed holding time,
//! volatility) together with hazard rate functions `γ_ij` of the semi-Markov
//! clock. All driving functions take the elapsed holding time since the last
//! switch as their argument.
//!
//! The semi-Markov machinery lives here: pair survivals
//! `F̄_ij(t) = exp(−∫₀ᵗ γ_ij)`, first-switch survival `F̄_i = Π_j F̄_ij`,
//! switch densities, and their conditional versions. A `MeasureChangeSpec`
//! carries the Girsanov data `(c*, h*, σ*)` defining the density
//! `Z(t) = E_t(X*)`; `apply_girsanov` produces the dynamics of `X` under the
//! new measure: drift `c + σσ*`, unchanged `h`, `σ`, and hazards
//! `γ_i^Q = (1 + h*_i) γ_i^P`.

use serde::{Deserialize, Serialize};

use crate::descriptor::{Descriptor, TabulationGrid};
use crate::error::{Error, Result};

/// Driving triplet of one regime: drift `c`, jump size `h`, volatility `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTriplet {
    pub c: Descriptor,
    pub h: Descriptor,
    pub sigma: Descriptor,
}

impl RegimeTriplet {
    pub fn constant(c: f64, h: f64, sigma: f64) -> Self {
        Self {
            c: Descriptor::Constant(c),
            h: Descriptor::Constant(h),
            sigma: Descriptor::Constant(sigma),
        }
    }
}

/// One off-diagonal hazard entry `γ_{from,to}` (indices 0-based in code,
/// 1-based in the JSON schema).
#[derive(Debug, Clone)]
pub struct HazardEntry {
    pub from: usize,
    pub to: usize,
    pub rate: Descriptor,
}

/// Full model under a named measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelSpecRepr", try_from = "ModelSpecRepr")]
pub struct ModelSpec {
    regimes: Vec<RegimeTriplet>,
    /// `hazards[i][j]` is `γ_ij` for `j ≠ i`, `None` on the diagonal.
    hazards: Vec<Vec<Option<Descriptor>>>,
    pub measure_label: String,
    /// Free-form provenance notes (e.g. how a transform split the hazards).
    pub metadata: Vec<String>,
}

impl ModelSpec {
    pub fn new(
        regimes: Vec<RegimeTriplet>,
        hazard_entries: Vec<HazardEntry>,
        measure_label: impl Into<String>,
    ) -> Result<Self> {
        let d = regimes.len();
        if d < 2 {
            return Err(Error::Structural(format!(
                "need at least 2 regimes, got {d}"
            )));
        }
        let mut hazards: Vec<Vec<Option<Descriptor>>> = vec![vec![None; d]; d];
        for e in hazard_entries {
            if e.from >= d || e.to >= d {
                return Err(Error::Structural(format!(
                    "hazard entry {}->{} out of range for d={d}",
                    e.from + 1,
                    e.to + 1
                )));
            }
            if e.from == e.to {
                return Err(Error::Structural(format!(
                    "diagonal hazard entry {}->{}",
                    e.from + 1,
                    e.to + 1
                )));
            }
            if hazards[e.from][e.to].is_some() {
                return Err(Error::Structural(format!(
                    "duplicate hazard entry {}->{}",
                    e.from + 1,
                    e.to + 1
                )));
            }
            hazards[e.from][e.to] = Some(e.rate);
        }
        for i in 0..d {
            for j in 0..d {
                if i != j && hazards[i][j].is_none() {
                    return Err(Error::Structural(format!(
                        "missing hazard entry {}->{}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            regimes,
            hazards,
            measure_label: measure_label.into(),
            metadata: Vec::new(),
        })
    }

    /// Two-state Markov model with constant parameters — the workhorse of
    /// the constant-parameter analysis.
    pub fn two_state_constant(
        lambda: [f64; 2],
        c: [f64; 2],
        h: [f64; 2],
        sigma: [f64; 2],
        measure_label: impl Into<String>,
    ) -> Self {
        Self::new(
            vec![
                RegimeTriplet::constant(c[0], h[0], sigma[0]),
                RegimeTriplet::constant(c[1], h[1], sigma[1]),
            ],
            vec![
                HazardEntry {
                    from: 0,
                    to: 1,
                    rate: Descriptor::Constant(lambda[0]),
                },
                HazardEntry {
                    from: 1,
                    to: 0,
                    rate: Descriptor::Constant(lambda[1]),
                },
            ],
            measure_label,
        )
        .expect("two-state constant model is structurally valid")
    }

    pub fn regime_count(&self) -> usize {
        self.regimes.len()
    }

    pub fn regime(&self, i: usize) -> &RegimeTriplet {
        &self.regimes[i]
    }

    pub fn regimes(&self) -> &[RegimeTriplet] {
        &self.regimes
    }

    /// Hazard `γ_ij`; panics on the (absent) diagonal.
    pub fn hazard(&self, from: usize, to: usize) -> &Descriptor {
        self.hazards[from][to]
            .as_ref()
            .expect("diagonal hazard requested")
    }

    pub fn hazard_entries(&self) -> impl Iterator<Item = (usize, usize, &Descriptor)> {
        self.hazards.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, d)| d.as_ref().map(|d| (i, j, d)))
        })
    }

    /// Total hazard `γ_i(t) = Σ_{j≠i} γ_ij(t)`.
    pub fn total_hazard_value(&self, i: usize, t: f64) -> f64 {
        self.hazards[i]
            .iter()
            .flatten()
            .map(|d| d.value(t))
            .sum()
    }

    /// Cumulative total hazard `Γ_i(t) = ∫₀ᵗ γ_i(u) du`.
    pub fn total_hazard_integral(&self, i: usize, t: f64) -> f64 {
        self.hazards[i]
            .iter()
            .flatten()
            .map(|d| d.integral(t))
            .sum()
    }

    /// Survival of the first switch out of regime `i`:
    /// `F̄_i(t) = exp(−∫₀ᵗ γ_i(u) du)`.
    pub fn survival(&self, i: usize, t: f64) -> f64 {
        (-self.total_hazard_integral(i, t)).exp()
    }

    /// Pair survival `F̄_ij(t) = exp(−∫₀ᵗ γ_ij)` of the latent `i→j` clock.
    pub fn pair_survival(&self, i: usize, j: usize, t: f64) -> f64 {
        (-self.hazard(i, j).integral(t)).exp()
    }

    /// Conditional survival `F̄_i(t|s) = exp(−∫ₛᵗ γ_i(u) du)`, `0 ≤ s ≤ t`.
    pub fn conditional_survival(&self, i: usize, t: f64, s: f64) -> Result<f64> {
        if s < 0.0 || s > t {
            return Err(Error::Precondition(format!(
                "conditional survival needs 0 ≤ s ≤ t, got s={s}, t={t}"
            )));
        }
        Ok((-(self.total_hazard_integral(i, t) - self.total_hazard_integral(i, s))).exp())
    }

    /// First-switch density `f_i(t) = γ_i(t) F̄_i(t)`.
    pub fn switch_density(&self, i: usize, t: f64) -> f64 {
        self.total_hazard_value(i, t) * self.survival(i, t)
    }

    /// Joint density of (first switch at `t`, target `j`):
    /// `γ_ij(t) F̄_i(t)`. This is the renewal kernel of the Volterra
    /// systems; for d = 2 it coincides with `f_i`.
    pub fn transition_kernel(&self, i: usize, j: usize, t: f64) -> f64 {
        self.hazard(i, j).value(t) * self.survival(i, t)
    }

    /// Accumulated drift `l_i(t) = ∫₀ᵗ c_i(u) du`.
    pub fn drift_integral(&self, i: usize, t: f64) -> f64 {
        self.regimes[i].c.integral(t)
    }

    /// Accumulated squared volatility `Σ_i(t)² = ∫₀ᵗ σ_i(u)² du`.
    pub fn sigma_sq_integral(&self, i: usize, t: f64) -> f64 {
        self.regimes[i].sigma.square_integral(t)
    }

    /// Times in `(0, horizon)` where any descriptor of the model changes
    /// its analytic form, merged and sorted.
    pub fn kink_points(&self, horizon: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        for r in &self.regimes {
            pts.extend(r.c.kink_points(horizon));
            pts.extend(r.h.kink_points(horizon));
            pts.extend(r.sigma.kink_points(horizon));
        }
        for (_, _, d) in self.hazard_entries() {
            pts.extend(d.kink_points(horizon));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }
}

/// Girsanov data `(c*, h*, σ*)` per regime, defining the density
/// `Z(t) = E_t(X*)` of an equivalent measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureChangeSpec {
    pub c_star: Vec<Descriptor>,
    pub h_star: Vec<Descriptor>,
    pub sigma_star: Vec<Descriptor>,
}

impl MeasureChangeSpec {
    pub fn from_constants(c_star: &[f64], h_star: &[f64], sigma_star: &[f64]) -> Self {
        Self {
            c_star: c_star.iter().map(|&v| Descriptor::Constant(v)).collect(),
            h_star: h_star.iter().map(|&v| Descriptor::Constant(v)).collect(),
            sigma_star: sigma_star.iter().map(|&v| Descriptor::Constant(v)).collect(),
        }
    }

    /// The trivial change `c* = h* = σ* = 0` (measure unchanged, `Z ≡ 1`).
    pub fn identity(d: usize) -> Self {
        Self::from_constants(&vec![0.0; d], &vec![0.0; d], &vec![0.0; d])
    }

    pub fn regime_count(&self) -> usize {
        self.c_star.len()
    }
}

/// Tolerances for invariant and condition checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Tolerance for pointwise identities (default 1e-9).
    pub tol: f64,
    /// Finite-horizon positivity floor for the transformed intensity
    /// `γ_i^Q` (proxy for the asymptotic non-exploding condition).
    pub eps_floor: f64,
    /// Number of uniform probe points on `(0, horizon]`.
    pub probes: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            eps_floor: 1e-12,
            probes: 512,
        }
    }
}

/// One violated invariant, with its location in the spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

/// Result of a validation pass: every violated invariant, or empty if valid.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "{}: {}", v.location, v.message)?;
            }
            Ok(())
        }
    }
}

fn probe_times(horizon: f64, kinks: &[f64], probes: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (1..=probes)
        .map(|k| horizon * k as f64 / probes as f64)
        .collect();
    pts.extend(kinks.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn check_hazard_invariants(report: &mut ValidationReport, loc: &str, d: &Descriptor, horizon: f64) {
    if let Descriptor::PowerLaw { scale, exponent } = d {
        if *scale < 0.0 {
            report.push(loc, "negative hazard rate");
        }
        if *exponent <= -1.0 {
            report.push(loc, "hazard not integrable at 0");
        }
    } else if d.min_on(horizon) < 0.0 {
        report.push(loc, "negative hazard rate");
    }
    if !d.diverges_at_infinity() {
        report.push(loc, "non-exploding condition fails (∫₀^∞ γ < ∞)");
    }
}

/// Validate a model against the standing assumptions: nonnegative hazards
/// integrable at the origin and diverging at infinity, nonnegative
/// volatility of a piecewise-constant kind, supported descriptor kinds for
/// the driving triplet. Malformed descriptors surface as a structural error;
/// everything else lands in the report.
pub fn validate_model(spec: &ModelSpec, horizon: f64) -> Result<ValidationReport> {
    if !(horizon > 0.0) {
        return Err(Error::Precondition(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    for (i, r) in spec.regimes().iter().enumerate() {
        r.c.check_structure(&format!("regime {} drift", i + 1))?;
        r.h.check_structure(&format!("regime {} jump", i + 1))?;
        r.sigma
            .check_structure(&format!("regime {} volatility", i + 1))?;
    }
    for (i, j, d) in spec.hazard_entries() {
        d.check_structure(&format!("hazard {}->{}", i + 1, j + 1))?;
    }

    let mut report = ValidationReport::default();
    for (i, r) in spec.regimes().iter().enumerate() {
        let loc_c = format!("regime {} drift", i + 1);
        let loc_s = format!("regime {} volatility", i + 1);
        let loc_h = format!("regime {} jump", i + 1);
        if matches!(r.c, Descriptor::PowerLaw { .. }) {
            report.push(&loc_c, "power-law drift descriptor not supported");
        }
        if matches!(r.h, Descriptor::PowerLaw { .. }) {
            report.push(&loc_h, "power-law jump descriptor not supported");
        }
        match &r.sigma {
            Descriptor::Constant(_) | Descriptor::PiecewiseConstant { .. } => {
                if r.sigma.min_on(horizon) < 0.0 {
                    report.push(&loc_s, "volatility must be nonnegative");
                }
            }
            _ => report.push(
                &loc_s,
                "volatility must be a constant or piecewise-constant descriptor",
            ),
        }
    }
    for (i, j, d) in spec.hazard_entries() {
        check_hazard_invariants(
            &mut report,
            &format!("hazard {}->{}", i + 1, j + 1),
            d,
            horizon,
        );
    }
    Ok(report)
}

/// Validate a measure change against its base model on `[0, horizon]`:
/// `h* > −1`, the balance `γ_i^P h*_i + c*_i ≡ 0` within `cfg.tol`, and the
/// positivity proxy `γ_i^Q ≥ eps_floor` wherever `γ_i^P ≥ eps_floor`
/// (dead zones of the base measure are exempt, where both intensities
/// vanish together).
pub fn validate_change(
    spec_p: &ModelSpec,
    change: &MeasureChangeSpec,
    horizon: f64,
    cfg: &CheckConfig,
) -> Result<ValidationReport> {
    let d = spec_p.regime_count();
    if change.c_star.len() != d || change.h_star.len() != d || change.sigma_star.len() != d {
        return Err(Error::Structural(format!(
            "measure change has {}/{}/{} entries for a {d}-regime model",
            change.c_star.len(),
            change.h_star.len(),
            change.sigma_star.len()
        )));
    }
    for i in 0..d {
        change.c_star[i].check_structure(&format!("c* regime {}", i + 1))?;
        change.h_star[i].check_structure(&format!("h* regime {}", i + 1))?;
        change.sigma_star[i].check_structure(&format!("sigma* regime {}", i + 1))?;
    }

    let mut report = ValidationReport::default();
    let mut kinks = spec_p.kink_points(horizon);
    for i in 0..d {
        kinks.extend(change.c_star[i].kink_points(horizon));
        kinks.extend(change.h_star[i].kink_points(horizon));
        kinks.extend(change.sigma_star[i].kink_points(horizon));
    }
    let times = probe_times(horizon, &kinks, cfg.probes);
    for i in 0..d {
        let loc = format!("regime {}", i + 1);
        let hs = &change.h_star[i];
        if hs.min_on(horizon) <= -1.0 {
            report.push(format!("h* {loc}"), "h* must stay above −1");
            continue;
        }
        let mut worst_balance: f64 = 0.0;
        let mut floor_violation: Option<f64> = None;
        for &t in &times {
            let gp = spec_p.total_hazard_value(i, t);
            if !gp.is_finite() {
                continue;
            }
            let r = gp * hs.value(t) + change.c_star[i].value(t);
            worst_balance = worst_balance.max(r.abs());
            let gq = (1.0 + hs.value(t)) * gp;
            if gp >= cfg.eps_floor && gq < cfg.eps_floor && floor_violation.is_none() {
                floor_violation = Some(t);
            }
        }
        if worst_balance > cfg.tol {
            report.push(
                format!("c*/h* {loc}"),
                format!(
                    "balance γ^P h* + c* = 0 violated (worst residual {worst_balance:.3e})"
                ),
            );
        }
        if let Some(t) = floor_violation {
            report.push(
                format!("h* {loc}"),
                format!("transformed intensity γ^Q not positive at t={t}"),
            );
        }
    }
    Ok(report)
}

/// Outcome of the martingale-condition check `γ_i h_i + c_i ≡ 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub holds: bool,
    /// Per-regime sup of `|γ_i(t) h_i(t) + c_i(t)|` over the probe grid.
    pub worst_residuals: Vec<f64>,
}

/// Evaluate the balance residual `r_i(t) = γ_i(t) h_i(t) + c_i(t)` on the
/// probe grid; the process `T^c + N^h` is a martingale iff it vanishes.
pub fn check_martingale_condition(spec: &ModelSpec, horizon: f64, tol: f64) -> MartingaleCheck {
    let times = probe_times(horizon, &spec.kink_points(horizon), 512);
    let mut worst = Vec::with_capacity(spec.regime_count());
    for i in 0..spec.regime_count() {
        let r = &spec.regimes()[i];
        let w = times
            .iter()
            .map(|&t| (spec.total_hazard_value(i, t) * r.h.value(t) + r.c.value(t)).abs())
            .fold(0.0f64, f64::max);
        worst.push(w);
    }
    MartingaleCheck {
        holds: worst.iter().all(|w| *w <= tol),
        worst_residuals: worst,
    }
}

/// Dynamics of `X` under the measure defined by `change`: drift
/// `c_i + σ_i σ*_i`, unchanged `h_i` and `σ_i`, hazards
/// `γ^Q_ij = γ^P_ij · (1 + h*_i)` (every target scaled alike, so the
/// embedded-chain transition probabilities are preserved).
pub fn apply_girsanov(
    spec_p: &ModelSpec,
    change: &MeasureChangeSpec,
    horizon: f64,
) -> Result<ModelSpec> {
    let report = validate_change(spec_p, change, horizon, &CheckConfig::default())?;
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidChange {
            location: v.location.clone(),
            reason: v.message.clone(),
        });
    }
    let grid = TabulationGrid::new(horizon);
    let d = spec_p.regime_count();
    let regimes: Vec<RegimeTriplet> = (0..d)
        .map(|i| {
            let r = spec_p.regime(i);
            RegimeTriplet {
                c: r.c.add(&r.sigma.mul(&change.sigma_star[i], &grid), &grid),
                h: r.h.clone(),
                sigma: r.sigma.clone(),
            }
        })
        .collect();
    let mut hazard_entries = Vec::new();
    for (i, j, haz) in spec_p.hazard_entries() {
        let scale = change.h_star[i].offset(1.0, &grid);
        hazard_entries.push(HazardEntry {
            from: i,
            to: j,
            rate: haz.mul(&scale, &grid),
        });
    }
    let mut out = ModelSpec::new(
        regimes,
        hazard_entries,
        format!("{}*", spec_p.measure_label),
    )?;
    out.metadata = spec_p.metadata.clone();
    out.metadata.push(
        "hazards transformed per-target by (1 + h*_i): embedded-chain transition \
         probabilities preserved"
            .to_string(),
    );
    Ok(out)
}

/// Recover the unique measure change producing prescribed target intensities:
/// `c*_i = γ_i^P − γ_i^Q` and `h*_i = −1 + γ_i^Q / γ_i^P`, with the given
/// `σ*`. Fails with an inaccessible-measure error when `γ^Q` charges a dead
/// zone of `γ^P`.
pub fn measure_change_from_intensities(
    spec_p: &ModelSpec,
    gamma_q: &[Descriptor],
    sigma_star: &[Descriptor],
    horizon: f64,
) -> Result<MeasureChangeSpec> {
    let d = spec_p.regime_count();
    if gamma_q.len() != d || sigma_star.len() != d {
        return Err(Error::Structural(format!(
            "expected {d} target intensities / σ* entries, got {}/{}",
            gamma_q.len(),
            sigma_star.len()
        )));
    }
    let grid = TabulationGrid::new(horizon);
    let cfg = CheckConfig::default();
    let mut c_star = Vec::with_capacity(d);
    let mut h_star = Vec::with_capacity(d);
    for i in 0..d {
        gamma_q[i].check_structure(&format!("γ^Q regime {}", i + 1))?;
        // total base intensity as a descriptor
        let mut gp = Descriptor::Constant(0.0);
        for j in 0..d {
            if j != i {
                gp = gp.add(spec_p.hazard(i, j), &grid);
            }
        }
        let mut kinks = gp.kink_points(horizon);
        kinks.extend(gamma_q[i].kink_points(horizon));
        for &t in &probe_times(horizon, &kinks, cfg.probes) {
            let p = gp.value(t);
            let q = gamma_q[i].value(t);
            if p < cfg.eps_floor && q > cfg.eps_floor {
                return Err(Error::InaccessibleMeasure(format!(
                    "regime {}: target intensity {q} at t={t} inside a dead zone of the base measure",
                    i + 1
                )));
            }
        }
        c_star.push(gp.sub(&gamma_q[i], &grid));
        h_star.push(gamma_q[i].div(&gp, &grid).offset(-1.0, &grid));
    }
    Ok(MeasureChangeSpec {
        c_star,
        h_star,
        sigma_star: sigma_star.to_vec(),
    })
}

// --- serde wire format ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HazardEntryRepr {
    /// 1-based regime index.
    from: usize,
    /// 1-based regime index.
    to: usize,
    rate: Descriptor,
}

#[derive(Serialize, Deserialize)]
struct ModelSpecRepr {
    d: usize,
    #[serde(default)]
    measure_label: String,
    regimes: Vec<RegimeTriplet>,
    hazards: Vec<HazardEntryRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    metadata: Vec<String>,
}

impl From<ModelSpec> for ModelSpecRepr {
    fn from(m: ModelSpec) -> Self {
        let hazards = m
            .hazards
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().enumerate().filter_map(move |(j, d)| {
                    d.as_ref().map(|d| HazardEntryRepr {
                        from: i + 1,
                        to: j + 1,
                        rate: d.clone(),
                    })
                })
            })
            .collect();
        Self {
            d: m.regimes.len(),
            measure_label: m.measure_label,
            regimes: m.regimes,
            hazards,
            metadata: m.metadata,
        }
    }
}

impl TryFrom<ModelSpecRepr> for ModelSpec {
    type Error = String;

    fn try_from(r: ModelSpecRepr) -> std::result::Result<Self, String> {
        if r.regimes.len() != r.d {
            return Err(format!(
                "d={} but {} regime triplets given",
                r.d,
                r.regimes.len()
            ));
        }
        let entries = r
            .hazards
            .into_iter()
            .map(|e| {
                if e.from == 0 || e.to == 0 {
                    return Err("hazard regime indices are 1-based".to_string());
                }
                Ok(HazardEntry {
                    from: e.from - 1,
                    to: e.to - 1,
                    rate: e.rate,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let mut m =
            ModelSpec::new(r.regimes, entries, r.measure_label).map_err(|e| e.to_string())?;
        m.metadata = r.metadata;
        Ok(m)
    }
}
