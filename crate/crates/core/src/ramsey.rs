//! Two-level Ramsey dynamics of atoms falling through two light sheets.
//!
//! The state is evolved in the rotating frame with the detuning split
//! symmetrically over the two levels,
//!
//! ```text
//! i d/dt (c1, c2) = ½ [[ δ, Ω* ], [ Ω, −δ ]] (c1, c2)
//! ```
//!
//! so free evolution multiplies `c1` by `e^{−iδt/2}` and `c2` by `e^{+iδt/2}`.
//! Pulses are either ideal square pulses or the smooth envelope seen by an
//! atom on a ballistic trajectory `z(t) = v₀t + g t²/2` through each sheet.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::consts::STANDARD_GRAVITY;
use crate::{Error, Result};

/// Envelope level that bounds each sheet's integration window.
const ENVELOPE_CUTOFF: f64 = 1e-6;
/// Steps per shortest dynamical time scale.
const STEPS_PER_SCALE: f64 = 200.0;
/// Hard cap on RK4 steps per window.
const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub amp1: Complex64,
    pub amp2: Complex64,
}

impl TwoLevelState {
    pub fn ground() -> Self {
        TwoLevelState {
            amp1: Complex64::new(1.0, 0.0),
            amp2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        TwoLevelState {
            amp1: Complex64::new(0.0, 0.0),
            amp2: Complex64::new(1.0, 0.0),
        }
    }

    /// Normalized state from arbitrary amplitudes.
    pub fn new(amp1: Complex64, amp2: Complex64) -> Result<Self> {
        let n = (amp1.norm_sqr() + amp2.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param("state", "amplitudes must be finite and not both zero"));
        }
        Ok(TwoLevelState {
            amp1: amp1 / n,
            amp2: amp2 / n,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp1.norm_sqr() + self.amp2.norm_sqr()
    }

    /// Transition probability `p = |c2|²`.
    pub fn probability(&self) -> f64 {
        self.amp2.norm_sqr()
    }

    /// `arg(c2) − arg(c1)`.
    pub fn relative_phase(&self) -> f64 {
        (self.amp2 * self.amp1.conj()).arg()
    }
}

/// Spatial intensity profile of a light sheet along the fall direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SheetProfile {
    /// `exp(−2 u²)` with `u = (z − z_c)/w`.
    Gaussian,
    /// `exp(−2 u^(2n))`.
    SuperGaussian { order: u32 },
    /// 1 for `|u| ≤ 1`, 0 outside.
    FlatTop,
}

impl SheetProfile {
    fn envelope(&self, u: f64) -> f64 {
        match *self {
            SheetProfile::Gaussian => (-2.0 * u * u).exp(),
            SheetProfile::SuperGaussian { order } => (-2.0 * (u * u).powi(order as i32)).exp(),
            // Sub-steps at the window edges may land a rounding error outside.
            SheetProfile::FlatTop => {
                if u.abs() <= 1.0 + 1e-9 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `|u|` beyond which the envelope stays below the cutoff.
    fn reach(&self) -> f64 {
        let l = (1.0 / ENVELOPE_CUTOFF).ln() / 2.0;
        match *self {
            SheetProfile::Gaussian => l.sqrt(),
            SheetProfile::SuperGaussian { order } => l.powf(1.0 / (2.0 * order as f64)),
            SheetProfile::FlatTop => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSheet {
    /// Distance of the sheet center below the release point, m.
    pub center_z: f64,
    /// `1/e²` intensity half-width along the fall direction, m.
    pub waist: f64,
    /// Complex Rabi frequency at the sheet center, rad/s.
    pub peak_rabi: Complex64,
    pub profile: SheetProfile,
}

impl LightSheet {
    pub fn gaussian(center_z: f64, waist: f64, peak_rabi: Complex64) -> Self {
        LightSheet {
            center_z,
            waist,
            peak_rabi,
            profile: SheetProfile::Gaussian,
        }
    }

    pub fn envelope(&self, z: f64) -> f64 {
        self.profile.envelope((z - self.center_z) / self.waist)
    }

    pub fn rabi_at(&self, z: f64) -> Complex64 {
        self.peak_rabi * self.envelope(z)
    }

    fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::param("waist", format!("must be positive, got {}", self.waist)));
        }
        if !self.center_z.is_finite() || !self.peak_rabi.re.is_finite() || !self.peak_rabi.im.is_finite() {
            return Err(Error::param("sheet", "center and Rabi frequency must be finite"));
        }
        if let SheetProfile::SuperGaussian { order } = self.profile {
            if order == 0 {
                return Err(Error::param("order", "super-Gaussian order must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomTrajectory {
    /// Downward velocity at release (t = 0, z = 0), m/s.
    pub initial_velocity: f64,
    /// m/s², positive downward.
    pub gravity: f64,
}

impl Default for AtomTrajectory {
    fn default() -> Self {
        AtomTrajectory {
            initial_velocity: 0.0,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl AtomTrajectory {
    pub fn position(&self, t: f64) -> f64 {
        self.initial_velocity * t + 0.5 * self.gravity * t * t
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.initial_velocity + self.gravity * t
    }

    /// First time `t ≥ 0` at which the atom reaches depth `z`.
    ///
    /// Depths above the release point (or never reached) map to `t = 0`.
    pub fn time_at(&self, z: f64) -> f64 {
        let v0 = self.initial_velocity;
        let g = self.gravity;
        if z <= 0.0 && v0 >= 0.0 {
            return 0.0;
        }
        let disc = v0 * v0 + 2.0 * g * z;
        if disc <= 0.0 {
            return 0.0;
        }
        // Stable root of g t²/2 + v0 t − z = 0.
        let root = disc.sqrt();
        let t = if v0 >= 0.0 {
            2.0 * z / (v0 + root)
        } else {
            (root - v0) / g
        };
        t.max(0.0)
    }

    /// Speed after falling a distance `drop` from the release point.
    pub fn speed_after(&self, drop: f64) -> f64 {
        (self.initial_velocity.powi(2) + 2.0 * self.gravity * drop).max(0.0).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::param("gravity", format!("must be positive, got {}", self.gravity)));
        }
        if !self.initial_velocity.is_finite() {
            return Err(Error::param("initial_velocity", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    IdealSquare,
    GaussianTransit,
}

impl std::str::FromStr for SequenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" | "ideal-square" => Ok(SequenceMode::IdealSquare),
            "transit" | "gaussian-transit" => Ok(SequenceMode::GaussianTransit),
            other => Err(Error::param("mode", format!("expected `ideal` or `transit`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    pub sheets: [LightSheet; 2],
    pub trajectory: AtomTrajectory,
    /// Two-photon detuning `δ`, rad/s.
    pub two_photon_detuning: f64,
    pub mode: SequenceMode,
    /// Area of each square pulse in ideal mode, radians.
    pub square_pulse_area: f64,
    /// Fixed RK4 step in seconds; `None` selects the default rule.
    pub step: Option<f64>,
}

impl SequenceConfig {
    /// Two identical Gaussian sheets whose center crossings are separated by
    /// `interrogation_time`, each tuned to give `pulse_area` on transit.
    pub fn symmetric(
        trajectory: AtomTrajectory,
        first_center: f64,
        interrogation_time: f64,
        waist: f64,
        pulse_area: f64,
        mode: SequenceMode,
    ) -> Result<Self> {
        trajectory.validate()?;
        if !(interrogation_time > 0.0) {
            return Err(Error::param("interrogation_time", "must be positive"));
        }
        let t1 = trajectory.time_at(first_center);
        let second_center = trajectory.position(t1 + interrogation_time);
        let mut sheets = [
            LightSheet::gaussian(first_center, waist, Complex64::new(0.0, 0.0)),
            LightSheet::gaussian(second_center, waist, Complex64::new(0.0, 0.0)),
        ];
        for sheet in sheets.iter_mut() {
            let peak = peak_rabi_for_area(sheet, &trajectory, pulse_area)?;
            sheet.peak_rabi = Complex64::new(peak, 0.0);
        }
        let cfg = SequenceConfig {
            sheets,
            trajectory,
            two_photon_detuning: 0.0,
            mode,
            square_pulse_area: pulse_area,
            step: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        for s in &self.sheets {
            s.validate()?;
        }
        if !(self.sheets[0].center_z < self.sheets[1].center_z) {
            return Err(Error::param("sheets", "sheet centers must be strictly ordered"));
        }
        if self.mode == SequenceMode::IdealSquare
            && !(self.square_pulse_area > 0.0 && self.square_pulse_area <= std::f64::consts::PI)
        {
            return Err(Error::param(
                "square_pulse_area",
                format!("must lie in (0, π], got {}", self.square_pulse_area),
            ));
        }
        if !self.two_photon_detuning.is_finite() {
            return Err(Error::param("two_photon_detuning", "must be finite"));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::param("step", "must be positive"));
            }
        }
        Ok(())
    }

    /// Ballistic time between the two sheet-center crossings.
    pub fn interrogation_time(&self) -> f64 {
        self.trajectory.time_at(self.sheets[1].center_z) - self.trajectory.time_at(self.sheets[0].center_z)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.two_photon_detuning = detuning;
        self
    }
}

/// Exact rotation under constant Rabi frequency and detuning.
pub fn evolve_square_pulse(state: TwoLevelState, rabi: Complex64, detuning: f64, duration: f64) -> TwoLevelState {
    let w = (rabi.norm_sqr() + detuning * detuning).sqrt();
    if w == 0.0 || duration == 0.0 {
        return state;
    }
    let half = 0.5 * w * duration;
    let (s, c) = half.sin_cos();
    let i = Complex64::new(0.0, 1.0);
    let k = -i * (s / w);
    // U = cos(Wt/2) I − i sin(Wt/2) M/W, M = [[δ, Ω*], [Ω, −δ]]
    let amp1 = state.amp1 * c + k * (state.amp1 * detuning + state.amp2 * rabi.conj());
    let amp2 = state.amp2 * c + k * (state.amp1 * rabi - state.amp2 * detuning);
    TwoLevelState { amp1, amp2 }
}

/// Free precession: `c1 → c1 e^{−iδt/2}`, `c2 → c2 e^{+iδt/2}`.
pub fn free_evolve(state: TwoLevelState, detuning: f64, duration: f64) -> TwoLevelState {
    let half = 0.5 * detuning * duration;
    TwoLevelState {
        amp1: state.amp1 * Complex64::from_polar(1.0, -half),
        amp2: state.amp2 * Complex64::from_polar(1.0, half),
    }
}

fn window(sheet: &LightSheet, traj: &AtomTrajectory) -> (f64, f64) {
    let reach = sheet.profile.reach() * sheet.waist;
    (
        traj.time_at(sheet.center_z - reach),
        traj.time_at(sheet.center_z + reach),
    )
}

fn rhs(y: [Complex64; 2], rabi: Complex64, detuning: f64) -> [Complex64; 2] {
    let mi = Complex64::new(0.0, -0.5);
    [
        mi * (y[0] * detuning + y[1] * rabi.conj()),
        mi * (y[0] * rabi - y[1] * detuning),
    ]
}

fn integrate_window(
    state: TwoLevelState,
    seq: &SequenceConfig,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<TwoLevelState> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(state);
    }
    let n = (span / step).ceil();
    if !(n.is_finite()) || n as usize > MAX_STEPS {
        return Err(Error::Integration(format!(
            "window of {span:.3e} s needs {n:.3e} steps of {step:.3e} s"
        )));
    }
    let n = (n as usize).max(1);
    let h = span / n as f64;
    let delta = seq.two_photon_detuning;
    let rabi = |t: f64| -> Complex64 {
        let z = seq.trajectory.position(t);
        seq.sheets.iter().map(|s| s.rabi_at(z)).sum()
    };
    let mut y = [state.amp1, state.amp2];
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let (r0, rm, r1) = (rabi(t), rabi(t + 0.5 * h), rabi(t + h));
        let k1 = rhs(y, r0, delta);
        let k2 = rhs([y[0] + k1[0] * (0.5 * h), y[1] + k1[1] * (0.5 * h)], rm, delta);
        let k3 = rhs([y[0] + k2[0] * (0.5 * h), y[1] + k2[1] * (0.5 * h)], rm, delta);
        let k4 = rhs([y[0] + k3[0] * h, y[1] + k3[1] * h], r1, delta);
        for j in 0..2 {
            y[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
        }
    }
    if !(y[0].norm().is_finite() && y[1].norm().is_finite()) {
        return Err(Error::Integration("state diverged".into()));
    }
    Ok(TwoLevelState { amp1: y[0], amp2: y[1] })
}

/// `min(w/v, 2π/|Ω|, 2π/|δ|)/200` with the fastest speed and strongest
/// sheet in the sequence.
pub fn default_step(seq: &SequenceConfig) -> f64 {
    let t_end = seq
        .sheets
        .iter()
        .map(|s| window(s, &seq.trajectory).1)
        .fold(0.0_f64, f64::max);
    let v = seq.trajectory.velocity(t_end).abs().max(seq.trajectory.initial_velocity.abs());
    let mut scale = f64::INFINITY;
    for s in &seq.sheets {
        if v > 0.0 {
            scale = scale.min(s.waist / v);
        }
        let r = s.peak_rabi.norm();
        if r > 0.0 {
            scale = scale.min(2.0 * std::f64::consts::PI / r);
        }
    }
    let d = seq.two_photon_detuning.abs();
    if d > 0.0 {
        scale = scale.min(2.0 * std::f64::consts::PI / d);
    }
    scale / STEPS_PER_SCALE
}

/// Integrates the atom's passage through both sheets.
///
/// Each sheet contributes a window where its envelope exceeds `1e-6` of the
/// peak. Windows are integrated with fixed-step RK4 (overlapping windows are
/// merged) and the gaps between them are bridged by exact free evolution.
pub fn transit_evolve(state: TwoLevelState, seq: &SequenceConfig) -> Result<TwoLevelState> {
    seq.validate()?;
    let step = seq.step.unwrap_or_else(|| default_step(seq));
    let mut windows: Vec<(f64, f64)> = seq
        .sheets
        .iter()
        .filter(|s| s.peak_rabi.norm() > 0.0)
        .map(|s| window(s, &seq.trajectory))
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }
    let mut s = state;
    let mut t = merged.first().map(|w| w.0).unwrap_or(0.0);
    for (a, b) in merged {
        s = free_evolve(s, seq.two_photon_detuning, a - t);
        s = integrate_window(s, seq, a, b, step)?;
        t = b;
    }
    Ok(s)
}

/// Pulse area `∫|Ω(t)| dt` of one sheet along the trajectory.
pub fn pulse_area(sheet: &LightSheet, traj: &AtomTrajectory) -> f64 {
    let (t0, t1) = window(sheet, traj);
    let peak = sheet.peak_rabi.norm();
    if let SheetProfile::FlatTop = sheet.profile {
        return peak * (t1 - t0);
    }
    let n = 4000;
    let h = (t1 - t0) / n as f64;
    let f = |t: f64| sheet.envelope(traj.position(t));
    let mut sum = f(t0) + f(t1);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(t0 + i as f64 * h);
    }
    peak * sum * h / 3.0
}

/// Peak Rabi magnitude that gives the sheet the requested pulse area.
pub fn peak_rabi_for_area(sheet: &LightSheet, traj: &AtomTrajectory, area: f64) -> Result<f64> {
    sheet.validate()?;
    let unit = LightSheet {
        peak_rabi: Complex64::new(1.0, 0.0),
        ..*sheet
    };
    let a1 = pulse_area(&unit, traj);
    if !(a1 > 0.0) {
        return Err(Error::Geometry("sheet is never crossed by the trajectory".into()));
    }
    Ok(area / a1)
}

fn ideal_sequence(seq: &SequenceConfig, detuning: f64) -> Result<TwoLevelState> {
    let durations: Vec<f64> = seq
        .sheets
        .iter()
        .map(|s| {
            let r = s.peak_rabi.norm();
            if r > 0.0 {
                seq.square_pulse_area / r
            } else {
                0.0
            }
        })
        .collect();
    let gap = seq.interrogation_time() - 0.5 * (durations[0] + durations[1]);
    if gap < 0.0 {
        return Err(Error::Geometry(format!(
            "square pulses of {:.3e} s and {:.3e} s overlap within T = {:.3e} s",
            durations[0],
            durations[1],
            seq.interrogation_time()
        )));
    }
    let mut s = TwoLevelState::ground();
    s = evolve_square_pulse(s, seq.sheets[0].peak_rabi, detuning, durations[0]);
    s = free_evolve(s, detuning, gap);
    s = evolve_square_pulse(s, seq.sheets[1].peak_rabi, detuning, durations[1]);
    Ok(s)
}

/// Transition probability after the full sequence, starting in `|1⟩`.
pub fn ramsey_probability(seq: &SequenceConfig, detuning: f64) -> Result<f64> {
    seq.validate()?;
    let s = match seq.mode {
        SequenceMode::IdealSquare => ideal_sequence(seq, detuning)?,
        SequenceMode::GaussianTransit => {
            transit_evolve(TwoLevelState::ground(), &seq.with_detuning(detuning))?
        }
    };
    Ok(s.probability().clamp(0.0, 1.0))
}

/// `(δ, p)` for each detuning of the grid, in grid order.
pub fn fringe_scan(seq: &SequenceConfig, detuning_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if detuning_grid.is_empty() {
        return Err(Error::param("detuning_grid", "must not be empty"));
    }
    seq.validate()?;
    detuning_grid
        .par_iter()
        .map(|&d| ramsey_probability(seq, d).map(|p| (d, p)))
        .collect()
}

/// Order-of-magnitude spectral width `1/(2π τ)` of one sheet, in Hz, with
/// `τ = 2w/v` the transit time at the speed reached after `drop_to_sheet`.
pub fn transit_bandwidth(sheet: &LightSheet, traj: &AtomTrajectory, drop_to_sheet: f64) -> Result<f64> {
    traj.validate()?;
    sheet.validate()?;
    if !(drop_to_sheet > 0.0) {
        return Err(Error::param("drop_to_sheet", "must be positive"));
    }
    let v = traj.speed_after(drop_to_sheet);
    let tau = 2.0 * sheet.waist / v;
    Ok(1.0 / (2.0 * std::f64::consts::PI * tau))
}

/// Transfer probability of the first sheet alone, starting in `|1⟩`.
pub fn single_sheet_transfer(seq: &SequenceConfig, detuning: f64) -> Result<f64> {
    let mut one = *seq;
    one.sheets[1].peak_rabi = Complex64::new(0.0, 0.0);
    let s = match seq.mode {
        SequenceMode::IdealSquare => {
            let r = seq.sheets[0].peak_rabi.norm();
            let d = if r > 0.0 { seq.square_pulse_area / r } else { 0.0 };
            evolve_square_pulse(TwoLevelState::ground(), seq.sheets[0].peak_rabi, detuning, d)
        }
        SequenceMode::GaussianTransit => transit_evolve(TwoLevelState::ground(), &one.with_detuning(detuning))?,
    };
    Ok(s.probability())
}

/// Ramsey fringe contrast `4q(1−q)` set by the single-sheet transfer `q(δ)`.
///
/// For two identical pulses the fringes oscillate between 0 and this value.
pub fn fringe_envelope(seq: &SequenceConfig, detuning: f64) -> Result<f64> {
    let q = single_sheet_transfer(seq, detuning)?;
    Ok(4.0 * q * (1.0 - q))
}

/// Full width at half maximum of the fringe envelope, in Hz.
pub fn envelope_fwhm_hz(seq: &SequenceConfig) -> Result<f64> {
    let peak = fringe_envelope(seq, 0.0)?;
    if !(peak > 0.0) {
        return Err(Error::Undefined("fringe envelope vanishes at resonance".into()));
    }
    let half = 0.5 * peak;
    let mut lo = 0.0;
    let mut hi = 2.0 * std::f64::consts::PI * 100.0;
    let mut expansions = 0;
    while fringe_envelope(seq, hi)? > half {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::Undefined("fringe envelope does not fall to half maximum".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fringe_envelope(seq, mid)? > half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * hi {
            break;
        }
    }
    Ok(2.0 * 0.5 * (lo + hi) / (2.0 * std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_pulses() {
        let r = c(2.0 * PI * 1e3, 0.0);
        let half = evolve_square_pulse(TwoLevelState::ground(), r, 0.0, FRAC_PI_2 / r.norm());
        assert!((half.probability() - 0.5).abs() < 1e-14);
        let full = evolve_square_pulse(TwoLevelState::ground(), r, 0.0, PI / r.norm());
        assert!((full.probability() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rabi_is_free_precession() {
        let d = 2.0 * PI * 300.0;
        let t = 1.3e-3;
        let s = evolve_square_pulse(TwoLevelState::ground(), c(0.0, 0.0), d, t);
        assert_eq!(s.probability(), 0.0);
        let expect = Complex64::from_polar(1.0, -d * t / 2.0);
        assert!((s.amp1 - expect).norm() < 1e-14);
    }

    #[test]
    fn free_evolution_properties() {
        let sup = TwoLevelState::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(free_evolve(sup, 5.0, 0.0), sup);
        let flipped = free_evolve(sup, PI / 2e-3, 2e-3);
        assert!((flipped.probability() - 0.5).abs() < 1e-15);
        assert!((flipped.relative_phase().abs() - PI).abs() < 1e-12);
        let a = free_evolve(free_evolve(sup, 123.0, 0.7e-3), 123.0, 1.1e-3);
        let b = free_evolve(sup, 123.0, 1.8e-3);
        assert!((a.amp1 - b.amp1).norm() < 1e-14 && (a.amp2 - b.amp2).norm() < 1e-14);
    }

    #[test]
    fn detuned_pulse_matches_generalized_rabi_formula() {
        let (r, d, t) = (2.0 * PI * 800.0, 2.0 * PI * 500.0, 0.37e-3);
        let s = evolve_square_pulse(TwoLevelState::ground(), c(r, 0.0), d, t);
        let w = (r * r + d * d).sqrt();
        let expect = (r / w).powi(2) * (w * t / 2.0).sin().powi(2);
        assert!((s.probability() - expect).abs() < 1e-14);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    fn ideal(t: f64, pulse: f64) -> SequenceConfig {
        let traj = AtomTrajectory::default();
        let mut seq = SequenceConfig::symmetric(traj, 5e-3, t, 50e-6, FRAC_PI_2, SequenceMode::IdealSquare).unwrap();
        for s in seq.sheets.iter_mut() {
            s.peak_rabi = c(FRAC_PI_2 / pulse, 0.0);
        }
        seq
    }

    #[test]
    fn ideal_fringe_limits() {
        let seq = ideal(1e-3, 1e-15);
        assert!((ramsey_probability(&seq, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let t = seq.interrogation_time();
        assert!((t - 1e-3).abs() < 1e-12);
        assert!(ramsey_probability(&seq, PI / t).unwrap() < 1e-10);
        for i in -50..=50 {
            let d = i as f64 * 2.0 * PI * 37.0;
            let p = ramsey_probability(&seq, d).unwrap();
            assert!((p - (d * t / 2.0).cos().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn fringe_scan_symmetry_and_order() {
        let seq = ideal(1e-3, 20e-6);
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 2.0 * PI * 25.0).collect();
        let scan = fringe_scan(&seq, &grid).unwrap();
        for (i, (d, _)) in scan.iter().enumerate() {
            assert_eq!(*d, grid[i]);
        }
        for i in 0..scan.len() {
            let j = scan.len() - 1 - i;
            assert!((scan[i].1 - scan[j].1).abs() < 1e-12);
        }
        assert!(fringe_scan(&seq, &[]).is_err());
    }

    #[test]
    fn zero_rabi_scan_is_flat() {
        let mut seq = ideal(1e-3, 20e-6);
        for s in seq.sheets.iter_mut() {
            s.peak_rabi = c(0.0, 0.0);
        }
        let grid = [-1e3, 0.0, 2e3];
        for (_, p) in fringe_scan(&seq, &grid).unwrap() {
            assert_eq!(p, 0.0);
        }
        seq.mode = SequenceMode::GaussianTransit;
        let out = transit_evolve(TwoLevelState::ground(), &seq).unwrap();
        assert_eq!(out, TwoLevelState::ground());
    }

    #[test]
    fn transit_resonant_ramsey_maximum() {
        let traj = AtomTrajectory::default();
        let seq = SequenceConfig::symmetric(traj, 5e-3, 2e-3, 100e-6, FRAC_PI_2, SequenceMode::GaussianTransit).unwrap();
        let out = transit_evolve(TwoLevelState::ground(), &seq).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        assert!((out.probability() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn flat_top_transit_matches_square_pulse() {
        let traj = AtomTrajectory {
            initial_velocity: 0.2,
            gravity: 9.81,
        };
        let r = c(2.0 * PI * 2e3, 2.0 * PI * 500.0);
        let sheet = LightSheet {
            center_z: 4e-3,
            waist: 80e-6,
            peak_rabi: r,
            profile: SheetProfile::FlatTop,
        };
        let far = LightSheet {
            center_z: 9e-3,
            peak_rabi: c(0.0, 0.0),
            ..sheet
        };
        let d = 2.0 * PI * 700.0;
        let seq = SequenceConfig {
            sheets: [sheet, far],
            trajectory: traj,
            two_photon_detuning: d,
            mode: SequenceMode::GaussianTransit,
            square_pulse_area: FRAC_PI_2,
            step: None,
        };
        let start = TwoLevelState::new(c(0.8, 0.1), c(0.2, -0.5)).unwrap();
        let got = transit_evolve(start, &seq).unwrap();
        let dur = traj.time_at(sheet.center_z + sheet.waist) - traj.time_at(sheet.center_z - sheet.waist);
        let want = evolve_square_pulse(start, r, d, dur);
        assert!((got.amp1 - want.amp1).norm() < 1e-6);
        assert!((got.amp2 - want.amp2).norm() < 1e-6);
    }

    #[test]
    fn super_gaussian_approaches_flat_top_area() {
        let traj = AtomTrajectory::default();
        let mk = |profile| LightSheet {
            center_z: 5e-3,
            waist: 100e-6,
            peak_rabi: c(1.0, 0.0),
            profile,
        };
        let flat = pulse_area(&mk(SheetProfile::FlatTop), &traj);
        let mut last = f64::INFINITY;
        for order in [2, 8, 32] {
            let a = pulse_area(&mk(SheetProfile::SuperGaussian { order }), &traj);
            let err = (a - flat).abs() / flat;
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.03);
    }

    #[test]
    fn step_halving_converges() {
        let traj = AtomTrajectory::default();
        let mut seq = SequenceConfig::symmetric(traj, 5e-3, 2e-3, 100e-6, FRAC_PI_2, SequenceMode::GaussianTransit)
            .unwrap()
            .with_detuning(2.0 * PI * 180.0);
        let h = default_step(&seq);
        seq.step = Some(h);
        let p1 = transit_evolve(TwoLevelState::ground(), &seq).unwrap().probability();
        seq.step = Some(h / 2.0);
        let p2 = transit_evolve(TwoLevelState::ground(), &seq).unwrap().probability();
        assert!((p1 - p2).abs() < 1e-8, "{p1} vs {p2}");
    }

    #[test]
    fn narrow_sheets_converge_to_square_pulses() {
        let traj = AtomTrajectory::default();
        let transit = SequenceConfig::symmetric(traj, 5e-3, 1e-3, 0.25e-6, FRAC_PI_2, SequenceMode::GaussianTransit).unwrap();
        let square = SequenceConfig {
            mode: SequenceMode::IdealSquare,
            ..transit
        };
        for i in -20..=20 {
            let d = i as f64 * 2.0 * PI * 100.0;
            let a = ramsey_probability(&transit, d).unwrap();
            let b = ramsey_probability(&square, d).unwrap();
            assert!((a - b).abs() < 1e-3, "δ/2π = {} Hz: {a} vs {b}", d / (2.0 * PI));
        }
    }

    #[test]
    fn bandwidth_estimator() {
        let traj = AtomTrajectory::default();
        let sheet = LightSheet::gaussian(5e-3, 100e-6, c(1.0, 0.0));
        let bw = transit_bandwidth(&sheet, &traj, 5e-3).unwrap();
        assert!((100.0..=1000.0).contains(&bw), "{bw}");
        let v = traj.speed_after(5e-3);
        let tau = 2.0 * sheet.waist / v;
        assert!((bw * tau - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // Four times the drop doubles the speed.
        let bw4 = transit_bandwidth(&sheet, &traj, 20e-3).unwrap();
        assert!((bw4 / bw - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut seq = ideal(1e-3, 1e-6);
        seq.square_pulse_area = 4.0;
        assert!(ramsey_probability(&seq, 0.0).is_err());
        let mut seq = ideal(1e-3, 1e-6);
        seq.sheets.swap(0, 1);
        assert!(seq.validate().is_err());
        assert!("transit".parse::<SequenceMode>().is_ok());
        assert!("bogus".parse::<SequenceMode>().is_err());
    }
}
