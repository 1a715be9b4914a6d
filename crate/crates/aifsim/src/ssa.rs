//! Exact stochastic simulation (Gillespie direct method) and parallel
//! ensembles with streaming statistics.
//!
//! Trajectories are independent tasks; each one draws from its own RNG
//! stream keyed by `(base_seed, trajectory_index)`. Ensemble moments are
//! accumulated per fixed-size chunk of trajectory indices and the chunk
//! accumulators are merged in index order, so results are bit-identical
//! across worker counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::controller::{ClosedLoopConfig, ClosedLoopNetwork, FeedbackKind};
use crate::error::{Error, Result};
use crate::model::{Network, Reaction};
use crate::rng::Xoshiro256pp;
use crate::stats::MomentAccumulator;

/// Trajectories per accumulation chunk. Fixed: the chunking (not the thread
/// count) determines the merge order and therefore the rounding.
const CHUNK: usize = 64;

/// Sample times for ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    points: Vec<f64>,
}

impl TimeGrid {
    /// `n_points` evenly spaced samples from 0 to `t_end` inclusive.
    pub fn uniform(t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_end > 0.0) || n_points < 2 {
            return Err(Error::Config(
                "time grid needs t_end > 0 and at least two points".into(),
            ));
        }
        let step = t_end / (n_points - 1) as f64;
        let points = (0..n_points).map(|i| i as f64 * step).collect();
        Ok(Self { t_end, points })
    }

    pub fn from_points(t_end: f64, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points[0] != 0.0 {
            return Err(Error::Config("grid must start at time 0".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid times must be strictly increasing".into()));
        }
        if *points.last().unwrap() > t_end {
            return Err(Error::Config("grid extends past t_end".into()));
        }
        Ok(Self { t_end, points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reproducible seeding: trajectory `i` uses the stream `(base_seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub base_seed: u64,
}

impl SeedPlan {
    pub fn new(base_seed: u64) -> Self {
        Self { base_seed }
    }

    pub fn trajectory_rng(&self, index: u64) -> Xoshiro256pp {
        Xoshiro256pp::from_key(self.base_seed, index)
    }
}

/// One sampled path: jump times and the state after each jump
/// (piecewise constant in between).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub n_species: usize,
    states: Vec<u64>,
}

impl Trajectory {
    pub fn n_jumps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn state_at_index(&self, i: usize) -> &[u64] {
        &self.states[i * self.n_species..(i + 1) * self.n_species]
    }

    /// State at time `t` (left-continuous sampling: last jump <= t).
    pub fn state_at_time(&self, t: f64) -> &[u64] {
        let idx = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.state_at_index(idx)
    }

    pub fn final_state(&self) -> &[u64] {
        self.state_at_index(self.times.len() - 1)
    }
}

struct CompiledNetwork<'a> {
    reactions: &'a [Reaction],
    deltas: Vec<Vec<i64>>,
}

impl<'a> CompiledNetwork<'a> {
    fn new(net: &'a Network) -> Self {
        Self {
            reactions: net.reactions(),
            deltas: net.reactions().iter().map(|r| r.net_change()).collect(),
        }
    }

    #[inline]
    fn total_propensity(&self, counts: &[u64], propensities: &mut [f64]) -> f64 {
        let mut a0 = 0.0;
        for (k, r) in self.reactions.iter().enumerate() {
            let a = r.propensity_unchecked(counts);
            propensities[k] = a;
            a0 += a;
        }
        a0
    }

    #[inline]
    fn fire(&self, k: usize, counts: &mut [u64]) -> Result<()> {
        for (i, &delta) in self.deltas[k].iter().enumerate() {
            let next = counts[i] as i64 + delta;
            if next < 0 {
                return Err(Error::Numeric(format!(
                    "reaction {k} drove species {i} negative at counts {counts:?}"
                )));
            }
            counts[i] = next as u64;
        }
        Ok(())
    }
}

#[inline]
fn select_reaction(propensities: &[f64], a0: f64, u: f64) -> usize {
    let target = u * a0;
    let mut cumulative = 0.0;
    let mut selected = 0;
    let mut any = false;
    for (k, &a) in propensities.iter().enumerate() {
        if a > 0.0 {
            selected = k;
            any = true;
            cumulative += a;
            if target < cumulative {
                return k;
            }
        }
    }
    debug_assert!(any);
    // Rounding pushed the target past the cumulative sum; take the last
    // reaction with positive propensity.
    selected
}

/// Simulate one exact trajectory up to `t_end`, recording every jump.
pub fn simulate(network: &Network, x0: &[u64], t_end: f64, seed: u64) -> Result<Trajectory> {
    if x0.len() != network.dim() {
        return Err(Error::Structure(format!(
            "initial state has {} entries, network has {} species",
            x0.len(),
            network.dim()
        )));
    }
    if !(t_end > 0.0) {
        return Err(Error::Config("t_end must be positive".into()));
    }
    let compiled = CompiledNetwork::new(network);
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let mut counts = x0.to_vec();
    let mut propensities = vec![0.0; network.n_reactions()];
    let mut t = 0.0;

    let mut times = vec![0.0];
    let mut states = counts.clone();

    loop {
        let a0 = compiled.total_propensity(&counts, &mut propensities);
        if !a0.is_finite() {
            return Err(Error::Numeric(format!(
                "total propensity {a0} at state {counts:?}"
            )));
        }
        if a0 == 0.0 {
            break; // absorbing: state holds until t_end
        }
        t += rng.exp(a0);
        if t > t_end {
            break;
        }
        let k = select_reaction(&propensities, a0, rng.next_f64());
        compiled.fire(k, &mut counts)?;
        times.push(t);
        states.extend_from_slice(&counts);
    }

    Ok(Trajectory {
        times,
        n_species: network.dim(),
        states,
    })
}

/// Walk one trajectory, emitting the left-continuous state at each grid
/// point without storing the jump history.
fn walk_sampled(
    compiled: &CompiledNetwork,
    x0: &[u64],
    grid: &[f64],
    rng: &mut Xoshiro256pp,
    mut emit: impl FnMut(usize, &[u64]),
) -> Result<()> {
    let mut counts = x0.to_vec();
    let mut propensities = vec![0.0; compiled.reactions.len()];
    let mut t = 0.0;
    let mut gi = 0;

    while gi < grid.len() {
        let a0 = compiled.total_propensity(&counts, &mut propensities);
        if !a0.is_finite() {
            return Err(Error::Numeric(format!(
                "total propensity {a0} at state {counts:?}"
            )));
        }
        if a0 == 0.0 {
            for g in gi..grid.len() {
                emit(g, &counts);
            }
            return Ok(());
        }
        let t_next = t + rng.exp(a0);
        while gi < grid.len() && grid[gi] < t_next {
            emit(gi, &counts);
            gi += 1;
        }
        if gi >= grid.len() {
            return Ok(());
        }
        let k = select_reaction(&propensities, a0, rng.next_f64());
        compiled.fire(k, &mut counts)?;
        t = t_next;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// What to accumulate per sample beyond the raw species counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    /// Species means/covariances only.
    Species,
    /// Species plus the feedback propensity channel `F(x_l)` (needed to
    /// estimate the effective proportional gain).
    Feedback,
    /// Everything above plus the product channels used by the controller
    /// invariant harness (Z1 Z2, Z1^2 Z2, Z1 Z2^2, X_l Z2).
    Invariants,
}

#[derive(Debug, Clone, PartialEq)]
struct ControllerChannels {
    controlled: usize,
    z1: usize,
    z2: usize,
    feedback: FeedbackKind,
    mu: f64,
    theta: f64,
}

/// Mapping from raw counts to the accumulated observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableLayout {
    dim: usize,
    names: Vec<String>,
    controller: Option<ControllerChannels>,
    track: Track,
}

/// Indices of the derived channels appended after the species block.
const CH_FEEDBACK: usize = 0;
const CH_Z1Z2: usize = 1;
const CH_Z1Z1Z2: usize = 2;
const CH_Z1Z2Z2: usize = 3;
const CH_XLZ2: usize = 4;

impl ObservableLayout {
    /// Track plain species statistics of any network.
    pub fn species(network: &Network) -> Self {
        Self {
            dim: network.dim(),
            names: network.species().iter().map(|s| s.name.clone()).collect(),
            controller: None,
            track: Track::Species,
        }
    }

    /// Track a closed loop at the given detail level.
    pub fn closed_loop(closed: &ClosedLoopNetwork, track: Track) -> Self {
        let names = closed
            .network
            .species()
            .iter()
            .map(|s| s.name.clone())
            .collect();
        Self {
            dim: closed.network.dim(),
            names,
            controller: Some(ControllerChannels {
                controlled: closed.config.controlled,
                z1: closed.z1_index(),
                z2: closed.z2_index(),
                feedback: closed.config.feedback,
                mu: closed.config.mu,
                theta: closed.config.theta,
            }),
            track,
        }
    }

    pub fn channel_count(&self) -> usize {
        match self.track {
            Track::Species => self.dim,
            Track::Feedback => self.dim + 1,
            Track::Invariants => self.dim + 5,
        }
    }

    /// Column labels, aligned with the observation vector.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = self.names.clone();
        if matches!(self.track, Track::Feedback | Track::Invariants) {
            labels.push("F".into());
        }
        if matches!(self.track, Track::Invariants) {
            labels.push("Z1*Z2".into());
            labels.push("Z1^2*Z2".into());
            labels.push("Z1*Z2^2".into());
            labels.push("Xl*Z2".into());
        }
        labels
    }

    pub fn species_channel(&self, i: usize) -> usize {
        debug_assert!(i < self.dim);
        i
    }

    pub fn n_species(&self) -> usize {
        self.dim
    }

    fn derived(&self, which: usize) -> Option<usize> {
        match (self.track, which) {
            (Track::Feedback, CH_FEEDBACK) => Some(self.dim),
            (Track::Invariants, w) => Some(self.dim + w),
            _ => None,
        }
    }

    pub fn feedback_channel(&self) -> Option<usize> {
        self.derived(CH_FEEDBACK)
    }

    fn fill(&self, counts: &[u64], out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(counts.iter()) {
            *o = c as f64;
        }
        if matches!(self.track, Track::Species) {
            return;
        }
        let ctrl = self
            .controller
            .as_ref()
            .expect("derived channels need controller info");
        let xl = counts[ctrl.controlled] as f64;
        let f = match ctrl.feedback {
            FeedbackKind::None => 0.0,
            FeedbackKind::OnOff { kp } => kp * (ctrl.mu - ctrl.theta * xl).max(0.0),
            FeedbackKind::Hill { kp } => kp / (1.0 + xl),
        };
        out[self.dim + CH_FEEDBACK] = f;
        if matches!(self.track, Track::Invariants) {
            let z1 = counts[ctrl.z1] as f64;
            let z2 = counts[ctrl.z2] as f64;
            out[self.dim + CH_Z1Z2] = z1 * z2;
            out[self.dim + CH_Z1Z1Z2] = z1 * z1 * z2;
            out[self.dim + CH_Z1Z2Z2] = z1 * z2 * z2;
            out[self.dim + CH_XLZ2] = xl * z2;
        }
    }
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Per-grid-point moments over an ensemble of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub grid: TimeGrid,
    pub layout: ObservableLayout,
    pub n: usize,
    accs: Vec<MomentAccumulator>,
}

impl EnsembleStats {
    pub fn point(&self, t_index: usize) -> &MomentAccumulator {
        &self.accs[t_index]
    }

    /// Mean of one channel across the grid.
    pub fn mean_series(&self, channel: usize) -> Vec<f64> {
        self.accs.iter().map(|a| a.mean(channel)).collect()
    }

    pub fn variance_series(&self, channel: usize) -> Vec<f64> {
        self.accs.iter().map(|a| a.variance(channel)).collect()
    }

    /// Time-average the ensemble moments over the final `window` fraction
    /// of the grid.
    pub fn stationary(&self, window: f64) -> Result<StationaryStats> {
        if !(window > 0.0 && window <= 1.0) {
            return Err(Error::Config("window must lie in (0, 1]".into()));
        }
        let len = self.grid.len();
        let take = ((window * len as f64).floor() as usize).min(len);
        if take < 2 {
            return Err(Error::Config(format!(
                "window {window} selects {take} grid points; need at least 2"
            )));
        }
        let tail = &self.accs[len - take..];
        let channels = self.layout.channel_count();
        let mut mean = vec![0.0; channels];
        let mut cov = vec![vec![0.0; channels]; channels];
        for acc in tail {
            for i in 0..channels {
                mean[i] += acc.mean(i);
                for j in 0..=i {
                    cov[i][j] += acc.covariance(i, j);
                }
            }
        }
        let m = take as f64;
        for i in 0..channels {
            mean[i] /= m;
            for j in 0..=i {
                cov[i][j] /= m;
                cov[j][i] = cov[i][j];
            }
        }
        Ok(StationaryStats {
            layout: self.layout.clone(),
            n_points: take,
            n_trajectories: self.n,
            mean,
            cov,
        })
    }
}

/// Tail-averaged stationary moments.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryStats {
    pub layout: ObservableLayout,
    pub n_points: usize,
    pub n_trajectories: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl StationaryStats {
    pub fn mean(&self, channel: usize) -> f64 {
        self.mean[channel]
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i][j]
    }

    pub fn variance(&self, channel: usize) -> f64 {
        self.cov[channel][channel]
    }
}

/// Run `n` independent trajectories and accumulate moments on the grid.
pub fn run_ensemble(
    network: &Network,
    x0: &[u64],
    grid: &TimeGrid,
    n: usize,
    plan: SeedPlan,
    layout: &ObservableLayout,
) -> Result<EnsembleStats> {
    if n < 2 {
        return Err(Error::Config("ensemble needs at least 2 trajectories".into()));
    }
    if x0.len() != network.dim() {
        return Err(Error::Structure(format!(
            "initial state has {} entries, network has {} species",
            x0.len(),
            network.dim()
        )));
    }
    if layout.n_species() != network.dim() {
        return Err(Error::Structure(
            "observable layout does not match network dimension".into(),
        ));
    }

    let compiled = CompiledNetwork::new(network);
    let channels = layout.channel_count();
    let points = grid.points();

    let process_chunk = |range: std::ops::Range<usize>| -> Result<Vec<MomentAccumulator>> {
        let mut accs = vec![MomentAccumulator::new(channels); points.len()];
        let mut obs = vec![0.0; channels];
        for i in range {
            let mut rng = plan.trajectory_rng(i as u64);
            walk_sampled(&compiled, x0, points, &mut rng, |g, counts| {
                layout.fill(counts, &mut obs);
                accs[g].push(&obs);
            })
            .map_err(|e| Error::Numeric(format!("trajectory {i}: {e}")))?;
        }
        Ok(accs)
    };

    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(CHUNK)
        .map(|start| start..(start + CHUNK).min(n))
        .collect();

    #[cfg(feature = "parallel")]
    let chunk_accs: Vec<Vec<MomentAccumulator>> = ranges
        .into_par_iter()
        .map(process_chunk)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let chunk_accs: Vec<Vec<MomentAccumulator>> = ranges
        .into_iter()
        .map(process_chunk)
        .collect::<Result<_>>()?;

    let mut accs = vec![MomentAccumulator::new(channels); points.len()];
    for chunk in &chunk_accs {
        for (total, part) in accs.iter_mut().zip(chunk) {
            total.merge(part);
        }
    }

    Ok(EnsembleStats {
        grid: grid.clone(),
        layout: layout.clone(),
        n,
        accs,
    })
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

/// Effective proportional gain `beta = -Cov(F(X_l), X_l) / Var(X_l)`.
///
/// The raw estimate is returned; F is non-increasing in the controlled
/// species, so slightly negative values just mean the true gain is within
/// Monte Carlo noise of zero.
pub fn estimate_beta(stationary: &StationaryStats) -> Result<f64> {
    let layout = &stationary.layout;
    let ctrl = layout
        .controller
        .as_ref()
        .ok_or_else(|| Error::Estimation("beta needs a closed-loop layout".into()))?;
    if matches!(ctrl.feedback, FeedbackKind::None) {
        return Ok(0.0);
    }
    let f_ch = layout
        .feedback_channel()
        .ok_or_else(|| Error::Estimation("run did not track the feedback channel".into()))?;
    let x_ch = layout.species_channel(ctrl.controlled);
    let var = stationary.covariance(x_ch, x_ch);
    if var <= 0.0 {
        return Err(Error::Estimation(
            "controlled species has zero stationary variance".into(),
        ));
    }
    Ok(-stationary.covariance(f_ch, x_ch) / var)
}

/// Smallest grid time after which the mean stays inside
/// `set_point * (1 ± band)` through the end of the grid.
pub fn settling_time(times: &[f64], means: &[f64], set_point: f64, band: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), means.len());
    let tol = band * set_point.abs();
    let mut settle_idx = None;
    for i in (0..means.len()).rev() {
        if (means[i] - set_point).abs() <= tol {
            settle_idx = Some(i);
        } else {
            break;
        }
    }
    settle_idx.map(|i| times[i])
}

/// One row of the controller-invariant report.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRow {
    pub name: &'static str,
    pub measured: f64,
    pub predicted: f64,
    pub relative_deviation: f64,
}

/// Check the four stationary invariants of the antithetic controller.
pub fn invariant_report(
    stationary: &StationaryStats,
    config: &ClosedLoopConfig,
) -> Result<Vec<InvariantRow>> {
    let layout = &stationary.layout;
    let ctrl = layout
        .controller
        .clone()
        .ok_or_else(|| Error::Config("invariant report needs a closed-loop run".into()))?;
    if !matches!(layout.track, Track::Invariants) {
        return Err(Error::Config(
            "run did not track the invariant channels (use Track::Invariants)".into(),
        ));
    }
    let row = |name, measured: f64, predicted: f64| InvariantRow {
        name,
        measured,
        predicted,
        relative_deviation: (measured - predicted) / predicted,
    };
    let xl = layout.species_channel(ctrl.controlled);
    let z1 = layout.species_channel(ctrl.z1);
    let z2 = layout.species_channel(ctrl.z2);
    let ch = |w| layout.derived(w).unwrap();

    let cov_x_z = stationary.covariance(xl, z1) - stationary.covariance(xl, z2);
    let e_z1z2 = stationary.mean(ch(CH_Z1Z2));
    let e_z1z1z2 = stationary.mean(ch(CH_Z1Z1Z2));
    let e_z1z2z2 = stationary.mean(ch(CH_Z1Z2Z2));
    let e_xlz2 = stationary.mean(ch(CH_XLZ2));

    Ok(vec![
        row("Cov(X_l, Z1-Z2) = mu/theta", cov_x_z, config.mu / config.theta),
        row("E[Z1 Z2] = mu/eta", e_z1z2, config.mu / config.eta),
        row(
            "E[Z1^2 Z2] = (mu/eta)(1 + E[Z1])",
            e_z1z1z2,
            config.mu / config.eta * (1.0 + stationary.mean(z1)),
        ),
        row(
            "E[Z1 Z2^2] = (mu + theta E[X_l Z2])/eta",
            e_z1z2z2,
            (config.mu + config.theta * e_xlz2) / config.eta,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateLaw, Reaction};
    use crate::presets;

    fn birth_death(birth: f64, death: f64) -> Network {
        Network::new(
            vec!["X".into()],
            vec![
                Reaction::new(vec![0], vec![1], RateLaw::MassAction { rate: birth }),
                Reaction::new(vec![1], vec![0], RateLaw::MassAction { rate: death }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn absorbing_network_stays_put() {
        let net = Network::new(
            vec!["X".into()],
            vec![Reaction::new(
                vec![0],
                vec![1],
                RateLaw::MassAction { rate: 0.0 },
            )],
        )
        .unwrap();
        let traj = simulate(&net, &[7], 10.0, 1).unwrap();
        assert_eq!(traj.n_jumps(), 0);
        assert_eq!(traj.final_state(), &[7]);

        let grid = TimeGrid::uniform(10.0, 11).unwrap();
        let layout = ObservableLayout::species(&net);
        let stats = run_ensemble(&net, &[7], &grid, 4, SeedPlan::new(1), &layout).unwrap();
        for g in 0..grid.len() {
            assert_eq!(stats.point(g).mean(0), 7.0);
            assert_eq!(stats.point(g).variance(0), 0.0);
        }
    }

    #[test]
    fn same_seed_same_jumps() {
        let net = birth_death(5.0, 1.0);
        let a = simulate(&net, &[0], 50.0, 42).unwrap();
        let b = simulate(&net, &[0], 50.0, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&net, &[0], 50.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn jump_times_increase() {
        let net = birth_death(5.0, 1.0);
        let traj = simulate(&net, &[0], 20.0, 7).unwrap();
        assert!(traj.n_jumps() > 10);
        for w in traj.times.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn birth_death_matches_poisson_law() {
        // Stationary law of 0 -> X (rate 5), X -> 0 (rate 1) is Poisson(5).
        let net = birth_death(5.0, 1.0);
        let grid = TimeGrid::uniform(20.0, 41).unwrap();
        let layout = ObservableLayout::species(&net);
        let n = 10_000;
        let stats = run_ensemble(&net, &[0], &grid, n, SeedPlan::new(11), &layout).unwrap();
        let last = stats.point(grid.len() - 1);
        // s.e. of the mean is sqrt(5/n); allow 3 standard errors.
        let se_mean = (5.0f64 / n as f64).sqrt();
        assert!(
            (last.mean(0) - 5.0).abs() < 3.0 * se_mean,
            "mean {}",
            last.mean(0)
        );
        // s.e. of the variance of a Poisson(5): sqrt((m4 - var^2)/n),
        // m4 = 3*25 + ... use generous 4 s.e. bound ~ sqrt(2*var^2 + var)/sqrt(n).
        let se_var = ((2.0 * 25.0 + 5.0) / n as f64).sqrt();
        assert!(
            (last.variance(0) - 5.0).abs() < 4.0 * se_var,
            "var {}",
            last.variance(0)
        );
    }

    #[test]
    fn pure_poisson_process_counts() {
        // 0 -> X at rate a: count at t is Poisson(a t).
        let net = Network::new(
            vec!["X".into()],
            vec![Reaction::new(
                vec![0],
                vec![1],
                RateLaw::MassAction { rate: 2.0 },
            )],
        )
        .unwrap();
        let grid = TimeGrid::uniform(10.0, 21).unwrap();
        let layout = ObservableLayout::species(&net);
        let n = 10_000;
        let stats = run_ensemble(&net, &[0], &grid, n, SeedPlan::new(3), &layout).unwrap();
        let expected = 2.0 * 10.0;
        let last = stats.point(grid.len() - 1);
        let se_mean = (expected / n as f64).sqrt();
        let se_var = ((2.0 * expected * expected + expected) / n as f64).sqrt();
        assert!((last.mean(0) - expected).abs() < 4.0 * se_mean);
        assert!((last.variance(0) - expected).abs() < 4.0 * se_var);
    }

    #[test]
    fn two_trajectory_variance_identity() {
        let net = birth_death(5.0, 1.0);
        let grid = TimeGrid::uniform(5.0, 6).unwrap();
        let layout = ObservableLayout::species(&net);
        let stats = run_ensemble(&net, &[0], &grid, 2, SeedPlan::new(4), &layout).unwrap();
        let plan = SeedPlan::new(4);
        for (g, &tg) in grid.points().iter().enumerate() {
            let mut vals = [0.0; 2];
            for (i, v) in vals.iter_mut().enumerate() {
                let mut rng = plan.trajectory_rng(i as u64);
                let mut last = 0.0;
                walk_sampled(
                    &CompiledNetwork::new(&net),
                    &[0],
                    grid.points(),
                    &mut rng,
                    |gi, counts| {
                        if gi == g {
                            last = counts[0] as f64;
                        }
                    },
                )
                .unwrap();
                *v = last;
            }
            let expect = (vals[0] - vals[1]).powi(2) / 2.0;
            assert!(
                (stats.point(g).variance(0) - expect).abs() < 1e-12,
                "t = {tg}"
            );
        }
    }

    #[test]
    fn stationary_window_selects_tail() {
        let net = birth_death(5.0, 1.0);
        let grid = TimeGrid::uniform(20.0, 41).unwrap();
        let layout = ObservableLayout::species(&net);
        let stats = run_ensemble(&net, &[0], &grid, 2_000, SeedPlan::new(8), &layout).unwrap();
        let tail = stats.stationary(0.25).unwrap();
        assert_eq!(tail.n_points, 10);
        assert!((tail.mean(0) - 5.0).abs() < 3.0 * (5.0f64 / 2000.0).sqrt() * 2.0);
        // A settled run gives nearly the same answer for window = 1 after
        // discarding the transient; compare windows 0.25 and 0.5 instead.
        let half = stats.stationary(0.5).unwrap();
        assert!((half.mean(0) - tail.mean(0)).abs() < 0.3);
        assert!(matches!(
            stats.stationary(0.01),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let net = presets::gene_network(&presets::GENE_PARAMS);
        let config = ClosedLoopConfig::new(10.0, 2.0, 100.0, 3.0, 1)
            .with_feedback(FeedbackKind::OnOff { kp: 5.0 });
        let closed = ClosedLoopNetwork::build(&net, config).unwrap();
        let layout = ObservableLayout::closed_loop(&closed, Track::Invariants);
        let grid = TimeGrid::uniform(5.0, 21).unwrap();
        let x0 = closed.initial_state(&[0, 0]).unwrap();

        let run = || {
            run_ensemble(&closed.network, &x0, &grid, 300, SeedPlan::new(99), &layout).unwrap()
        };

        #[cfg(feature = "parallel")]
        {
            let results: Vec<EnsembleStats> = [1usize, 2, 8]
                .iter()
                .map(|&threads| {
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .unwrap()
                        .install(run)
                })
                .collect();
            assert_eq!(results[0], results[1]);
            assert_eq!(results[0], results[2]);
        }
        #[cfg(not(feature = "parallel"))]
        {
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn settling_time_cases() {
        let times: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let flat = vec![5.0; 11];
        assert_eq!(settling_time(&times, &flat, 5.0, 0.02), Some(0.0));

        let never = vec![20.0; 11];
        assert_eq!(settling_time(&times, &never, 5.0, 0.02), None);

        // First-order relaxation m(t) = 5 (1 - e^{-t}), 2% band: crossing at
        // ln(50) ~ 3.912; on an integer grid the settling time is 4.
        let fine: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let relax: Vec<f64> = fine.iter().map(|&t| 5.0 * (1.0 - (-t).exp())).collect();
        let st = settling_time(&fine, &relax, 5.0, 0.02).unwrap();
        let exact = 50.0f64.ln();
        assert!((st - exact).abs() <= 0.1 + 1e-12, "settle {st} vs {exact}");

        // Re-entering the band after leaving it does not count.
        let mut wobble = relax.clone();
        wobble[60] = 4.0;
        let st2 = settling_time(&fine, &wobble, 5.0, 0.02).unwrap();
        assert!(st2 > fine[60]);
    }

    #[test]
    fn beta_zero_without_feedback() {
        let net = presets::gene_network(&presets::GENE_PARAMS);
        let config = ClosedLoopConfig::new(10.0, 2.0, 100.0, 3.0, 1);
        let closed = ClosedLoopNetwork::build(&net, config).unwrap();
        let layout = ObservableLayout::closed_loop(&closed, Track::Feedback);
        let grid = TimeGrid::uniform(10.0, 21).unwrap();
        let x0 = closed.initial_state(&[0, 0]).unwrap();
        let stats =
            run_ensemble(&closed.network, &x0, &grid, 200, SeedPlan::new(5), &layout).unwrap();
        let beta = estimate_beta(&stats.stationary(0.5).unwrap()).unwrap();
        assert_eq!(beta, 0.0);
    }
}
