//! Monte Carlo play of the games, single token and coupled pairs.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::CoupledPoint;
use crate::couplings::{CouplingError, CouplingMap};
use crate::geometry::{sample_ball_into, sample_disk_into, GridDomain, Shape, Stencil, ValueField, BALL_TOL};
use crate::linalg;
use crate::operators::{lattice_probe, GameKind, GameSpec, OperatorError};
use crate::rng;
use crate::stats::Moments;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("strategy {strategy} moved {distance} from {from:?}, beyond epsilon = {epsilon}")]
    OutOfBallMove {
        strategy: String,
        from: Vec<f64>,
        distance: f64,
        epsilon: f64,
    },
    #[error("strategy {0} returned a zero direction in the directional game")]
    ZeroDirection(String),
    #[error("max_steps must be at least 1")]
    InvalidMaxSteps,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("start point has dimension {got}, arena has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("start point {0:?} is not a lattice point of the arena")]
    NotOnLattice(Vec<f64>),
    #[error("the directional game needs a continuous arena")]
    DirectionalOnLattice,
    #[error("{coupling} coupling is not compatible with the {kind} game")]
    Incompatible { coupling: &'static str, kind: GameKind },
    #[error("coupled pair has coincident tokens")]
    CoincidentPair,
}

/// Where the token lives.
#[derive(Clone)]
pub enum Arena {
    /// Positions anywhere in R^n; play ends once the token leaves the open set.
    Continuous(Shape),
    /// Positions on the lattice of a grid domain; play ends on a strip point.
    /// Moves and noise use the lattice points of the closed epsilon-ball, the
    /// same stencil the grid solver averages over.
    Lattice(Arc<GridDomain>),
}

impl Arena {
    pub fn dim(&self) -> usize {
        match self {
            Arena::Continuous(s) => s.dim(),
            Arena::Lattice(d) => d.dim(),
        }
    }
}

/// What a strategy sees when asked to move.
pub struct MoveContext<'a> {
    pub x: &'a [f64],
    pub epsilon: f64,
    /// Admissible positions on a lattice arena; `None` on a continuous one.
    pub candidates: Option<&'a [Vec<f64>]>,
    /// In coupled play: the partner token's position before and after its
    /// move this round.
    pub partner: Option<PartnerMove<'a>>,
}

#[derive(Clone, Copy)]
pub struct PartnerMove<'a> {
    pub from: &'a [f64],
    pub to: &'a [f64],
}

/// Decision rule of a player. The returned point must lie in the closed
/// epsilon-ball around `ctx.x`; in the directional game the displacement is
/// the chosen `nu` and must be nonzero.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;
    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64>;
}

/// Step of length `min(eps, |target - x|)` toward `target`.
#[derive(Debug, Clone)]
pub struct PullToward(pub Vec<f64>);

/// Step of length `eps` away from `target`.
#[derive(Debug, Clone)]
pub struct PullAway(pub Vec<f64>);

/// Never moves.
#[derive(Debug, Clone, Copy)]
pub struct Stationary;

/// In coupled play, answers the partner's displacement with its mirror image
/// across the hyperplane bisecting the two tokens. Alone, defers to `inner`.
#[derive(Clone)]
pub struct MirrorOf(pub Arc<dyn Strategy>);

/// Moves to the candidate maximizing (or minimizing) a solved field.
#[derive(Clone)]
pub struct FieldGreedy {
    pub field: Arc<ValueField>,
    pub maximize: bool,
}

impl Strategy for PullToward {
    fn name(&self) -> String {
        format!("pull-toward{:?}", self.0)
    }

    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
        let d = linalg::sub(&self.0, ctx.x);
        let r = linalg::norm(&d);
        let step = if r <= ctx.epsilon {
            self.0.clone()
        } else {
            let mut out = vec![0.0; ctx.x.len()];
            linalg::axpy_into(&mut out, ctx.x, ctx.epsilon / r, &d);
            out
        };
        snap(ctx, step)
    }
}

impl Strategy for PullAway {
    fn name(&self) -> String {
        format!("pull-away{:?}", self.0)
    }

    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
        let d = linalg::sub(ctx.x, &self.0);
        let step = match linalg::unit(&d) {
            Some(e) => linalg::add(ctx.x, &linalg::scale(&e, ctx.epsilon)),
            None => ctx.x.to_vec(),
        };
        snap(ctx, step)
    }
}

impl Strategy for Stationary {
    fn name(&self) -> String {
        "stationary".into()
    }

    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
        ctx.x.to_vec()
    }
}

impl Strategy for MirrorOf {
    fn name(&self) -> String {
        format!("mirror-of({})", self.0.name())
    }

    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
        let Some(p) = ctx.partner else {
            return self.0.choose(ctx);
        };
        let Ok(map) = CouplingMap::mirror(p.from, ctx.x) else {
            return snap(ctx, linalg::add(ctx.x, &linalg::sub(p.to, p.from)));
        };
        let image = map.apply(&linalg::sub(p.to, p.from));
        snap(ctx, linalg::add(ctx.x, &image))
    }
}

impl Strategy for FieldGreedy {
    fn name(&self) -> String {
        if self.maximize { "field-max" } else { "field-min" }.into()
    }

    fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
        let probe: Vec<Vec<f64>>;
        let candidates = match ctx.candidates {
            Some(c) => c,
            None => {
                let h = self.field.domain().spacing();
                probe = lattice_probe(ctx.x.len(), h, ctx.epsilon)
                    .into_iter()
                    .map(|o| linalg::add(ctx.x, &o))
                    .collect();
                &probe
            }
        };
        let mut best: Option<(f64, &Vec<f64>)> = None;
        for c in candidates {
            let Some(v) = self.field.at(c).or_else(|| self.field.interpolate(c)) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((b, _)) if self.maximize => v > b,
                Some((b, _)) => v < b,
            };
            if better {
                best = Some((v, c));
            }
        }
        best.map(|(_, c)| c.clone()).unwrap_or_else(|| ctx.x.to_vec())
    }
}

/// On a lattice arena, the admissible candidate closest to `y`.
fn snap(ctx: &MoveContext<'_>, y: Vec<f64>) -> Vec<f64> {
    match ctx.candidates {
        None => y,
        Some(c) => c
            .iter()
            .min_by(|a, b| linalg::dist(a, &y).total_cmp(&linalg::dist(b, &y)))
            .cloned()
            .unwrap_or(y),
    }
}

/// Which part of the round moved the token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Player,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    /// "I", "II", or "-" for noise.
    pub mover: String,
    pub branch: Branch,
    pub position: Vec<f64>,
}

/// Rows of `step,mover,branch,x1..xn`.
pub fn log_to_csv(rows: &[LogRow]) -> String {
    let n = rows.first().map_or(0, |r| r.position.len());
    let mut out = String::from("step,mover,branch");
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for r in rows {
        let b = match r.branch {
            Branch::Player => "player",
            Branch::Noise => "noise",
        };
        out.push_str(&format!("{},{},{}", r.step, r.mover, b));
        for c in &r.position {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSettings {
    pub max_steps: usize,
    /// Pay-off reported for truncated plays.
    pub sentinel: f64,
}

impl Default for EpisodeSettings {
    fn default() -> Self {
        EpisodeSettings {
            max_steps: 1_000_000,
            sentinel: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    /// `F(exit point)`, or the sentinel when truncated.
    pub payoff: f64,
    pub exit_point: Vec<f64>,
    pub steps: usize,
    pub truncated: bool,
}

struct Board<'a> {
    arena: &'a Arena,
    stencil: Option<Stencil>,
    spec: &'a GameSpec,
}

impl<'a> Board<'a> {
    fn new(arena: &'a Arena, spec: &'a GameSpec) -> Result<Self, SimError> {
        spec.validate()?;
        let stencil = match arena {
            Arena::Continuous(_) => None,
            Arena::Lattice(d) => {
                if spec.kind == GameKind::DirectionalNoise {
                    return Err(SimError::DirectionalOnLattice);
                }
                Some(d.stencil(spec.epsilon))
            }
        };
        Ok(Board { arena, stencil, spec })
    }

    fn exited(&self, x: &[f64]) -> bool {
        match self.arena {
            Arena::Continuous(s) => !s.contains(x, 0.0),
            Arena::Lattice(d) => match d.locate(x) {
                Some(id) => !d.is_interior(id),
                None => true,
            },
        }
    }

    fn candidates(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let (Arena::Lattice(d), Some(st)) = (self.arena, &self.stencil) else {
            return None;
        };
        let id = d.locate(x)?;
        Some(d.neighbor_ids(id, st).into_iter().map(|j| d.point(j).to_vec()).collect())
    }

    /// Noise displacement for the ball games.
    fn ball_noise(&self, rng: &mut ChaCha8Rng, x: &[f64], out: &mut [f64]) {
        match self.candidates(x) {
            Some(c) if !c.is_empty() => {
                let pick = &c[rng.gen_range(0..c.len())];
                for ((o, p), xi) in out.iter_mut().zip(pick).zip(x) {
                    *o = p - xi;
                }
            }
            _ => sample_ball_into(rng, self.spec.epsilon, out),
        }
    }

    fn player_move(
        &self,
        who: &dyn Strategy,
        x: &[f64],
        partner: Option<PartnerMove<'_>>,
    ) -> Result<Vec<f64>, SimError> {
        let cands = self.candidates(x);
        let ctx = MoveContext {
            x,
            epsilon: self.spec.epsilon,
            candidates: cands.as_deref(),
            partner,
        };
        let y = who.choose(&ctx);
        let d = linalg::dist(&y, x);
        if !(d <= self.spec.epsilon * (1.0 + BALL_TOL)) || y.len() != x.len() {
            return Err(SimError::OutOfBallMove {
                strategy: who.name(),
                from: x.to_vec(),
                distance: d,
                epsilon: self.spec.epsilon,
            });
        }
        Ok(y)
    }
}

/// One round from `x`. Returns the new position, the mover label and branch.
fn play_round(
    board: &Board<'_>,
    s1: &dyn Strategy,
    s2: &dyn Strategy,
    x: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, &'static str, Branch), SimError> {
    let spec = board.spec;
    let n = x.len();
    match spec.kind {
        GameKind::RandomWalk => {
            let mut h = vec![0.0; n];
            board.ball_noise(rng, x, &mut h);
            Ok((linalg::add(x, &h), "-", Branch::Noise))
        }
        GameKind::TugOfWar | GameKind::SpaceDependent => {
            let a = if spec.kind == GameKind::TugOfWar {
                1.0
            } else {
                spec.alpha_at(x)?
            };
            if a >= 1.0 || rng.gen::<f64>() < a {
                let first = rng.gen::<bool>();
                let (who, label) = if first { (s1, "I") } else { (s2, "II") };
                Ok((board.player_move(who, x, None)?, label, Branch::Player))
            } else {
                let mut h = vec![0.0; n];
                board.ball_noise(rng, x, &mut h);
                Ok((linalg::add(x, &h), "-", Branch::Noise))
            }
        }
        GameKind::DirectionalNoise => {
            let a = spec.alpha_at(x)?;
            let first = rng.gen::<bool>();
            let (who, label) = if first { (s1, "I") } else { (s2, "II") };
            let y = board.player_move(who, x, None)?;
            let nu = linalg::sub(&y, x);
            let Some(e) = linalg::unit(&nu) else {
                return Err(SimError::ZeroDirection(who.name()));
            };
            if rng.gen::<f64>() < a {
                Ok((y, label, Branch::Player))
            } else {
                let basis = linalg::hyperplane_basis(&e);
                let mut h = vec![0.0; n];
                sample_disk_into(rng, &basis, spec.epsilon, &mut h);
                Ok((linalg::add(x, &h), label, Branch::Noise))
            }
        }
    }
}

/// Plays one game from `x0` with per-episode randomness from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    spec: &GameSpec,
    s1: &dyn Strategy,
    s2: &dyn Strategy,
    x0: &[f64],
    arena: &Arena,
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    rng: &mut ChaCha8Rng,
    settings: &EpisodeSettings,
    mut log: Option<&mut Vec<LogRow>>,
) -> Result<EpisodeOutcome, SimError> {
    if settings.max_steps == 0 {
        return Err(SimError::InvalidMaxSteps);
    }
    if x0.len() != arena.dim() {
        return Err(SimError::DimensionMismatch {
            expected: arena.dim(),
            got: x0.len(),
        });
    }
    let board = Board::new(arena, spec)?;
    if let Arena::Lattice(d) = arena {
        if d.locate(x0).is_none() && d.shape().contains(x0, 0.0) {
            return Err(SimError::NotOnLattice(x0.to_vec()));
        }
    }
    let mut x = x0.to_vec();
    if let Some(l) = log.as_deref_mut() {
        l.push(LogRow {
            step: 0,
            mover: "-".into(),
            branch: Branch::Noise,
            position: x.clone(),
        });
    }
    let mut steps = 0;
    while !board.exited(&x) {
        if steps == settings.max_steps {
            return Ok(EpisodeOutcome {
                payoff: settings.sentinel,
                exit_point: x,
                steps,
                truncated: true,
            });
        }
        let (next, mover, branch) = play_round(&board, s1, s2, &x, rng)?;
        x = next;
        steps += 1;
        if let Some(l) = log.as_deref_mut() {
            l.push(LogRow {
                step: steps,
                mover: mover.into(),
                branch,
                position: x.clone(),
            });
        }
    }
    Ok(EpisodeOutcome {
        payoff: payoff(&x),
        exit_point: x,
        steps,
        truncated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationPolicy {
    /// Leave truncated plays out of the mean; their count is still reported.
    #[default]
    Exclude,
    /// Average the sentinel in.
    Sentinel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub half_width: f64,
    pub std_error: f64,
    pub truncation_rate: f64,
    pub episodes: usize,
    pub mean_steps: f64,
}

pub const Z95: f64 = 1.959963984540054;

/// Mean of `values` with the first value as base, so constants come out exact.
fn moments_of(values: impl Iterator<Item = f64>) -> (f64, Moments) {
    let mut base = None;
    let mut m = Moments::new();
    for v in values {
        let b = *base.get_or_insert(v);
        m.push(v - b);
    }
    (base.unwrap_or(0.0), m)
}

/// Monte Carlo value of the game at `x0`; episode `i` uses stream `i` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_value(
    spec: &GameSpec,
    s1: &dyn Strategy,
    s2: &dyn Strategy,
    x0: &[f64],
    arena: &Arena,
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    episodes: usize,
    seed: u64,
    settings: &EpisodeSettings,
    policy: TruncationPolicy,
) -> Result<ValueEstimate, SimError> {
    if episodes < 2 {
        return Err(SimError::TooFewSamples(episodes));
    }
    let one = |i: usize| {
        let mut r = rng::stream(seed, i as u64);
        run_episode(spec, s1, s2, x0, arena, payoff, &mut r, settings, None)
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = {
        use rayon::prelude::*;
        (0..episodes).into_par_iter().map(one).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = (0..episodes).map(one).collect::<Result<_, _>>()?;

    let truncated = outcomes.iter().filter(|o| o.truncated).count();
    let kept = outcomes
        .iter()
        .filter(|o| policy == TruncationPolicy::Sentinel || !o.truncated)
        .map(|o| o.payoff);
    let (base, m) = moments_of(kept);
    let (mean, se) = if m.count() == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (base + m.mean(), m.std_error())
    };
    let steps: f64 = outcomes.iter().map(|o| o.steps as f64).sum();
    Ok(ValueEstimate {
        mean,
        half_width: Z95 * se,
        std_error: se,
        truncation_rate: truncated as f64 / episodes as f64,
        episodes,
        mean_steps: steps / episodes as f64,
    })
}

/// Coupled noise step with a given noise draw `h` for the x-token.
fn coupled_noise_with(coupling: &CouplingMap, pair: &CoupledPoint, h: &[f64]) -> CoupledPoint {
    let x = linalg::add(&pair.x, h);
    let z = match coupling {
        CouplingMap::Clamp { .. } => coupling.apply(&linalg::add(&pair.z, h)),
        _ => linalg::add(&pair.z, &coupling.apply(h)),
    };
    CoupledPoint { x, z }
}

fn check_compatible(coupling: &CouplingMap, spec: &GameSpec) -> Result<(), SimError> {
    let ok = match (coupling, spec.kind) {
        (CouplingMap::Mirror { .. } | CouplingMap::Clamp { .. }, GameKind::RandomWalk | GameKind::SpaceDependent) => {
            true
        }
        (CouplingMap::Rotation { from, .. }, GameKind::DirectionalNoise) => !from.is_empty(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(SimError::Incompatible {
            coupling: coupling.name(),
            kind: spec.kind,
        })
    }
}

/// One coupled noise step.
///
/// Ball noise (random walk, or the noise branch of the space-dependent game)
/// draws `h` uniform in `B(0, eps)` and moves `(x, z) -> (x + h, z + P h)`
/// for a mirror map, or `(x + h, P(z + h))` for a clamp map. Directional
/// noise uses the
/// rotation's `from`/`to` directions as the two players' `nu`: with
/// probability `alpha` both tokens jump by `eps nu`, otherwise `h` is uniform
/// on the disk orthogonal to `from` and the z-token moves by `P h`.
pub fn coupled_step(
    coupling: &CouplingMap,
    pair: &CoupledPoint,
    spec: &GameSpec,
    rng: &mut ChaCha8Rng,
) -> Result<CoupledPoint, SimError> {
    check_compatible(coupling, spec)?;
    let n = pair.dim();
    let mut h = vec![0.0; n];
    match coupling {
        CouplingMap::Rotation { from, to, .. } => {
            let a = spec.alpha_at(&pair.x)?;
            if rng.gen::<f64>() < a {
                return Ok(CoupledPoint {
                    x: linalg::add(&pair.x, &linalg::scale(from, spec.epsilon)),
                    z: linalg::add(&pair.z, &linalg::scale(to, spec.epsilon)),
                });
            }
            let basis = linalg::hyperplane_basis(from);
            sample_disk_into(rng, &basis, spec.epsilon, &mut h);
        }
        _ => sample_ball_into(rng, spec.epsilon, &mut h),
    }
    Ok(coupled_noise_with(coupling, pair, &h))
}

/// One full round of coupled play for a game with player branches: the same
/// coins drive both tokens; in a player branch the mover's strategy is
/// applied to each token, the z-token seeing the x-token's move as partner.
pub fn coupled_round(
    players: (&dyn Strategy, &dyn Strategy),
    coupling: &CouplingMap,
    pair: &CoupledPoint,
    spec: &GameSpec,
    rng: &mut ChaCha8Rng,
) -> Result<CoupledPoint, SimError> {
    let a = match spec.kind {
        GameKind::TugOfWar => 1.0,
        GameKind::RandomWalk => 0.0,
        GameKind::SpaceDependent => spec.alpha_at(&pair.x)?,
        GameKind::DirectionalNoise => return coupled_step(coupling, pair, spec, rng),
    };
    if a > 0.0 && (a >= 1.0 || rng.gen::<f64>() < a) {
        let who = if rng.gen::<bool>() { players.0 } else { players.1 };
        let arena = Arena::Continuous(Shape::Ball {
            center: vec![0.0; pair.dim()],
            radius: f64::INFINITY,
        });
        let board = Board::new(&arena, spec)?;
        let x = board.player_move(who, &pair.x, None)?;
        let partner = PartnerMove { from: &pair.x, to: &x };
        let z = board.player_move(who, &pair.z, Some(partner))?;
        return Ok(CoupledPoint { x, z });
    }
    coupled_step(coupling, pair, spec, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo `E[g(next pair)] - g(pair)` over one coupled noise step.
///
/// Ball noise is sampled in antithetic pairs `(h, -h)`, each pair counting
/// as one sample. Sample `i` uses stream `i` of `seed`.
pub fn coupled_drift(
    g: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    coupling: &CouplingMap,
    pair: &CoupledPoint,
    spec: &GameSpec,
    n_samples: usize,
    seed: u64,
) -> Result<DriftEstimate, SimError> {
    if n_samples < 2 {
        return Err(SimError::TooFewSamples(n_samples));
    }
    if pair.x == pair.z {
        return Err(SimError::CoincidentPair);
    }
    check_compatible(coupling, spec)?;
    let g0 = g(&pair.x, &pair.z);
    let antithetic = !matches!(coupling, CouplingMap::Rotation { .. });
    let one = |i: usize| -> Result<f64, SimError> {
        let mut r = rng::stream(seed, i as u64);
        if antithetic {
            let mut h = vec![0.0; pair.dim()];
            sample_ball_into(&mut r, spec.epsilon, &mut h);
            let p = coupled_noise_with(coupling, pair, &h);
            let neg: Vec<f64> = h.iter().map(|v| -v).collect();
            let q = coupled_noise_with(coupling, pair, &neg);
            Ok(0.5 * ((g(&p.x, &p.z) - g0) + (g(&q.x, &q.z) - g0)))
        } else {
            let p = coupled_step(coupling, pair, spec, &mut r)?;
            Ok(g(&p.x, &p.z) - g0)
        }
    };
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_samples).into_par_iter().map(one).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = (0..n_samples).map(one).collect::<Result<_, _>>()?;
    let mut m = Moments::new();
    values.iter().for_each(|&v| m.push(v));
    let se = m.std_error();
    Ok(DriftEstimate {
        mean: m.mean(),
        half_width: Z95 * se,
        std_error: se,
        samples: n_samples,
    })
}

impl fmt::Debug for dyn Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid_domain;

    fn strip_arena() -> Arena {
        Arena::Continuous(Shape::cube(vec![0.0, -10.0], vec![1.0, 10.0]))
    }

    #[test]
    fn outside_start_pays_immediately() {
        let spec = GameSpec::tug_of_war(0.1);
        let mut r = rng::stream(1, 0);
        let out = run_episode(
            &spec,
            &Stationary,
            &Stationary,
            &[1.5, 0.0],
            &strip_arena(),
            &|y| y[0] * 2.0,
            &mut r,
            &EpisodeSettings::default(),
            None,
        )
        .unwrap();
        assert_eq!((out.steps, out.payoff, out.truncated), (0, 3.0, false));
    }

    #[test]
    fn stationary_play_truncates_with_sentinel() {
        let spec = GameSpec::tug_of_war(0.1);
        let settings = EpisodeSettings {
            max_steps: 50,
            sentinel: -7.0,
        };
        let mut r = rng::stream(1, 0);
        let out = run_episode(&spec, &Stationary, &Stationary, &[0.5, 0.0], &strip_arena(), &|_| 1.0, &mut r, &settings, None)
            .unwrap();
        assert!(out.truncated);
        assert_eq!((out.steps, out.payoff), (50, -7.0));
        let est = estimate_value(
            &spec,
            &Stationary,
            &Stationary,
            &[0.5, 0.0],
            &strip_arena(),
            &|_| 1.0,
            4,
            3,
            &settings,
            TruncationPolicy::Exclude,
        )
        .unwrap();
        assert_eq!(est.truncation_rate, 1.0);
        assert!(est.mean.is_nan());
    }

    struct Jumper;
    impl Strategy for Jumper {
        fn name(&self) -> String {
            "jumper".into()
        }
        fn choose(&self, ctx: &MoveContext<'_>) -> Vec<f64> {
            linalg::add(ctx.x, &[2.0 * ctx.epsilon, 0.0])
        }
    }

    #[test]
    fn out_of_ball_move_is_rejected() {
        let mut r = rng::stream(1, 0);
        let err = run_episode(
            &GameSpec::tug_of_war(0.1),
            &Jumper,
            &Jumper,
            &[0.5, 0.0],
            &strip_arena(),
            &|_| 0.0,
            &mut r,
            &EpisodeSettings::default(),
            None,
        );
        assert!(matches!(err, Err(SimError::OutOfBallMove { .. })));
    }

    #[test]
    fn lattice_noise_stays_on_lattice() {
        let d = Arc::new(build_grid_domain(Shape::unit_ball(2), 0.1, 0.3).unwrap());
        let arena = Arena::Lattice(d.clone());
        let mut log = Vec::new();
        let mut r = rng::stream(5, 0);
        let out = run_episode(
            &GameSpec::random_walk(0.3),
            &Stationary,
            &Stationary,
            &[0.0, 0.0],
            &arena,
            &|y| y[0],
            &mut r,
            &EpisodeSettings::default(),
            Some(&mut log),
        )
        .unwrap();
        assert!(!out.truncated);
        for row in &log {
            assert!(d.locate(&row.position).is_some());
        }
        let id = d.locate(&out.exit_point).unwrap();
        assert!(!d.is_interior(id));
        let csv = log_to_csv(&log);
        assert!(csv.starts_with("step,mover,branch,x1,x2\n0,-,noise,0,0\n"));
    }

    #[test]
    fn mirror_strategy_reflects_partner_move() {
        let ctx = MoveContext {
            x: &[-1.0, 0.0],
            epsilon: 0.5,
            candidates: None,
            partner: Some(PartnerMove {
                from: &[1.0, 0.0],
                to: &[0.6, 0.2],
            }),
        };
        let y = MirrorOf(Arc::new(Stationary)).choose(&ctx);
        assert!((y[0] + 0.6).abs() < 1e-15 && (y[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn incompatible_coupling_is_an_error() {
        let pair = CoupledPoint::new(vec![1.0, 0.0], vec![-1.0, 0.0]);
        let m = CouplingMap::mirror(&pair.x, &pair.z).unwrap();
        let mut r = rng::stream(0, 0);
        assert!(matches!(
            coupled_step(&m, &pair, &GameSpec::tug_of_war(0.1), &mut r),
            Err(SimError::Incompatible { .. })
        ));
        assert!(matches!(
            coupled_step(&m, &pair, &GameSpec::directional(0.1, 0.5), &mut r),
            Err(SimError::Incompatible { .. })
        ));
    }
}
