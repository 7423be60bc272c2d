//! Stochastic simulation: few-molecule first-passage samplers and a
//! direct-method SSA over per-compartment counts.
//!
//! Walls are handled by giving jumps through a reflective wall rate zero, so
//! every executed event moves a molecule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::{
    general_propensity, propensity_single_triplet, Boundary, DiffusionRates, Dimension, DomainSpec,
    ReactionScheme, SpeciesCounts,
};

/// Default cap on diffusion events per trial.
pub const DEFAULT_EVENT_CAP: u64 = 10_000_000_000;

/// Identifies the random stream of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// ChaCha8 keyed by the master seed, positioned on its own stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Collision,
    Reaction,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageSample {
    pub time: f64,
    /// Diffusion events executed.
    pub n_jumps: u64,
    pub stopped_on: StopReason,
}

/// A validated first-passage experiment that can be sampled repeatedly.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerSpec {
    /// Two walkers on a chain or a square lattice; stops on collision.
    Collision2Walkers {
        domain: DomainSpec,
        d_first: f64,
        d_second: f64,
    },
    /// Three walkers `U, V, W` on a chain; stops on collision.
    Collision3Walkers {
        domain: DomainSpec,
        rates: DiffusionRates,
    },
    /// Three walkers on a chain; stops when the reaction fires.
    Reaction3Walkers {
        domain: DomainSpec,
        rates: DiffusionRates,
        scheme: ReactionScheme,
    },
}

impl SamplerSpec {
    pub fn domain(&self) -> &DomainSpec {
        match self {
            SamplerSpec::Collision2Walkers { domain, .. }
            | SamplerSpec::Collision3Walkers { domain, .. }
            | SamplerSpec::Reaction3Walkers { domain, .. } => domain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::Collision2Walkers {
                d_first, d_second, ..
            } => {
                for d in [d_first, d_second] {
                    if !(d.is_finite() && *d >= 0.0) {
                        return Err(Error::InvalidRates(format!(
                            "invalid diffusion constant {d}"
                        )));
                    }
                }
                if d_first + d_second == 0.0 {
                    return Err(Error::InvalidRates(
                        "both diffusion constants are zero".into(),
                    ));
                }
                Ok(())
            }
            SamplerSpec::Collision3Walkers { domain, rates } => three_walker_checks(domain, rates),
            SamplerSpec::Reaction3Walkers {
                domain,
                rates,
                scheme,
            } => {
                three_walker_checks(domain, rates)?;
                if !(scheme.rate() > 0.0) {
                    return Err(Error::InvalidScheme(
                        "reaction rate must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Draws one trial. The spec must have passed [`SamplerSpec::validate`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, event_cap: u64) -> FirstPassageSample {
        match self {
            SamplerSpec::Collision2Walkers {
                domain,
                d_first,
                d_second,
            } => {
                let inv_h2 = 1.0 / (domain.h() * domain.h());
                let rates = [d_first * inv_h2, d_second * inv_h2];
                match domain.dimension() {
                    Dimension::Chain1D => {
                        walk::<2, 1, R>(domain, rates, None, None, event_cap, rng)
                    }
                    Dimension::Square2D => {
                        walk::<2, 2, R>(domain, rates, None, None, event_cap, rng)
                    }
                }
            }
            SamplerSpec::Collision3Walkers { domain, rates } => walk::<3, 1, R>(
                domain,
                rates.jump_rates(domain.h()),
                None,
                None,
                event_cap,
                rng,
            ),
            SamplerSpec::Reaction3Walkers {
                domain,
                rates,
                scheme,
            } => {
                let alpha = if scheme.is_instantaneous() {
                    None
                } else {
                    Some(propensity_single_triplet(scheme, domain).expect("validated domain"))
                };
                walk::<3, 1, R>(
                    domain,
                    rates.jump_rates(domain.h()),
                    alpha,
                    None,
                    event_cap,
                    rng,
                )
            }
        }
    }

    /// Draws one trial from fixed 1-based start positions, one entry per axis.
    pub fn sample_from<R: Rng + ?Sized>(
        &self,
        start: &[Vec<usize>],
        rng: &mut R,
        event_cap: u64,
    ) -> Result<FirstPassageSample> {
        self.validate()?;
        let domain = self.domain();
        let k = domain.compartments();
        let axes = match domain.dimension() {
            Dimension::Chain1D => 1,
            Dimension::Square2D => 2,
        };
        let walkers = match self {
            SamplerSpec::Collision2Walkers { .. } => 2,
            _ => 3,
        };
        if start.len() != walkers
            || start
                .iter()
                .any(|p| p.len() != axes || p.iter().any(|&c| c == 0 || c > k))
        {
            return Err(Error::InvalidArgument(format!(
                "start {start:?} does not give {walkers} positions in 1..={k}^{axes}"
            )));
        }
        fn pack<const W: usize, const A: usize>(start: &[Vec<usize>]) -> [[usize; A]; W] {
            let mut out = [[0; A]; W];
            for (o, s) in out.iter_mut().zip(start) {
                for (c, &x) in o.iter_mut().zip(s) {
                    *c = x - 1;
                }
            }
            out
        }
        let inv_h2 = 1.0 / (domain.h() * domain.h());
        Ok(match self {
            SamplerSpec::Collision2Walkers {
                d_first, d_second, ..
            } => {
                let rates = [d_first * inv_h2, d_second * inv_h2];
                if axes == 1 {
                    walk::<2, 1, R>(domain, rates, None, Some(pack(start)), event_cap, rng)
                } else {
                    walk::<2, 2, R>(domain, rates, None, Some(pack(start)), event_cap, rng)
                }
            }
            SamplerSpec::Collision3Walkers { rates, .. } => walk::<3, 1, R>(
                domain,
                rates.jump_rates(domain.h()),
                None,
                Some(pack(start)),
                event_cap,
                rng,
            ),
            SamplerSpec::Reaction3Walkers { rates, scheme, .. } => {
                let alpha = (!scheme.is_instantaneous())
                    .then(|| propensity_single_triplet(scheme, domain))
                    .transpose()?;
                walk::<3, 1, R>(
                    domain,
                    rates.jump_rates(domain.h()),
                    alpha,
                    Some(pack(start)),
                    event_cap,
                    rng,
                )
            }
        })
    }
}

fn three_walker_checks(domain: &DomainSpec, rates: &DiffusionRates) -> Result<()> {
    if domain.dimension() != Dimension::Chain1D {
        return Err(Error::InvalidDomain(
            "three-walker samplers run on a one-dimensional chain".into(),
        ));
    }
    if rates.positive_count() < 2 {
        return Err(Error::InvalidRates(
            "at least two diffusion rates must be positive".into(),
        ));
    }
    Ok(())
}

/// Continuous-time walk of `W` independent walkers on `K^A` sites.
///
/// `alpha = None` stops at the first collision. Otherwise a reaction channel
/// of rate `alpha` is open whenever all walkers share a site, and the walk
/// stops when it fires.
fn walk<const W: usize, const A: usize, R: Rng + ?Sized>(
    domain: &DomainSpec,
    rates: [f64; W],
    alpha: Option<f64>,
    start: Option<[[usize; A]; W]>,
    event_cap: u64,
    rng: &mut R,
) -> FirstPassageSample {
    let k = domain.compartments();
    let periodic = domain.boundary() == Boundary::Periodic;
    let mut pos = start.unwrap_or_else(|| {
        let mut p = [[0usize; A]; W];
        for walker in p.iter_mut() {
            for c in walker.iter_mut() {
                *c = rng.gen_range(0..k);
            }
        }
        p
    });
    let collided = |p: &[[usize; A]; W]| p.iter().all(|w| *w == p[0]);

    let mut time = 0.0;
    let mut n_jumps = 0u64;
    let mut channel = [0.0f64; 12];
    let n_channels = 2 * A * W;
    debug_assert!(n_channels <= channel.len());
    loop {
        let together = collided(&pos);
        if together && alpha.is_none() {
            return FirstPassageSample {
                time,
                n_jumps,
                stopped_on: StopReason::Collision,
            };
        }
        if n_jumps >= event_cap {
            return FirstPassageSample {
                time,
                n_jumps,
                stopped_on: StopReason::Cap,
            };
        }
        // Channel 2 * (w * A + a) moves walker w up along axis a, the next one down.
        let mut total = 0.0;
        for w in 0..W {
            for a in 0..A {
                let x = pos[w][a];
                let base = 2 * (w * A + a);
                let (up, down) = if periodic {
                    (rates[w], rates[w])
                } else {
                    (
                        if x + 1 < k { rates[w] } else { 0.0 },
                        if x > 0 { rates[w] } else { 0.0 },
                    )
                };
                channel[base] = up;
                channel[base + 1] = down;
                total += up + down;
            }
        }
        let reaction = if together { alpha.unwrap_or(0.0) } else { 0.0 };
        total += reaction;
        let wait: f64 = rng.sample(Exp1);
        time += wait / total;

        let mut pick = rng.gen::<f64>() * total;
        if pick < reaction {
            return FirstPassageSample {
                time,
                n_jumps,
                stopped_on: StopReason::Reaction,
            };
        }
        pick -= reaction;
        let mut chosen = n_channels;
        for (c, &rate) in channel[..n_channels].iter().enumerate() {
            if pick < rate {
                chosen = c;
                break;
            }
            pick -= rate;
        }
        if chosen == n_channels {
            // Rounding left `pick` past the last channel: take the last open one.
            chosen = (0..n_channels)
                .rev()
                .find(|&c| channel[c] > 0.0)
                .expect("positive total rate");
        }
        let (w, a) = ((chosen / 2) / A, (chosen / 2) % A);
        let x = pos[w][a];
        pos[w][a] = if chosen.is_multiple_of(2) {
            if x + 1 == k {
                0
            } else {
                x + 1
            }
        } else if x == 0 {
            k - 1
        } else {
            x - 1
        };
        n_jumps += 1;
    }
}

fn checked<R: Rng + ?Sized>(spec: SamplerSpec, rng: &mut R) -> Result<FirstPassageSample> {
    spec.validate()?;
    Ok(spec.sample(rng, DEFAULT_EVENT_CAP))
}

/// Collision time of two walkers on a square lattice, both starting uniformly.
pub fn sample_collision_2walkers_2d<R: Rng + ?Sized>(
    domain: &DomainSpec,
    du: f64,
    dv: f64,
    rng: &mut R,
) -> Result<FirstPassageSample> {
    if domain.dimension() != Dimension::Square2D {
        return Err(Error::InvalidDomain("expected a square lattice".into()));
    }
    checked(
        SamplerSpec::Collision2Walkers {
            domain: *domain,
            d_first: du,
            d_second: dv,
        },
        rng,
    )
}

/// Collision time of two walkers on a chain, both starting uniformly.
pub fn sample_collision_2walkers_1d<R: Rng + ?Sized>(
    domain: &DomainSpec,
    dv: f64,
    dw: f64,
    rng: &mut R,
) -> Result<FirstPassageSample> {
    if domain.dimension() != Dimension::Chain1D {
        return Err(Error::InvalidDomain(
            "expected a one-dimensional chain".into(),
        ));
    }
    checked(
        SamplerSpec::Collision2Walkers {
            domain: *domain,
            d_first: dv,
            d_second: dw,
        },
        rng,
    )
}

pub fn sample_collision_3walkers_1d<R: Rng + ?Sized>(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    rng: &mut R,
) -> Result<FirstPassageSample> {
    checked(
        SamplerSpec::Collision3Walkers {
            domain: *domain,
            rates: *rates,
        },
        rng,
    )
}

/// Time until a `U + V + W` triplet reacts. An infinite rate reacts on the
/// first collision.
pub fn sample_reaction_time<R: Rng + ?Sized>(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    scheme: &ReactionScheme,
    rng: &mut R,
) -> Result<FirstPassageSample> {
    checked(
        SamplerSpec::Reaction3Walkers {
            domain: *domain,
            rates: *rates,
            scheme: *scheme,
        },
        rng,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdmeEventKind {
    /// A molecule of species index `species` (0 = U, 1 = V, 2 = W) hopped.
    Diffusion {
        species: usize,
        from: usize,
        to: usize,
    },
    Reaction {
        compartment: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdmeEvent {
    pub time: f64,
    pub kind: RdmeEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdmeStop {
    /// Every propensity reached zero.
    Exhausted,
    TimeLimit,
    Cap,
}

#[derive(Debug, Clone, Copy)]
pub struct RdmeOptions {
    pub record_log: bool,
    pub max_events: u64,
}

impl Default for RdmeOptions {
    fn default() -> Self {
        Self {
            record_log: false,
            max_events: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RdmeOutcome {
    /// Counts per compartment, 0-based compartment index.
    pub state: Vec<SpeciesCounts>,
    pub time: f64,
    pub reaction_times: Vec<f64>,
    pub n_events: u64,
    pub stopped: RdmeStop,
    pub log: Option<Vec<RdmeEvent>>,
}

fn neighbours(domain: &DomainSpec, site: usize, out: &mut Vec<usize>) {
    out.clear();
    let k = domain.compartments();
    let periodic = domain.boundary() == Boundary::Periodic;
    let step = |x: usize, up: bool| -> Option<usize> {
        match (up, periodic) {
            (true, _) if x + 1 < k => Some(x + 1),
            (true, true) => Some(0),
            (false, _) if x > 0 => Some(x - 1),
            (false, true) => Some(k - 1),
            _ => None,
        }
    };
    match domain.dimension() {
        Dimension::Chain1D => {
            out.extend([step(site, true), step(site, false)].into_iter().flatten());
        }
        Dimension::Square2D => {
            let (x, y) = (site / k, site % k);
            out.extend(step(x, true).map(|x| x * k + y));
            out.extend(step(x, false).map(|x| x * k + y));
            out.extend(step(y, true).map(|y| x * k + y));
            out.extend(step(y, false).map(|y| x * k + y));
        }
    }
    // Jumps that wrap onto the same site (K = 1) move nothing.
    out.retain(|&n| n != site);
}

fn count_mut(c: &mut SpeciesCounts, species: usize) -> &mut u64 {
    match species {
        0 => &mut c.u,
        1 => &mut c.v,
        _ => &mut c.w,
    }
}

/// Direct-method SSA over every diffusion and reaction channel.
///
/// `initial` holds counts per compartment (0-based, row-major on a square
/// lattice). Runs until `t_end` (which may be infinite), until no channel
/// can fire, or until `options.max_events`.
pub fn run_ssa_rdme<R: Rng + ?Sized>(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    scheme: &ReactionScheme,
    initial: &[SpeciesCounts],
    t_end: f64,
    options: RdmeOptions,
    rng: &mut R,
) -> Result<RdmeOutcome> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let sites = domain.sites();
    if initial.len() != sites {
        return Err(Error::InvalidArgument(format!(
            "{} initial compartments for a domain of {sites}",
            initial.len()
        )));
    }
    let jump = rates.jump_rates(domain.h());
    let stoich = scheme.variant().stoichiometry();
    let mut adjacency = Vec::with_capacity(sites);
    let mut buf = Vec::new();
    for s in 0..sites {
        neighbours(domain, s, &mut buf);
        adjacency.push(buf.clone());
    }

    let mut state = initial.to_vec();
    let mut log = options.record_log.then(Vec::new);
    let mut reaction_times = Vec::new();
    let mut time = 0.0;
    let mut n_events = 0u64;
    let mut reaction = vec![0.0; sites];
    let mut diffusion = vec![[0.0; 3]; sites];

    let stopped = loop {
        if n_events >= options.max_events {
            break RdmeStop::Cap;
        }
        let mut total = 0.0;
        let mut instant = None;
        for s in 0..sites {
            let counts = state[s];
            reaction[s] = general_propensity(scheme, counts, domain)?;
            if reaction[s].is_infinite() && instant.is_none() {
                instant = Some(s);
            }
            let fanout = adjacency[s].len() as f64;
            for (sp, n) in counts.as_array().into_iter().enumerate() {
                diffusion[s][sp] = n as f64 * jump[sp] * fanout;
            }
            total += reaction[s] + diffusion[s].iter().sum::<f64>();
        }
        let chosen_reaction = if let Some(s) = instant {
            Some(s)
        } else {
            if total == 0.0 {
                break RdmeStop::Exhausted;
            }
            let wait: f64 = rng.sample(Exp1);
            let next = time + wait / total;
            if next > t_end {
                time = t_end;
                break RdmeStop::TimeLimit;
            }
            time = next;
            let mut pick = rng.gen::<f64>() * total;
            let mut found = None;
            'search: for s in 0..sites {
                if pick < reaction[s] {
                    found = Some(Some(s));
                    break 'search;
                }
                pick -= reaction[s];
                for sp in 0..3 {
                    let rate = diffusion[s][sp];
                    if pick < rate {
                        let fanout = adjacency[s].len();
                        let slot = ((pick / rate) * fanout as f64) as usize;
                        let to = adjacency[s][slot.min(fanout - 1)];
                        *count_mut(&mut state[s], sp) -= 1;
                        *count_mut(&mut state[to], sp) += 1;
                        if let Some(log) = log.as_mut() {
                            log.push(RdmeEvent {
                                time,
                                kind: RdmeEventKind::Diffusion {
                                    species: sp,
                                    from: s,
                                    to,
                                },
                            });
                        }
                        found = Some(None);
                        break 'search;
                    }
                    pick -= rate;
                }
            }
            match found {
                Some(r) => r,
                // Rounding overshoot: redraw without counting an event.
                None => continue,
            }
        };
        if let Some(s) = chosen_reaction {
            for (sp, need) in stoich.into_iter().enumerate() {
                *count_mut(&mut state[s], sp) -= need;
            }
            reaction_times.push(time);
            if let Some(log) = log.as_mut() {
                log.push(RdmeEvent {
                    time,
                    kind: RdmeEventKind::Reaction { compartment: s },
                });
            }
        }
        n_events += 1;
    };

    Ok(RdmeOutcome {
        state,
        time,
        reaction_times,
        n_events,
        stopped,
        log,
    })
}
