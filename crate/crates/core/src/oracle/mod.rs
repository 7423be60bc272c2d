//! Exact mean first-passage times on small lattices.
//!
//! Every problem is a continuous-time (or discrete-time) Markov chain over
//! the full product state space. The expected hitting times `tau` solve
//! `sum_j q(s, j) (tau(s) - tau(j)) + alpha(s) tau(s) = 1` on non-target
//! states with `tau = 0` on the target set, where `alpha` is an optional
//! absorption (reaction) rate. All chains built here have symmetric jump
//! rates, so the system is symmetric positive definite and is solved with
//! conjugate gradients.
//!
//! Product states are packed row-major: for walkers `(u, v, w)` on a chain
//! the index is `(x_u * K + x_v) * K + x_w` with 0-based coordinates.

pub mod solver;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{
    propensity_single_triplet, Boundary, DiffusionRates, Dimension, DomainSpec, ReactionScheme,
};
use solver::{solve_spd, CgSettings, CsrMatrix};

/// Largest `K` for three walkers on a chain (`K^3` states).
pub const MAX_K_THREE_WALKERS: usize = 64;
/// Largest `K` for two walkers on a chain (`K^2` states).
pub const MAX_K_TWO_WALKERS_CHAIN: usize = 512;
/// Largest `K` for two walkers on a square lattice solved in full (`K^4` states).
pub const MAX_K_TWO_WALKERS_SQUARE: usize = 16;
/// Largest `K` for a single walker on a periodic `K x K` lattice.
pub const MAX_K_SINGLE_WALKER: usize = 512;
/// Largest `K` for the discrete-time step-count problems.
pub const MAX_K_DISCRETE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialDistribution {
    /// Uniform over every state, including those already in the target set.
    UniformAll,
    /// Uniform over the states outside the target set.
    UniformNonTarget,
}

/// A finite Markov chain with a target set and optional absorption.
pub trait MarkovChain {
    fn n_states(&self) -> usize;

    /// Calls `f(next_state, rate)` for every jump out of `state`.
    fn for_each_transition(&self, state: usize, f: &mut dyn FnMut(usize, f64));

    fn is_target(&self, state: usize) -> bool;

    /// Rate of leaving the chain from `state` without a jump.
    fn absorption_rate(&self, _state: usize) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct HittingSolution {
    values: Vec<f64>,
    targets: usize,
    pub residual: f64,
    pub iterations: usize,
}

impl HittingSolution {
    pub fn at(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn states(&self) -> usize {
        self.values.len()
    }

    pub fn target_count(&self) -> usize {
        self.targets
    }

    pub fn mean(&self, init: InitialDistribution) -> f64 {
        let total: f64 = self.values.iter().sum();
        match init {
            InitialDistribution::UniformAll => total / self.values.len() as f64,
            InitialDistribution::UniformNonTarget => {
                total / (self.values.len() - self.targets) as f64
            }
        }
    }

    fn result(&self, init: InitialDistribution) -> OracleResult {
        OracleResult {
            expected_time: self.mean(init),
            residual: self.residual,
            states: self.states(),
            iterations: self.iterations,
        }
    }
}

/// Mean hitting time under an initial distribution. For discrete-time
/// problems `expected_time` counts steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub expected_time: f64,
    /// Relative infinity-norm residual of the linear solve.
    pub residual: f64,
    pub states: usize,
    pub iterations: usize,
}

pub struct HittingTimeProblem<C> {
    chain: C,
    settings: CgSettings,
}

impl<C: MarkovChain> HittingTimeProblem<C> {
    pub fn new(chain: C, settings: CgSettings) -> Self {
        Self { chain, settings }
    }

    pub fn chain(&self) -> &C {
        &self.chain
    }

    /// States outside the target set that can never reach it (nor be absorbed).
    pub fn stranded_states(&self) -> usize {
        let n = self.chain.n_states();
        let mut in_degree = vec![0usize; n + 1];
        for s in 0..n {
            self.chain.for_each_transition(s, &mut |t, rate| {
                if rate > 0.0 && t != s {
                    in_degree[t + 1] += 1;
                }
            });
        }
        for i in 0..n {
            in_degree[i + 1] += in_degree[i];
        }
        let offsets = in_degree;
        let mut fill = offsets.clone();
        let mut sources = vec![0u32; offsets[n]];
        for s in 0..n {
            self.chain.for_each_transition(s, &mut |t, rate| {
                if rate > 0.0 && t != s {
                    sources[fill[t]] = s as u32;
                    fill[t] += 1;
                }
            });
        }
        let mut reached = vec![false; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            if self.chain.is_target(s) || self.chain.absorption_rate(s) > 0.0 {
                reached[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(t) = queue.pop_front() {
            for &s in &sources[offsets[t]..offsets[t + 1]] {
                let s = s as usize;
                if !reached[s] {
                    reached[s] = true;
                    queue.push_back(s);
                }
            }
        }
        reached.iter().filter(|r| !**r).count()
    }

    pub fn solve(&self) -> Result<HittingSolution> {
        let chain = &self.chain;
        let n = chain.n_states();
        let is_target: Vec<bool> = (0..n).map(|s| chain.is_target(s)).collect();
        let targets = is_target.iter().filter(|t| **t).count();
        if targets == 0 && (0..n).all(|s| chain.absorption_rate(s) == 0.0) {
            return Err(Error::InvalidArgument(
                "hitting problem has neither targets nor absorption".into(),
            ));
        }
        let stranded = self.stranded_states();
        if stranded > 0 {
            return Err(Error::Unreachable { count: stranded });
        }

        let mut reduced = vec![usize::MAX; n];
        let mut full = Vec::with_capacity(n - targets);
        for s in (0..n).filter(|&s| !is_target[s]) {
            reduced[s] = full.len();
            full.push(s);
        }
        let matrix = CsrMatrix::from_rows(full.len(), |i, row| {
            let s = full[i];
            let mut out = chain.absorption_rate(s);
            chain.for_each_transition(s, &mut |t, rate| {
                if t == s || rate == 0.0 {
                    return;
                }
                out += rate;
                if !is_target[t] {
                    row.push((reduced[t], -rate));
                }
            });
            row.push((i, out));
        });
        if !matrix.is_symmetric(1e-12) {
            return Err(Error::InvalidArgument(
                "hitting-time system is not symmetric".into(),
            ));
        }
        let rhs = vec![1.0; full.len()];
        let outcome = solve_spd(&matrix, &rhs, &self.settings)?;
        let mut values = vec![0.0; n];
        for (i, &s) in full.iter().enumerate() {
            values[s] = outcome.x[i];
        }
        Ok(HittingSolution {
            values,
            targets,
            residual: outcome.residual,
            iterations: outcome.iterations,
        })
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Independent walkers on a `K^axes` lattice; the target is the set of
/// states with every walker on the same site.
#[derive(Debug, Clone)]
pub struct ProductLattice {
    k: usize,
    axes: usize,
    rates: Vec<f64>,
    boundary: Boundary,
    absorption: f64,
    n: usize,
}

impl ProductLattice {
    /// `rates` are per-direction hopping rates, one per walker.
    pub fn new(
        k: usize,
        axes: usize,
        rates: Vec<f64>,
        boundary: Boundary,
        cap: usize,
    ) -> Result<Self> {
        let dims = axes * rates.len();
        let n = checked_pow(k, dims)
            .filter(|&n| n <= cap)
            .ok_or(Error::StateSpaceCap {
                states: checked_pow(k, dims).unwrap_or(usize::MAX),
                cap,
            })?;
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidRates(format!(
                "invalid hopping rates {rates:?}"
            )));
        }
        Ok(Self {
            k,
            axes,
            rates,
            boundary,
            absorption: 0.0,
            n,
        })
    }

    /// Makes collision states transient with the given absorption rate.
    pub fn with_absorption(mut self, rate: f64) -> Self {
        self.absorption = rate;
        self
    }

    fn coords(&self, mut state: usize, out: &mut [usize]) {
        for c in out.iter_mut().rev() {
            *c = state % self.k;
            state /= self.k;
        }
    }

    fn collided(&self, state: usize) -> bool {
        let dims = self.axes * self.rates.len();
        let mut c = [0usize; 8];
        let c = &mut c[..dims];
        self.coords(state, c);
        let (first, rest) = c.split_at(self.axes);
        rest.chunks(self.axes).all(|w| w == first)
    }
}

impl MarkovChain for ProductLattice {
    fn n_states(&self) -> usize {
        self.n
    }

    fn for_each_transition(&self, state: usize, f: &mut dyn FnMut(usize, f64)) {
        let dims = self.axes * self.rates.len();
        let mut c = [0usize; 8];
        let c = &mut c[..dims];
        self.coords(state, c);
        let k = self.k;
        let mut stride = 1usize;
        for d in (0..dims).rev() {
            let rate = self.rates[d / self.axes];
            if rate > 0.0 {
                let x = c[d];
                let up = match self.boundary {
                    Boundary::Reflective => (x + 1 < k).then_some(x + 1),
                    Boundary::Periodic => Some((x + 1) % k),
                };
                let down = match self.boundary {
                    Boundary::Reflective => x.checked_sub(1),
                    Boundary::Periodic => Some((x + k - 1) % k),
                };
                for y in [up, down].into_iter().flatten() {
                    if y != x {
                        f(state + y * stride - x * stride, rate);
                    }
                }
            }
            stride *= k;
        }
    }

    fn is_target(&self, state: usize) -> bool {
        self.absorption == 0.0 && self.collided(state)
    }

    fn absorption_rate(&self, state: usize) -> f64 {
        if self.absorption > 0.0 && self.collided(state) {
            self.absorption
        } else {
            0.0
        }
    }
}

/// One walker on a periodic `K x K` lattice with a fixed set of
/// displacements; the target is the origin. State index is `x * K + y`.
#[derive(Debug, Clone)]
pub struct PeriodicWalker2D {
    k: usize,
    moves: Vec<([i64; 2], f64)>,
}

impl PeriodicWalker2D {
    pub fn new(k: usize, moves: Vec<([i64; 2], f64)>) -> Result<Self> {
        if k == 0 || k > MAX_K_SINGLE_WALKER.max(MAX_K_DISCRETE) {
            return Err(Error::StateSpaceCap {
                states: k.saturating_mul(k),
                cap: MAX_K_SINGLE_WALKER * MAX_K_SINGLE_WALKER,
            });
        }
        Ok(Self { k, moves })
    }

    pub fn index(&self, x: i64, y: i64) -> usize {
        let k = self.k as i64;
        (x.rem_euclid(k) * k + y.rem_euclid(k)) as usize
    }
}

impl MarkovChain for PeriodicWalker2D {
    fn n_states(&self) -> usize {
        self.k * self.k
    }

    fn for_each_transition(&self, state: usize, f: &mut dyn FnMut(usize, f64)) {
        let (x, y) = ((state / self.k) as i64, (state % self.k) as i64);
        for &([dx, dy], rate) in &self.moves {
            if rate > 0.0 {
                f(self.index(x + dx, y + dy), rate);
            }
        }
    }

    fn is_target(&self, state: usize) -> bool {
        state == 0
    }
}

/// Single-step displacement law on a square lattice: `(+-1, 0)` with
/// probability `axis_x / 2` each, `(0, +-1)` with `axis_y / 2` each and
/// `+-(1, 1)` with `diagonal / 2` each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLaw {
    pub axis_x: f64,
    pub axis_y: f64,
    pub diagonal: f64,
}

impl StepLaw {
    pub fn new(axis_x: f64, axis_y: f64, diagonal: f64) -> Result<Self> {
        let parts = [axis_x, axis_y, diagonal];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidArgument(format!(
                "step probabilities {parts:?} must be non-negative and sum to 1"
            )));
        }
        Ok(Self {
            axis_x,
            axis_y,
            diagonal,
        })
    }

    /// Nearest-neighbour walk with equal probability in all four directions.
    pub fn simple() -> Self {
        Self {
            axis_x: 0.5,
            axis_y: 0.5,
            diagonal: 0.0,
        }
    }

    /// The law of the pseudo-walker driven by three diffusion constants,
    /// sorted descending: weights `D_i / (D_u + D_v + D_w)`.
    pub fn from_rates(rates: &DiffusionRates) -> Self {
        let s = rates.sorted_desc();
        let total = s.sum();
        Self {
            axis_x: s.du() / total,
            axis_y: s.dv() / total,
            diagonal: s.dw() / total,
        }
    }

    fn moves(&self) -> Vec<([i64; 2], f64)> {
        vec![
            ([1, 0], self.axis_x / 2.0),
            ([-1, 0], self.axis_x / 2.0),
            ([0, 1], self.axis_y / 2.0),
            ([0, -1], self.axis_y / 2.0),
            ([1, 1], self.diagonal / 2.0),
            ([-1, -1], self.diagonal / 2.0),
        ]
    }
}

/// Solver front-end carrying the linear-solver settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle {
    pub settings: CgSettings,
}

fn require_chain(domain: &DomainSpec) -> Result<()> {
    if domain.dimension() != Dimension::Chain1D {
        return Err(Error::InvalidDomain(
            "expected a one-dimensional chain".into(),
        ));
    }
    Ok(())
}

fn pair_rates(d_first: f64, d_second: f64) -> Result<()> {
    for d in [d_first, d_second] {
        if !(d.is_finite() && d >= 0.0) {
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

impl Oracle {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            settings: CgSettings {
                tolerance,
                ..CgSettings::default()
            },
        }
    }

    fn solve<C: MarkovChain>(&self, chain: C) -> Result<HittingSolution> {
        HittingTimeProblem::new(chain, self.settings).solve()
    }

    fn three_walker_lattice(
        &self,
        domain: &DomainSpec,
        rates: &DiffusionRates,
    ) -> Result<ProductLattice> {
        require_chain(domain)?;
        let k = domain.compartments();
        ProductLattice::new(
            k,
            1,
            rates.jump_rates(domain.h()).to_vec(),
            domain.boundary(),
            checked_pow(MAX_K_THREE_WALKERS, 3).unwrap(),
        )
    }

    /// Per-state collision times of three walkers on a chain.
    pub fn collision_3walkers_1d_solution(
        &self,
        domain: &DomainSpec,
        rates: &DiffusionRates,
    ) -> Result<HittingSolution> {
        self.solve(self.three_walker_lattice(domain, rates)?)
    }

    pub fn mfpt_collision_3walkers_1d(
        &self,
        domain: &DomainSpec,
        rates: &DiffusionRates,
        init: InitialDistribution,
    ) -> Result<OracleResult> {
        Ok(self
            .collision_3walkers_1d_solution(domain, rates)?
            .result(init))
    }

    /// Mean time until the reaction fires, walkers uniformly placed; the
    /// reaction competes with diffusion whenever all three share a compartment.
    pub fn mean_reaction_time_3walkers_1d(
        &self,
        domain: &DomainSpec,
        rates: &DiffusionRates,
        scheme: &ReactionScheme,
    ) -> Result<OracleResult> {
        if !(scheme.rate() > 0.0) {
            return Err(Error::InvalidScheme(
                "reaction rate must be positive".into(),
            ));
        }
        if scheme.is_instantaneous() {
            return self.mfpt_collision_3walkers_1d(domain, rates, InitialDistribution::UniformAll);
        }
        let alpha = propensity_single_triplet(scheme, domain)?;
        let chain = self
            .three_walker_lattice(domain, rates)?
            .with_absorption(alpha);
        Ok(self.solve(chain)?.result(InitialDistribution::UniformAll))
    }

    /// Two walkers, both placed uniformly. Periodic square lattices are
    /// reduced to the relative displacement; other cases use the full
    /// product space.
    pub fn mfpt_collision_2walkers(
        &self,
        domain: &DomainSpec,
        d_first: f64,
        d_second: f64,
        init: InitialDistribution,
    ) -> Result<OracleResult> {
        pair_rates(d_first, d_second)?;
        match (domain.dimension(), domain.boundary()) {
            (Dimension::Square2D, Boundary::Periodic) => {
                let k = domain.compartments();
                if k > MAX_K_SINGLE_WALKER {
                    return Err(Error::StateSpaceCap {
                        states: k * k,
                        cap: MAX_K_SINGLE_WALKER * MAX_K_SINGLE_WALKER,
                    });
                }
                let h = domain.h();
                let rate = (d_first + d_second) / (h * h);
                let walker = PeriodicWalker2D::new(
                    k,
                    vec![
                        ([1, 0], rate),
                        ([-1, 0], rate),
                        ([0, 1], rate),
                        ([0, -1], rate),
                    ],
                )?;
                let solution = self.solve(walker)?;
                // The relative displacement is uniform exactly when both walkers are.
                let mut result = solution.result(InitialDistribution::UniformAll);
                if init == InitialDistribution::UniformNonTarget {
                    result.expected_time = solution.mean(InitialDistribution::UniformNonTarget);
                }
                result.states = k.pow(4);
                Ok(result)
            }
            _ => self.mfpt_collision_2walkers_product(domain, d_first, d_second, init),
        }
    }

    /// Two walkers solved over the full product space.
    pub fn mfpt_collision_2walkers_product(
        &self,
        domain: &DomainSpec,
        d_first: f64,
        d_second: f64,
        init: InitialDistribution,
    ) -> Result<OracleResult> {
        pair_rates(d_first, d_second)?;
        let (axes, cap) = match domain.dimension() {
            Dimension::Chain1D => (1, MAX_K_TWO_WALKERS_CHAIN.pow(2)),
            Dimension::Square2D => (2, MAX_K_TWO_WALKERS_SQUARE.pow(4)),
        };
        let inv_h2 = 1.0 / (domain.h() * domain.h());
        let chain = ProductLattice::new(
            domain.compartments(),
            axes,
            vec![d_first * inv_h2, d_second * inv_h2],
            domain.boundary(),
            cap,
        )?;
        Ok(self.solve(chain)?.result(init))
    }

    fn discrete_walker(&self, k: usize, law: &StepLaw) -> Result<PeriodicWalker2D> {
        if k == 0 || k > MAX_K_DISCRETE {
            return Err(Error::StateSpaceCap {
                states: k.saturating_mul(k),
                cap: MAX_K_DISCRETE * MAX_K_DISCRETE,
            });
        }
        let law = StepLaw::new(law.axis_x, law.axis_y, law.diagonal)?;
        PeriodicWalker2D::new(k, law.moves())
    }

    /// Expected number of steps for a discrete-time walker on the periodic
    /// `K x K` lattice to first reach the origin.
    pub fn expected_steps_discrete_2d(
        &self,
        k: usize,
        law: &StepLaw,
        init: InitialDistribution,
    ) -> Result<OracleResult> {
        let walker = self.discrete_walker(k, law)?;
        Ok(self.solve(walker)?.result(init))
    }

    /// As [`Oracle::expected_steps_discrete_2d`] from a given start site.
    pub fn expected_steps_discrete_2d_from(
        &self,
        k: usize,
        law: &StepLaw,
        start: [i64; 2],
    ) -> Result<OracleResult> {
        let walker = self.discrete_walker(k, law)?;
        let index = walker.index(start[0], start[1]);
        let solution = self.solve(walker)?;
        Ok(OracleResult {
            expected_time: solution.at(index),
            residual: solution.residual,
            states: solution.states(),
            iterations: solution.iterations,
        })
    }

    /// Collision time of three walkers on a periodic chain computed through
    /// the single walker `(x_u - x_w, x_v - x_w)` on the `K x K` torus.
    pub fn mfpt_pseudo_walker_trimol(
        &self,
        domain: &DomainSpec,
        rates: &DiffusionRates,
        init: InitialDistribution,
    ) -> Result<OracleResult> {
        require_chain(domain)?;
        if domain.boundary() != Boundary::Periodic {
            return Err(Error::InvalidDomain(
                "the pseudo-walker reduction holds for periodic boundaries only".into(),
            ));
        }
        let [du, dv, dw] = rates.jump_rates(domain.h());
        let walker = PeriodicWalker2D::new(
            domain.compartments(),
            vec![
                ([1, 0], du),
                ([-1, 0], du),
                ([0, 1], dv),
                ([0, -1], dv),
                ([1, 1], dw),
                ([-1, -1], dw),
            ],
        )?;
        Ok(self.solve(walker)?.result(init))
    }
}

pub fn mfpt_collision_3walkers_1d(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    init: InitialDistribution,
) -> Result<OracleResult> {
    Oracle::default().mfpt_collision_3walkers_1d(domain, rates, init)
}

pub fn mean_reaction_time_3walkers_1d(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    scheme: &ReactionScheme,
) -> Result<OracleResult> {
    Oracle::default().mean_reaction_time_3walkers_1d(domain, rates, scheme)
}

pub fn mfpt_collision_2walkers(
    domain: &DomainSpec,
    d_first: f64,
    d_second: f64,
    init: InitialDistribution,
) -> Result<OracleResult> {
    Oracle::default().mfpt_collision_2walkers(domain, d_first, d_second, init)
}

pub fn expected_steps_discrete_2d(
    k: usize,
    law: &StepLaw,
    init: InitialDistribution,
) -> Result<OracleResult> {
    Oracle::default().expected_steps_discrete_2d(k, law, init)
}

pub fn mfpt_pseudo_walker_trimol(
    domain: &DomainSpec,
    rates: &DiffusionRates,
    init: InitialDistribution,
) -> Result<OracleResult> {
    Oracle::default().mfpt_pseudo_walker_trimol(domain, rates, init)
}

#[cfg(test)]
mod tests;
