//! Genetic search over inter-transmission times, with powers from water-filling.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan_with_intervals;
use crate::error::{Error, Result};
use crate::model::{EnergyTrace, Schedule, SystemParams};
use crate::numerics::SimRng;

/// Genetic-algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    /// Population size.
    pub n_pop: usize,
    /// Number of generations after the initial population.
    pub n_iter: usize,
    /// Fraction of the population kept as parents.
    pub q_sel: f64,
    /// Number of genes mutated per child.
    pub d_cross: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            n_pop: 100,
            n_iter: 200,
            q_sel: 0.5,
            d_cross: 10,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, horizon_k: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_pop < 2 {
            problems.push(format!("n_pop must be at least 2, got {}", self.n_pop));
        }
        if !(self.q_sel > 0.0 && self.q_sel <= 1.0) {
            problems.push(format!("q_sel must lie in (0, 1], got {}", self.q_sel));
        } else if self.n_parents() < 1 {
            problems.push("n_pop * q_sel rounds to zero parents".to_string());
        }
        if self.d_cross < 1 || self.d_cross > horizon_k {
            problems.push(format!(
                "d_cross must lie in [1, K={horizon_k}], got {}",
                self.d_cross
            ));
        }
        if horizon_k == 0 {
            problems.push("horizon K must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    fn n_parents(&self) -> usize {
        (self.n_pop as f64 * self.q_sel).round() as usize
    }
}

/// A candidate: `K` genes, each a proposed inter-transmission time (0 = unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<u32>,
    /// `1 / cost`, or 0 when the decoded schedule is infeasible.
    pub fitness: f64,
}

impl Chromosome {
    /// Inter-transmission times encoded by `genes`.
    ///
    /// Zeros are skipped and genes are taken in order until they cover `k`
    /// blocks; the last one is trimmed to fit. If they fall short, the
    /// remaining blocks form a final interval.
    pub fn decode(genes: &[u32], k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut covered = 0;
        for &g in genes.iter().filter(|&&g| g > 0) {
            let x = (g as usize).min(k - covered);
            out.push(x);
            covered += x;
            if covered == k {
                return out;
            }
        }
        out.push(k - covered);
        out
    }
}

/// Result of a genetic search.
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Schedule,
    pub best_cost: f64,
    /// Best cost seen up to and including each generation, starting with the
    /// initial population.
    pub history: Vec<f64>,
}

fn evaluate(genes: &[u32], trace: &EnergyTrace, params: &SystemParams) -> Option<(Schedule, f64)> {
    let x = Chromosome::decode(genes, trace.len());
    plan_with_intervals(&x, trace, params).ok()
}

fn score(
    population: Vec<Vec<u32>>,
    trace: &EnergyTrace,
    params: &SystemParams,
) -> (Vec<Chromosome>, Option<(Schedule, f64)>) {
    let evaluated: Vec<_> = population
        .into_par_iter()
        .map(|genes| {
            let plan = evaluate(&genes, trace, params);
            (genes, plan)
        })
        .collect();
    let mut best: Option<(Schedule, f64)> = None;
    let mut scored = Vec::with_capacity(evaluated.len());
    for (genes, plan) in evaluated {
        let fitness = match plan {
            Some((s, cost)) if cost.is_finite() && cost > 0.0 => {
                if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                    best = Some((s, cost));
                }
                1.0 / cost
            }
            _ => 0.0,
        };
        scored.push(Chromosome { genes, fitness });
    }
    (scored, best)
}

// Fitness-proportional draws without replacement; uniform if every fitness is 0.
fn roulette(pop: &[Chromosome], n: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut weights: Vec<f64> = pop.iter().map(|c| c.fitness).collect();
    if weights.iter().all(|&f| f == 0.0) {
        weights.fill(1.0);
    }
    let mut chosen = Vec::with_capacity(n);
    for _ in 0..n.min(pop.len()) {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // Only zero-fitness chromosomes remain.
            let rest: Vec<usize> = (0..pop.len()).filter(|i| !chosen.contains(i)).collect();
            let pick = *rest.choose(rng).expect("n <= population size");
            chosen.push(pick);
            weights[pick] = 0.0;
            continue;
        }
        let mut r = rng.gen::<f64>() * total;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).expect("total > 0");
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 && r < w {
                pick = i;
                break;
            }
            r -= w;
        }
        chosen.push(pick);
        weights[pick] = 0.0;
    }
    chosen
}

fn mutate(parent: &[u32], d_cross: usize, up: bool, k: u32, rng: &mut SimRng) -> Vec<u32> {
    let mut child = parent.to_vec();
    for i in index::sample(rng, child.len(), d_cross.min(child.len())) {
        child[i] = if up {
            (child[i] + 1).min(k)
        } else {
            child[i].saturating_sub(1)
        };
    }
    child
}

/// Searches inter-transmission times for `trace` and returns the cheapest
/// water-filled schedule found.
///
/// Each generation keeps `round(n_pop * q_sel)` parents by roulette selection
/// and refills the population with pairs of children: one with `d_cross`
/// random genes incremented, the other with `d_cross` genes decremented.
pub fn genetic_joint_optimize(
    params: &SystemParams,
    trace: &EnergyTrace,
    config: &GaConfig,
) -> Result<GaOutcome> {
    let k = trace.len();
    config.validate(k)?;
    let mut rng = SimRng::new(config.seed);
    let k32 = u32::try_from(k).map_err(|_| Error::InvalidParams(format!("K={k} is too large")))?;
    let initial: Vec<Vec<u32>> = (0..config.n_pop)
        .map(|_| (0..k).map(|_| rng.gen_range(1..=k32)).collect())
        .collect();

    let (mut population, mut best) = score(initial, trace, params);
    let mut history = Vec::with_capacity(config.n_iter + 1);
    let track = |best: &Option<(Schedule, f64)>, history: &mut Vec<f64>| {
        history.push(best.as_ref().map_or(f64::INFINITY, |(_, c)| *c));
    };
    track(&best, &mut history);

    let n_parents = config.n_parents();
    for _ in 0..config.n_iter {
        let parents: Vec<Vec<u32>> = roulette(&population, n_parents, &mut rng)
            .into_iter()
            .map(|i| population[i].genes.clone())
            .collect();
        let mut next = parents.clone();
        while next.len() < config.n_pop {
            let a = parents.choose(&mut rng).expect("at least one parent");
            next.push(mutate(a, config.d_cross, true, k32, &mut rng));
            if next.len() < config.n_pop {
                let b = parents.choose(&mut rng).expect("at least one parent");
                next.push(mutate(b, config.d_cross, false, k32, &mut rng));
            }
        }
        let (scored, gen_best) = score(next, trace, params);
        population = scored;
        if let Some((s, c)) = gen_best {
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((s, c));
            }
        }
        track(&best, &mut history);
    }

    let (best, best_cost) = match best {
        Some(b) => b,
        None => {
            // No chromosome was feasible; never transmitting always is.
            let idle = Schedule::idle(k)?;
            let cost = crate::model::schedule_cost(&idle, params);
            (idle, cost)
        }
    };
    Ok(GaOutcome {
        best,
        best_cost,
        history,
    })
}
