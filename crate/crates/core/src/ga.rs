//! Real-coded genetic algorithm over the nine controller gains.
//!
//! Each generation is evaluated (in parallel), checked against the stopping
//! rules, and replaced by elites plus offspring bred through tournament
//! selection, whole-arithmetic crossover and single-gene Gaussian mutation.
//!
//! All randomness for a given offspring pair comes from a ChaCha stream keyed
//! by `(seed, generation, slot)`, so the result does not depend on how many
//! worker threads evaluate fitness.

use crate::control::SmcGains;
use crate::dynamics::ManipulatorParams;
use crate::sim::{simulate, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

pub const GENES: usize = 9;

/// Fitness assigned to individuals whose simulation fails or whose genes fall
/// outside the controller's domain.
pub const PENALTY_FITNESS: f64 = 1e9;

/// Mutation standard deviation as a fraction of the gene range.
pub const MUTATION_SIGMA_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("invalid GA config: {0}")]
    InvalidConfig(String),
    #[error("failed to start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub gene_bounds: [(f64, f64); GENES],
    pub convergence_threshold: f64,
    pub elitism: usize,
    pub tournament_size: usize,
    pub seed: u64,
    /// Fitness worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            max_generations: 1000,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            gene_bounds: [(0.0, 100.0); GENES],
            convergence_threshold: 0.001,
            elitism: 1,
            tournament_size: 2,
            seed: 0,
            workers: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::InvalidConfig(m));
        if self.population_size < 2 {
            return bad("population_size must be >= 2".into());
        }
        if self.max_generations < 1 {
            return bad("max_generations must be >= 1".into());
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} must lie in [0, 1] (got {r})"));
            }
        }
        for (i, &(lo, hi)) in self.gene_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("gene {} bounds [{lo}, {hi}] are invalid", i + 1));
            }
        }
        if self.convergence_threshold.is_nan() {
            return bad("convergence_threshold must be a number".into());
        }
        if self.elitism >= self.population_size {
            return bad("elitism must be < population_size".into());
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be >= 1".into());
        }
        Ok(())
    }

    fn clamp(&self, genes: &mut [f64; GENES]) {
        for (g, &(lo, hi)) in genes.iter_mut().zip(&self.gene_bounds) {
            *g = g.clamp(lo, hi);
        }
    }
}

/// Genes are ordered `c₁..c₆, λ₁..λ₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: [f64; GENES],
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genes: [f64; GENES]) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }

    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaReport {
    pub best: Individual,
    pub generations_used: usize,
    pub converged: bool,
    pub history: Vec<GenerationStats>,
}

/// Independent random stream for one `(generation, slot)` cell.
pub fn stream_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

pub fn initialize_population(cfg: &GaConfig) -> Vec<Individual> {
    (0..cfg.population_size)
        .map(|slot| {
            let mut rng = stream_rng(cfg.seed, 0, slot);
            let mut genes = [0.0; GENES];
            for (g, &(lo, hi)) in genes.iter_mut().zip(&cfg.gene_bounds) {
                *g = lo + (hi - lo) * rng.random::<f64>();
            }
            cfg.clamp(&mut genes);
            Individual::new(genes)
        })
        .collect()
}

/// ISE of the closed loop driven by `ind`'s gains; lower is better.
pub fn evaluate(ind: &Individual, fitness_cfg: &SimConfig, p: &ManipulatorParams) -> f64 {
    let gains = match SmcGains::from_slice(&ind.genes) {
        Ok(g) => g,
        Err(e) => {
            log::debug!("penalized {:?}: {e}", ind.genes);
            return PENALTY_FITNESS;
        }
    };
    match simulate(&gains, fitness_cfg, p) {
        Ok(res) if res.metrics.ise.is_finite() => res.metrics.ise,
        Ok(_) => {
            log::debug!("penalized {:?}: non-finite ISE", ind.genes);
            PENALTY_FITNESS
        }
        Err(e) => {
            log::debug!("penalized {:?}: {e}", ind.genes);
            PENALTY_FITNESS
        }
    }
}

/// Tournament selection with replacement; ties go to the first drawn.
pub fn select<'a, R: Rng>(
    population: &'a [Individual],
    cfg: &GaConfig,
    rng: &mut R,
) -> &'a Individual {
    let mut best = &population[rng.random_range(0..population.len())];
    for _ in 1..cfg.tournament_size {
        let challenger = &population[rng.random_range(0..population.len())];
        if challenger.score() < best.score() {
            best = challenger;
        }
    }
    best
}

/// Whole-arithmetic blend `β·a + (1−β)·b` and its mirror.
pub fn blend(
    a: &Individual,
    b: &Individual,
    beta: f64,
    cfg: &GaConfig,
) -> (Individual, Individual) {
    let mut c1 = [0.0; GENES];
    let mut c2 = [0.0; GENES];
    for i in 0..GENES {
        c1[i] = beta * a.genes[i] + (1.0 - beta) * b.genes[i];
        c2[i] = (1.0 - beta) * a.genes[i] + beta * b.genes[i];
    }
    cfg.clamp(&mut c1);
    cfg.clamp(&mut c2);
    (Individual::new(c1), Individual::new(c2))
}

pub fn crossover<R: Rng>(
    a: &Individual,
    b: &Individual,
    cfg: &GaConfig,
    rng: &mut R,
) -> (Individual, Individual) {
    if rng.random::<f64>() < cfg.crossover_rate {
        let beta = rng.random::<f64>();
        blend(a, b, beta, cfg)
    } else {
        (a.clone(), b.clone())
    }
}

/// Perturbs one gene with probability `mutation_rate`. Returns whether a
/// mutation was applied.
pub fn mutate<R: Rng>(ind: &mut Individual, cfg: &GaConfig, rng: &mut R) -> bool {
    if rng.random::<f64>() >= cfg.mutation_rate {
        return false;
    }
    let i = rng.random_range(0..GENES);
    let (lo, hi) = cfg.gene_bounds[i];
    let z: f64 = rng.sample(StandardNormal);
    let updated = (ind.genes[i] + MUTATION_SIGMA_FRACTION * (hi - lo) * z).clamp(lo, hi);
    if updated != ind.genes[i] {
        ind.genes[i] = updated;
        ind.fitness = None;
    }
    true
}

fn stats(population: &[Individual]) -> (usize, GenerationStats) {
    let (best_idx, best) =
        population
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bf), (i, ind)| {
                if ind.score() < bf {
                    (i, ind.score())
                } else {
                    (bi, bf)
                }
            });
    let mean = population.iter().map(Individual::score).sum::<f64>() / population.len() as f64;
    (
        best_idx,
        GenerationStats {
            best_fitness: best,
            mean_fitness: mean,
        },
    )
}

fn breed(population: &[Individual], cfg: &GaConfig, generation: usize) -> Vec<Individual> {
    let mut ranked: Vec<&Individual> = population.iter().collect();
    ranked.sort_by(|a, b| a.score().total_cmp(&b.score()));
    let mut next: Vec<Individual> = ranked
        .iter()
        .take(cfg.elitism)
        .map(|&i| i.clone())
        .collect();
    let mut slot = 0;
    while next.len() < cfg.population_size {
        let mut rng = stream_rng(cfg.seed, generation, slot);
        slot += 1;
        let a = select(population, cfg, &mut rng);
        let b = select(population, cfg, &mut rng);
        let (mut c1, mut c2) = crossover(a, b, cfg, &mut rng);
        mutate(&mut c1, cfg, &mut rng);
        mutate(&mut c2, cfg, &mut rng);
        next.push(c1);
        if next.len() < cfg.population_size {
            next.push(c2);
        }
    }
    next
}

/// Runs the generational loop until the best fitness drops below the
/// convergence threshold or `max_generations` generations have been evaluated.
pub fn run_ga(
    cfg: &GaConfig,
    fitness_cfg: &SimConfig,
    p: &ManipulatorParams,
) -> Result<GaReport, GaError> {
    cfg.validate()?;
    fitness_cfg
        .validate()
        .map_err(|e| GaError::InvalidConfig(e.to_string()))?;
    p.validate()
        .map_err(|e| GaError::InvalidConfig(e.to_string()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| GaError::WorkerPool(e.to_string()))?;
    let evaluate_all = |pop: &mut Vec<Individual>| {
        pool.install(|| {
            pop.par_iter_mut()
                .filter(|i| i.fitness.is_none())
                .for_each(|ind| {
                    ind.fitness = Some(evaluate(ind, fitness_cfg, p));
                })
        })
    };

    let mut population = initialize_population(cfg);
    evaluate_all(&mut population);
    let mut history = Vec::new();
    let mut best_ever: Option<Individual> = None;
    let mut converged = false;

    loop {
        let (best_idx, gen_stats) = stats(&population);
        history.push(gen_stats);
        let candidate = &population[best_idx];
        if best_ever
            .as_ref()
            .is_none_or(|b| candidate.score() < b.score())
        {
            best_ever = Some(candidate.clone());
        }
        log::debug!(
            "generation {}: best {:.6e}, mean {:.6e}",
            history.len() - 1,
            gen_stats.best_fitness,
            gen_stats.mean_fitness
        );
        if gen_stats.best_fitness < cfg.convergence_threshold {
            converged = true;
            break;
        }
        if history.len() >= cfg.max_generations {
            break;
        }
        population = breed(&population, cfg, history.len());
        evaluate_all(&mut population);
    }

    Ok(GaReport {
        best: best_ever.expect("population is never empty"),
        generations_used: history.len(),
        converged,
        history,
    })
}
