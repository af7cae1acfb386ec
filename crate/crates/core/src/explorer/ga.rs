use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fitness::{fitness_breakdown, FitnessBreakdown, FitnessWeights};
use super::predictors::Predictors;
use crate::design_space::{canonicalize, random_arch_with, BackboneSpec, CodesignPoint, HwDomain, Ratio};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene resampling probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            tournament_size: 3,
            elitism_count: 2,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGaConfig(m.into()));
        if self.population_size < 2 {
            return bad("population_size must be >= 2");
        }
        if self.generations == 0 {
            return bad("generations must be >= 1");
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1");
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidGaConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_point: CodesignPoint,
    pub best_fitness: f64,
    pub best_breakdown: FitnessBreakdown,
    pub history: Vec<GenerationStats>,
    /// Distinct designs scored.
    pub evaluations: usize,
    /// No evaluated design met the resource budget.
    pub all_penalized: bool,
}

/// Gene-level operators on the crossover string (cells, then PF, PC, PV);
/// BW and MEM ride along with their individual and only mutate.
struct Operators<'a> {
    backbone: &'a BackboneSpec,
    domain: &'a HwDomain,
    cells: usize,
}

impl Operators<'_> {
    fn string_len(&self) -> usize {
        self.cells + 3
    }

    fn crossover<R: Rng>(&self, rng: &mut R, a: &CodesignPoint, b: &CodesignPoint) -> (Vec<Ratio>, Vec<Ratio>, [u32; 3], [u32; 3]) {
        let cut = rng.gen_range(1..self.string_len());
        let (ra, rb) = (a.arch.ratios(), b.arch.ratios());
        let mut c1: Vec<Ratio> = Vec::with_capacity(self.cells);
        let mut c2: Vec<Ratio> = Vec::with_capacity(self.cells);
        for i in 0..self.cells {
            if i < cut {
                c1.push(ra[i]);
                c2.push(rb[i]);
            } else {
                c1.push(rb[i]);
                c2.push(ra[i]);
            }
        }
        let (ha, hb) = ([a.hw.pf, a.hw.pc, a.hw.pv], [b.hw.pf, b.hw.pc, b.hw.pv]);
        let (mut h1, mut h2) = (ha, hb);
        for k in 0..3 {
            if self.cells + k >= cut {
                h1[k] = hb[k];
                h2[k] = ha[k];
            }
        }
        (c1, c2, h1, h2)
    }

    fn mutate<R: Rng>(&self, rng: &mut R, rate: f64, ratios: &mut [Ratio], hw: &mut crate::design_space::HwConfig) {
        for r in ratios.iter_mut() {
            if rng.gen_bool(rate) {
                *r = *Ratio::ALL.choose(rng).expect("non-empty");
            }
        }
        let d = self.domain;
        if rng.gen_bool(rate) {
            hw.pf = *d.pf.choose(rng).expect("non-empty");
        }
        if rng.gen_bool(rate) {
            hw.pc = *d.pc.choose(rng).expect("non-empty");
        }
        if rng.gen_bool(rate) {
            hw.pv = *d.pv.choose(rng).expect("non-empty");
        }
        if rng.gen_bool(rate) {
            hw.bw = *d.bw.choose(rng).expect("non-empty");
        }
        if rng.gen_bool(rate) {
            hw.mem = *d.mem.choose(rng).expect("non-empty");
        }
    }

    fn offspring<R: Rng>(
        &self,
        rng: &mut R,
        cfg: &GaConfig,
        a: &CodesignPoint,
        b: &CodesignPoint,
    ) -> Result<[CodesignPoint; 2]> {
        let (mut r1, mut r2, p1, p2) = if rng.gen_bool(cfg.crossover_rate) {
            self.crossover(rng, a, b)
        } else {
            (
                a.arch.ratios().to_vec(),
                b.arch.ratios().to_vec(),
                [a.hw.pf, a.hw.pc, a.hw.pv],
                [b.hw.pf, b.hw.pc, b.hw.pv],
            )
        };
        let mut h1 = crate::design_space::HwConfig { pf: p1[0], pc: p1[1], pv: p1[2], ..a.hw };
        let mut h2 = crate::design_space::HwConfig { pf: p2[0], pc: p2[1], pv: p2[2], ..b.hw };
        self.mutate(rng, cfg.mutation_rate, &mut r1, &mut h1);
        self.mutate(rng, cfg.mutation_rate, &mut r2, &mut h2);
        Ok([
            CodesignPoint { arch: canonicalize(&r1, self.backbone)?, hw: h1 },
            CodesignPoint { arch: canonicalize(&r2, self.backbone)?, hw: h2 },
        ])
    }
}

fn tournament<R: Rng>(rng: &mut R, fitness: &[f64], size: usize) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] < fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Scores a population, reusing earlier results. New designs are evaluated
/// in parallel and merged in population order.
fn evaluate(
    population: &[CodesignPoint],
    cache: &mut HashMap<CodesignPoint, FitnessBreakdown>,
    predictors: &dyn Predictors,
    weights: &FitnessWeights,
    backbone: &BackboneSpec,
) -> Result<Vec<FitnessBreakdown>> {
    let mut fresh: Vec<&CodesignPoint> = Vec::new();
    for p in population {
        if !cache.contains_key(p) && !fresh.contains(&p) {
            fresh.push(p);
        }
    }
    let scored: Vec<FitnessBreakdown> = fresh
        .par_iter()
        .map(|p| fitness_breakdown(p, predictors, weights, backbone))
        .collect::<Result<_>>()?;
    for (p, s) in fresh.into_iter().zip(scored) {
        cache.insert(p.clone(), s);
    }
    Ok(population.iter().map(|p| cache[p]).collect())
}

/// Runs the GA and returns the best design ever evaluated.
///
/// Generation 0 is the random initial population; each later generation
/// keeps `elitism_count` elites and fills the rest with tournament-selected,
/// crossed-over, mutated and canonicalized offspring.
pub fn run_ga(
    config: &GaConfig,
    weights: &FitnessWeights,
    predictors: &dyn Predictors,
    backbone: &BackboneSpec,
    hw_domain: &HwDomain,
) -> Result<GaResult> {
    config.validate()?;
    weights.validate()?;
    backbone.validate()?;
    let domain = hw_domain.normalized()?;
    let ops = Operators {
        backbone,
        domain: &domain,
        cells: backbone.total_cells(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut cache: HashMap<CodesignPoint, FitnessBreakdown> = HashMap::new();

    let mut population: Vec<CodesignPoint> = (0..config.population_size)
        .map(|_| {
            let arch = random_arch_with(&mut rng, backbone);
            let hw = domain.sample(&mut rng);
            CodesignPoint { arch, hw }
        })
        .collect();

    let mut history = Vec::with_capacity(config.generations);
    let mut best: Option<(CodesignPoint, FitnessBreakdown)> = None;

    for generation in 0..config.generations {
        if generation > 0 {
            let scores: Vec<f64> = evaluate(&population, &mut cache, predictors, weights, backbone)?
                .iter()
                .map(|b| b.total)
                .collect();
            let mut order: Vec<usize> = (0..population.len()).collect();
            order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
            let mut next: Vec<CodesignPoint> = order[..config.elitism_count]
                .iter()
                .map(|&i| population[i].clone())
                .collect();
            while next.len() < config.population_size {
                let a = tournament(&mut rng, &scores, config.tournament_size);
                let b = tournament(&mut rng, &scores, config.tournament_size);
                let [c1, c2] = ops.offspring(&mut rng, config, &population[a], &population[b])?;
                next.push(c1);
                if next.len() < config.population_size {
                    next.push(c2);
                }
            }
            population = next;
        }

        let scored = evaluate(&population, &mut cache, predictors, weights, backbone)?;
        let mut gen_best = 0;
        for (i, s) in scored.iter().enumerate() {
            if s.total < scored[gen_best].total {
                gen_best = i;
            }
        }
        let mean = scored.iter().map(|s| s.total).sum::<f64>() / scored.len() as f64;
        history.push(GenerationStats {
            best: scored[gen_best].total,
            mean,
        });
        if best.as_ref().is_none_or(|(_, b)| scored[gen_best].total < b.total) {
            best = Some((population[gen_best].clone(), scored[gen_best]));
        }
    }

    let (best_point, best_breakdown) = best.expect("at least one generation");
    let all_penalized = cache.values().all(|b| b.penalty > 0.0);
    Ok(GaResult {
        best_point,
        best_fitness: best_breakdown.total,
        best_breakdown,
        history,
        evaluations: cache.len(),
        all_penalized,
    })
}
