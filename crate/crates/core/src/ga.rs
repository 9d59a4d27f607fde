//! Genetic search over feature masks, scored by the inner cross-validated
//! accuracy of a wrapped learner.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMask, SplitKind, SplitPlan};
use crate::error::{arg_err, Error, Result};
use crate::eval::{run_partition, Masked};
use crate::learners::Learner;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1 / n`.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Penalty per selected fraction of features.
    pub alpha: f64,
    pub fitness_folds: usize,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 100,
            crossover_rate: 0.8,
            mutation_rate: None,
            tournament_size: 3,
            elitism: 2,
            alpha: 0.01,
            fitness_folds: 5,
            seed: 0,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("ga.{name} = {v} must lie in [0, 1]")))
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return bad(format!("ga.population_size = {} must be at least 2", self.population_size));
        }
        if self.generations < 1 {
            return bad("ga.generations must be at least 1".into());
        }
        unit_interval("crossover_rate", self.crossover_rate)?;
        if let Some(p) = self.mutation_rate {
            unit_interval("mutation_rate", p)?;
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return bad(format!(
                "ga.tournament_size = {} must be in 1..={}",
                self.tournament_size, self.population_size
            ));
        }
        if self.elitism >= self.population_size {
            return bad(format!(
                "ga.elitism = {} must be below population_size = {}",
                self.elitism, self.population_size
            ));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("ga.alpha = {} must be >= 0", self.alpha));
        }
        if self.fitness_folds < 2 {
            return bad(format!("ga.fitness_folds = {} must be at least 2", self.fitness_folds));
        }
        Ok(())
    }

    pub fn mutation_rate_for(&self, n: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / n as f64)
    }

    /// Seed of the inner fold assignment, shared by every mask in one run.
    pub fn fold_seed(&self) -> u64 {
        rng::derive_seed(self.seed, &[u64::MAX])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub value: f64,
    /// Mean inner-fold accuracy before the size penalty.
    pub accuracy: f64,
    /// Folds whose training failed and were scored 0.
    pub failed_folds: usize,
}

/// Mean stratified `folds`-fold accuracy of `learner` on `train` restricted
/// to `mask`, minus `alpha * |mask| / n`. A fold whose training fails scores
/// 0 and is counted in `failed_folds`.
pub fn fitness<L: Learner>(
    mask: &FeatureMask,
    learner: &L,
    train: &Dataset,
    folds: usize,
    seed: u64,
    alpha: f64,
) -> Result<Fitness> {
    if mask.len() != train.n() {
        return arg_err(format!("mask has {} bits for {} features", mask.len(), train.n()));
    }
    let plan = SplitPlan::new(SplitKind::Kfold { k: folds, stratified: true }, seed);
    let parts = plan.partitions(train.labels())?;
    let masked = Masked { mask: mask.clone(), inner: learner };
    let mut failed_folds = 0;
    let mut total = 0.0;
    for (tr, te) in &parts {
        match run_partition(&masked, train, tr, te) {
            Ok(outcome) => total += outcome.accuracy(),
            Err(Error::Training(_)) => failed_folds += 1,
            Err(e) => return Err(e),
        }
    }
    let accuracy = total / parts.len() as f64;
    let penalty = alpha * mask.count() as f64 / mask.len() as f64;
    Ok(Fitness { value: accuracy - penalty, accuracy, failed_folds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    /// Mean inner-CV accuracy of `best_mask`.
    pub best_accuracy: f64,
    /// `(best, mean)` fitness of the initial population and of every generation.
    pub history: Vec<(f64, f64)>,
    /// Distinct masks whose fitness was computed.
    pub evaluations: usize,
    /// Fraction of the final population selecting each feature.
    pub selection_frequency: Vec<f64>,
    /// Failed inner folds summed over all evaluations.
    pub failed_folds: usize,
}

#[derive(Serialize)]
struct GAResultJson<'a> {
    n: usize,
    best_mask: Vec<usize>,
    best_fitness: f64,
    best_accuracy: f64,
    history: Vec<[f64; 2]>,
    evaluations: usize,
    selection_frequency: &'a [f64],
    failed_folds: usize,
}

impl Serialize for GAResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GAResultJson {
            n: self.best_mask.len(),
            best_mask: self.best_mask.indices(),
            best_fitness: self.best_fitness,
            best_accuracy: self.best_accuracy,
            history: self.history.iter().map(|&(b, m)| [b, m]).collect(),
            evaluations: self.evaluations,
            selection_frequency: &self.selection_frequency,
            failed_folds: self.failed_folds,
        }
        .serialize(s)
    }
}

/// Ranking used everywhere: higher fitness, then fewer features, then the
/// lexicographically smaller bit vector.
fn beats(a: (&FeatureMask, f64), b: (&FeatureMask, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => (a.0.count(), a.0.bits()) < (b.0.count(), b.0.bits()),
    }
}

fn repair(bits: &mut [bool], r: &mut Rng) {
    if !bits.iter().any(|&b| b) {
        let j = r.gen_range(0..bits.len());
        bits[j] = true;
    }
}

fn random_mask(n: usize, r: &mut Rng) -> FeatureMask {
    let mut bits: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
    repair(&mut bits, r);
    FeatureMask::new(bits).expect("repaired mask is non-empty")
}

/// Memoised objective: each distinct mask is scored once per run.
struct Memo<'a, F> {
    objective: &'a F,
    cache: Mutex<BTreeMap<Vec<bool>, Fitness>>,
}

impl<F: Fn(&FeatureMask) -> Result<Fitness> + Sync> Memo<'_, F> {
    fn score(&self, population: &[FeatureMask]) -> Result<Vec<f64>> {
        let mut pending: Vec<&FeatureMask> = Vec::new();
        {
            let cache = self.cache.lock().expect("fitness cache");
            for m in population {
                if !cache.contains_key(m.bits()) && !pending.iter().any(|p| p == &m) {
                    pending.push(m);
                }
            }
        }
        let fresh: Vec<Fitness> = pending.par_iter().map(|m| (self.objective)(m)).collect::<Result<_>>()?;
        let mut cache = self.cache.lock().expect("fitness cache");
        for (m, f) in pending.into_iter().zip(fresh) {
            cache.insert(m.bits().to_vec(), f);
        }
        Ok(population.iter().map(|m| cache[m.bits()].value).collect())
    }
}

/// Generational GA with a caller-supplied objective. Individual `i` of
/// generation `g` draws all its randomness from the stream `(seed, g, i)`.
pub fn evolve_with<F>(config: &GAConfig, n: usize, objective: F) -> Result<GAResult>
where
    F: Fn(&FeatureMask) -> Result<Fitness> + Sync,
{
    config.validate()?;
    if n == 0 {
        return arg_err("cannot search masks over zero features");
    }
    let pop_size = config.population_size;
    let mutation = config.mutation_rate_for(n);
    let memo = Memo { objective: &objective, cache: Mutex::new(BTreeMap::new()) };

    let mut population: Vec<FeatureMask> =
        (0..pop_size).map(|i| random_mask(n, &mut rng::stream(config.seed, &[0, i as u64]))).collect();
    let mut scores = memo.score(&population)?;

    let ranked = |pop: &[FeatureMask], sc: &[f64]| {
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| {
            if beats((&pop[a], sc[a]), (&pop[b], sc[b])) {
                std::cmp::Ordering::Less
            } else if beats((&pop[b], sc[b]), (&pop[a], sc[a])) {
                std::cmp::Ordering::Greater
            } else {
                a.cmp(&b)
            }
        });
        idx
    };
    let summary = |sc: &[f64]| {
        let best = sc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (best, sc.iter().sum::<f64>() / sc.len() as f64)
    };

    let mut history = vec![summary(&scores)];
    let first = ranked(&population, &scores)[0];
    let mut best = (population[first].clone(), scores[first]);

    for g in 1..=config.generations {
        let order = ranked(&population, &scores);
        let tournament = |r: &mut Rng| {
            let mut winner = r.gen_range(0..pop_size);
            for _ in 1..config.tournament_size {
                let c = r.gen_range(0..pop_size);
                if beats((&population[c], scores[c]), (&population[winner], scores[winner])) {
                    winner = c;
                }
            }
            winner
        };
        let mut next: Vec<FeatureMask> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        for i in config.elitism..pop_size {
            let mut r = rng::stream(config.seed, &[g as u64, i as u64]);
            let a = population[tournament(&mut r)].bits();
            let b = population[tournament(&mut r)].bits();
            let mut child: Vec<bool> = if r.gen_bool(config.crossover_rate) {
                a.iter().zip(b).map(|(&x, &y)| if r.gen_bool(0.5) { x } else { y }).collect()
            } else {
                a.to_vec()
            };
            for bit in child.iter_mut() {
                if r.gen_bool(mutation) {
                    *bit = !*bit;
                }
            }
            repair(&mut child, &mut r);
            next.push(FeatureMask::new(child).expect("repaired mask is non-empty"));
        }
        population = next;
        scores = memo.score(&population)?;
        history.push(summary(&scores));
        let top = ranked(&population, &scores)[0];
        if beats((&population[top], scores[top]), (&best.0, best.1)) {
            best = (population[top].clone(), scores[top]);
        }
    }

    let cache = memo.cache.into_inner().expect("fitness cache");
    let selection_frequency = (0..n)
        .map(|j| population.iter().filter(|m| m.get(j)).count() as f64 / pop_size as f64)
        .collect();
    let best_fit = cache[best.0.bits()];
    Ok(GAResult {
        best_fitness: best.1,
        best_accuracy: best_fit.accuracy,
        best_mask: best.0,
        history,
        evaluations: cache.len(),
        selection_frequency,
        failed_folds: cache.values().map(|f| f.failed_folds).sum(),
    })
}

/// GA wrapper around `learner`, with inner CV on `train` only.
pub fn evolve<L: Learner>(config: &GAConfig, learner: &L, train: &Dataset) -> Result<GAResult> {
    if !train.has_both_classes() {
        return arg_err("the GA needs both classes in the training data");
    }
    let fold_seed = config.fold_seed();
    evolve_with(config, train.n(), |mask| {
        fitness(mask, learner, train, config.fitness_folds, fold_seed, config.alpha)
    })
}

/// Best of all `2^n - 1` masks under the same ranking as the GA.
pub fn exhaustive_with<F>(n: usize, objective: F) -> Result<(FeatureMask, f64)>
where
    F: Fn(&FeatureMask) -> Result<Fitness> + Sync,
{
    if n == 0 || n > 20 {
        return arg_err(format!("exhaustive search over n = {n} features is not supported"));
    }
    let masks: Vec<FeatureMask> =
        (1..1u64 << n).map(|c| FeatureMask::from_code(n, c)).collect::<Result<_>>()?;
    let values: Vec<f64> = masks.par_iter().map(|m| objective(m).map(|f| f.value)).collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..masks.len() {
        if beats((&masks[i], values[i]), (&masks[best], values[best])) {
            best = i;
        }
    }
    Ok((masks[best].clone(), values[best]))
}

/// Per-feature fraction of results whose best mask includes it.
pub fn selection_frequency(results: &[GAResult]) -> Result<Vec<f64>> {
    let Some(first) = results.first() else {
        return arg_err("selection frequency needs at least one result");
    };
    let n = first.best_mask.len();
    if let Some(r) = results.iter().find(|r| r.best_mask.len() != n) {
        return arg_err(format!("results mix masks over {n} and {} features", r.best_mask.len()));
    }
    Ok((0..n)
        .map(|j| results.iter().filter(|r| r.best_mask.get(j)).count() as f64 / results.len() as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ClassifierSpec, Family};

    fn toy(n: usize, m: usize, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, &[]);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|x| u8::from(x[0] + 0.5 * x[1] > 0.0)).collect();
        Dataset::from_rows(&rows, labels, None).unwrap()
    }

    fn quick() -> GAConfig {
        GAConfig { population_size: 8, generations: 4, fitness_folds: 3, ..Default::default() }
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let c = GAConfig { mutation_rate: Some(0.1), seed: 5, ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<GAConfig>(&text).unwrap(), c);
        assert_eq!(serde_json::from_str::<GAConfig>("{}").unwrap(), GAConfig::default());
        assert!(serde_json::from_str::<GAConfig>(r#"{"populaton_size": 3}"#).is_err());
        for bad in [
            GAConfig { population_size: 1, ..Default::default() },
            GAConfig { elitism: 50, ..Default::default() },
            GAConfig { tournament_size: 51, ..Default::default() },
            GAConfig { crossover_rate: 1.5, ..Default::default() },
            GAConfig { fitness_folds: 1, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn penalty_prefers_smaller_masks_at_equal_accuracy() {
        let ds = toy(3, 40, 1);
        let knn = ClassifierSpec::new(Family::Knn);
        let full = fitness(&FeatureMask::full(3), &knn, &ds, 3, 0, 0.0).unwrap();
        let small = FeatureMask::from_indices(3, &[0]).unwrap();
        let a = fitness(&small, &knn, &ds, 3, 0, 0.05).unwrap();
        let b = fitness(&small, &knn, &ds, 3, 0, 0.0).unwrap();
        assert!((b.value - a.value - 0.05 / 3.0).abs() < 1e-15);
        assert_eq!(full.value, full.accuracy);
    }

    #[test]
    fn evolve_is_deterministic_and_elitist() {
        let ds = toy(5, 40, 2);
        let nb = ClassifierSpec::new(Family::NaiveBayes);
        let a = evolve(&quick(), &nb, &ds).unwrap();
        let b = evolve(&quick(), &nb, &ds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 5);
        assert!(a.history.windows(2).all(|w| w[1].0 >= w[0].0));
        assert!(a.evaluations <= 8 * 5);
        assert_eq!(a.selection_frequency.len(), 5);
        assert_eq!(a.best_fitness, a.history.iter().map(|h| h.0).fold(f64::MIN, f64::max));
    }

    #[test]
    fn minimal_run_returns_valid_mask() {
        let ds = toy(2, 12, 3);
        let cfg = GAConfig { population_size: 2, generations: 1, tournament_size: 1, elitism: 1, fitness_folds: 2, ..Default::default() };
        let r = evolve(&cfg, &ClassifierSpec::new(Family::Cart), &ds).unwrap();
        assert!(r.best_mask.count() >= 1);
    }

    #[test]
    fn failed_training_folds_score_zero() {
        // the fold holding the only class-1 record trains on class 0 alone
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let labels = vec![0, 0, 0, 0, 0, 0, 0, 0, 1];
        let ds = Dataset::from_rows(&rows, labels, None).unwrap();
        let lr = ClassifierSpec::new(Family::LogisticRegression).with_param("epochs", 10);
        let f = fitness(&FeatureMask::full(1), &lr, &ds, 3, 0, 0.0).unwrap();
        assert!(f.failed_folds >= 1, "{f:?}");
    }

    #[test]
    fn selection_frequency_counts_best_masks() {
        let mk = |idx: &[usize], n: usize| GAResult {
            best_mask: FeatureMask::from_indices(n, idx).unwrap(),
            best_fitness: 0.0,
            best_accuracy: 0.0,
            history: vec![],
            evaluations: 0,
            selection_frequency: vec![0.0; n],
            failed_folds: 0,
        };
        assert_eq!(selection_frequency(&[mk(&[0, 2], 3)]).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(selection_frequency(&[mk(&[0], 3), mk(&[0, 1], 3)]).unwrap(), vec![1.0, 0.5, 0.0]);
        assert!(selection_frequency(&[mk(&[0], 3), mk(&[0], 4)]).is_err());
        assert!(selection_frequency(&[]).is_err());
        let json = serde_json::to_value(mk(&[0, 2], 3)).unwrap();
        assert_eq!(json["best_mask"], serde_json::json!([0, 2]));
    }
}
