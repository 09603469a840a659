use evoptim_core::data::Dataset;
use evoptim_core::error::{Error, Result};
use evoptim_core::evolution::{
    self, init_population, run, select_survivors, should_stop, thread_pool, train_generation, EvolutionConfig,
    GenerationRecord, Lineage, UnitModel,
};
use evoptim_core::objective::{Activation, BenchmarkFn, Mlp, MlpShape, OutputLoss};
use evoptim_core::optim::{AdamConfig, AdamState};
use evoptim_core::params::{InitKind, ParamVector, RngStream};
use evoptim_core::problem::{BenchmarkProblem, Problem, SupervisedProblem};

/// `0.5 * sum a_i (w_i - c_i)^2`, a batch-free convex bowl.
struct Quadratic {
    scale: Vec<f64>,
    center: Vec<f64>,
}

impl Problem for Quadratic {
    type Batch = ();

    fn num_params(&self) -> usize {
        self.scale.len()
    }

    fn init_params(&self, _kind: InitKind, rng: &mut RngStream) -> Result<ParamVector> {
        ParamVector::new((0..self.scale.len()).map(|_| 3.0 * rng.standard_normal()).collect())
    }

    fn sample_batch(&self, _size: usize, _rng: &mut RngStream) -> Result<()> {
        Ok(())
    }

    fn loss_and_grad(&self, w: &[f64], _batch: &()) -> Result<(f64, Vec<f64>)> {
        let grad: Vec<f64> = w.iter().zip(&self.scale).zip(&self.center).map(|((w, a), c)| a * (w - c)).collect();
        Ok((self.summed_loss(w, &())?, grad))
    }

    fn summed_loss(&self, w: &[f64], _batch: &()) -> Result<f64> {
        Ok(w.iter()
            .zip(&self.scale)
            .zip(&self.center)
            .map(|((w, a), c)| 0.5 * a * (w - c) * (w - c))
            .sum())
    }
}

/// Candidate losses are read straight from the first weight, so tests can
/// dictate them.
struct Tagged;

impl Problem for Tagged {
    type Batch = ();

    fn num_params(&self) -> usize {
        1
    }

    fn init_params(&self, _kind: InitKind, rng: &mut RngStream) -> Result<ParamVector> {
        ParamVector::new(vec![rng.uniform()])
    }

    fn sample_batch(&self, _size: usize, _rng: &mut RngStream) -> Result<()> {
        Ok(())
    }

    fn loss_and_grad(&self, w: &[f64], _batch: &()) -> Result<(f64, Vec<f64>)> {
        Ok((w[0], vec![1.0]))
    }

    fn summed_loss(&self, w: &[f64], _batch: &()) -> Result<f64> {
        Ok(w[0])
    }
}

fn unit(id: u64, loss: f64, lineage: Lineage) -> UnitModel {
    UnitModel {
        id,
        params: ParamVector::new(vec![loss]).unwrap(),
        optimizer: AdamState::new(1, AdamConfig::default()),
        lineage,
    }
}

fn record(index: usize, before: Vec<f64>, selection: Vec<f64>) -> GenerationRecord {
    GenerationRecord {
        index,
        losses_before: before,
        losses_after: vec![],
        train_losses: vec![],
        survivor_ids: vec![],
        selection_losses: selection,
        adoption_count: 0,
        duration: Default::default(),
    }
}

fn separable(n: usize, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed);
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = (rng.uniform() < 0.5) as usize;
        let shift = if label == 1 { 2.0 } else { -2.0 };
        features.push(shift + 0.5 * rng.standard_normal());
        features.push(rng.standard_normal());
        labels.push(label);
    }
    Dataset::new(features, 2, labels, vec!["a".into(), "b".into()]).unwrap()
}

#[test]
fn subset_selection_is_optimal_against_brute_force() {
    let pool = thread_pool(1).unwrap();
    let mut rng = RngStream::new(99);
    for _ in 0..100 {
        // coarse values so ties happen
        let losses: Vec<f64> = (0..6).map(|_| (rng.uniform() * 4.0).floor()).collect();
        let parents: Vec<UnitModel> = (0..3).map(|i| unit(i, losses[i as usize], Lineage::Initial)).collect();
        let children: Vec<UnitModel> = (3..6)
            .map(|i| unit(i, losses[i as usize], Lineage::Child { parents: (0, 1) }))
            .collect();
        let kept = select_survivors(parents, children, &Tagged, &(), &pool).unwrap();

        let mut best = f64::INFINITY;
        for mask in 0u32..64 {
            if mask.count_ones() == 3 {
                let sum: f64 = (0..6).filter(|i| mask & (1 << i) != 0).map(|i| losses[i]).sum();
                best = best.min(sum);
            }
        }
        assert_eq!(kept.losses.iter().sum::<f64>(), best);
        assert_eq!(kept.models.len(), 3);
        assert!(kept.losses.windows(2).all(|w| w[0] <= w[1]));
        // ties prefer parents
        for (m, l) in kept.models.iter().zip(&kept.losses) {
            if m.id >= 3 {
                assert!((0..3).all(|p| losses[p] != *l || kept.models.iter().any(|k| k.id == p as u64)));
            }
        }
    }
}

#[test]
fn adoption_counts_at_the_extremes() {
    let pool = thread_pool(1).unwrap();
    let parents = || (0..3).map(|i| unit(i, i as f64, Lineage::Initial)).collect::<Vec<_>>();
    let worse = (3..6).map(|i| unit(i, 10.0 + i as f64, Lineage::Child { parents: (0, 0) })).collect();
    let kept = select_survivors(parents(), worse, &Tagged, &(), &pool).unwrap();
    assert_eq!(kept.adoption_count, 0);
    assert_eq!(kept.models.iter().map(|m| m.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(kept.models.iter().all(|m| m.lineage == Lineage::Survivor));

    let better = (3..6).map(|i| unit(i, -(i as f64), Lineage::Child { parents: (0, 0) })).collect();
    let kept = select_survivors(parents(), better, &Tagged, &(), &pool).unwrap();
    assert_eq!(kept.adoption_count, 3);
}

#[test]
fn stop_rule_examples() {
    let config = |k, theta| EvolutionConfig {
        max_generations: k,
        stop_threshold: theta,
        ..EvolutionConfig::default()
    };
    let first = record(1, vec![5.0, 6.0], vec![4.0, 4.0]);
    assert!(should_stop(None, &first, &config(10, f64::INFINITY)));
    assert!(!should_stop(None, &first, &config(10, 0.0)));
    assert!(should_stop(None, &first, &config(1, 0.0)));

    let prev = record(1, vec![], vec![4.0, 6.0]);
    let curr = record(2, vec![], vec![4.0, 6.005]);
    assert!(should_stop(Some(&prev), &curr, &config(10, 0.01)));
    assert!(!should_stop(Some(&prev), &curr, &config(10, 0.001)));
}

#[test]
fn zero_steps_leave_models_untouched() {
    let problem = Quadratic {
        scale: vec![1.0; 3],
        center: vec![0.5; 3],
    };
    let config = EvolutionConfig {
        population: 3,
        steps_per_generation: 0,
        ..EvolutionConfig::default()
    };
    let pool = thread_pool(2).unwrap();
    let mut valid = config.clone();
    valid.steps_per_generation = 1;
    let gen = init_population(&valid, &problem, &pool).unwrap();
    let mut models = gen.models.clone();
    let losses = train_generation(&mut models, &problem, &config, 1, &pool).unwrap();
    assert_eq!(models, gen.models);
    assert!(losses.iter().all(Option::is_none));
}

#[test]
fn population_is_distinct_and_reproducible_across_pool_widths() {
    let problem = Quadratic {
        scale: vec![1.0; 4],
        center: vec![0.0; 4],
    };
    let config = EvolutionConfig {
        population: 10,
        ..EvolutionConfig::default()
    };
    let a = init_population(&config, &problem, &thread_pool(1).unwrap()).unwrap();
    let b = init_population(&config, &problem, &thread_pool(4).unwrap()).unwrap();
    assert_eq!(a, b);
    let mut ids: Vec<u64> = a.models.iter().map(|m| m.id).collect();
    ids.dedup();
    assert_eq!(ids.len(), 10);
    assert_ne!(a.models[0].params, a.models[1].params);
    assert!(a.models.iter().all(|m| m.lineage == Lineage::Initial));
}

#[test]
fn adam_converges_on_a_convex_quadratic() {
    let problem = Quadratic {
        scale: vec![1.0, 4.0, 0.25],
        center: vec![1.0, -2.0, 0.5],
    };
    let config = EvolutionConfig {
        population: 2,
        steps_per_generation: 20_000,
        adam: AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
        ..EvolutionConfig::default()
    };
    let pool = thread_pool(1).unwrap();
    let mut models = init_population(&config, &problem, &pool).unwrap().models;
    train_generation(&mut models[..1], &problem, &config, 1, &pool).unwrap();
    let (_, grad) = problem.loss_and_grad(&models[0].params, &()).unwrap();
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm < 1e-4, "gradient norm {norm}");
}

#[test]
fn training_lowers_loss_on_separable_data() {
    let shape = MlpShape::new(vec![2, 2], Activation::Tanh, OutputLoss::SoftmaxCrossEntropy).unwrap();
    let mlp = Mlp::new(shape);
    let pool = thread_pool(1).unwrap();
    let mut improved = 0;
    for seed in 0..100 {
        let data = separable(200, 1000 + seed);
        let problem = SupervisedProblem::new(&mlp, &data);
        let config = EvolutionConfig {
            population: 2,
            steps_per_generation: 50,
            batch_size: 16,
            seed,
            adam: AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
            ..EvolutionConfig::default()
        };
        let mut models = init_population(&config, &problem, &pool).unwrap().models;
        let full = data.to_batch();
        let before = mlp.loss(&models[0].params, &full).unwrap();
        train_generation(&mut models[..1], &problem, &config, 1, &pool).unwrap();
        let after = mlp.loss(&models[0].params, &full).unwrap();
        improved += (after <= before) as usize;
    }
    assert!(improved >= 95, "{improved} of 100");
}

#[test]
fn single_round_without_mutation_picks_best_independent_run() {
    let problem = BenchmarkProblem::new(BenchmarkFn::rastrigin());
    let config = EvolutionConfig {
        population: 6,
        max_generations: 1,
        mutation_rate: 0.0,
        stop_threshold: f64::INFINITY,
        steps_per_generation: 100,
        seed: 17,
        init: InitKind::StandardNormal,
        adam: AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
        ..EvolutionConfig::default()
    };
    let pool = thread_pool(2).unwrap();
    let result = run(&config, &problem, &pool).unwrap();
    assert_eq!(result.history.len(), 1);

    let mut independent = init_population(&config, &problem, &pool).unwrap().models;
    train_generation(&mut independent, &problem, &config, 1, &pool).unwrap();
    let best_solo = independent
        .iter()
        .map(|m| problem.summed_loss(&m.params, &()).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(result.best_loss <= best_solo);
    assert_eq!(result.best_loss, problem.summed_loss(&result.best.params, &()).unwrap());
}

#[test]
fn runs_are_identical_across_pool_widths() {
    let shape = MlpShape::new(vec![2, 6, 2], Activation::Relu, OutputLoss::SoftmaxCrossEntropy).unwrap();
    let mlp = Mlp::new(shape);
    let data = separable(300, 5);
    let problem = SupervisedProblem::new(&mlp, &data);
    let config = EvolutionConfig {
        population: 5,
        max_generations: 3,
        steps_per_generation: 30,
        batch_size: 16,
        validation_size: 64,
        mutation_rate: 0.05,
        seed: 3,
        ..EvolutionConfig::default()
    };
    let one = run(&config, &problem, &thread_pool(1).unwrap()).unwrap();
    let four = run(&config, &problem, &thread_pool(4).unwrap()).unwrap();
    assert_eq!(one.best, four.best);
    assert_eq!(one.final_generation, four.final_generation);
    assert_eq!(one.history.len(), 3);
    for (a, b) in one.history.iter().zip(&four.history) {
        assert_eq!(a.losses_before, b.losses_before);
        assert_eq!(a.losses_after, b.losses_after);
        assert_eq!(a.survivor_ids, b.survivor_ids);
        assert_eq!(a.selection_losses, b.selection_losses);
        assert!(a.adoption_count <= config.population);
        assert_eq!(a.survivor_ids.len(), config.population);
    }
}

#[test]
fn training_failure_names_the_model() {
    struct Exploding;
    impl Problem for Exploding {
        type Batch = ();
        fn num_params(&self) -> usize {
            1
        }
        fn init_params(&self, _kind: InitKind, _rng: &mut RngStream) -> Result<ParamVector> {
            ParamVector::new(vec![1.0])
        }
        fn sample_batch(&self, _size: usize, _rng: &mut RngStream) -> Result<()> {
            Ok(())
        }
        fn loss_and_grad(&self, _w: &[f64], _batch: &()) -> Result<(f64, Vec<f64>)> {
            Ok((1.0, vec![f64::NAN]))
        }
        fn summed_loss(&self, _w: &[f64], _batch: &()) -> Result<f64> {
            Ok(1.0)
        }
    }
    let config = EvolutionConfig {
        population: 3,
        ..EvolutionConfig::default()
    };
    let err = evolution::run(&config, &Exploding, &thread_pool(3).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Training { model_id: 0, .. }), "{err}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let pool = thread_pool(1).unwrap();
    let problem = Quadratic {
        scale: vec![1.0],
        center: vec![0.0],
    };
    for config in [
        EvolutionConfig {
            population: 1,
            ..EvolutionConfig::default()
        },
        EvolutionConfig {
            max_generations: 0,
            ..EvolutionConfig::default()
        },
        EvolutionConfig {
            mutation_rate: 1.5,
            ..EvolutionConfig::default()
        },
        EvolutionConfig {
            stop_threshold: -1.0,
            ..EvolutionConfig::default()
        },
        EvolutionConfig {
            steps_per_generation: 0,
            ..EvolutionConfig::default()
        },
    ] {
        assert!(matches!(run(&config, &problem, &pool), Err(Error::Config(_))));
    }
}
