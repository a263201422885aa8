"""Evolutionary search for autoencoder ensembles on multivariate time series.

Three genetic levels cooperate: feature-subspace partitioning, model
architecture search (one population per subspace), and non-gradient weight
fine-tuning.  The calibrated models form a crisp-voting ensemble scored with
point-wise precision/recall/F1.
"""

from .config import RunConfig, load_config
from .data import (FeatureScaler, ReducedDataset, TimeSeriesDataset,
                   WindowedDataset, load_csv, make_windows, project_columns,
                   reduce, split_train_val)
from .ensemble import (EnsembleModel, MetricReport, ThresholdedModel,
                       calibrate_threshold, classify_point, ensemble_predict,
                       evaluate_f1, predict_series)
from .errors import (DataError, EvoadError, EvolutionError, ParseError,
                     PipelineError, TrainingError)
from .finetune import (FineTuneConfig, FineTuneResult, count_false_positives,
                       fine_tune, mutate_weights, weight_distance)
from .genetic import (EvolutionConfig, EvolutionResult, ScoredIndividual,
                      evolve, truncation_selector)
from .modelsearch import (GenomeFitness, ModelSearchConfig, crossover_models,
                          diversity_selector, evolve_models_for_subspace,
                          genome_distance, model_fitness, mutate_model,
                          random_genome)
from .nn import (GenomeBounds, LayerSpec, ModelGenome, ModelWeights,
                 TrainedModel, forward, instantiate, loss,
                 reconstruction_error, reconstruction_errors, train)
from .pipeline import (RunManifest, bench_scaling, run_directory,
                       run_pipeline, write_synthetic)
from .subspaces import (PartitionFitness, ProxySettings, SubspacePartition,
                        SubspaceSearchConfig, adding_mutation,
                        evolve_subspace_partition, init_population_correlation,
                        moving_mutation, repair_partition, subspace_crossover,
                        vanishing_mutation)
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"
