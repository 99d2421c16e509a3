#pragma once

// Experiment grid runner: optimizer x sigma x (pixel noise, label noise) on the
// small conv net, one CSV per cell plus a summary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gsmooth/dataset.hpp"
#include "gsmooth/optimizers.hpp"
#include "gsmooth/smooth_layers.hpp"

namespace gsmooth {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { sgd, gsmooth_sgd, adam, gsmooth_adam, svrg, gsmooth_svrg };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);
bool is_smoothed(OptimizerKind kind) noexcept;
bool is_svrg(OptimizerKind kind) noexcept;

/// Environment variable that overrides the dataset directory of any config.
inline constexpr const char* kDataDirEnv = "GSMOOTH_DATA_DIR";

struct ExperimentConfig {
  std::string name = "experiment";
  OptimizerKind optimizer = OptimizerKind::gsmooth_sgd;

  // grid
  std::vector<double> sigmas{0.0, 0.01, 0.1, 0.5, 1.0};
  std::vector<double> pixel_stds{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> label_flips{0.0, 0.1, 0.2, 0.3, 0.4};
  std::size_t replicates = 1;

  // training
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  bool early_stopping = true;
  std::size_t patience = 2;
  double validation_fraction = 0.1;
  std::size_t svrg_inner_steps = 0;  // 0: one outer iteration per epoch
  ControlVariateSigma svrg_tau = ControlVariateSigma::snapshot_sigma;
  double adam_beta = 0.9;
  double adam_theta = 0.999;
  double adam_epsilon = 1e-8;

  // network
  ConvNetGeometry network;
  ConvNetLambdas lambdas;
  RegularizerSign regularizer_sign = RegularizerSign::minus;
  DenseCoefficient dense_coefficient = DenseCoefficient::output_dim;

  // data
  std::string data_dir = "data/mnist-desk";
  std::size_t train_size = 5000;
  std::size_t test_size = 0;  // 0: whole test file

  // seeds
  std::uint64_t data_seed = 1;
  std::uint64_t sampling_seed = 2;
  std::uint64_t init_seed = 3;

  std::string output_dir = "runs/experiment";
  std::size_t jobs = 1;

  /// Defaults for one optimizer: lr 0.1 for Adam, GSmoothSGD and GSmoothAdam,
  /// 0.01 for SGD and both SVRG variants; batch 16, or 1 for SVRG; the SVRG
  /// lambdas; sigma grid {0} for the unsmoothed baselines.
  static ExperimentConfig defaults_for(OptimizerKind kind);

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys take the defaults of the named optimizer.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Dataset directory after applying the environment override.
std::filesystem::path resolve_data_dir(const ExperimentConfig& config);

struct RunRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double update_norm = 0.0;
  std::optional<double> test_accuracy;  // set on the last step of each epoch
};

/// Header: step,epoch,train_loss,update_norm,test_accuracy
void write_run_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

struct CellSpec {
  std::size_t index = 0;
  std::size_t pixel_index = 0;
  std::size_t flip_index = 0;
  std::size_t sigma_index = 0;
  std::size_t replicate = 0;
  double pixel_std = 0.0;
  double label_flip = 0.0;
  double sigma = 0.0;
};

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& config);
std::string cell_file_name(const ExperimentConfig& config, const CellSpec& cell);

struct CellResult {
  CellSpec cell;
  std::vector<RunRecord> records;
  std::size_t epochs = 0;
  double final_test_accuracy = 0.0;
  double final_train_loss = 0.0;
  double update_norm_std = 0.0;
  bool diverged = false;
  std::string message;
};

struct ExperimentData {
  TrainSet train;
  TestSet test;
};

ExperimentData load_experiment_data(const ExperimentConfig& config, const std::filesystem::path& data_dir);

/// Trains one grid cell. Never throws for numerical divergence; the result is
/// marked diverged with accuracy 0 instead.
CellResult run_cell(const ExperimentConfig& config, const ExperimentData& data, const CellSpec& cell);

/// Population standard deviation.
double standard_deviation(const std::vector<double>& values);

/// Runs every cell (on config.jobs threads), writes one CSV per cell, summary.csv
/// and the resolved config.json into config.output_dir.
std::vector<CellResult> run_experiment(const ExperimentConfig& config,
                                       const std::function<void(const CellResult&)>& on_cell = {});

// ---- heatmaps -----------------------------------------------------------------

struct SummaryRow {
  std::string optimizer;
  double pixel_std = 0.0;
  double label_flip = 0.0;
  double sigma = 0.0;
  std::size_t replicate = 0;
  double test_accuracy = 0.0;
  double update_norm_std = 0.0;
  bool diverged = false;
};

std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

enum class HeatmapMetric { test_accuracy, update_norm_std };

/// Rows are pixel_std, columns label_flip, both sorted ascending; values are the
/// replicate mean of `metric` for the given optimizer and sigma. Throws
/// ConfigError listing any (pixel_std, label_flip) pair with no rows.
std::string aggregate_heatmap(const std::vector<SummaryRow>& rows, const std::string& optimizer,
                              double sigma, HeatmapMetric metric);

// ---- analytic reports -----------------------------------------------------------

struct DemoOptions {
  std::string function = "quartic";  // quartic | quadratic
  std::vector<double> sigmas{0.0, 0.5, 1.0};
  double x_min = -2.0;
  double x_max = 2.0;
  std::size_t points = 81;
  std::size_t samples = 100000;
  std::uint64_t seed = 7;
};

/// Columns: function,sigma,x,f,f_sigma,f_sigma_mc,mc_std_error
std::string smooth_demo(const DemoOptions& options);

struct LemmaOptions {
  std::vector<std::string> lemmas{"1d", "2a", "2b", "jensen", "composition"};
  std::vector<std::string> functions{"quadratic", "quartic"};
  std::vector<double> sigmas{0.0, 0.1, 0.5, 1.0};
  std::size_t points = 100;
  double x_min = -3.0;
  double x_max = 3.0;
  std::size_t quadratic_dimension = 2;
  std::size_t samples = 1000000;
  std::uint64_t seed = 11;
};

struct LemmaReport {
  std::string csv;  // lemma,function,sigma,tau,x,observed,bound,margin,violated
  std::size_t checks = 0;
  std::size_t violations = 0;
  double max_abs_margin_1d_quadratic = 0.0;  // 1d gap minus bound on quadratics, where it is tight
};

LemmaReport lemma_check(const LemmaOptions& options);

}  // namespace gsmooth
