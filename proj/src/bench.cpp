#include "gsmooth/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "gsmooth/csv.hpp"
#include "gsmooth/rng.hpp"

namespace gsmooth {

using nlohmann::json;

// ---- optimizer kinds -------------------------------------------------------------

namespace {

const std::pair<OptimizerKind, const char*> kKindNames[] = {
    {OptimizerKind::sgd, "sgd"},           {OptimizerKind::gsmooth_sgd, "gsmooth_sgd"},
    {OptimizerKind::adam, "adam"},         {OptimizerKind::gsmooth_adam, "gsmooth_adam"},
    {OptimizerKind::svrg, "svrg"},         {OptimizerKind::gsmooth_svrg, "gsmooth_svrg"},
};

}  // namespace

std::string to_string(OptimizerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw ConfigError("unknown optimizer '" + name +
                    "' (expected sgd, gsmooth_sgd, adam, gsmooth_adam, svrg or gsmooth_svrg)");
}

bool is_smoothed(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::gsmooth_sgd || kind == OptimizerKind::gsmooth_adam ||
         kind == OptimizerKind::gsmooth_svrg;
}

bool is_svrg(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::svrg || kind == OptimizerKind::gsmooth_svrg;
}

// ---- config ------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::defaults_for(OptimizerKind kind) {
  ExperimentConfig c;
  c.optimizer = kind;
  c.name = to_string(kind);
  c.output_dir = "runs/" + c.name;
  switch (kind) {
    case OptimizerKind::adam:
    case OptimizerKind::gsmooth_sgd:
    case OptimizerKind::gsmooth_adam:
      c.learning_rate = 0.1;
      c.batch_size = 16;
      break;
    case OptimizerKind::sgd:
      c.learning_rate = 0.01;
      c.batch_size = 16;
      break;
    case OptimizerKind::svrg:
    case OptimizerKind::gsmooth_svrg:
      c.learning_rate = 0.01;
      c.batch_size = 1;
      c.max_epochs = 1;
      c.early_stopping = false;
      c.lambdas = ConvNetLambdas::svrg();
      break;
  }
  if (!is_smoothed(kind)) c.sigmas = {0.0};
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (sigmas.empty() || pixel_stds.empty() || label_flips.empty()) fail("every grid axis needs at least one value");
  for (double s : sigmas) {
    if (!(s >= 0.0)) fail("sigma values must be >= 0");
    if (!is_smoothed(optimizer) && s != 0.0) {
      fail("optimizer " + to_string(optimizer) + " is unsmoothed; its sigma grid must be {0}");
    }
  }
  for (double p : pixel_stds) {
    if (!(p >= 0.0)) fail("pixel_std values must be >= 0");
  }
  for (double f : label_flips) {
    if (!(f >= 0.0 && f <= 1.0)) fail("label_flip values must lie in [0, 1]");
  }
  if (replicates == 0) fail("replicates must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (max_epochs == 0) fail("max_epochs must be >= 1");
  if (early_stopping && !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail("early stopping needs validation_fraction in (0, 1)");
  }
  if (adam_beta < 0.0 || adam_beta >= 1.0 || adam_theta < 0.0 || adam_theta >= 1.0) {
    fail("adam beta and theta must lie in [0, 1)");
  }
  if (adam_epsilon < 0.0) fail("adam epsilon must be >= 0");
  if (train_size == 0) fail("train_size must be >= 1");
  if (jobs == 0) fail("jobs must be >= 1");
  for (double l : {lambdas.relu1, lambdas.dense1, lambdas.relu2, lambdas.output}) {
    if (!(l >= 0.0)) fail("lambda values must be >= 0");
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["optimizer"] = to_string(c.optimizer);
  j["grid"] = {{"sigma", c.sigmas},
               {"pixel_std", c.pixel_stds},
               {"label_flip", c.label_flips},
               {"replicates", c.replicates}};
  j["training"] = {
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"max_epochs", c.max_epochs},
      {"early_stopping", c.early_stopping},
      {"patience", c.patience},
      {"validation_fraction", c.validation_fraction},
      {"svrg_inner_steps", c.svrg_inner_steps},
      {"svrg_tau", c.svrg_tau == ControlVariateSigma::snapshot_sigma ? "snapshot_sigma" : "zero"},
      {"adam", {{"beta", c.adam_beta}, {"theta", c.adam_theta}, {"epsilon", c.adam_epsilon}}},
  };
  j["network"] = {
      {"image", c.network.image},
      {"kernels", c.network.kernels},
      {"kernel_size", c.network.k},
      {"pool", c.network.pool},
      {"hidden", c.network.hidden},
      {"classes", c.network.classes},
      {"lambda",
       {{"relu1", c.lambdas.relu1},
        {"dense1", c.lambdas.dense1},
        {"relu2", c.lambdas.relu2},
        {"output", c.lambdas.output}}},
      {"regularizer_sign", c.regularizer_sign == RegularizerSign::minus ? "minus" : "plus"},
      {"dense_coefficient", c.dense_coefficient == DenseCoefficient::output_dim ? "output_dim" : "input_dim"},
  };
  j["data"] = {{"dir", c.data_dir}, {"train_size", c.train_size}, {"test_size", c.test_size}};
  j["seeds"] = {{"data", c.data_seed}, {"sampling", c.sampling_seed}, {"init", c.init_seed}};
  j["output"] = {{"dir", c.output_dir}};
  j["jobs"] = c.jobs;
  return j;
}

namespace {

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.is_object() || !obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& s = j.at(key);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return s;
}

// A misspelt key would otherwise fall back to the default without a word.
void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown config key '" + where + key + "'");
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"name", "optimizer", "grid", "training", "network", "data", "seeds", "output", "jobs"}, "");
  std::string opt = "gsmooth_sgd";
  read(j, "optimizer", opt);
  ExperimentConfig c = ExperimentConfig::defaults_for(parse_optimizer(opt));
  read(j, "name", c.name);

  const json& grid = section(j, "grid");
  read(grid, "sigma", c.sigmas);
  read(grid, "pixel_std", c.pixel_stds);
  read(grid, "label_flip", c.label_flips);
  read(grid, "replicates", c.replicates);
  reject_unknown(grid, {"sigma", "pixel_std", "label_flip", "replicates"}, "grid.");

  const json& tr = section(j, "training");
  read(tr, "learning_rate", c.learning_rate);
  read(tr, "batch_size", c.batch_size);
  read(tr, "max_epochs", c.max_epochs);
  read(tr, "early_stopping", c.early_stopping);
  read(tr, "patience", c.patience);
  read(tr, "validation_fraction", c.validation_fraction);
  read(tr, "svrg_inner_steps", c.svrg_inner_steps);
  reject_unknown(tr,
                 {"learning_rate", "batch_size", "max_epochs", "early_stopping", "patience", "validation_fraction",
                  "svrg_inner_steps", "svrg_tau", "adam"},
                 "training.");
  std::string tau = c.svrg_tau == ControlVariateSigma::snapshot_sigma ? "snapshot_sigma" : "zero";
  read(tr, "svrg_tau", tau);
  if (tau == "snapshot_sigma") {
    c.svrg_tau = ControlVariateSigma::snapshot_sigma;
  } else if (tau == "zero") {
    c.svrg_tau = ControlVariateSigma::zero;
  } else {
    throw ConfigError("svrg_tau must be snapshot_sigma or zero, got '" + tau + "'");
  }
  const json& adam = section(tr, "adam");
  read(adam, "beta", c.adam_beta);
  read(adam, "theta", c.adam_theta);
  read(adam, "epsilon", c.adam_epsilon);
  reject_unknown(adam, {"beta", "theta", "epsilon"}, "training.adam.");

  const json& net = section(j, "network");
  read(net, "image", c.network.image);
  read(net, "kernels", c.network.kernels);
  read(net, "kernel_size", c.network.k);
  read(net, "pool", c.network.pool);
  read(net, "hidden", c.network.hidden);
  read(net, "classes", c.network.classes);
  reject_unknown(net,
                 {"image", "kernels", "kernel_size", "pool", "hidden", "classes", "lambda", "regularizer_sign",
                  "dense_coefficient"},
                 "network.");
  const json& lam = section(net, "lambda");
  read(lam, "relu1", c.lambdas.relu1);
  read(lam, "dense1", c.lambdas.dense1);
  read(lam, "relu2", c.lambdas.relu2);
  read(lam, "output", c.lambdas.output);
  reject_unknown(lam, {"relu1", "dense1", "relu2", "output"}, "network.lambda.");
  std::string sign = c.regularizer_sign == RegularizerSign::minus ? "minus" : "plus";
  read(net, "regularizer_sign", sign);
  if (sign == "minus") {
    c.regularizer_sign = RegularizerSign::minus;
  } else if (sign == "plus") {
    c.regularizer_sign = RegularizerSign::plus;
  } else {
    throw ConfigError("regularizer_sign must be minus or plus, got '" + sign + "'");
  }
  std::string coeff = c.dense_coefficient == DenseCoefficient::output_dim ? "output_dim" : "input_dim";
  read(net, "dense_coefficient", coeff);
  if (coeff == "output_dim") {
    c.dense_coefficient = DenseCoefficient::output_dim;
  } else if (coeff == "input_dim") {
    c.dense_coefficient = DenseCoefficient::input_dim;
  } else {
    throw ConfigError("dense_coefficient must be output_dim or input_dim, got '" + coeff + "'");
  }

  const json& data = section(j, "data");
  read(data, "dir", c.data_dir);
  read(data, "train_size", c.train_size);
  read(data, "test_size", c.test_size);
  reject_unknown(data, {"dir", "train_size", "test_size"}, "data.");

  const json& seeds = section(j, "seeds");
  read(seeds, "data", c.data_seed);
  read(seeds, "sampling", c.sampling_seed);
  read(seeds, "init", c.init_seed);
  reject_unknown(seeds, {"data", "sampling", "init"}, "seeds.");

  const json& output = section(j, "output");
  read(output, "dir", c.output_dir);
  reject_unknown(output, {"dir"}, "output.");
  read(j, "jobs", c.jobs);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::filesystem::path resolve_data_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return config.data_dir;
}

// ---- records ------------------------------------------------------------------------

void write_run_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << "step,epoch,train_loss,update_norm,test_accuracy\n";
  for (const auto& r : records) {
    out << r.step << ',' << r.epoch << ',' << csv::num(r.train_loss) << ',' << csv::num(r.update_norm) << ','
        << (r.test_accuracy ? csv::num(*r.test_accuracy) : std::string()) << '\n';
  }
  if (!out) throw DatasetError("write failed for " + path.string());
}

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& config) {
  std::vector<CellSpec> cells;
  for (std::size_t p = 0; p < config.pixel_stds.size(); ++p) {
    for (std::size_t f = 0; f < config.label_flips.size(); ++f) {
      for (std::size_t s = 0; s < config.sigmas.size(); ++s) {
        for (std::size_t r = 0; r < config.replicates; ++r) {
          CellSpec c;
          c.index = cells.size();
          c.pixel_index = p;
          c.flip_index = f;
          c.sigma_index = s;
          c.replicate = r;
          c.pixel_std = config.pixel_stds[p];
          c.label_flip = config.label_flips[f];
          c.sigma = config.sigmas[s];
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

std::string cell_file_name(const ExperimentConfig& config, const CellSpec& cell) {
  return to_string(config.optimizer) + "_pix" + csv::num(cell.pixel_std) + "_flip" + csv::num(cell.label_flip) +
         "_sigma" + csv::num(cell.sigma) + "_rep" + std::to_string(cell.replicate) + ".csv";
}

double standard_deviation(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

// ---- training -------------------------------------------------------------------------

ExperimentData load_experiment_data(const ExperimentConfig& config, const std::filesystem::path& data_dir) {
  const auto files = locate_mnist(data_dir);
  ExperimentData d;
  d.train = take_first(load_idx<Split::train>(files.train_images, files.train_labels), config.train_size);
  d.test = load_idx<Split::test>(files.test_images, files.test_labels);
  if (config.test_size > 0) d.test = take_first(d.test, config.test_size);
  if (d.train.rows != config.network.image || d.train.cols != config.network.image) {
    throw ConfigError("network.image is " + std::to_string(config.network.image) + " but the dataset has " +
                      std::to_string(d.train.rows) + "x" + std::to_string(d.train.cols) + " images");
  }
  return d;
}

namespace {

struct SetScore {
  double accuracy = 0.0;
  double mse = 0.0;  // mean per-sample |f(x) - y|^2
};

template <Split S>
SetScore score(const SmoothedNetwork& net, const ImageSet<S>& set, double sigma) {
  constexpr std::size_t kChunk = 250;
  const Shape sample_shape = net.input_shape();
  const std::size_t classes = net.output_shape().at(0);
  std::size_t hits = 0;
  double sq = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += kChunk) {
    const std::size_t end = std::min(set.size(), start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor out = net.predict(gather_batch(set.images, sample_shape, idx), sigma);
    const auto o = out.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto row = o.subspan(i * classes, classes);
      const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      const int label = set.labels[start + i];
      if (best == label) ++hits;
      for (std::size_t c = 0; c < classes; ++c) {
        const double t = static_cast<int>(c) == label ? 1.0 : 0.0;
        sq += (row[c] - t) * (row[c] - t);
      }
    }
  }
  const double n = static_cast<double>(set.size());
  return {static_cast<double>(hits) / n, sq / n};
}

}  // namespace

CellResult run_cell(const ExperimentConfig& config, const ExperimentData& data, const CellSpec& cell) {
  CellResult result;
  result.cell = cell;

  // Noise and sampling streams depend on the noise cell and replicate only, so
  // every sigma (and the unsmoothed baseline) sees the same data and indices.
  const std::uint64_t family = cell.pixel_index * 1000003ULL + cell.flip_index;
  const std::uint64_t noise_seed = derive_seed(derive_seed(config.data_seed, family), cell.replicate);
  TrainSet noisy = add_pixel_noise(data.train, cell.pixel_std, derive_seed(noise_seed, 1));
  noisy = flip_labels(noisy, cell.label_flip, derive_seed(noise_seed, 2));
  TrainSet fit;
  TrainSet validation;
  if (config.early_stopping) {
    std::tie(fit, validation) = split_validation(noisy, config.validation_fraction, derive_seed(noise_seed, 3));
  } else {
    fit = std::move(noisy);
  }

  const bool smoothed = is_smoothed(config.optimizer);
  const double sigma = smoothed ? cell.sigma : 0.0;
  NetworkOptions options;
  options.smoothed = smoothed;
  options.sign = config.regularizer_sign;
  options.dense_coefficient = config.dense_coefficient;
  SmoothedNetwork net({1, fit.rows, fit.cols}, conv_net_layers(config.network, config.lambdas), options);
  net.init_glorot(derive_seed(config.init_seed, cell.replicate));
  NetworkSource source(net, fit.images, fit.labels);

  const std::uint64_t sampling = derive_seed(derive_seed(config.sampling_seed, family), cell.replicate);
  const SigmaSchedule schedule = SigmaSchedule::constant(sigma);
  std::vector<double> x = net.parameters();
  const std::size_t K = fit.size();
  const std::size_t steps_per_epoch = (K + config.batch_size - 1) / config.batch_size;

  std::vector<double> norms;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  // Parameters used for evaluation; SVRG reports its snapshot.
  std::vector<double>* eval_point = &x;

  auto record = [&](std::size_t step, std::size_t epoch, double loss, double norm) {
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss at step " + std::to_string(step));
    result.records.push_back({step, epoch, loss, norm, std::nullopt});
    norms.push_back(norm);
    result.final_train_loss = loss;
  };

  // Returns false when early stopping fires.
  auto end_epoch = [&](std::size_t epoch) {
    net.set_parameters(*eval_point);
    const SetScore test = score(net, data.test, sigma);
    if (!result.records.empty()) result.records.back().test_accuracy = test.accuracy;
    result.final_test_accuracy = test.accuracy;
    result.epochs = epoch;
    if (!config.early_stopping) return true;
    const SetScore val = score(net, validation, sigma);
    if (!std::isfinite(val.mse)) throw NumericError("non-finite validation loss");
    if (val.mse < best_val) {
      best_val = val.mse;
      stale = 0;
      return true;
    }
    return ++stale < config.patience;
  };

  try {
    std::size_t step = 0;
    switch (config.optimizer) {
      case OptimizerKind::sgd:
      case OptimizerKind::gsmooth_sgd: {
        GSmoothSgd opt(source, schedule, config.learning_rate, config.batch_size, sampling);
        for (std::size_t e = 1; e <= config.max_epochs; ++e) {
          for (std::size_t i = 0; i < steps_per_epoch; ++i) {
            const StepRecord r = opt.step(x);
            record(++step, e, r.loss, r.update_norm);
          }
          if (!end_epoch(e)) break;
        }
        break;
      }
      case OptimizerKind::adam:
      case OptimizerKind::gsmooth_adam: {
        AdamConfig ac = AdamConfig::constant(config.learning_rate, config.adam_beta, config.adam_theta,
                                             config.adam_epsilon, config.batch_size);
        GSmoothAdam opt(source, schedule, std::move(ac), sampling);
        for (std::size_t e = 1; e <= config.max_epochs; ++e) {
          for (std::size_t i = 0; i < steps_per_epoch; ++i) {
            const StepRecord r = opt.step(x);
            record(++step, e, r.loss, r.update_norm);
          }
          if (!end_epoch(e)) break;
        }
        break;
      }
      case OptimizerKind::svrg:
      case OptimizerKind::gsmooth_svrg: {
        SvrgConfig sc;
        sc.lr = config.learning_rate;
        sc.batch_size = config.batch_size;
        sc.inner_steps = config.svrg_inner_steps ? config.svrg_inner_steps : steps_per_epoch;
        sc.tau = config.svrg_tau;
        GSmoothSvrg opt(source, schedule, sc, sampling);
        const std::size_t outers_per_epoch = (steps_per_epoch + sc.inner_steps - 1) / sc.inner_steps;
        for (std::size_t e = 1; e <= config.max_epochs; ++e) {
          for (std::size_t o = 0; o < outers_per_epoch; ++o) {
            opt.outer(x, [&](const SvrgInnerRecord& r, std::span<const double>) {
              record(++step, e, r.step.loss, r.step.update_norm);
            });
          }
          if (!end_epoch(e)) break;
        }
        break;
      }
    }
  } catch (const NumericError& e) {
    result.diverged = true;
    result.message = e.what();
  } catch (const OptimizerError& e) {
    result.diverged = true;
    result.message = e.what();
  }
  if (result.diverged) result.final_test_accuracy = 0.0;
  result.update_norm_std = standard_deviation(norms);
  return result;
}

std::vector<CellResult> run_experiment(const ExperimentConfig& config,
                                       const std::function<void(const CellResult&)>& on_cell) {
  config.validate();
  const auto data = load_experiment_data(config, resolve_data_dir(config));
  const auto cells = enumerate_cells(config);
  const std::filesystem::path out_dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DatasetError("cannot create " + out_dir.string() + ": " + ec.message());
  {
    std::ofstream cfg(out_dir / "config.json", std::ios::binary);
    if (!cfg) throw DatasetError("cannot write " + (out_dir / "config.json").string());
    cfg << to_json(config).dump(2) << '\n';
  }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i] = run_cell(config, data, cells[i]);
        write_run_csv(out_dir / cell_file_name(config, cells[i]), results[i].records);
        if (on_cell) {
          std::lock_guard lock(report_mutex);
          on_cell(results[i]);
        }
      } catch (...) {
        std::lock_guard lock(report_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
        return;
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  if (!summary) throw DatasetError("cannot write " + (out_dir / "summary.csv").string());
  summary << "optimizer,pixel_std,label_flip,sigma,replicate,epochs,steps,final_test_accuracy,"
             "update_norm_std,final_train_loss,diverged,csv\n";
  for (const auto& r : results) {
    summary << to_string(config.optimizer) << ',' << csv::num(r.cell.pixel_std) << ','
            << csv::num(r.cell.label_flip) << ',' << csv::num(r.cell.sigma) << ',' << r.cell.replicate << ','
            << r.epochs << ',' << r.records.size() << ',' << csv::num(r.final_test_accuracy) << ','
            << csv::num(r.update_norm_std) << ',' << csv::num(r.final_train_loss) << ','
            << (r.diverged ? 1 : 0) << ',' << cell_file_name(config, r.cell) << '\n';
  }
  return results;
}

// ---- heatmaps --------------------------------------------------------------------------

std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty summary");
  const auto header = csv::split(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_opt = col("optimizer"), c_pix = col("pixel_std"), c_flip = col("label_flip"),
                    c_sigma = col("sigma"), c_rep = col("replicate"), c_acc = col("final_test_accuracy"),
                    c_std = col("update_norm_std"), c_div = col("diverged");
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    try {
      SummaryRow r;
      r.optimizer = f[c_opt];
      r.pixel_std = csv::parse_double(f[c_pix]);
      r.label_flip = csv::parse_double(f[c_flip]);
      r.sigma = csv::parse_double(f[c_sigma]);
      r.replicate = static_cast<std::size_t>(std::stoul(f[c_rep]));
      r.test_accuracy = csv::parse_double(f[c_acc]);
      r.update_norm_std = csv::parse_double(f[c_std]);
      r.diverged = f[c_div] == "1";
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::string aggregate_heatmap(const std::vector<SummaryRow>& rows, const std::string& optimizer,
                              double sigma, HeatmapMetric metric) {
  std::set<double> pix;
  std::set<double> flip;
  std::map<std::pair<double, double>, std::pair<double, std::size_t>> cells;
  for (const auto& r : rows) {
    if (r.optimizer != optimizer) continue;
    pix.insert(r.pixel_std);
    flip.insert(r.label_flip);
    if (r.sigma != sigma) continue;
    auto& [total, count] = cells[{r.pixel_std, r.label_flip}];
    total += metric == HeatmapMetric::test_accuracy ? r.test_accuracy : r.update_norm_std;
    ++count;
  }
  if (pix.empty()) throw ConfigError("no summary rows for optimizer " + optimizer);
  std::vector<std::string> missing;
  for (double p : pix) {
    for (double f : flip) {
      if (!cells.count({p, f})) missing.push_back("(pixel_std=" + csv::num(p) + ", label_flip=" + csv::num(f) + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "heatmap for " + optimizer + " at sigma=" + csv::num(sigma) + " is missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }
  std::ostringstream out;
  out << "pixel_std\\label_flip";
  for (double f : flip) out << ',' << csv::num(f);
  out << '\n';
  for (double p : pix) {
    out << csv::num(p);
    for (double f : flip) {
      const auto& [total, count] = cells.at({p, f});
      out << ',' << csv::num(total / static_cast<double>(count));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gsmooth
