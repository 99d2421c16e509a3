#include <cstring>
#include <string>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gsmooth/bench.hpp"
#include "gsmooth/dataset.hpp"
#include "gsmooth/optimizers.hpp"
#include "gsmooth/smooth_layers.hpp"
#include "gsmooth/smoothing.hpp"
#include "gsmooth/tensor.hpp"

namespace py = pybind11;
using namespace gsmooth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using InPlace = py::array_t<double, py::array::c_style>;

std::span<const double> view(const Array& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

std::span<double> writable(InPlace& a) {
  if (!a.writeable()) throw py::value_error("array is read-only");
  return {a.mutable_data(), static_cast<std::size_t>(a.size())};
}

Array to_array(std::span<const double> values, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(double));
  return out;
}

Array to_array(std::span<const double> values) {
  return to_array(values, {static_cast<py::ssize_t>(values.size())});
}

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array tensor_array(const Tensor& t) {
  return to_array(t.data(), std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

// A GradientSource whose methods may be overridden in Python. `gradient(x, batch, sigma)`
// returns (loss, grad).
class PyGradientSource : public GradientSource {
 public:
  std::size_t num_samples() const override {
    PYBIND11_OVERRIDE_PURE(std::size_t, GradientSource, num_samples);
  }
  std::size_t dim() const override { PYBIND11_OVERRIDE_PURE(std::size_t, GradientSource, dim); }

  double gradient(std::span<const double> x, std::span<const std::size_t> batch, double sigma,
                  std::span<double> grad) override {
    py::gil_scoped_acquire gil;
    py::function override = py::get_override(static_cast<const GradientSource*>(this), "gradient");
    if (!override) throw OptimizerError("GradientSource.gradient is not implemented");
    std::vector<std::size_t> indices(batch.begin(), batch.end());
    py::tuple result = override(to_array(x), indices, sigma);
    if (result.size() != 2) throw OptimizerError("gradient must return (loss, grad)");
    const auto g = result[1].cast<Array>();
    if (static_cast<std::size_t>(g.size()) != grad.size())
      throw OptimizerError("gradient returned " + std::to_string(g.size()) + " values, expected " +
                           std::to_string(grad.size()));
    std::memcpy(grad.data(), g.data(), grad.size() * sizeof(double));
    return result[0].cast<double>();
  }
};

py::dict report_dict(const BoundReport& r) {
  py::list points;
  for (const auto& p : r.points)
    points.append(py::dict(py::arg("x") = p.x, py::arg("observed") = p.observed,
                           py::arg("bound") = p.bound, py::arg("violated") = p.violated()));
  return py::dict(py::arg("points") = points, py::arg("violations") = r.violations(),
                  py::arg("min_margin") = r.min_margin(), py::arg("max_observed") = r.max_observed());
}

py::dict record_dict(const StepRecord& r) {
  return py::dict(py::arg("step") = r.step, py::arg("sigma") = r.sigma, py::arg("loss") = r.loss,
                  py::arg("update_norm") = r.update_norm);
}

template <Split S>
void bind_image_set(py::module_& m, const char* name) {
  using Set = ImageSet<S>;
  py::class_<Set>(m, name)
      .def_readonly("rows", &Set::rows)
      .def_readonly("cols", &Set::cols)
      .def_readonly("provenance", &Set::provenance)
      .def_property_readonly("labels", [](const Set& s) { return s.labels; })
      .def_property_readonly("images",
                             [](const Set& s) {
                               return to_array(s.images, {static_cast<py::ssize_t>(s.size()),
                                                          static_cast<py::ssize_t>(s.rows),
                                                          static_cast<py::ssize_t>(s.cols)});
                             })
      .def("__len__", &Set::size)
      .def("take_first", [](const Set& s, std::size_t n) { return take_first(s, n); }, py::arg("n"));
}

SmoothedNetwork make_conv_net(const ConvNetGeometry& g, const ConvNetLambdas& lambdas,
                              const NetworkOptions& options) {
  return SmoothedNetwork({1, g.image, g.image}, conv_net_layers(g, lambdas), options);
}

py::dict cell_dict(const CellResult& r) {
  py::list records;
  for (const auto& rec : r.records)
    records.append(py::dict(py::arg("step") = rec.step, py::arg("epoch") = rec.epoch,
                            py::arg("train_loss") = rec.train_loss,
                            py::arg("update_norm") = rec.update_norm,
                            py::arg("test_accuracy") = rec.test_accuracy));
  return py::dict(py::arg("pixel_std") = r.cell.pixel_std, py::arg("label_flip") = r.cell.label_flip,
                  py::arg("sigma") = r.cell.sigma, py::arg("replicate") = r.cell.replicate,
                  py::arg("epochs") = r.epochs, py::arg("final_test_accuracy") = r.final_test_accuracy,
                  py::arg("final_train_loss") = r.final_train_loss,
                  py::arg("update_norm_std") = r.update_norm_std, py::arg("diverged") = r.diverged,
                  py::arg("message") = r.message, py::arg("records") = records);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian-smoothed training primitives";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_OSError);
  py::register_exception<OptimizerError>(m, "OptimizerError", PyExc_RuntimeError);
  py::register_exception<MonteCarloError>(m, "MonteCarloError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // ---- smoothing ---------------------------------------------------------------

  using Scalar = double (*)(double, double);
  m.def("smooth_relu", static_cast<Scalar>(&smooth_relu), py::arg("x"), py::arg("sigma"));
  m.def("smooth_relu_derivative", &smooth_relu_derivative, py::arg("x"), py::arg("sigma"));
  m.def("smooth_relu_sq", static_cast<Scalar>(&smooth_relu_sq), py::arg("x"), py::arg("sigma"));
  m.def("smooth_relu_sq_derivative", &smooth_relu_sq_derivative, py::arg("x"), py::arg("sigma"));
  m.def("smooth_sq_norm", [](const Array& x, double sigma) { return smooth_sq_norm(view(x), sigma); },
        py::arg("x"), py::arg("sigma"));

  py::class_<AnalyticTestFunction>(m, "AnalyticTestFunction")
      .def_readonly("name", &AnalyticTestFunction::name)
      .def_readonly("dimension", &AnalyticTestFunction::dimension)
      .def_readonly("smoothness", &AnalyticTestFunction::smoothness)
      .def("value", [](const AnalyticTestFunction& f, const Array& x) { return f.value(view(x)); })
      .def("gradient",
           [](const AnalyticTestFunction& f, const Array& x) { return to_array(f.gradient(view(x))); })
      .def("smoothed_value",
           [](const AnalyticTestFunction& f, const Array& x, double sigma) {
             return f.smoothed_value(view(x), sigma);
           })
      .def("smoothed_gradient", [](const AnalyticTestFunction& f, const Array& x, double sigma) {
        return to_array(f.smoothed_gradient(view(x), sigma));
      });
  m.def("quadratic_test_function", &quadratic_test_function, py::arg("dimension"),
        py::arg("curvature") = 1.0);
  m.def("quartic_test_function", &quartic_test_function, py::arg("radius") = 3.0);

  py::class_<MCEstimate>(m, "MCEstimate")
      .def_readonly("value", &MCEstimate::value)
      .def_readonly("std_error", &MCEstimate::std_error)
      .def_readonly("samples", &MCEstimate::samples)
      .def_readonly("seed", &MCEstimate::seed);

  m.def(
      "mc_smooth_value",
      [](const AnalyticTestFunction& f, const Array& x, double sigma, std::size_t samples,
         std::uint64_t seed) {
        const auto point = to_vector(x);
        py::gil_scoped_release release;
        return mc_smooth_value(f.value, point, sigma, samples, seed);
      },
      py::arg("function"), py::arg("x"), py::arg("sigma"), py::arg("samples"), py::arg("seed"));
  m.def(
      "mc_smooth_grad",
      [](const AnalyticTestFunction& f, const Array& x, double sigma, std::size_t samples,
         std::uint64_t seed) {
        const auto point = to_vector(x);
        py::gil_scoped_release release;
        return mc_smooth_grad(f.value, point, sigma, samples, seed);
      },
      py::arg("function"), py::arg("x"), py::arg("sigma"), py::arg("samples"), py::arg("seed"));

  m.def(
      "check_value_bound",
      [](const AnalyticTestFunction& f, double sigma, double tau, std::vector<std::vector<double>> pts) {
        return report_dict(check_value_bound(f, sigma, tau, pts));
      },
      py::arg("function"), py::arg("sigma"), py::arg("tau"), py::arg("points"));
  m.def(
      "check_grad_bounds",
      [](const AnalyticTestFunction& f, double sigma, double tau, std::vector<std::vector<double>> pts) {
        const auto r = check_grad_bounds(f, sigma, tau, pts);
        return py::dict(py::arg("second_moment") = report_dict(r.second_moment),
                        py::arg("difference") = report_dict(r.difference));
      },
      py::arg("function"), py::arg("sigma"), py::arg("tau"), py::arg("points"));
  m.def(
      "check_composition",
      [](const AnalyticTestFunction& f, double sigma, double tau, std::vector<std::vector<double>> pts,
         std::size_t samples, std::uint64_t seed) {
        BoundReport r;
        {
          py::gil_scoped_release release;
          r = check_composition(f, sigma, tau, pts, samples, seed);
        }
        return report_dict(r);
      },
      py::arg("function"), py::arg("sigma"), py::arg("tau"), py::arg("points"), py::arg("samples"),
      py::arg("seed"));
  m.def("linspace_points", &linspace_points, py::arg("lo"), py::arg("hi"), py::arg("count"),
        py::arg("dimension") = 1);

  // ---- optimizers ----------------------------------------------------------------

  py::class_<SigmaSchedule>(m, "SigmaSchedule")
      .def_static("constant", &SigmaSchedule::constant, py::arg("sigma"))
      .def_static("geometric", &SigmaSchedule::geometric, py::arg("initial"), py::arg("ratio"))
      .def_static("explicit_list", &SigmaSchedule::explicit_list, py::arg("values"),
                  py::arg("repeat_last") = false)
      .def("at", &SigmaSchedule::at, py::arg("t"))
      .def("identically_zero", &SigmaSchedule::identically_zero);

  py::class_<GradientSource, PyGradientSource>(m, "GradientSource")
      .def(py::init<>())
      .def("num_samples", &GradientSource::num_samples)
      .def("dim", &GradientSource::dim)
      .def("gradient", [](GradientSource& s, const Array& x, std::vector<std::size_t> batch, double sigma) {
        std::vector<double> grad(s.dim());
        const double loss = s.gradient(view(x), batch, sigma, grad);
        return py::make_tuple(loss, to_array(grad));
      });
  py::class_<AnalyticSource, GradientSource>(m, "AnalyticSource");
  m.def("shifted_quadratic_source", &shifted_quadratic_source, py::arg("centers"));

  py::class_<GSmoothSgd>(m, "GSmoothSgd")
      .def(py::init<GradientSource&, SigmaSchedule, double, std::size_t, std::uint64_t>(),
           py::arg("source"), py::arg("schedule"), py::arg("lr"), py::arg("batch_size"), py::arg("seed"),
           py::keep_alive<1, 2>())
      .def("step", [](GSmoothSgd& o, InPlace x) { return record_dict(o.step(writable(x))); },
           py::arg("x").noconvert())
      .def_property_readonly("steps_taken", &GSmoothSgd::steps_taken);

  py::class_<GSmoothAdam>(m, "GSmoothAdam")
      .def(py::init([](GradientSource& source, SigmaSchedule schedule, double lr, double beta,
                       double theta, double epsilon, std::size_t batch_size, std::uint64_t seed) {
             return GSmoothAdam(source, std::move(schedule),
                                AdamConfig::constant(lr, beta, theta, epsilon, batch_size), seed);
           }),
           py::arg("source"), py::arg("schedule"), py::arg("lr"), py::arg("beta") = 0.9,
           py::arg("theta") = 0.999, py::arg("epsilon") = 1e-8, py::arg("batch_size") = 1,
           py::arg("seed") = 0, py::keep_alive<1, 2>())
      .def("step", [](GSmoothAdam& o, InPlace x) { return record_dict(o.step(writable(x))); },
           py::arg("x").noconvert());

  py::class_<GSmoothSvrg>(m, "GSmoothSvrg")
      .def(py::init([](GradientSource& source, SigmaSchedule schedule, double lr,
                       std::size_t inner_steps, std::size_t batch_size, bool zero_tau,
                       std::uint64_t seed) {
             SvrgConfig config;
             config.lr = lr;
             config.inner_steps = inner_steps;
             config.batch_size = batch_size;
             config.tau = zero_tau ? ControlVariateSigma::zero : ControlVariateSigma::snapshot_sigma;
             return GSmoothSvrg(source, std::move(schedule), config, seed);
           }),
           py::arg("source"), py::arg("schedule"), py::arg("lr"), py::arg("inner_steps"),
           py::arg("batch_size") = 1, py::arg("zero_tau") = false, py::arg("seed") = 0,
           py::keep_alive<1, 2>())
      .def(
          "outer",
          [](GSmoothSvrg& o, InPlace snapshot) {
            const auto r = o.outer(writable(snapshot));
            py::list inner;
            for (const auto& rec : r.inner) {
              auto d = record_dict(rec.step);
              d["direction_norm"] = rec.direction_norm;
              inner.append(d);
            }
            return py::dict(py::arg("outer") = r.outer, py::arg("sigma") = r.sigma,
                            py::arg("tau") = r.tau, py::arg("snapshot_index") = r.snapshot_index,
                            py::arg("inner") = inner);
          },
          py::arg("snapshot").noconvert())
      .def_property_readonly("steps_taken", &GSmoothSvrg::steps_taken);

  // ---- network -------------------------------------------------------------------

  py::enum_<RegularizerSign>(m, "RegularizerSign")
      .value("minus", RegularizerSign::minus)
      .value("plus", RegularizerSign::plus);
  py::enum_<DenseCoefficient>(m, "DenseCoefficient")
      .value("output_dim", DenseCoefficient::output_dim)
      .value("input_dim", DenseCoefficient::input_dim);

  py::class_<NetworkOptions>(m, "NetworkOptions")
      .def(py::init([](bool smoothed, RegularizerSign sign, DenseCoefficient coefficient) {
             return NetworkOptions{smoothed, sign, coefficient};
           }),
           py::arg("smoothed") = true, py::arg("sign") = RegularizerSign::minus,
           py::arg("dense_coefficient") = DenseCoefficient::output_dim)
      .def_readwrite("smoothed", &NetworkOptions::smoothed)
      .def_readwrite("sign", &NetworkOptions::sign)
      .def_readwrite("dense_coefficient", &NetworkOptions::dense_coefficient);

  py::class_<ConvNetGeometry>(m, "ConvNetGeometry")
      .def(py::init([](std::size_t image, std::size_t kernels, std::size_t k, std::size_t pool,
                       std::size_t hidden, std::size_t classes) {
             return ConvNetGeometry{image, kernels, k, pool, hidden, classes};
           }),
           py::arg("image") = 28, py::arg("kernels") = 32, py::arg("kernel_size") = 4,
           py::arg("pool") = 2, py::arg("hidden") = 128, py::arg("classes") = 10)
      .def_readwrite("image", &ConvNetGeometry::image)
      .def_readwrite("kernels", &ConvNetGeometry::kernels)
      .def_readwrite("kernel_size", &ConvNetGeometry::k)
      .def_readwrite("pool", &ConvNetGeometry::pool)
      .def_readwrite("hidden", &ConvNetGeometry::hidden)
      .def_readwrite("classes", &ConvNetGeometry::classes);

  py::class_<ConvNetLambdas>(m, "ConvNetLambdas")
      .def(py::init([](double relu1, double dense1, double relu2, double output) {
             return ConvNetLambdas{relu1, dense1, relu2, output};
           }),
           py::arg("relu1") = 1e-7, py::arg("dense1") = 1e-7, py::arg("relu2") = 1e-5,
           py::arg("output") = 1e-5)
      .def_static("svrg", &ConvNetLambdas::svrg)
      .def_readwrite("relu1", &ConvNetLambdas::relu1)
      .def_readwrite("dense1", &ConvNetLambdas::dense1)
      .def_readwrite("relu2", &ConvNetLambdas::relu2)
      .def_readwrite("output", &ConvNetLambdas::output);

  py::class_<LayerSpec>(m, "LayerSpec")
      .def_static("dense", &LayerSpec::dense, py::arg("d_in"), py::arg("d_out"), py::arg("lambda_") = 0.0)
      .def_static("conv", &LayerSpec::conv, py::arg("kernels"), py::arg("k"), py::arg("stride") = 1,
                  py::arg("lambda_") = 0.0)
      .def_static("activation", &LayerSpec::activation, py::arg("lambda_") = 0.0)
      .def_static("avg_pool", &LayerSpec::avg_pool, py::arg("window"), py::arg("stride"))
      .def_static("dropout", &LayerSpec::dropout, py::arg("p"), py::arg("lambda_") = 0.0)
      .def_static("flatten", &LayerSpec::flatten)
      .def("__repr__", [](const LayerSpec& s) { return "<LayerSpec " + layer_name(s) + ">"; });

  py::class_<SmoothedNetwork>(m, "SmoothedNetwork")
      .def(py::init<Shape, std::vector<LayerSpec>, NetworkOptions>(), py::arg("input_shape"),
           py::arg("layers"), py::arg("options") = NetworkOptions{})
      .def_static("conv_net", &make_conv_net, py::arg("geometry") = ConvNetGeometry{},
                  py::arg("lambdas") = ConvNetLambdas{}, py::arg("options") = NetworkOptions{})
      .def("init_glorot", &SmoothedNetwork::init_glorot, py::arg("seed"))
      .def_property_readonly("num_parameters", &SmoothedNetwork::num_parameters)
      .def_property_readonly("input_shape", &SmoothedNetwork::input_shape)
      .def_property_readonly("output_shape", &SmoothedNetwork::output_shape)
      .def("parameters", [](const SmoothedNetwork& n) { return to_array(n.parameters()); })
      .def("set_parameters",
           [](SmoothedNetwork& n, const Array& flat) {
             if (static_cast<std::size_t>(flat.size()) != n.num_parameters())
               throw py::value_error("expected " + std::to_string(n.num_parameters()) + " parameters");
             n.set_parameters(view(flat));
           },
           py::arg("flat"))
      .def(
          "predict",
          [](const SmoothedNetwork& n, const Array& inputs, double sigma) {
            const auto x = to_tensor(inputs);
            Tensor out;
            {
              py::gil_scoped_release release;
              out = n.predict(x, sigma);
            }
            return tensor_array(out);
          },
          py::arg("inputs"), py::arg("sigma"))
      .def(
          "loss_and_gradient",
          [](SmoothedNetwork& n, const Array& inputs, const Array& targets, double sigma) {
            const auto x = to_tensor(inputs);
            const auto y = to_tensor(targets);
            std::vector<double> grad(n.num_parameters());
            double loss = 0.0;
            {
              py::gil_scoped_release release;
              loss = n.loss_and_gradient(x, y, sigma, grad);
            }
            return py::make_tuple(loss, to_array(grad));
          },
          py::arg("inputs"), py::arg("targets"), py::arg("sigma"));

  // ---- dataset -------------------------------------------------------------------

  bind_image_set<Split::train>(m, "TrainSet");
  bind_image_set<Split::test>(m, "TestSet");

  m.def(
      "load_mnist",
      [](const std::filesystem::path& dir) {
        const auto files = locate_mnist(dir);
        return py::make_tuple(load_idx<Split::train>(files.train_images, files.train_labels),
                              load_idx<Split::test>(files.test_images, files.test_labels));
      },
      py::arg("dir"), "(train, test) sets from an MNIST IDX directory; .gz files are accepted.");
  m.def("add_pixel_noise", [](const TrainSet& s, double std_dev, std::uint64_t seed) { return add_pixel_noise(s, std_dev, seed); }, py::arg("set"), py::arg("std_dev"), py::arg("seed"));
  m.def("flip_labels", [](const TrainSet& s, double frac, std::uint64_t seed) { return flip_labels(s, frac, seed); }, py::arg("set"), py::arg("fraction"), py::arg("seed"));
  m.def("split_validation", &split_validation, py::arg("set"), py::arg("fraction"), py::arg("seed"));

  // ---- experiments -----------------------------------------------------------------

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static(
          "defaults_for", [](const std::string& name) { return ExperimentConfig::defaults_for(parse_optimizer(name)); },
          py::arg("optimizer"))
      .def_static(
          "from_json", [](const std::string& text) { return config_from_json(nlohmann::json::parse(text)); },
          py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def("to_json", [](const ExperimentConfig& c) { return to_json(c).dump(2); })
      .def("validate", &ExperimentConfig::validate)
      .def_property_readonly("optimizer", [](const ExperimentConfig& c) { return to_string(c.optimizer); })
      .def_readwrite("name", &ExperimentConfig::name)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("data_dir", &ExperimentConfig::data_dir)
      .def_readwrite("jobs", &ExperimentConfig::jobs)
      .def_property_readonly("cells", [](const ExperimentConfig& c) {
        std::vector<std::string> names;
        for (const auto& cell : enumerate_cells(c)) names.push_back(cell_file_name(c, cell));
        return names;
      });

  m.def(
      "run_experiment",
      [](const ExperimentConfig& config) {
        std::vector<CellResult> results;
        {
          py::gil_scoped_release release;
          results = run_experiment(config);
        }
        py::list out;
        for (const auto& r : results) out.append(cell_dict(r));
        return out;
      },
      py::arg("config"), "Trains every grid cell and writes the CSVs into config.output_dir.");

  m.def(
      "heatmap",
      [](const std::filesystem::path& summary, const std::string& optimizer, double sigma,
         const std::string& metric) {
        HeatmapMetric which;
        if (metric == "test_accuracy") {
          which = HeatmapMetric::test_accuracy;
        } else if (metric == "update_norm_std") {
          which = HeatmapMetric::update_norm_std;
        } else {
          throw py::value_error("metric must be test_accuracy or update_norm_std");
        }
        return aggregate_heatmap(read_summary(summary), optimizer, sigma, which);
      },
      py::arg("summary"), py::arg("optimizer"), py::arg("sigma"), py::arg("metric") = "test_accuracy");

  m.def(
      "smooth_demo",
      [](const std::string& function, std::vector<double> sigmas, double x_min, double x_max,
         std::size_t points, std::size_t samples, std::uint64_t seed) {
        const DemoOptions options{function, std::move(sigmas), x_min, x_max, points, samples, seed};
        py::gil_scoped_release release;
        return smooth_demo(options);
      },
      py::arg("function") = "quartic", py::arg("sigmas") = std::vector<double>{0.0, 0.5, 1.0},
      py::arg("x_min") = -2.0, py::arg("x_max") = 2.0, py::arg("points") = 81,
      py::arg("samples") = 100000, py::arg("seed") = 7);

  m.def(
      "lemma_check",
      [](std::vector<std::string> lemmas, std::vector<std::string> functions, std::vector<double> sigmas,
         std::size_t points, std::size_t samples, std::uint64_t seed) {
        LemmaOptions options;
        options.lemmas = std::move(lemmas);
        options.functions = std::move(functions);
        options.sigmas = std::move(sigmas);
        options.points = points;
        options.samples = samples;
        options.seed = seed;
        LemmaReport r;
        {
          py::gil_scoped_release release;
          r = lemma_check(options);
        }
        return py::dict(py::arg("csv") = r.csv, py::arg("checks") = r.checks,
                        py::arg("violations") = r.violations);
      },
      py::arg("lemmas") = LemmaOptions{}.lemmas, py::arg("functions") = LemmaOptions{}.functions,
      py::arg("sigmas") = LemmaOptions{}.sigmas, py::arg("points") = LemmaOptions{}.points,
      py::arg("samples") = LemmaOptions{}.samples, py::arg("seed") = LemmaOptions{}.seed);
}
