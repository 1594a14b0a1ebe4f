#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qcgan/datapipe.hpp"
#include "qcgan/experiment.hpp"
#include "qcgan/gan.hpp"
#include "qcgan/ids.hpp"
#include "qcgan/metrics.hpp"
#include "qcgan/neural.hpp"
#include "qcgan/qgen.hpp"
#include "qcgan/qsim.hpp"

namespace py = pybind11;
using namespace qcgan;

namespace {

Mat to_mat(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Mat(0, 0);
  Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols)
      throw UsageError("ragged matrix: row " + std::to_string(r));
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> from_mat(const Mat& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) rows[r][c] = m(r, c);
  return rows;
}

qsim::NoiseSpec noise_from_tuple(double p_dep, double p_bf, double gamma) {
  qsim::NoiseSpec noise{p_dep, p_bf, gamma};
  noise.validate();
  return noise;
}

qsim::GateKind gate_kind(const std::string& name) {
  if (name == "rx") return qsim::GateKind::RX;
  if (name == "ry") return qsim::GateKind::RY;
  if (name == "rz") return qsim::GateKind::RZ;
  if (name == "cnot") return qsim::GateKind::CNOT;
  throw UsageError("unknown gate kind '" + name + "' (rx|ry|rz|cnot)");
}

qsim::ChannelKind channel_kind(const std::string& name) {
  if (name == "depolarizing") return qsim::ChannelKind::Depolarizing;
  if (name == "bitflip") return qsim::ChannelKind::BitFlip;
  if (name == "amplitude_damping") return qsim::ChannelKind::AmplitudeDamping;
  throw UsageError("unknown channel '" + name +
                   "' (depolarizing|bitflip|amplitude_damping)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid quantum-classical GAN lab: simulator, generator, metrics, "
            "IDS surrogates and training loop";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<UsageError>(m, "UsageError");

  // ---- qsim ----
  py::class_<qsim::QuantumState>(m, "QuantumState")
      .def_readonly("num_qubits", &qsim::QuantumState::num_qubits)
      .def_property_readonly(
          "backend",
          [](const qsim::QuantumState& s) {
            return s.backend == qsim::Backend::Pure ? "pure" : "mixed";
          })
      .def("expect_z", [](const qsim::QuantumState& s, int qubit) {
        return qsim::expect_z(s, qubit);
      })
      .def("apply_gate",
           [](qsim::QuantumState& s, const std::string& kind, int target, int control,
              double angle) {
             qsim::GateOp op{gate_kind(kind), target, control, angle};
             qsim::apply_gate(s, op);
           },
           py::arg("kind"), py::arg("target"), py::arg("control") = -1,
           py::arg("angle") = 0.0)
      .def("apply_channel",
           [](qsim::QuantumState& s, const std::string& kind, double strength,
              int qubit) {
             qsim::apply_channel(s, {channel_kind(kind), strength}, qubit);
           },
           py::arg("kind"), py::arg("strength"), py::arg("qubit"))
      .def("norm_residual",
           [](const qsim::QuantumState& s) { return norm_residual(s); });

  m.def("init_ground",
        [](int num_qubits, const std::string& backend) {
          if (backend != "pure" && backend != "mixed")
            throw UsageError("backend must be 'pure' or 'mixed'");
          return qsim::init_ground(
              num_qubits, backend == "pure" ? qsim::Backend::Pure : qsim::Backend::Mixed);
        },
        py::arg("num_qubits"), py::arg("backend") = "pure");

  // ---- qgen ----
  py::class_<qgen::CircuitConfig>(m, "CircuitConfig")
      .def(py::init([](int num_qubits, int num_blocks, int layers_per_block,
                       const std::string& rotations) {
             qgen::CircuitConfig c;
             c.num_qubits = num_qubits;
             c.num_blocks = num_blocks;
             c.layers_per_block = layers_per_block;
             if (rotations == "rx_rz") c.rotations = qgen::RotationSet::RxRz;
             else if (rotations == "ry_rz") c.rotations = qgen::RotationSet::RyRz;
             else if (rotations == "ry_only") c.rotations = qgen::RotationSet::RyOnly;
             else throw UsageError("rotations must be rx_rz|ry_rz|ry_only");
             c.validate();
             return c;
           }),
           py::arg("num_qubits") = 4, py::arg("num_blocks") = 3,
           py::arg("layers_per_block") = 2, py::arg("rotations") = "rx_rz")
      .def_readonly("num_qubits", &qgen::CircuitConfig::num_qubits)
      .def_readonly("num_blocks", &qgen::CircuitConfig::num_blocks)
      .def_readonly("layers_per_block", &qgen::CircuitConfig::layers_per_block)
      .def("param_count", &qgen::CircuitConfig::param_count)
      .def_static("compact16", &qgen::CircuitConfig::compact16);

  m.def("generate",
        [](const qgen::CircuitConfig& config, const Vec& theta, const Vec& z,
           double p_depolarizing, double p_bitflip, double gamma) {
          return qgen::generate(config, theta, z,
                                noise_from_tuple(p_depolarizing, p_bitflip, gamma));
        },
        py::arg("config"), py::arg("theta"), py::arg("z"),
        py::arg("p_depolarizing") = 0.0, py::arg("p_bitflip") = 0.0,
        py::arg("gamma_amplitude_damping") = 0.0,
        "Measurement vector (<Z_1>,...,<Z_N>) of the SUDAI generator circuit");

  m.def("parameter_shift_grad",
        [](const qgen::CircuitConfig& config, const Vec& theta, const Vec& z,
           const Vec& downstream, double p_depolarizing, double p_bitflip,
           double gamma) {
          return qgen::parameter_shift_grad(
              config, theta, z, noise_from_tuple(p_depolarizing, p_bitflip, gamma),
              downstream);
        },
        py::arg("config"), py::arg("theta"), py::arg("z"), py::arg("downstream"),
        py::arg("p_depolarizing") = 0.0, py::arg("p_bitflip") = 0.0,
        py::arg("gamma_amplitude_damping") = 0.0);

  // ---- neural parameter budgets ----
  m.def("critic_parameter_count",
        [] { return neural::DiffNet::critic().parameter_count(); });
  m.def("classical_generator_parameter_count",
        [] { return neural::DiffNet::classical_generator().parameter_count(); });
  m.def("post_processor_parameter_count",
        [] { return neural::DiffNet::post_processor().parameter_count(); });

  // ---- metrics ----
  m.def("mmd", [](const std::vector<std::vector<double>>& x,
                  const std::vector<std::vector<double>>& y) {
    return metrics::mmd(to_mat(x), to_mat(y));
  });
  m.def("wasserstein_per_feature",
        [](const std::vector<std::vector<double>>& x,
           const std::vector<std::vector<double>>& y, std::uint64_t seed) {
          return metrics::wasserstein_per_feature(to_mat(x), to_mat(y), seed);
        },
        py::arg("x"), py::arg("y"), py::arg("seed") = 0);
  m.def("kl_histogram",
        [](const std::vector<std::vector<double>>& real,
           const std::vector<std::vector<double>>& gen, std::size_t bins, double eps) {
          return metrics::kl_histogram(to_mat(real), to_mat(gen), bins, eps);
        },
        py::arg("real"), py::arg("gen"), py::arg("bins") = 50, py::arg("eps") = 1e-6);
  m.def("mse_quantile_paired",
        [](const std::vector<std::vector<double>>& gen,
           const std::vector<std::vector<double>>& real, std::uint64_t seed) {
          return metrics::mse_quantile_paired(to_mat(gen), to_mat(real), seed);
        },
        py::arg("gen"), py::arg("real"), py::arg("seed") = 0);

  // ---- datapipe ----
  m.def("generate_synthetic",
        [](const std::string& spec_json, std::size_t n, std::uint64_t seed) {
          const auto spec =
              datapipe::SyntheticSpec::from_json(nlohmann::json::parse(spec_json));
          const auto data = datapipe::generate_synthetic(spec, n, seed);
          return py::make_tuple(data.feature_names,
                                from_mat(data.matrix(data.feature_names)), data.labels);
        },
        py::arg("spec_json"), py::arg("n"), py::arg("seed"),
        "Returns (feature_names, rows, labels)");
  m.def("bimodal_spec_json",
        [] { return datapipe::SyntheticSpec::bimodal().to_json().dump(); });
  m.def("separable_spec_json", [](double separation) {
    return datapipe::SyntheticSpec::separable(separation).to_json().dump();
  });
  m.def("quantile_fit_apply",
        [](const std::vector<std::vector<double>>& train,
           const std::vector<std::vector<double>>& other) {
          const auto t = datapipe::QuantileTransform::fit(to_mat(train));
          return py::make_tuple(from_mat(t.apply(to_mat(train))),
                                from_mat(t.apply(to_mat(other))));
        },
        py::arg("train"), py::arg("other"),
        "Fits on train only; returns (train_transformed, other_transformed)");

  // ---- ids ----
  py::class_<ids::RandomForest>(m, "RandomForest")
      .def_static("train",
                  [](const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y, int n_trees, int max_depth,
                     std::uint64_t seed) {
                    ids::ForestParams params;
                    params.n_trees = n_trees;
                    params.max_depth = max_depth;
                    params.seed = seed;
                    return ids::RandomForest::train({to_mat(x), y}, params);
                  },
                  py::arg("x"), py::arg("y"), py::arg("n_trees") = 100,
                  py::arg("max_depth") = 12, py::arg("seed") = 0)
      .def("predict",
           [](const ids::RandomForest& rf, const Vec& row) { return rf.predict(row); })
      .def("predict_proba",
           [](const ids::RandomForest& rf, const Vec& row) {
             return rf.predict_proba(row);
           })
      .def("accuracy",
           [](const ids::RandomForest& rf, const std::vector<std::vector<double>>& x,
              const std::vector<int>& y) {
             return ids::accuracy(rf, {to_mat(x), y});
           })
      .def("feature_importances", &ids::RandomForest::feature_importances);

  // ---- gan ----
  m.def("train_gan",
        [](const std::string& kind, const std::vector<std::vector<double>>& train,
           const std::vector<std::vector<double>>& val, std::size_t epochs,
           std::size_t batch_size, int n_critic, std::uint64_t seed,
           std::size_t val_samples) {
          gan::TrainConfig config;
          config.kind = gan::generator_kind_from_string(kind);
          config.epochs = epochs;
          config.batch_size = batch_size;
          config.n_critic = n_critic;
          config.seed = seed;
          config.val_samples = val_samples;
          config.circuit = qgen::CircuitConfig{4, 1, 1, qgen::RotationSet::RxRz};
          if (config.kind == gan::GeneratorKind::QuantumNoisy)
            config.noise = qsim::NoiseSpec::hardware_proxy();
          const auto result = gan::train(config, {to_mat(train), to_mat(val)});
          py::dict trace;
          std::vector<double> d_loss, g_loss, val_mmd, min_std;
          for (const auto& e : result.trace.epochs) {
            d_loss.push_back(e.d_loss);
            g_loss.push_back(e.g_loss);
            val_mmd.push_back(e.val_mmd);
            min_std.push_back(e.min_feature_std);
          }
          trace["d_loss"] = d_loss;
          trace["g_loss"] = g_loss;
          trace["val_mmd"] = val_mmd;
          trace["min_feature_std"] = min_std;
          trace["initial_mmd"] = result.trace.initial_mmd;
          trace["best_epoch"] = result.trace.best_epoch;
          trace["best_mmd"] = result.trace.best_mmd;
          trace["critic_steps"] = result.trace.critic_steps;
          trace["generator_steps"] = result.trace.generator_steps;
          trace["checkpoint_json"] = result.best.to_json().dump();
          return trace;
        },
        py::arg("kind"), py::arg("train"), py::arg("val"), py::arg("epochs") = 1,
        py::arg("batch_size") = 16, py::arg("n_critic") = 5, py::arg("seed") = 0,
        py::arg("val_samples") = 64,
        "Small-scale WGAN-GP training; returns the trace plus the best "
        "checkpoint as JSON");

  m.def("generate_from_checkpoint",
        [](const std::string& checkpoint_json, std::size_t rows, std::uint64_t seed) {
          const auto checkpoint =
              gan::Checkpoint::from_json(nlohmann::json::parse(checkpoint_json));
          const auto gen = checkpoint.restore();
          Rng rng(seed);
          return from_mat(gen.generate_batch(rows, rng));
        },
        py::arg("checkpoint_json"), py::arg("rows"), py::arg("seed") = 0);

  m.def("selftest", [] { return experiment::selftest(); },
        "Runs the analytic oracle suite; returns the number of failures");

  m.attr("__version__") = "0.1.0";
}
