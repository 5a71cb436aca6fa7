// Python surface of the clar core: signal ops, diffusion sampling, adaptive
// weighting, the contrastive encoder, and the synthetic corpus. Stochastic
// entry points take an explicit integer seed instead of an Rng object.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "clar/checkpoint.hpp"
#include "clar/classifier.hpp"
#include "clar/contrastive.hpp"
#include "clar/data.hpp"
#include "clar/diffusion.hpp"
#include "clar/nn.hpp"
#include "clar/pipeline.hpp"
#include "clar/rng.hpp"
#include "clar/signal.hpp"
#include "clar/weighting.hpp"

namespace py = pybind11;
using namespace clar;

namespace {

using Rows = std::vector<std::vector<double>>;

Tensor rows_to_tensor(const Rows& rows) {
  if (rows.empty()) throw std::invalid_argument("need at least one row");
  const std::size_t cols = rows.front().size();
  Tensor t({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::invalid_argument("ragged rows");
    for (std::size_t j = 0; j < cols; ++j) t.at(i, j) = rows[i][j];
  }
  return t;
}

Rows tensor_to_rows(const Tensor& t) {
  Rows rows(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) rows[i][j] = t.at(i, j);
  return rows;
}

}  // namespace

PYBIND11_MODULE(_clar, m) {
  m.doc() = "Frequency-guided diffusion augmentation and weighted contrastive pretraining.";

  // ------------------------------------------------------------- signal ops
  m.def(
      "haar_analysis",
      [](const Sequence& x) {
        const WaveletBands b = haar_analysis(x);
        return py::make_tuple(b.high, b.low);
      },
      py::arg("x"), "Undecimated periodic Haar split; returns (high, low) with high+low == x.");
  m.def("dtw_distance", &dtw_distance, py::arg("a"), py::arg("b"));
  m.def(
      "dtw_path", [](const Sequence& a, const Sequence& b) { return dtw_path(a, b).pairs; },
      py::arg("a"), py::arg("b"), "Optimal monotone alignment as a list of (i, j) pairs.");
  m.def("warp_aggregate", &warp_aggregate, py::arg("a"), py::arg("b"),
        "Average b into a along the warping path, resampled to len(a).");
  m.def("linear_resample", &linear_resample, py::arg("x"), py::arg("target_len"));
  m.def("crop_resize", &crop_resize, py::arg("x"), py::arg("crop_fraction"),
        py::arg("offset_fraction"), py::arg("target_len"));
  m.def("sliding_windows", &sliding_windows, py::arg("x"), py::arg("window_len"));

  // -------------------------------------------------------------- diffusion
  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_readonly("steps", &NoiseSchedule::steps)
      .def_readonly("betas", &NoiseSchedule::betas)
      .def_readonly("alphas", &NoiseSchedule::alphas)
      .def_readonly("alpha_bars", &NoiseSchedule::alpha_bars)
      .def("beta", &NoiseSchedule::beta, py::arg("t"))
      .def("alpha", &NoiseSchedule::alpha, py::arg("t"))
      .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"));
  m.def("make_schedule", &make_schedule, py::arg("steps"), py::arg("beta_start"),
        py::arg("beta_end"));
  m.def("default_schedule", &default_schedule, py::arg("steps"));
  m.def("forward_sample", &forward_sample, py::arg("z0"), py::arg("t"), py::arg("eps"),
        py::arg("sched"));

  py::class_<GuidanceConfig>(m, "GuidanceConfig")
      .def(py::init<>())
      .def_static("defaults", &GuidanceConfig::defaults, py::arg("steps"))
      .def_readwrite("lambda_h", &GuidanceConfig::lambda_h)
      .def_readwrite("lambda_l", &GuidanceConfig::lambda_l)
      .def_readwrite("n_h", &GuidanceConfig::n_h)
      .def_readwrite("n_l", &GuidanceConfig::n_l);
  m.def("guidance_weights", &guidance_weights, py::arg("t"), py::arg("cfg"), py::arg("steps"),
        "Returns (omega_h, omega_l) at reverse step t.");

  py::class_<EpsilonNet>(m, "EpsilonNet")
      .def(py::init([](std::size_t seq_len, std::uint64_t seed) {
             Rng rng(seed);
             return EpsilonNet(seq_len, rng);
           }),
           py::arg("seq_len"), py::arg("seed"))
      .def_property_readonly("seq_len", &EpsilonNet::seq_len)
      .def("predict", &EpsilonNet::predict, py::arg("z"), py::arg("step"))
      .def(
          "save",
          [](const EpsilonNet& net, const std::string& path) {
            save_parameters(path, net.parameters());
          },
          py::arg("path"))
      .def(
          "load",
          [](EpsilonNet& net, const std::string& path) { load_parameters(path, net.parameters()); },
          py::arg("path"));
  m.def(
      "train_ddpm",
      [](EpsilonNet& net, const std::vector<Sequence>& data, const NoiseSchedule& sched, int steps,
         int batch, double lr, std::uint64_t seed) {
        DdpmTrainOptions opts;
        opts.steps = steps;
        opts.batch = batch;
        opts.lr = lr;
        std::vector<std::pair<int, double>> out;
        for (const DdpmTrainRow& row : train_ddpm(net, data, sched, opts, Rng(seed))) {
          out.emplace_back(row.step, row.loss);
        }
        return out;
      },
      py::arg("net"), py::arg("data"), py::arg("sched"), py::arg("steps"), py::arg("batch"),
      py::arg("lr"), py::arg("seed"), "Adam training loop; returns the (step, loss) history.");
  m.def(
      "generate_unconditional",
      [](const Sequence& src, const EpsilonNet& net, const NoiseSchedule& sched,
         std::uint64_t seed) { return generate_unconditional(src, net, sched, Rng(seed)); },
      py::arg("src"), py::arg("net"), py::arg("sched"), py::arg("seed"));
  m.def(
      "conditioned_generate",
      [](const Sequence& src, const Sequence& ref, const EpsilonNet& net,
         const NoiseSchedule& sched, const GuidanceConfig& cfg, std::uint64_t seed) {
        return conditioned_generate(src, ref, net, sched, cfg, Rng(seed));
      },
      py::arg("src"), py::arg("ref"), py::arg("net"), py::arg("sched"), py::arg("cfg"),
      py::arg("seed"), "Reverse chain nudged toward the reference's frequency bands.");

  // -------------------------------------------------------------- weighting
  py::class_<ResponseMap>(m, "ResponseMap")
      .def_readonly("scores", &ResponseMap::scores)
      .def_readonly("sigma_s", &ResponseMap::sigma_s);
  m.def("derive_window_len", &derive_window_len, py::arg("seq_len"));
  m.def(
      "select_templates",
      [](const std::vector<Sequence>& pool, int k, int h, std::uint64_t seed) {
        Rng rng(seed);
        return select_templates(pool, k, h, rng);
      },
      py::arg("static_pool"), py::arg("k"), py::arg("h"), py::arg("seed"));
  m.def("response_map", &response_map, py::arg("x"), py::arg("templates"), py::arg("h"));
  m.def("sample_weight", &sample_weight, py::arg("map"), py::arg("alpha"));
  m.def("pair_weight", &pair_weight, py::arg("w_i"), py::arg("w_j"));
  m.def(
      "crop_map",
      [](const ResponseMap& parent, int h, std::size_t start, std::size_t len) {
        return crop_map(parent, h, CropWindow{start, len});
      },
      py::arg("parent"), py::arg("h"), py::arg("start"), py::arg("len"),
      "Restrict a parent response map to the windows inside [start, start+len).");

  // ------------------------------------------------------------ contrastive
  py::class_<ContrastiveModel>(m, "ContrastiveModel")
      .def(py::init([](std::size_t seq_len, std::uint64_t seed) {
             Rng rng(seed);
             return ContrastiveModel(seq_len, rng);
           }),
           py::arg("seq_len"), py::arg("seed"))
      .def_property_readonly("seq_len", &ContrastiveModel::seq_len)
      .def(
          "represent",
          [](ContrastiveModel& model, const std::vector<Sequence>& xs) {
            return tensor_to_rows(model.represent_batch(xs));
          },
          py::arg("batch"), "Rows of encoder representations.")
      .def(
          "embed",
          [](ContrastiveModel& model, const std::vector<Sequence>& xs) {
            return tensor_to_rows(model.embed_batch(xs));
          },
          py::arg("batch"), "Rows of unit-norm projection embeddings.")
      .def(
          "save",
          [](const ContrastiveModel& model, const std::string& path) {
            save_parameters(path, model.parameters());
          },
          py::arg("path"))
      .def(
          "load",
          [](ContrastiveModel& model, const std::string& path) {
            load_parameters(path, model.parameters());
          },
          py::arg("path"));
  m.def(
      "weighted_ntxent",
      [](const Rows& embeddings, const std::vector<double>& pair_weights, double tau) {
        return weighted_ntxent(rows_to_tensor(embeddings), pair_weights, tau);
      },
      py::arg("embeddings"), py::arg("pair_weights"), py::arg("tau"),
      "Weighted NT-Xent over rows where 2k and 2k+1 form pair k.");

  // ------------------------------------------------------------------- data
  py::class_<SampleRecord>(m, "SampleRecord")
      .def_readonly("id", &SampleRecord::id)
      .def_readonly("cls", &SampleRecord::cls)
      .def_readonly("subject", &SampleRecord::subject)
      .def_readonly("split", &SampleRecord::split)
      .def_readonly("labeled", &SampleRecord::labeled)
      .def_readonly("x", &SampleRecord::x);
  py::class_<Corpus>(m, "Corpus")
      .def_readonly("samples", &Corpus::samples)
      .def_readonly("seq_len", &Corpus::seq_len)
      .def("train_indices", &Corpus::train_indices)
      .def("labeled_train_indices", &Corpus::labeled_train_indices)
      .def("test_indices", &Corpus::test_indices)
      .def("static_pool", &Corpus::static_pool)
      .def("num_classes", &Corpus::num_classes);
  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("num_classes", &SynthConfig::num_classes)
      .def_readwrite("per_class", &SynthConfig::per_class)
      .def_readwrite("subjects", &SynthConfig::subjects)
      .def_readwrite("seq_len", &SynthConfig::seq_len)
      .def_readwrite("noise_std", &SynthConfig::noise_std)
      .def_readwrite("train_fraction", &SynthConfig::train_fraction)
      .def_readwrite("labeled_fraction", &SynthConfig::labeled_fraction)
      .def_readwrite("static_pool_size", &SynthConfig::static_pool_size);
  m.def(
      "synth_generate",
      [](const SynthConfig& cfg, std::uint64_t seed) { return synth_generate(cfg, Rng(seed)); },
      py::arg("config"), py::arg("seed"));
  m.def("pair_candidates", &pair_candidates, py::arg("corpus"), py::arg("k"),
        "Reference candidate lists per train sample.");
  m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("path"));
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def(
      "augment_once",
      [](const Corpus& corpus, const PairTable& pairs, std::size_t source_index,
         const EpsilonNet& net, const NoiseSchedule& sched, const GuidanceConfig& cfg,
         std::uint64_t seed) {
        int ref = -1;
        Sequence x = augment_once(corpus, pairs, source_index, net, sched, cfg, Rng(seed), &ref);
        return py::make_tuple(std::move(x), ref);
      },
      py::arg("corpus"), py::arg("pairs"), py::arg("source_index"), py::arg("net"),
      py::arg("sched"), py::arg("cfg"), py::arg("seed"),
      "One conditioned generation; returns (sequence, reference_sample_id).");
  m.def("mean_cross_class_dtw", &mean_cross_class_dtw, py::arg("corpus"));

  // -------------------------------------------------------------- classifier
  py::class_<LinearProbe>(m, "LinearProbe")
      .def_property_readonly("in_dim", &LinearProbe::in_dim)
      .def_property_readonly("num_classes", &LinearProbe::num_classes);
  m.def(
      "fit_probe",
      [](const Rows& embeddings, const std::vector<int>& labels, int num_classes, int epochs,
         double lr) {
        ProbeOptions opts;
        opts.epochs = epochs;
        opts.lr = lr;
        return fit_probe(rows_to_tensor(embeddings), labels, num_classes, opts);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("num_classes"), py::arg("epochs") = 300,
      py::arg("lr") = 0.05);
  m.def(
      "probe_predict",
      [](const LinearProbe& probe, const Rows& embeddings) {
        return probe_predict(probe, rows_to_tensor(embeddings));
      },
      py::arg("probe"), py::arg("embeddings"));
  py::class_<Metrics>(m, "Metrics")
      .def_readonly("accuracy", &Metrics::accuracy)
      .def_readonly("macro_f1", &Metrics::macro_f1)
      .def_readonly("confusion", &Metrics::confusion);
  m.def("compute_metrics", &compute_metrics, py::arg("predicted"), py::arg("truth"),
        py::arg("num_classes"));
  m.def("metrics_json", &metrics_json, py::arg("metrics"));
}
