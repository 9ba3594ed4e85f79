#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <utility>

#include "s2s/blob.hpp"
#include "s2s/dataset.hpp"
#include "s2s/eval.hpp"
#include "s2s/maskio.hpp"
#include "s2s/model.hpp"
#include "s2s/pipeline.hpp"
#include "s2s/synthgen.hpp"
#include "s2s/train.hpp"
#include "s2s/wordvec.hpp"

namespace py = pybind11;
using namespace s2s;

namespace {

py::array_t<uint8_t> mask_to_array(const Mask& m) {
  py::array_t<uint8_t> out({m.height, m.width});
  std::memcpy(out.mutable_data(), m.data.data(), m.data.size());
  return out;
}

Mask array_to_mask(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DimensionError("mask array must be 2-D");
  Mask m(int(a.shape(0)), int(a.shape(1)));
  const uint8_t* src = a.data();
  for (size_t i = 0; i < m.data.size(); i++) m.data[i] = src[i] ? 1 : 0;
  return m;
}

py::array_t<float> blob_to_array(const S2SBlob& b) {
  py::array_t<float> out({b.height, b.width, b.channels});
  std::memcpy(out.mutable_data(), b.data.data(), b.data.size() * sizeof(float));
  return out;
}

S2SBlob array_to_blob(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw DimensionError("blob array must be H x W x C");
  S2SBlob b(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)));
  std::memcpy(b.data.data(), a.data(), b.data.size() * sizeof(float));
  return b;
}

py::array_t<float> vec_to_array(const std::vector<float>& v) {
  py::array_t<float> out(py::ssize_t(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(float));
  return out;
}

}  // namespace

PYBIND11_MODULE(_sem2space, m) {
  m.doc() = "semantics-to-space zero-shot verb-object inference";

  py::register_exception<Error>(m, "Error");

  // --- word vectors -----------------------------------------------------------
  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def(py::init<>())
      .def_readonly("dim", &EmbeddingTable::dim)
      .def("labels", &EmbeddingTable::labels)
      .def("contains", &EmbeddingTable::contains, py::arg("label"))
      .def("__len__", [](const EmbeddingTable& t) { return t.entries.size(); })
      .def(
          "vector",
          [](const EmbeddingTable& t, const std::string& label) {
            const std::vector<float>* v = t.find(label);
            if (!v) throw py::key_error(label);
            return vec_to_array(*v);
          },
          py::arg("label"))
      .def(
          "embed",
          [](const EmbeddingTable& t, const std::string& label) {
            return vec_to_array(embed_label(t, label));
          },
          py::arg("label"), "Phrase lookup: underscore join first, then token mean.");
  m.def(
      "load_embeddings",
      [](const fs::path& path, std::optional<int> expected_dim) {
        return load_embeddings(path, expected_dim);
      },
      py::arg("path"), py::arg("expected_dim") = std::nullopt);
  m.def("save_embeddings", &save_embeddings, py::arg("table"), py::arg("path"));
  m.def("make_orthonormal_table", &make_orthonormal_table, py::arg("labels"), py::arg("dim"),
        py::arg("seed"));

  // --- scenes -----------------------------------------------------------------
  py::class_<Mask>(m, "Mask")
      .def(py::init(&array_to_mask), py::arg("array"))
      .def_readonly("height", &Mask::height)
      .def_readonly("width", &Mask::width)
      .def("count", &Mask::count)
      .def("array", &mask_to_array);
  py::class_<InstanceMask>(m, "InstanceMask")
      .def(py::init([](const std::string& label, const Mask& mask) {
             return InstanceMask{label, mask};
           }),
           py::arg("label"), py::arg("mask"))
      .def_readwrite("label", &InstanceMask::label)
      .def_readwrite("mask", &InstanceMask::mask);
  py::class_<SceneAnnotation>(m, "SceneAnnotation")
      .def(py::init<>())
      .def_readwrite("image_id", &SceneAnnotation::image_id)
      .def_readwrite("width", &SceneAnnotation::width)
      .def_readwrite("height", &SceneAnnotation::height)
      .def_readwrite("instances", &SceneAnnotation::instances)
      .def_readwrite("verb", &SceneAnnotation::verb)
      .def_readwrite("object", &SceneAnnotation::object)
      .def_readonly("rgb_path", &SceneAnnotation::rgb_path);
  m.def("read_scene", &read_scene, py::arg("root"), py::arg("image_id"));
  m.def("write_scene", &write_scene, py::arg("root"), py::arg("scene"));

  // --- embedding field --------------------------------------------------------
  m.def(
      "build_s2s",
      [](const SceneAnnotation& scene, const EmbeddingTable& table, int out_size) {
        return blob_to_array(build_s2s(scene, table, out_size));
      },
      py::arg("scene"), py::arg("table"), py::arg("out_size"),
      "Stamp each instance's word vector into its resized mask and sum (H x W x dim).");
  m.def(
      "resize_mask_nearest",
      [](const Mask& mask, int out_height, int out_width) {
        return resize_mask_nearest(mask, out_height, out_width);
      },
      py::arg("mask"), py::arg("out_height"), py::arg("out_width"));

  // --- synthetic dataset ------------------------------------------------------
  m.def("relation_kinds", [] { return relation_kinds(); });
  m.def("shape_families", [] { return shape_families(); });
  m.def("size_classes", [] { return size_classes(); });
  py::class_<VerbSpec>(m, "VerbSpec")
      .def(py::init([](const std::string& name, const std::string& relation) {
             return VerbSpec{name, relation};
           }),
           py::arg("name"), py::arg("relation"))
      .def_readwrite("name", &VerbSpec::name)
      .def_readwrite("relation", &VerbSpec::relation);
  py::class_<ObjectSpec>(m, "ObjectSpec")
      .def(py::init([](const std::string& name, const std::string& family,
                       const std::string& size_class) {
             return ObjectSpec{name, family, size_class};
           }),
           py::arg("name"), py::arg("family"), py::arg("size_class"))
      .def_readwrite("name", &ObjectSpec::name)
      .def_readwrite("family", &ObjectSpec::family)
      .def_readwrite("size_class", &ObjectSpec::size_class);
  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("verbs", &SynthConfig::verbs)
      .def_readwrite("objects", &SynthConfig::objects)
      .def_readwrite("objects_per_verb", &SynthConfig::objects_per_verb)
      .def_readwrite("image_size", &SynthConfig::image_size)
      .def_readwrite("samples_per_pair", &SynthConfig::samples_per_pair)
      .def_readwrite("lv", &SynthConfig::lv)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("verb_noise", &SynthConfig::verb_noise)
      .def_readwrite("object_noise", &SynthConfig::object_noise)
      .def("validate", &SynthConfig::validate)
      .def("verb_names", &SynthConfig::verb_names)
      .def("all_labels", &SynthConfig::all_labels);
  m.def("vt60_default_config", &vt60_default_config);
  py::class_<VOSplit>(m, "VOSplit")
      .def(py::init<>())
      .def_readwrite("train_pairs", &VOSplit::train_pairs)
      .def_readwrite("test_pairs", &VOSplit::test_pairs)
      .def("in_train", &VOSplit::in_train, py::arg("verb"), py::arg("object"))
      .def("in_test", &VOSplit::in_test, py::arg("verb"), py::arg("object"));
  m.def("make_split", &make_split, py::arg("verbs"), py::arg("objects_per_verb"), py::arg("seed"));
  m.def("generate_dataset", &generate_dataset, py::arg("config"), py::arg("split"),
        py::arg("out_root"), py::call_guard<py::gil_scoped_release>());
  m.def("make_synthetic_wordvecs", &make_synthetic_wordvecs, py::arg("config"));
  m.def("make_control_wordvecs", &make_control_wordvecs, py::arg("config"));

  // --- manifest ---------------------------------------------------------------
  py::class_<ManifestEntry>(m, "ManifestEntry")
      .def(py::init<>())
      .def_readwrite("image_id", &ManifestEntry::image_id)
      .def_readwrite("verb", &ManifestEntry::verb)
      .def_readwrite("object", &ManifestEntry::object)
      .def_readwrite("split", &ManifestEntry::split)
      .def("__repr__", [](const ManifestEntry& e) {
        return "ManifestEntry(" + e.image_id + ", " + e.verb + " " + e.object + ", " + e.split +
               ")";
      });
  m.def("load_manifest", &load_manifest, py::arg("root"));
  m.def("save_manifest", &save_manifest, py::arg("root"), py::arg("entries"));
  m.def("manifest_side", &manifest_side, py::arg("entries"), py::arg("split"));
  m.def("distinct_pairs", &distinct_pairs, py::arg("entries"));

  // --- model ------------------------------------------------------------------
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("input_mode", &ModelConfig::input_mode)
      .def_readwrite("backbone", &ModelConfig::backbone)
      .def_readwrite("combiner", &ModelConfig::combiner)
      .def_readwrite("separate_qnets", &ModelConfig::separate_qnets)
      .def_readwrite("lv", &ModelConfig::lv)
      .def_readwrite("in_channels", &ModelConfig::in_channels)
      .def_readwrite("d_v", &ModelConfig::d_v)
      .def_readwrite("q_hidden", &ModelConfig::q_hidden)
      .def_readwrite("c_hidden", &ModelConfig::c_hidden)
      .def_readwrite("input_size", &ModelConfig::input_size)
      .def("validate_and_resolve", &ModelConfig::validate_and_resolve)
      .def("query_dim", &ModelConfig::query_dim);
  py::class_<TwoStreamModel>(m, "TwoStreamModel")
      .def(py::init<const ModelConfig&, uint64_t>(), py::arg("config"), py::arg("seed"))
      .def("config", &TwoStreamModel::config)
      .def("param_count", [](TwoStreamModel& mdl) { return mdl.params().size(); });
  m.def(
      "load_checkpoint",
      [](const fs::path& path) { return load_checkpoint<float>(path); }, py::arg("path"));
  m.def(
      "checkpoint_iteration",
      [](const fs::path& path) {
        int64_t it = 0;
        load_checkpoint<float>(path, &it);
        return it;
      },
      py::arg("path"));
  m.def(
      "save_checkpoint",
      [](const fs::path& path, TwoStreamModel& mdl, int64_t iteration) {
        save_checkpoint(path, mdl, iteration);
      },
      py::arg("path"), py::arg("model"), py::arg("iteration"));
  m.def(
      "score",
      [](TwoStreamModel& mdl,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& blob,
         const std::string& verb, const std::string& object, const EmbeddingTable& table) {
        return score(mdl, array_to_blob(blob), verb, object, table);
      },
      py::arg("model"), py::arg("blob"), py::arg("verb"), py::arg("object"), py::arg("table"),
      "Closeness in (0, 1) between an H x W x C embedding field and a (verb, object) query.");

  // --- training / evaluation --------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("anneal_factor", &TrainConfig::anneal_factor)
      .def_readwrite("anneal_every", &TrainConfig::anneal_every)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("episode_classes", &TrainConfig::episode_classes)
      .def_readwrite("negatives_per_positive", &TrainConfig::negatives_per_positive)
      .def_readwrite("log_every", &TrainConfig::log_every)
      .def("validate", &TrainConfig::validate);
  py::class_<PerImageRecord>(m, "PerImageRecord")
      .def_readonly("image_id", &PerImageRecord::image_id)
      .def_readonly("true_verb", &PerImageRecord::true_verb)
      .def_readonly("true_object", &PerImageRecord::true_object)
      .def_readonly("pred_verb", &PerImageRecord::pred_verb)
      .def_readonly("pred_object", &PerImageRecord::pred_object)
      .def_readonly("scores", &PerImageRecord::scores);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("protocol", &EvalReport::protocol)
      .def_readonly("candidate_verbs", &EvalReport::candidate_verbs)
      .def_readonly("candidate_pairs", &EvalReport::candidate_pairs)
      .def_readonly("per_class_hits", &EvalReport::per_class_hits)
      .def_readonly("per_class_totals", &EvalReport::per_class_totals)
      .def_readonly("total", &EvalReport::total)
      .def_readonly("hits", &EvalReport::hits)
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("records", &EvalReport::records);

  // --- pipeline entry points ----------------------------------------------------
  py::class_<GenDataOptions>(m, "GenDataOptions")
      .def(py::init<>())
      .def_readwrite("synth", &GenDataOptions::synth)
      .def_readwrite("out", &GenDataOptions::out);
  py::class_<GenDataResult>(m, "GenDataResult")
      .def_readonly("manifest", &GenDataResult::manifest)
      .def_readonly("split", &GenDataResult::split);
  m.def("run_gen_data", &run_gen_data, py::arg("options"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init<>())
      .def_readwrite("data_root", &TrainOptions::data_root)
      .def_readwrite("out", &TrainOptions::out)
      .def_readwrite("resume", &TrainOptions::resume)
      .def_readwrite("model", &TrainOptions::model)
      .def_readwrite("train", &TrainOptions::train)
      .def_readwrite("model_seed", &TrainOptions::model_seed)
      .def_readwrite("lv_from_table", &TrainOptions::lv_from_table);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("final_iteration", &TrainResult::final_iteration)
      .def_readonly("final_loss", &TrainResult::final_loss);
  m.def("run_train", &run_train, py::arg("options"), py::call_guard<py::gil_scoped_release>());

  py::class_<EvalOptions>(m, "EvalOptions")
      .def(py::init<>())
      .def_readwrite("data_root", &EvalOptions::data_root)
      .def_readwrite("checkpoint", &EvalOptions::checkpoint)
      .def_readwrite("out", &EvalOptions::out)
      .def_readwrite("protocol", &EvalOptions::protocol);
  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("verb_transfer", &EvalResult::verb_transfer)
      .def_readonly("vo_confusion", &EvalResult::vo_confusion);
  m.def("run_eval", &run_eval, py::arg("options"), py::call_guard<py::gil_scoped_release>());

  py::class_<AblateOptions>(m, "AblateOptions")
      .def(py::init<>())
      .def_readwrite("data_root", &AblateOptions::data_root)
      .def_readwrite("out", &AblateOptions::out)
      .def_readwrite("model", &AblateOptions::model)
      .def_readwrite("train", &AblateOptions::train)
      .def_readwrite("model_seed", &AblateOptions::model_seed);
  py::class_<AblateCell>(m, "AblateCell")
      .def_readonly("mode", &AblateCell::mode)
      .def_readonly("combiner", &AblateCell::combiner)
      .def_readonly("separate_qnets", &AblateCell::separate_qnets)
      .def_readonly("verb_transfer_acc", &AblateCell::verb_transfer_acc)
      .def_readonly("vo_confusion_acc", &AblateCell::vo_confusion_acc)
      .def_readonly("reused", &AblateCell::reused)
      .def_readonly("cell_dir", &AblateCell::cell_dir);
  py::class_<AblateResult>(m, "AblateResult")
      .def_readonly("cells", &AblateResult::cells)
      .def_readonly("trained", &AblateResult::trained)
      .def_readonly("reused", &AblateResult::reused);
  m.def("run_ablate", &run_ablate, py::arg("options"), py::call_guard<py::gil_scoped_release>());

  py::class_<DumpFeaturesOptions>(m, "DumpFeaturesOptions")
      .def(py::init<>())
      .def_readwrite("data_root", &DumpFeaturesOptions::data_root)
      .def_readwrite("checkpoint", &DumpFeaturesOptions::checkpoint)
      .def_readwrite("out_csv", &DumpFeaturesOptions::out_csv)
      .def_readwrite("which", &DumpFeaturesOptions::which)
      .def_readwrite("split", &DumpFeaturesOptions::split)
      .def_readwrite("seed", &DumpFeaturesOptions::seed);
  m.def("run_dump_features", &run_dump_features, py::arg("options"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<PlotOptions>(m, "PlotOptions")
      .def(py::init<>())
      .def_readwrite("features_csv", &PlotOptions::features_csv)
      .def_readwrite("out_csv", &PlotOptions::out_csv)
      .def_readwrite("out_png", &PlotOptions::out_png)
      .def_readwrite("seed", &PlotOptions::seed);
  m.def("run_plot", &run_plot, py::arg("options"), py::call_guard<py::gil_scoped_release>());
}
