#include <cstring>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dep/analysis.hpp"
#include "dep/embedding.hpp"
#include "dep/error.hpp"
#include "dep/io.hpp"
#include "dep/metrics.hpp"
#include "dep/vocab.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

dep::EmbeddingMatrix to_matrix(const FloatArray& array) {
    if (array.ndim() != 2) throw dep::Error(dep::ErrorCode::ShapeMismatch, "expected a 2-D float32 array");
    const auto rows = static_cast<std::uint64_t>(array.shape(0));
    const auto dim = static_cast<std::uint64_t>(array.shape(1));
    std::vector<float> data(array.data(), array.data() + rows * dim);
    return dep::EmbeddingMatrix(rows, dim, std::move(data));
}

FloatArray to_array(const dep::EmbeddingMatrix& matrix) {
    FloatArray out({static_cast<py::ssize_t>(matrix.rows()), static_cast<py::ssize_t>(matrix.dim())});
    if (!matrix.data().empty()) std::memcpy(out.mutable_data(), matrix.data().data(), matrix.data().size_bytes());
    return out;
}

dep::GrowthCurve to_curve(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& points, std::uint64_t vocab) {
    dep::GrowthCurve curve;
    curve.vocab_size = vocab;
    for (const auto& [n, v] : points) curve.points.push_back({n, v});
    return curve;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> from_curve(const dep::GrowthCurve& curve) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (const auto& p : curve.points) out.emplace_back(p.tokens_seen, p.unique_tokens);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dynamic embedding pruning core (C++)";

    // Raised for every dep::Error; `code` carries the stable error name.
    static py::handle dep_error = py::exception<dep::Error>(m, "DepError", PyExc_ValueError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const dep::Error& e) {
            const std::string code(dep::error_code_name(e.code()));
            py::object inst = dep_error(code + ": " + e.what());
            inst.attr("code") = code;
            PyErr_SetObject(dep_error.ptr(), inst.ptr());
        }
    });

    py::enum_<dep::Ordering>(m, "Ordering")
        .value("ASCENDING_ID", dep::Ordering::AscendingId)
        .value("FREQUENCY_DESCENDING", dep::Ordering::FrequencyDescending);

    py::class_<dep::TokenizedDataset>(m, "TokenizedDataset")
        .def(py::init<const std::vector<std::vector<dep::TokenId>>&, std::uint64_t>(), py::arg("sequences"),
             py::arg("vocab_size"))
        .def_property_readonly("vocab_size", &dep::TokenizedDataset::vocab_size)
        .def_property_readonly("num_sequences", &dep::TokenizedDataset::num_sequences)
        .def_property_readonly("total_tokens", &dep::TokenizedDataset::total_tokens)
        .def("to_list", &dep::TokenizedDataset::to_nested)
        .def("__len__", &dep::TokenizedDataset::num_sequences)
        .def("__eq__", [](const dep::TokenizedDataset& a, const dep::TokenizedDataset& b) { return a == b; });

    py::class_<dep::FrequencyTable>(m, "FrequencyTable")
        .def(py::init<std::vector<std::uint64_t>>(), py::arg("counts"))
        .def_property_readonly("vocab_size", &dep::FrequencyTable::vocab_size)
        .def_property_readonly("total_tokens", &dep::FrequencyTable::total_tokens)
        .def_property_readonly("used_count", &dep::FrequencyTable::used_count)
        .def_property_readonly("counts", [](const dep::FrequencyTable& t) {
            return std::vector<std::uint64_t>(t.counts().begin(), t.counts().end());
        })
        .def("used_tokens", &dep::FrequencyTable::used_tokens)
        .def("__eq__", [](const dep::FrequencyTable& a, const dep::FrequencyTable& b) { return a == b; });

    py::class_<dep::RemapTable>(m, "RemapTable")
        .def_static("from_inverse", &dep::RemapTable::from_inverse, py::arg("original_vocab_size"), py::arg("inverse"),
                    py::arg("ordering") = dep::Ordering::AscendingId, py::arg("keep_tokens") = std::vector<dep::TokenId>{})
        .def_property_readonly("original_vocab_size", &dep::RemapTable::original_vocab_size)
        .def_property_readonly("size", &dep::RemapTable::size)
        .def_property_readonly("ordering", &dep::RemapTable::ordering)
        .def_property_readonly("keep_tokens", [](const dep::RemapTable& r) {
            return std::vector<dep::TokenId>(r.keep_tokens().begin(), r.keep_tokens().end());
        })
        .def_property_readonly("inverse", [](const dep::RemapTable& r) {
            return std::vector<dep::TokenId>(r.inverse().begin(), r.inverse().end());
        })
        .def("forward", &dep::RemapTable::forward, py::arg("original"))
        .def("to_json", [](const dep::RemapTable& r) { return dep::io::dump(dep::io::remap_to_json(r)); })
        .def_static("from_json", [](const std::string& text) {
            return dep::io::remap_from_json(dep::io::parse_json(text));
        })
        .def("__len__", &dep::RemapTable::size)
        .def("__eq__", [](const dep::RemapTable& a, const dep::RemapTable& b) { return a == b; });

    m.def("scan_dataset", py::overload_cast<const dep::TokenizedDataset&, std::size_t>(&dep::scan_dataset),
          py::arg("dataset"), py::arg("partitions") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("merge_frequency_tables",
          [](const std::vector<dep::FrequencyTable>& parts) { return dep::merge_frequency_tables(parts); },
          py::arg("parts"));
    m.def("build_remap",
          [](const dep::FrequencyTable& f, dep::Ordering o, const std::vector<dep::TokenId>& keep) {
              return dep::build_remap(f, o, keep);
          },
          py::arg("freqs"), py::arg("ordering") = dep::Ordering::AscendingId,
          py::arg("keep_tokens") = std::vector<dep::TokenId>{});
    m.def("apply_remap", &dep::apply_remap, py::arg("dataset"), py::arg("remap"));
    m.def("invert_remap", &dep::invert_remap, py::arg("dataset"), py::arg("remap"));

    m.def("prune_embeddings",
          [](const FloatArray& matrix, const dep::RemapTable& remap) {
              return to_array(dep::prune_embeddings(to_matrix(matrix), remap));
          },
          py::arg("matrix"), py::arg("remap"));
    m.def("restore_embeddings",
          [](const FloatArray& original, const FloatArray& learned, const dep::RemapTable& remap) {
              return to_array(dep::restore_embeddings(to_matrix(original), to_matrix(learned), remap));
          },
          py::arg("original"), py::arg("learned"), py::arg("remap"));
    m.def("validate_matrix", [](const FloatArray& matrix) {
        const auto s = dep::validate_matrix(to_matrix(matrix));
        py::dict out;
        out["rows"] = s.rows;
        out["dim"] = s.dim;
        out["non_finite"] = s.non_finite;
        out["min"] = s.min ? py::cast(*s.min) : py::none();
        out["max"] = s.max ? py::cast(*s.max) : py::none();
        return out;
    });

    py::class_<dep::HeapsFit>(m, "HeapsFit")
        .def_readonly("k", &dep::HeapsFit::k)
        .def_readonly("beta", &dep::HeapsFit::beta)
        .def_readonly("rmse_log", &dep::HeapsFit::rmse_log)
        .def_readonly("points_used", &dep::HeapsFit::points_used)
        .def("predict", &dep::HeapsFit::predict);

    m.def("growth_curve",
          [](const dep::TokenizedDataset& d, const std::string& policy) {
              if (policy != "pow2" && policy != "all") {
                  throw dep::Error(dep::ErrorCode::InvalidArgument, "policy must be 'pow2' or 'all'");
              }
              return from_curve(dep::growth_curve(
                  d, policy == "all" ? dep::CheckpointPolicy::EveryToken : dep::CheckpointPolicy::PowersOfTwo));
          },
          py::arg("dataset"), py::arg("policy") = "pow2");
    m.def("growth_curve_at",
          [](const dep::TokenizedDataset& d, const std::vector<std::uint64_t>& checkpoints) {
              return from_curve(dep::growth_curve(d, checkpoints));
          },
          py::arg("dataset"), py::arg("checkpoints"));
    m.def("fit_heaps",
          [](const std::vector<std::pair<std::uint64_t, std::uint64_t>>& points) {
              return dep::fit_heaps(to_curve(points, 0));
          },
          py::arg("points"));
    m.def("coverage_ratio", &dep::coverage_ratio, py::arg("freqs"));
    m.def("find_unused_tokens", &dep::find_unused_tokens, py::arg("freqs"));

    py::class_<dep::ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("name", &dep::ModelConfig::name)
        .def_readwrite("vocab_size", &dep::ModelConfig::vocab_size)
        .def_readwrite("d_model", &dep::ModelConfig::d_model)
        .def_readwrite("num_layers", &dep::ModelConfig::num_layers)
        .def_readwrite("num_heads", &dep::ModelConfig::num_heads)
        .def_readwrite("ffn_dim", &dep::ModelConfig::ffn_dim)
        .def_readwrite("max_positions", &dep::ModelConfig::max_positions)
        .def_readwrite("type_vocab", &dep::ModelConfig::type_vocab)
        .def_readwrite("has_pooler", &dep::ModelConfig::has_pooler)
        .def("validate", &dep::ModelConfig::validate);

    py::class_<dep::ParamCount>(m, "ParamCount")
        .def_readonly("n_total", &dep::ParamCount::n_total)
        .def_readonly("n_emb", &dep::ParamCount::n_emb)
        .def_readonly("poep", &dep::ParamCount::poep);

    m.def("model_preset", &dep::model_preset, py::arg("name"));
    m.def("model_preset_names", &dep::model_preset_names);
    m.def("count_params", &dep::count_params, py::arg("config"));
    m.def("pr_emb", &dep::pr_emb, py::arg("original_vocab"), py::arg("reduced_vocab"));
    m.def("pr_all", &dep::pr_all, py::arg("pr_emb"), py::arg("params"));
    m.def("report_json",
          [](const dep::RemapTable& remap, const dep::ModelConfig& config, std::optional<std::string> timestamp) {
              dep::ReportInputs inputs;
              inputs.timestamp = std::move(timestamp);
              return dep::io::dump(dep::io::report_to_json(dep::build_report(remap, config, inputs)));
          },
          py::arg("remap"), py::arg("config"), py::arg("timestamp") = py::none());

    m.def("encode_dataset", [](const dep::TokenizedDataset& d) { return py::bytes(dep::io::encode_dataset_binary(d)); });
    m.def("decode_dataset", [](const py::bytes& data) { return dep::io::decode_dataset_binary(std::string(data)); });
    m.def("load_dataset", &dep::io::load_dataset, py::arg("path"), py::arg("vocab_size") = py::none());
    m.def("load_embeddings", [](const std::filesystem::path& p) { return to_array(dep::io::load_embeddings(p)); });
    m.def("save_embeddings",
          [](const std::filesystem::path& p, const FloatArray& matrix, bool force) {
              dep::io::save_embeddings(p, to_matrix(matrix), force);
          },
          py::arg("path"), py::arg("matrix"), py::arg("force") = false);
}
