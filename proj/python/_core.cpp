#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reid/reid.hpp"

namespace py = pybind11;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

reid::FeatureMatrix to_features(const F32& a) {
  if (a.ndim() != 2) throw reid::ShapeError("expected a 2-D feature array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  return reid::FeatureMatrix(n, d, std::vector<float>(a.data(), a.data() + n * d));
}

F32 from_features(const reid::FeatureMatrix& m) {
  F32 out({m.rows(), m.dims()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

reid::DistanceMatrix to_distances(const F32& a) {
  if (a.ndim() != 2) throw reid::ShapeError("expected a 2-D distance array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto g = static_cast<std::size_t>(a.shape(1));
  return reid::DistanceMatrix(n, g, std::vector<float>(a.data(), a.data() + n * g));
}

F32 from_distances(const reid::DistanceMatrix& m) {
  F32 out({m.n_query(), m.n_gallery()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

reid::ImageBuffer to_image(const U8& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw reid::ShapeError("expected an HxWx3 uint8 array");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  return reid::ImageBuffer(h, w, std::vector<std::uint8_t>(a.data(), a.data() + h * w * 3));
}

U8 from_image(const reid::ImageBuffer& img) {
  U8 out({img.height(), img.width(), std::size_t{3}});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

reid::LossBatch to_batch(const F64& x, const std::vector<std::uint32_t>& labels) {
  if (x.ndim() != 2) throw reid::ShapeError("expected a 2-D embedding array");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto d = static_cast<std::size_t>(x.shape(1));
  return reid::LossBatch(n, d, std::vector<double>(x.data(), x.data() + n * d), labels);
}

reid::MetaTable to_meta(const std::vector<std::uint32_t>& ids,
                        const std::vector<std::uint32_t>& cams) {
  if (!cams.empty() && cams.size() != ids.size()) {
    throw reid::ShapeError("camera ids must match person ids in length");
  }
  std::vector<reid::SampleMeta> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.push_back({std::to_string(i), ids[i], cams.empty() ? 0u : cams[i]});
  }
  return reid::MetaTable(std::move(out));
}

py::object region_or_none(const std::optional<reid::Rect>& r) {
  if (!r) return py::none();
  return py::make_tuple(r->x, r->y, r->width, r->height);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Person re-identification retrieval core";

  auto base = py::register_exception<reid::Error>(m, "ReidError");
  py::register_exception<reid::FormatError>(m, "FormatError", base);
  py::register_exception<reid::DataError>(m, "DataError", base);
  py::register_exception<reid::IoError>(m, "IoError", base);
  py::register_exception<reid::ShapeError>(m, "ShapeError", base);
  py::register_exception<reid::ConfigError>(m, "ConfigError", base);
  py::register_exception<reid::BatchError>(m, "BatchError", base);
  py::register_exception<reid::EvalError>(m, "EvalError", base);

  // tensorio
  m.def("load_features", [](const std::string& p) { return from_features(reid::load_features(p)); });
  m.def("save_features", [](const F32& a, const std::string& p) {
    reid::save_features(to_features(a), p);
  });
  m.def("load_distances", [](const std::string& p) { return from_distances(reid::load_distances(p)); });
  m.def("save_distances", [](const F32& a, const std::string& p) {
    reid::save_distances(to_distances(a), p);
  });

  // geometry
  m.def("l2_normalize", [](const F32& a) { return from_features(reid::l2_normalize(to_features(a))); });
  m.def("euclidean_distances", [](const F32& q, const F32& g) {
    return from_distances(reid::euclidean_distances(to_features(q), to_features(g)));
  });
  m.def("cosine_distances", [](const F32& q, const F32& g) {
    return from_distances(reid::cosine_distances(to_features(q), to_features(g)));
  });
  m.def("fuse_flip_features", [](const F32& a, const F32& b) {
    return from_features(reid::fuse_flip_features(to_features(a), to_features(b)));
  });
  m.def(
      "gem_pool",
      [](const F32& fm, double p) {
        if (fm.ndim() != 3) throw reid::ShapeError("expected an HxWxC feature map");
        const auto h = static_cast<std::size_t>(fm.shape(0));
        const auto w = static_cast<std::size_t>(fm.shape(1));
        const auto c = static_cast<std::size_t>(fm.shape(2));
        return reid::gem_pool(
            reid::FeatureMap(h, w, c, std::vector<float>(fm.data(), fm.data() + h * w * c)), {p});
      },
      py::arg("feature_map"), py::arg("p") = 3.0);

  // losses
  m.def(
      "triplet_loss",
      [](const F64& x, const std::vector<std::uint32_t>& y, double margin) {
        return reid::triplet_loss_batch_hard(to_batch(x, y), {margin}).loss;
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("margin") = 0.4);
  m.def(
      "circle_loss",
      [](const F64& x, const std::vector<std::uint32_t>& y, double mm, double gamma) {
        return reid::circle_loss(to_batch(x, y), {mm, gamma});
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("m") = 0.4, py::arg("gamma") = 64.0);
  auto combined = [](double wt, double wc, double margin, double mm, double gamma) {
    reid::CombinedParams p;
    p.w_triplet = wt;
    p.w_circle = wc;
    p.triplet.margin = margin;
    p.circle = {mm, gamma};
    return p;
  };
  m.def(
      "combined_loss",
      [combined](const F64& x, const std::vector<std::uint32_t>& y, double wt, double wc,
                 double margin, double mm, double gamma) {
        return reid::combined_loss(to_batch(x, y), combined(wt, wc, margin, mm, gamma));
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("w_triplet") = 1.0,
      py::arg("w_circle") = 1.0, py::arg("margin") = 0.4, py::arg("m") = 0.4,
      py::arg("gamma") = 64.0);
  m.def(
      "loss_gradient",
      [combined](const F64& x, const std::vector<std::uint32_t>& y, double wt, double wc,
                 double margin, double mm, double gamma) {
        const auto g = reid::loss_gradient(to_batch(x, y), combined(wt, wc, margin, mm, gamma));
        F64 out({g.rows, g.dims});
        std::copy(g.data.begin(), g.data.end(), out.mutable_data());
        return out;
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("w_triplet") = 1.0,
      py::arg("w_circle") = 1.0, py::arg("margin") = 0.4, py::arg("m") = 0.4,
      py::arg("gamma") = 64.0);

  // mining
  m.def(
      "per_sample_losses",
      [](const F32& f, const std::vector<std::uint32_t>& ids, double margin) {
        return reid::per_sample_losses(to_features(f), to_meta(ids, {}), {margin}).losses;
      },
      py::arg("features"), py::arg("person_ids"), py::arg("margin") = 0.4);
  m.def("partition_samples", [](const std::vector<double>& losses, double t_hard, double t_noise) {
    const auto r = reid::partition_samples(losses, {t_hard, t_noise});
    std::vector<std::string> out;
    for (auto c : r.partition) out.emplace_back(reid::to_string(c));
    return out;
  });
  m.def(
      "thresholds_from_quantiles",
      [](const std::vector<double>& losses, double qh, double qn) {
        const auto t = reid::thresholds_from_quantiles(losses, qh, qn);
        return py::make_tuple(t.t_hard, t.t_noise);
      },
      py::arg("losses"), py::arg("q_hard") = 0.7, py::arg("q_noise") = 0.97);
  m.def(
      "balanced_resample_plan",
      [](const std::vector<std::uint32_t>& ids, std::size_t target, std::size_t max_copies) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& e : reid::balanced_resample_plan(to_meta(ids, {}), target, max_copies).copies) {
          out.emplace_back(e.index, e.copies);
        }
        return out;
      },
      py::arg("person_ids"), py::arg("target") = 20, py::arg("max_copies") = 5);

  // augment
  m.def("horizontal_flip", [](const U8& img) { return from_image(reid::horizontal_flip(to_image(img))); });
  m.def(
      "random_erase",
      [](const U8& img, std::uint64_t seed, double probability, bool mean_fill) {
        reid::EraseParams p;
        p.probability = probability;
        p.fill = mean_fill ? reid::EraseFill::ChannelMean : reid::EraseFill::RandomPerPixel;
        reid::Rng rng(seed);
        const auto r = reid::random_erase(to_image(img), p, rng);
        return py::make_tuple(from_image(r.image), region_or_none(r.region));
      },
      py::arg("image"), py::arg("seed"), py::arg("probability") = 0.5,
      py::arg("mean_fill") = false);
  m.def(
      "local_grayscale",
      [](const U8& img, std::uint64_t seed, double probability) {
        reid::LgtParams p;
        p.probability = probability;
        reid::Rng rng(seed);
        const auto r = reid::local_grayscale(to_image(img), p, rng);
        return py::make_tuple(from_image(r.image), region_or_none(r.region));
      },
      py::arg("image"), py::arg("seed"), py::arg("probability") = 0.4);

  // rerank
  m.def(
      "k_reciprocal_rerank",
      [](const F32& q, const F32& g, std::size_t k1, std::size_t k2, double lambda) {
        return from_distances(
            reid::k_reciprocal_rerank(to_features(q), to_features(g), {k1, k2, lambda}));
      },
      py::arg("query"), py::arg("gallery"), py::arg("k1") = 20, py::arg("k2") = 6,
      py::arg("lambda_") = 0.1);
  m.def(
      "aqe_expand",
      [](const F32& q, const F32& g, std::size_t k, double alpha) {
        return from_features(reid::aqe_expand(to_features(q), to_features(g), {k, alpha}));
      },
      py::arg("query"), py::arg("gallery"), py::arg("k") = 5, py::arg("alpha") = 3.0);
  m.def(
      "ensemble_distances",
      [](const std::vector<F32>& ms, bool normalize) {
        std::vector<reid::DistanceMatrix> v;
        for (const auto& a : ms) v.push_back(to_distances(a));
        return from_distances(reid::ensemble_distances(v, normalize));
      },
      py::arg("matrices"), py::arg("normalize") = false);

  // eval
  m.def(
      "evaluate",
      [](const F32& d, const std::vector<std::uint32_t>& qids, const std::vector<std::uint32_t>& gids,
         const std::vector<std::uint32_t>& qcams, const std::vector<std::uint32_t>& gcams,
         bool exclude_same_camera, std::size_t topk) {
        reid::EvalOptions o;
        o.exclude_same_camera = exclude_same_camera;
        o.topk = topk;
        const auto r = reid::evaluate_distances(to_distances(d), to_meta(qids, qcams),
                                                to_meta(gids, gcams), o);
        py::dict out;
        out["mAP"] = r.mAP;
        out["cmc"] = r.cmc;
        out["n_valid_queries"] = r.n_valid_queries;
        out["n_skipped_queries"] = r.n_skipped_queries;
        return out;
      },
      py::arg("distances"), py::arg("query_ids"), py::arg("gallery_ids"),
      py::arg("query_cams") = std::vector<std::uint32_t>{},
      py::arg("gallery_cams") = std::vector<std::uint32_t>{},
      py::arg("exclude_same_camera") = false, py::arg("topk") = 50);

  // harness
  m.def(
      "lr_at",
      [](double epoch, double base, double peak, double warmup, double total, bool cosine) {
        return reid::lr_at(epoch, {base, peak, warmup, total,
                                   cosine ? reid::Decay::Cosine : reid::Decay::None});
      },
      py::arg("epoch"), py::arg("base_lr") = 1e-4, py::arg("peak_lr") = 5e-3,
      py::arg("warmup_epochs") = 10.0, py::arg("total_epochs") = 180.0, py::arg("cosine") = true);
  m.def(
      "generate_synthetic",
      [](std::size_t n_ids, std::size_t per_id, std::size_t dims, double spread, double noise_frac,
         std::uint64_t seed) {
        reid::SynthParams p;
        p.n_ids = n_ids;
        p.per_id = per_id;
        p.dims = dims;
        p.cluster_spread = spread;
        p.noise_frac = noise_frac;
        p.seed = seed;
        const auto s = reid::generate_synthetic(p);
        std::vector<std::uint32_t> ids;
        for (const auto& e : s.meta) ids.push_back(e.person_id);
        return py::make_tuple(from_features(s.features), ids);
      },
      py::arg("n_ids") = 50, py::arg("per_id") = 20, py::arg("dims") = 32,
      py::arg("spread") = 0.1, py::arg("noise_frac") = 0.0, py::arg("seed") = 42);
}
