// reidtool: command-line front end for the reid library.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reid/reid.hpp"

namespace {

constexpr int kOk = 0, kConfig = 2, kData = 3, kEval = 4;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value config. Every entry becomes a `--key=value` argument placed
// before the user's own flags; keys also given on the command line are
// dropped so flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw reid::ConfigError("cannot read config file " + path);
  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> injected;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw reid::ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw reid::ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    if (given(key)) continue;
    // Comma-separated lists expand to one token per item.
    std::stringstream ss(value);
    std::string item;
    bool any = false;
    while (std::getline(ss, item, ',')) {
      injected.push_back("--" + key + "=" + trim(item));
      any = true;
    }
    if (!any) injected.push_back("--" + key + "=");
  }
  // Config entries go right after the subcommand name.
  const std::size_t at = args.size() > 1 ? 2 : args.size();
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw reid::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw reid::IoError("write failed for " + path);
}

std::vector<double> read_losses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw reid::IoError("cannot open " + path);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw reid::FormatError(path + ": not a number: " + tok);
    }
  }
  return out;
}

struct Synth {
  reid::SynthParams p;
  std::size_t queries_per_id = 1;
  std::string out_dir = ".";
};

void run_synth(const Synth& s) {
  const reid::SyntheticSet set = reid::generate_synthetic(s.p);
  const std::filesystem::path dir(s.out_dir);
  std::filesystem::create_directories(dir);
  reid::save_features(set.features, dir / "features.fvec");
  reid::save_meta(set.meta, dir / "meta.csv");
  const auto split = reid::split_query_gallery(set.features, set.meta, s.queries_per_id);
  reid::save_features(split.query, dir / "query.fvec");
  reid::save_meta(split.query_meta, dir / "query.csv");
  reid::save_features(split.gallery, dir / "gallery.fvec");
  reid::save_meta(split.gallery_meta, dir / "gallery.csv");
  std::cout << "samples=" << set.features.rows() << " queries=" << split.query.rows()
            << " gallery=" << split.gallery.rows() << " relabeled=" << set.n_relabeled << "\n";
}

// Finite-difference check of loss_gradient on random batches.
int run_gradient_check(std::size_t batches, std::size_t n, std::size_t dims,
                       std::uint64_t seed, const reid::CombinedParams& params, double tol) {
  reid::Rng rng(seed);
  const double h = 1e-3;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<double> x(n * dims);
    for (auto& v : x) v = rng.normal();
    std::vector<std::uint32_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<std::uint32_t>(i % (n / 2));
    const reid::Gradient g = reid::loss_gradient(reid::LossBatch(n, dims, x, y), params);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double orig = x[k];
      x[k] = orig + h;
      const double fp = reid::combined_loss(reid::LossBatch(n, dims, x, y), params);
      x[k] = orig - h;
      const double fm = reid::combined_loss(reid::LossBatch(n, dims, x, y), params);
      x[k] = orig;
      const double fd = (fp - fm) / (2 * h);
      num += (g.data[k] - fd) * (g.data[k] - fd);
      den += fd * fd;
    }
    const double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    worst = std::max(worst, rel);
    ++checked;
    std::printf("batch %zu rel_err=%.3e\n", b, rel);
  }
  std::printf("batches=%zu max_rel_err=%.3e\n", checked, worst);
  // Random batches may sit near a hinge or selection tie; report, but only
  // fail when asked to enforce a tolerance.
  return tol > 0 && worst > tol ? kEval : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const reid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }

  CLI::App app{"Person re-identification retrieval toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  // synth
  Synth synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic identity dataset");
  c_synth->add_option("--n-ids", synth.p.n_ids);
  c_synth->add_option("--per-id", synth.p.per_id);
  c_synth->add_option("--dims", synth.p.dims);
  c_synth->add_option("--spread", synth.p.cluster_spread);
  c_synth->add_option("--noise-frac", synth.p.noise_frac);
  c_synth->add_option("--n-cameras", synth.p.n_cameras);
  c_synth->add_option("--seed", synth.p.seed);
  c_synth->add_option("--queries-per-id", synth.queries_per_id);
  c_synth->add_option("--out-dir", synth.out_dir);
  c_synth->callback([&] { action = [&] { run_synth(synth); return kOk; }; });

  // distances
  std::string d_query, d_gallery, d_out, d_metric = "euclidean";
  bool d_normalize = false;
  auto* c_dist = app.add_subcommand("distances", "Query x gallery distance matrix");
  c_dist->add_option("--query", d_query)->required();
  c_dist->add_option("--gallery", d_gallery)->required();
  c_dist->add_option("--metric", d_metric)->check(CLI::IsMember({"euclidean", "cosine"}));
  c_dist->add_flag("--normalize", d_normalize, "L2-normalize features first");
  c_dist->add_option("--out", d_out)->required();
  c_dist->callback([&] {
    action = [&] {
      auto q = reid::load_features(d_query);
      auto g = reid::load_features(d_gallery);
      if (d_normalize) {
        q = reid::l2_normalize(q);
        g = reid::l2_normalize(g);
      }
      const auto d = d_metric == "cosine" ? reid::cosine_distances(q, g)
                                          : reid::euclidean_distances(q, g);
      reid::save_distances(d, d_out);
      return kOk;
    };
  });

  // rerank
  std::string r_query, r_gallery, r_out;
  reid::RerankParams r_params;
  auto* c_rerank = app.add_subcommand("rerank", "k-reciprocal re-ranking");
  c_rerank->add_option("--query", r_query)->required();
  c_rerank->add_option("--gallery", r_gallery)->required();
  c_rerank->add_option("--k1", r_params.k1);
  c_rerank->add_option("--k2", r_params.k2);
  c_rerank->add_option("--lambda", r_params.lambda);
  c_rerank->add_option("--out", r_out)->required();
  c_rerank->callback([&] {
    action = [&] {
      const auto d = reid::k_reciprocal_rerank(reid::load_features(r_query),
                                               reid::load_features(r_gallery), r_params);
      reid::save_distances(d, r_out);
      return kOk;
    };
  });

  // aqe
  std::string a_query, a_gallery, a_out;
  reid::AqeParams a_params;
  auto* c_aqe = app.add_subcommand("aqe", "Alpha-weighted query expansion");
  c_aqe->add_option("--query", a_query)->required();
  c_aqe->add_option("--gallery", a_gallery)->required();
  c_aqe->add_option("--k", a_params.k);
  c_aqe->add_option("--alpha", a_params.alpha);
  c_aqe->add_option("--out", a_out, "expanded query features (.fvec)")->required();
  c_aqe->callback([&] {
    action = [&] {
      const auto q = reid::aqe_expand(reid::load_features(a_query),
                                      reid::load_features(a_gallery), a_params);
      reid::save_features(q, a_out);
      return kOk;
    };
  });

  // ensemble
  std::vector<std::string> e_inputs;
  std::string e_out;
  bool e_normalize = false;
  auto* c_ens = app.add_subcommand("ensemble", "Sum distance matrices");
  c_ens->add_option("--inputs", e_inputs)->required()->expected(1, -1);
  c_ens->add_flag("--normalize", e_normalize, "min-max scale each input first");
  c_ens->add_option("--out", e_out)->required();
  c_ens->callback([&] {
    action = [&] {
      std::vector<reid::DistanceMatrix> ms;
      for (const auto& p : e_inputs) ms.push_back(reid::load_distances(p));
      reid::save_distances(reid::ensemble_distances(ms, e_normalize), e_out);
      return kOk;
    };
  });

  // eval
  std::string v_dist, v_qmeta, v_gmeta, v_out, v_cmc;
  reid::EvalOptions v_opts;
  auto* c_eval = app.add_subcommand("eval", "mAP and CMC of a distance matrix");
  c_eval->add_option("--dist", v_dist)->required();
  c_eval->add_option("--query-meta", v_qmeta)->required();
  c_eval->add_option("--gallery-meta", v_gmeta)->required();
  c_eval->add_flag("--exclude-same-camera", v_opts.exclude_same_camera);
  c_eval->add_option("--topk", v_opts.topk);
  c_eval->add_option("--out", v_out, "report file (default stdout)");
  c_eval->add_option("--cmc", v_cmc, "CMC curve CSV");
  c_eval->callback([&] {
    action = [&] {
      const auto r = reid::evaluate_distances(reid::load_distances(v_dist),
                                              reid::load_meta(v_qmeta),
                                              reid::load_meta(v_gmeta), v_opts);
      write_text(v_out, reid::report_to_text(r));
      if (!v_cmc.empty()) write_text(v_cmc, reid::cmc_to_csv(r));
      return kOk;
    };
  });

  // mine
  std::string m_features, m_meta, m_losses, m_out, m_plan;
  double m_q_hard = 0.7, m_q_noise = 0.97, m_t_hard = NAN, m_t_noise = NAN;
  reid::TripletParams m_triplet;
  std::size_t m_target = 20, m_max_copies = 5;
  auto* c_mine = app.add_subcommand("mine", "Partition samples by loss and plan resampling");
  c_mine->add_option("--features", m_features);
  c_mine->add_option("--meta", m_meta)->required();
  c_mine->add_option("--losses", m_losses, "whitespace-separated losses, one per sample");
  c_mine->add_option("--margin", m_triplet.margin);
  c_mine->add_option("--q-hard", m_q_hard);
  c_mine->add_option("--q-noise", m_q_noise);
  c_mine->add_option("--t-hard", m_t_hard, "absolute threshold (overrides --q-hard)");
  c_mine->add_option("--t-noise", m_t_noise, "absolute threshold (overrides --q-noise)");
  c_mine->add_option("--target", m_target);
  c_mine->add_option("--max-copies", m_max_copies);
  c_mine->add_option("--out", m_out, "per-sample CSV (default stdout)");
  c_mine->add_option("--plan", m_plan, "resample plan CSV");
  c_mine->callback([&] {
    action = [&] {
      const reid::MetaTable meta = reid::load_meta(m_meta);
      std::vector<double> losses;
      if (!m_losses.empty()) {
        losses = read_losses(m_losses);
        if (losses.size() != meta.size()) {
          throw reid::ShapeError("loss count " + std::to_string(losses.size()) +
                                 " does not match " + std::to_string(meta.size()) + " samples");
        }
      } else if (!m_features.empty()) {
        const auto sl = reid::per_sample_losses(reid::load_features(m_features), meta, m_triplet);
        losses = sl.losses;
        if (sl.n_degenerate > 0) {
          std::cerr << "warning: " << sl.n_degenerate
                    << " samples lack a positive or negative; loss set to 0\n";
        }
      } else {
        throw reid::ConfigError("mine needs --features or --losses");
      }
      reid::MiningThresholds th = reid::thresholds_from_quantiles(losses, m_q_hard, m_q_noise);
      if (!std::isnan(m_t_hard)) th.t_hard = m_t_hard;
      if (!std::isnan(m_t_noise)) th.t_noise = m_t_noise;
      const auto report = reid::partition_samples(losses, th);
      write_text(m_out, reid::mining_report_csv(report, meta));
      std::cerr << "t_hard=" << th.t_hard << " t_noise=" << th.t_noise
                << " clean=" << report.n_clean << " hard=" << report.n_hard
                << " noise=" << report.n_noise << "\n";
      if (!m_plan.empty()) {
        const auto plan = reid::balanced_resample_plan(meta, m_target, m_max_copies);
        std::string csv = "image_id,copies\n";
        for (const auto& e : plan.copies) {
          csv += meta[e.index].image_id + "," + std::to_string(e.copies) + "\n";
        }
        write_text(m_plan, csv);
      }
      return kOk;
    };
  });

  // augment
  std::string g_in, g_out, g_op, g_fill = "random";
  std::uint64_t g_seed = 0;
  double g_prob = 1.0;
  auto* c_aug = app.add_subcommand("augment", "Apply one augmentation to a PPM image");
  c_aug->add_option("--in", g_in)->required();
  c_aug->add_option("--out", g_out)->required();
  c_aug->add_option("--op", g_op)->required()->check(CLI::IsMember({"flip", "erase", "lgt"}));
  c_aug->add_option("--seed", g_seed);
  c_aug->add_option("--probability", g_prob);
  c_aug->add_option("--fill", g_fill, "erase fill")->check(CLI::IsMember({"random", "mean"}));
  c_aug->callback([&] {
    action = [&] {
      const reid::ImageBuffer img = reid::read_ppm(g_in);
      reid::Rng rng(g_seed);
      reid::AugmentResult r{img, std::nullopt};
      if (g_op == "flip") {
        r.image = reid::horizontal_flip(img);
      } else if (g_op == "erase") {
        reid::EraseParams p;
        p.probability = g_prob;
        p.fill = g_fill == "mean" ? reid::EraseFill::ChannelMean : reid::EraseFill::RandomPerPixel;
        r = reid::random_erase(img, p, rng);
      } else {
        reid::LgtParams p;
        p.probability = g_prob;
        r = reid::local_grayscale(img, p, rng);
      }
      reid::write_ppm(r.image, g_out);
      if (r.region) {
        std::cout << "region x=" << r.region->x << " y=" << r.region->y
                  << " w=" << r.region->width << " h=" << r.region->height << "\n";
      }
      return kOk;
    };
  });

  // loss-check
  std::string l_features, l_meta;
  reid::CombinedParams l_params;
  std::size_t l_batches = 10, l_n = 8, l_dims = 6;
  std::uint64_t l_seed = 42;
  double l_tol = 0.0;
  auto* c_loss = app.add_subcommand(
      "loss-check", "Loss values of a labeled batch, or a gradient check on random batches");
  c_loss->add_option("--features", l_features);
  c_loss->add_option("--meta", l_meta);
  c_loss->add_option("--margin", l_params.triplet.margin);
  c_loss->add_option("--circle-m", l_params.circle.m);
  c_loss->add_option("--gamma", l_params.circle.gamma);
  c_loss->add_option("--w-triplet", l_params.w_triplet);
  c_loss->add_option("--w-circle", l_params.w_circle);
  c_loss->add_option("--batches", l_batches);
  c_loss->add_option("--batch-size", l_n);
  c_loss->add_option("--dims", l_dims);
  c_loss->add_option("--seed", l_seed);
  c_loss->add_option("--tol", l_tol, "fail when the gradient error exceeds this");
  c_loss->callback([&] {
    action = [&] {
      if (l_features.empty()) {
        if (l_n < 4) throw reid::ConfigError("--batch-size must be >= 4");
        return run_gradient_check(l_batches, l_n, l_dims, l_seed, l_params, l_tol);
      }
      if (l_meta.empty()) throw reid::ConfigError("--features needs --meta");
      const auto f = reid::load_features(l_features);
      const auto meta = reid::load_meta(l_meta);
      reid::check_aligned(f, meta);
      std::vector<std::uint32_t> labels;
      for (const auto& m : meta) labels.push_back(m.person_id);
      const reid::LossBatch b(f, labels);
      std::printf("triplet=%.10g\n", reid::triplet_loss_batch_hard(b, l_params.triplet).loss);
      std::printf("circle=%.10g\n", reid::circle_loss(b, l_params.circle));
      std::printf("combined=%.10g\n", reid::combined_loss(b, l_params));
      return kOk;
    };
  });

  // pipeline
  reid::PipelineConfig p_cfg;
  std::vector<std::string> p_ensemble;
  std::string p_aqe_order = "after";
  auto* c_pipe = app.add_subcommand("pipeline", "Full retrieval pipeline with ablation table");
  c_pipe->add_option("--query", p_cfg.query_features)->required();
  c_pipe->add_option("--gallery", p_cfg.gallery_features)->required();
  c_pipe->add_option("--query-meta", p_cfg.query_meta)->required();
  c_pipe->add_option("--gallery-meta", p_cfg.gallery_meta)->required();
  c_pipe->add_option("--query-flip", p_cfg.query_flip_features);
  c_pipe->add_option("--gallery-flip", p_cfg.gallery_flip_features);
  c_pipe->add_option("--ensemble-inputs", p_ensemble)->expected(1, -1);
  c_pipe->add_option("--out-dir", p_cfg.out_dir);
  c_pipe->add_flag("--tta", p_cfg.tta);
  c_pipe->add_flag("--aqe", p_cfg.aqe);
  c_pipe->add_flag("--rerank", p_cfg.rerank);
  c_pipe->add_flag("--ensemble", p_cfg.ensemble);
  c_pipe->add_flag("--normalize-ensemble", p_cfg.normalize_ensemble);
  c_pipe->add_option("--aqe-order", p_aqe_order)->check(CLI::IsMember({"before", "after"}));
  c_pipe->add_option("--k1", p_cfg.rerank_params.k1);
  c_pipe->add_option("--k2", p_cfg.rerank_params.k2);
  c_pipe->add_option("--lambda", p_cfg.rerank_params.lambda);
  c_pipe->add_option("--aqe-k", p_cfg.aqe_params.k);
  c_pipe->add_option("--aqe-alpha", p_cfg.aqe_params.alpha);
  c_pipe->add_flag("--exclude-same-camera", p_cfg.eval.exclude_same_camera);
  c_pipe->add_option("--topk", p_cfg.eval.topk);
  c_pipe->add_option("--seed", p_cfg.seed);
  c_pipe->callback([&] {
    action = [&] {
      p_cfg.aqe_order = p_aqe_order == "before" ? reid::AqeOrder::BeforeDistance
                                                : reid::AqeOrder::AfterRerank;
      for (const auto& p : p_ensemble) p_cfg.ensemble_inputs.emplace_back(p);
      const auto r = reid::run_pipeline(p_cfg);
      std::cout << reid::ablation_table(r.stages);
      return kOk;
    };
  });

  try {
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    return action();
  } catch (const reid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const reid::EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kEval;
  } catch (const reid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
