// rae: place-specific background modeling for image change detection.
//
// Subcommands: synth, train, score, compress, eval. Every run is fully
// determined by (config file, input files, seed); outputs are written
// atomically where a single file is produced.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rae/rae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::int64_t> seed;  // overrides config seed
  int threads = 1;                   // 0 = auto
};

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rae::IoError("cannot open config: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw rae::InvalidInput("config is not valid JSON: " + path + " (" + e.what() + ")");
  }
  if (!cfg.is_object()) throw rae::InvalidInput("config root must be a JSON object: " + path);
  return cfg;
}

const json& section(const json& cfg, const char* name) {
  const auto it = cfg.find(name);
  if (it == cfg.end() || !it->is_object())
    throw rae::InvalidInput(std::string("config is missing the '") + name + "' section");
  return *it;
}

std::uint64_t resolve_seed(const json& cfg, const json& sect, const GlobalOpts& g) {
  if (g.seed) return static_cast<std::uint64_t>(*g.seed);
  if (sect.contains("seed")) return sect.at("seed").get<std::uint64_t>();
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  throw rae::InvalidInput("no seed given: set 'seed' in the config or pass --seed");
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw rae::IoError("cannot create output directory: " + dir + " (" + ec.message() + ")");
}

// temp file + rename, so readers never observe a half-written file
void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw rae::IoError("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw rae::IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw rae::IoError("cannot rename " + tmp + " -> " + path + " (" + ec.message() + ")");
}

rae::TrainConfig parse_train_config(const json& s, std::uint64_t seed) {
  rae::TrainConfig tc;
  tc.seed = seed;
  tc.learning_rate = s.value("learning_rate", tc.learning_rate);
  tc.epochs = s.value("epochs", tc.epochs);
  tc.batch_size = s.value("batch_size", tc.batch_size);
  tc.weight_init_scale = s.value("weight_init_scale", tc.weight_init_scale);
  tc.validate();
  return tc;
}

std::vector<rae::ImagePair> load_pairs(const json& s) {
  const std::string dir = s.value("corpus_dir", std::string{});
  if (dir.empty()) throw rae::InvalidInput("config: 'corpus_dir' is required");
  const std::string manifest = s.value("manifest", (fs::path(dir) / "pairs.jsonl").string());
  return rae::load_corpus(dir, manifest);
}

std::vector<int> parse_layer_sizes(const json& s) {
  std::vector<int> layer_sizes;
  if (s.contains("layer_sizes")) layer_sizes = s.at("layer_sizes").get<std::vector<int>>();
  return layer_sizes;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const json& cfg, const GlobalOpts& g) {
  const json& s = section(cfg, "synthetic");
  rae::SyntheticSpec spec;
  spec.n_modes = s.value("n_modes", spec.n_modes);
  spec.images_per_mode = s.value("images_per_mode", spec.images_per_mode);
  spec.image_size = s.value("image_size", spec.image_size);
  spec.mode_contrast = s.value("mode_contrast", spec.mode_contrast);
  spec.anomaly_count = s.value("anomaly_count", spec.anomaly_count);
  spec.anomaly_size = s.value("anomaly_size", spec.anomaly_size);
  spec.noise_sd = s.value("noise_sd", spec.noise_sd);
  spec.illumination = s.value("illumination", spec.illumination);
  spec.registration_jitter = s.value("registration_jitter", spec.registration_jitter);
  spec.background_anomaly_count = s.value("background_anomaly_count", spec.background_anomaly_count);
  spec.seed = resolve_seed(cfg, s, g);
  spec.validate();

  const rae::Corpus corpus = rae::generate_synthetic(spec);
  ensure_out_dir(g.out_dir);
  const std::string manifest = rae::save_corpus(corpus, g.out_dir);
  std::cout << "wrote " << corpus.pairs.size() << " pairs, " << corpus.annotations.size()
            << " annotations to " << g.out_dir << " (manifest " << manifest << ")\n";
  return 0;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const json& cfg, const GlobalOpts& g) {
  const json& s = section(cfg, "train");
  const std::uint64_t seed = resolve_seed(cfg, s, g);

  rae::RecursionConfig rc;
  if (!s.contains("v_re_star")) throw rae::InvalidInput("config: train.v_re_star is required");
  rc.v_re_star = s.at("v_re_star").get<double>();
  rc.max_aes = s.value("max_aes", rc.max_aes);
  rc.min_cluster_size = s.value("min_cluster_size", rc.min_cluster_size);
  rc.layer_sizes = parse_layer_sizes(s);
  rc.threads = rae::resolve_threads(g.threads);
  rc.train_cfg = parse_train_config(s, seed);
  rc.validate();

  const int model_w = s.value("model_width", s.value("model_size", 32));
  const int model_h = s.value("model_height", s.value("model_size", 32));
  if (model_w < 2 || model_h < 2) throw rae::InvalidInput("config: model size must be >= 2");

  const std::vector<rae::ImagePair> pairs = load_pairs(s);
  if (pairs.empty()) throw rae::InvalidInput("train: corpus is empty");
  std::vector<rae::Image> backgrounds;
  backgrounds.reserve(pairs.size());
  for (const rae::ImagePair& p : pairs) {
    if (p.background.width < model_w || p.background.height < model_h)
      throw rae::InvalidInput("train: image " + p.pair_id + " is smaller than the model resolution");
    backgrounds.push_back(rae::resize_area(p.background, model_w, model_h));
  }

  rae::RecursionReport report;
  const rae::AeSet set = rae::recursive_train(backgrounds, rc, &report);

  ensure_out_dir(g.out_dir);
  write_text_atomic((fs::path(g.out_dir) / "model.json").string(), rae::serialize_ae_set(set));

  json manifest = rae::report_to_json(report);
  manifest["n_aes"] = set.size();
  manifest["threshold"] = set.threshold;
  manifest["model_width"] = model_w;
  manifest["model_height"] = model_h;
  manifest["seed"] = seed;
  manifest["n_images"] = backgrounds.size();
  write_text_atomic((fs::path(g.out_dir) / "training_manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "trained " << set.size() << " AEs (" << report.termination << "), model in " << g.out_dir
            << "\n";
  return 0;
}

// ---- score ----------------------------------------------------------------

struct ScoredCorpus {
  std::vector<rae::LoCMap> maps;
  std::vector<int> linked;
};

// link each pair's background to its best AE, then score the query with it
ScoredCorpus score_pairs(const rae::AeSet& set, const std::vector<rae::ImagePair>& pairs, int threads) {
  ScoredCorpus out;
  out.maps.resize(pairs.size());
  out.linked.resize(pairs.size());
  rae::parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const rae::Assignment link = rae::assign_best_ae(set, pairs[i].background);
    out.linked[i] = link.ae_id;
    out.maps[i] = rae::score_image_with_ae(set, pairs[i].query, link.ae_id, pairs[i].pair_id);
  });
  return out;
}

int cmd_score(const json& cfg, const GlobalOpts& g) {
  const json& s = section(cfg, "score");
  const std::string model_path = s.value("model", std::string{});
  if (model_path.empty()) throw rae::InvalidInput("config: score.model is required");
  const rae::AeSet set = rae::load_ae_set(model_path);
  const std::vector<rae::ImagePair> pairs = load_pairs(s);
  if (pairs.empty()) throw rae::InvalidInput("score: corpus is empty");

  const ScoredCorpus scored = score_pairs(set, pairs, rae::resolve_threads(g.threads));
  ensure_out_dir(g.out_dir);

  json links = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string stem = "loc_" + pairs[i].pair_id;
    rae::write_loc_map(scored.maps[i], (fs::path(g.out_dir) / (stem + ".pgm")).string(),
                       (fs::path(g.out_dir) / (stem + ".json")).string());
    links.push_back({{"pair_id", pairs[i].pair_id}, {"linked_ae", scored.linked[i]}});
  }
  write_text_atomic((fs::path(g.out_dir) / "links.json").string(), links.dump(2) + "\n");

  const std::vector<rae::RankedPixel> ranked = rae::rank_pixels(scored.maps);
  rae::write_ranked_csv(ranked, (fs::path(g.out_dir) / "ranked.csv").string());
  std::cout << "scored " << pairs.size() << " pairs with " << set.size() << " AEs; outputs in "
            << g.out_dir << "\n";
  return 0;
}

// ---- compress ---------------------------------------------------------------

int cmd_compress(const json& cfg, const GlobalOpts& g) {
  const json& s = section(cfg, "compress");
  const std::string model_path = s.value("model", std::string{});
  if (model_path.empty()) throw rae::InvalidInput("config: compress.model is required");
  if (!s.contains("n_prime")) throw rae::InvalidInput("config: compress.n_prime is required");
  const int n_prime = s.at("n_prime").get<int>();

  const rae::AeSet set = rae::load_ae_set(model_path);
  const rae::AeSet small = rae::compress(set, n_prime);
  ensure_out_dir(g.out_dir);
  write_text_atomic((fs::path(g.out_dir) / "model.json").string(), rae::serialize_ae_set(small));
  std::cout << "compressed " << set.size() << " -> " << small.size() << " AEs\n";
  return 0;
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const json& cfg, const GlobalOpts& g) {
  const json& s = section(cfg, "eval");
  const std::vector<double> x_list = s.value("x_list", std::vector<double>{5.0, 10.0});
  const std::vector<double> iou_list = s.value("iou_list", std::vector<double>{0.25, 0.5});
  const int cell_size = s.value("cell_size", 10);
  if (x_list.empty() || iou_list.empty())
    throw rae::InvalidInput("config: eval.x_list and eval.iou_list must be non-empty");

  const std::string method = s.value("method", std::string("rae"));
  const std::string model_path = s.value("model", std::string{});
  if (method == "rae" && model_path.empty())
    throw rae::InvalidInput("config: eval.model is required for method 'rae'");

  const std::vector<rae::ImagePair> pairs = load_pairs(s);
  if (pairs.empty()) throw rae::InvalidInput("eval: corpus is empty");
  const std::string dir = s.value("corpus_dir", std::string{});
  const std::string annot_path = s.value("annotations", (fs::path(dir) / "annotations.jsonl").string());
  const std::vector<rae::Annotation> annots = rae::read_annotations(annot_path);
  if (annots.empty()) throw rae::InvalidInput("eval: no annotations in " + annot_path);

  const int threads = rae::resolve_threads(g.threads);
  rae::AeSet set;
  if (method == "rae") {
    set = rae::load_ae_set(model_path);
  } else if (method == "kmeans") {
    const std::uint64_t seed = resolve_seed(cfg, s, g);
    if (!s.contains("kmeans_k")) throw rae::InvalidInput("config: eval.kmeans_k is required for method 'kmeans'");
    const int k = s.at("kmeans_k").get<int>();
    const int model_w = s.value("model_width", s.value("model_size", 32));
    const int model_h = s.value("model_height", s.value("model_size", 32));
    std::vector<rae::Image> backgrounds;
    backgrounds.reserve(pairs.size());
    for (const rae::ImagePair& p : pairs)
      backgrounds.push_back(rae::resize_area(p.background, model_w, model_h));
    set = rae::kmeans_train(backgrounds, k, parse_train_config(s, seed), parse_layer_sizes(s));
  } else if (method != "random") {
    throw rae::InvalidInput("config: eval.method must be one of rae|kmeans|random");
  }

  std::vector<rae::CellGrid> grids(pairs.size());
  if (method == "random") {
    const std::uint64_t seed = resolve_seed(cfg, s, g);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      grids[i] = rae::pool_cells(
          rae::random_loc_map(pairs[i].query.width, pairs[i].query.height, seed, pairs[i].pair_id),
          cell_size);
  } else {
    const ScoredCorpus scored = score_pairs(set, pairs, threads);
    for (std::size_t i = 0; i < pairs.size(); ++i) grids[i] = rae::pool_cells(scored.maps[i], cell_size);
  }

  rae::EvalReport report;
  for (const double x : x_list) {
    for (const double iou_min : iou_list) {
      rae::EvalReport one = rae::top_x_accuracy(grids, annots, x, iou_min);
      one.rows.front().method = method;
      report.rows.push_back(one.rows.front());
    }
  }
  ensure_out_dir(g.out_dir);
  const std::string report_path = (fs::path(g.out_dir) / "eval_report.csv").string();
  rae::write_eval_csv(report, report_path);
  std::cout << "wrote " << report.rows.size() << " rows to " << report_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"place-specific background models for image change detection"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "path to the run config (JSON)")->required();
  app.add_option("--out", g.out_dir, "output directory (default: out)");
  app.add_option("--seed", g.seed, "seed override (takes precedence over the config)");
  app.add_option("--threads", g.threads, "worker threads, 0 = hardware concurrency");

  CLI::App* sub_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  CLI::App* sub_train = app.add_subcommand("train", "recursively train an AE set on backgrounds");
  CLI::App* sub_score = app.add_subcommand("score", "score queries into level-of-change maps");
  CLI::App* sub_compress = app.add_subcommand("compress", "keep the first n_prime AEs of a model");
  CLI::App* sub_eval = app.add_subcommand("eval", "top-X accuracy report for a scoring method");
  // let flags appear after the subcommand too: rae train --config ...
  for (CLI::App* sub : {sub_synth, sub_train, sub_score, sub_compress, sub_eval}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const json cfg = load_config(g.config_path);
    if (g.threads < 0) throw rae::InvalidInput("--threads must be >= 0");
    if (sub_synth->parsed()) return cmd_synth(cfg, g);
    if (sub_train->parsed()) return cmd_train(cfg, g);
    if (sub_score->parsed()) return cmd_score(cfg, g);
    if (sub_compress->parsed()) return cmd_compress(cfg, g);
    if (sub_eval->parsed()) return cmd_eval(cfg, g);
    throw rae::InvalidInput("no subcommand given");
  } catch (const rae::IoError& e) {
    std::cerr << "rae: I/O error: " << e.what() << "\n";
    return 2;
  } catch (const rae::NumericError& e) {
    std::cerr << "rae: numeric error: " << e.what() << "\n";
    return 3;
  } catch (const rae::Error& e) {
    std::cerr << "rae: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "rae: config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "rae: " << e.what() << "\n";
    return 1;
  }
}
