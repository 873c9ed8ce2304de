#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rae/errors.hpp"
#include "rae/eval.hpp"
#include "rae/image.hpp"
#include "rae/pgm.hpp"

namespace rae {

// One query/background pair for a single place.
struct ImagePair {
  std::string pair_id;
  Image query;
  Image background;
  int linked_ae = 0;  // 0 until a model assigns one

  void validate() const {
    if (pair_id.empty()) throw InvalidInput("ImagePair: empty pair_id");
    if (!query.same_shape(background))
      throw InvalidInput("ImagePair " + pair_id + ": query/background dimension mismatch (" +
                         std::to_string(query.width) + "x" + std::to_string(query.height) + " vs " +
                         std::to_string(background.width) + "x" + std::to_string(background.height) + ")");
  }
};

struct Corpus {
  std::vector<ImagePair> pairs;
  std::vector<Annotation> annotations;  // image_id == pair_id of the query
  std::vector<int> mode_labels;         // ground-truth mode per pair; empty when unknown
};

// Pairing manifest: JSON lines {pair_id, query_path, background_path} with
// paths resolved against `dir`.
inline std::vector<ImagePair> load_corpus(const std::string& dir, const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open pairing manifest: " + manifest_path);
  std::vector<ImagePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(manifest_path + ":" + std::to_string(line_no) + ": bad JSON record: " + e.what());
    }
    ImagePair pair;
    std::string query_path;
    std::string background_path;
    try {
      pair.pair_id = j.at("pair_id").get<std::string>();
      query_path = j.at("query_path").get<std::string>();
      background_path = j.at("background_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(manifest_path + ":" + std::to_string(line_no) + ": missing manifest field: " + e.what());
    }
    pair.query = read_pgm((std::filesystem::path(dir) / query_path).string());
    pair.background = read_pgm((std::filesystem::path(dir) / background_path).string());
    pair.validate();
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// Writes PGMs plus the three sidecar files (pairing manifest, annotations,
// mode labels) into `dir`. Returns the manifest path.
inline std::string save_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir + " (" + ec.message() + ")");

  const fs::path root(dir);
  const std::string manifest_path = (root / "pairs.jsonl").string();
  std::ofstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw IoError("cannot open for writing: " + manifest_path);
  for (const ImagePair& pair : corpus.pairs) {
    pair.validate();
    const std::string query_rel = pair.pair_id + "_query.pgm";
    const std::string background_rel = pair.pair_id + "_background.pgm";
    write_pgm(pair.query, (root / query_rel).string());
    write_pgm(pair.background, (root / background_rel).string());
    nlohmann::json j;
    j["pair_id"] = pair.pair_id;
    j["query_path"] = query_rel;
    j["background_path"] = background_rel;
    manifest << j.dump() << "\n";
  }
  if (!manifest) throw IoError("write failed: " + manifest_path);
  manifest.close();

  write_annotations(corpus.annotations, (root / "annotations.jsonl").string());

  if (!corpus.mode_labels.empty() && corpus.mode_labels.size() != corpus.pairs.size())
    throw InvalidInput("save_corpus: mode_labels size does not match pair count");
  const std::string labels_path = (root / "mode_labels.csv").string();
  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot open for writing: " + labels_path);
  labels << "pair_id,mode\n";
  for (std::size_t i = 0; i < corpus.mode_labels.size(); ++i)
    labels << corpus.pairs[i].pair_id << "," << corpus.mode_labels[i] << "\n";
  if (!labels) throw IoError("write failed: " + labels_path);
  return manifest_path;
}

inline std::vector<int> read_mode_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;  // header
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed mode label row");
    try {
      labels.push_back(std::stoi(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed mode value");
    }
  }
  return labels;
}

}  // namespace rae
