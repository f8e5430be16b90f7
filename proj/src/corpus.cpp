#include "adlex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "adlex/chat.hpp"
#include "adlex/error.hpp"
#include "adlex/io.hpp"
#include "adlex/log.hpp"
#include "adlex/rng.hpp"

namespace adlex {

std::string_view to_string(Label label) {
  return label == Label::Control ? "control" : "dementia";
}

std::string_view to_string(SeverityClass s) {
  switch (s) {
    case SeverityClass::Healthy: return "healthy";
    case SeverityClass::Mild: return "mild";
    case SeverityClass::Moderate: return "moderate";
    case SeverityClass::Severe: return "severe";
  }
  return "?";
}

SeverityClass mmse_to_severity(int mmse) {
  if (mmse < 0 || mmse > 30) {
    throw Error(Errc::OutOfRange, "MMSE " + std::to_string(mmse) + " outside [0, 30]");
  }
  if (mmse >= 25) return SeverityClass::Healthy;
  if (mmse >= 21) return SeverityClass::Mild;
  if (mmse >= 10) return SeverityClass::Moderate;
  return SeverityClass::Severe;
}

Transcript::Transcript(std::string id, std::vector<std::string> tokens, Label label,
                       std::optional<int> mmse)
    : id_(std::move(id)), tokens_(std::move(tokens)), label_(label), mmse_(mmse) {
  if (id_.empty()) throw Error(Errc::InvalidTranscript, "empty transcript id");
  if (tokens_.empty()) throw Error(Errc::InvalidTranscript, "transcript " + id_ + " has no tokens");
  if (label_ != Label::Control && label_ != Label::Dementia) {
    throw Error(Errc::InvalidTranscript, "transcript " + id_ + " has an invalid label");
  }
  if (mmse_ && (*mmse_ < 0 || *mmse_ > 30)) {
    throw Error(Errc::InvalidTranscript,
                "transcript " + id_ + " MMSE " + std::to_string(*mmse_) + " outside [0, 30]");
  }
}

std::optional<SeverityClass> Transcript::severity() const {
  if (!mmse_) return std::nullopt;
  return mmse_to_severity(*mmse_);
}

nlohmann::json Transcript::to_json() const {
  nlohmann::json j;
  j["id"] = id_;
  j["label"] = label_value();
  j["mmse"] = mmse_ ? nlohmann::json(*mmse_) : nlohmann::json(nullptr);
  j["tokens"] = tokens_;
  return j;
}

Transcript Transcript::from_json(const nlohmann::json& j) {
  try {
    int label = j.at("label").get<int>();
    if (label != 0 && label != 1) throw Error(Errc::InvalidTranscript, "label must be 0 or 1");
    std::optional<int> mmse;
    if (j.contains("mmse") && !j["mmse"].is_null()) mmse = j["mmse"].get<int>();
    return Transcript(j.at("id").get<std::string>(), j.at("tokens").get<std::vector<std::string>>(),
                      static_cast<Label>(label), mmse);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("bad transcript record: ") + e.what());
  }
}

std::size_t count_label(const Dataset& data, Label label) {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [&](const Transcript& t) { return t.label() == label; }));
}

std::string dataset_to_jsonl(const Dataset& data) {
  std::vector<nlohmann::json> rows;
  rows.reserve(data.size());
  for (const auto& t : data) rows.push_back(t.to_json());
  return io::to_jsonl(rows);
}

Dataset read_dataset_jsonl(const std::filesystem::path& path) {
  Dataset out;
  std::set<std::string> seen;
  for (const auto& row : io::read_jsonl(path)) {
    auto t = Transcript::from_json(row);
    if (!seen.insert(t.id()).second) throw Error(Errc::DuplicateId, "duplicate id " + t.id());
    out.push_back(std::move(t));
  }
  return out;
}

Dataset select(const Dataset& data, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Transcript*> by_id;
  for (const auto& t : data) by_id.emplace(t.id(), &t);
  Dataset out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::MissingMetadata, "unknown transcript id " + id);
    out.push_back(*it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation planning

nlohmann::json CvPlan::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["repeats"] = repeats;
  j["seed"] = seed;
  j["val_frac"] = val_frac;
  auto& folds_json = j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"repeat", f.repeat},
                          {"fold", f.fold},
                          {"train", f.train_ids},
                          {"val", f.val_ids},
                          {"test", f.test_ids}});
  }
  return j;
}

namespace {

// Largest-remainder allocation of `total` across groups proportional to sizes.
std::vector<std::size_t> allocate(std::size_t total, const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::vector<std::size_t> out(sizes.size(), 0);
  if (n == 0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    double exact = static_cast<double>(total) * static_cast<double>(sizes[i]) / static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r) {
    auto i = remainders[r].second;
    if (out[i] < sizes[i]) {
      ++out[i];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

CvPlan stratified_cv(const Dataset& data, int k, int repeats, double val_frac, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::OutOfRange, "k must be >= 2");
  if (repeats < 1) throw Error(Errc::OutOfRange, "repeats must be >= 1");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) throw Error(Errc::OutOfRange, "val_frac must be in [0, 1)");

  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label_value()].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::TooFewSamples, "class " + std::string(to_string(static_cast<Label>(c))) + " has " +
                                           std::to_string(by_class[c].size()) + " members, need >= " +
                                           std::to_string(k));
    }
  }

  CvPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.seed = seed;
  plan.val_frac = val_frac;
  const Rng root = Rng(seed).derive("cv");

  for (int r = 0; r < repeats; ++r) {
    Rng rng = root.derive(static_cast<std::uint64_t>(r));
    std::vector<int> fold_of(data.size(), -1);
    std::size_t offset = 0;
    for (int c = 0; c < 2; ++c) {
      auto members = by_class[c];
      rng.shuffle(members);
      for (std::size_t i = 0; i < members.size(); ++i) {
        fold_of[members[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
      }
      offset += members.size();
    }

    for (int f = 0; f < k; ++f) {
      Fold fold;
      fold.repeat = r;
      fold.fold = f;
      std::vector<std::vector<std::size_t>> train_by_class(2);
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (fold_of[i] == f) {
          fold.test_ids.push_back(data[i].id());
        } else {
          train_by_class[data[i].label_value()].push_back(i);
        }
      }
      const std::size_t n_train = train_by_class[0].size() + train_by_class[1].size();
      const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n_train)));
      auto quota = allocate(n_val, {train_by_class[0].size(), train_by_class[1].size()});

      Rng val_rng = rng.derive("val").derive(static_cast<std::uint64_t>(f));
      std::vector<bool> is_val(data.size(), false);
      for (int c = 0; c < 2; ++c) {
        auto members = train_by_class[c];
        val_rng.shuffle(members);
        for (std::size_t i = 0; i < quota[c]; ++i) is_val[members[i]] = true;
      }
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (fold_of[i] == f) continue;
        (is_val[i] ? fold.val_ids : fold.train_ids).push_back(data[i].id());
      }
      plan.folds.push_back(std::move(fold));
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string trim_copy(std::string s) {
  auto b = s.find_first_not_of(" \t\r\"");
  auto e = s.find_last_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim_copy(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Label parse_label(const std::string& v, std::size_t lineno) {
  std::string s;
  for (char c : v) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "0" || s == "control" || s == "cc") return Label::Control;
  if (s == "1" || s == "dementia" || s == "cd" || s == "ad") return Label::Dementia;
  throw Error(Errc::ParseError, "metadata line " + std::to_string(lineno) + ": bad label '" + v + "'");
}

}  // namespace

std::map<std::string, MetadataRow> read_metadata_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::map<std::string, MetadataRow> rows;
  std::string line;
  std::size_t lineno = 0;
  int id_col = 0, label_col = 1, mmse_col = 2;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty() || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (!cells.empty() && cells[0] == "id") {
        id_col = label_col = mmse_col = -1;
        for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
          if (cells[i] == "id") id_col = i;
          if (cells[i] == "label") label_col = i;
          if (cells[i] == "mmse") mmse_col = i;
        }
        if (id_col < 0 || label_col < 0) throw Error(Errc::ParseError, "metadata header needs id,label");
        continue;
      }
    }
    auto cell = [&](int col) -> std::string {
      return col >= 0 && col < static_cast<int>(cells.size()) ? cells[col] : std::string{};
    };
    std::string id = cell(id_col);
    if (id.empty()) throw Error(Errc::ParseError, "metadata line " + std::to_string(lineno) + ": empty id");
    MetadataRow row{parse_label(cell(label_col), lineno), std::nullopt};
    std::string mmse = cell(mmse_col);
    if (!mmse.empty() && mmse != "NA" && mmse != "nan") {
      try {
        std::size_t used = 0;
        int v = std::stoi(mmse, &used);
        if (used != mmse.size()) throw std::invalid_argument(mmse);
        if (v < 0 || v > 30) throw Error(Errc::OutOfRange, "MMSE " + mmse + " for " + id);
        row.mmse = v;
      } catch (const std::logic_error&) {
        throw Error(Errc::ParseError, "metadata line " + std::to_string(lineno) + ": bad mmse '" + mmse + "'");
      }
    }
    if (!rows.emplace(id, row).second) throw Error(Errc::DuplicateId, "duplicate metadata id " + id);
  }
  return rows;
}

Dataset load_corpus(const std::filesystem::path& root, const std::filesystem::path& labels_file,
                    std::vector<std::string>* warnings) {
  auto meta = read_metadata_csv(labels_file);
  if (!std::filesystem::is_directory(root)) throw Error(Errc::IoError, root.string() + " is not a directory");

  std::map<std::string, std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".cha") continue;
    auto id = entry.path().stem().string();
    if (!files.emplace(id, entry.path()).second) throw Error(Errc::DuplicateId, "duplicate transcript file id " + id);
  }

  Dataset out;
  for (const auto& [id, path] : files) {
    auto it = meta.find(id);
    if (it == meta.end()) throw Error(Errc::MissingMetadata, "no metadata row for " + path.string());
    auto doc = chat::parse_chat(io::read_file(path));
    std::vector<std::string> tokens;
    for (const auto& utt : chat::participant_utterances(doc, "PAR")) {
      auto cleaned = chat::clean_utterance(utt, chat::CleanPolicy{}, warnings);
      tokens.insert(tokens.end(), cleaned.begin(), cleaned.end());
    }
    out.emplace_back(id, std::move(tokens), it->second.label, it->second.mmse);
  }
  for (const auto& [id, row] : meta) {
    if (!files.count(id)) {
      std::string msg = "metadata row " + id + " has no transcript file; ignored";
      log::warn(msg);
      if (warnings) warnings->push_back(std::move(msg));
    }
  }
  return out;
}

}  // namespace adlex
