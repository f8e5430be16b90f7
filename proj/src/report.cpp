#include "adlex/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "adlex/error.hpp"
#include "adlex/io.hpp"

namespace adlex::report {
namespace {

using nlohmann::json;
using Named = std::pair<std::string, json>;

std::string num(const json& v, int digits = 3) {
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_number()) return "-";
  const double x = v.get<double>();
  char buf[64];
  if (x != 0.0 && (std::fabs(x) < 1e-3 || std::fabs(x) >= 1e6)) {
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  } else {
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  }
  return buf;
}

std::string pm(const json& mean, const json& sd) { return num(mean) + " ± " + num(sd); }

const char* metric_title(const std::string& m) {
  if (m == "syllables") return "Syllables";
  if (m == "lexicon") return "Lexicon";
  if (m == "difficult_words") return "Difficult words";
  if (m == "sentences") return "Sentences";
  return nullptr;
}

void stats_section(std::string& out, const std::vector<Named>& items) {
  out += "## Text statistics\n\n";
  for (const auto& [file, j] : items) {
    out += "Source: `" + file + "` (" + j.value("test", std::string("student")) + " t-test, BH-adjusted)\n\n";
    out += "| Metric | Control | Dementia | t | p | p (BH) | Significant |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const auto& r : j.at("rows")) {
      const std::string metric = r.value("metric", std::string());
      const char* title = metric_title(metric);
      out += "| " + (title ? std::string(title) : metric) + " | " + pm(r.at("control_mean"), r.at("control_std")) +
             " | " + pm(r.at("dementia_mean"), r.at("dementia_std")) + " | " + num(r.at("t")) + " | " +
             num(r.at("p")) + " | " + num(r.at("p_adjusted")) + " | " +
             (r.value("significant", false) ? "yes" : "no") + " |\n";
    }
    out += "\n";
  }
}

void jaccard_section(std::string& out, const std::vector<Named>& items) {
  out += "## Vocabulary overlap\n\n";
  out += "| Source | Control vocabulary | Dementia vocabulary | Shared | Jaccard |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& [file, j] : items) {
    out += "| `" + file + "` | " + j.at("control_vocabulary").dump() + " | " + j.at("dementia_vocabulary").dump() +
           " | " + j.at("shared_vocabulary").dump() + " | " + num(j.at("jaccard"), 4) + " |\n";
  }
  out += "\n";
}

void kl_section(std::string& out, const std::vector<Named>& items) {
  out += "## KL divergence\n\n";
  out += "| Source | alpha_D | log base | KL(control ‖ dementia) | KL(dementia ‖ control) |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& [file, j] : items) {
    out += "| `" + file + "` | " + num(j.at("alpha_d"), 2) + " | " + num(j.at("log_base"), 2) + " | " +
           num(j.at("kl_cd"), 4) + " | " + num(j.at("kl_dc"), 4) + " |\n";
  }
  out += "\n";
}

void markers_section(std::string& out, const std::vector<Named>& items) {
  out += "## Linguistic markers\n\n";
  for (const auto& [file, j] : items) {
    const auto& rows = j.at("rows");
    out += "### " + j.value("kind", std::string("?")) + " (`" + file + "`, BH alpha " + num(j.at("alpha"), 2) +
           ", min document frequency " + j.at("min_doc_freq").dump() + ")\n\n";
    if (rows.empty()) {
      out += "No feature survives the correction.\n\n";
      continue;
    }
    for (const char* dir : {"dementia", "control"}) {
      out += std::string("Toward ") + dir + ":\n\n";
      out += "| Feature | r | p | p (BH) |\n|---|---|---|---|\n";
      int n = 0;
      for (const auto& r : rows) {
        if (r.value("direction", std::string()) != dir) continue;
        out += "| " + r.at("feature").get<std::string>() + " | " + num(r.at("r")) + " | " + num(r.at("p")) +
               " | " + num(r.at("p_adjusted")) + " |\n";
        ++n;
      }
      if (n == 0) out += "| (none) | | | |\n";
      out += "\n";
    }
  }
}

void train_section(std::string& out, const std::vector<Named>& items) {
  out += "## Classification\n\n";
  out += "| Model | Folds | Precision | Recall | F1 | Accuracy | Specificity |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const auto& [file, j] : items) {
    const auto& m = j.at("mean");
    const auto& s = j.at("std");
    const std::string model = j.value("model", file);
    const std::size_t folds = j.contains("folds") ? j.at("folds").size() : 0;
    out += "| " + model + " | " + std::to_string(folds);
    for (const char* k : {"precision", "recall", "f1", "accuracy", "specificity"}) {
      out += " | " + pm(m.at(k), s.at(k));
    }
    out += " |\n";
  }
  out += "\n";
}

void explanation_section(std::string& out, const std::vector<Named>& items) {
  out += "## Explanations\n\n";
  for (const auto& [file, j] : items) {
    out += "### " + j.value("id", file) + " (P(dementia) = " + num(j.at("prob")) + ", local fit " +
           num(j.at("local_prediction")) + ")\n\n";
    out += "| Token | Weight |\n|---|---|\n";
    for (const auto& t : j.at("tokens")) {
      out += "| " + t.at("token").get<std::string>() + " | " + num(t.at("weight"), 4) + " |\n";
    }
    out += "\n";
  }
}

}  // namespace

bool Artifacts::empty() const {
  return stats.empty() && divergence.empty() && markers.empty() && train.empty() && explanation.empty();
}

Artifacts collect(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::NoArtifacts, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Artifacts a;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(io::read_file(f));
    } catch (const json::parse_error& e) {
      throw Error(Errc::ParseError, f.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("artifact") || !j["artifact"].is_string()) continue;
    const std::string kind = j["artifact"];
    const std::string name = f.filename().string();
    if (kind == "stats") a.stats.emplace_back(name, std::move(j));
    else if (kind == "divergence") a.divergence.emplace_back(name, std::move(j));
    else if (kind == "markers") a.markers.emplace_back(name, std::move(j));
    else if (kind == "train") a.train.emplace_back(name, std::move(j));
    else if (kind == "explanation") a.explanation.emplace_back(name, std::move(j));
  }
  if (a.empty()) throw Error(Errc::NoArtifacts, "no artifacts in " + dir.string());
  return a;
}

std::string to_markdown(const Artifacts& a) {
  if (a.empty()) throw Error(Errc::NoArtifacts, "nothing to report");
  std::string out = "# Run report\n\n";
  try {
    if (!a.stats.empty()) stats_section(out, a.stats);
    if (!a.divergence.empty()) {
      jaccard_section(out, a.divergence);
      kl_section(out, a.divergence);
    }
    if (!a.markers.empty()) markers_section(out, a.markers);
    if (!a.train.empty()) train_section(out, a.train);
    if (!a.explanation.empty()) explanation_section(out, a.explanation);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("artifact is missing fields: ") + e.what());
  }
  return out;
}

json summary(const Artifacts& a) {
  json j;
  j["artifact"] = "report";
  std::vector<std::string> sections;
  if (!a.stats.empty()) sections.push_back("stats");
  if (!a.divergence.empty()) {
    sections.push_back("jaccard");
    sections.push_back("kl");
  }
  if (!a.markers.empty()) sections.push_back("markers");
  if (!a.train.empty()) sections.push_back("classification");
  if (!a.explanation.empty()) sections.push_back("explanations");
  j["sections"] = sections;
  auto take = [](const std::vector<Named>& items) {
    json arr = json::array();
    for (const auto& [file, body] : items) arr.push_back({{"file", file}, {"content", body}});
    return arr;
  };
  j["stats"] = take(a.stats);
  j["divergence"] = take(a.divergence);
  j["markers"] = take(a.markers);
  json train = json::array();
  for (const auto& [file, body] : a.train) {
    train.push_back({{"file", file}, {"model", body.value("model", file)}, {"mean", body.at("mean")},
                     {"std", body.at("std")}});
  }
  j["classification"] = std::move(train);
  j["explanations"] = take(a.explanation);
  return j;
}

}  // namespace adlex::report
