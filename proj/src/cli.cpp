#include "adlex/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "adlex/chat.hpp"
#include "adlex/config.hpp"
#include "adlex/corpus.hpp"
#include "adlex/divergence.hpp"
#include "adlex/error.hpp"
#include "adlex/io.hpp"
#include "adlex/lime.hpp"
#include "adlex/log.hpp"
#include "adlex/markers.hpp"
#include "adlex/report.hpp"
#include "adlex/rng.hpp"
#include "adlex/textstats.hpp"
#include "adlex/trainer.hpp"

namespace adlex::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    io::write_file_atomic(path, text);
    log::info("wrote " + path);
  }
}

RunConfig base_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return RunConfig::load(path);
}

template <typename T>
void override(RunConfig& cfg, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    cfg.set(key, *v);
  } else {
    std::ostringstream s;
    s.precision(17);
    s << *v;
    cfg.set(key, s.str());
  }
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag, const RunConfig& cfg) {
  if (flag) return *flag;
  if (cfg.seed) return *cfg.seed;
  throw Error(Errc::UsageError, "--seed is required (no default seed is ever taken from the clock)");
}

std::vector<fs::path> cha_files(const fs::path& p) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(p)) {
    files.push_back(p);
  } else if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file() && e.path().extension() == ".cha") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    throw Error(Errc::IoError, "no such file or directory: " + p.string());
  }
  return files;
}

// Stratified holdout used for the model saved by `train --save-model`.
std::pair<Dataset, Dataset> holdout(const Dataset& data, double val_frac, std::uint64_t seed) {
  Rng rng = Rng(seed).derive("holdout");
  std::vector<std::string> train_ids, val_ids;
  for (Label label : {Label::Control, Label::Dementia}) {
    std::vector<std::string> ids;
    for (const auto& t : data) {
      if (t.label() == label) ids.push_back(t.id());
    }
    std::sort(ids.begin(), ids.end());
    Rng r = rng.derive(static_cast<std::uint64_t>(label));
    r.shuffle(ids);
    auto n_val = static_cast<std::size_t>(std::lround(val_frac * static_cast<double>(ids.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, ids.size() > 1 ? ids.size() - 1 : 1);
    val_ids.insert(val_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_ids.insert(train_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_val), ids.end());
  }
  return {select(data, train_ids), select(data, val_ids)};
}

std::shared_ptr<const model::PrecomputedStore> load_store(const RunConfig& cfg) {
  if (cfg.model.encoder.kind != model::EncoderKind::PrecomputedFile) return nullptr;
  if (cfg.model.encoder.embeddings.empty()) {
    throw Error(Errc::ConfigError, "encoder = precomputed needs embeddings = <manifest>");
  }
  return std::make_shared<const model::PrecomputedStore>(model::PrecomputedStore::load(cfg.model.encoder.embeddings));
}

struct Args {
  std::string out, config, data;
  std::optional<std::uint64_t> seed;

  // synth
  int n = 39;
  std::string cha_dir;
  double mmse_missing = 0.0;

  // parse / load
  std::string input, speaker = "PAR", root, meta;

  // stats
  std::string easy_words;
  std::optional<std::string> t_test;
  std::optional<double> significance;

  // divergence
  std::optional<double> alpha_d;
  std::optional<std::string> log_base;

  // markers
  std::optional<std::string> kind_s, tagger, tags;
  std::optional<int> min_doc_freq;
  std::optional<double> marker_alpha;

  // train
  std::optional<std::string> model;
  std::optional<int> folds, repeats, max_epochs;
  int jobs = 1;
  std::string save_model;
  bool no_history = false;

  // explain
  std::string model_path, id, html;
  std::optional<int> samples, features;
  std::optional<double> kernel_width;
  int threads = 1;

  // report
  std::string dir, json_out;
};

int run_synth(const Args& a, std::ostream& out) {
  const auto seed = require_seed(a.seed, RunConfig{});
  if (a.n < 2) throw Error(Errc::UsageError, "--n must be at least 2");
  SynthProfile profile;
  profile.mmse_missing_rate = a.mmse_missing;
  const Dataset data = generate_synthetic(seed, a.n, profile);
  if (!a.cha_dir.empty()) write_cha_tree(data, a.cha_dir, seed);
  emit(dataset_to_jsonl(data), a.out, out);
  return 0;
}

int run_parse(const Args& a, std::ostream& out) {
  std::vector<json> rows;
  for (const auto& f : cha_files(a.input)) {
    const auto doc = chat::parse_chat(io::read_file(f));
    const auto utts = chat::participant_utterances(doc, a.speaker);
    std::vector<std::string> tokens;
    for (const auto& u : utts) {
      std::vector<std::string> warnings;
      for (auto& t : chat::clean_utterance(u, {}, &warnings)) tokens.push_back(std::move(t));
      for (const auto& w : warnings) log::warn(f.filename().string() + ": " + w);
    }
    rows.push_back({{"id", f.stem().string()}, {"tokens", tokens}, {"n_utterances", utts.size()}});
  }
  emit(io::to_jsonl(rows), a.out, out);
  return 0;
}

int run_load(const Args& a, std::ostream& out) {
  std::vector<std::string> warnings;
  const Dataset data = load_corpus(a.root, a.meta, &warnings);
  for (const auto& w : warnings) log::warn(w);
  log::info("loaded " + std::to_string(data.size()) + " transcripts");
  emit(dataset_to_jsonl(data), a.out, out);
  return 0;
}

int run_stats(const Args& a, std::ostream& out) {
  RunConfig cfg = base_config(a.config);
  override(cfg, "t_test", a.t_test);
  override(cfg, "significance", a.significance);
  cfg.validate();
  const Dataset data = read_dataset_jsonl(a.data);
  const auto words = textstats::load_word_list(a.easy_words.empty() ? textstats::default_easy_words_path()
                                                                     : fs::path(a.easy_words));
  const auto rows = textstats::compare_groups(data, words, cfg.t_test, cfg.significance);
  emit(io::dump(textstats::to_json(rows, cfg.t_test)), a.out, out);
  return 0;
}

int run_divergence(const Args& a, std::ostream& out) {
  RunConfig cfg = base_config(a.config);
  override(cfg, "alpha_d", a.alpha_d);
  override(cfg, "log_base", a.log_base);
  cfg.validate();
  const Dataset data = read_dataset_jsonl(a.data);
  const auto g = divergence::group_divergence(data, cfg.alpha_d, cfg.log_base);
  emit(io::dump(divergence::to_json(g, cfg.alpha_d, cfg.log_base)), a.out, out);
  return 0;
}

int run_markers(const Args& a, std::ostream& out) {
  RunConfig cfg = base_config(a.config);
  override(cfg, "min_doc_freq", a.min_doc_freq);
  override(cfg, "marker_alpha", a.marker_alpha);
  override(cfg, "tagger", a.tagger);
  override(cfg, "tags_file", a.tags);
  cfg.validate();
  const auto kind = markers::parse_kind(a.kind_s.value_or("pos"));
  const Dataset data = read_dataset_jsonl(a.data);
  markers::ExternalTags sidecar;
  markers::Tagger tagger{cfg.tagger, nullptr};
  if (cfg.tagger == markers::TaggerBackend::External) {
    sidecar = markers::read_tags_jsonl(cfg.tags_file);
    tagger.external = &sidecar;
  }
  const auto matrix = markers::feature_matrix(data, kind, cfg.min_doc_freq, tagger);
  for (const auto& id : matrix.excluded) log::warn("no counted features in " + id + "; excluded");
  const auto rows = markers::correlate(matrix, kind, cfg.marker_alpha);
  emit(io::dump(markers::to_json(rows, kind, cfg.min_doc_freq, cfg.marker_alpha, matrix.excluded)), a.out, out);
  return 0;
}

int run_train(const Args& a, std::ostream& out) {
  RunConfig cfg = base_config(a.config);
  override(cfg, "model", a.model);
  override(cfg, "cv_folds", a.folds);
  override(cfg, "cv_repeats", a.repeats);
  override(cfg, "max_epochs", a.max_epochs);
  cfg.validate();
  const auto seed = require_seed(a.seed, cfg);
  if (a.jobs < 1) throw Error(Errc::UsageError, "--jobs must be at least 1");
  const Dataset data = read_dataset_jsonl(a.data);

  auto opts = cfg.run_options();
  opts.store = load_store(cfg);
  const CvPlan plan = stratified_cv(data, cfg.cv_folds, cfg.cv_repeats, cfg.val_frac, seed);
  log::info("training " + std::string(model::to_string(cfg.model.architecture)) + " on " +
            std::to_string(plan.folds.size()) + " folds");
  const auto report = trainer::cross_validate(data, plan, opts, a.jobs);

  json j = report.to_json(!a.no_history);
  json art = {{"artifact", "train"},
              {"model", model::to_string(cfg.model.architecture)},
              {"seed", seed},
              {"n_transcripts", data.size()},
              {"k", plan.k},
              {"repeats", plan.repeats},
              {"val_frac", plan.val_frac},
              {"config", cfg.to_json()}};
  art.update(j);
  emit(io::dump(art), a.out, out);

  if (!a.save_model.empty()) {
    auto [train, val] = holdout(data, cfg.val_frac, seed);
    const auto m = trainer::train_model(train, val, opts, Rng(seed).derive("final").key());
    io::write_file_atomic(a.save_model, io::dump(m.to_json()));
    log::info("saved model to " + a.save_model);
  }
  return 0;
}

int run_explain(const Args& a, std::ostream& out) {
  RunConfig cfg = base_config(a.config);
  override(cfg, "lime_samples", a.samples);
  override(cfg, "lime_features", a.features);
  override(cfg, "lime_kernel_width", a.kernel_width);
  cfg.validate();
  const auto seed = require_seed(a.seed, cfg);
  if (a.threads < 1) throw Error(Errc::UsageError, "--threads must be at least 1");

  const json mj = json::parse(io::read_file(a.model_path));
  const auto mcfg = model::ModelConfig::from_json(mj.at("config"));
  if (mcfg.encoder.kind != model::EncoderKind::ToyTrainable) {
    throw Error(Errc::UsageError, "explain perturbs tokens and needs a token-level encoder");
  }
  const auto m = model::Classifier::from_json(mj);

  const Dataset data = read_dataset_jsonl(a.data);
  const Transcript* target = nullptr;
  for (const auto& t : data) {
    if (t.id() == a.id) target = &t;
  }
  if (!target) throw Error(Errc::MissingMetadata, "no transcript with id " + a.id);

  lime::Options o = cfg.lime;
  o.seed = seed;
  o.threads = a.threads;
  const lime::BatchPredict predict = [&m](const std::vector<std::vector<std::string>>& texts) {
    std::vector<double> p;
    p.reserve(texts.size());
    for (const auto& t : texts) p.push_back(m.predict_tokens(t));
    return p;
  };
  const auto e = lime::explain(predict, target->id(), target->tokens(), o);
  emit(io::dump(e.to_json()), a.out, out);
  if (!a.html.empty()) io::write_file_atomic(a.html, lime::to_html(e, target->tokens()));
  return 0;
}

int run_report(const Args& a, std::ostream& out) {
  const auto arts = report::collect(a.dir);
  emit(report::to_markdown(arts), a.out, out);
  if (!a.json_out.empty()) io::write_file_atomic(a.json_out, io::dump(report::summary(arts)));
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transcript analysis and dementia classification pipeline", "adlex"};
  app.require_subcommand(1);
  Args a;

  auto common = [&a](CLI::App* s, bool data) {
    s->add_option("--out,-o", a.out, "output file (stdout when omitted)");
    s->add_option("--config,-c", a.config, "key = value config file")->check(CLI::ExistingFile);
    if (data) s->add_option("--data,-d", a.data, "dataset JSONL")->required()->check(CLI::ExistingFile);
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic labelled corpus");
  synth->add_option("--seed", a.seed, "generator seed")->required();
  synth->add_option("--n", a.n, "transcripts per class");
  synth->add_option("--cha-dir", a.cha_dir, "also write a CHAT tree with meta.csv here");
  synth->add_option("--mmse-missing", a.mmse_missing, "share of transcripts without MMSE")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out,-o", a.out, "dataset JSONL");

  auto* parse = app.add_subcommand("parse", "clean the participant tiers of .cha files");
  parse->add_option("input", a.input, ".cha file or directory")->required();
  parse->add_option("--speaker", a.speaker, "speaker code");
  parse->add_option("--out,-o", a.out, "JSONL output");

  auto* load = app.add_subcommand("load", "join a CHAT tree with its label CSV");
  load->add_option("--root", a.root, "corpus directory")->required()->check(CLI::ExistingDirectory);
  load->add_option("--meta", a.meta, "id,label,mmse CSV")->required()->check(CLI::ExistingFile);
  load->add_option("--out,-o,--cache", a.out, "dataset JSONL");

  auto* stats = app.add_subcommand("stats", "text statistics with t-tests");
  common(stats, true);
  stats->add_option("--easy-words", a.easy_words, "easy word list")->check(CLI::ExistingFile);
  stats->add_option("--t-test", a.t_test, "student or welch");
  stats->add_option("--significance", a.significance, "BH level");

  auto* div = app.add_subcommand("divergence", "Jaccard overlap and smoothed KL divergence");
  common(div, true);
  div->add_option("--alpha", a.alpha_d, "Jelinek-Mercer document weight");
  div->add_option("--log-base", a.log_base, "logarithm base or e");

  auto* mark = app.add_subcommand("markers", "point-biserial marker correlations");
  common(mark, true);
  mark->add_option("--kind", a.kind_s, "pos or unigram");
  mark->add_option("--min-doc-freq", a.min_doc_freq, "minimum document frequency");
  mark->add_option("--alpha", a.marker_alpha, "BH level");
  mark->add_option("--tagger", a.tagger, "lexicon or external");
  mark->add_option("--tags", a.tags, "sidecar tags JSONL")->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "cross-validated training");
  common(train, true);
  train->add_option("--model,-m", a.model, "stl, siamese, mtl or mtl-de");
  train->add_option("--seed", a.seed, "fold and initialization seed");
  train->add_option("--folds", a.folds, "folds per repeat");
  train->add_option("--repeats", a.repeats, "repeats");
  train->add_option("--max-epochs", a.max_epochs, "epoch cap per phase");
  train->add_option("--jobs,-j", a.jobs, "folds trained in parallel");
  train->add_option("--save-model", a.save_model, "also train on a holdout split of all data and save it");
  train->add_flag("--no-history", a.no_history, "omit per-epoch losses");

  auto* expl = app.add_subcommand("explain", "local explanation of one prediction");
  common(expl, true);
  expl->add_option("--model,-m", a.model_path, "saved model JSON")->required()->check(CLI::ExistingFile);
  expl->add_option("--id", a.id, "transcript id")->required();
  expl->add_option("--seed", a.seed, "perturbation seed");
  expl->add_option("--samples", a.samples, "perturbed samples");
  expl->add_option("--features", a.features, "features kept in the surrogate");
  expl->add_option("--kernel-width", a.kernel_width, "kernel width");
  expl->add_option("--threads", a.threads, "prediction threads");
  expl->add_option("--html", a.html, "also write a highlighted HTML page");

  auto* rep = app.add_subcommand("report", "Markdown summary of a run directory");
  rep->add_option("--dir", a.dir, "artifact directory")->required();
  rep->add_option("--out,-o", a.out, "Markdown output");
  rep->add_option("--json", a.json_out, "JSON summary output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*synth) return run_synth(a, out);
    if (*parse) return run_parse(a, out);
    if (*load) return run_load(a, out);
    if (*stats) return run_stats(a, out);
    if (*div) return run_divergence(a, out);
    if (*mark) return run_markers(a, out);
    if (*train) return run_train(a, out);
    if (*expl) return run_explain(a, out);
    if (*rep) return run_report(a, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const json::exception& e) {
    err << "error [ParseError]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace adlex::cli
