// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// `cerule`: command-line front end for the rule engine.
//
// Exit codes: 0 success, 2 input or validation error, 3 stream stopped by a
// rule, 4 internal error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cerule/common/atomic_file.hpp"
#include "cerule/common/error.hpp"
#include "cerule/common/random.hpp"
#include "cerule/detector/model_io.hpp"
#include "cerule/detector/train.hpp"
#include "cerule/eval/corpus.hpp"
#include "cerule/monitor/monitor.hpp"
#include "cerule/monitor/stream_io.hpp"
#include "cerule/rules/ruleset.hpp"
#include "cerule/synth/synthetic.hpp"
#include "cerule/traces/excitation.hpp"
#include "cerule/traces/trace_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cerule;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitStopped = 3;
constexpr int kExitInternal = 4;

bool g_no_timestamp = false;
std::string g_rules_path = "rules";  // prefix for rule diagnostics

std::string stamped(const std::string& json_text) {
  if (g_no_timestamp) return json_text;
  json j = json::parse(json_text);
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["generated_at"] = buf;
  return j.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, [&](std::ostream& out) { out << text; });
}

// ------------------------------------------------------------ shared options

struct RuleInputs {
  std::string vocab;
  std::string rules;

  void add(CLI::App* app, bool need_rules) {
    app->add_option("--vocab", vocab, "CE vocabulary manifest")->required()->check(CLI::ExistingFile);
    auto* r = app->add_option("--rules", rules, "rules file")->check(CLI::ExistingFile);
    if (need_rules) r->required();
  }
  CeVocabulary load_vocab() const { return load_vocabulary(vocab); }
  RuleSet load() const {
    g_rules_path = rules;
    return load_ruleset_files(rules, vocab);
  }
};

struct MonitorOptions {
  std::optional<std::size_t> window;
  std::string mode = "binary";
  double score_threshold = 0.5;
  std::vector<std::string> thresholds;  // NAME=VALUE overrides

  void add(CLI::App* app) {
    app->add_option("--window", window, "window size in tokens (default: whole conversation)")
        ->check(CLI::PositiveNumber);
    app->add_option("--mode", mode, "binary or continuous")
        ->check(CLI::IsMember({"binary", "continuous"}));
    app->add_option("--score-threshold", score_threshold, "continuous-mode firing threshold")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--threshold", thresholds, "per-CE threshold override, NAME=VALUE");
  }

  MonitorConfig build(const CeVocabulary& vocab) const {
    MonitorConfig c = MonitorConfig::from_vocabulary(vocab);
    c.window = window;
    c.mode = parse_score_mode(mode);
    c.score_threshold = score_threshold;
    for (const auto& kv : thresholds) {
      auto eq = kv.rfind('=');
      if (eq == std::string::npos) throw Error(Errc::kInvalidConfig, "--threshold expects NAME=VALUE");
      auto id = vocab.find(kv.substr(0, eq));
      if (!id) throw Error(Errc::kUnknownCe, "unknown CE '" + kv.substr(0, eq) + "' in --threshold");
      double v = 0;
      try {
        v = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(Errc::kInvalidConfig, "bad threshold value in '" + kv + "'");
      }
      c.thresholds[*id] = v;
    }
    c.validate(vocab.size());
    return c;
  }
};

std::vector<fs::path> probability_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ConversationTrace> load_trace_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, dir.string() + " is not a directory");
  std::vector<ConversationTrace> out;
  for (const auto& f : list_trace_files(dir)) out.push_back(load_trace(f));
  if (out.empty()) throw Error(Errc::kEmptyCorpus, "no .gat/.gatl traces in " + dir.string());
  return out;
}

void check_model_vocab(const DetectorModel& model, const CeVocabulary& vocab) {
  if (model.arch().num_labels != vocab.size()) {
    throw Error(Errc::kDimensionMismatch, "model has " + std::to_string(model.arch().num_labels) +
                                              " labels but the vocabulary has " +
                                              std::to_string(vocab.size()) + " CEs");
  }
  const auto& names = model.label_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] != vocab[static_cast<CeId>(i)].name) {
      throw Error(Errc::kConfigMismatch, "model label " + std::to_string(i) + " is '" + names[i] +
                                             "', vocabulary says '" +
                                             vocab[static_cast<CeId>(i)].name + "'");
    }
  }
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

// ------------------------------------------------------------ compile-rules

struct CompileCmd {
  RuleInputs in;
  std::string print_out;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("compile-rules", "validate a ruleset against a vocabulary");
    in.add(c, true);
    c->add_option("--out", print_out, "write the canonical ruleset here");
    c->callback([this] { run(); });
  }

  void run() {
    auto vocab = in.load_vocab();
    g_rules_path = in.rules;
    RuleSet set = load_ruleset(read_text_file(in.rules), vocab);
    if (!print_out.empty()) write_text(print_out, format_ruleset(set));
    std::cout << set.rules.size() << " rules, " << vocab.size() << " CEs\n";
  }
};

// ------------------------------------------------------------ train

struct TrainCmd {
  std::string data, vocab, out, report;
  TrainConfig cfg;
  std::string target = "all_tokens";
  std::size_t segment_len = kDefaultSegmentLength;
  bool quiet = false;

  void setup(CLI::App& app, std::uint64_t& seed) {
    auto* c = app.add_subcommand("train", "train the CE detector on an excitation dataset");
    c->add_option("--data", data, "dataset dir: <data>/<ce name>/*.gat[l], optional _background/")
        ->required()->check(CLI::ExistingDirectory);
    c->add_option("--vocab", vocab, "CE vocabulary manifest")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "model file (.cedm)")->required();
    c->add_option("--report", report, "training report (default: <out>.report.json)");
    c->add_option("--epochs", cfg.epochs)->check(CLI::PositiveNumber);
    c->add_option("--batch-size", cfg.batch_size)->check(CLI::PositiveNumber);
    c->add_option("--lr", cfg.adam.learning_rate);
    c->add_option("--split", cfg.split_ratio, "training fraction of the 80:20 split");
    c->add_option("--hidden", cfg.hidden)->check(CLI::PositiveNumber);
    c->add_option("--layers", cfg.num_layers)->check(CLI::PositiveNumber);
    c->add_option("--patience", cfg.patience, "early-stopping patience, 0 disables");
    c->add_option("--clip", cfg.clip_norm, "global gradient-norm clip, 0 disables");
    c->add_option("--loss-target", target)->check(CLI::IsMember({"all_tokens", "final_token"}));
    c->add_option("--segment-len", segment_len)->check(CLI::PositiveNumber);
    c->add_flag("--quiet", quiet, "no per-epoch progress");
    c->callback([this, &seed] {
      cfg.seed = seed;
      run();
    });
  }

  void run() {
    cfg.target = parse_loss_target(target);
    cfg.validate();
    auto v = load_vocabulary(vocab);
    auto dataset = load_excitation_dir(data, v, segment_len);
    if (!quiet) std::cerr << dataset.size() << " segments, " << v.size() << " CEs\n";
    auto result = train(dataset, v.names(), cfg, [this](const EpochMetrics& e) {
      if (quiet) return;
      double mean_acc = 0;
      for (double a : e.val_accuracy) mean_acc += a;
      if (!e.val_accuracy.empty()) mean_acc /= static_cast<double>(e.val_accuracy.size());
      std::cerr << "epoch " << e.epoch << "  train_bce " << fmt(e.train_bce, 5) << "  val_bce "
                << fmt(e.val_bce, 5) << "  mean_val_acc " << fmt(mean_acc) << '\n';
    });
    save_model(out, result.model);
    write_text(report.empty() ? out + ".report.json" : report, stamped(result.report.to_json()));
    for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "best epoch " << result.report.best_epoch << ", model written to " << out << '\n';
  }
};

// ------------------------------------------------------------ calibrate

struct CalibrateCmd {
  std::string model, vocab, traces, out, report, level = "trace";

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("calibrate", "choose per-CE thresholds on labelled traces");
    c->add_option("--model", model)->required()->check(CLI::ExistingFile);
    c->add_option("--vocab", vocab)->required()->check(CLI::ExistingFile);
    c->add_option("--traces", traces, "directory of traces with per-token CE labels")
        ->required()->check(CLI::ExistingDirectory);
    c->add_option("--out", out, "vocabulary with calibrated thresholds")->required();
    c->add_option("--report", report, "calibration details (JSON)");
    c->add_option("--level", level, "trace or token")->check(CLI::IsMember({"trace", "token"}));
    c->callback([this] { run(); });
  }

  void run() {
    auto v = load_vocabulary(vocab);
    auto m = load_model(model);
    check_model_vocab(m, v);
    auto corpus = load_trace_dir(traces);
    auto probs = detect_corpus(m, corpus);
    auto cal = calibrate_thresholds(probs, corpus, v.size(), parse_calibration_level(level));
    for (std::size_t c = 0; c < v.size(); ++c) {
      const auto& t = cal.per_ce[c];
      v.set_threshold(static_cast<CeId>(c), t.threshold);
      std::cout << v[static_cast<CeId>(c)].name << "  threshold " << fmt(t.threshold, 6)
                << "  tpr " << fmt(t.tpr) << "  fpr " << fmt(t.fpr)
                << (t.fallback ? "  (single class, default kept)" : "") << '\n';
    }
    write_text(out, format_vocabulary(v));
    if (!report.empty()) write_text(report, stamped(cal.to_json(v.names())));
  }
};

// ------------------------------------------------------------ monitor

struct MonitorCmd {
  RuleInputs in;
  MonitorOptions mo;
  std::string model, input = "-", format;
  bool probs_only = false;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("monitor", "run rules over a token stream, print fire records");
    in.add(c, true);
    mo.add(c);
    c->add_option("--model", model, "detector model (.cedm)");
    c->add_option("--input", input, "trace file or - for stdin");
    c->add_option("--format", format, "input format: gat, gatl or probs (default: by extension)")
        ->check(CLI::IsMember({"gat", "gatl", "probs"}));
    c->add_flag("--probs-only", probs_only, "input is a probability stream; no detector");
    c->callback([this] { code = run(); });
  }

  int code = kExitOk;

  std::string input_format() const {
    if (!format.empty()) return format;
    if (probs_only) return "probs";
    const auto ext = fs::path(input).extension().string();
    if (ext == ".gatl") return "gatl";
    if (ext == ".jsonl") return "probs";
    return "gat";
  }

  /// Feeds one token; returns true when the stream must stop.
  bool feed(MonitorState& state, std::uint64_t pos, std::span<const float> p,
            const std::string& text) {
    auto res = state.ingest(pos, p, text);
    for (const auto& rec : res.fired) std::cout << fire_record_json(rec) << '\n';
    if (res.directive == Directive::kOverride) {
      std::cout << json({{"override", res.override_text}, {"position", pos}}).dump() << '\n';
    }
    std::cout.flush();
    if (res.directive == Directive::kStop) {
      std::string rule;
      for (const auto& rec : res.fired) {
        if (rec.action.kind == ActionKind::kStop) {
          rule = rec.rule;
          break;
        }
      }
      std::cout << json({{"stopped_at", pos}, {"rule", rule}}).dump() << '\n';
      std::cerr << "stopped by rule " << rule << " at token " << pos << '\n';
      return true;
    }
    return false;
  }

  int run() {
    auto rules = in.load();
    auto cfg = mo.build(rules.vocabulary);
    MonitorState state(rules, cfg);
    const auto fmt_name = input_format();
    std::ifstream file;
    std::istream* src = &std::cin;
    if (input != "-") {
      file.open(input, fmt_name == "gat" ? std::ios::binary : std::ios::in);
      if (!file) throw Error(Errc::kIo, "cannot open " + input);
      src = &file;
    }

    if (fmt_name == "probs") {
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(*src, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line.find("\"format\"") != std::string::npos) continue;  // stream header
        auto f = parse_probability_line(line, line_no);
        if (feed(state, f.position, f.p, f.text)) return kExitStopped;
      }
      return kExitOk;
    }

    if (model.empty()) throw Error(Errc::kInvalidConfig, "--model is required unless --probs-only");
    auto m = load_model(model);
    check_model_vocab(m, rules.vocabulary);
    StreamingDetector det(m);
    if (fmt_name == "gatl") {
      auto trace = read_trace_text(*src);
      for (const auto& t : trace.tokens) {
        if (feed(state, t.position, det.step(t.values), t.text)) return kExitStopped;
      }
      return kExitOk;
    }
    TraceReader reader(*src);
    while (auto t = reader.next()) {
      if (feed(state, t->position, det.step(t->values), t->text)) return kExitStopped;
    }
    return kExitOk;
  }
};

// ------------------------------------------------------------ eval

struct EvalCmd {
  RuleInputs in;
  MonitorOptions mo;
  std::string model, traces, out, csv, roc;
  bool probs_only = false;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "dialogue-level TPR/FPR/b-ACC/F1/AUC over a corpus");
    in.add(c, true);
    mo.add(c);
    c->add_option("--model", model, "detector model (.cedm)");
    c->add_option("--traces", traces, "corpus directory")->required()->check(CLI::ExistingDirectory);
    c->add_flag("--probs-only", probs_only, "corpus holds probability streams (*.jsonl)");
    c->add_option("--out", out, "JSON report");
    c->add_option("--csv", csv, "per-category CSV");
    c->add_option("--roc", roc, "overall ROC points as CSV");
    c->callback([this] { run(); });
  }

  void run() {
    auto rules = in.load();
    auto cfg = mo.build(rules.vocabulary);
    EvalReport rep;
    if (probs_only) {
      std::vector<ProbabilityTrace> corpus;
      for (const auto& f : probability_files(traces)) corpus.push_back(load_probability_trace(f));
      rep = evaluate_probabilities(rules, cfg, corpus);
    } else {
      if (model.empty()) throw Error(Errc::kInvalidConfig, "--model is required unless --probs-only");
      auto m = load_model(model);
      check_model_vocab(m, rules.vocabulary);
      auto corpus = load_trace_dir(traces);
      rep = eval_corpus(rules, m, cfg, corpus);
    }
    std::cout << "mode " << score_mode_name(rep.mode) << ", window "
              << (rep.window ? std::to_string(*rep.window) : std::string("unbounded")) << ", "
              << rep.positives << " positive / " << rep.negatives << " negative traces\n";
    std::printf("%-20s %7s %7s %7s %7s %7s\n", "category", "TPR", "FPR", "b-ACC", "F1", "AUC");
    auto row = [](const CategoryMetrics& m) {
      std::printf("%-20s %7.4f %7.4f %7.4f %7.4f %7s\n", m.category.c_str(), m.tpr, m.fpr,
                  m.balanced_accuracy, m.f1, m.auc ? fmt(*m.auc).c_str() : "-");
    };
    for (const auto& c : rep.categories) row(c);
    row(rep.overall);
    std::printf("co-occurrence: %zu of %zu positive traces (%.4f)\n", rep.cooccurrence_traces,
                rep.positives, rep.cooccurrence_fraction);
    std::fflush(stdout);
    if (!out.empty()) write_text(out, stamped(rep.to_json()));
    if (!csv.empty()) write_text(csv, rep.to_csv());
    if (!roc.empty()) write_text(roc, rep.roc_csv());
  }
};

// ------------------------------------------------------------ bench

struct BenchCmd {
  RuleInputs in;
  MonitorOptions mo;
  std::string model, trace, out;
  std::size_t dim = 512, hidden = 256, layers = 3, tokens = 256;
  LatencyConfig lc;
  bool monitor_only = false;

  void setup(CLI::App& app, std::uint64_t& seed) {
    auto* c = app.add_subcommand("bench", "per-token latency of the monitor and detector");
    in.add(c, true);
    mo.add(c);
    c->add_option("--model", model, "detector model; default is a random one of --dim/--hidden");
    c->add_option("--trace", trace, "activation trace; default is random tokens");
    c->add_option("--dim", dim)->check(CLI::PositiveNumber);
    c->add_option("--hidden", hidden)->check(CLI::PositiveNumber);
    c->add_option("--layers", layers)->check(CLI::PositiveNumber);
    c->add_option("--tokens", tokens)->check(CLI::PositiveNumber);
    c->add_option("--repetitions", lc.repetitions);
    c->add_option("--warmup", lc.warmup);
    c->add_flag("--monitor-only", monitor_only);
    c->add_option("--out", out, "JSON results");
    c->callback([this, &seed] { run(seed); });
  }

  void run(std::uint64_t seed) {
    auto rules = in.load();
    auto cfg = mo.build(rules.vocabulary);
    const std::size_t k = rules.vocabulary.size();
    Rng rng(seed);

    DetectorModel m;
    ConversationTrace t;
    if (!model.empty()) {
      m = load_model(model);
      check_model_vocab(m, rules.vocabulary);
    } else {
      m = DetectorModel({dim, layers, hidden, k, kDefaultSegmentLength}, rules.vocabulary.names());
      init_uniform(m, seed);
    }
    if (!trace.empty()) {
      t = load_trace(trace);
    } else {
      t.config = synth::synthetic_config(m.arch().input_dim);
      for (std::size_t i = 0; i < tokens; ++i) {
        TokenActivation a;
        a.position = i;
        a.text = "tok" + std::to_string(i);
        for (std::size_t d = 0; d < m.arch().input_dim; ++d) {
          a.values.push_back(static_cast<float>(standard_normal(rng)));
        }
        t.tokens.push_back(std::move(a));
      }
    }
    // Monitor-only input: mostly low probabilities with occasional hits.
    ProbabilityTrace probs;
    for (const auto& tok : t.tokens) {
      ProbabilityFrame f{tok.position, tok.text, {}};
      for (std::size_t c = 0; c < k; ++c) {
        const double u = uniform01(rng);
        f.p.push_back(static_cast<float>(u * u * u * u));
      }
      probs.frames.push_back(std::move(f));
    }

    json results = json::array();
    auto mon = bench_latency(rules, cfg, probs, lc);
    std::printf("monitor only      : %.3f +- %.3f us/token (%zu tokens x %zu reps)\n", mon.mean_us,
                mon.stddev_us, mon.tokens, mon.repetitions);
    results.push_back(json::parse(mon.to_json()));
    if (!monitor_only) {
      auto full = bench_latency(m, rules, cfg, t, lc);
      std::printf("detector + monitor: %.3f +- %.3f us/token (D=%zu, hidden=%zu, layers=%zu, K=%zu)\n",
                  full.mean_us, full.stddev_us, m.arch().input_dim, m.arch().hidden,
                  m.arch().num_layers, k);
      auto j = json::parse(full.to_json());
      j["input_dim"] = m.arch().input_dim;
      j["hidden"] = m.arch().hidden;
      j["num_layers"] = m.arch().num_layers;
      j["num_labels"] = k;
      results.push_back(j);
    }
    std::fflush(stdout);
    if (!out.empty()) write_text(out, stamped(json({{"results", results}}).dump(2)));
  }
};

// ------------------------------------------------------------ report

struct ReportCmd {
  RuleInputs in;
  MonitorOptions mo;
  std::string model, trace, csv;
  bool all_ces = false;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("report", "per-token CE probability table for one trace");
    in.add(c, false);
    mo.add(c);
    c->add_option("--model", model)->required()->check(CLI::ExistingFile);
    c->add_option("--trace", trace)->required()->check(CLI::ExistingFile);
    c->add_option("--csv", csv, "also write the full table as CSV");
    c->add_flag("--all-ces", all_ces, "show every CE, not only those reaching threshold");
    c->callback([this] { run(); });
  }

  void run() {
    auto vocab = in.load_vocab();
    std::optional<RuleSet> rules;
    if (!in.rules.empty()) rules = in.load();
    auto cfg = mo.build(vocab);
    auto m = load_model(model);
    check_model_vocab(m, vocab);
    auto t = load_trace(trace);
    auto probs = detect_trace(m, t);
    const std::size_t k = vocab.size();

    // Fires per position, when a ruleset is given.
    std::map<std::uint64_t, std::vector<std::string>> fires;
    if (rules) {
      cfg.halt_on_stop = false;
      MonitorState state(*rules, cfg);
      for (const auto& f : probs.frames) {
        for (const auto& rec : state.ingest(f.position, f.p, f.text).fired) {
          fires[f.position].push_back(rec.rule + "(" + std::string(action_keyword(rec.action.kind)) +
                                      ", S_R=" + fmt(rec.confidence, 3) + ")");
        }
      }
    }

    std::vector<std::size_t> shown;
    for (std::size_t c = 0; c < k; ++c) {
      bool hit = all_ces;
      for (const auto& f : probs.frames) hit = hit || f.p[c] >= cfg.thresholds[c];
      if (hit) shown.push_back(c);
    }
    std::printf("%6s  %-16s", "t", "text");
    for (auto c : shown) std::printf(" %12.12s", vocab[static_cast<CeId>(c)].name.c_str());
    std::printf("  fired\n");
    for (const auto& f : probs.frames) {
      std::printf("%6llu  %-16.16s", static_cast<unsigned long long>(f.position), f.text.c_str());
      for (auto c : shown) {
        std::printf(" %11.4f%c", f.p[c], f.p[c] >= cfg.thresholds[c] ? '*' : ' ');
      }
      std::string fired;
      if (auto it = fires.find(f.position); it != fires.end()) {
        for (const auto& s : it->second) fired += (fired.empty() ? "" : " ") + s;
      }
      std::printf("  %s\n", fired.c_str());
    }
    std::fflush(stdout);
    if (!csv.empty()) {
      std::ostringstream s;
      s << "t,text";
      for (std::size_t c = 0; c < k; ++c) s << ',' << vocab[static_cast<CeId>(c)].name;
      s << ",fired\n";
      for (const auto& f : probs.frames) {
        std::string text = f.text;
        std::replace(text.begin(), text.end(), ',', ' ');
        std::replace(text.begin(), text.end(), '"', '\'');
        s << f.position << ',' << text;
        for (float p : f.p) s << ',' << p;
        s << ',';
        if (auto it = fires.find(f.position); it != fires.end()) {
          for (std::size_t i = 0; i < it->second.size(); ++i) s << (i ? ";" : "") << it->second[i];
        }
        s << '\n';
      }
      write_text(csv, s.str());
    }
  }
};

// ------------------------------------------------------------ synth

struct SynthCmd {
  std::string out, rules, vocab;
  std::size_t ces = 4, dim = 32, per_ce = 300, background = 300, segment_len = kDefaultSegmentLength;
  double separation = 6.0;
  synth::CorpusSpec spec;
  bool probs = false, trace_level_only = false;
  std::string vocab_out;

  void setup(CLI::App& app, std::uint64_t& seed) {
    auto* s = app.add_subcommand("synth", "generate synthetic Gaussian-cluster data");
    s->require_subcommand(1);

    auto* e = s->add_subcommand("excitation", "labelled excitation dataset");
    e->add_option("--out", out, "dataset directory")->required();
    e->add_option("--ces", ces)->check(CLI::PositiveNumber);
    e->add_option("--dim", dim)->check(CLI::PositiveNumber);
    e->add_option("--separation", separation);
    e->add_option("--per-ce", per_ce, "segments per CE")->check(CLI::PositiveNumber);
    e->add_option("--background", background, "background segments");
    e->add_option("--segment-len", segment_len)->check(CLI::PositiveNumber);
    e->add_option("--vocab-out", vocab_out, "also write the synthetic vocabulary here");
    e->callback([this, &seed] { run_excitation(seed); });

    auto* c = s->add_subcommand("corpus", "planted-violation and benign traces for a ruleset");
    c->add_option("--out", out, "corpus directory")->required();
    c->add_option("--rules", rules)->required()->check(CLI::ExistingFile);
    c->add_option("--vocab", vocab)->required()->check(CLI::ExistingFile);
    c->add_option("--dim", dim)->check(CLI::PositiveNumber);
    c->add_option("--separation", separation);
    c->add_option("--positives", spec.positives);
    c->add_option("--negatives", spec.negatives);
    c->add_option("--length", spec.length)->check(CLI::PositiveNumber);
    c->add_option("--run-length", spec.run_length)->check(CLI::PositiveNumber);
    c->add_option("--overlap-rate", spec.overlap_rate)->check(CLI::Range(0.0, 1.0));
    c->add_flag("--probs", probs, "write probability streams (*.jsonl) instead of activations");
    c->callback([this, &seed] { run_corpus(seed); });
  }

  void run_excitation(std::uint64_t seed) {
    synth::ClusterSpace space{dim, ces, separation, 1.0};
    auto v = synth::synthetic_vocabulary(ces);
    auto segs = synth::excitation_dataset(space, per_ce, segment_len, seed, background);
    // One trace per segment keeps the on-disk layout of a real dataset.
    std::map<CeId, std::vector<ConversationTrace>> by_ce;
    for (const auto& s : segs) {
      ConversationTrace t;
      t.config = synth::synthetic_config(dim);
      for (std::size_t i = 0; i < s.valid; ++i) {
        auto row = s.row(i);
        t.tokens.push_back({std::vector<float>(row.begin(), row.end()), "", i, {}});
      }
      by_ce[s.label].push_back(std::move(t));
    }
    fs::create_directories(out);
    for (const auto& [ce, traces] : by_ce) save_excitation_traces(out, v, ce, traces);
    if (!vocab_out.empty()) write_text(vocab_out, format_vocabulary(v));
    std::cout << segs.size() << " segments written to " << out << '\n';
  }

  void run_corpus(std::uint64_t seed) {
    auto set = load_ruleset_files(rules, vocab);
    synth::ClusterSpace space{dim, set.vocabulary.size(), separation, 1.0};
    spec.seed = seed;
    auto corpus = synth::make_rule_corpus(space, set, spec);
    fs::create_directories(out);
    Rng rng(seed ^ 0x5851f42d4c957f2dull);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      char name[32];
      if (probs) {
        std::snprintf(name, sizeof(name), "%05zu.jsonl", i);
        save_probability_trace(fs::path(out) / name, synth::label_probabilities(corpus[i], rng));
      } else {
        std::snprintf(name, sizeof(name), "%05zu.gat", i);
        save_trace(fs::path(out) / name, corpus[i]);
      }
    }
    std::cout << corpus.size() << " traces written to " << out << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cerule: rule-based activation-safety engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config with defaults, one [section] per subcommand")
      ->envname("CERULE_CONFIG");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every random choice")->envname("CERULE_SEED");
  app.add_flag("--no-timestamp", g_no_timestamp, "omit generated_at from JSON outputs");

  CompileCmd compile;
  TrainCmd train_cmd;
  CalibrateCmd calibrate;
  MonitorCmd monitor;
  EvalCmd eval;
  BenchCmd bench;
  ReportCmd report;
  SynthCmd synth_cmd;
  compile.setup(app);
  train_cmd.setup(app, seed);
  calibrate.setup(app);
  monitor.setup(app);
  eval.setup(app);
  bench.setup(app, seed);
  report.setup(app);
  synth_cmd.setup(app, seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  } catch (const RuleSetError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << g_rules_path << ':' << d.to_string() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return monitor.code;
}
