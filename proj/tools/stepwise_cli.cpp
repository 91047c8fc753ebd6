// stepwise: search, explore, tacticset, postprocess and viz commands.
//
// Every option can also come from the environment (STEPWISE_<NAME>, dashes
// become underscores) or from a JSON config file given with --config, in a
// section named after the command. Precedence: flag > env > file > default.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stepwise/stepwise.hpp"

#ifndef STEPWISE_VERSION
#define STEPWISE_VERSION "dev"
#endif

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;
namespace sw = stepwise;

constexpr int kExitInfra = 2;

struct UsageError : sw::Error {
  using sw::Error::Error;
};

// ---- layered settings ------------------------------------------------------

class Settings {
public:
  Settings(CLI::App* cmd, std::string section) : cmd_(cmd), section_(std::move(section)) {}

  void add(const std::string& key, std::string def, const std::string& help, std::size_t max_tokens = 1) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->def = std::move(def);
    e->opt = cmd_->add_option("--" + key, e->raw, help);
    if (max_tokens > 1) e->opt->expected(1, static_cast<int>(max_tokens));
    entries_.push_back(std::move(e));
  }

  void add_flag(const std::string& key, const std::string& help) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->def = "false";
    e->is_flag = true;
    e->opt = cmd_->add_flag("--" + key, e->flag, help);
    entries_.push_back(std::move(e));
  }

  void resolve(const json& config) {
    const json* section = nullptr;
    if (config.is_object() && config.contains(section_)) {
      section = &config[section_];
      if (!section->is_object()) throw UsageError("config section '" + section_ + "' must be an object");
      for (const auto& [k, v] : section->items()) {
        if (!find(k)) throw UsageError("unknown key '" + k + "' in config section '" + section_ + "'");
      }
    }
    for (auto& e : entries_) {
      if (e->opt->count() > 0) {
        e->value = e->is_flag ? "true" : join(e->raw);
        e->source = "flag";
      } else if (const char* env = std::getenv(env_name(e->key).c_str())) {
        e->value = env;
        e->source = "env";
      } else if (section && section->contains(e->key)) {
        e->value = scalar((*section)[e->key]);
        e->source = "file";
      } else {
        e->value = e->def;
        e->source = "default";
      }
    }
  }

  const std::string& str(const std::string& key) const { return get(key).value; }

  bool has(const std::string& key) const { return !str(key).empty(); }

  std::string required(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required");
    return str(key);
  }

  double num(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (v.empty() || used != v.size()) throw UsageError("--" + key + ": '" + v + "' is not a number");
    return out;
  }

  std::size_t count(const std::string& key) const {
    const double v = num(key);
    if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
      throw UsageError("--" + key + ": '" + str(key) + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key) const {
    std::string v = str(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v.empty() || v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("--" + key + ": '" + str(key) + "' is not a boolean");
  }

  sw::Millis seconds(const std::string& key) const {
    const double s = num(key);
    if (!(s > 0)) throw UsageError("--" + key + " must be positive");
    return sw::Millis(static_cast<std::int64_t>(s * 1000.0 + 0.5));
  }

  ordered_json dump() const {
    ordered_json out;
    for (const auto& e : entries_) out[e->key] = {{"value", e->value}, {"source", e->source}};
    return out;
  }

  static std::string env_name(const std::string& key) {
    std::string out = "STEPWISE_";
    for (char c : key) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
  }

private:
  struct Entry {
    std::string key;
    std::string def;
    std::vector<std::string> raw;
    bool flag = false;
    bool is_flag = false;
    CLI::Option* opt = nullptr;
    std::string value;
    std::string source;
  };

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_)
      if (e->key == key) return e.get();
    return nullptr;
  }

  const Entry& get(const std::string& key) const {
    if (const Entry* e = find(key)) return *e;
    throw std::logic_error("unregistered setting " + key);
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
      if (!out.empty()) out.push_back(' ');
      out += p;
    }
    return out;
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    if (v.is_array()) {
      std::vector<std::string> parts;
      for (const auto& x : v) parts.push_back(scalar(x));
      return join(parts);
    }
    return v.dump();
  }

  CLI::App* cmd_;
  std::string section_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

// ---- inputs and outputs ----------------------------------------------------

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sw::FormatError("cannot open '" + path + "'");
  return in;
}

class Output {
public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    file_.open(path, std::ios::out | std::ios::trunc);
    if (!file_) throw sw::FormatError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void line(const std::string& s) {
    stream() << s << '\n';
    stream().flush();
    if (!stream()) throw sw::Error("write failed");
  }

private:
  std::ofstream file_;
};

std::vector<sw::TheoremSpec> read_corpus(const std::string& path) { return sw::read_corpus(path); }

// Lines of a text file, or the "statement"/"step" field of JSONL records.
std::vector<std::string> read_texts(const std::string& path, const char* field) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (sw::trim(line).empty()) continue;
    if (line.front() == '{') {
      try {
        const auto j = json::parse(line);
        if (j.contains("meta")) continue;
        if (j.contains(field) && j[field].is_string()) {
          out.push_back(j[field].get<std::string>());
          continue;
        }
      } catch (const json::exception&) {
      }
    }
    out.push_back(line);
  }
  return out;
}

sw::ProverFactory make_prover_factory(const std::string& spec) {
  if (spec == "toy") return [] { return std::make_unique<sw::toy::ToyProver>(); };
  if (spec.rfind("external:", 0) == 0) {
    const std::string cmd = spec.substr(9);
    if (cmd.empty()) throw UsageError("external prover needs a command");
    return [cmd] { return std::make_unique<sw::ExternalProver>(std::make_unique<sw::ProcessChannel>(cmd)); };
  }
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) throw UsageError("tcp prover needs HOST:PORT");
    const std::string host = rest.substr(0, colon), port = rest.substr(colon + 1);
    return [host, port] {
      return std::make_unique<sw::ExternalProver>(std::make_unique<sw::TcpChannel>(host, port));
    };
  }
  throw UsageError("unknown prover '" + spec + "' (toy | external:CMD | tcp:HOST:PORT)");
}

std::unique_ptr<sw::PolicyBackend> make_policy(const std::string& spec) {
  if (spec.empty()) throw UsageError("--policy is required (scripted:FILE | remote:URL | toy-exhaustive)");
  if (spec == "toy-exhaustive") return std::make_unique<sw::toy::ExhaustivePolicy>();
  if (spec.rfind("toy-exhaustive:", 0) == 0) {
    const std::string arg = spec.substr(15);
    std::size_t used = 0;
    double noise = -1.0;
    try {
      noise = std::stod(arg, &used);
    } catch (const std::exception&) {
    }
    if (used != arg.size() || noise < 0.0) throw UsageError("toy-exhaustive:NOISE needs a non-negative number");
    return std::make_unique<sw::toy::ExhaustivePolicy>(-1.0, -30.0, noise);
  }
  if (spec.rfind("scripted:", 0) == 0)
    return std::make_unique<sw::ScriptedPolicy>(sw::ScriptedPolicy::from_file(spec.substr(9)));
  if (spec.rfind("remote:", 0) == 0) {
    sw::RemotePolicy::Options o;
    std::string url = spec.substr(7);
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
      o.path = url.substr(slash);
      url.resize(slash);
    }
    o.base_url = url;
    return std::make_unique<sw::RemotePolicy>(o);
  }
  throw UsageError("unknown policy '" + spec + "'");
}

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  return out.empty() ? "theorem" : out;
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---- commands ----------------------------------------------------------------

// Config errors surface as usage errors.
template <class F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const sw::Error& e) {
    throw UsageError(e.what());
  }
}

int run_search(const Settings& s) {
  sw::SearchConfig cfg;
  cfg.schedule = checked([&] { return sw::parse_beam_spec(s.str("beam")); });
  cfg.max_expansions = s.count("expansions");
  cfg.attempts = s.count("k");
  cfg.rounds = s.count("rounds");
  cfg.global_timeout = s.seconds("global-timeout");
  cfg.step_timeout = s.seconds("step-timeout");
  cfg.error_abort_fraction = s.num("error-abort");
  const std::string scorer = s.str("scorer");
  if (scorer == "path-sum") cfg.scorer = sw::Scorer::PathSum;
  else if (scorer == "mean-beam") cfg.scorer = sw::Scorer::MeanBeamLogprob;
  else throw UsageError("--scorer must be path-sum or mean-beam");
  cfg.seed = s.count("seed");
  checked([&] { cfg.validate(); });

  const auto corpus = read_corpus(s.required("corpus"));
  auto policy = make_policy(s.str("policy"));
  auto factory = make_prover_factory(s.str("prover"));
  const bool timing = s.flag("timing");
  const std::string dag_dir = s.str("dag-dir");
  if (!dag_dir.empty()) fs::create_directories(dag_dir);

  Output out(s.str("out"));
  sw::EvalOptions opts;
  opts.workers = s.has("workers") ? std::max<std::size_t>(1, s.count("workers")) : default_workers();
  std::size_t errors = 0;
  std::string write_error;
  opts.on_record = [&](sw::AttemptRecord& rec) {
    try {
      out.line(sw::attempt_json(rec, timing).dump());
      if (rec.outcome == "error") {
        ++errors;
        std::cerr << "stepwise: " << rec.theorem << ": " << rec.message << "\n";
      }
      if (!dag_dir.empty() && rec.dag) {
        const fs::path p = fs::path(dag_dir) / (file_stem(rec.theorem) + ".r" + std::to_string(rec.round) + ".k" +
                                                std::to_string(rec.attempt) + ".json");
        std::ofstream f(p);
        f << sw::export_json(*rec.dag).dump(2) << '\n';
        if (!f) throw sw::Error("cannot write " + p.string());
      }
    } catch (const std::exception& e) {
      if (write_error.empty()) write_error = e.what();
    }
  };
  const auto report = sw::evaluate_pass_at_k(corpus, *policy, factory, cfg, opts);
  if (!write_error.empty()) throw sw::Error(write_error);
  out.line(sw::aggregate_json(report, cfg).dump());
  std::cerr << "pass rate " << sw::format_rate(report.mean, report.stddev) << " over " << report.rounds
            << " round(s)\n";
  return errors == report.records.size() ? kExitInfra : 0;
}

sw::TacticSet load_tactics(const std::string& path) {
  if (path.empty()) return sw::toy::default_tactic_set();
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    const auto j = json::parse(text);
    double p = 1.0;
    if (j.contains("meta")) p = j["meta"].value("p", 1.0);
    return sw::TacticSet(j.at("tactics").get<std::vector<std::string>>(), {path, p});
  } catch (const json::exception&) {
  }
  std::vector<std::string> tactics;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (!sw::trim(line).empty()) tactics.push_back(line);
  return sw::TacticSet(tactics, {path, 1.0});
}

int run_explore(const Settings& s) {
  sw::ExploreConfig cfg;
  cfg.beam = s.count("beam");
  cfg.alpha = s.num("alpha");
  if (s.has("beta")) cfg.beta = s.count("beta");
  cfg.gamma = s.num("gamma");
  cfg.budget = s.count("budget");
  cfg.seed = s.count("seed");
  cfg.step_timeout = s.seconds("step-timeout");
  checked([&] { cfg.validate(); });

  const auto seeds = read_corpus(s.required("seeds"));
  const sw::TacticSet tactics = load_tactics(s.str("tactics"));
  auto policy = make_policy(s.str("policy"));
  auto factory = make_prover_factory(s.str("prover"));
  const std::size_t workers =
      std::min(seeds.size(), s.has("workers") ? std::max<std::size_t>(1, s.count("workers")) : default_workers());

  Output out(s.str("out"));
  ordered_json meta;
  meta["alpha"] = cfg.alpha;
  meta["beta"] = cfg.resolved_beta();
  meta["gamma"] = cfg.gamma;
  meta["B"] = cfg.beam;
  meta["p"] = tactics.provenance().threshold;
  meta["bleu_threshold"] = nullptr;
  meta["seed"] = cfg.seed;
  meta["budget"] = cfg.budget;
  meta["tactics"] = tactics.tactics();
  meta["tool_version"] = STEPWISE_VERSION;
  out.line(ordered_json{{"meta", meta}}.dump());

  // Seeds run concurrently; output stays in seed order.
  std::vector<std::optional<sw::ExploreResult>> results(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::vector<char> done(seeds.size(), 0);
  std::size_t flushed = 0, failed = 0, transitions = 0;
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::string write_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        auto prover = factory();
        results[i] = sw::explore_theorem(seeds[i], *policy, *prover, cfg, tactics);
      } catch (const sw::Error& e) {
        failures[i] = e.what();
      }
      std::lock_guard lock(mu);
      done[i] = 1;
      for (; flushed < seeds.size() && done[flushed]; ++flushed) {
        try {
          if (results[flushed]) {
            for (const auto& t : results[flushed]->transitions) out.line(sw::transition_json(t).dump());
            transitions += results[flushed]->transitions.size();
            results[flushed].reset();
          } else {
            ++failed;
            std::cerr << "stepwise: " << seeds[flushed].name << ": " << failures[flushed] << "\n";
          }
        } catch (const std::exception& e) {
          if (write_error.empty()) write_error = e.what();
        }
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (!write_error.empty()) throw sw::Error(write_error);
  std::cerr << transitions << " transitions from " << seeds.size() - failed << "/" << seeds.size() << " seeds\n";
  return failed == seeds.size() ? kExitInfra : 0;
}

int run_tacticset(const Settings& s) {
  const double p = s.num("p");
  const std::string in = s.required("in");
  const auto steps = read_texts(in, "step");
  if (steps.empty()) throw sw::FormatError("step corpus '" + in + "' is empty");
  sw::TacticSetReport report;
  const auto set = sw::build_tactic_set(steps, p, &report, in);
  ordered_json j;
  j["meta"] = {{"p", p}, {"source", in}, {"tool_version", STEPWISE_VERSION}};
  j["tactics"] = set.tactics();
  ordered_json counts = ordered_json::array();
  for (const auto& [t, n] : report.counts) counts.push_back({{"tactic", t}, {"count", n}});
  j["counts"] = counts;
  j["total"] = report.total;
  j["skipped"] = report.skipped;
  Output out(s.str("out"));
  out.line(j.dump(2));
  std::cerr << set.size() << " of " << report.counts.size() << " tactics kept; " << report.skipped
            << " unparseable steps skipped\n";
  return 0;
}

int run_postprocess(const Settings& s) {
  const std::string in_path = s.required("in");
  const double threshold = s.num("bleu-threshold");
  auto in = open_in(in_path);
  ordered_json meta = ordered_json::object();
  std::vector<sw::Transition> transitions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (sw::trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      if (j.contains("meta")) {
        if (meta.empty()) meta = j["meta"];
        continue;
      }
      transitions.push_back(sw::transition_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw sw::FormatError(in_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<std::string> benchmark;
  if (s.has("benchmark")) benchmark = read_texts(s.str("benchmark"), "statement");

  auto factory = make_prover_factory(s.str("prover"));
  auto prover = factory();
  const auto res = sw::curate(transitions, benchmark, threshold, *prover, s.seconds("step-timeout"));

  meta["bleu_threshold"] = threshold;
  meta["stages"] = {{"input", res.counts.input},
                    {"dedup", res.counts.after_dedup},
                    {"decontaminate", res.counts.after_decontamination},
                    {"reject_invalid", res.counts.after_rejection}};
  meta["tool_version"] = STEPWISE_VERSION;
  Output out(s.str("out"));
  out.line(ordered_json{{"meta", meta}}.dump());
  for (const auto& t : res.records) out.line(sw::training_record(t).dump());

  if (s.has("report")) {
    ordered_json rep;
    rep["stages"] = meta["stages"];
    ordered_json removed = ordered_json::array();
    for (const auto& r : res.decontamination.report)
      removed.push_back({{"index", r.index}, {"field", r.field}, {"benchmark", r.benchmark}, {"bleu", r.score}});
    rep["decontamination"] = removed;
    rep["rejection"] = {{"flagged_invalid", res.rejection.flagged_invalid},
                        {"mismatched", res.rejection.mismatched},
                        {"infrastructure", res.rejection.infrastructure},
                        {"reasons", res.rejection.reasons}};
    Output r(s.str("report"));
    r.line(rep.dump(2));
  }
  std::cerr << res.counts.input << " -> " << res.counts.after_dedup << " (dedup) -> "
            << res.counts.after_decontamination << " (decontaminate) -> " << res.counts.after_rejection
            << " (reject_invalid)\n";
  return 0;
}

int run_viz(const Settings& s) {
  const std::string in_path = s.required("in");
  auto in = open_in(in_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw sw::FormatError(in_path + ": " + e.what());
  }
  const std::string format = s.str("format");
  Output out(s.str("out"));
  if (format == "dot") {
    out.stream() << sw::export_dot(sw::import_json(doc), fs::path(in_path).stem().string());
  } else if (format == "html") {
    out.stream() << sw::render_html(doc, fs::path(in_path).stem().string());
  } else if (format == "json") {
    out.line(sw::export_json(sw::import_json(doc)).dump(2));
  } else {
    throw UsageError("--format must be dot, html or json");
  }
  out.stream().flush();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"best-first proof search, proof-state exploration and dataset curation"};
  app.require_subcommand(1);
  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file; one section per command");
  app.add_flag("--print-config", print_config, "print the resolved settings and exit");
  app.set_version_flag("--version", STEPWISE_VERSION);

  auto* search = app.add_subcommand("search", "pass@k evaluation of best-first search over a corpus");
  Settings ss(search, "search");
  ss.add("corpus", "", "theorem corpus (JSONL: name, statement)");
  ss.add("out", "-", "report path (JSONL), - for stdout");
  ss.add("beam", "fixed 8", "fixed N | adaptive BMAX,BMIN,LAMBDA | top-p P (top-p may follow a base)", 4);
  ss.add("expansions", "600", "expansion budget E per search");
  ss.add("k", "1", "searches per theorem (pass@k)");
  ss.add("rounds", "3", "evaluation rounds for mean and standard deviation");
  ss.add("global-timeout", "1800", "per-search wall clock limit, seconds");
  ss.add("step-timeout", "20", "per-step limit, seconds");
  ss.add("error-abort", "0.5", "discard a node once its error children exceed this fraction of the beam");
  ss.add("scorer", "path-sum", "path-sum | mean-beam");
  ss.add("policy", "", "scripted:FILE | remote:URL | toy-exhaustive[:NOISE]");
  ss.add("prover", "toy", "toy | external:CMD | tcp:HOST:PORT");
  ss.add("seed", "0", "base seed");
  ss.add("dag-dir", "", "write every search DAG as JSON into this directory");
  ss.add("workers", "", "concurrent searches (default: core count)");
  ss.add_flag("timing", "record wall-clock times in the report");

  auto* explore = app.add_subcommand("explore", "proof-state exploration of seed theorems");
  Settings es(explore, "explore");
  es.add("seeds", "", "seed corpus (JSONL: name, statement)");
  es.add("out", "-", "transition dump (JSONL), - for stdout");
  es.add("beam", "32", "tactics decoded per expansion");
  es.add("alpha", "0.25", "fraction of the beam kept as new branches");
  es.add("beta", "", "branches kept by probability (default ceil(alpha*B/2))");
  es.add("gamma", "0.9", "budget decay after an expansion finding a new proof");
  es.add("budget", "100", "expansions per seed");
  es.add("tactics", "", "tactic set file (tacticset output or one tactic per line)");
  es.add("policy", "", "scripted:FILE | remote:URL | toy-exhaustive[:NOISE]");
  es.add("prover", "toy", "toy | external:CMD | tcp:HOST:PORT");
  es.add("seed", "0", "seed");
  es.add("step-timeout", "20", "per-step limit, seconds");
  es.add("workers", "", "concurrent seeds (default: core count)");

  auto* tacticset = app.add_subcommand("tacticset", "frequency-truncated tactic set from a step corpus");
  Settings ts(tacticset, "tacticset");
  ts.add("in", "", "step corpus: one step per line, or JSONL with a step field");
  ts.add("out", "-", "output path");
  ts.add("p", "0.999", "cumulative frequency threshold");

  auto* post = app.add_subcommand("postprocess", "dedup, decontaminate and reject invalid transitions");
  Settings ps(post, "postprocess");
  ps.add("in", "", "transition dump from explore");
  ps.add("out", "-", "training records (JSONL)");
  ps.add("benchmark", "", "benchmark statements (JSONL with statement, or plain lines)");
  ps.add("bleu-threshold", "0.8", "remove transitions at or above this BLEU against a benchmark statement");
  ps.add("prover", "toy", "toy | external:CMD | tcp:HOST:PORT");
  ps.add("step-timeout", "20", "per-step limit for replay, seconds");
  ps.add("report", "", "write a stage report (JSON) here");

  auto* viz = app.add_subcommand("viz", "render a search DAG");
  Settings vs(viz, "viz");
  vs.add("in", "", "DAG JSON written by search --dag-dir");
  vs.add("out", "-", "output path");
  vs.add("format", "dot", "dot | html | json");

  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<CLI::App*, Settings*>> commands{
      {search, &ss}, {explore, &es}, {tacticset, &ts}, {post, &ps}, {viz, &vs}};
  try {
    json config = json::object();
    if (config_path.empty())
      if (const char* env = std::getenv("STEPWISE_CONFIG")) config_path = env;
    if (!config_path.empty()) {
      auto in = open_in(config_path);
      try {
        config = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError("config '" + config_path + "': " + e.what());
      }
    }
    for (auto [cmd, settings] : commands) {
      if (!cmd->parsed()) continue;
      settings->resolve(config);
      if (print_config) {
        std::cout << settings->dump().dump(2) << '\n';
        return 0;
      }
      if (cmd == search) return run_search(*settings);
      if (cmd == explore) return run_explore(*settings);
      if (cmd == tacticset) return run_tacticset(*settings);
      if (cmd == post) return run_postprocess(*settings);
      return run_viz(*settings);
    }
  } catch (const UsageError& e) {
    std::cerr << "stepwise: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "stepwise: " << e.what() << "\n";
    return kExitInfra;
  }
  return 1;
}
