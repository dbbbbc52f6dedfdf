// triplet: command-line front end.
//
//   triplet complete-string abc:abd efg:efh --prompt ijk
//   triplet transform b1 a1 b2 a2 --prompt p [--docs-pair db da] [--annotations f]
//   triplet correspond --repo-a f... --repo-b g...
//   triplet dump workspace.tws
//
// Exit codes: 0 complete, 2 incomplete analogy, 1 usage or I/O error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "triplet/scenarios.hpp"
#include "triplet/search.hpp"
#include "triplet/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace triplet;

namespace {

constexpr int kComplete = 0;
constexpr int kUsage = 1;
constexpr int kIncomplete = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct Common {
  std::size_t budget = 10000;
  std::size_t locality = 0;
  std::string weights;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::string out;
  std::string trace;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--budget", budget, "Maximum rule applications")->check(CLI::PositiveNumber);
    cmd->add_option("--locality", locality, "Locality radius (0 disables)");
    cmd->add_option("--weights", weights, "JSON map relation -> weight")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Tie-break rotation seed");
    cmd->add_option("--parallel", parallel, "Worker threads for competing begins")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Write the result here instead of stdout");
    cmd->add_option("--trace", trace, "Write the search trace (JSON lines) here");
  }

  /// Validates everything that can fail before the search starts.
  SearchConfig config() const {
    SearchConfig cfg;
    cfg.budget = budget;
    cfg.locality_radius = locality;
    cfg.seed = seed;
    cfg.parallel = parallel;
    if (!weights.empty()) {
      auto j = read_json(weights);
      if (!j.is_object()) throw UsageError(weights + ": expected a JSON object");
      for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw UsageError(weights + ": weight of '" + k + "' is not a number");
        cfg.weights[k] = v.get<double>();
      }
    }
    for (const auto& p : {out, trace}) {
      if (p.empty()) continue;
      auto dir = fs::path(p).parent_path();
      if (!dir.empty() && !fs::is_directory(dir)) throw UsageError("no such directory: " + dir.string());
    }
    return cfg;
  }
};

/// Writes atomically: a temporary next to the target, then a rename.
void write_file(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o || !(o << text) || !o.flush()) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw UsageError("cannot write " + path);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw UsageError("cannot write " + path);
  }
}

/// A completion is only worth emitting if something was abstracted.
bool usable(const AnalogyResult& r) { return r.complete && !r.report.abstraction.empty(); }

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_file(c.out, text);
  }
}

void emit_trace(const Common& c, const std::vector<TraceEntry>& trace) {
  if (!c.trace.empty()) write_file(c.trace, trace_jsonl(trace));
}

int run_complete_string(const Common& c, const std::vector<std::string>& pairs, const std::string& prompt) {
  std::vector<std::pair<std::string, std::string>> examples;
  for (const auto& p : pairs) {
    auto colon = p.find(':');
    if (colon == std::string::npos || p.find(':', colon + 1) != std::string::npos)
      throw UsageError("example '" + p + "' is not of the form before:after");
    examples.emplace_back(p.substr(0, colon), p.substr(colon + 1));
  }
  if (prompt.empty()) throw UsageError("--prompt must not be empty");
  auto cfg = c.config();
  Completion r;
  try {
    r = complete(examples, prompt, cfg);
  } catch (const EncodeError& e) {
    throw UsageError(e.what());
  }
  const auto& rep = r.result.report;
  const bool ok = usable(r.result);
  json j{{"abstraction", rep.abstraction},
         {"pairs", r.pairs},
         {"completion", ok ? json(r.text) : json(nullptr)},
         {"complete", ok},
         {"missing", r.result.missing},
         {"score", rep.prompt_fit},
         {"weak", rep.weak},
         {"applications", r.result.applications},
         {"report", to_json(rep)}};
  if (!ok) j["partial"] = r.text;
  emit(c, j.dump(2) + "\n");
  emit_trace(c, r.result.trace);
  return ok ? kComplete : kIncomplete;
}

int run_transform(const Common& c, const std::vector<std::string>& files, const std::string& prompt,
                  const std::vector<std::string>& docs, const std::string& annotations) {
  if (files.empty() || files.size() % 2 != 0)
    throw UsageError("transform takes before/after file pairs: BEFORE AFTER [BEFORE AFTER ...]");
  TransformSpec spec;
  for (std::size_t i = 0; i < files.size(); i += 2)
    spec.examples.push_back({{files[i], read_file(files[i])}, {files[i + 1], read_file(files[i + 1])}});
  spec.prompt = {prompt, read_file(prompt)};
  if (!docs.empty()) spec.docs = std::make_pair(SourceFile{docs[0], read_file(docs[0])}, SourceFile{docs[1], read_file(docs[1])});
  if (!annotations.empty()) spec.annotations = read_json(annotations);
  auto cfg = c.config();
  if (spec.examples.size() == 1) std::cerr << "warning: one example pair; token choices may not generalize\n";
  TransformOutput r;
  try {
    r = transform(spec, cfg);
  } catch (const EncodeError& e) {
    throw UsageError(e.what());
  }
  const auto& rep = r.result.report;
  const bool ok = usable(r.result);
  json j{{"abstraction", rep.abstraction},
         {"pairs", r.pairs},
         {"complete", ok},
         {"missing", r.result.missing},
         {"score", rep.prompt_fit},
         {"weak", rep.weak},
         {"applications", r.result.applications},
         {"report", to_json(rep)},
         {"correspondences", r.correspondences}};
  if (c.out.empty()) {
    j["output"] = ok ? json(r.text) : json(nullptr);
  } else if (ok) {
    write_file(c.out, r.text);
    j["output_file"] = c.out;
  }
  if (!ok) j["partial"] = r.text;
  std::cout << j.dump(2) << "\n";
  emit_trace(c, r.result.trace);
  return ok ? kComplete : kIncomplete;
}

int run_correspond(const Common& c, const std::vector<std::string>& a, const std::vector<std::string>& b,
                   const std::string& annotations) {
  std::vector<SourceFile> fa, fb;
  for (const auto& p : a) fa.push_back({p, read_file(p)});
  for (const auto& p : b) fb.push_back({p, read_file(p)});
  json ann;
  if (!annotations.empty()) ann = read_json(annotations);
  auto cfg = c.config();
  CorrespondOutput r;
  try {
    r = correspond(fa, fb, ann, cfg);
  } catch (const EncodeError& e) {
    throw UsageError(e.what());
  }
  auto pairs = json::array(), nodes = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({p.a, p.b});
    nodes.push_back({p.a_node, p.b_node});
  }
  const auto& rep = r.result.report;
  json j{{"abstraction", rep.abstraction},
         {"pairs", pairs},
         {"nodes", nodes},
         {"score", rep.weighted_score},
         {"missing", 0},
         {"applications", r.result.applications},
         {"report", to_json(rep)}};
  emit(c, j.dump(2) + "\n");
  emit_trace(c, r.result.trace);
  return kComplete;
}

int run_dump(const Common& c, const std::string& path) {
  auto text = read_file(path);
  TripletStructure s;
  try {
    s = from_text(text);
  } catch (const ParseError& e) {
    throw UsageError(path + ": " + e.what());
  }
  c.config();
  emit(c, to_text(s));
  return kComplete;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analogy-making over triplet structures"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> examples, files, docs, repo_a, repo_b;
  std::string prompt, annotations, dump_path;

  auto* cs = app.add_subcommand("complete-string", "Complete a letter-string analogy");
  cs->add_option("examples", examples, "Example pairs before:after")->required();
  cs->add_option("--prompt", prompt, "String to complete")->required();
  common.add_to(cs);

  auto* tr = app.add_subcommand("transform", "Complete a source transformation from example file pairs");
  tr->add_option("files", files, "BEFORE AFTER file pairs")->required()->check(CLI::ExistingFile);
  tr->add_option("--prompt", prompt, "Before-file to transform")->required()->check(CLI::ExistingFile);
  tr->add_option("--docs-pair", docs, "Documentation before and after")->expected(2)->check(CLI::ExistingFile);
  tr->add_option("--annotations", annotations, "Annotation sidecar (JSON)")->check(CLI::ExistingFile);
  common.add_to(tr);

  auto* co = app.add_subcommand("correspond", "Map the tokens of two file sets onto each other");
  co->add_option("--repo-a,-a", repo_a, "Files of the first set")->required()->check(CLI::ExistingFile);
  co->add_option("--repo-b,-b", repo_b, "Files of the second set")->required()->check(CLI::ExistingFile);
  co->add_option("--annotations", annotations, "Annotation sidecar (JSON)")->check(CLI::ExistingFile);
  common.add_to(co);

  auto* du = app.add_subcommand("dump", "Print a workspace in canonical text form");
  du->add_option("workspace", dump_path, "Workspace file")->required()->check(CLI::ExistingFile);
  common.add_to(du);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*cs) return run_complete_string(common, examples, prompt);
    if (*tr) return run_transform(common, files, prompt, docs, annotations);
    if (*co) return run_correspond(common, repo_a, repo_b, annotations);
    if (*du) return run_dump(common, dump_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
