// Letter-string analogies end to end.
//
//   demo_letters                      runs the built-in problems
//   demo_letters abc:abd efg:efh ijk  solves one problem, last arg is the prompt

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "triplet/search.hpp"

using namespace triplet;

namespace {

struct Problem {
  std::vector<std::pair<std::string, std::string>> examples;
  std::string prompt;
};

void show(const Problem& p) {
  std::string lhs;
  for (const auto& [b, a] : p.examples) lhs += b + "->" + a + "  ";
  SearchConfig cfg;
  cfg.budget = 500;
  Completion c;
  try {
    c = complete(p.examples, p.prompt, cfg);
  } catch (const EncodeError& e) {
    std::printf("%s%s -> error: %s\n", lhs.c_str(), p.prompt.c_str(), e.what());
    return;
  }
  const auto& rep = c.result.report;
  std::printf("%s%s -> %-6s %s  fit %.0f, %zu abstract facts, %zu applications\n", lhs.c_str(), p.prompt.c_str(),
              c.text.c_str(), c.result.complete ? "     " : "(incomplete)", rep.prompt_fit, rep.abstract_fact_count,
              c.result.applications);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    Problem p;
    for (int i = 1; i + 1 < argc; ++i) {
      std::string a = argv[i];
      auto colon = a.find(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "expected before:after, got '%s'\n", argv[i]);
        return 1;
      }
      p.examples.emplace_back(a.substr(0, colon), a.substr(colon + 1));
    }
    p.prompt = argv[argc - 1];
    show(p);
    return 0;
  }

  const std::vector<Problem> problems{
      {{{"abc", "abd"}, {"efg", "efh"}}, "ijk"},
      {{{"abc", "abd"}}, "ijk"},
      {{{"abc", "cba"}, {"efg", "gfe"}}, "ijk"},
      {{{"ab", "ab"}}, "xy"},
      {{{"abc", "abd"}, {"efg", "efh"}}, "mno"},
      {{{"abc", "abd"}}, "ij"},
      {{{"abc", "abd"}, {"efg", "efh"}}, "xyz"},
  };
  for (const auto& p : problems) show(p);
  return 0;
}
