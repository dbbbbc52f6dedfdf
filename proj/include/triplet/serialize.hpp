#pragma once
// Line-oriented workspace text format:
//
//   # comment
//   node <name>
//   fact <f> <v> <k>
//
// Names are percent-escaped for whitespace, '%' and '#'. Nodes and facts are
// written sorted by name so the output does not depend on interning order.

#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "triplet/structure.hpp"

namespace triplet {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string s = "line " + std::to_string(line);
    if (column) s += ", column " + std::to_string(column);
    return s + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

inline std::string escape_name(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isspace(c) || c == '%' || c == '#' || c < 0x20) {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

inline std::string unescape_name(const std::string& text, std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out += text[i];
      continue;
    }
    if (i + 2 >= text.size() || !std::isxdigit(static_cast<unsigned char>(text[i + 1])) ||
        !std::isxdigit(static_cast<unsigned char>(text[i + 2])))
      throw ParseError("bad escape in name '" + text + "'", line, i + 1);
    out += static_cast<char>(std::stoi(text.substr(i + 1, 2), nullptr, 16));
    i += 2;
  }
  return out;
}

inline void save(const TripletStructure& s, std::ostream& out) {
  const auto snap = s.snapshot();
  out << "# triplet workspace: " << snap.nodes.size() << " nodes, " << snap.facts.size()
      << " facts\n";
  for (const auto& n : snap.nodes) out << "node " << escape_name(n) << '\n';
  for (const auto& f : snap.facts)
    out << "fact " << escape_name(f[0]) << ' ' << escape_name(f[1]) << ' ' << escape_name(f[2])
        << '\n';
}

inline std::string to_text(const TripletStructure& s) {
  std::ostringstream os;
  save(s, os);
  return os.str();
}

/// Parses into `s` (which may already hold nodes). Fact lines may reference
/// nodes declared later in the file or not at all; they are interned.
inline void load(std::istream& in, TripletStructure& s) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto hash = line.find('#');
    std::string body = hash == std::string::npos ? line : line.substr(0, hash);
    std::istringstream ls(body);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<std::string> args;
    for (std::string a; ls >> a;) args.push_back(unescape_name(a, lineno));
    if (word == "node") {
      if (args.size() != 1) throw ParseError("'node' takes exactly one name", lineno);
      s.intern(args[0]);
    } else if (word == "fact") {
      if (args.size() != 3) throw ParseError("'fact' takes exactly three names", lineno);
      s.add(s.intern(args[0]), s.intern(args[1]), s.intern(args[2]));
    } else {
      throw ParseError("unknown directive '" + word + "'", lineno, 1);
    }
  }
}

inline TripletStructure from_text(const std::string& text) {
  TripletStructure s;
  std::istringstream is(text);
  load(is, s);
  return s;
}

}  // namespace triplet
