#pragma once

#include <map>
#include <string>
#include <vector>

#include "tw/gallery.hpp"

namespace tw {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                           std::to_string(col) + ")"),
        line(line),
        col(col) {}
  int line, col;
};

struct Sexp {
  bool is_atom = false;
  std::string atom;
  std::vector<Sexp> items;
  int line = 1, col = 1;
};

std::vector<Sexp> parse_sexps(const std::string& text);

/// Assertion statement evaluated by the runner.
struct ScriptAssert {
  std::string lhs, rhs;
  std::int64_t depth = 6;
};

struct Script {
  Registry registry;
  bool has_registry = false;
  std::map<std::string, GroupSpec> groups;
  std::vector<std::pair<std::string, WordPtr>> words;
  CoiCollection collection;
  std::map<std::string, std::vector<std::string>> collections;
  std::vector<ScriptAssert> asserts;

  const WordPtr& word(const std::string& name) const;
  bool has_word(const std::string& name) const;
};

Script parse_script(const std::string& text);

// printers (parse(print(s)) is structurally identical to s)
std::string print_group(const GroupSpec& g);
std::string print_element(const GroupElement& e);
std::string print_position(const Position& p);
std::string print_interval_form(const Interval& I);
std::string print_word(const WordPtr& w);
std::string print_script(const Script& s);

}  // namespace tw
