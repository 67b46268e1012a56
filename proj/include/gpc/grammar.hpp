#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpc::grammar {

class GrammarError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Symbol {
    enum class Kind : std::uint8_t { terminal, nonterminal };
    Kind kind = Kind::terminal;
    /// Terminal text, or nonterminal name without the angle brackets.
    std::string text;

    bool is_terminal() const { return kind == Kind::terminal; }
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

using Production = std::vector<Symbol>;

struct Rule {
    std::string name;
    std::vector<Production> alternatives;
    friend bool operator==(const Rule&, const Rule&) = default;
};

/// A BNF rule set. Rules keep their textual order and alternatives keep
/// their left-to-right order; the mod rule indexes into that order.
class Grammar {
public:
    Grammar() = default;
    Grammar(std::string start_symbol, std::vector<Rule> rules);

    const std::string& start_symbol() const { return start_; }
    const std::vector<Rule>& rules() const { return rules_; }
    const Rule& rule(std::string_view name) const;
    std::size_t rule_index(std::string_view name) const;

    friend bool operator==(const Grammar&, const Grammar&) = default;

private:
    std::string start_;
    std::vector<Rule> rules_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Parses `<name> ::= alt | alt` rules, one per line. An indented line, or
/// one starting with `|`, continues the previous rule. `#` starts a
/// comment line. Terminals are either double-quoted (with \" \\ \n \t
/// escapes) or bare whitespace-delimited tokens. Symbols of a production
/// are concatenated verbatim when derived. The first rule is the start.
Grammar parse_bnf(std::string_view text);

struct Genotype {
    std::vector<std::uint32_t> codons;
    friend bool operator==(const Genotype&, const Genotype&) = default;
};

struct Derivation {
    std::string phenotype;
    std::size_t codons_consumed = 0;
    std::size_t wraps_used = 0;
    bool completed = false;
};

inline constexpr std::size_t default_wrap_limit = 3;

/// Leftmost GE derivation. Only rules with two or more alternatives read a
/// codon. An incomplete derivation renders remaining nonterminals as
/// `<name>` markers in the phenotype.
Derivation derive(const Grammar& g, const Genotype& geno, std::size_t wrap_limit = default_wrap_limit);

Genotype random_genotype(std::uint64_t seed, std::size_t length, std::uint32_t codon_max = UINT32_MAX);

/// True when `text` contains a `<identifier>` nonterminal marker.
bool contains_nonterminal_marker(std::string_view text);

} // namespace gpc::grammar
