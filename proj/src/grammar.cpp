#include "gpc/grammar.hpp"

#include <cctype>
#include <random>
#include <set>

namespace gpc::grammar {

namespace {

// Upper bound on symbol expansions for a single derivation. Catches
// grammars with codon-free cycles (`<a> ::= <a>`).
constexpr std::size_t max_expansions = 1u << 20;

bool is_name_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class RuleLexer {
public:
    RuleLexer(std::string_view body, std::size_t line) : s_(body), line_(line) {}

    std::vector<Production> alternatives()
    {
        std::vector<Production> alts(1);
        while (true) {
            skip_space();
            if (pos_ >= s_.size())
                break;
            char c = s_[pos_];
            if (c == '|') {
                ++pos_;
                alts.emplace_back();
            } else if (c == '"') {
                alts.back().push_back({Symbol::Kind::terminal, quoted()});
            } else if (c == '<' && starts_nonterminal()) {
                alts.back().push_back({Symbol::Kind::nonterminal, nonterminal()});
            } else {
                std::size_t start = pos_;
                while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '|'
                       && s_[pos_] != '"')
                    ++pos_;
                alts.back().push_back({Symbol::Kind::terminal, std::string(s_.substr(start, pos_ - start))});
            }
        }
        for (const auto& a : alts)
            if (a.empty())
                throw GrammarError("line " + std::to_string(line_) + ": empty production");
        return alts;
    }

private:
    void skip_space()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool starts_nonterminal() const
    {
        std::size_t p = pos_ + 1;
        if (p >= s_.size() || !is_name_char(s_[p]))
            return false;
        while (p < s_.size() && is_name_char(s_[p]))
            ++p;
        return p < s_.size() && s_[p] == '>';
    }

    std::string nonterminal()
    {
        std::size_t close = s_.find('>', pos_);
        std::string name(s_.substr(pos_ + 1, close - pos_ - 1));
        pos_ = close + 1;
        return name;
    }

    std::string quoted()
    {
        std::string out;
        ++pos_;
        while (true) {
            if (pos_ >= s_.size())
                throw GrammarError("line " + std::to_string(line_) + ": unterminated string");
            char c = s_[pos_++];
            if (c == '"')
                break;
            if (c == '\\' && pos_ < s_.size()) {
                char e = s_[pos_++];
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: out += e; break;
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

} // namespace

Grammar::Grammar(std::string start_symbol, std::vector<Rule> rules)
    : start_(std::move(start_symbol)), rules_(std::move(rules))
{
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!index_.emplace(rules_[i].name, i).second)
            throw GrammarError("duplicate rule for <" + rules_[i].name + ">");
        if (rules_[i].alternatives.empty())
            throw GrammarError("rule <" + rules_[i].name + "> has no productions");
    }
    if (!index_.contains(start_))
        throw GrammarError("start symbol <" + start_ + "> has no rule");
    for (const auto& r : rules_)
        for (const auto& alt : r.alternatives)
            for (const auto& sym : alt)
                if (!sym.is_terminal() && !index_.contains(sym.text))
                    throw GrammarError("undefined nonterminal <" + sym.text + "> referenced in <" + r.name + ">");
}

const Rule& Grammar::rule(std::string_view name) const
{
    return rules_[rule_index(name)];
}

std::size_t Grammar::rule_index(std::string_view name) const
{
    auto it = index_.find(name);
    if (it == index_.end())
        throw GrammarError("no rule <" + std::string(name) + ">");
    return it->second;
}

Grammar parse_bnf(std::string_view text)
{
    struct Pending {
        std::string name;
        std::string body;
        std::size_t line;
    };
    std::vector<Pending> pending;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#')
            continue;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        if (line[first] == '|' || first > 0) {
            if (pending.empty())
                throw GrammarError("line " + std::to_string(line_no) + ": continuation without a rule");
            pending.back().body += ' ';
            pending.back().body += line.substr(first);
            continue;
        }

        std::size_t def = line.find("::=");
        if (line[first] != '<' || def == std::string_view::npos)
            throw GrammarError("line " + std::to_string(line_no) + ": expected `<name> ::= ...`");
        std::size_t close = line.find('>', first);
        if (close == std::string_view::npos || close > def)
            throw GrammarError("line " + std::to_string(line_no) + ": malformed rule name");
        std::string name(line.substr(first + 1, close - first - 1));
        if (name.empty())
            throw GrammarError("line " + std::to_string(line_no) + ": empty rule name");
        pending.push_back({std::move(name), std::string(line.substr(def + 3)), line_no});
    }

    if (pending.empty())
        throw GrammarError("grammar has no rules");

    std::vector<Rule> rules;
    rules.reserve(pending.size());
    for (auto& p : pending) {
        RuleLexer lex(p.body, p.line);
        rules.push_back({std::move(p.name), lex.alternatives()});
    }
    std::string start = rules.front().name;
    return Grammar(std::move(start), std::move(rules));
}

Derivation derive(const Grammar& g, const Genotype& geno, std::size_t wrap_limit)
{
    Derivation d;
    if (geno.codons.empty())
        throw GrammarError("genotype has no codons");

    // Pending symbols in reverse order; the back is the leftmost.
    std::vector<const Symbol*> stack;
    const Symbol start{Symbol::Kind::nonterminal, g.start_symbol()};
    stack.push_back(&start);

    std::size_t pos = 0;
    std::size_t expansions = 0;
    while (!stack.empty()) {
        const Symbol* sym = stack.back();
        if (sym->is_terminal()) {
            d.phenotype += sym->text;
            stack.pop_back();
            continue;
        }
        const Rule& r = g.rule(sym->text);
        std::size_t choice = 0;
        if (r.alternatives.size() >= 2) {
            if (pos == geno.codons.size()) {
                if (d.wraps_used == wrap_limit)
                    break;
                ++d.wraps_used;
                pos = 0;
            }
            choice = geno.codons[pos++] % r.alternatives.size();
            ++d.codons_consumed;
        }
        if (++expansions > max_expansions)
            break;
        stack.pop_back();
        const Production& alt = r.alternatives[choice];
        for (auto it = alt.rbegin(); it != alt.rend(); ++it)
            stack.push_back(&*it);
    }

    d.completed = stack.empty();
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        const Symbol* sym = *it;
        d.phenotype += sym->is_terminal() ? sym->text : "<" + sym->text + ">";
    }
    return d;
}

Genotype random_genotype(std::uint64_t seed, std::size_t length, std::uint32_t codon_max)
{
    if (length == 0)
        throw GrammarError("genotype length must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> dist(0, codon_max);
    Genotype g;
    g.codons.resize(length);
    for (auto& c : g.codons)
        c = dist(rng);
    return g;
}

bool contains_nonterminal_marker(std::string_view text)
{
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '<')
            continue;
        std::size_t p = i + 1;
        while (p < text.size() && is_name_char(text[p]))
            ++p;
        if (p > i + 1 && p < text.size() && text[p] == '>')
            return true;
    }
    return false;
}

} // namespace gpc::grammar
