#include "gpc/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "gpc_builtin_grammars.hpp"

namespace gpc::problems {

namespace {

// Unused list columns hold a value no target can take, so reading past a
// row's length never matches.
constexpr std::int32_t search_filler = -1;
constexpr std::int32_t search_max_value = 50;

HostArray int_array(std::string name, std::size_t width = 1)
{
    HostArray a;
    a.name = std::move(name);
    a.row_width = width;
    return a;
}

TestSuite search_cases(std::uint64_t seed)
{
    constexpr std::size_t n = 32;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len_dist(3, static_cast<int>(search_width));
    std::uniform_int_distribution<std::int32_t> val_dist(0, search_max_value);

    std::vector<bool> contains(n, false);
    std::fill(contains.begin(), contains.begin() + n / 2, true);
    std::shuffle(contains.begin(), contains.end(), rng);

    TestSuite s;
    s.case_count = n;
    HostArray list = int_array("list", search_width);
    HostArray len = int_array("len");
    HostArray target = int_array("target");
    for (std::size_t c = 0; c < n; ++c) {
        int length = len_dist(rng);
        std::int32_t t = val_dist(rng);
        std::vector<std::int32_t> row(search_width, search_filler);
        for (int i = 0; i < length; ++i) {
            std::int32_t v = val_dist(rng);
            if (!contains[c])
                while (v == t)
                    v = val_dist(rng);
            row[static_cast<std::size_t>(i)] = v;
        }
        if (contains[c]) {
            std::uniform_int_distribution<int> pos_dist(0, length - 1);
            row[static_cast<std::size_t>(pos_dist(rng))] = t;
        }
        auto first = std::find(row.begin(), row.begin() + length, t);
        s.expected.push_back(first == row.begin() + length ? -1.0 : static_cast<double>(first - row.begin()));
        list.ints.insert(list.ints.end(), row.begin(), row.end());
        len.ints.push_back(length);
        target.ints.push_back(t);
    }
    s.inputs = {std::move(list), std::move(len), std::move(target)};
    return s;
}

TestSuite k6_cases()
{
    TestSuite s;
    s.case_count = 64;
    HostArray x = int_array("xin");
    for (std::int32_t v = 1; v <= 64; ++v) {
        x.ints.push_back(v);
        s.expected.push_back(k6_target(v));
    }
    s.inputs = {std::move(x)};
    return s;
}

TestSuite mul5_cases()
{
    TestSuite s;
    s.case_count = 1024;
    HostArray pairs = int_array("pairs");
    for (std::uint32_t b = 0; b < 32; ++b)
        for (std::uint32_t a = 0; a < 32; ++a) {
            pairs.ints.push_back(static_cast<std::int32_t>(mul5_pack(a, b)));
            s.expected.push_back(static_cast<double>(a * b));
        }
    s.inputs = {std::move(pairs)};
    return s;
}

std::string header(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::search:
        return "__in int list[];\n__in int len[];\n__in int target[];\n__out int out[];\n";
    case ProblemKind::k6: return "__in int xin[];\n__out float out[];\n";
    case ProblemKind::mul5: return "__in int pairs[];\n__out int out[];\n";
    }
    return {};
}

std::string preamble(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::search:
        return "int n = len[tid];\nint t = target[tid];\nint base = tid * " + std::to_string(search_width)
               + ";\nint i = 0;\nint r = -1;\n";
    case ProblemKind::k6: return "float x = xin[tid];\n";
    case ProblemKind::mul5: {
        std::string s = "int v = pairs[tid];\n";
        for (int k = 0; k < 10; ++k)
            s += "int x" + std::to_string(k) + " = (v >> " + std::to_string(k) + ") & 1;\n";
        for (int k = 0; k < 10; ++k)
            s += "int b" + std::to_string(k) + " = 0;\n";
        return s;
    }
    }
    return {};
}

std::string wrap_body(ProblemKind kind, const std::string& pheno)
{
    switch (kind) {
    case ProblemKind::search: return pheno + "out[tid] = r;\n";
    case ProblemKind::k6: return "out[tid] = (" + pheno + ");\n";
    case ProblemKind::mul5: {
        std::string s = pheno + "out[tid] = b0";
        for (int k = 1; k < 10; ++k)
            s += " | (b" + std::to_string(k) + " << " + std::to_string(k) + ")";
        return s + ";\n";
    }
    }
    return {};
}

} // namespace

std::string_view builtin_grammar(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::search: return builtin::search_bnf;
    case ProblemKind::k6: return builtin::k6_bnf;
    case ProblemKind::mul5: return builtin::mul5_bnf;
    }
    return {};
}

ProblemSpec make_problem(ProblemKind kind, std::optional<std::string_view> grammar_text)
{
    ProblemSpec p;
    p.kind = kind;
    p.name = std::string(problem_name(kind));
    p.grammar = grammar::parse_bnf(grammar_text ? *grammar_text : builtin_grammar(kind));
    switch (kind) {
    case ProblemKind::search:
        p.case_count = 32;
        p.objective = Objective::maximize;
        p.output = OutputSemantic::int_;
        break;
    case ProblemKind::k6:
        p.case_count = 64;
        p.objective = Objective::minimize;
        p.output = OutputSemantic::float_;
        break;
    case ProblemKind::mul5:
        p.case_count = 1024;
        p.objective = Objective::minimize;
        p.output = OutputSemantic::packed_bits;
        break;
    }
    return p;
}

ProblemKind parse_problem_name(std::string_view name)
{
    if (name == "search")
        return ProblemKind::search;
    if (name == "k6")
        return ProblemKind::k6;
    if (name == "mul5")
        return ProblemKind::mul5;
    throw ProblemError("unknown problem '" + std::string(name) + "' (expected search, k6 or mul5)");
}

std::string_view problem_name(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::search: return "search";
    case ProblemKind::k6: return "k6";
    case ProblemKind::mul5: return "mul5";
    }
    return "?";
}

TestSuite generate_cases(const ProblemSpec& p, std::uint64_t seed)
{
    switch (p.kind) {
    case ProblemKind::search: return search_cases(seed);
    case ProblemKind::k6: return k6_cases();
    case ProblemKind::mul5: return mul5_cases();
    }
    return {};
}

double k6_target(std::int64_t x)
{
    if (x < 1)
        throw ProblemError("k6_target needs x >= 1, got " + std::to_string(x));
    double s = 0.0;
    for (std::int64_t n = 1; n <= x; ++n)
        s += 1.0 / static_cast<double>(n);
    return s;
}

std::uint32_t mul5_pack(std::uint32_t a, std::uint32_t b)
{
    if (a > 31 || b > 31)
        throw ProblemError("mul5 operands must be in 0..31");
    return a | (b << 5);
}

Score worst_score(const ProblemSpec& p)
{
    switch (p.kind) {
    case ProblemKind::search: return {0.0, false};
    case ProblemKind::k6: return {std::numeric_limits<double>::infinity(), false};
    case ProblemKind::mul5: return {10.0 * 1024.0, false};
    }
    return {};
}

bool better(const ProblemSpec& p, const Score& a, const Score& b)
{
    if (a.valid != b.valid)
        return a.valid;
    if (!a.valid)
        return false;
    return p.objective == Objective::maximize ? a.value > b.value : a.value < b.value;
}

Score fitness(const ProblemSpec& p, std::span<const double> outputs, const TestSuite& suite,
              std::span<const vm::ThreadStatus> status)
{
    if (outputs.size() != suite.case_count || suite.expected.size() != suite.case_count)
        throw ProblemError("fitness: expected " + std::to_string(suite.case_count) + " outputs, got "
                           + std::to_string(outputs.size()));
    if (!status.empty() && status.size() != outputs.size())
        throw ProblemError("fitness: status length mismatch");
    for (auto s : status)
        if (s == vm::ThreadStatus::budget_exhausted)
            return worst_score(p);

    Score sc;
    switch (p.kind) {
    case ProblemKind::search:
        for (std::size_t c = 0; c < outputs.size(); ++c)
            sc.value += outputs[c] == suite.expected[c] ? 1.0 : 0.0;
        break;
    case ProblemKind::k6: {
        double sum = 0.0;
        for (std::size_t c = 0; c < outputs.size(); ++c) {
            if (!std::isfinite(outputs[c]))
                return worst_score(p);
            double d = outputs[c] - suite.expected[c];
            sum += d * d;
        }
        sc.value = outputs.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(outputs.size()));
        if (!std::isfinite(sc.value))
            return worst_score(p);
        break;
    }
    case ProblemKind::mul5: {
        std::uint64_t bits = 0;
        for (std::size_t c = 0; c < outputs.size(); ++c) {
            auto got = static_cast<std::uint32_t>(static_cast<std::int32_t>(outputs[c]));
            auto want = static_cast<std::uint32_t>(suite.expected[c]);
            bits += static_cast<std::uint64_t>(std::popcount((got ^ want) & 0x3FFu));
        }
        sc.value = static_cast<double>(bits);
        break;
    }
    }
    return sc;
}

std::string entry_name(std::size_t index)
{
    return "ind_" + std::to_string(index);
}

kernelc::SourceUnit emit_batch_source(const ProblemSpec& p, std::span<const std::string> phenotypes,
                                      std::size_t first_index)
{
    std::vector<std::size_t> indices(phenotypes.size());
    std::iota(indices.begin(), indices.end(), first_index);
    return emit_batch_source(p, phenotypes, indices);
}

kernelc::SourceUnit emit_batch_source(const ProblemSpec& p, std::span<const std::string> phenotypes,
                                      std::span<const std::size_t> indices)
{
    if (indices.size() != phenotypes.size())
        throw ProblemError("emit_batch_source: index count mismatch");
    kernelc::SourceUnit u;
    u.text = header(p.kind);
    std::string pre = preamble(p.kind);
    for (std::size_t i = 0; i < phenotypes.size(); ++i) {
        if (grammar::contains_nonterminal_marker(phenotypes[i]))
            throw ProblemError("phenotype " + std::to_string(indices[i]) + " has an unexpanded nonterminal");
        std::string name = entry_name(indices[i]);
        u.text += "\n__entry " + name + "() {\n" + pre + wrap_body(p.kind, phenotypes[i]) + "}\n";
        u.entry_names.push_back(std::move(name));
    }
    return u;
}

kernelc::SourceUnit known_solution(const ProblemSpec& p)
{
    switch (p.kind) {
    case ProblemKind::search: {
        std::string body = "r = -1;\n"
                           "for (i = 0; i < n; i++) {\n"
                           "if (list[base + i] == t) {\n"
                           "r = i;\n"
                           "break;\n"
                           "}\n"
                           "}\n";
        return emit_batch_source(p, std::span<const std::string>(&body, 1));
    }
    case ProblemKind::k6: {
        kernelc::SourceUnit u;
        u.text = header(p.kind)
                 + "\n__entry k6_exact() {\n"
                   "float x = xin[tid];\n"
                   "float s = 0.0;\n"
                   "for (int n = 1; n <= x; n++) {\n"
                   "s += 1.0 / n;\n"
                   "}\n"
                   "out[tid] = s;\n"
                   "}\n";
        u.entry_names = {"k6_exact"};
        return u;
    }
    case ProblemKind::mul5: {
        std::string body = "int a = x0 | (x1 << 1) | (x2 << 2) | (x3 << 3) | (x4 << 4);\n"
                           "int c = x5 | (x6 << 1) | (x7 << 2) | (x8 << 3) | (x9 << 4);\n"
                           "int prod = a * c;\n";
        for (int k = 0; k < 10; ++k)
            body += "b" + std::to_string(k) + " = (prod >> " + std::to_string(k) + ") & 1;\n";
        return emit_batch_source(p, std::span<const std::string>(&body, 1));
    }
    }
    return {};
}

void write_suite_csv(const ProblemSpec& p, const TestSuite& suite, std::ostream& os)
{
    os << "case";
    for (const auto& a : suite.inputs) {
        if (a.row_width == 1)
            os << ',' << a.name;
        else
            for (std::size_t k = 0; k < a.row_width; ++k)
                os << ',' << a.name << '_' << k;
    }
    os << ",expected\n";
    std::ostringstream num;
    num.precision(17);
    for (std::size_t c = 0; c < suite.case_count; ++c) {
        os << c;
        for (const auto& a : suite.inputs)
            for (std::size_t k = 0; k < a.row_width; ++k) {
                std::size_t idx = c * a.row_width + k;
                if (a.is_float) {
                    num.str({});
                    num << a.floats[idx];
                    os << ',' << num.str();
                } else {
                    os << ',' << a.ints[idx];
                }
            }
        num.str({});
        num << suite.expected[c];
        os << ',' << (p.output_is_float() ? num.str() : std::to_string(static_cast<std::int64_t>(suite.expected[c])))
           << '\n';
    }
}

} // namespace gpc::problems
