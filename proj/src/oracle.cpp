#include "gpc/oracle.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gpc/kernelc/interp.hpp"

namespace gpc::oracle {

bool floats_agree(double a, double b)
{
    if (std::isnan(a) || std::isnan(b))
        return std::isnan(a) && std::isnan(b);
    if (a == b)
        return true;
    if (std::isinf(a) || std::isinf(b))
        return false;
    return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b));
}

OracleReport check_oracle(const problems::ProblemSpec& p, const problems::TestSuite& suite, std::size_t count,
                          std::uint64_t seed, std::uint64_t budget)
{
    OracleReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(20, 100);
    std::vector<std::string> phenos;
    std::size_t attempts = 0;
    while (phenos.size() < count && attempts < count * 100) {
        ++attempts;
        auto d = grammar::derive(p.grammar, grammar::random_genotype(rng(), len(rng)));
        if (d.completed)
            phenos.push_back(std::move(d.phenotype));
    }
    if (phenos.empty())
        return rep;

    auto unit = problems::emit_batch_source(p, phenos);
    auto compiled = kernelc::compile_unit(unit);
    std::vector<kernelc::ModuleBinary> mods{compiled.module};
    auto out = vm::run_population(mods, p, suite, budget);

    const bool bounds = kernelc::current_options().bounds_check;
    auto prog = kernelc::parse_program(unit.text);
    auto padded = pad_rows(suite.inputs, vm::allocated_threads(suite.case_count));
    rep.individuals = phenos.size();

    for (std::size_t r = 0; r < out.rows; ++r) {
        const auto& entry = prog.entries[r];
        for (std::size_t c = 0; c < out.cols; ++c) {
            auto vs = out.row_status(r)[c];
            if (vs == vm::ThreadStatus::budget_exhausted) {
                ++rep.budget_skipped;
                continue;
            }
            auto io = kernelc::interpret(prog, entry, padded, static_cast<std::int32_t>(c), budget, bounds);
            ++rep.cases_compared;
            double vv = out.row(r)[c];
            bool agree = false;
            if (vs == vm::ThreadStatus::fault)
                agree = io.status == kernelc::InterpStatus::fault;
            else if (io.status == kernelc::InterpStatus::ok)
                agree = p.output_is_float() ? floats_agree(vv, io.value) : vv == io.value;
            if (agree)
                continue;
            if (rep.mismatches++ == 0) {
                std::ostringstream os;
                os.precision(17);
                os << entry.name << " case " << c << ": vm status " << static_cast<int>(vs) << " value " << vv
                   << ", interpreter status " << static_cast<int>(io.status) << " value " << io.value << "\n"
                   << phenos[r];
                rep.first_mismatch = os.str();
            }
        }
    }
    return rep;
}

} // namespace gpc::oracle
