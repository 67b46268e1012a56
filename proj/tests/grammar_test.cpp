#include <doctest.h>

#include <random>
#include <set>

#include "gpc/grammar.hpp"

using namespace gpc::grammar;

TEST_CASE("parse_bnf minimal and two-rule grammars")
{
    auto g = parse_bnf("<S> ::= \"a\"\n");
    CHECK(g.rules().size() == 1);
    CHECK(g.rule("S").alternatives.size() == 1);
    CHECK(g.start_symbol() == "S");

    auto g2 = parse_bnf("<S> ::= <A> | \"b\"\n<A> ::= \"a\"\n");
    CHECK(g2.rules().size() == 2);
    CHECK(g2.rule("S").alternatives.size() == 2);
}

TEST_CASE("parse_bnf rejects undefined nonterminals by name")
{
    try {
        parse_bnf("<S> ::= <missing>\n");
        FAIL("no error");
    } catch (const GrammarError& e) {
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
}

TEST_CASE("parse_bnf continuation lines and comments")
{
    auto g = parse_bnf("# c\n<S> ::= \"a\"\n    | \"b\"\n  \"c\"\n");
    REQUIRE(g.rule("S").alternatives.size() == 2);
    CHECK(g.rule("S").alternatives[1].size() == 2);
}

TEST_CASE("derive without choice points reads no codons")
{
    auto g = parse_bnf("<S> ::= \"x\"\n");
    auto d = derive(g, Genotype{{7}});
    CHECK(d.phenotype == "x");
    CHECK(d.codons_consumed == 0);
    CHECK(d.completed);
}

TEST_CASE("derive uses the mod rule")
{
    auto g = parse_bnf("<S> ::= \"a\" | \"b\"\n");
    auto d = derive(g, Genotype{{5}});
    CHECK(d.phenotype == "b");
    CHECK(d.codons_consumed == 1);
}

TEST_CASE("derive wraps and then gives up")
{
    auto g = parse_bnf("<S> ::= \"a\" <S> | \"a\"\n");
    auto d = derive(g, Genotype{{0}}, 2);
    CHECK_FALSE(d.completed);
    CHECK(d.wraps_used == 2);
    CHECK(d.codons_consumed == 3);
    CHECK(contains_nonterminal_marker(d.phenotype));
}

TEST_CASE("random_genotype determinism and length")
{
    CHECK(random_genotype(9, 10) == random_genotype(9, 10));
    CHECK(random_genotype(9, 50).codons.size() == 50);
    int differ = 0;
    for (std::uint64_t s = 0; s < 100; ++s)
        differ += random_genotype(s, 10) != random_genotype(s + 1000, 10);
    CHECK(differ == 100);
    for (auto c : random_genotype(3, 200, 4).codons)
        CHECK(c <= 4);
}

TEST_CASE("prefix sufficiency")
{
    auto g = parse_bnf("<e> ::= <e> \"+\" <e> | \"x\" | \"y\"\n");
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto geno = random_genotype(s, 30, 255);
        auto d = derive(g, geno);
        if (!d.completed || d.wraps_used > 0)
            continue;
        auto longer = geno;
        longer.codons.insert(longer.codons.end(), {1, 2, 3, 99});
        auto d2 = derive(g, longer);
        CHECK(d2.phenotype == d.phenotype);
        CHECK(d2.codons_consumed == d.codons_consumed);
    }
}

// Random grammars: every choice stays in range, completed output has no markers.
TEST_CASE("fuzzed grammars derive within alternative bounds")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        int nrules = 1 + static_cast<int>(rng() % 4);
        std::string text;
        for (int r = 0; r < nrules; ++r) {
            text += "<r" + std::to_string(r) + "> ::= ";
            int nalt = 1 + static_cast<int>(rng() % 4);
            for (int a = 0; a < nalt; ++a) {
                if (a)
                    text += " | ";
                text += "\"t" + std::to_string(a) + "\"";
                if (rng() % 3 == 0)
                    text += " <r" + std::to_string(rng() % nrules) + ">";
            }
            text += "\n";
        }
        auto g = parse_bnf(text);
        auto geno = random_genotype(trial, 20);
        auto d = derive(g, geno);
        CHECK(derive(g, geno).phenotype == d.phenotype);
        if (d.completed)
            CHECK_FALSE(contains_nonterminal_marker(d.phenotype));
        CHECK(d.wraps_used <= default_wrap_limit);
    }
}
