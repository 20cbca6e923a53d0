#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "rstl/formula.hpp"
#include "rstl/grounding.hpp"
#include "rstl/parser.hpp"

using namespace rstl;

namespace {

FormulaPtr random_formula(std::mt19937_64& gen, int depth) {
    static const std::vector<std::string> names{"a", "b", "c", "tom", "jerry", "x_1", "_p"};
    std::uniform_int_distribution<int> name_pick(0, static_cast<int>(names.size()) - 1);
    if (depth <= 0) return pred(names[static_cast<std::size_t>(name_pick(gen))]);
    std::uniform_int_distribution<int> kind_pick(0, 6);
    std::uniform_int_distribution<int> lo_pick(0, 3);
    std::uniform_int_distribution<int> len_pick(0, 2);
    std::uniform_int_distribution<int> arity_pick(2, 3);
    switch (kind_pick(gen)) {
        case 0: return pred(names[static_cast<std::size_t>(name_pick(gen))]);
        case 1: return negation(random_formula(gen, depth - 1));
        case 2: {
            std::vector<FormulaPtr> cs;
            for (int i = 0, n = arity_pick(gen); i < n; ++i) cs.push_back(random_formula(gen, depth - 1));
            return conjunction(std::move(cs));
        }
        case 3: {
            std::vector<FormulaPtr> cs;
            for (int i = 0, n = arity_pick(gen); i < n; ++i) cs.push_back(random_formula(gen, depth - 1));
            return disjunction(std::move(cs));
        }
        case 4: {
            const int lo = lo_pick(gen);
            return eventually({lo, lo + len_pick(gen)}, random_formula(gen, depth - 1));
        }
        case 5: {
            const int lo = lo_pick(gen);
            return globally({lo, lo + len_pick(gen)}, random_formula(gen, depth - 1));
        }
        default: {
            const int lo = lo_pick(gen);
            return until({lo, lo + len_pick(gen)}, random_formula(gen, depth - 1),
                         random_formula(gen, depth - 1));
        }
    }
}

}  // namespace

TEST_CASE("parses the named example formulas") {
    const FormulaPtr f1 = parse("F[0,10](tom) & F[0,10](jerry)");
    REQUIRE(f1->kind == FormulaKind::And);
    REQUIRE(f1->children.size() == 2);
    CHECK(f1->children[0]->kind == FormulaKind::Eventually);
    CHECK(f1->children[0]->window == Interval{0, 10});
    CHECK(f1->children[0]->children[0]->pred == "tom");
    CHECK(f1->children[1]->children[0]->pred == "jerry");

    const FormulaPtr f2 = parse("!(rob | bob) U[0,30] san");
    REQUIRE(f2->kind == FormulaKind::Until);
    CHECK(f2->window == Interval{0, 30});
    CHECK(f2->children[0]->kind == FormulaKind::Not);
    CHECK(f2->children[0]->children[0]->kind == FormulaKind::Or);
    CHECK(f2->children[1]->pred == "san");

    const FormulaPtr f3 = parse("(a)");
    CHECK(f3->kind == FormulaKind::Pred);
    CHECK(f3->pred == "a");
}

TEST_CASE("precedence: ! then F/G then & then | then U") {
    const FormulaPtr f = parse("a & b U[0,3] c | d");
    REQUIRE(f->kind == FormulaKind::Until);
    CHECK(f->children[0]->kind == FormulaKind::And);
    CHECK(f->children[1]->kind == FormulaKind::Or);

    const FormulaPtr g = parse("!a & F[0,2] b");
    REQUIRE(g->kind == FormulaKind::And);
    CHECK(g->children[0]->kind == FormulaKind::Not);
    CHECK(g->children[1]->kind == FormulaKind::Eventually);
}

TEST_CASE("connective chains flatten, parentheses preserve structure") {
    const FormulaPtr flat = parse("a & b & c");
    REQUIRE(flat->kind == FormulaKind::And);
    CHECK(flat->children.size() == 3);

    const FormulaPtr nested = parse("(a & b) & c");
    REQUIRE(nested->kind == FormulaKind::And);
    REQUIRE(nested->children.size() == 2);
    CHECK(nested->children[0]->kind == FormulaKind::And);
}

TEST_CASE("until is left-associative") {
    const FormulaPtr f = parse("a U[0,1] b U[1,2] c");
    REQUIRE(f->kind == FormulaKind::Until);
    CHECK(f->children[0]->kind == FormulaKind::Until);
    CHECK(f->children[1]->pred == "c");
    CHECK(f->window == Interval{1, 2});
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse("a &\n& b");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column == 1);
        CHECK(std::string(e.what()).find("2:1") != std::string::npos);
    }

    CHECK_THROWS_AS(parse("F[3,1] a"), ParseError);   // inverted interval
    CHECK_THROWS_AS(parse("F[-1,2] a"), ParseError);  // negative offset
    CHECK_THROWS_AS(parse("F[0,2]"), ParseError);     // missing operand
    CHECK_THROWS_AS(parse("a U b"), ParseError);      // until needs an interval
    CHECK_THROWS_AS(parse("(a"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("a b"), ParseError);
}

TEST_CASE("pretty round-trips the example ASTs") {
    CHECK(pretty(*pred("a")) == "a");
    CHECK(pretty(*conjunction({pred("a"), pred("b")})) == "(a & b)");
    const FormulaPtr phi = until({0, 30}, negation(disjunction({pred("rob"), pred("bob")})),
                                 pred("san"));
    CHECK(pretty(*phi) == "((!(rob | bob)) U[0,30] san)");
    CHECK(structurally_equal(*parse(pretty(*phi)), *phi));
}

TEST_CASE("random ASTs round-trip through pretty/parse") {
    std::mt19937_64 gen(20240817);
    for (int i = 0; i < 500; ++i) {
        const FormulaPtr f = random_formula(gen, 6);
        const FormulaPtr back = parse(pretty(*f));
        CHECK(structurally_equal(*f, *back));
    }
}

TEST_CASE("grounding expands the documented examples") {
    // F[0,2] a at t=1, T=3 -> Or[a@1, a@2, a@3]
    const Grounded g1 = ground(*eventually({0, 2}, pred("a")), 1, 3);
    REQUIRE(g1.nodes.back().kind == Grounded::Kind::Or);
    CHECK(g1.nodes.back().child_count == 3);
    CHECK(g1.leaves.size() == 3);
    CHECK_FALSE(g1.clipped);

    // G[0,1] a at t=1 -> And[a@1, a@2]
    const Grounded g2 = ground(*globally({0, 1}, pred("a")), 1, 4);
    REQUIRE(g2.nodes.back().kind == Grounded::Kind::And);
    CHECK(g2.nodes.back().child_count == 2);

    // a U[0,1] b at t=1 -> Or[b@1, And[b@2, a@1]]
    const Grounded g3 = ground(*until({0, 1}, pred("a"), pred("b")), 1, 4);
    REQUIRE(g3.nodes.back().kind == Grounded::Kind::Or);
    REQUIRE(g3.nodes.back().child_count == 2);
    const auto first = g3.nodes[g3.child_ids[g3.nodes.back().first_child]];
    CHECK(first.kind == Grounded::Kind::Leaf);
    CHECK(g3.leaves[first.slot].predicate == "b");
    CHECK(g3.leaves[first.slot].step == 1);
    const auto second = g3.nodes[g3.child_ids[g3.nodes.back().first_child + 1]];
    CHECK(second.kind == Grounded::Kind::And);
    CHECK(second.child_count == 2);
}

TEST_CASE("grounding clips F/G at the horizon and flags it") {
    const Grounded g = ground(*eventually({0, 50}, pred("a")), 1, 10);
    CHECK(g.clipped);
    CHECK(g.leaves.size() == 10);

    // expanded leaf count for F: min(t+b,T) - (t+a) + 1
    const Grounded g2 = ground(*eventually({2, 7}, pred("a")), 3, 8);
    CHECK_FALSE(g2.nodes.empty());
    CHECK(static_cast<int>(g2.leaves.size()) == std::min(3 + 7, 8) - (3 + 2) + 1);
}

TEST_CASE("grounding rejects windows it cannot honour") {
    CHECK_THROWS_AS(ground(*until({0, 10}, pred("a"), pred("b")), 1, 5), GroundError);
    CHECK_THROWS_AS(ground(*eventually({6, 9}, pred("a")), 1, 5), GroundError);
    CHECK_THROWS_WITH_AS(ground(*until({0, 10}, pred("a"), pred("b")), 1, 5),
                         doctest::Contains("U[0,10]"), GroundError);
}

TEST_CASE("ground is pure") {
    const FormulaPtr f = parse("(a U[0,3] b) & G[0,2](!c) & F[1,4] (a & b)");
    const Grounded g1 = ground(*f, 1, 6);
    const Grounded g2 = ground(*f, 1, 6);
    CHECK(g1 == g2);
}

TEST_CASE("grounded leaves are deduplicated but occurrences preserved") {
    const FormulaPtr f = parse("a & a");
    const Grounded g = ground(*f, 1, 1);
    CHECK(g.leaves.size() == 1);
    CHECK(g.nodes.back().child_count == 2);
}
