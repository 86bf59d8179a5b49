#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "ballvi/expr.hpp"

using ballvi::EvalError;
using ballvi::Expr;
using ballvi::ExprError;
using ballvi::parse_expr;

TEST_CASE("literals and variables") {
    CHECK(parse_expr("42").eval(0, 0, 0) == 42.0);
    CHECK(parse_expr("3.25").eval(0, 0, 0) == 3.25);
    CHECK(parse_expr("1e3").eval(0, 0, 0) == 1000.0);
    CHECK(parse_expr("2.5E-2").eval(0, 0, 0) == 0.025);
    CHECK(parse_expr(".5").eval(0, 0, 0) == 0.5);
    CHECK(parse_expr("x").eval(1.5, 0, 0) == 1.5);
    CHECK(parse_expr("y").eval(0, -2.0, 0) == -2.0);
    CHECK(parse_expr("t").eval(0, 0, 0.125) == 0.125);
}

TEST_CASE("precedence and associativity") {
    CHECK(parse_expr("2+3*4").eval(0, 0, 0) == 14.0);
    CHECK(parse_expr("2*3+4").eval(0, 0, 0) == 10.0);
    CHECK(parse_expr("10-4-3").eval(0, 0, 0) == 3.0);
    CHECK(parse_expr("24/4/2").eval(0, 0, 0) == 3.0);
    CHECK(parse_expr("2*3^2").eval(0, 0, 0) == 18.0);
    CHECK(parse_expr("2^3^2").eval(0, 0, 0) == 512.0); // right associative
    CHECK(parse_expr("-2^2").eval(0, 0, 0) == -4.0);   // minus binds looser than ^
    CHECK(parse_expr("2^-3").eval(0, 0, 0) == 0.125);
    CHECK(parse_expr("(2+3)*4").eval(0, 0, 0) == 20.0);
    CHECK(parse_expr("--1").eval(0, 0, 0) == 1.0);
    CHECK(parse_expr("2--3").eval(0, 0, 0) == 5.0);
}

TEST_CASE("functions") {
    CHECK(parse_expr("sin(0)").eval(0, 0, 0) == 0.0);
    CHECK(parse_expr("cos(0)").eval(0, 0, 0) == 1.0);
    CHECK(parse_expr("sin(x)").eval(1.0, 0, 0) == std::sin(1.0));
    CHECK(parse_expr("exp(1)").eval(0, 0, 0) == std::exp(1.0));
    CHECK(parse_expr("sqrt(2)").eval(0, 0, 0) == std::sqrt(2.0));
    CHECK(parse_expr("abs(-3)").eval(0, 0, 0) == 3.0);
    CHECK(parse_expr("min(2, 3)").eval(0, 0, 0) == 2.0);
    CHECK(parse_expr("max(2, 3)").eval(0, 0, 0) == 3.0);
    CHECK(parse_expr("min(2, -3)").eval(0, 0, 0) == -3.0);
    // nested
    const double got = parse_expr("sin(cos(x) + t)").eval(0.3, 0, 0.2);
    CHECK(got == std::sin(std::cos(0.3) + 0.2));
}

TEST_CASE("whitespace is ignored") {
    CHECK(parse_expr("  1 +\t2 * \n 3 ").eval(0, 0, 0) == 7.0);
}

TEST_CASE("parse errors carry byte offsets") {
    auto offset_of = [](const std::string& text) -> std::size_t {
        try {
            parse_expr(text);
        } catch (const ExprError& e) {
            return e.offset();
        }
        FAIL("expected ExprError for: " << text);
        return static_cast<std::size_t>(-1);
    };

    CHECK(offset_of("1 + ") == 4);      // end of input
    CHECK(offset_of("2 $ 3") == 2);     // stray character
    CHECK(offset_of("foo(1)") == 0);    // unknown identifier
    CHECK(offset_of("1 + bar") == 4);   // unknown identifier after operator
    CHECK(offset_of("(1 + 2") == 6);    // missing ')'
    CHECK(offset_of("sin 1") == 4);     // missing '(' after function
    CHECK(offset_of("min(1)") == 6);    // wrong arity, reported past ')'
    CHECK(offset_of("sin(1, 2)") == 9); // wrong arity
    CHECK(offset_of("1 2") == 2);       // trailing input
}

TEST_CASE("eval errors") {
    CHECK_THROWS_AS(parse_expr("1/0").eval(0, 0, 0), EvalError);
    CHECK_THROWS_AS(parse_expr("1/x").eval(0, 0, 0), EvalError);
    CHECK_THROWS_AS(parse_expr("sqrt(-1)").eval(0, 0, 0), EvalError);
    CHECK_THROWS_AS(parse_expr("(-8)^(1/2)").eval(0, 0, 0), EvalError);
    CHECK_THROWS_AS(Expr().eval(0, 0, 0), EvalError);
    CHECK_FALSE(Expr().valid());
    CHECK(parse_expr("x").valid());
}

TEST_CASE("source round trip") {
    const std::string text = "9 + sin(6.283185307179586 * x) * t";
    const Expr e = parse_expr(text);
    CHECK(e.source() == text);
}

TEST_CASE("to_string round trips bit-identically") {
    const char* exprs[] = {
        "42",
        "-x",
        "2 + 3*t - x/7",
        "0.6*sin(3.141592653589793*x)",
        "16*cos(6.283185307179586*t)",
        "max(min(x, y), -t)",
        "sqrt(abs(x - 0.3)) + exp(-t)",
        "2^-3 + x^2",
        "1e-7 * x + 2.5E2",
    };
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (const char* src : exprs) {
        const Expr a = parse_expr(src);
        const Expr b = parse_expr(a.to_string());
        CHECK(b.to_string() == a.to_string());
        for (int rep = 0; rep < 50; ++rep) {
            const double x = dist(rng), y = dist(rng), t = std::abs(dist(rng));
            double va, vb;
            try {
                va = a.eval(x, y, t);
            } catch (const EvalError&) {
                CHECK_THROWS_AS(b.eval(x, y, t), EvalError);
                continue;
            }
            vb = b.eval(x, y, t);
            // identical arithmetic, so identical bits
            CHECK(std::memcmp(&va, &vb, sizeof va) == 0);
        }
    }
}
