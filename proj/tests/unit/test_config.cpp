#include "doctest.h"

#include "pilotwave/config.hpp"
#include "pilotwave/model.hpp"

using namespace pilotwave;

TEST_CASE("values of every kind parse") {
  auto tree = ConfigTree::parse(R"(
name = demo   # trailing comment
label = "two words"
[model]
masses = [1.0, 2.5e-1]
potential = harmonic(omega = [1.0], center = [0.0])
pairs = [(1, 2), (3, -4)]
)");
  CHECK(tree.word("name") == "demo");
  CHECK(tree.word("label") == "two words");
  auto m = as_numbers(tree.get("model.masses"), "model.masses");
  REQUIRE(m.size() == 2);
  CHECK(m[1] == doctest::Approx(0.25));
  const Value& p = tree.get("model.potential");
  CHECK(p.is_call());
  CHECK(p.text == "harmonic");
  REQUIRE(p.argument("center", 1) != nullptr);
  CHECK(tree.get("model.pairs").items[1].items[1].number == -4.0);
}

TEST_CASE("arithmetic helpers evaluate") {
  auto tree = ConfigTree::parse("a = div(pi, 4)\nb = mul(2, sqrt(2))\nc = neg(3)\n");
  CHECK(tree.number("a") == doctest::Approx(kPi / 4));
  CHECK(tree.number("b") == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(tree.number("c") == -3.0);
}

TEST_CASE("multi-line values continue while a bracket is open") {
  auto tree = ConfigTree::parse("x = [1,\n 2,\n 3]\ny = 4\n");
  CHECK(as_numbers(tree.get("x"), "x").size() == 3);
  CHECK(tree.number("y") == 4.0);
}

TEST_CASE("dump round-trips") {
  const char* text = R"(
name = rt
[model]
kind = pauli
magnetic_field = gradient(b0 = 0.5, gradient = 4, axis = 0)
[initial]
state = superposition([(0.6, spinor([1, 0], gaussian_packet(center = [0.0]))), ((0, 0.8), spinor([0, 1], ho_ground()))])
)";
  auto a = ConfigTree::parse(text);
  auto b = ConfigTree::parse(a.dump());
  CHECK(a.dump() == b.dump());
  CHECK(b.entries().size() == a.entries().size());
}

TEST_CASE("parse errors carry the key and position") {
  try {
    ConfigTree::parse("[model]\nmasses = [1.0, \n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.key() == "model.masses");
    CHECK(e.position().line >= 2);
  }
  CHECK_THROWS_AS(ConfigTree::parse("= 3\n"), ParseError);
  CHECK_THROWS_AS(ConfigTree::parse("a = 1\na = 2\n"), ParseError);
}

TEST_CASE("overrides replace and add keys") {
  auto tree = ConfigTree::parse("[time]\ndt = 0.1\n");
  std::vector<std::string> o = {"time.dt=0.05", "ensemble.seed=9"};
  apply_overrides(tree, o);
  CHECK(tree.number("time.dt") == 0.05);
  CHECK(tree.number("ensemble.seed") == 9.0);
  std::vector<std::string> bad = {"no_equals_sign"};
  CHECK_THROWS(apply_overrides(tree, bad));
}

TEST_CASE("conversions report the key") {
  auto tree = ConfigTree::parse("x = hello\n");
  try {
    as_number(tree.get("x"), "x");
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.key() == "x");
  }
  auto c = ConfigTree::parse("z = (1, -2)\n");
  CHECK(as_complex(c.get("z"), "z") == cplx(1, -2));
}
