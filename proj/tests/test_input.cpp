#include "aloha/input.hpp"

#include "doctest.h"

using namespace aloha;

TEST_SUITE("input") {

TEST_CASE("key tokens") {
  CHECK(is_valid_key_token("a"));
  CHECK(is_valid_key_token("~"));
  CHECK(is_valid_key_token("F12"));
  CHECK(is_valid_key_token("Backspace"));
  CHECK_FALSE(is_valid_key_token("F13"));
  CHECK_FALSE(is_valid_key_token(" "));
  CHECK_FALSE(is_valid_key_token("ab"));
  CHECK_FALSE(is_valid_key_token(""));
  CHECK(is_modifier_token("Shift"));
  CHECK_FALSE(is_modifier_token("s"));
}

TEST_CASE("combo parsing is canonical") {
  auto c = parse_combo("Shift+Ctrl+s");
  REQUIRE(c);
  CHECK(to_string(*c) == "Ctrl+Shift+s");
  auto plus = parse_combo("Ctrl++");
  REQUIRE(plus);
  CHECK(plus->key == "+");
  CHECK(to_string(*plus) == "Ctrl++");
  CHECK_FALSE(parse_combo("Ctrl+"));
  CHECK_FALSE(parse_combo("Ctrl+Hyper+s"));
  CHECK(to_string(*parse_combo("Ctrl+Ctrl+s")) == "Ctrl+s");
}

TEST_CASE("rect containment is half-open") {
  Rect r{10, 10, 5, 5};
  CHECK(r.contains(Point{10, 10}));
  CHECK(r.contains(Point{14, 14}));
  CHECK_FALSE(r.contains(Point{15, 14}));
  CHECK(r.contains(Rect{10, 10, 5, 5}));
  CHECK_FALSE(r.contains(Rect{11, 10, 5, 5}));
}

}
