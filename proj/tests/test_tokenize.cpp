#include "kpe/tokenize.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>
#include <string>

using kpe::Token;
using kpe::tokenize;

TEST_CASE("tokenize splits words and punctuation") {
  auto tokens = tokenize("clean from dope");
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[0].surface == "clean");
  CHECK(tokens[1].surface == "from");
  CHECK(tokens[2].surface == "dope");

  auto q = tokenize("subs?");
  REQUIRE(q.size() == 2);
  CHECK(q[0].surface == "subs");
  CHECK(q[1].surface == "?");

  CHECK(tokenize("").empty());
}

TEST_CASE("tokenize keeps contractions and decimals together") {
  auto tokens = tokenize("can't take 4.87 mg");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0].surface == "can't");
  CHECK(tokens[2].surface == "4.87");
}

TEST_CASE("tokenize assigns sentence indices") {
  auto tokens = tokenize("First one. Second one!! Third\nfourth line");
  REQUIRE(!tokens.empty());
  CHECK(tokens.front().sentence == 0);
  // "Second" starts sentence 1, both bangs stay with it
  std::size_t second = 0, third = 0, fourth = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].surface == "Second") second = tokens[i].sentence;
    if (tokens[i].surface == "Third") third = tokens[i].sentence;
    if (tokens[i].surface == "fourth") fourth = tokens[i].sentence;
  }
  CHECK(second == 1);
  CHECK(third == 2);
  CHECK(fourth == 3);  // newline breaks sentences too
}

TEST_CASE("surfaces plus skipped whitespace reconstruct the input") {
  std::mt19937_64 rng(7);
  const std::string pool = "abc XYZ 0. , !?'-\n\t";
  for (int round = 0; round < 200; ++round) {
    std::string text;
    std::size_t len = rng() % 40;
    for (std::size_t i = 0; i < len; ++i) text += pool[rng() % pool.size()];
    auto tokens = tokenize(text);
    std::string rebuilt(text.size(), '\0');
    for (std::size_t i = 0; i < text.size(); ++i)
      rebuilt[i] = std::isspace(static_cast<unsigned char>(text[i])) ? text[i] : '\0';
    for (const Token& t : tokens) {
      REQUIRE(t.end > t.begin);
      for (std::size_t i = t.begin; i < t.end; ++i) rebuilt[i] = text[i];
    }
    INFO("text: " << text);
    CHECK(rebuilt == text);
    // spans non-overlapping and increasing
    for (std::size_t i = 1; i < tokens.size(); ++i) CHECK(tokens[i].begin >= tokens[i - 1].end);
  }
}

TEST_CASE("tokenize is pure") {
  const std::string text = "a\nb";
  auto first = tokenize(text);
  auto second = tokenize(text);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].surface == second[i].surface);
    CHECK(first[i].begin == second[i].begin);
    CHECK(first[i].sentence == second[i].sentence);
  }
}
