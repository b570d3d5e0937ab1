// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <fstream>

#include "lasskit/common.hpp"
#include "lasskit/query.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("query");

TEST_CASE("canonicalization folds case and whitespace") {
  CHECK(canonicalize_query("  Dog barking\t loudly ") == "dog barking loudly");
  CHECK(canonicalize_query("CAT") == "cat");
  CHECK(canonicalize_query("") == "");
  // idempotent
  for (const char* s : {"A  b C", " x ", "already canonical"}) {
    const std::string once = canonicalize_query(s);
    CHECK(canonicalize_query(once) == once);
  }
}

TEST_CASE("vocabulary deduplicates canonicalized labels") {
  auto v = build_vocab({"Dog", "dog ", "cat"}, 8, 1);
  CHECK(v.size() == 2);
  CHECK(v.find("dog") >= 0);
  CHECK(v.find("cat") >= 0);
  CHECK(v.find("bird") == -1);
}

TEST_CASE("vocabulary build is deterministic and shaped |V| x D") {
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) labels.push_back("label " + std::to_string(i));
  auto a = build_vocab(labels, 64, 7);
  auto b = build_vocab(labels, 64, 7);
  CHECK(a.table.size() == 10 * 64);
  CHECK(a.table == b.table);  // bit-identical
  auto c = build_vocab(labels, 64, 8);
  CHECK(a.table != c.table);
}

TEST_CASE("embedding rows are unit norm and distinct") {
  auto v = build_vocab({"dog", "cat"}, 64, 3);
  auto e1 = embed_query(v, "Dog");
  auto e2 = embed_query(v, "cat");
  CHECK(std::abs(l2_norm(e1.vector) - 1.0) < 1e-6);
  CHECK(std::abs(l2_norm(e2.vector) - 1.0) < 1e-6);
  CHECK(e1.vector != e2.vector);
  CHECK_THROWS_AS((void)embed_query(v, "bird"), Error);
  try {
    (void)embed_query(v, "bird");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownQuery);
  }
}

TEST_CASE("empty label list is rejected") {
  CHECK_THROWS_AS((void)build_vocab({}, 8, 0), Error);
}

TEST_CASE("external embedding files load, normalize and canonicalize") {
  test::TempDir tmp("emb");
  {
    std::ofstream f(tmp.file("e.jsonl"));
    f << R"({"key": "Dog Bark", "vec": [3.0, 4.0]})" << "\n";
    f << R"({"key": "rain", "vec": [0.0, 2.0]})" << "\n";
  }
  auto m = load_external_embeddings(tmp.file("e.jsonl"));
  REQUIRE(m.size() == 2);
  CHECK(m.count("dog bark") == 1);
  CHECK(m.at("dog bark").vector[0] == doctest::Approx(0.6));
  CHECK(m.at("dog bark").vector[1] == doctest::Approx(0.8));
  CHECK(m.at("rain").vector[1] == doctest::Approx(1.0));
  CHECK(m.at("rain").source == EmbeddingSource::kExternal);
}

TEST_CASE("dimension mismatches name the offending line") {
  test::TempDir tmp("embdim");
  {
    std::ofstream f(tmp.file("bad.jsonl"));
    f << R"({"key": "a", "vec": [1, 0, 0]})" << "\n";
    f << R"({"key": "b", "vec": [1, 0]})" << "\n";
  }
  try {
    (void)load_external_embeddings(tmp.file("bad.jsonl"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("malformed JSON lines are rejected with their line number") {
  test::TempDir tmp("embjson");
  {
    std::ofstream f(tmp.file("bad.jsonl"));
    f << R"({"key": "a", "vec": [1, 0]})" << "\n";
    f << "not json\n";
  }
  try {
    (void)load_external_embeddings(tmp.file("bad.jsonl"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("an empty embedding file is a valid empty map") {
  test::TempDir tmp("embempty");
  std::ofstream(tmp.file("empty.jsonl")).close();
  auto m = load_external_embeddings(tmp.file("empty.jsonl"));
  CHECK(m.empty());
}

TEST_SUITE_END();
