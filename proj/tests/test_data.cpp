#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mia/data.hpp"
#include "mia/error.hpp"
#include "test_support.hpp"

using namespace mia;

TEST_CASE("blob generation is separable by construction") {
  auto data = generate_blobs(miatest::separable_blobs(3, 10, 7));
  REQUIRE(data.size() == 10);
  for (const auto& s : data) {
    for (double f : s.x.features) {
      if (s.label == 0) CHECK(f < 0.5);
      else CHECK(f > 0.5);
    }
  }
}

TEST_CASE("blob generation is deterministic") {
  BlobConfig cfg{4, 6, {}, 0.15, 40, 99};
  auto a = generate_blobs(cfg);
  auto b = generate_blobs(cfg);
  CHECK(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("blob class assignment is round-robin") {
  BlobConfig cfg{4, 5, {}, 0.1, 100, 3};
  auto data = generate_blobs(cfg);
  // independent count by construction rule
  int counts[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].label == static_cast<int>(i % 4));
    counts[data[i].label]++;
  }
  for (int c : counts) CHECK(c == 25);
}

TEST_CASE("blob configuration errors") {
  CHECK_THROWS_AS(generate_blobs(BlobConfig{1, 3, {}, 0.1, 10, 0}), ConfigError);
  CHECK_THROWS_AS(generate_blobs(BlobConfig{2, 3, {}, 0.1, 0, 0}), ConfigError);
  CHECK_THROWS_AS(generate_blobs(BlobConfig{2, 3, {}, -0.1, 10, 0}), ConfigError);
  BlobConfig bad_means{2, 3, {{0.1, 0.2, 0.3}}, 0.1, 10, 0};
  CHECK_THROWS_AS(generate_blobs(bad_means), ConfigError);
}

TEST_CASE("blob coordinates stay in the unit cube") {
  BlobConfig cfg{3, 8, {}, 0.9, 300, 11};  // large noise forces clipping
  for (const auto& s : generate_blobs(cfg)) {
    for (double f : s.x.features) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("split takes disjoint prefixes of the shuffled corpus") {
  BlobConfig cfg{2, 4, {}, 0.2, 100, 5};
  auto corpus = generate_blobs(cfg);
  DatasetSplit split = split_dataset(corpus, {30, 30, 30}, 17);
  CHECK(split.train.size() == 30);
  CHECK(split.test.size() == 30);
  CHECK(split.shadow.size() == 30);

  // brute-force pairwise identity check across partitions
  auto intersects = [](const std::vector<LabeledSample>& a,
                       const std::vector<LabeledSample>& b) {
    for (const auto& x : a) {
      for (const auto& y : b) {
        if (x == y) return true;
      }
    }
    return false;
  };
  CHECK_FALSE(intersects(split.train, split.test));
  CHECK_FALSE(intersects(split.train, split.shadow));
  CHECK_FALSE(intersects(split.test, split.shadow));

  // every split sample exists in the corpus
  auto in_corpus = [&corpus](const LabeledSample& s) {
    for (const auto& c : corpus) {
      if (c == s) return true;
    }
    return false;
  };
  for (const auto& s : split.train) CHECK(in_corpus(s));
  for (const auto& s : split.test) CHECK(in_corpus(s));
  for (const auto& s : split.shadow) CHECK(in_corpus(s));
}

TEST_CASE("split supports the desk analog of the largest benchmark partition") {
  BlobConfig cfg{2, 2, {}, 0.2, 50000, 1};
  auto corpus = generate_blobs(cfg);
  DatasetSplit split = split_dataset(corpus, {3000, 1000, 46000}, 9);
  CHECK(split.train.size() == 3000);
  CHECK(split.test.size() == 1000);
  CHECK(split.shadow.size() == 46000);
}

TEST_CASE("split edge cases") {
  BlobConfig cfg{2, 3, {}, 0.2, 10, 2};
  auto corpus = generate_blobs(cfg);
  DatasetSplit empty = split_dataset(corpus, {0, 0, 0}, 4);
  CHECK(empty.train.empty());
  CHECK(empty.test.empty());
  CHECK(empty.shadow.empty());
  CHECK_THROWS_AS(split_dataset(corpus, {8, 2, 1}, 4), SizeError);
  CHECK_THROWS_AS(split_dataset(corpus, {-1, 0, 0}, 4), SizeError);
}

TEST_CASE("split is deterministic in the seed") {
  auto corpus = generate_blobs(BlobConfig{2, 3, {}, 0.2, 60, 2});
  DatasetSplit a = split_dataset(corpus, {20, 20, 20}, 123);
  DatasetSplit b = split_dataset(corpus, {20, 20, 20}, 123);
  CHECK(split_digest(a) == split_digest(b));
  DatasetSplit c = split_dataset(corpus, {20, 20, 20}, 124);
  CHECK(split_digest(a) != split_digest(c));
}

TEST_CASE("csv round trip preserves datasets") {
  auto data = generate_blobs(BlobConfig{3, 5, {}, 0.2, 50, 21});
  const std::string path = "tmp_roundtrip.csv";
  save_csv(data, path);
  auto loaded = load_csv(path, 3);
  REQUIRE(loaded.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(loaded[i].label == data[i].label);
    for (std::size_t k = 0; k < data[i].x.features.size(); ++k) {
      CHECK(std::abs(loaded[i].x.features[k] - data[i].x.features[k]) <= 1e-9);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv header detection") {
  const std::string path = "tmp_header.csv";
  {
    std::ofstream out(path);
    out << "f0,f1,label\n";
    out << "0.100000000,0.200000000,1\n";
    out << "0.300000000,0.400000000,0\n";
  }
  auto loaded = load_csv(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].label == 1);
  CHECK(loaded[0].x.features[0] == doctest::Approx(0.1));
  CHECK(loaded[1].label == 0);
  std::filesystem::remove(path);
}

TEST_CASE("csv rejects bad rows with the row number") {
  const std::string path = "tmp_bad.csv";
  auto write_and_expect = [&](const std::string& content, std::size_t bad_row) {
    {
      std::ofstream out(path);
      out << content;
    }
    try {
      load_csv(path, 4);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == bad_row);
    }
  };
  write_and_expect("0.1,0.2,-1\n", 1);              // negative label
  write_and_expect("0.1,0.2,0\n0.5,1.5,1\n", 2);    // feature out of range
  write_and_expect("0.1,0.2,0\n0.5,abc,1\n", 2);    // non-numeric feature
  write_and_expect("0.1,0.2,0\n0.1,0.2,0.5\n", 2);  // non-integer label
  write_and_expect("0.1,0.2,0\n0.1,0.2\n", 2);      // missing field
  write_and_expect("0.1,0.2,0\n0.3,0.4,9\n", 2);    // label >= num_classes
  std::filesystem::remove(path);
}

TEST_CASE("loaded features stay in the unit cube by validation") {
  auto data = generate_blobs(BlobConfig{2, 4, {}, 0.5, 40, 8});
  const std::string path = "tmp_bounds.csv";
  save_csv(data, path);
  for (const auto& s : load_csv(path)) {
    for (double f : s.x.features) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
  std::filesystem::remove(path);
}
