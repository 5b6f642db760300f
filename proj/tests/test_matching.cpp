#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "lipr/matching.hpp"

using namespace lipr;

namespace {

FeatureSet make_set(const std::vector<Descriptor256>& descs,
                    const std::vector<double>& scores = {}) {
  FeatureSet fs;
  fs.pattern_seed = 42;
  for (std::size_t i = 0; i < descs.size(); ++i) {
    Feature f;
    f.descriptor = descs[i];
    f.kp.score = scores.empty() ? 1000.0 - static_cast<double>(i) : scores[i];
    f.point = {1.0f, 0.0f, 0.0f, 1.0f};
    fs.features.push_back(f);
  }
  return fs;
}

}  // namespace

TEST_CASE("empty inputs produce an empty match set") {
  std::mt19937_64 rng(1);
  const FeatureSet some = make_set({test::random_descriptor(rng)});
  const FeatureSet none = make_set({});
  CHECK(match_features(none, some, 500).empty());
  CHECK(match_features(some, none, 500).empty());
}

TEST_CASE("self-match: all selected features match at distance zero") {
  std::mt19937_64 rng(2);
  std::vector<Descriptor256> descs;
  for (int i = 0; i < 40; ++i) descs.push_back(test::random_descriptor(rng));
  const FeatureSet fs = make_set(descs);

  const MatchSet ms = match_features(fs, fs, 25, 25);
  CHECK(ms.d_min == 0);
  CHECK(ms.lambda_h == 25);  // max(2*0, floor)
  REQUIRE(ms.size() == 25);  // |top-N_s|
  for (const Match& m : ms.matches) {
    CHECK(m.distance == 0);
    CHECK(m.i_index == m.j_index);
  }
}

TEST_CASE("adaptive threshold: distractors rejected, near matches kept") {
  // true correspondences at small distances, distractors far away
  std::mt19937_64 rng(3);
  std::vector<Descriptor256> base;
  for (int i = 0; i < 20; ++i) base.push_back(test::random_descriptor(rng));

  std::vector<Descriptor256> fi_descs, fj_descs;
  // fj = perturbed copies of fi; pair k at distance k+5 (min distance 5)
  for (int i = 0; i < 10; ++i) {
    fi_descs.push_back(base[static_cast<std::size_t>(i)]);
    fj_descs.push_back(test::perturb(base[static_cast<std::size_t>(i)], i + 5, rng));
  }
  // distractor-only query features whose best match will be >= 90 bits away
  for (int i = 10; i < 16; ++i) fi_descs.push_back(base[static_cast<std::size_t>(i)]);

  const FeatureSet fi = make_set(fi_descs);
  const FeatureSet fj = make_set(fj_descs);
  const MatchSet ms = match_features(fi, fj, 500, 25);

  // d_min = 5 (could be lower if a perturbation undoes itself; seeds avoid it)
  CHECK(ms.d_min == 5);
  CHECK(ms.lambda_h == 25);  // max(10, 25)
  for (const Match& m : ms.matches) {
    CHECK(m.distance < 25);
    CHECK(m.i_index < 10);  // every distractor is rejected
  }
  CHECK(ms.size() >= 8);
}

TEST_CASE("one-to-one: a contested candidate goes to the closer query") {
  std::mt19937_64 rng(4);
  const Descriptor256 target = test::random_descriptor(rng);
  std::vector<Descriptor256> fi_descs = {test::perturb(target, 2, rng),
                                         test::perturb(target, 10, rng)};
  std::vector<Descriptor256> fj_descs = {target};
  const FeatureSet fi = make_set(fi_descs);
  const FeatureSet fj = make_set(fj_descs);
  const MatchSet ms = match_features(fi, fj, 500, 25);
  REQUIRE(ms.size() == 1);
  CHECK(ms.matches[0].i_index == 0);
  CHECK(ms.matches[0].j_index == 0);
  CHECK(ms.matches[0].distance == 2);
}

TEST_CASE("no duplicate candidate indices ever survive") {
  std::mt19937_64 rng(5);
  std::vector<Descriptor256> fi_descs, fj_descs;
  for (int i = 0; i < 60; ++i) fi_descs.push_back(test::random_descriptor(rng));
  for (int i = 0; i < 10; ++i) fj_descs.push_back(test::random_descriptor(rng));
  const MatchSet ms = match_features(make_set(fi_descs), make_set(fj_descs), 60, 300);
  std::vector<char> seen(10, 0);
  for (const Match& m : ms.matches) {
    CHECK(!seen[static_cast<std::size_t>(m.j_index)]);
    seen[static_cast<std::size_t>(m.j_index)] = 1;
  }
}

TEST_CASE("selection is by corner score and N_s is monotone") {
  std::mt19937_64 rng(6);
  std::vector<Descriptor256> descs;
  std::vector<double> scores;
  for (int i = 0; i < 50; ++i) {
    descs.push_back(test::random_descriptor(rng));
    scores.push_back(static_cast<double>(i));  // ascending: best features last
  }
  const FeatureSet fi = make_set(descs, scores);
  const FeatureSet fj = make_set(descs);

  const MatchSet few = match_features(fi, fj, 10, 25);
  CHECK(few.preselected == 10);
  for (const Match& m : few.matches) CHECK(m.i_index >= 40);  // top scores selected

  const MatchSet more = match_features(fi, fj, 30, 25);
  CHECK(more.preselected == 30);
  CHECK(more.preselected >= few.preselected);

  const MatchSet all = match_features(fi, fj, 500, 25);
  CHECK(all.preselected == 50);
}

TEST_CASE("distances reported are true Hamming distances") {
  std::mt19937_64 rng(7);
  std::vector<Descriptor256> fi_descs, fj_descs;
  for (int i = 0; i < 20; ++i) fi_descs.push_back(test::random_descriptor(rng));
  for (int i = 0; i < 20; ++i) fj_descs.push_back(test::random_descriptor(rng));
  const FeatureSet fi = make_set(fi_descs);
  const FeatureSet fj = make_set(fj_descs);
  const MatchSet ms = match_features(fi, fj, 500, 300);
  for (const Match& m : ms.matches) {
    CHECK(m.distance == hamming(fi.features[static_cast<std::size_t>(m.i_index)].descriptor,
                                fj.features[static_cast<std::size_t>(m.j_index)].descriptor));
    CHECK(m.distance < ms.lambda_h);
  }
}
