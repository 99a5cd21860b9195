#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cgar/replay.hpp"

using namespace cgar;

namespace {

Transition tr(double tag) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(1, tag);
  t.action = Eigen::VectorXd::Constant(1, 0.0);
  t.reward = tag;
  t.next_state = t.state;
  t.done = false;
  return t;
}

}  // namespace

TEST_CASE("push: FIFO eviction at capacity") {
  ReplayBuffer buf(2);
  buf.push(tr(1));
  buf.push(tr(2));
  buf.push(tr(3));
  CHECK(buf.size() == 2);
  // oldest (1) evicted; storage holds {3, 2}
  std::vector<double> tags{buf.at(0).reward, buf.at(1).reward};
  CHECK(((tags[0] == 3 && tags[1] == 2) || (tags[0] == 2 && tags[1] == 3)));
  for (double t : tags) CHECK(t != 1);
}

TEST_CASE("push: size grows until capacity") {
  ReplayBuffer buf(5);
  buf.push(tr(1));
  CHECK(buf.size() == 1);
}

TEST_CASE("push: cursor wraps after capacity pushes") {
  ReplayBuffer buf(4);
  for (int i = 0; i < 4; ++i) buf.push(tr(i));
  CHECK(buf.size() == 4);
  CHECK(buf.cursor() == 0);
}

TEST_CASE("after N > capacity pushes only the last capacity items remain") {
  const std::size_t cap = 16;
  ReplayBuffer buf(cap);
  const int n = 100;
  for (int i = 0; i < n; ++i) buf.push(tr(i));
  CHECK(buf.size() == cap);
  std::vector<bool> present(n, false);
  for (std::size_t i = 0; i < cap; ++i)
    present[static_cast<int>(buf.at(i).reward)] = true;
  for (int i = 0; i < n; ++i)
    CHECK(present[i] == (i >= n - static_cast<int>(cap)));
}

TEST_CASE("sample: buffer of one, n=3 returns it three times") {
  ReplayBuffer buf(10);
  buf.push(tr(42));
  Rng rng(0);
  auto batch = buf.sample_batch(3, rng);
  REQUIRE(batch.size() == 3);
  for (const auto& t : batch) CHECK(t.reward == 42);
}

TEST_CASE("sample: n=0 gives an empty batch") {
  ReplayBuffer buf(10);
  Rng rng(0);
  CHECK(buf.sample_batch(0, rng).empty());
}

TEST_CASE("sample: empty buffer cannot serve a batch") {
  ReplayBuffer buf(10);
  Rng rng(0);
  CHECK_THROWS_AS(buf.sample_batch(1, rng), ContractViolation);
}

TEST_CASE("sample: never returns evicted transitions") {
  ReplayBuffer buf(8);
  for (int i = 0; i < 50; ++i) buf.push(tr(i));
  Rng rng(3);
  for (const auto& t : buf.sample_batch(200, rng))
    CHECK(t.reward >= 42);  // only the last 8 survive
}

TEST_CASE("sample: uniformity over a large buffer (chi-square)") {
  const int n_items = 10000;
  ReplayBuffer buf(n_items);
  for (int i = 0; i < n_items; ++i) buf.push(tr(i));
  Rng rng(12345);
  std::vector<long> counts(n_items, 0);
  const int batches = 1000, batch_size = 256;
  for (int b = 0; b < batches; ++b)
    for (const auto& t : buf.sample_batch(batch_size, rng))
      ++counts[static_cast<int>(t.reward)];

  const double total = static_cast<double>(batches) * batch_size;
  const double expected = total / n_items;
  // chi-square statistic ~ chi2(n_items - 1): mean n-1, variance 2(n-1)
  double chi2 = 0.0;
  double max_dev = 0.0;
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / n_items));
  for (long c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
    max_dev = std::max(max_dev, std::abs(c - expected) / sigma);
  }
  const double dof = n_items - 1;
  CHECK(std::abs(chi2 - dof) < 5.0 * std::sqrt(2.0 * dof));
  // max over 10^4 roughly-Gaussian cells stays below 5 sigma
  CHECK(max_dev < 5.0);
}
