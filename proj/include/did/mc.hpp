#pragma once

// Monte Carlo harness over the DGP presets.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace did {

class RunningStats {
 public:
  void add(double x);
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // sample variance (n-1)
  double sd() const;
  double mc_se() const;  // sd / sqrt(n)

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Runs fn(rep) for rep in [0, reps) on up to `threads` workers. fn must write
// only to rep-indexed storage; results are independent of the thread count.
void for_each_replication(std::size_t reps, unsigned threads,
                          const std::function<void(std::size_t)>& fn);

struct McOptions {
  std::string scenario = "null";
  std::size_t n_units = 2000;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double alpha = 0.05;
};

struct McStat {
  std::string estimator;  // never, nyt, nyt-all, gmm-not-yet, gmm-all-groups
  std::string target;     // "ATT(g,t)", "es(e)", "ATT_simple"
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double mc_se = 0.0;
  double coverage = 0.0;  // analytic pointwise interval at level 1-alpha
  std::size_t reps = 0;
};

// Overidentification test rejection frequency at level alpha.
struct McTest {
  std::string estimator;
  int df = 0;
  double rejection_rate = 0.0;
  double mean_J = 0.0;
  std::size_t reps = 0;
};

struct McReport {
  McOptions options;
  std::vector<McStat> stats;
  std::vector<McTest> j_tests;
  std::vector<std::string> warnings;
};

McReport monte_carlo(const McOptions& options);

}  // namespace did
