#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mobsim/core.hpp"
#include "mobsim/external.hpp"

namespace mobsim {

/// One-hot categorical and standardized numeric features, fitted on a population.
class ProfileEncoder {
 public:
  static ProfileEncoder fit(std::span<const UserProfile> population);

  /// Unit-norm feature vector. Throws std::invalid_argument when the profile's
  /// keys differ from the fitted schema or the vector is zero.
  [[nodiscard]] std::vector<double> encode(const UserProfile& p) const;
  [[nodiscard]] std::size_t dims() const { return dims_; }

 private:
  struct Feature {
    std::string key;
    bool categorical = false;
    std::vector<std::string> categories;  // sorted
    double mean = 0.0;
    double sd = 1.0;
    std::size_t offset = 0;
  };
  std::vector<Feature> features_;
  std::size_t dims_ = 0;
};

double cosine(std::span<const double> a, std::span<const double> b);

struct ExtendResult {
  PromptSet prompts;
  std::map<std::string, std::string> source;  // full-population user -> subset prompt id
  std::size_t m = 0;
  std::size_t remainder = 0;  // users placed after every prompt claimed its m
};

/// Gives every user of the full population a prompt from the optimized subset:
/// prompts, in descending revision order, each claim their m most similar
/// unassigned users; leftovers go to their most similar prompt.
ExtendResult extend(const PromptSet& optimized, std::span<const UserProfile> full,
                    EmbeddingBackend* embedding = nullptr);

}  // namespace mobsim
