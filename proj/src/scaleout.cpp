#include "mobsim/scaleout.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mobsim/parallel.hpp"

namespace mobsim {

namespace {

std::vector<double> unit(std::vector<double> v, const std::string& who) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (!(n2 > 0.0)) throw std::invalid_argument("profile " + who + " encodes to a zero vector");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

std::string profile_text(const UserProfile& p) {
  std::ostringstream os;
  for (const auto& [k, v] : p.attributes) {
    os << k << ": ";
    if (std::holds_alternative<double>(v)) {
      os << std::get<double>(v);
    } else {
      os << std::get<std::string>(v);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

ProfileEncoder ProfileEncoder::fit(std::span<const UserProfile> population) {
  if (population.empty()) throw std::invalid_argument("profile encoder: empty population");
  ProfileEncoder enc;
  const UserProfile& first = population.front();
  for (const auto& [key, value] : first.attributes) {
    Feature f;
    f.key = key;
    f.categorical = std::holds_alternative<std::string>(value);
    enc.features_.push_back(std::move(f));
  }
  for (Feature& f : enc.features_) {
    std::set<std::string> cats;
    double sum = 0.0;
    double sum2 = 0.0;
    for (const UserProfile& p : population) {
      const AttributeValue* v = p.find(f.key);
      if (!v) throw std::invalid_argument("profile " + p.id + " has no attribute '" + f.key + "'");
      if (f.categorical) {
        if (!std::holds_alternative<std::string>(*v)) {
          throw std::invalid_argument("attribute '" + f.key + "' mixes text and numbers");
        }
        cats.insert(std::get<std::string>(*v));
      } else {
        if (!std::holds_alternative<double>(*v)) {
          throw std::invalid_argument("attribute '" + f.key + "' mixes text and numbers");
        }
        sum += std::get<double>(*v);
        sum2 += std::get<double>(*v) * std::get<double>(*v);
      }
    }
    f.offset = enc.dims_;
    if (f.categorical) {
      f.categories.assign(cats.begin(), cats.end());
      enc.dims_ += f.categories.size();
    } else {
      const auto n = static_cast<double>(population.size());
      f.mean = sum / n;
      const double var = std::max(0.0, sum2 / n - f.mean * f.mean);
      f.sd = var > 0.0 ? std::sqrt(var) : 1.0;
      enc.dims_ += 1;
    }
  }
  return enc;
}

std::vector<double> ProfileEncoder::encode(const UserProfile& p) const {
  if (p.attributes.size() != features_.size()) {
    throw std::invalid_argument("profile " + p.id + ": attribute schema does not match (dimension mismatch)");
  }
  std::vector<double> v(dims_, 0.0);
  for (const Feature& f : features_) {
    const AttributeValue* a = p.find(f.key);
    if (!a) throw std::invalid_argument("profile " + p.id + ": missing attribute '" + f.key + "' (dimension mismatch)");
    if (f.categorical) {
      if (!std::holds_alternative<std::string>(*a)) throw std::invalid_argument("profile " + p.id + ": '" + f.key + "' must be text");
      const auto it = std::lower_bound(f.categories.begin(), f.categories.end(), std::get<std::string>(*a));
      // unseen categories simply match nothing
      if (it != f.categories.end() && *it == std::get<std::string>(*a)) {
        v[f.offset + static_cast<std::size_t>(it - f.categories.begin())] = 1.0;
      }
    } else {
      if (!std::holds_alternative<double>(*a)) throw std::invalid_argument("profile " + p.id + ": '" + f.key + "' must be numeric");
      v[f.offset] = (std::get<double>(*a) - f.mean) / f.sd;
    }
  }
  return unit(std::move(v), p.id);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw std::invalid_argument("cosine: zero vector");
  return ab / std::sqrt(aa * bb);
}

ExtendResult extend(const PromptSet& optimized, std::span<const UserProfile> full, EmbeddingBackend* embedding) {
  if (optimized.prompts.empty()) throw std::invalid_argument("extend: the optimized subset is empty");
  if (full.empty()) throw std::invalid_argument("extend: the full population is empty");
  std::map<std::string, std::size_t> full_index;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (!full_index.emplace(full[i].id, i).second) throw std::invalid_argument("extend: duplicate user " + full[i].id);
  }
  for (const auto& [id, doc] : optimized.prompts) {
    if (!full_index.contains(id)) throw std::invalid_argument("extend: subset user " + id + " is not in the full population");
  }

  std::vector<std::vector<double>> users(full.size());
  std::vector<const std::pair<const std::string, PromptDoc>*> prompts;
  for (const auto& kv : optimized.prompts) prompts.push_back(&kv);
  std::vector<std::vector<double>> sources(prompts.size());
  if (embedding) {
    for (std::size_t i = 0; i < full.size(); ++i) users[i] = unit(embedding->embed(profile_text(full[i])), full[i].id);
    for (std::size_t j = 0; j < prompts.size(); ++j) {
      sources[j] = unit(embedding->embed(profile_text(prompts[j]->second.profile)), prompts[j]->first);
      if (sources[j].size() != users.front().size()) throw std::invalid_argument("extend: embedding dimension mismatch");
    }
  } else {
    const ProfileEncoder enc = ProfileEncoder::fit(full);
    parallel_for(full.size(), [&](std::size_t i) { users[i] = enc.encode(full[i]); });
    for (std::size_t j = 0; j < prompts.size(); ++j) sources[j] = enc.encode(prompts[j]->second.profile);
  }

  // similarity[j][i] between prompt j and user i
  std::vector<std::vector<double>> sim(prompts.size(), std::vector<double>(full.size()));
  parallel_for(prompts.size(), [&](std::size_t j) {
    for (std::size_t i = 0; i < full.size(); ++i) sim[j][i] = cosine(sources[j], users[i]);
  });

  ExtendResult out;
  out.m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(full.size()) /
                                                                          static_cast<double>(prompts.size()))));
  std::vector<std::size_t> order(prompts.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return prompts[a]->second.revision > prompts[b]->second.revision;
  });

  std::vector<std::optional<std::size_t>> owner(full.size());
  std::size_t unassigned = full.size();
  for (std::size_t j : order) {
    if (unassigned == 0) break;
    const std::string& pid = prompts[j]->first;
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < full.size(); ++i) {
      if (!owner[i]) cand.push_back(i);
    }
    const std::size_t take = std::min(out.m, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (sim[j][a] != sim[j][b]) return sim[j][a] > sim[j][b];
                        const bool self_a = full[a].id == pid;
                        const bool self_b = full[b].id == pid;
                        if (self_a != self_b) return self_a;
                        return full[a].id < full[b].id;
                      });
    for (std::size_t t = 0; t < take; ++t) owner[cand[t]] = j;
    unassigned -= take;
  }
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (owner[i]) continue;
    std::size_t best = 0;
    for (std::size_t j = 1; j < prompts.size(); ++j) {
      if (sim[j][i] > sim[best][i]) best = j;  // prompts are in id order, so ties keep the lower id
    }
    owner[i] = best;
    ++out.remainder;
  }

  out.prompts.seed = optimized.seed;
  for (std::size_t i = 0; i < full.size(); ++i) {
    PromptDoc doc = prompts[*owner[i]]->second;
    doc.profile = full[i];
    out.prompts.prompts.emplace(full[i].id, std::move(doc));
    out.source.emplace(full[i].id, prompts[*owner[i]]->first);
  }
  return out;
}

}  // namespace mobsim
