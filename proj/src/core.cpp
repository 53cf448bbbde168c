#include "mobsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mobsim {

namespace {

struct FieldRange {
  double lo;
  double hi;
};

FieldRange range_of(ParamField field) {
  switch (field) {
    case ParamField::JumpBeta:
    case ParamField::DurBeta:
      return {0.05, 6.0};
    case ParamField::JumpKappa:
      return {100.0, 1e8};
    case ParamField::DurKappa:
      return {0.5, 1e5};
    case ParamField::ExploreRho:
      return {1e-4, 1.0};
    case ParamField::ExploreGamma:
      return {0.0, 5.0};
    case ParamField::HomeBias:
      return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

}  // namespace

void validate(const GridSpec& grid) {
  if (!(grid.cell_size_m > 0.0) || !std::isfinite(grid.cell_size_m)) {
    throw std::invalid_argument("grid: cell_size_m must be positive");
  }
  if (grid.slots_per_day < 1) throw std::invalid_argument("grid: slots_per_day must be >= 1");
  if (std::abs(grid.origin.lat) > 90.0 || std::abs(grid.origin.lon) > 180.0) {
    throw std::invalid_argument("grid: origin outside the coordinate range");
  }
}

void validate(const Trajectory& t, const GridSpec& grid) {
  if (t.num_days < 1) throw std::invalid_argument("trajectory: num_days must be positive");
  const std::int64_t horizon = static_cast<std::int64_t>(t.num_days) * grid.slots_per_day;
  for (std::size_t i = 0; i < t.stays.size(); ++i) {
    const Stay& s = t.stays[i];
    if (s.duration_slots < 1) throw std::invalid_argument("trajectory: stay duration below one slot");
    if (s.cell.x < 0 || s.cell.y < 0) throw std::invalid_argument("trajectory: negative cell index");
    if (s.start_slot < 0 || s.end_slot() > horizon) {
      throw std::invalid_argument("trajectory: stay outside the simulated days");
    }
    if (i > 0 && t.stays[i - 1].end_slot() > s.start_slot) {
      throw std::invalid_argument("trajectory: overlapping stays at index " + std::to_string(i));
    }
  }
}

const AttributeValue* UserProfile::find(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::array<double, 24> default_activity() {
  std::array<double, 24> a{};
  for (int h = 0; h < 24; ++h) {
    if (h < 6) {
      a[h] = 0.1;
    } else if (h == 6) {
      a[h] = 0.5;
    } else if (h < 22) {
      a[h] = 1.0;
    } else {
      a[h] = 0.3;
    }
  }
  return a;
}

void validate(const GeneratorParams& p) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("params: ") + msg);
  };
  require(p.jump_beta > 0.0 && std::isfinite(p.jump_beta), "jump_beta must be positive");
  require(p.dur_beta > 0.0 && std::isfinite(p.dur_beta), "dur_beta must be positive");
  require(p.jump_kappa_m > 0.0 && std::isfinite(p.jump_kappa_m), "jump_kappa_m must be positive");
  require(p.dur_kappa_slots > 0.0 && std::isfinite(p.dur_kappa_slots), "dur_kappa_slots must be positive");
  require(p.explore_rho > 0.0 && p.explore_rho <= 1.0, "explore_rho must lie in (0, 1]");
  require(p.explore_gamma >= 0.0 && std::isfinite(p.explore_gamma), "explore_gamma must be non-negative");
  require(p.home_bias >= 0.0 && p.home_bias <= 1.0, "home_bias must lie in [0, 1]");
  require(p.home_cell.x >= 0 && p.home_cell.y >= 0, "home_cell must be non-negative");
  require(p.num_days >= 1, "num_days must be positive");
  double total = 0.0;
  for (double w : p.activity) {
    require(w >= 0.0 && std::isfinite(w), "activity weights must be non-negative");
    total += w;
  }
  require(total > 0.0, "activity weights must sum to a positive value");
}

std::string_view to_string(ParamField field) {
  switch (field) {
    case ParamField::JumpBeta: return "jump_beta";
    case ParamField::JumpKappa: return "jump_kappa_m";
    case ParamField::DurBeta: return "dur_beta";
    case ParamField::DurKappa: return "dur_kappa_slots";
    case ParamField::ExploreRho: return "explore_rho";
    case ParamField::ExploreGamma: return "explore_gamma";
    case ParamField::HomeBias: return "home_bias";
  }
  return "?";
}

ParamField param_field_from_string(std::string_view name) {
  for (ParamField f : kAllParamFields) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown generator parameter '" + std::string(name) + "'");
}

double get(const GeneratorParams& p, ParamField field) {
  switch (field) {
    case ParamField::JumpBeta: return p.jump_beta;
    case ParamField::JumpKappa: return p.jump_kappa_m;
    case ParamField::DurBeta: return p.dur_beta;
    case ParamField::DurKappa: return p.dur_kappa_slots;
    case ParamField::ExploreRho: return p.explore_rho;
    case ParamField::ExploreGamma: return p.explore_gamma;
    case ParamField::HomeBias: return p.home_bias;
  }
  return 0.0;
}

void set(GeneratorParams& p, ParamField field, double value) {
  switch (field) {
    case ParamField::JumpBeta: p.jump_beta = value; break;
    case ParamField::JumpKappa: p.jump_kappa_m = value; break;
    case ParamField::DurBeta: p.dur_beta = value; break;
    case ParamField::DurKappa: p.dur_kappa_slots = value; break;
    case ParamField::ExploreRho: p.explore_rho = value; break;
    case ParamField::ExploreGamma: p.explore_gamma = value; break;
    case ParamField::HomeBias: p.home_bias = value; break;
  }
}

void scale_clamped(GeneratorParams& p, ParamField field, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("parameter factor must be positive");
  if (factor == 1.0) return;
  const auto r = range_of(field);
  set(p, field, std::clamp(get(p, field) * factor, r.lo, r.hi));
}

}  // namespace mobsim
