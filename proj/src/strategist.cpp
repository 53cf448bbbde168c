#include "mobsim/strategist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

#include "mobsim/rng.hpp"

namespace mobsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Lever {
  ParamField field;
  int sign;  // +1 when raising the field raises the measure
};

Lever lever_for(MeasureId m) {
  switch (m) {
    case MeasureId::Radius:
    case MeasureId::Distance:
    case MeasureId::KappaDistance: return {ParamField::JumpKappa, +1};
    case MeasureId::Duration:
    case MeasureId::KappaDuration: return {ParamField::DurKappa, +1};
    case MeasureId::Zeta:
    case MeasureId::ZetaTotal: return {ParamField::ExploreRho, -1};
    case MeasureId::BetaDistance: return {ParamField::JumpBeta, +1};
    case MeasureId::BetaDuration: return {ParamField::DurBeta, +1};
  }
  return {ParamField::JumpKappa, +1};
}

std::string directive_for(ParamField field, bool raise) {
  switch (field) {
    case ParamField::JumpKappa:
      return raise ? "Widening the activity space: include occasional trips to distant destinations."
                   : "Reducing excessive spatial dispersion: keep most trips within the familiar activity area.";
    case ParamField::ExploreRho:
      return raise ? "Adjusting exploration probability: increase visits to new places."
                   : "Adjusting exploration probability: reduce visits to new places and favour familiar ones.";
    case ParamField::DurKappa:
      return raise ? "Increasing routine or location stability: stay longer at each place."
                   : "Shortening stays: split long stays into shorter visits.";
    case ParamField::JumpBeta:
      return raise ? "Making trips more local: long trips become rarer relative to short ones."
                   : "Allowing more long-distance trips relative to short ones.";
    case ParamField::DurBeta:
      return raise ? "Favouring short stays over long ones." : "Allowing more long stays relative to short ones.";
    case ParamField::HomeBias:
      return raise ? "Adding behavioral constraints: stronger home/work anchors."
                   : "Loosening home anchoring at night.";
    case ParamField::ExploreGamma:
      return raise ? "Settling into known places faster over time." : "Keeping curiosity for new places over time.";
  }
  return "Adjusting behavior.";
}

double quantile_sorted(const std::vector<double>& s, double p) {
  const auto idx = static_cast<std::size_t>(p * static_cast<double>(s.size()));
  return s[std::min(idx, s.size() - 1)];
}

bool positive_kind(MeasureId grouping) { return grouping != MeasureId::Zeta; }

double relative_gap(double sim, double target, bool positive) {
  if (positive && sim > 0.0 && target > 0.0) return std::log(sim / target);
  const double scale = std::max(std::abs(target), 1e-12);
  return (sim - target) / scale;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Json bound_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double bound_from_json(const Json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

}  // namespace

bool AdjustmentAction::is_noop() const {
  return std::all_of(deltas.begin(), deltas.end(), [](const ParamDelta& d) { return d.factor == 1.0; });
}

void validate(const AdjustmentAction& a) {
  if (a.id.empty()) throw std::invalid_argument("action: empty id");
  if (a.directive.empty()) throw std::invalid_argument("action " + a.id + ": empty directive");
  if (!(a.group.lower < a.group.upper)) throw std::invalid_argument("action " + a.id + ": group bounds out of order");
  for (const ParamDelta& d : a.deltas) {
    if (!(d.factor > 0.0) || !std::isfinite(d.factor)) {
      throw std::invalid_argument("action " + a.id + ": factors must be positive");
    }
  }
}

MeasureId grouping_measure(MeasureId objective) {
  switch (objective) {
    case MeasureId::BetaDistance:
    case MeasureId::KappaDistance: return MeasureId::Distance;
    case MeasureId::BetaDuration:
    case MeasureId::KappaDuration: return MeasureId::Duration;
    case MeasureId::ZetaTotal: return MeasureId::Zeta;
    default: return objective;
  }
}

std::optional<double> user_group_value(MeasureId measure, const UserMeasures& u) {
  auto log_mean = [](const std::vector<double>& xs) -> std::optional<double> {
    if (xs.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : xs) s += std::log1p(x);
    return std::expm1(s / static_cast<double>(xs.size()));
  };
  switch (grouping_measure(measure)) {
    case MeasureId::Radius:
      if (u.durations.empty()) return std::nullopt;
      return u.radius_m;
    case MeasureId::Duration: return log_mean(u.durations);
    case MeasureId::Distance: return log_mean(u.distances);
    case MeasureId::Zeta: return u.zeta;
    default: return std::nullopt;
  }
}

GapReport analyze_gaps(const GuidanceConfig& cfg, const PopulationSample& sim, const StrategistConfig& sc) {
  if (sc.groups < 1) throw std::invalid_argument("strategist: need at least one group");
  GapReport report;
  for (const ObjectiveSpec& o : cfg.objectives) {
    ObjectiveGap og;
    og.measure = o.measure;
    og.kind = o.kind;
    const MeasureId gm = grouping_measure(o.measure);

    std::vector<double> values;
    for (const UserMeasures& u : sim.users) {
      if (auto v = user_group_value(gm, u)) values.push_back(*v);
    }
    if (values.size() < static_cast<std::size_t>(sc.groups)) {
      og.skipped = "only " + std::to_string(values.size()) + " users have a " + std::string(to_string(gm)) + " value";
      report.objectives.push_back(std::move(og));
      continue;
    }
    std::sort(values.begin(), values.end());

    std::vector<double> sim_sorted;
    std::vector<double> target_sorted;
    try {
      const MeasureValue mv = measure_value(o.measure, sim);
      if (o.kind == DistanceKind::Vector) {
        sim_sorted = mv.samples.samples;
        std::sort(sim_sorted.begin(), sim_sorted.end());
        target_sorted = o.target.samples;
        std::sort(target_sorted.begin(), target_sorted.end());
        og.sim_ccdf = ccdf(mv.samples);
        og.target_ccdf = ccdf(o.target);
      } else {
        og.sim_scalar = mv.scalar;
        og.target_scalar = o.target_scalar;
      }
    } catch (const FitError& e) {
      og.skipped = e.what();
      report.objectives.push_back(std::move(og));
      continue;
    }

    const bool positive = positive_kind(gm);
    // target shares are only comparable when the target holds the grouped quantity itself
    const bool same_quantity = o.kind == DistanceKind::Vector && (gm == MeasureId::Radius || gm == MeasureId::Zeta);
    for (int i = 0; i < sc.groups; ++i) {
      GroupGap g;
      g.group.measure = gm;
      g.group.lower = i == 0 ? -kInf : quantile_sorted(values, static_cast<double>(i) / sc.groups);
      g.group.upper = i + 1 == sc.groups ? kInf : quantile_sorted(values, static_cast<double>(i + 1) / sc.groups);
      g.members = static_cast<std::size_t>(
          std::count_if(values.begin(), values.end(), [&](double v) { return g.group.contains(v); }));
      const double p = (i + 0.5) / sc.groups;
      if (o.kind == DistanceKind::Vector) {
        g.sim_level = quantile_sorted(sim_sorted, p);
        g.target_level = quantile_sorted(target_sorted, p);
        g.log_gap = relative_gap(g.sim_level, g.target_level, positive);
      } else {
        g.sim_level = quantile_sorted(values, p);
        g.target_level = og.target_scalar;
        g.log_gap = relative_gap(og.sim_scalar, og.target_scalar, og.target_scalar > 0.0);
      }
      if (same_quantity) {
        g.target_share = static_cast<double>(std::count_if(target_sorted.begin(), target_sorted.end(),
                                                           [&](double v) { return g.group.contains(v); })) /
                         static_cast<double>(target_sorted.size());
      } else {
        g.target_share = static_cast<double>(g.members) / static_cast<double>(values.size());
      }
      og.groups.push_back(g);
    }

    if (o.kind == DistanceKind::Vector) {
      const double cut = quantile_sorted(target_sorted, 0.9);
      auto share_above = [&](const std::vector<double>& s) {
        return static_cast<double>(s.end() - std::upper_bound(s.begin(), s.end(), cut)) / static_cast<double>(s.size());
      };
      const double sa = share_above(sim_sorted);
      const double ta = share_above(target_sorted);
      og.descriptors.push_back(std::string(sa > ta ? "excess" : "missing") + " mass above " + fmt(cut) + ": " +
                               fmt(100 * sa) + "% simulated vs " + fmt(100 * ta) + "% target");
    } else {
      og.descriptors.push_back("simulated " + fmt(og.sim_scalar) + " vs target " + fmt(og.target_scalar));
    }
    for (int i = 0; i < sc.groups; ++i) {
      const GroupGap& g = og.groups[i];
      if (std::abs(g.log_gap) < sc.noop_log_gap) continue;
      og.descriptors.push_back("group " + std::to_string(i + 1) + ": " + (g.log_gap > 0 ? "overshoots" : "undershoots") +
                               " (simulated " + fmt(g.sim_level) + " vs target " + fmt(g.target_level) + ")");
    }
    report.objectives.push_back(std::move(og));
  }
  return report;
}

std::vector<AdjustmentAction> build_action_space(const GapReport& gap, const GuidanceConfig& /*cfg*/,
                                                 const StrategistConfig& sc) {
  std::vector<AdjustmentAction> out;
  std::vector<std::pair<MeasureId, GroupPredicate>> seen;
  for (const ObjectiveGap& og : gap.objectives) {
    if (!og.skipped.empty()) continue;
    const Lever lever = lever_for(og.measure);
    for (std::size_t i = 0; i < og.groups.size(); ++i) {
      const GroupGap& g = og.groups[i];
      const auto key = std::make_pair(og.measure, g.group);
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
      seen.push_back(key);
      int direction = 0;  // desired change of the measure
      if (g.log_gap > sc.noop_log_gap) direction = -1;
      if (g.log_gap < -sc.noop_log_gap) direction = +1;
      if (direction == 0 && !sc.keep_noop_actions) continue;

      AdjustmentAction a;
      a.id = std::string(to_string(og.measure)) + "-g" + std::to_string(i + 1);
      a.measure = og.measure;
      a.group = g.group;
      a.target_share = g.target_share;
      if (direction == 0) {
        a.deltas = {{lever.field, 1.0}};
        a.directive = "Keeping current behavior for this group.";
      } else {
        const bool raise = direction * lever.sign > 0;
        a.deltas = {{lever.field, raise ? 1.0 + sc.delta : 1.0 - sc.delta}};
        a.directive = directive_for(lever.field, raise);
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<ParamDelta> deltas_for_directive(const std::string& text, double delta) {
  struct Entry {
    std::string_view phrase;
    ParamField field;
    int direction;  // 0: decided by qualifiers in the text
  };
  static const std::array<Entry, 8> kVocabulary{{
      {"home/work anchor", ParamField::HomeBias, +1},
      {"home anchor", ParamField::HomeBias, +1},
      {"excessive spatial dispersion", ParamField::JumpKappa, -1},
      {"exploration probability", ParamField::ExploreRho, 0},
      {"routine or location stability", ParamField::DurKappa, +1},
      {"widening the activity space", ParamField::JumpKappa, +1},
      {"shortening stays", ParamField::DurKappa, -1},
      {"more local", ParamField::JumpBeta, +1},
  }};
  const std::string t = lower(text);
  const bool says_more = t.find("increase") != std::string::npos || t.find("raise") != std::string::npos ||
                         t.find("more often") != std::string::npos || t.find("higher") != std::string::npos;
  std::vector<ParamDelta> out;
  for (const Entry& e : kVocabulary) {
    if (t.find(e.phrase) == std::string::npos) continue;
    if (std::any_of(out.begin(), out.end(), [&](const ParamDelta& d) { return d.field == e.field; })) continue;
    const int dir = e.direction != 0 ? e.direction : (says_more ? +1 : -1);
    out.push_back({e.field, dir > 0 ? 1.0 + delta : 1.0 - delta});
  }
  return out;
}

std::vector<ChatMessage> render_strategy_prompt(const GapReport& gap, const GuidanceConfig& cfg) {
  const ObjectiveGap* focus = nullptr;
  for (const auto& og : gap.objectives) {
    if (og.skipped.empty()) {
      focus = &og;
      break;
    }
  }
  const std::string measure = focus ? std::string(to_string(focus->measure)) : "radius";
  std::ostringstream sys;
  sys << "ROLE\nYou are an expert in human mobility modeling, urban science, statistical physics of mobility, and "
         "LLM-based synthetic population simulation. You interpret heavy-tailed spatial distributions and diagnose "
         "behavioral biases in synthetic mobility data.";
  std::ostringstream user;
  user << "BACKGROUND\nSimulated trajectories are generated from per-person prompts and compared with reference "
          "mobility data (shared data type "
       << to_string(cfg.shared_data_type) << "). The goal is to improve realism by adjusting personas or behavioral rules.\n\n";
  user << "INPUT DATA\n";
  for (const auto& og : gap.objectives) {
    user << "- " << to_string(og.measure) << ":";
    if (!og.skipped.empty()) {
      user << " not available (" << og.skipped << ")\n";
      continue;
    }
    for (const auto& d : og.descriptors) user << "\n  * " << d;
    user << "\n";
  }
  if (focus) {
    user << "\nSimulated " << measure << " quantile groups (lower bound, simulated level, target level):\n";
    for (std::size_t i = 0; i < focus->groups.size(); ++i) {
      const auto& g = focus->groups[i];
      user << "  " << i + 1 << ". " << (std::isfinite(g.group.lower) ? fmt(g.group.lower) : "-inf") << ", "
           << fmt(g.sim_level) << ", " << fmt(g.target_level) << "\n";
    }
  }
  user << "\nTASK 1 - Population-level Diagnosis\nBriefly explain what the differences suggest about overall activity "
          "space and which mobility archetypes are over- or underrepresented.\n\n";
  user << "TASK 2 - Population Groups\nDefine 4-6 groups that partition individuals by " << measure
       << " (small to large). For each group give a name, a " << measure
       << " range with clear thresholds, a one-sentence behavioral description and a target proportion (%).\n\n";
  user << "TASK 3 - Adjustment Strategy\nFor each group give one concrete adjustment, for example: adding behavioral "
          "constraints (e.g., stronger home/work anchors), reducing excessive spatial dispersion, increasing routine "
          "or location stability, adjusting exploration probability.\n\n";
  user << "OUTPUT FORMAT\n1. Population Diagnosis\n2. Population Groups Table as Markdown with columns:\n"
          "Group Name | "
       << (measure.empty() ? "Range" : measure + " Range")
       << " | Behavioral Description | Target proportion % | Adjustment Strategy\n";
  return {{"system", sys.str()}, {"user", user.str()}};
}

namespace {

std::vector<std::string> table_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == '|') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  // drop the empty edges of "| a | b |"
  if (!cells.empty() && cells.front().find_first_not_of(" \t") == std::string::npos) cells.erase(cells.begin());
  if (!cells.empty() && cells.back().find_first_not_of(" \t\r") == std::string::npos) cells.pop_back();
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t*");
    const auto e = c.find_last_not_of(" \t\r*");
    c = b == std::string::npos ? "" : c.substr(b, e - b + 1);
  }
  return cells;
}

double unit_scale(const std::string& unit, MeasureId measure) {
  const MeasureId gm = grouping_measure(measure);
  if (gm == MeasureId::Radius || gm == MeasureId::Distance) {
    if (unit == "km") return 1000.0;
    return 1.0;
  }
  if (gm == MeasureId::Duration) {
    if (unit == "h" || unit == "hr" || unit == "hrs" || unit == "hour" || unit == "hours") return 2.0;
    if (unit == "min" || unit == "mins" || unit == "minutes") return 1.0 / 30.0;
  }
  return 1.0;
}

std::optional<std::pair<double, double>> parse_range(const std::string& text, MeasureId measure) {
  static const std::regex number(R"((\d+(?:\.\d+)?)\s*(km|m|h|hr|hrs|hours?|mins?|minutes|slots?)?)");
  std::vector<double> values;
  std::string last_unit;
  std::vector<std::string> units;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
    values.push_back(std::stod((*it)[1].str()));
    units.push_back((*it)[2].str());
    if (!units.back().empty()) last_unit = units.back();
  }
  if (values.empty()) return std::nullopt;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] *= unit_scale(units[i].empty() ? last_unit : units[i], measure);
  }
  const std::string t = lower(text);
  const bool below = t.find('<') != std::string::npos || t.find("below") != std::string::npos ||
                     t.find("under") != std::string::npos || t.find("less than") != std::string::npos;
  const bool above = t.find('>') != std::string::npos || t.find('+') != std::string::npos ||
                     t.find("above") != std::string::npos || t.find("over") != std::string::npos ||
                     t.find("more than") != std::string::npos;
  if (values.size() >= 2) return std::make_pair(values[0], values[1]);
  if (below) return std::make_pair(-kInf, values[0]);
  if (above) return std::make_pair(values[0], kInf);
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<AdjustmentAction>> parse_strategy_reply(const std::string& reply, MeasureId measure,
                                                                  const StrategistConfig& sc) {
  std::istringstream is(reply);
  std::string line;
  bool in_table = false;
  std::vector<AdjustmentAction> out;
  while (std::getline(is, line)) {
    if (line.find('|') == std::string::npos) {
      if (in_table && !out.empty()) break;
      continue;
    }
    const auto cells = table_cells(line);
    if (cells.size() < 4) continue;
    const std::string first = lower(cells[0]);
    if (!in_table) {
      if (first.find("group") != std::string::npos) in_table = true;
      continue;
    }
    if (cells[0].find("---") != std::string::npos || cells[1].find("---") != std::string::npos) continue;
    const auto range = parse_range(cells[1], measure);
    if (!range) return std::nullopt;
    AdjustmentAction a;
    a.measure = measure;
    a.group = {grouping_measure(measure), range->first, range->second};
    static const std::regex pct(R"((\d+(?:\.\d+)?))");
    std::smatch m;
    if (std::regex_search(cells[3], m, pct)) a.target_share = std::stod(m[1].str()) / 100.0;
    const std::string strategy = cells.size() >= 5 && !cells[4].empty() ? cells[4] : cells[2];
    a.directive = strategy;
    a.deltas = deltas_for_directive(strategy, sc.delta);
    if (a.deltas.empty()) a.deltas = {{lever_for(measure).field, 1.0}};
    out.push_back(std::move(a));
  }
  if (out.size() < 2) return std::nullopt;
  // ranges must come in increasing, non-overlapping order
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.group.lower < b.group.lower; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i].group.lower < out[i].group.upper)) return std::nullopt;
    if (i > 0 && out[i].group.lower < out[i - 1].group.upper - 1e-9 * std::abs(out[i - 1].group.upper)) return std::nullopt;
    out[i].id = std::string(to_string(measure)) + "-ext" + std::to_string(i + 1);
  }
  return out;
}

std::vector<AdjustmentAction> build_action_space_external(const GapReport& gap, const GuidanceConfig& cfg,
                                                          ChatBackend& backend, const StrategistConfig& sc,
                                                          std::string* warning) {
  auto rule_based = build_action_space(gap, cfg, sc);
  auto warn = [&](const std::string& w) {
    if (warning) *warning = w;
  };
  const ObjectiveGap* focus = nullptr;
  for (const auto& og : gap.objectives) {
    if (og.skipped.empty()) {
      focus = &og;
      break;
    }
  }
  if (!focus) {
    warn("no objective to analyse; using rule-based actions");
    return rule_based;
  }
  std::optional<std::vector<AdjustmentAction>> parsed;
  try {
    parsed = parse_strategy_reply(backend.complete(render_strategy_prompt(gap, cfg)), focus->measure, sc);
  } catch (const BackendError& e) {
    warn(std::string("strategy request failed (") + e.what() + "); using rule-based actions");
    return rule_based;
  }
  if (!parsed) {
    warn("strategy reply had no usable groups table; using rule-based actions");
    return rule_based;
  }
  // the reply replaces the rule-based groups of the analysed objective only
  std::vector<AdjustmentAction> out = std::move(*parsed);
  for (auto& a : rule_based) {
    if (a.measure != focus->measure) out.push_back(std::move(a));
  }
  return out;
}

ApplyResult apply_action(const PromptSet& ps, const AdjustmentAction& a, const PopulationSample& measured,
                         double k_percent, std::uint64_t seed) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw std::invalid_argument("apply_action: k must be in (0, 100]");
  validate(a);
  std::vector<std::string> members;
  for (std::size_t i = 0; i < measured.users.size(); ++i) {
    const auto v = user_group_value(a.group.measure, measured.users[i]);
    if (v && a.group.contains(*v) && ps.prompts.contains(measured.user_ids[i])) members.push_back(measured.user_ids[i]);
  }
  ApplyResult r;
  r.prompts = ps;
  if (members.empty()) {
    r.noop = true;
    return r;
  }
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  const auto want = static_cast<std::size_t>(
      std::ceil(k_percent * static_cast<double>(members.size()) / 100.0 - 1e-9));
  const std::size_t count = std::clamp<std::size_t>(want, 1, members.size());
  Rng rng(derive_seed(seed, "select:" + a.id));
  for (std::size_t i = 0; i < count; ++i) std::swap(members[i], members[i + rng.below(members.size() - i)]);
  members.resize(count);
  std::sort(members.begin(), members.end());

  const bool noop = a.is_noop();
  for (const std::string& id : members) {
    PromptDoc& doc = r.prompts.prompts.at(id);
    for (const ParamDelta& d : a.deltas) scale_clamped(doc.params, d.field, d.factor);
    if (!noop) doc.constraints.push_back(a.directive);
    ++doc.revision;
  }
  r.selected = std::move(members);
  return r;
}

Json to_json(const AdjustmentAction& a) {
  Json deltas = Json::array();
  for (const ParamDelta& d : a.deltas) deltas.push_back({{"field", std::string(to_string(d.field))}, {"factor", d.factor}});
  return {{"id", a.id},
          {"measure", std::string(to_string(a.measure))},
          {"group",
           {{"measure", std::string(to_string(a.group.measure))},
            {"lower", bound_json(a.group.lower)},
            {"upper", bound_json(a.group.upper)}}},
          {"directive", a.directive},
          {"deltas", deltas},
          {"target_share", a.target_share}};
}

AdjustmentAction action_from_json(const Json& j) {
  AdjustmentAction a;
  a.id = j.at("id").get<std::string>();
  a.measure = measure_id_from_string(j.at("measure").get<std::string>());
  const Json& g = j.at("group");
  a.group.measure = measure_id_from_string(g.value("measure", std::string(to_string(grouping_measure(a.measure)))));
  a.group.lower = bound_from_json(g.value("lower", Json(nullptr)), -kInf);
  a.group.upper = bound_from_json(g.value("upper", Json(nullptr)), kInf);
  a.directive = j.at("directive").get<std::string>();
  for (const auto& d : j.at("deltas")) {
    a.deltas.push_back({param_field_from_string(d.at("field").get<std::string>()), d.at("factor").get<double>()});
  }
  a.target_share = j.value("target_share", 0.0);
  validate(a);
  return a;
}

Json actions_to_json(const std::vector<AdjustmentAction>& actions) {
  Json arr = Json::array();
  for (const auto& a : actions) arr.push_back(to_json(a));
  return {{"actions", arr}};
}

std::vector<AdjustmentAction> actions_from_json(const Json& j) {
  const Json& arr = j.is_array() ? j : j.at("actions");
  std::vector<AdjustmentAction> out;
  std::map<std::string, int> ids;
  for (const auto& aj : arr) {
    out.push_back(action_from_json(aj));
    if (ids[out.back().id]++ > 0) throw std::invalid_argument("duplicate action id " + out.back().id);
  }
  return out;
}

}  // namespace mobsim
