#include "mobsim/external.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mobsim/parallel.hpp"

namespace mobsim {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint url needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") {
    throw std::invalid_argument("endpoint url scheme '" + scheme + "' is not supported (plain http only)");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string render_profile(const UserProfile& p) {
  std::ostringstream os;
  os << "id: " << p.id;
  for (const auto& [k, v] : p.attributes) {
    os << "\n" << k << ": ";
    if (std::holds_alternative<double>(v)) {
      os << std::get<double>(v);
    } else {
      os << std::get<std::string>(v);
    }
  }
  return os.str();
}

void sleep_backoff(const EndpointConfig& cfg, int attempt) {
  if (cfg.backoff_ms <= 0) return;
  const auto ms = static_cast<long long>(cfg.backoff_ms) << std::min(attempt, 10);
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

EndpointConfig endpoint_from_json(const Json& j) {
  EndpointConfig e;
  e.url = j.value("url", e.url);
  e.token = j.value("token", e.token);
  e.model = j.value("model", e.model);
  e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
  e.max_retries = j.value("max_retries", e.max_retries);
  e.timeout_s = j.value("timeout_s", e.timeout_s);
  e.backoff_ms = j.value("backoff_ms", e.backoff_ms);
  e.embedding_url = j.value("embedding_url", e.embedding_url);
  e.embedding_model = j.value("embedding_model", e.embedding_model);
  if (e.max_in_flight == 0) throw std::invalid_argument("endpoint: max_in_flight must be positive");
  if (e.max_retries < 0) throw std::invalid_argument("endpoint: max_retries must be non-negative");
  if (!(e.timeout_s > 0)) throw std::invalid_argument("endpoint: timeout_s must be positive");
  return e;
}

Json to_json(const EndpointConfig& e) {
  // the token is a secret and never written back out
  return {{"url", e.url},
          {"model", e.model},
          {"max_in_flight", e.max_in_flight},
          {"max_retries", e.max_retries},
          {"timeout_s", e.timeout_s},
          {"backoff_ms", e.backoff_ms},
          {"embedding_url", e.embedding_url},
          {"embedding_model", e.embedding_model}};
}

void apply_env_overrides(EndpointConfig& e) {
  if (const char* url = std::getenv("MOBSIM_ENDPOINT"); url && *url) e.url = url;
  if (const char* token = std::getenv("MOBSIM_TOKEN"); token && *token) e.token = token;
}

Json post_json(const std::string& url, const Json& body, const EndpointConfig& cfg) {
  const SplitUrl u = split_url(url);
  httplib::Client client(u.origin);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!cfg.token.empty()) headers.emplace("Authorization", "Bearer " + cfg.token);

  auto res = client.Post(u.path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError(BackendErrorKind::Network, "request to " + url + " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) throw BackendError(BackendErrorKind::Auth, "endpoint rejected credentials");
  if (status == 429) throw BackendError(BackendErrorKind::RateLimited, "endpoint rate limited the request");
  if (status >= 500) throw BackendError(BackendErrorKind::Server, "endpoint error " + std::to_string(status));
  if (status != 200) throw BackendError(BackendErrorKind::BadResponse, "unexpected status " + std::to_string(status));
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error&) {
    throw BackendError(BackendErrorKind::BadResponse, "reply is not JSON");
  }
}

HttpChatBackend::HttpChatBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw std::invalid_argument("external backend: no endpoint url configured");
  split_url(cfg_.url);
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages) {
  Json msgs = Json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  const Json reply = post_json(cfg_.url, {{"model", cfg_.model}, {"messages", msgs}}, cfg_);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw BackendError(BackendErrorKind::BadResponse, "reply has no choices[0].message.content");
  }
}

HttpEmbeddingBackend::HttpEmbeddingBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.embedding_url.empty()) throw std::invalid_argument("embedding backend: no embedding url configured");
  split_url(cfg_.embedding_url);
}

std::vector<double> HttpEmbeddingBackend::embed(const std::string& text) {
  const Json reply = post_json(cfg_.embedding_url, {{"model", cfg_.embedding_model}, {"input", text}}, cfg_);
  try {
    return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const Json::exception&) {
    throw BackendError(BackendErrorKind::BadResponse, "reply has no data[0].embedding");
  }
}

std::vector<ChatMessage> render_generation_prompt(const PromptDoc& doc, const GridSpec& grid) {
  std::ostringstream sys;
  sys << "You simulate the daily mobility of one person. Reply with a JSON array of stays and nothing else. "
         "Each stay is an object {\"day\", \"start_slot\", \"duration_slots\", \"cell_x\", \"cell_y\"}. "
         "Days run from 0 to "
      << doc.params.num_days - 1 << ", each split into " << grid.slots_per_day << " slots of "
      << grid.slot_seconds() / 60.0 << " minutes. Cells are " << grid.cell_size_m
      << " m grid squares with non-negative integer coordinates. Stays are ordered and do not overlap.";
  std::ostringstream user;
  user << doc.base_text << "\n\nProfile:\n" << render_profile(doc.profile) << "\n\nPersona:\n" << doc.persona;
  user << "\n\nHome cell: (" << doc.params.home_cell.x << ", " << doc.params.home_cell.y << ")";
  if (!doc.constraints.empty()) {
    user << "\n\nConstraints:";
    for (const auto& c : doc.constraints) user << "\n- " << c;
  }
  return {{"system", sys.str()}, {"user", user.str()}};
}

std::vector<Stay> parse_stays_reply(const std::string& content, const GridSpec& grid, int num_days) {
  Json j;
  try {
    j = Json::parse(content);
  } catch (const Json::parse_error&) {
    // tolerate prose or code fences around the array
    const auto open = content.find('[');
    const auto close = content.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw ParseError("reply contains no stay array", 0);
    }
    try {
      j = Json::parse(content.substr(open, close - open + 1));
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("stay array is not valid JSON: ") + e.what(), 0);
    }
  }
  if (j.is_object() && j.contains("stays")) j = j["stays"];
  if (!j.is_array() || j.empty()) throw ParseError("reply is not a non-empty stay array", 0);

  Trajectory t;
  t.num_days = num_days;
  try {
    for (const auto& s : j) {
      const auto day = s.at("day").get<std::int64_t>();
      const auto slot = s.at("start_slot").get<std::int64_t>();
      if (slot < 0 || slot >= grid.slots_per_day) throw ParseError("start_slot outside the day", 0);
      t.stays.push_back({{s.at("cell_x").get<std::int32_t>(), s.at("cell_y").get<std::int32_t>()},
                         day * grid.slots_per_day + slot,
                         s.at("duration_slots").get<std::int64_t>()});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed stay: ") + e.what(), 0);
  }
  try {
    validate(t, grid);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("inconsistent stays: ") + e.what(), 0);
  }
  return std::move(t.stays);
}

GenerationBatchResult generate_external(const PromptSet& ps, const GridSpec& grid, ChatBackend& backend,
                                        const EndpointConfig& cfg) {
  std::vector<const std::pair<const std::string, PromptDoc>*> entries;
  for (const auto& kv : ps.prompts) entries.push_back(&kv);
  std::vector<UserGeneration> results(entries.size());

  parallel_for(
      entries.size(),
      [&](std::size_t i) {
        const auto& [id, doc] = *entries[i];
        UserGeneration& r = results[i];
        const auto messages = render_generation_prompt(doc, grid);
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
          r.attempts = attempt + 1;
          try {
            const std::string content = backend.complete(messages);
            Trajectory t;
            t.user_id = id;
            t.num_days = doc.params.num_days;
            t.stays = parse_stays_reply(content, grid, doc.params.num_days);
            r.trajectory = std::move(t);
            r.status = GenerationStatus::Ok;
            r.message.clear();
            return;
          } catch (const ParseError& e) {
            r.status = GenerationStatus::ParseFailure;
            r.message = e.what();
          } catch (const BackendError& e) {
            r.status = GenerationStatus::BackendError;
            r.message = e.what();
            if (!e.retryable()) return;
            if (attempt < cfg.max_retries) sleep_backoff(cfg, attempt);
          }
        }
      },
      cfg.max_in_flight);

  GenerationBatchResult out;
  for (std::size_t i = 0; i < entries.size(); ++i) out.users.emplace(entries[i]->first, std::move(results[i]));
  return out;
}

}  // namespace mobsim
