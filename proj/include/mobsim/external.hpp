#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mobsim/core.hpp"
#include "mobsim/generator.hpp"
#include "mobsim/io.hpp"

namespace mobsim {

struct EndpointConfig {
  std::string url;  // http://host:port/path of a chat-completions style endpoint
  std::string token;
  std::string model = "mobility-sim";
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  double timeout_s = 60.0;
  int backoff_ms = 250;  // doubled after every failed attempt
  std::string embedding_url;
  std::string embedding_model = "profile-embedding";
};

EndpointConfig endpoint_from_json(const Json& j);
Json to_json(const EndpointConfig& e);
/// MOBSIM_ENDPOINT and MOBSIM_TOKEN replace url and token when set.
void apply_env_overrides(EndpointConfig& e);

struct ChatMessage {
  std::string role;
  std::string content;
};

enum class BackendErrorKind { Network, Auth, RateLimited, Server, BadResponse };

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] BackendErrorKind kind() const { return kind_; }
  [[nodiscard]] bool retryable() const { return kind_ != BackendErrorKind::Auth; }

 private:
  BackendErrorKind kind_;
};

/// One chat completion: returns the assistant message content.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// POSTs {"model", "messages"} and reads choices[0].message.content.
/// Safe to call from several threads.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(EndpointConfig cfg);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  EndpointConfig cfg_;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

/// POSTs {"model", "input"} to embedding_url and reads data[0].embedding.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(EndpointConfig cfg);
  std::vector<double> embed(const std::string& text) override;

 private:
  EndpointConfig cfg_;
};

/// Sends `body` as JSON to `url`, maps transport and status failures onto
/// BackendError and returns the parsed reply.
Json post_json(const std::string& url, const Json& body, const EndpointConfig& cfg);

std::vector<ChatMessage> render_generation_prompt(const PromptDoc& doc, const GridSpec& grid);

/// Reads the reply content as a stay array [{day, start_slot, duration_slots,
/// cell_x, cell_y}, ...]; a JSON object with a "stays" member or text around
/// the array are accepted. Throws ParseError.
std::vector<Stay> parse_stays_reply(const std::string& content, const GridSpec& grid, int num_days);

/// Requests every user concurrently (bounded by max_in_flight). Malformed replies
/// and transient failures are retried with exponential backoff; a user that
/// keeps failing gets parse_failure or backend_error and the batch continues.
GenerationBatchResult generate_external(const PromptSet& ps, const GridSpec& grid, ChatBackend& backend,
                                        const EndpointConfig& cfg);

}  // namespace mobsim
