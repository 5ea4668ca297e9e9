#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aesthete/assessor.hpp"
#include "aesthete/codec.hpp"
#include "aesthete/normalization.hpp"
#include "aesthete/optimizer.hpp"
#include "aesthete/serialization.hpp"

namespace aesthete {

enum class SessionStatus { Idle, Optimizing, Done, Error };

std::string_view to_string(SessionStatus status) noexcept;
SessionStatus parse_session_status(std::string_view text);

enum class EventKind { IterationDone, PreviewReady, StatusChanged, ParamsChanged };
enum class ParamsSource { User, Optimizer };

std::string_view to_string(EventKind kind) noexcept;
std::string_view to_string(ParamsSource source) noexcept;

/// Immutable snapshot delivered to subscribers. Which payload fields are
/// meaningful depends on `kind`.
struct SessionEvent {
  std::string session_id;
  std::uint64_t sequence = 0;  ///< per-session, strictly increasing
  EventKind kind = EventKind::StatusChanged;
  IterationRecord record;           // IterationDone
  int preview_id = 0;               // PreviewReady
  std::string preview_url;          // PreviewReady
  SessionStatus status = SessionStatus::Idle;  // StatusChanged
  std::string error;                // StatusChanged to Error
  ParamVector params;               // ParamsChanged
  double gamma = 0.0;               // ParamsChanged
  ParamsSource source = ParamsSource::User;  // ParamsChanged
};

Json to_json(const SessionEvent& event);

/// Bounded per-subscriber queue. When full, the oldest PreviewReady event is
/// discarded; every other kind is always kept, so the queue may exceed its
/// capacity when no preview is left to drop.
class EventQueue {
 public:
  explicit EventQueue(std::size_t capacity = 64) : capacity_(capacity) {}

  void push(SessionEvent event);
  /// Blocks up to `timeout`; empty result on timeout or after close once drained.
  std::optional<SessionEvent> pop(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;
  std::size_t size() const;
  std::uint64_t dropped() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SessionEvent> events_;
  std::size_t capacity_;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

struct SessionOptions {
  bool abn = true;
  AbnOptions abn_options;
  OptimizerConfig config;
};

/// One user edit. Applied as unfix, then set, then fix; validated as a whole
/// before anything changes.
struct ParamsUpdate {
  std::vector<std::pair<FilterId, double>> set;
  std::vector<FilterId> fix;
  std::vector<FilterId> unfix;
  std::optional<double> gamma;
};

/// Parses {"set":{...}, "fix":[...], "unfix":[...], "gamma":x}; every key is optional.
ParamsUpdate params_update_from_json(const Json& j);

struct SessionState {
  std::string id;
  ParamVector params;
  double gamma = 0.0;
  SessionStatus status = SessionStatus::Idle;
  std::string error;
  std::vector<IterationRecord> history;
  AbnReport abn_report;
  bool abn_enabled = true;
  OptimizerConfig config;
  std::string assessor;
  int width = 0;
  int height = 0;
};

Json to_json(const SessionState& state);

class Session {
 public:
  static constexpr int kSchemaVersion = 1;

  /// Decodes, normalises, builds the working image and records iteration 0.
  static std::shared_ptr<Session> create(std::string id, std::span<const std::uint8_t> encoded,
                                         std::unique_ptr<Assessor> assessor, SessionOptions options = {});

  /// Reads a directory written by `persist`. Nothing is constructed unless the
  /// whole state parses; errors are Error(Schema) or Error(Io).
  static std::shared_ptr<Session> load(const std::filesystem::path& dir, std::unique_ptr<Assessor> assessor,
                                       std::string id = {});

  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return id_; }
  SessionState state() const;
  SessionStatus status() const;

  /// While optimizing the edit is queued and merged at the next iteration
  /// boundary; the returned state already shows it.
  SessionState set_params(const ParamsUpdate& update);

  /// Starts a background run of `steps` (default: config.max_steps).
  /// Error(Busy, "busy") while a run is active.
  void optimize(std::optional<int> steps = std::nullopt);
  /// Asks the active run to stop at the next iteration boundary.
  void stop();
  /// Blocks until no run is active.
  void wait();

  /// Current K applied to the full-resolution normalised image, as PNG.
  Bytes render();
  ImageBuffer render_image();
  /// 224x224 PNG for a preview id announced by a PreviewReady event.
  Bytes preview(int preview_id);

  std::shared_ptr<EventQueue> subscribe(std::size_t capacity = 64);
  void unsubscribe(const std::shared_ptr<EventQueue>& queue);

  /// Writes session.json, original.png and normalized.png. Error(Busy) while optimizing.
  void persist(const std::filesystem::path& dir) const;

  const ImageBuffer& original() const noexcept { return original_; }
  const ImageBuffer& normalized() const noexcept { return normalized_; }
  const ImageBuffer& working() const noexcept { return working_; }
  const ImageContext& working_context() const noexcept { return working_ctx_; }

 private:
  Session() = default;
  void init_images();
  void emit(SessionEvent event);  // requires mu_
  int add_preview(const ParamVector& params);  // requires mu_
  void finish_run(SessionStatus status, const std::string& error);
  void run_loop(int steps);

  std::string id_;
  ImageBuffer original_;
  ImageBuffer normalized_;
  ImageBuffer working_;
  ImageContext working_ctx_;
  std::unique_ptr<Assessor> assessor_;
  AbnReport abn_report_;
  bool abn_enabled_ = true;

  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  ParamVector params_;
  OptimizerConfig config_;
  SessionStatus status_ = SessionStatus::Idle;
  std::string error_;
  std::vector<IterationRecord> history_;
  std::vector<ParamsUpdate> pending_;
  bool stop_requested_ = false;
  bool running_ = false;
  std::uint64_t next_sequence_ = 1;
  std::map<int, ParamVector> previews_;
  int next_preview_ = 0;
  std::vector<std::shared_ptr<EventQueue>> subscribers_;
  std::jthread worker_;

  std::mutex render_mu_;
  std::optional<ImageContext> full_ctx_;
};

/// In-memory map of live sessions.
class SessionStore {
 public:
  explicit SessionStore(std::string assessor_spec = "proxy", ModelNormalization normalization = {});
  /// Every session gets its own clone of `prototype`.
  explicit SessionStore(std::unique_ptr<Assessor> prototype);

  std::shared_ptr<Session> create(std::span<const std::uint8_t> encoded, SessionOptions options = {});
  std::shared_ptr<Session> load(const std::filesystem::path& dir);
  /// Error(NotFound, "session not found: <id>") for an unknown id.
  std::shared_ptr<Session> get(const std::string& id) const;
  std::vector<std::string> ids() const;
  const std::string& assessor_spec() const noexcept { return assessor_spec_; }

 private:
  std::string next_id();

  std::string assessor_spec_;
  std::unique_ptr<Assessor> prototype_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace aesthete
