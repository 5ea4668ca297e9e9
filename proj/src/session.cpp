#include "aesthete/session.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace aesthete {

namespace {

std::string read_text(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_atomically(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot write " + path.string() + ": " + ec.message());
}

void check_gamma(double gamma) {
  if (!std::isfinite(gamma) || gamma < 0.0) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
}

// Applies `update` to a copy of `params`, throwing before anything is kept.
ParamVector apply_update(ParamVector params, const ParamsUpdate& update) {
  for (FilterId id : update.unfix) params.set_fixed(id, false);
  for (const auto& [id, value] : update.set) {
    if (params.is_fixed(id)) {
      throw Error(ErrorKind::FixedParameter, "parameter is fixed: " + std::string(filter_name(id)));
    }
    const Bounds b = filter_bounds(id);
    if (!(value >= b.lo && value <= b.hi)) {
      throw Error(ErrorKind::OutOfBounds, "parameter out of bounds: " + std::string(filter_name(id)));
    }
    params[id] = value;
  }
  for (FilterId id : update.fix) params.set_fixed(id, true);
  if (update.gamma) check_gamma(*update.gamma);
  return params;
}

}  // namespace

std::string_view to_string(SessionStatus status) noexcept {
  switch (status) {
    case SessionStatus::Idle: return "idle";
    case SessionStatus::Optimizing: return "optimizing";
    case SessionStatus::Done: return "done";
    case SessionStatus::Error: return "error";
  }
  return "idle";
}

SessionStatus parse_session_status(std::string_view text) {
  for (auto s : {SessionStatus::Idle, SessionStatus::Optimizing, SessionStatus::Done, SessionStatus::Error}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorKind::Schema, "invalid field status");
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::IterationDone: return "IterationDone";
    case EventKind::PreviewReady: return "PreviewReady";
    case EventKind::StatusChanged: return "StatusChanged";
    case EventKind::ParamsChanged: return "ParamsChanged";
  }
  return "StatusChanged";
}

std::string_view to_string(ParamsSource source) noexcept {
  return source == ParamsSource::User ? "user" : "optimizer";
}

Json to_json(const SessionEvent& e) {
  Json j{{"session", e.session_id}, {"seq", e.sequence}, {"kind", std::string(to_string(e.kind))}};
  switch (e.kind) {
    case EventKind::IterationDone:
      j["record"] = to_json(e.record);
      break;
    case EventKind::PreviewReady:
      j["preview"] = e.preview_id;
      j["url"] = e.preview_url;
      break;
    case EventKind::StatusChanged:
      j["status"] = std::string(to_string(e.status));
      if (!e.error.empty()) j["error"] = e.error;
      break;
    case EventKind::ParamsChanged:
      j["source"] = std::string(to_string(e.source));
      j["k"] = to_json(e.params.k);
      j["fixed"] = fixed_to_json(e.params);
      j["gamma"] = e.gamma;
      break;
  }
  return j;
}

// --- EventQueue -----------------------------------------------------------------

void EventQueue::push(SessionEvent event) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (events_.size() >= capacity_) {
      const auto it = std::find_if(events_.begin(), events_.end(),
                                   [](const SessionEvent& e) { return e.kind == EventKind::PreviewReady; });
      if (it != events_.end()) {
        events_.erase(it);
        ++dropped_;
      }
    }
    events_.push_back(std::move(event));
  }
  cv_.notify_one();
}

std::optional<SessionEvent> EventQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [this] { return !events_.empty() || closed_; });
  if (events_.empty()) return std::nullopt;
  SessionEvent e = std::move(events_.front());
  events_.pop_front();
  return e;
}

void EventQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::size_t EventQueue::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::uint64_t EventQueue::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

// --- Params updates ------------------------------------------------------------

ParamsUpdate params_update_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "params body must be a JSON object");
  ParamsUpdate u;
  const auto names = [&](const char* key) {
    std::vector<FilterId> out;
    if (!j.contains(key)) return out;
    const Json& list = j.at(key);
    if (!list.is_array()) throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be a list of names");
    for (const Json& n : list) {
      if (!n.is_string()) throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be a list of names");
      out.push_back(filter_from_name(n.get<std::string>()));
    }
    return out;
  };
  if (j.contains("set")) {
    const Json& set = j.at("set");
    if (!set.is_object()) throw Error(ErrorKind::InvalidArgument, "set must be an object");
    for (const auto& [name, value] : set.items()) {
      if (!value.is_number()) throw Error(ErrorKind::InvalidArgument, "set value must be a number: " + name);
      u.set.emplace_back(filter_from_name(name), value.get<double>());
    }
  }
  u.fix = names("fix");
  u.unfix = names("unfix");
  if (j.contains("gamma") && !j.at("gamma").is_null()) {
    if (!j.at("gamma").is_number()) throw Error(ErrorKind::InvalidArgument, "gamma must be a number");
    u.gamma = j.at("gamma").get<double>();
  }
  return u;
}

Json to_json(const SessionState& s) {
  Json history = Json::array();
  for (const auto& r : s.history) history.push_back(to_json(r));
  Json j{{"id", s.id},
         {"k", to_json(s.params.k)},
         {"fixed", fixed_to_json(s.params)},
         {"gamma", s.gamma},
         {"status", std::string(to_string(s.status))},
         {"history", std::move(history)},
         {"abn", s.abn_enabled},
         {"abn_report", to_json(s.abn_report)},
         {"config", to_json(s.config)},
         {"assessor", s.assessor},
         {"width", s.width},
         {"height", s.height}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

// --- Session -------------------------------------------------------------------

std::shared_ptr<Session> Session::create(std::string id, std::span<const std::uint8_t> encoded,
                                         std::unique_ptr<Assessor> assessor, SessionOptions options) {
  if (!assessor) throw Error(ErrorKind::InvalidArgument, "session needs an assessor");
  options.config.validate();
  std::shared_ptr<Session> s(new Session());
  s->id_ = std::move(id);
  s->original_ = decode_image(encoded);
  s->abn_enabled_ = options.abn;
  if (options.abn) {
    auto [normalized, report] = abn(s->original_, options.abn_options);
    s->normalized_ = quantize8(normalized);
    s->abn_report_ = report;
  } else {
    s->normalized_ = s->original_;
    const double p = perceived_brightness(s->original_);
    s->abn_report_.p_before = p;
    s->abn_report_.p_after = p;
    s->abn_report_.seed = options.abn_options.seed;
  }
  s->assessor_ = std::move(assessor);
  s->config_ = options.config;
  s->init_images();
  const LossTerms terms =
      loss(Problem{*s->assessor_, s->working_, s->working_ctx_}, s->params_, s->config_.gamma, s->config_.target);
  s->history_.push_back(make_record(0, s->params_, s->config_.gamma, terms));
  return s;
}

void Session::init_images() {
  working_ = resize(normalized_, kAssessmentSize, kAssessmentSize);
  working_ctx_ = build_context(working_);
}

Session::~Session() {
  stop();
  if (worker_.joinable()) worker_.join();
}

SessionState Session::state() const {
  std::lock_guard lock(mu_);
  SessionState s;
  s.id = id_;
  s.params = params_;
  s.gamma = config_.gamma;
  s.status = status_;
  s.error = error_;
  s.history = history_;
  s.abn_report = abn_report_;
  s.abn_enabled = abn_enabled_;
  s.config = config_;
  s.assessor = assessor_->name();
  s.width = normalized_.width();
  s.height = normalized_.height();
  return s;
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

void Session::emit(SessionEvent event) {
  event.session_id = id_;
  event.sequence = next_sequence_++;
  for (const auto& q : subscribers_) q->push(event);
}

int Session::add_preview(const ParamVector& params) {
  const int pid = next_preview_++;
  previews_.emplace(pid, params);
  SessionEvent e;
  e.kind = EventKind::PreviewReady;
  e.preview_id = pid;
  e.preview_url = "/sessions/" + id_ + "/preview/" + std::to_string(pid);
  emit(std::move(e));
  return pid;
}

SessionState Session::set_params(const ParamsUpdate& update) {
  {
    std::lock_guard lock(mu_);
    const ParamVector next = apply_update(params_, update);
    params_ = next;
    if (update.gamma) config_.gamma = *update.gamma;
    if (running_) pending_.push_back(update);
    SessionEvent e;
    e.kind = EventKind::ParamsChanged;
    e.source = ParamsSource::User;
    e.params = params_;
    e.gamma = config_.gamma;
    emit(std::move(e));
    add_preview(params_);
  }
  return state();
}

void Session::optimize(std::optional<int> steps) {
  std::unique_lock lock(mu_);
  if (running_) throw Error(ErrorKind::Busy, "busy");
  if (status_ == SessionStatus::Error) throw Error(ErrorKind::InvalidState, "session is in error state: " + error_);
  const int n = steps.value_or(config_.max_steps);
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "steps must be >= 0");

  auto announce = [this](SessionStatus s) {
    SessionEvent e;
    e.kind = EventKind::StatusChanged;
    e.status = s;
    emit(std::move(e));
  };
  status_ = SessionStatus::Optimizing;
  announce(status_);
  if (n == 0) {
    status_ = SessionStatus::Done;
    announce(status_);
    return;
  }
  running_ = true;
  stop_requested_ = false;
  // The previous worker has already left run_loop; joining here is immediate.
  std::jthread previous = std::move(worker_);
  lock.unlock();
  if (previous.joinable()) previous.join();
  lock.lock();
  worker_ = std::jthread([this, n] { run_loop(n); });
}

void Session::run_loop(int steps) {
  OptimizerState st;
  ParamVector k;
  OptimizerConfig cfg;
  {
    std::lock_guard lock(mu_);
    st.iteration = history_.back().iteration;
    st.last_loss = history_.back().loss;
    k = params_;
    cfg = config_;
  }
  // Pending edits are merged right before each step, and the lock is held
  // until that iteration's record is published. An edit accepted by
  // set_params therefore always shows up in the next record emitted.
  std::unique_lock held(mu_, std::defer_lock);
  const auto before_step = [this, &held](Interference& inter) {
    held.lock();
    for (const ParamsUpdate& u : pending_) {
      for (FilterId id : u.unfix) inter.unfix(id);
      for (const auto& [id, value] : u.set) inter.set_value(id, value);
      for (FilterId id : u.fix) inter.fix(id);
      if (u.gamma) inter.set_gamma(*u.gamma);
    }
    pending_.clear();
  };
  const auto on_iteration = [this, &held](const IterationRecord& record, Interference& inter) {
    if (!held.owns_lock()) held.lock();
    history_.push_back(record);
    SessionEvent e;
    e.kind = EventKind::IterationDone;
    e.record = record;
    emit(std::move(e));
    add_preview(record.params);
    params_ = inter.params();
    config_.gamma = inter.gamma();
    if (stop_requested_) inter.request_stop();
    held.unlock();
  };
  try {
    const RunResult result =
        run(Problem{*assessor_, working_, working_ctx_}, k, st, cfg, steps, on_iteration, before_step);
    finish_run(result.outcome == RunOutcome::Stopped ? SessionStatus::Idle : SessionStatus::Done, {});
  } catch (const std::exception& ex) {
    if (held.owns_lock()) held.unlock();
    finish_run(SessionStatus::Error, ex.what());
  }
}

void Session::finish_run(SessionStatus status, const std::string& error) {
  {
    std::lock_guard lock(mu_);
    pending_.clear();
    status_ = status;
    error_ = error;
    running_ = false;
    stop_requested_ = false;
    if (status != SessionStatus::Error) {
      SessionEvent p;
      p.kind = EventKind::ParamsChanged;
      p.source = ParamsSource::Optimizer;
      p.params = params_;
      p.gamma = config_.gamma;
      emit(std::move(p));
    }
    SessionEvent e;
    e.kind = EventKind::StatusChanged;
    e.status = status;
    e.error = error;
    emit(std::move(e));
  }
  idle_cv_.notify_all();
}

void Session::stop() {
  std::lock_guard lock(mu_);
  if (running_) stop_requested_ = true;
}

void Session::wait() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return !running_; });
}

ImageBuffer Session::render_image() {
  ParamVector k;
  {
    std::lock_guard lock(mu_);
    if (status_ == SessionStatus::Error) throw Error(ErrorKind::InvalidState, "session is in error state: " + error_);
    k = params_;
  }
  std::lock_guard lock(render_mu_);
  if (!full_ctx_) {
    const double sx = kContextBlurSigma * normalized_.width() / kAssessmentSize;
    const double sy = kContextBlurSigma * normalized_.height() / kAssessmentSize;
    full_ctx_ = build_context(normalized_, sx, sy);
  }
  return apply(normalized_, k, *full_ctx_);
}

Bytes Session::render() { return encode_png(render_image()); }

Bytes Session::preview(int preview_id) {
  ParamVector k;
  {
    std::lock_guard lock(mu_);
    const auto it = previews_.find(preview_id);
    if (it == previews_.end()) throw Error(ErrorKind::NotFound, "preview not found: " + std::to_string(preview_id));
    k = it->second;
  }
  return encode_png(apply(working_, k, working_ctx_));
}

std::shared_ptr<EventQueue> Session::subscribe(std::size_t capacity) {
  auto q = std::make_shared<EventQueue>(capacity);
  std::lock_guard lock(mu_);
  subscribers_.push_back(q);
  return q;
}

void Session::unsubscribe(const std::shared_ptr<EventQueue>& queue) {
  std::lock_guard lock(mu_);
  std::erase(subscribers_, queue);
  queue->close();
}

void Session::persist(const std::filesystem::path& dir) const {
  Json j;
  {
    std::lock_guard lock(mu_);
    if (running_) throw Error(ErrorKind::Busy, "busy");
    Json history = Json::array();
    for (const auto& r : history_) history.push_back(to_json(r));
    j = Json{{"schema_version", kSchemaVersion},
             {"id", id_},
             {"status", std::string(to_string(status_))},
             {"error", error_},
             {"k", to_json(params_.k)},
             {"fixed", fixed_to_json(params_)},
             {"config", to_json(config_)},
             {"abn", abn_enabled_},
             {"abn_report", to_json(abn_report_)},
             {"assessor", assessor_->name()},
             {"history", std::move(history)}};
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_atomically(dir / "original.png", encode_png(original_));
  write_atomically(dir / "normalized.png", encode_png(normalized_));
  const std::string text = j.dump(2) + "\n";
  write_atomically(dir / "session.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::shared_ptr<Session> Session::load(const std::filesystem::path& dir, std::unique_ptr<Assessor> assessor,
                                       std::string id) {
  if (!assessor) throw Error(ErrorKind::InvalidArgument, "session needs an assessor");
  Json j;
  try {
    j = Json::parse(read_text(dir / "session.json"));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Schema, std::string("malformed session.json: ") + ex.what());
  }
  const Json& version = require(j, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw Error(ErrorKind::Schema, "unsupported schema version");
  }
  std::shared_ptr<Session> s(new Session());
  if (id.empty()) {
    const Json& stored = require(j, "id");
    if (!stored.is_string()) throw Error(ErrorKind::Schema, "invalid field id");
    id = stored.get<std::string>();
  }
  s->id_ = std::move(id);
  s->params_.k = params_from_json(require(j, "k"));
  fixed_from_json(require(j, "fixed"), s->params_);
  validate(s->params_);
  s->config_ = config_from_json(require(j, "config"));
  s->config_.validate();
  if (!require(j, "abn").is_boolean()) throw Error(ErrorKind::Schema, "invalid field abn");
  s->abn_enabled_ = j.at("abn").get<bool>();
  s->abn_report_ = abn_report_from_json(require(j, "abn_report"));
  const Json& status = require(j, "status");
  if (!status.is_string()) throw Error(ErrorKind::Schema, "invalid field status");
  s->status_ = parse_session_status(status.get<std::string>());
  if (s->status_ == SessionStatus::Optimizing) s->status_ = SessionStatus::Idle;
  if (j.contains("error") && j.at("error").is_string()) s->error_ = j.at("error").get<std::string>();
  const Json& history = require(j, "history");
  if (!history.is_array() || history.empty()) throw Error(ErrorKind::Schema, "invalid field history");
  for (const Json& r : history) {
    s->history_.push_back(record_from_json(r));
    if (s->history_.size() > 1 && s->history_.back().iteration <= s->history_[s->history_.size() - 2].iteration) {
      throw Error(ErrorKind::Schema, "history iterations must increase");
    }
  }
  try {
    s->original_ = decode_image(read_file(dir / "original.png"));
    s->normalized_ = decode_image(read_file(dir / "normalized.png"));
  } catch (const Error& ex) {
    if (ex.kind() == ErrorKind::Io) throw;
    throw Error(ErrorKind::Schema, std::string("invalid session image: ") + ex.what());
  }
  s->assessor_ = std::move(assessor);
  s->init_images();
  return s;
}

// --- SessionStore ----------------------------------------------------------------

SessionStore::SessionStore(std::string assessor_spec, ModelNormalization normalization)
    : assessor_spec_(std::move(assessor_spec)), prototype_(make_assessor(assessor_spec_, normalization)) {}

SessionStore::SessionStore(std::unique_ptr<Assessor> prototype) : prototype_(std::move(prototype)) {
  if (!prototype_) throw Error(ErrorKind::InvalidArgument, "session store needs an assessor");
  assessor_spec_ = prototype_->name();
}

std::string SessionStore::next_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream out;
  out << std::hex << rng() << '-' << ++counter_;
  return out.str();
}

std::shared_ptr<Session> SessionStore::create(std::span<const std::uint8_t> encoded, SessionOptions options) {
  std::unique_ptr<Assessor> assessor;
  std::string id;
  {
    std::lock_guard lock(mu_);
    assessor = prototype_->clone();
    id = next_id();
  }
  auto s = Session::create(id, encoded, std::move(assessor), std::move(options));
  std::lock_guard lock(mu_);
  sessions_.emplace(s->id(), s);
  return s;
}

std::shared_ptr<Session> SessionStore::load(const std::filesystem::path& dir) {
  std::unique_ptr<Assessor> assessor;
  {
    std::lock_guard lock(mu_);
    assessor = prototype_->clone();
  }
  auto s = Session::load(dir, std::move(assessor));
  std::lock_guard lock(mu_);
  if (sessions_.contains(s->id())) throw Error(ErrorKind::Busy, "session already loaded: " + s->id());
  sessions_.emplace(s->id(), s);
  return s;
}

std::shared_ptr<Session> SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "session not found: " + id);
  return it->second;
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace aesthete
