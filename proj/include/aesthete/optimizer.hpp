#pragma once

#include <functional>
#include <vector>

#include "aesthete/assessor.hpp"
#include "aesthete/filters.hpp"
#include "aesthete/score.hpp"

namespace aesthete {

struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double gamma = 0.1;
  int max_steps = 50;
  ScoreDistribution target = kTargetDistribution;
  /// Stop once |loss change| < early_stop_tolerance for early_stop_patience
  /// consecutive iterations.
  bool early_stop = true;
  double early_stop_tolerance = 1e-5;
  int early_stop_patience = 5;

  /// Throws Error(InvalidArgument) on lr <= 0, momentum outside [0,1),
  /// negative gamma, negative step budget or an invalid target.
  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

struct OptimizerState {
  int iteration = 0;
  ParamArray velocity{};
  double last_loss = 0.0;
  ScoreDistribution last_distribution;
};

struct IterationRecord {
  int iteration = 0;
  ParamVector params;
  double gamma = 0.0;  ///< weight in force when `loss` was evaluated
  double loss = 0.0;
  double l_qa = 0.0;
  double l_im = 0.0;
  double mean_score = 0.0;
  ScoreDistribution distribution;

  bool operator==(const IterationRecord&) const = default;
};

/// What the optimizer works on: the working-resolution image, its context and
/// the assessor scoring it.
struct Problem {
  Assessor& assessor;
  const ImageBuffer& image;
  const ImageContext& context;
};

LossTerms loss(Problem problem, const ParamVector& params, double gamma, const ScoreDistribution& target);

IterationRecord make_record(int iteration, const ParamVector& params, double gamma, const LossTerms& terms);

/// One Nesterov update. `grad` must be evaluated at the look-ahead point
/// (see `lookahead`). velocity <- momentum * velocity - lr * grad;
/// k <- project(k + velocity). Fixed intensities and their velocities are
/// left untouched. Throws Error(DivergentGradient) on a non-finite gradient,
/// leaving state and params unchanged.
void step(OptimizerState& state, ParamVector& params, const ParamArray& grad, const OptimizerConfig& config);

/// Point where the Nesterov gradient is taken: project(k + momentum * v),
/// with fixed intensities kept in place.
ParamVector lookahead(const OptimizerState& state, const ParamVector& params, const OptimizerConfig& config);

/// Handle passed to the per-iteration callback. Edits made through it take
/// effect before the next iteration starts.
class Interference {
 public:
  Interference(ParamVector& params, OptimizerState& state, OptimizerConfig& config)
      : params_(params), state_(state), config_(config) {}

  const ParamVector& params() const noexcept { return params_; }
  double gamma() const noexcept { return config_.gamma; }

  /// Throws Error(FixedParameter) for a fixed filter and Error(OutOfBounds)
  /// outside the filter's box. Resets that filter's velocity.
  void set_value(FilterId id, double value);
  void fix(FilterId id);
  void unfix(FilterId id);
  void set_gamma(double gamma);
  void request_stop() noexcept { stop_ = true; }
  bool stop_requested() const noexcept { return stop_; }

 private:
  ParamVector& params_;
  OptimizerState& state_;
  OptimizerConfig& config_;
  bool stop_ = false;
};

using IterationCallback = std::function<void(const IterationRecord&, Interference&)>;

/// Runs inside an iteration, after the look-ahead gradient and before the
/// update. Edits made here shape the step being taken, so they show up in the
/// record of the iteration in flight.
using StepHook = std::function<void(Interference&)>;

enum class RunOutcome { Completed, Converged, Stopped };

struct RunResult {
  std::vector<IterationRecord> records;
  RunOutcome outcome = RunOutcome::Completed;
};

/// Runs up to `steps` iterations from `params`. Record numbering continues
/// from state.iteration. The callback, when given, runs synchronously after
/// every iteration; this is the only place outside code may change the run.
/// On error, params and state hold the last completed iteration, plus any
/// edits a hook already made.
RunResult run(Problem problem, ParamVector& params, OptimizerState& state, OptimizerConfig& config, int steps,
              const IterationCallback& on_iteration = {}, const StepHook& before_step = {});

}  // namespace aesthete
