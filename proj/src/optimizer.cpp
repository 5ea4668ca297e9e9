#include "aesthete/optimizer.hpp"

#include <cmath>
#include <string>

namespace aesthete {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::InvalidArgument, "momentum must be in [0,1)");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
  if (max_steps < 0) throw Error(ErrorKind::InvalidArgument, "max_steps must be >= 0");
  aesthete::validate(target);
}

LossTerms loss(Problem problem, const ParamVector& params, double gamma, const ScoreDistribution& target) {
  return problem.assessor.loss(problem.image, params, problem.context, gamma, target);
}

IterationRecord make_record(int iteration, const ParamVector& params, double gamma, const LossTerms& terms) {
  IterationRecord r;
  r.iteration = iteration;
  r.params = params;
  r.gamma = gamma;
  r.loss = terms.total;
  r.l_qa = terms.l_qa;
  r.l_im = terms.l_im;
  r.distribution = terms.distribution;
  r.mean_score = mean_score(terms.distribution);
  return r;
}

ParamVector lookahead(const OptimizerState& state, const ParamVector& params, const OptimizerConfig& config) {
  ParamVector ahead = params;
  for (FilterId id : kAllFilters) {
    if (params.is_fixed(id)) continue;
    const std::size_t i = index_of(id);
    ahead.k[i] = project(id, params.k[i] + config.momentum * state.velocity[i]);
  }
  return ahead;
}

void step(OptimizerState& state, ParamVector& params, const ParamArray& grad, const OptimizerConfig& config) {
  for (double g : grad) {
    if (!std::isfinite(g)) throw Error(ErrorKind::DivergentGradient, "divergent gradient");
  }
  for (FilterId id : kAllFilters) {
    const std::size_t i = index_of(id);
    if (params.fixed[i]) {
      state.velocity[i] = 0.0;
      continue;
    }
    state.velocity[i] = config.momentum * state.velocity[i] - config.learning_rate * grad[i];
    params.k[i] = project(id, params.k[i] + state.velocity[i]);
  }
}

void Interference::set_value(FilterId id, double value) {
  if (params_.is_fixed(id)) {
    throw Error(ErrorKind::FixedParameter, "parameter is fixed: " + std::string(filter_name(id)));
  }
  const Bounds b = filter_bounds(id);
  if (!(value >= b.lo && value <= b.hi)) {
    throw Error(ErrorKind::OutOfBounds, "parameter out of bounds: " + std::string(filter_name(id)));
  }
  params_[id] = value;
  state_.velocity[index_of(id)] = 0.0;
}

void Interference::fix(FilterId id) {
  params_.set_fixed(id, true);
  state_.velocity[index_of(id)] = 0.0;
}

void Interference::unfix(FilterId id) { params_.set_fixed(id, false); }

void Interference::set_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
  config_.gamma = gamma;
}

RunResult run(Problem problem, ParamVector& params, OptimizerState& state, OptimizerConfig& config, int steps,
              const IterationCallback& on_iteration, const StepHook& before_step) {
  config.validate();
  validate(params);
  RunResult result;
  if (steps <= 0) return result;

  Interference interference(params, state, config);
  int quiet = 0;
  for (int s = 0; s < steps; ++s) {
    const ParamVector ahead = lookahead(state, params, config);
    const LossGradient g = problem.assessor.loss_gradient(problem.image, ahead, problem.context, config.gamma,
                                                          config.target);
    if (before_step) before_step(interference);
    OptimizerState next_state = state;
    ParamVector next_params = params;
    step(next_state, next_params, g.grad, config);

    const LossTerms terms = loss(problem, next_params, config.gamma, config.target);
    const bool had_previous = s > 0 || state.iteration > 0;
    const double delta = std::fabs(terms.total - state.last_loss);

    state = next_state;
    params = next_params;
    state.iteration += 1;
    state.last_loss = terms.total;
    state.last_distribution = terms.distribution;
    result.records.push_back(make_record(state.iteration, params, config.gamma, terms));

    if (on_iteration) on_iteration(result.records.back(), interference);
    if (interference.stop_requested()) {
      result.outcome = RunOutcome::Stopped;
      break;
    }
    quiet = (had_previous && delta < config.early_stop_tolerance) ? quiet + 1 : 0;
    if (config.early_stop && quiet >= config.early_stop_patience) {
      result.outcome = RunOutcome::Converged;
      break;
    }
  }
  return result;
}

}  // namespace aesthete
