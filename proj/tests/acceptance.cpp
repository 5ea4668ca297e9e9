// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "gated_assessor.hpp"
#include "support.hpp"

#include "aesthete/parallel.hpp"
#include "aesthete/session.hpp"

namespace fs = std::filesystem;
using namespace aesthete;
using namespace aesthete::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + AESTHETE_CLI_PATH + "\" " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    std::random_device rd;
    fs::path p = fs::temp_directory_path() / ("aesthete-acceptance-" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string bytes_of(const ImageBuffer& img) {
  const Bytes b = encode_png(img);
  return std::string(b.begin(), b.end());
}

ImageBuffer degraded_photo(unsigned variant, int w, int h) {
  std::mt19937_64 rng(900 + variant);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return degrade(synthetic_photo(w, h, variant), 0.3 + 0.4 * u(rng), 0.3 + 0.5 * u(rng), 0.3 + 0.4 * u(rng));
}

// --- criteria ------------------------------------------------------------------

void identity(Verdict& v) {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto img = t % 2 ? random_image(rng, 64, 48) : synthetic_photo(64, 48, t);
    worst = std::max(worst, max_abs_diff(apply(img, ParamVector{}, build_context(img)), img));
  }
  v.require(worst < 1e-6, "apply(K=0) max-abs < 1e-6");

  const fs::path in = scratch() / "identity.png";
  const fs::path out = scratch() / "identity.out.png";
  save_png(in, degraded_photo(3, 160, 120));
  const CliResult r = run_cli("enhance " + in.string() + " --steps 0 -o " + out.string());
  v.require(r.code == 0, "cli exit 0");
  double cli_diff = 1.0;
  if (r.code == 0) cli_diff = max_abs_diff(load_image(out), abn(load_image(in)).first);
  v.require(cli_diff <= 0.5 / 255.0 + 1e-6, "cli --steps 0 equals abn within 8-bit rounding");
  const double elapsed = seconds_since(start);
  v.require(elapsed < 1.0, "runtime < 1 s");
  v.detail << "20 images max-abs " << worst << ", cli vs abn " << cli_diff * 255.0 << "/255, " << elapsed << " s";
}

void gradients(Verdict& v) {
  const auto start = Clock::now();
  constexpr double h = 1e-3;
  std::mt19937_64 rng(2);

  double worst_filter = 0.0;
  int filter_pairs = 0;
  for (int t = 0; t < 100; ++t) {
    const auto img = t % 2 ? random_image(rng, 10, 10) : synthetic_photo(10, 10, t);
    const auto ctx = build_context(img);
    const auto img64 = img.cast<double>();
    const auto k = random_params(rng, 0.95);
    const auto j = jacobian(img64, k, ctx);
    for (FilterId id : kAllFilters) {
      ParamVector kp = k, km = k;
      kp[id] += h;
      km[id] -= h;
      const auto ap = apply(img64, kp, ctx), am = apply(img64, km, ctx);
      const auto& d = j.d[index_of(id)].data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        worst_filter = std::max(worst_filter, relative_error(d[i], (ap.data()[i] - am.data()[i]) / (2 * h), 1e-6));
      }
    }
    ++filter_pairs;
  }

  double worst_chain = 0.0;
  int chain_pairs = 0, checked = 0, skipped = 0;
  for (int t = 0; t < 120; ++t) {
    const auto img = t % 2 ? random_image(rng, 12, 12) : synthetic_photo(12, 12, 200 + t);
    const auto ctx = build_context(img);
    const auto img64 = img.cast<double>();
    const auto k = random_params(rng, 0.9);
    const double gamma = 0.1;
    const auto g = proxy_loss_gradient(img64, k, ctx, gamma, kTargetDistribution);
    for (FilterId id : kAllFilters) {
      ParamVector kp = k, km = k;
      kp[id] += h;
      km[id] -= h;
      const auto ip = apply(img64, kp, ctx), im = apply(img64, km, ctx);
      if (crosses_kink(im, ip)) {
        ++skipped;
        continue;
      }
      const double lp = proxy_score_and_image_gradient(ip).loss + gamma * kp.squared_norm();
      const double lm = proxy_score_and_image_gradient(im).loss + gamma * km.squared_norm();
      worst_chain = std::max(worst_chain, relative_error(g.grad[index_of(id)], (lp - lm) / (2 * h), 1e-3));
      ++checked;
    }
    ++chain_pairs;
  }

  const double elapsed = seconds_since(start);
  v.require(filter_pairs >= 100 && chain_pairs >= 100, ">= 100 pairs each");
  v.require(worst_filter < 1e-3, "filter jacobian rel err < 1e-3");
  v.require(worst_chain < 1e-2, "full chain rel err < 1e-2");
  v.require(skipped * 20 < checked, "kink skips < 5% of entries");
  v.require(elapsed < 60.0, "runtime < 60 s");
  v.detail << "filters " << filter_pairs << " pairs rel err " << worst_filter << "; chain " << chain_pairs
           << " pairs rel err " << worst_chain << " (" << checked << " entries, " << skipped
           << " kink-crossing skipped); " << elapsed << " s";
}

void emd_oracle(Verdict& v) {
  std::mt19937_64 rng(3);
  auto random_distribution = [&] {
    std::exponential_distribution<double> e(1.0);
    ScoreDistribution d;
    double s = 0.0;
    for (double& p : d.p) s += (p = e(rng));
    for (double& p : d.p) p /= s;
    return d;
  };
  double self = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto d = random_distribution();
    self = std::max(self, emd(d, d));
  }
  v.require(self == 0.0, "emd(d,d) = 0");
  const double far = emd(one_hot(1), one_hot(10));
  const double near = emd(one_hot(1), one_hot(2));
  v.require(std::fabs(far - std::sqrt(0.9)) < 1e-9, "one-hot 1 vs 10 = sqrt(0.9)");
  v.require(std::fabs(near - std::sqrt(0.1)) < 1e-9, "one-hot 1 vs 2 = sqrt(0.1)");

  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_distribution(), b = random_distribution(), c = random_distribution();
    const double ab = emd(a, b), ba = emd(b, a), bc = emd(b, c), ac = emd(a, c);
    if (!(ab > 0.0) || ab != ba || ac > ab + bc + 1e-12) ++violations;
  }
  v.require(violations == 0, "metric axioms on 1000 triples");
  v.detail << "self " << self << ", 1v10 err " << std::fabs(far - std::sqrt(0.9)) << ", 1v2 err "
           << std::fabs(near - std::sqrt(0.1)) << ", axiom violations " << violations << "/1000";
}

// Smallest l_qa the proxy can produce, minus a margin that covers the sampling step.
double proxy_loss_floor(const ScoreDistribution& target) {
  double best = 1e9;
  for (int i = 0; i <= 100000; ++i) best = std::min(best, emd(proxy_distribution(i / 100000.0), target));
  return std::max(0.0, best - 1e-4);
}

std::array<std::vector<double>, kFilterCount> grid_values() {
  std::array<std::vector<double>, kFilterCount> values;
  for (FilterId id : kAllFilters) {
    auto& vals = values[index_of(id)];
    const Bounds b = filter_bounds(id);
    for (int m = 0; m <= 4; ++m) {
      if (0.25 * m <= b.hi) vals.push_back(0.25 * m);
      if (m > 0 && -0.25 * m >= b.lo) vals.push_back(-0.25 * m);
    }
  }
  return values;
}

double soft_clip(double v) {
  if (v < 0) return 0.1 * std::tanh(v / 0.1);
  if (v > 1) return 1 + 0.1 * std::tanh((v - 1) / 0.1);
  return v;
}

// Logistic tail; below 1e-17 it is dropped.
double tail(double x) { return x < -40.0 ? 0.0 : 1.0 / (1.0 + std::exp(-x)); }

// Proxy loss of a finished raster, written from the scorer's definition.
double proxy_l_qa(const Image<double>& img, std::vector<double>& luma) {
  const std::size_t n = img.pixel_count();
  double sum_y = 0.0, sum_s = 0.0, sum_q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = img.pixel(i);
    luma[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    sum_y += luma[i];
    const double mx = std::max({p[0], p[1], p[2]}), mn = std::min({p[0], p[1], p[2]});
    sum_s += (mx - mn) / std::sqrt(mx * mx + 0.02 * 0.02);
    double inside = 1.0;
    for (int c = 0; c < 3; ++c) inside *= 1.0 - tail((0.02 - p[c]) / 0.01) - tail((p[c] - 0.98) / 0.01);
    sum_q += 1.0 - inside;
  }
  const double mean = sum_y / n;
  double var = 0.0;
  for (double y : luma) var += (y - mean) * (y - mean);
  const double contrast = std::sqrt(var / n);
  const double exposure = std::exp(-(mean - 0.5) * (mean - 0.5) / 0.08);
  const double raw = 0.35 * std::min(contrast / 0.25, 1.0) + 0.25 * std::min(sum_s / n / 0.5, 1.0) + 0.40 * exposure -
                     0.5 * sum_q / n;
  const double a = std::clamp(raw, 0.0, 1.0);
  ScoreDistribution d;
  double total = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    const double z = (j + 1.0 - (1.0 + 9.0 * a)) / 1.5;
    total += d.p[j] = std::exp(-0.5 * z * z);
  }
  for (double& p : d.p) p /= total;
  double cdf_p = 0.0, cdf_q = 0.0, sq = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    cdf_p += d.p[j];
    cdf_q += kTargetDistribution.p[j];
    sq += (cdf_p - cdf_q) * (cdf_p - cdf_q);
  }
  return std::sqrt(sq / kBucketCount);
}

// Applies filter `f` with intensity `kv` to every pixel, from the filter
// formulas written out independently of the library. The soft clamp is folded
// into the last filter.
void apply_one(std::size_t f, double kv, const ImageContext& ctx, const Image<double>& in, Image<double>& out) {
  const double gain = std::pow(2.0, kv);
  const double haze = kv * std::min(ctx.haze_floor, 0.9);
  for (std::size_t i = 0; i < in.pixel_count(); ++i) {
    const double* p = in.pixel(i);
    double c[3] = {p[0], p[1], p[2]};
    const double y = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
    switch (static_cast<FilterId>(f)) {
      case FilterId::Con:
        for (double& v : c) v = 0.5 + (1 + kv) * (v - 0.5);
        break;
      case FilterId::Sat:
        for (double& v : c) v = y + (1 + kv) * (v - y);
        break;
      case FilterId::Bri:
        for (double& v : c) v += 0.3 * kv;
        break;
      case FilterId::Sha:
        for (double& v : c) v += 0.5 * kv * (1 - y) * (1 - y);
        break;
      case FilterId::Hig:
        for (double& v : c) v += 0.5 * kv * y * y;
        break;
      case FilterId::Exp:
        for (double& v : c) v *= gain;
        break;
      case FilterId::Llf:
        for (double& v : c) v += kv * (y - ctx.blurred_luma[i]);
        break;
      case FilterId::Nld:
        for (double& v : c) v = soft_clip((v - haze) / (1 - haze));
        break;
    }
    double* q = out.pixel(i);
    for (int ch = 0; ch < 3; ++ch) q[ch] = c[ch];
  }
}

// Loss over the 8-D grid (step 0.25), evaluated filter by filter so that a
// depth-first walk in application order reuses every shared prefix.
class GridEvaluator {
 public:
  GridEvaluator(const ImageBuffer& img, const ImageContext& ctx, double gamma)
      : ctx_(ctx), gamma_(gamma), values_(grid_values()) {
    stages_.fill(Image<double>(img.width(), img.height()));
    stages_[0] = img.cast<double>();
    luma_.resize(img.pixel_count());
  }

  double loss_at(const ParamVector& k) {
    for (std::size_t f = 0; f < kFilterCount; ++f) apply_one(f, k.k[f], ctx_, stages_[f], stages_[f + 1]);
    return leaf_loss(k.squared_norm());
  }

  // Coordinate descent from `k`; an upper bound on the grid minimum.
  double descent(ParamVector k) {
    double best = loss_at(k);
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t d = 0; d < kFilterCount; ++d) {
        for (double value : values_[d]) {
          ParamVector trial = k;
          trial.k[d] = value;
          if (trial == k) continue;
          const double l = loss_at(trial);
          if (l < best) {
            best = l;
            k = trial;
            improved = true;
          }
        }
      }
    }
    return best;
  }

  // Visits every grid point whose loss could be below `threshold`, pruning with
  // loss >= floor + gamma * |k|^2. Returns false as soon as one is found.
  // Large intensities are tried first.
  bool none_below(double threshold, double floor) {
    threshold_ = threshold;
    floor_ = floor;
    return !visit(0, 0.0);
  }

  long evaluations() const noexcept { return evaluations_; }
  /// Grid point found by `none_below`, if any.
  const ParamVector& witness() const noexcept { return witness_; }
  double lowest() const noexcept { return lowest_; }

 private:
  double leaf_loss(double norm) {
    ++evaluations_;
    const double l = proxy_l_qa(stages_[kFilterCount], luma_) + gamma_ * norm;
    lowest_ = std::min(lowest_, l);
    return l;
  }

  bool visit(std::size_t depth, double norm) {
    if (depth == kFilterCount) {
      if (leaf_loss(norm) >= threshold_) return false;
      witness_ = k_;
      return true;
    }
    for (auto it = values_[depth].rbegin(); it != values_[depth].rend(); ++it) {
      const double value = *it;
      const double next = norm + value * value;
      if (floor_ + gamma_ * next >= threshold_) continue;
      apply_one(depth, value, ctx_, stages_[depth], stages_[depth + 1]);
      k_.k[depth] = value;
      if (visit(depth + 1, next)) return true;
    }
    return false;
  }

  const ImageContext& ctx_;
  double gamma_;
  std::array<std::vector<double>, kFilterCount> values_;
  std::array<Image<double>, kFilterCount + 1> stages_;
  std::vector<double> luma_;
  ParamVector k_;
  ParamVector witness_;
  double threshold_ = 0.0;
  double floor_ = 0.0;
  long evaluations_ = 0;
  double lowest_ = 1e9;
};

std::vector<std::shared_ptr<Session>> g_efficacy_sessions;

void efficacy(Verdict& v) {
  const auto start = Clock::now();
  int decreased = 0, improved = 0;
  for (unsigned t = 0; t < 20; ++t) {
    const std::string body = bytes_of(degraded_photo(t, 240, 180));
    auto s = Session::create("efficacy-" + std::to_string(t),
                             std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()),
                             std::make_unique<ProxyAssessor>());
    s->optimize();
    s->wait();
    const auto h = s->state().history;
    if (h.back().loss < h.front().loss) ++decreased;
    if (h.back().mean_score > h.front().mean_score) ++improved;
    g_efficacy_sessions.push_back(std::move(s));
  }
  v.require(decreased >= 19, "loss decreased on >= 95%");
  v.require(improved >= 16, "mean score increased on >= 80%");
  v.detail << "loss down " << decreased << "/20, score up " << improved << "/20; grid (16x16):";

  const OptimizerConfig config;
  const double floor = proxy_loss_floor(config.target);
  for (unsigned t = 0; t < 3; ++t) {
    const ImageBuffer img = abn(degraded_photo(t, 16, 16)).first;
    const ImageContext ctx = build_context(img);
    ProxyAssessor proxy;
    const Problem problem{proxy, img, ctx};
    ParamVector params;
    OptimizerState state;
    OptimizerConfig run_config = config;
    const auto result = run(problem, params, state, run_config, config.max_steps);
    const double final_loss = result.records.back().loss;
    GridEvaluator grid(img, ctx, config.gamma);
    std::mt19937_64 rng(40 + t);
    double agreement = 0.0;
    for (int i = 0; i < 50; ++i) {
      const ParamVector k = random_params(rng);
      agreement = std::max(agreement, std::fabs(grid.loss_at(k) - loss(problem, k, config.gamma, config.target).total));
    }
    v.require(agreement < 1e-5, "grid evaluator agrees with the library");
    const double threshold = final_loss - 0.05;
    // Multi-start descent: origin, the optimizer's end point rounded to the
    // grid, and random grid points.
    std::vector<ParamVector> starts(1);
    ParamVector rounded;
    for (FilterId id : kAllFilters) rounded[id] = project(id, std::round(params[id] * 4.0) / 4.0);
    starts.push_back(rounded);
    std::uniform_int_distribution<int> step(-4, 4);
    for (int i = 0; i < 30; ++i) {
      ParamVector k;
      for (FilterId id : kAllFilters) k[id] = project(id, 0.25 * step(rng));
      starts.push_back(k);
    }
    double descent = 1e9;
    for (const ParamVector& k : starts) descent = std::min(descent, grid.descent(k));
    if (descent < threshold) {
      v.require(false, "final loss <= grid best + 0.05 on image " + std::to_string(t));
      v.detail << " [final " << final_loss << ", grid <= " << descent << "]";
      continue;
    }
    const bool none = grid.none_below(threshold, floor);
    v.require(none, "final loss <= grid best + 0.05 on image " + std::to_string(t));
    v.detail << " [final " << final_loss << ", grid descent " << descent << ", "
             << (none ? "no grid point below " : "grid point below ") << threshold << " in " << grid.evaluations()
             << " evals";
    if (!none) v.detail << " at k=" << to_json(grid.witness().k).dump() << " loss " << grid.loss_at(grid.witness());
    v.detail << "]";
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 300.0, "runtime < 5 min");
  v.detail << "; " << elapsed << " s";
}

void decomposition(Verdict& v) {
  double worst = 0.0, worst_replay = 0.0;
  std::size_t records = 0;
  ProxyAssessor proxy;
  for (const auto& s : g_efficacy_sessions) {
    const SessionState st = s->state();
    for (const IterationRecord& r : st.history) {
      const double recomputed = emd(r.distribution, st.config.target) + r.gamma * r.params.squared_norm();
      worst = std::max(worst, std::fabs(recomputed - r.loss));
      worst = std::max(worst, std::fabs(r.l_qa + r.l_im - r.loss));
      const LossTerms replay = proxy.loss(s->working(), r.params, s->working_context(), r.gamma, st.config.target);
      worst_replay = std::max(worst_replay, std::fabs(replay.total - r.loss));
      ++records;
    }
  }
  v.require(records > 0, "records available");
  v.require(worst < 1e-6, "EMD + gamma |k|^2 = loss within 1e-6");
  v.require(worst_replay < 1e-6, "replayed loss within 1e-6");
  v.detail << records << " records, max |recomputed - loss| " << worst << ", replay " << worst_replay;
}

void abn_suite(Verdict& v) {
  int dark_ok = 0, dark_total = 0;
  auto check_dark = [&](const ImageBuffer& img) {
    const auto [out, report] = abn(img);
    ++dark_total;
    const bool in_band = report.p_after >= 98.0 && report.p_after <= 158.0;
    if (std::fabs(report.p_before - 60.0) < 0.5 && (in_band || report.exhausted)) ++dark_ok;
    v.detail << " P " << report.p_before << "->" << report.p_after << (report.exhausted ? " (exhausted)" : "") << ";";
  };
  v.detail << "dark:";
  check_dark(uniform_image(64, 64, 60.0f / 255.0f));
  for (unsigned t = 0; t < 3; ++t) {
    ImageBuffer img = synthetic_photo(96, 72, 40 + t);
    const double scale = 60.0 / perceived_brightness(img);
    for (float& x : img.data()) x = static_cast<float>(x * scale);
    check_dark(img);
  }
  v.require(dark_ok == dark_total, "P=60 reaches [98,158] or reports exhaustion");

  ImageBuffer product = uniform_image(200, 100, 1.0f);
  for (int y = 70; y < 100; ++y) {
    for (int x = 0; x < 200; ++x) {
      product.at(x, y, 0) = 0.15f + 0.1f * static_cast<float>(x) / 200.0f;
      product.at(x, y, 1) = 0.12f;
      product.at(x, y, 2) = 0.2f;
    }
  }
  const auto [product_out, product_report] = abn(product);
  v.require(product_report.action == AbnAction::SkippedBackground && product_out == product,
            "70% white product photo unchanged");

  const auto in_range = synthetic_photo(120, 90, 2);
  const double p_in = perceived_brightness(in_range);
  const auto [same, same_report] = abn(in_range);
  v.require(p_in >= 98.0 && p_in <= 158.0 && same_report.action == AbnAction::None && same == in_range,
            "in-range image bit-identical");

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int corrected = 0, toward = 0;
  for (int t = 0; t < 60; ++t) {
    ImageBuffer img = synthetic_photo(48, 48, 500 + t);
    const double gain = 0.15 + 1.6 * u(rng);
    for (float& x : img.data()) x = std::min(1.0f, static_cast<float>(x * gain));
    const auto [out, report] = abn(img, AbnOptions{static_cast<std::uint64_t>(t)});
    if (report.action == AbnAction::ClipStretch || report.action == AbnAction::Brighten) {
      ++corrected;
      if (std::fabs(report.p_after - 128.0) < std::fabs(report.p_before - 128.0)) ++toward;
    }
  }
  v.require(corrected > 10 && toward == corrected, "corrections move P toward 128");
  v.detail << " product " << to_string(product_report.action) << "; in-range identical " << (same == in_range)
           << "; toward centre " << toward << "/" << corrected;
}

void config_defaults(Verdict& v) {
  const OptimizerConfig c;
  const ScoreDistribution expected{{0, 0, 0, 0, 0, 0.01, 0.09, 0.15, 0.55, 0.20}};
  v.require(c.learning_rate == 0.05 && c.momentum == 0.9 && c.gamma == 0.1 && c.max_steps == 50, "struct defaults");
  v.require(c.target == expected, "target distribution exact");

  const fs::path in = scratch() / "config.png";
  save_png(in, synthetic_photo(48, 48, 1));
  const CliResult r = run_cli("enhance " + in.string() + " --steps 0 -o " + (scratch() / "config.out.png").string());
  bool dump_ok = false;
  if (r.code == 0) {
    const Json cfg = Json::parse(r.out).at("config");
    dump_ok = cfg.at("learning_rate") == 0.05 && cfg.at("momentum") == 0.9 && cfg.at("gamma") == 0.1 &&
              cfg.at("max_steps") == 50 &&
              cfg.at("target") == Json::array({0.0, 0.0, 0.0, 0.0, 0.0, 0.01, 0.09, 0.15, 0.55, 0.20});
    v.detail << "cli config " << cfg.dump();
  }
  v.require(dump_ok, "cli config dump");
}

void interference(Verdict& v) {
  {
    const ImageBuffer img = abn(degraded_photo(7, 224, 224)).first;
    const ImageContext ctx = build_context(img);
    ProxyAssessor proxy;
    ParamVector params;
    OptimizerState state;
    OptimizerConfig config;
    config.early_stop = false;
    const auto result = run({proxy, img, ctx}, params, state, config, 50, [](const IterationRecord& r, Interference& i) {
      if (r.iteration == 3) i.fix(FilterId::Con);
    });
    const auto& recs = result.records;
    bool frozen = recs.size() == 50;
    double con3 = 0.0;
    for (const auto& r : recs) {
      if (r.iteration == 3) con3 = r.params[FilterId::Con];
    }
    for (const auto& r : recs) {
      if (r.iteration >= 3) frozen = frozen && std::memcmp(&r.params.k[0], &con3, sizeof con3) == 0;
    }
    v.require(con3 != 0.0, "contrast moved before the fix");
    v.require(frozen, "k_Con bit-identical from iteration 3 on");
    v.detail << "k_Con frozen at " << con3 << " over " << recs.size() << " records;";
  }
  {
    auto gate = std::make_shared<Gate>();
    const std::string body = bytes_of(degraded_photo(8, 160, 120));
    auto s = Session::create("gated", std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()),
                             std::make_unique<GatedAssessor>(gate));
    auto q = s->subscribe(1024);
    auto next_iteration = [&]() -> std::optional<IterationRecord> {
      while (auto e = q->pop(std::chrono::seconds(10))) {
        if (e->kind == EventKind::IterationDone) return e->record;
      }
      return std::nullopt;
    };
    s->optimize(8);
    gate->release(2);
    next_iteration();
    const auto second = next_iteration();
    gate->wait_blocked();
    ParamsUpdate u;
    u.set.emplace_back(FilterId::Sat, -0.35);
    u.gamma = 0.3;
    s->set_params(u);
    gate->release(1);
    const auto third = next_iteration();
    gate->open_all();
    s->wait();
    const bool reflected = second && third && third->iteration == 3 && third->params[FilterId::Sat] != second->params[FilterId::Sat] &&
                           third->gamma == 0.3;
    v.require(reflected, "mid-run set_params in the next record");
    if (third) v.detail << " mid-run edit seen in record " << third->iteration << " (gamma " << third->gamma << ")";
  }
}

void performance(Verdict& v) {
  set_thread_count(1);
  const ImageBuffer big = synthetic_photo(1920, 1080, 11);
  const Bytes encoded = encode_png(big);
  SessionOptions options;
  options.config.early_stop = false;

  const auto start = Clock::now();
  auto s = Session::create("perf", encoded, std::make_unique<ProxyAssessor>(), options);
  const double created = seconds_since(start);
  s->optimize(50);
  s->wait();
  const double optimized = seconds_since(start);
  const Bytes png = s->render();
  const double total = seconds_since(start);
  v.require(s->state().history.size() == 51, "50 iterations run");
  v.require(!png.empty(), "render produced");
  v.require(total < 5.0, "< 5 s single-threaded");
  v.detail << "create " << created << " s, +50 steps " << optimized - created << " s, +1080p render "
           << total - optimized << " s, total " << total << " s";
}

void determinism(Verdict& v) {
  const fs::path in = scratch() / "determinism.png";
  save_png(in, degraded_photo(12, 200, 150));
  std::vector<Bytes> outs;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = scratch() / ("determinism." + std::to_string(run) + ".png");
    const CliResult r = run_cli("enhance " + in.string() + " --seed 9 --threads 1 -o " + out.string());
    v.require(r.code == 0, "cli exit 0");
    if (r.code == 0) outs.push_back(read_file(out));
  }
  v.require(outs.size() == 2 && outs[0] == outs[1], "cli renders byte-identical");

  const Bytes body = read_file(in);
  std::vector<Bytes> renders;
  for (int run = 0; run < 2; ++run) {
    SessionOptions options;
    options.abn_options.seed = 9;
    auto s = Session::create("det", body, std::make_unique<ProxyAssessor>(), options);
    s->optimize(20);
    s->wait();
    renders.push_back(s->render());
  }
  v.require(renders[0] == renders[1], "session renders byte-identical");
  v.detail << "cli " << (outs.size() == 2 ? outs[0].size() : 0) << " bytes x2 identical " << (outs.size() == 2 && outs[0] == outs[1])
           << ", session renders identical " << (renders[0] == renders[1]);
}

}  // namespace

int main() {
  set_thread_count(1);
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"identity", identity},
      {"gradients", gradients},
      {"emd-oracle", emd_oracle},
      {"efficacy", efficacy},
      {"loss-decomposition", decomposition},
      {"abn", abn_suite},
      {"config-defaults", config_defaults},
      {"interference", interference},
      {"performance", performance},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
  }
  fs::remove_all(scratch());
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
