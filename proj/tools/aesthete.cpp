#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aesthete/http_server.hpp"
#include "aesthete/parallel.hpp"
#include "aesthete/session.hpp"

namespace fs = std::filesystem;
using namespace aesthete;

namespace {

constexpr int kExitDecode = 1;
constexpr int kExitAssessor = 2;
constexpr int kExitIo = 3;
constexpr int kExitUsage = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedImage:
    case ErrorKind::EmptyInput: return kExitDecode;
    case ErrorKind::AssessorLoad:
    case ErrorKind::DivergentGradient: return kExitAssessor;
    case ErrorKind::Io:
    case ErrorKind::Encode: return kExitIo;
    default: return kExitUsage;
  }
}

struct Options {
  std::string input;
  std::string output;
  int steps = OptimizerConfig{}.max_steps;
  double gamma = OptimizerConfig{}.gamma;
  std::vector<std::string> set;
  std::vector<std::string> fix;
  bool no_abn = false;
  std::string assessor = "proxy";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string host = "127.0.0.1";
  int port = 8080;
};

ParamsUpdate parse_assignments(const Options& o) {
  ParamsUpdate u;
  for (const std::string& a : o.set) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--set expects name=value, got " + a);
    const FilterId id = filter_from_name(a.substr(0, eq));
    const std::string text = a.substr(eq + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) throw Error(ErrorKind::InvalidArgument, "--set value is not a number: " + a);
    u.set.emplace_back(id, value);
  }
  for (const std::string& name : o.fix) u.fix.push_back(filter_from_name(name));
  return u;
}

std::string default_output(const std::string& input, const char* suffix) {
  fs::path p(input);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void print(const Json& j) { std::cout << j.dump(2) << std::endl; }

int run_enhance(const Options& o) {
  const ParamsUpdate update = parse_assignments(o);
  SessionOptions so;
  so.abn = !o.no_abn;
  so.abn_options.seed = o.seed;
  so.config.gamma = o.gamma;
  so.config.validate();
  const Bytes bytes = read_file(o.input);
  auto session = Session::create("cli", bytes, make_assessor(o.assessor), so);
  if (!update.set.empty() || !update.fix.empty()) session->set_params(update);
  session->optimize(o.steps);
  session->wait();
  const SessionState st = session->state();
  if (st.status == SessionStatus::Error) throw Error(ErrorKind::DivergentGradient, st.error);

  const std::string out = o.output.empty() ? default_output(o.input, ".enhanced.png") : o.output;
  write_file(out, session->render());

  Json trace = Json::array();
  for (const auto& r : st.history) trace.push_back(r.loss);
  const IterationRecord& first = st.history.front();
  const IterationRecord& last = st.history.back();
  print(Json{{"input", o.input},
             {"output", out},
             {"assessor", st.assessor},
             {"abn_report", to_json(st.abn_report)},
             {"config", to_json(st.config)},
             {"steps_run", static_cast<int>(st.history.size()) - 1},
             {"k", to_json(st.params.k)},
             {"fixed", fixed_to_json(st.params)},
             {"initial_score", first.mean_score},
             {"final_score", last.mean_score},
             {"initial_loss", first.loss},
             {"final_loss", last.loss},
             {"loss_trace", std::move(trace)}});
  return 0;
}

int run_score(const Options& o) {
  const ImageBuffer img = load_image(o.input);
  const auto assessor = make_assessor(o.assessor);
  const ScoreDistribution d = assessor->score(img);
  print(Json{{"buckets", to_json(d)}, {"mean", mean_score(d)}});
  return 0;
}

int run_abn(const Options& o) {
  const ImageBuffer img = load_image(o.input);
  AbnOptions ao;
  ao.seed = o.seed;
  const auto [out, report] = abn(img, ao);
  const std::string path = o.output.empty() ? default_output(o.input, ".abn.png") : o.output;
  save_png(path, out);
  Json j = to_json(report);
  j["output"] = path;
  print(j);
  return 0;
}

int run_serve(const Options& o) {
  SessionStore store(o.assessor);
  HttpServer server(store);
  const int port = server.bind(o.host, o.port);
  print(Json{{"listening", o.host + ":" + std::to_string(port)}, {"assessor", o.assessor}});
  server.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aesthetic image enhancement by gradient descent over filter intensities"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--assessor", o.assessor, "proxy or model:<path.onnx>");
    sub->add_option("--threads", o.threads, "worker threads for pixel loops (1 = deterministic single-threaded)")
        ->check(CLI::PositiveNumber);
  };

  auto* enhance = app.add_subcommand("enhance", "Normalise, optimise and render one image");
  enhance->add_option("input", o.input)->required();
  enhance->add_option("-o,--output", o.output, "output PNG (default: <input>.enhanced.png)");
  enhance->add_option("--steps", o.steps, "iteration budget")->check(CLI::NonNegativeNumber);
  enhance->add_option("--gamma", o.gamma, "regularisation weight")->check(CLI::NonNegativeNumber);
  enhance->add_option("--set", o.set, "initial intensity, name=value (repeatable)");
  enhance->add_option("--fix", o.fix, "filter kept at its initial value (repeatable)");
  enhance->add_flag("--no-abn", o.no_abn, "skip brightness normalisation");
  enhance->add_option("--seed", o.seed, "seed for the normalisation sampler");
  common(enhance);

  auto* score = app.add_subcommand("score", "Print the score distribution of an image");
  score->add_option("input", o.input)->required();
  common(score);

  auto* abn_cmd = app.add_subcommand("abn", "Brightness-normalise an image");
  abn_cmd->add_option("input", o.input)->required();
  abn_cmd->add_option("-o,--output", o.output, "output PNG (default: <input>.abn.png)");
  abn_cmd->add_option("--seed", o.seed, "seed for the background sampler");
  abn_cmd->add_option("--threads", o.threads)->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));
  common(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  set_thread_count(o.threads);
  try {
    if (*enhance) return run_enhance(o);
    if (*score) return run_score(o);
    if (*abn_cmd) return run_abn(o);
    if (*serve) return run_serve(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
