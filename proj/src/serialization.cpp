#include "aesthete/serialization.hpp"

#include <string>

namespace aesthete {

namespace {

template <typename T>
T get_field(const Json& object, const char* key) {
  const Json& v = require(object, key);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::Schema, std::string("invalid field ") + key);
  }
}

}  // namespace

Json to_json(const ParamArray& k) {
  Json j = Json::object();
  for (FilterId id : kAllFilters) j[std::string(filter_name(id))] = k[index_of(id)];
  return j;
}

Json fixed_to_json(const ParamVector& params) {
  Json j = Json::array();
  for (FilterId id : kAllFilters) {
    if (params.is_fixed(id)) j.push_back(std::string(filter_name(id)));
  }
  return j;
}

Json to_json(const ScoreDistribution& d) { return Json(d.p); }

Json to_json(const IterationRecord& r) {
  return Json{{"iteration", r.iteration},
              {"k", to_json(r.params.k)},
              {"fixed", fixed_to_json(r.params)},
              {"gamma", r.gamma},
              {"loss", r.loss},
              {"l_qa", r.l_qa},
              {"l_im", r.l_im},
              {"mean_score", r.mean_score},
              {"distribution", to_json(r.distribution)}};
}

Json to_json(const AbnReport& r) {
  return Json{{"p_before", r.p_before},
              {"p_after", r.p_after},
              {"action", std::string(to_string(r.action))},
              {"clip_percent_used", r.clip_percent_used},
              {"shift_used", r.shift_used},
              {"iterations", r.iterations},
              {"exhausted", r.exhausted},
              {"seed", r.seed}};
}

Json to_json(const OptimizerConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"gamma", c.gamma},
              {"max_steps", c.max_steps},
              {"target", to_json(c.target)},
              {"early_stop", c.early_stop},
              {"early_stop_tolerance", c.early_stop_tolerance},
              {"early_stop_patience", c.early_stop_patience}};
}

const Json& require(const Json& object, const char* key) {
  if (!object.is_object()) throw Error(ErrorKind::Schema, std::string("invalid field ") + key);
  const auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorKind::Schema, std::string("missing field ") + key);
  return *it;
}

FilterId filter_from_name(std::string_view name) {
  const auto id = parse_filter_name(name);
  if (!id) throw Error(ErrorKind::InvalidArgument, "unknown filter: " + std::string(name));
  return *id;
}

ParamArray params_from_json(const Json& k) {
  ParamArray out{};
  for (FilterId id : kAllFilters) {
    out[index_of(id)] = get_field<double>(k, std::string(filter_name(id)).c_str());
  }
  return out;
}

void fixed_from_json(const Json& names, ParamVector& params) {
  if (!names.is_array()) throw Error(ErrorKind::Schema, "invalid field fixed");
  params.fixed = {};
  for (const Json& n : names) {
    if (!n.is_string()) throw Error(ErrorKind::Schema, "invalid field fixed");
    params.set_fixed(filter_from_name(n.get<std::string>()), true);
  }
}

ScoreDistribution distribution_from_json(const Json& buckets) {
  ScoreDistribution d;
  if (!buckets.is_array() || buckets.size() != kBucketCount) {
    throw Error(ErrorKind::Schema, "invalid field distribution");
  }
  for (std::size_t i = 0; i < kBucketCount; ++i) {
    if (!buckets[i].is_number()) throw Error(ErrorKind::Schema, "invalid field distribution");
    d.p[i] = buckets[i].get<double>();
  }
  return d;
}

IterationRecord record_from_json(const Json& j) {
  IterationRecord r;
  r.iteration = get_field<int>(j, "iteration");
  r.params.k = params_from_json(require(j, "k"));
  fixed_from_json(require(j, "fixed"), r.params);
  r.gamma = get_field<double>(j, "gamma");
  r.loss = get_field<double>(j, "loss");
  r.l_qa = get_field<double>(j, "l_qa");
  r.l_im = get_field<double>(j, "l_im");
  r.mean_score = get_field<double>(j, "mean_score");
  r.distribution = distribution_from_json(require(j, "distribution"));
  return r;
}

AbnReport abn_report_from_json(const Json& j) {
  AbnReport r;
  r.p_before = get_field<double>(j, "p_before");
  r.p_after = get_field<double>(j, "p_after");
  r.action = parse_abn_action(get_field<std::string>(j, "action"));
  r.clip_percent_used = get_field<double>(j, "clip_percent_used");
  r.shift_used = get_field<double>(j, "shift_used");
  r.iterations = get_field<int>(j, "iterations");
  r.exhausted = get_field<bool>(j, "exhausted");
  r.seed = get_field<std::uint64_t>(j, "seed");
  return r;
}

OptimizerConfig config_from_json(const Json& j) {
  OptimizerConfig c;
  c.learning_rate = get_field<double>(j, "learning_rate");
  c.momentum = get_field<double>(j, "momentum");
  c.gamma = get_field<double>(j, "gamma");
  c.max_steps = get_field<int>(j, "max_steps");
  c.target = distribution_from_json(require(j, "target"));
  c.early_stop = get_field<bool>(j, "early_stop");
  c.early_stop_tolerance = get_field<double>(j, "early_stop_tolerance");
  c.early_stop_patience = get_field<int>(j, "early_stop_patience");
  return c;
}

}  // namespace aesthete
