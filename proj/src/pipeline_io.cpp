#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "shadowphase/pipeline.hpp"

namespace shadowphase {

namespace {

using json = nlohmann::json;

constexpr int kOutputSchemaVersion = 1;

json range_to_json(const Range& r) {
  return {{"min", r.min}, {"max", r.max}, {"points", r.points}, {"endpoint", r.endpoint}};
}

Range range_from_json(const json& j, Range r) {
  r.min = j.value("min", r.min);
  r.max = j.value("max", r.max);
  r.points = j.value("points", r.points);
  r.endpoint = j.value("endpoint", r.endpoint);
  return r;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw PipelineError("unknown configuration key '" + where + key + "'");
  }
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

std::string reports_csv(const FeatureMatrix& fm,
                        const std::vector<std::vector<EstimateReport>>& reports) {
  std::string out;
  for (const auto& p : fm.param_names) out += p + ",";
  out += "observable,pauli,estimate,exact,within_bound\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t o = 0; o < reports[i].size(); ++o) {
      const EstimateReport& r = reports[i][o];
      out += join_doubles(fm.rows[i].params) + "," + fm.columns[o] + "," + r.observable.str() +
             "," + format_double(r.estimate) + "," + format_double(r.exact.value_or(0.0)) + "," +
             (r.within_bound() ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace

SweepConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw PipelineError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw PipelineError("configuration must be a JSON object");
  check_keys(j,
             {"model", "size", "k", "g", "phi_pi", "epsilon", "seed", "budget_override",
              "plaquette_rounds", "plaquette_offset", "plaquette_threshold", "clusters",
              "k_max", "pca_components", "use_oracle", "failure", "threads"},
             "");
  SweepConfig c;
  try {
    c.model = j.value("model", c.model);
    c.size = j.value("size", c.size);
    if (j.contains("k")) c.k = range_from_json(j["k"], c.k);
    if (j.contains("g")) c.g = range_from_json(j["g"], c.g);
    if (j.contains("phi_pi")) c.phi_pi = range_from_json(j["phi_pi"], c.phi_pi);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.seed = j.value("seed", c.seed);
    if (j.contains("budget_override") && !j["budget_override"].is_null()) {
      c.budget_override = j["budget_override"].get<std::int64_t>();
    }
    c.plaquette_rounds = j.value("plaquette_rounds", c.plaquette_rounds);
    c.plaquette_offset = j.value("plaquette_offset", c.plaquette_offset);
    c.plaquette_threshold = j.value("plaquette_threshold", c.plaquette_threshold);
    c.clusters = j.value("clusters", c.clusters);
    c.k_max = j.value("k_max", c.k_max);
    c.pca_components = j.value("pca_components", c.pca_components);
    c.use_oracle = j.value("use_oracle", c.use_oracle);
    if (j.contains("failure")) {
      const json& f = j["failure"];
      check_keys(f, {"sizes", "trials", "k", "g"}, "failure.");
      c.failure.sizes = f.value("sizes", c.failure.sizes);
      c.failure.trials = f.value("trials", c.failure.trials);
      c.failure.k = f.value("k", c.failure.k);
      c.failure.g = f.value("g", c.failure.g);
    }
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw PipelineError(std::string("configuration has a field of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

SweepConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_text_file(path));
}

std::string config_to_json(const SweepConfig& cfg) {
  // Thread count is left out: it never changes results.
  json j;
  j["model"] = cfg.model;
  j["size"] = cfg.resolved_size();
  j["k"] = range_to_json(cfg.k);
  j["g"] = range_to_json(cfg.g);
  j["phi_pi"] = range_to_json(cfg.phi_pi);
  j["epsilon"] = cfg.epsilon;
  j["seed"] = cfg.seed;
  j["budget_override"] = cfg.budget_override ? json(*cfg.budget_override) : json(nullptr);
  j["plaquette_rounds"] = cfg.plaquette_rounds;
  j["plaquette_offset"] = cfg.plaquette_offset;
  j["plaquette_threshold"] = cfg.plaquette_threshold;
  j["clusters"] = cfg.resolved_clusters();
  j["k_max"] = cfg.k_max;
  j["pca_components"] = cfg.pca_components;
  j["use_oracle"] = cfg.use_oracle;
  j["failure"] = {{"sizes", cfg.failure.sizes},
                  {"trials", cfg.failure.trials},
                  {"k", cfg.failure.k},
                  {"g", cfg.failure.g}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw PipelineError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_annni_sweep(const std::filesystem::path& dir, const SweepConfig& cfg,
                       const AnnniSweep& sweep) {
  write_feature_files(dir, sweep.features);
  write_text_file(dir / "reports.csv", reports_csv(sweep.features, sweep.reports));
  write_text_file(dir / "config.json", config_to_json(cfg));
}

void write_kh_sweep(const std::filesystem::path& dir, const SweepConfig& cfg,
                    const KhSweep& sweep) {
  write_feature_files(dir, sweep.features);
  write_text_file(dir / "reports.csv", reports_csv(sweep.features, sweep.reports));
  std::string plaq = "phi,estimate,exact\n";
  for (const PlaquettePoint& p : sweep.plaquette) {
    plaq += format_double(p.phi) + "," + format_double(p.estimate) + "," +
            format_double(p.exact) + "\n";
  }
  write_text_file(dir / "plaquette.csv", plaq);
  json meta = {{"schema_version", kOutputSchemaVersion},
               {"observable", sweep.plaquette_string},
               {"rounds", sweep.plaquette_rounds},
               {"offset", cfg.plaquette_offset}};
  write_text_file(dir / "plaquette.json", meta.dump(2) + "\n");
  write_text_file(dir / "config.json", config_to_json(cfg));
}

std::vector<PlaquettePoint> read_plaquette_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "phi,estimate,exact") {
    throw PipelineError(path.string() + ": unexpected plaquette header");
  }
  std::vector<PlaquettePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 3> v{};
    std::size_t start = 0;
    for (std::size_t f = 0; f < v.size(); ++f) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      const auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + end, v[f]);
      if (ec != std::errc{} || ptr != line.data() + end) {
        throw PipelineError(path.string() + ": malformed line '" + line + "'");
      }
      start = end + 1;
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

std::string phase_map_json(const PhaseMap& map) {
  json j;
  j["schema_version"] = kOutputSchemaVersion;
  j["model"] = map.model;
  j["parameters"] = map.param_names;
  json legend = json::array();
  for (const auto& [code, text] : map.legend) legend.push_back({{"label", code}, {"phase", text}});
  j["legend"] = std::move(legend);
  j["provenance"] = {{"config_hash", map.config_hash},
                     {"features_hash", map.features_hash},
                     {"seed", map.seed}};
  j["inertia"] = map.inertia;
  json points = json::array();
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    points.push_back({{"params", map.points[i]}, {"label", map.labels[i]}});
  }
  j["points"] = std::move(points);
  return j.dump(2) + "\n";
}

std::string phase_map_csv(const PhaseMap& map) {
  std::string out;
  for (const auto& p : map.param_names) out += p + ",";
  out += "label\n";
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    out += join_doubles(map.points[i]) + "," + map.labels[i] + "\n";
  }
  return out;
}

void write_phase_map(const std::filesystem::path& dir, const PhaseMap& map) {
  write_text_file(dir / "phase_map.json", phase_map_json(map));
  write_text_file(dir / "phase_map.csv", phase_map_csv(map));
  if (map.param_names.size() == 1) {
    std::string t = "from,to,at\n";
    for (const Transition& tr : detect_transitions(map)) {
      t += tr.from + "," + tr.to + "," + format_double(tr.at) + "\n";
    }
    write_text_file(dir / "transitions.csv", t);
  }
}

void write_failure_experiment(const std::filesystem::path& dir, const SweepConfig& cfg,
                              const std::vector<FailureSeries>& series) {
  std::string csv = "size,trial,rho_fail\n";
  json summary = json::array();
  for (const FailureSeries& s : series) {
    double mean = 0.0;
    for (std::size_t t = 0; t < s.rho.size(); ++t) {
      csv += std::to_string(s.size) + "," + std::to_string(t + 1) + "," +
             format_double(s.rho[t]) + "\n";
      mean += s.rho[t];
    }
    mean /= static_cast<double>(s.rho.size());
    summary.push_back({{"size", s.size},
                       {"budget", s.budget},
                       {"observables", s.observables},
                       {"trials", s.rho.size()},
                       {"mean_rho_fail", mean}});
  }
  write_text_file(dir / "failure.csv", csv);
  json j = {{"schema_version", kOutputSchemaVersion},
            {"epsilon", cfg.epsilon},
            {"k", cfg.failure.k},
            {"g", cfg.failure.g},
            {"config_hash", hex64(fnv1a(config_to_json(cfg)))},
            {"series", summary}};
  write_text_file(dir / "failure.json", j.dump(2) + "\n");
}

std::string elbow_csv(const std::vector<ElbowPoint>& curve) {
  std::string out = "k,inertia,second_difference\n";
  for (const ElbowPoint& p : curve) {
    const double d = second_difference(curve, p.k);
    out += std::to_string(p.k) + "," + format_double(p.inertia) + "," +
           (std::isnan(d) ? std::string() : format_double(d)) + "\n";
  }
  return out;
}

std::string pca_csv(const FeatureMatrix& fm, const PcaResult& p) {
  std::string out;
  for (const auto& name : fm.param_names) out += name + ",";
  for (Eigen::Index c = 0; c < p.projections.cols(); ++c) {
    if (c > 0) out += ",";
    out += "pc" + std::to_string(c + 1);
  }
  out += "\n";
  for (Eigen::Index i = 0; i < p.projections.rows(); ++i) {
    out += join_doubles(fm.rows[static_cast<std::size_t>(i)].params) + ",";
    for (Eigen::Index c = 0; c < p.projections.cols(); ++c) {
      if (c > 0) out += ",";
      out += format_double(p.projections(i, c));
    }
    out += "\n";
  }
  return out;
}

std::string persistence_csv(const PersistenceDiagram& d) {
  std::string out = "birth,death\n";
  for (const PersistencePair& p : d.pairs) {
    out += format_double(p.birth) + "," + (std::isfinite(p.death) ? format_double(p.death) : "inf") + "\n";
  }
  return out;
}

}  // namespace shadowphase
