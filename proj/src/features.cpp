#include "shadowphase/features.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <system_error>

#include "shadowphase/hamiltonians.hpp"

namespace shadowphase {

namespace {

using json = nlohmann::json;

constexpr std::array<Pauli, 3> kAxes{Pauli::X, Pauli::Y, Pauli::Z};

void add_pair_observables(ObservableSet& set, int n, int a, int b) {
  for (Pauli p : kAxes) {
    const std::array<int, 2> sites{a, b};
    const std::array<Pauli, 2> labels{p, p};
    set.observables.push_back(PauliString::on_sites(n, sites, labels));
    const char c = static_cast<char>(to_char(p) - 'A' + 'a');
    set.names.push_back(std::string{c, c} + "_" + std::to_string(a + 1) + "_" +
                        std::to_string(b + 1));
  }
}

std::vector<double> parse_row(const std::string& line, std::size_t expected,
                              const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + end, v);
    if (ec != std::errc{} || ptr != line.data() + end) {
      throw FeatureError(what + ": malformed number '" + line.substr(start, end - start) + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  if (out.size() != expected) {
    throw FeatureError(what + ": expected " + std::to_string(expected) + " fields, got " +
                       std::to_string(out.size()));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FeatureError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FeatureError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw FeatureError("failed writing " + path.string());
}

// Returns rows of values (header checked against `header`).
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          const std::string& header) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw FeatureError(path.string() + ": header does not match the sidecar columns");
  }
  const auto width = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line, width, path.string()));
  }
  return rows;
}

std::string csv_header(const FeatureMatrix& fm) {
  std::string h;
  for (const auto& p : fm.param_names) h += p + ",";
  for (std::size_t c = 0; c < fm.columns.size(); ++c) {
    if (c > 0) h += ",";
    h += fm.columns[c];
  }
  return h;
}

}  // namespace

std::string to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Annni: return "annni";
    case ModelTag::KhCorrelators: return "kh-correlators";
    case ModelTag::KhPlaquette: return "kh-plaquette";
  }
  return "annni";
}

ModelTag model_tag_from_string(const std::string& s) {
  if (s == "annni") return ModelTag::Annni;
  if (s == "kh-correlators") return ModelTag::KhCorrelators;
  if (s == "kh-plaquette") return ModelTag::KhPlaquette;
  throw FeatureError("unknown model tag '" + s + "'");
}

ObservableSet annni_observables(int N) {
  if (N < 3 || N > kMaxSites) {
    throw FeatureError("ANNNI observables need 3 <= N <= " + std::to_string(kMaxSites));
  }
  ObservableSet set;
  set.model = ModelTag::Annni;
  set.locality = 2;
  for (int i = 0; i + 1 < N; ++i) add_pair_observables(set, N, i, i + 1);
  for (int i = 0; i + 2 < N; ++i) add_pair_observables(set, N, i, i + 2);
  set.budget_count = static_cast<int>(set.size());
  return set;
}

ObservableSet kh_quadrant_observables(int L) {
  validate(KhParams{L, 0.0});
  const int n = 2 * L;
  ObservableSet set;
  set.model = ModelTag::KhCorrelators;
  set.locality = 2;
  std::set<std::pair<int, int>> seen;
  for (int i = 1; i < L; ++i) {
    const int a1 = ladder_site(L, i, 1);
    const int a2 = ladder_site(L, i, 2);
    const int b1 = ladder_site(L, i + 1, 1);
    const int b2 = ladder_site(L, i + 1, 2);
    const std::array<std::pair<int, int>, 6> pairs{{
        {a1, b1}, {a2, b2},  // legs
        {a1, a2}, {b1, b2},  // rungs
        {a1, b2}, {a2, b1},  // diagonals
    }};
    for (auto [x, y] : pairs) {
      if (x > y) std::swap(x, y);
      if (!seen.insert({x, y}).second) continue;
      add_pair_observables(set, n, x, y);
    }
  }
  set.budget_count = 3 * n - 6;
  return set;
}

PauliString plaquette_observable(int L, int offset) {
  validate(KhParams{L, 0.0});
  if (offset < 1 || offset + 2 > L) {
    throw FeatureError("plaquette window at rung " + std::to_string(offset) +
                       " does not fit on a ladder with " + std::to_string(L) + " rungs");
  }
  const int n = 2 * L;
  std::set<std::pair<int, int>> perimeter;
  auto edge = [](int a, int b) { return std::pair{std::min(a, b), std::max(a, b)}; };
  for (int leg = 1; leg <= 2; ++leg) {
    for (int r = offset; r < offset + 2; ++r) {
      perimeter.insert(edge(ladder_site(L, r, leg), ladder_site(L, r + 1, leg)));
    }
  }
  perimeter.insert(edge(ladder_site(L, offset, 1), ladder_site(L, offset, 2)));
  perimeter.insert(edge(ladder_site(L, offset + 2, 1), ladder_site(L, offset + 2, 2)));

  PauliString ps(n);
  for (int r = offset; r <= offset + 2; ++r) {
    for (int leg = 1; leg <= 2; ++leg) {
      const int site = ladder_site(L, r, leg);
      for (const LadderBond& b : kh_bonds(L)) {
        if ((b.a != site && b.b != site) || perimeter.contains(edge(b.a, b.b))) continue;
        switch (b.kitaev) {
          case BondKind::KitaevX: ps.set(site, Pauli::X); break;
          case BondKind::KitaevY: ps.set(site, Pauli::Y); break;
          case BondKind::KitaevZ: ps.set(site, Pauli::Z); break;
        }
      }
    }
  }
  return ps;
}

bool FeatureMatrix::has_exact() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [&](const FeatureRow& r) {
    return r.exact.size() == columns.size();
  });
}

FeatureMatrix assemble_feature_matrix(const ObservableSet& set,
                                      std::vector<std::string> param_names,
                                      std::vector<FeatureRow> rows, int size,
                                      double epsilon) {
  if (rows.empty()) throw FeatureError("cannot assemble a feature matrix from an empty sweep");
  for (const FeatureRow& r : rows) {
    if (r.values.size() != set.size()) {
      throw FeatureError("row has " + std::to_string(r.values.size()) +
                         " features, observable set has " + std::to_string(set.size()));
    }
    if (!r.exact.empty() && r.exact.size() != set.size()) {
      throw FeatureError("row oracle values do not match the observable set");
    }
    if (r.params.size() != param_names.size()) {
      throw FeatureError("row parameters do not match the parameter names");
    }
    if (r.exact.empty() != rows.front().exact.empty()) {
      throw FeatureError("oracle values must be given for every row or for none");
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
    return a.params < b.params;
  });
  FeatureMatrix fm;
  fm.model = set.model;
  fm.size = size;
  fm.epsilon = epsilon;
  fm.param_names = std::move(param_names);
  fm.columns = set.names;
  fm.rows = std::move(rows);
  return fm;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string feature_csv(const FeatureMatrix& fm, bool exact) {
  if (exact && !fm.has_exact()) throw FeatureError("feature matrix carries no oracle values");
  std::string out = csv_header(fm) + "\n";
  for (const FeatureRow& r : fm.rows) {
    for (double p : r.params) out += format_double(p) + ",";
    const auto& vals = exact ? r.exact : r.values;
    for (std::size_t c = 0; c < vals.size(); ++c) {
      if (c > 0) out += ",";
      out += format_double(vals[c]);
    }
    out += "\n";
  }
  return out;
}

std::string feature_sidecar(const FeatureMatrix& fm) {
  json j;
  j["schema_version"] = kFeatureSchemaVersion;
  j["model"] = to_string(fm.model);
  j["size"] = fm.size;
  j["epsilon"] = fm.epsilon;
  j["parameters"] = fm.param_names;
  j["columns"] = fm.columns;
  j["has_oracle"] = fm.has_exact();
  json rows = json::array();
  for (const FeatureRow& r : fm.rows) {
    rows.push_back({{"params", r.params}, {"seed", r.seed}, {"budget", r.budget}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_feature_files(const std::filesystem::path& dir, const FeatureMatrix& fm) {
  std::filesystem::create_directories(dir);
  write_text(dir / "features.csv", feature_csv(fm));
  if (fm.has_exact()) write_text(dir / "oracle.csv", feature_csv(fm, true));
  write_text(dir / "features.json", feature_sidecar(fm));
}

FeatureMatrix read_feature_files(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "features.json"));
  } catch (const json::exception& e) {
    throw FeatureError((dir / "features.json").string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kFeatureSchemaVersion) {
    throw FeatureError("unsupported feature schema version");
  }
  FeatureMatrix fm;
  fm.model = model_tag_from_string(j.at("model").get<std::string>());
  fm.size = j.at("size").get<int>();
  fm.epsilon = j.at("epsilon").get<double>();
  fm.param_names = j.at("parameters").get<std::vector<std::string>>();
  fm.columns = j.at("columns").get<std::vector<std::string>>();
  const std::string header = csv_header(fm);
  const std::size_t np = fm.param_names.size();
  const auto values = read_csv(dir / "features.csv", header);
  const auto& meta = j.at("rows");
  if (meta.size() != values.size()) throw FeatureError("sidecar and CSV row counts differ");
  std::vector<std::vector<double>> oracle;
  if (j.value("has_oracle", false)) oracle = read_csv(dir / "oracle.csv", header);
  for (std::size_t i = 0; i < values.size(); ++i) {
    FeatureRow r;
    r.params.assign(values[i].begin(), values[i].begin() + static_cast<std::ptrdiff_t>(np));
    r.values.assign(values[i].begin() + static_cast<std::ptrdiff_t>(np), values[i].end());
    if (!oracle.empty()) {
      r.exact.assign(oracle.at(i).begin() + static_cast<std::ptrdiff_t>(np), oracle.at(i).end());
    }
    r.seed = meta[i].at("seed").get<std::uint64_t>();
    r.budget = meta[i].at("budget").get<std::int64_t>();
    fm.rows.push_back(std::move(r));
  }
  return fm;
}

}  // namespace shadowphase
