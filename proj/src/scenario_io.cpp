#include "spalloc/scenario_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spalloc {

using nlohmann::json;

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid generator config: " + what); };
  if (n < 1) fail("n must be at least 1");
  if (k < 1) fail("k must be at least 1");
  if (!(area_m > 0)) fail("area_m must be > 0");
  if (!(pathloss_exp > 0)) fail("pathloss_exp must be > 0");
  if (!(shadow_sigma_db >= 0)) fail("shadow_sigma_db must be >= 0");
  if (!(macro_psd > 0) || !(pico_psd > 0) || !(noise_psd > 0)) fail("PSDs must be > 0");
  if (!(bandwidth_hz > 0)) fail("bandwidth_hz must be > 0");
  if (!(packet_len_bits > 0)) fail("packet_len_bits must be > 0");
  if (!(lambda_max > 0)) fail("lambda_max must be > 0");
  if (!(min_distance_m > 0)) fail("min_distance_m must be > 0");
}

Scenario generate(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Scenario s;
  const Index n = cfg.n;
  const Index k = cfg.k;
  const double a = cfg.area_m;

  s.ap_positions.resize(n, 2);
  s.ap_positions.row(0) << a / 2, a / 2;
  for (Index i = 1; i < n; ++i) {
    const double x = rng.uniform() * a;
    const double y = rng.uniform() * a;
    s.ap_positions.row(i) << x, y;
  }

  const auto cols = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(k))));
  const Index rows = (k + cols - 1) / cols;
  s.ue_positions.resize(k, 2);
  for (Index j = 0; j < k; ++j) {
    const Index r = j / cols;
    const Index c = j % cols;
    s.ue_positions.row(j) << (static_cast<double>(c) + 0.5) * a / static_cast<double>(cols),
        (static_cast<double>(r) + 0.5) * a / static_cast<double>(rows);
  }

  s.gain.resize(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j) {
      const double d = std::max(cfg.min_distance_m, (s.ap_positions.row(i) - s.ue_positions.row(j)).norm());
      const double shadow_db = cfg.shadow_sigma_db * rng.normal();
      s.gain(i, j) = std::pow(d, -cfg.pathloss_exp) * std::pow(10.0, shadow_db / 10.0);
    }

  s.tx_psd = Vector::Constant(n, cfg.pico_psd);
  s.tx_psd(0) = cfg.macro_psd;
  s.noise_psd = Vector::Constant(k, cfg.noise_psd);
  s.arrival_rates.resize(k);
  for (Index j = 0; j < k; ++j) s.arrival_rates(j) = cfg.lambda_max * rng.uniform();
  s.bandwidth_hz = cfg.bandwidth_hz;
  s.packet_len_bits = cfg.packet_len_bits;
  return s;
}

double cell_edge_snr_db(const Scenario& s) {
  double worst = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < s.num_ues(); ++j) {
    double best = 0;
    for (Index i = 0; i < s.num_aps(); ++i) best = std::max(best, s.tx_psd(i) * s.gain(i, j) / s.noise_psd(j));
    worst = std::min(worst, best);
  }
  return 10.0 * std::log10(worst);
}

Scenario scale_load(const Scenario& s, double scale) {
  Scenario out = s;
  out.arrival_rates *= scale;
  return out;
}

namespace {

json points(const PointsX<double>& p) {
  json out = json::array();
  for (Index r = 0; r < p.rows(); ++r) out.push_back({p(r, 0), p(r, 1)});
  return out;
}

json vec(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw Error(std::string("scenario: missing field '") + name + "'");
  return j.at(name);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error("scenario: field '" + where + "' must be a number");
  return j.get<double>();
}

Vector read_vec(const json& j, const char* name, Index expected) {
  const json& a = field(j, name);
  if (!a.is_array() || static_cast<Index>(a.size()) != expected)
    throw Error(std::string("scenario: field '") + name + "' must be an array of " + std::to_string(expected));
  Vector v(expected);
  for (Index i = 0; i < expected; ++i)
    v(i) = number(a[static_cast<std::size_t>(i)], std::string(name) + "[" + std::to_string(i) + "]");
  return v;
}

PointsX<double> read_points(const json& j, const char* name, Index expected) {
  const json& a = field(j, name);
  if (!a.is_array() || static_cast<Index>(a.size()) != expected)
    throw Error(std::string("scenario: field '") + name + "' must be an array of " + std::to_string(expected));
  PointsX<double> p(expected, 2);
  for (Index i = 0; i < expected; ++i) {
    const json& row = a[static_cast<std::size_t>(i)];
    const std::string where = std::string(name) + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 2) throw Error("scenario: field '" + where + "' must be [x, y]");
    p(i, 0) = number(row[0], where);
    p(i, 1) = number(row[1], where);
  }
  return p;
}

Index read_count(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw Error(std::string("scenario: field '") + name + "' must be a nonnegative integer");
  return static_cast<Index>(v.get<long long>());
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["n"] = s.num_aps();
  j["k"] = s.num_ues();
  j["ap_positions"] = points(s.ap_positions);
  j["ue_positions"] = points(s.ue_positions);
  json g = json::array();
  for (Index i = 0; i < s.num_aps(); ++i) g.push_back(vec(s.gain.row(i).transpose()));
  j["gain"] = std::move(g);
  j["tx_psd"] = vec(s.tx_psd);
  j["noise_psd"] = vec(s.noise_psd);
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["packet_len_bits"] = s.packet_len_bits;
  j["arrival_rates"] = vec(s.arrival_rates);
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("scenario: parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw Error("scenario: top level must be an object");
  Scenario s;
  const Index n = read_count(j, "n");
  const Index k = read_count(j, "k");
  s.ap_positions = read_points(j, "ap_positions", n);
  s.ue_positions = read_points(j, "ue_positions", k);
  const json& g = field(j, "gain");
  if (!g.is_array() || static_cast<Index>(g.size()) != n)
    throw Error("scenario: field 'gain' must be an n x k array");
  s.gain.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    const json& row = g[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != k)
      throw Error("scenario: field 'gain[" + std::to_string(i) + "]' must have k entries");
    for (Index jj = 0; jj < k; ++jj)
      s.gain(i, jj) = number(row[static_cast<std::size_t>(jj)],
                             "gain[" + std::to_string(i) + "][" + std::to_string(jj) + "]");
  }
  s.tx_psd = read_vec(j, "tx_psd", n);
  s.noise_psd = read_vec(j, "noise_psd", k);
  s.bandwidth_hz = number(field(j, "bandwidth_hz"), "bandwidth_hz");
  s.packet_len_bits = number(field(j, "packet_len_bits"), "packet_len_bits");
  s.arrival_rates = read_vec(j, "arrival_rates", k);
  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << scenario_to_json(s);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return scenario_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const ResultRow& r) {
  std::ostringstream o;
  o << r.scheme << ',' << r.seed << ',' << r.n << ',' << r.k << ',' << r.segments << ',' << format_number(r.load_scale)
    << ',' << format_number(r.total_arrival_pps) << ',' << format_number(r.utility) << ','
    << format_number(r.avg_delay_s) << ',' << (r.max_supported ? format_number(*r.max_supported) : "") << ','
    << r.active_patterns << ',' << (r.solve_ms ? format_number(*r.solve_ms) : "");
  return o.str();
}

void write_results(std::ostream& out, const std::vector<ResultRow>& rows, bool header) {
  if (header) out << kResultsHeader << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

void save_results(const std::string& path, const std::vector<ResultRow>& rows, bool append) {
  bool header = true;
  if (append) {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) header = false;
  }
  std::ofstream out(path, append ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  write_results(out, rows, header);
}

}  // namespace spalloc
