#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "spalloc/harness.hpp"
#include "spalloc/queue_sim.hpp"

using namespace spalloc;

namespace {

struct Common {
  std::string scenario;
  double load = 1;
  Index neighbors = 4;
  Index segments = 0;
  double alpha = 0.05;
  int tmax = 20;
  double conv_tol = 1e-5;
  double penalty = 1;
  std::string form = "elastic";
  std::uint64_t seed = 0;
  bool timing = false;
  bool verbose = false;
};

void add_sparse_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--segments", c.segments, "Spectrum segments for the sparse scheme (0 = k+1)");
  cmd->add_option("--alpha", c.alpha, "Reweighting offset alpha");
  cmd->add_option("--tmax", c.tmax, "Maximum reweighting iterations");
  cmd->add_option("--conv-tol", c.conv_tol, "Stop when max |delta y| falls below this");
  cmd->add_option("--penalty", c.penalty, "Weighted l1 penalty relative to |u|");
  cmd->add_option("--p2-form", c.form, "How the weighted l1 term enters: elastic, constraint or penalty")
      ->check(CLI::IsMember({"elastic", "constraint", "penalty"}));
  cmd->add_option("--neighbors", c.neighbors, "Strongest links kept per UE");
  cmd->add_option("--seed", c.seed, "Seed for the reweighting weights");
  cmd->add_flag("--verbose", c.verbose, "Solver progress on stderr");
}

SchemeParams params_of(const Common& c) {
  SchemeParams p;
  p.neighbors = c.neighbors;
  p.seed = c.seed;
  p.sparse.num_segments = c.segments;
  p.sparse.alpha = c.alpha;
  p.sparse.t_max = c.tmax;
  p.sparse.conv_tol = c.conv_tol;
  p.sparse.penalty = c.penalty;
  p.sparse.form = c.form == "constraint" ? P2Form::constraint
                  : c.form == "penalty"  ? P2Form::penalty
                                         : P2Form::elastic;
  p.sparse.seed = c.seed;
  p.sparse.solver.verbose = c.verbose;
  return p;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& text) {
  std::vector<Scheme> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_scheme(item));
  if (out.empty()) throw Error("no schemes given");
  return out;
}

void emit(const std::vector<ResultRow>& rows, const std::string& out, bool append) {
  if (out.empty())
    write_results(std::cout, rows);
  else
    save_results(out, rows, append);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum allocation with interference neighborhoods"};
  app.require_subcommand(1);

  // generate
  GeneratorConfig gen;
  std::string gen_out;
  auto* g = app.add_subcommand("generate", "Write a random scenario as JSON");
  g->add_option("--n", gen.n, "APs (the first is the macro)");
  g->add_option("--k", gen.k, "UEs");
  g->add_option("--area", gen.area_m, "Side of the square, meters");
  g->add_option("--pathloss-exp", gen.pathloss_exp, "Pathloss exponent");
  g->add_option("--shadow-db", gen.shadow_sigma_db, "Shadowing standard deviation, dB");
  g->add_option("--macro-psd", gen.macro_psd, "Macro PSD, uW/Hz");
  g->add_option("--pico-psd", gen.pico_psd, "Pico PSD, uW/Hz");
  g->add_option("--noise-psd", gen.noise_psd, "Noise PSD, uW/Hz");
  g->add_option("--bandwidth", gen.bandwidth_hz, "Total bandwidth, Hz");
  g->add_option("--packet-bits", gen.packet_len_bits, "Mean packet length, bits");
  g->add_option("--lambda-max", gen.lambda_max, "Arrival rates are uniform in (0, lambda-max), packets/s");
  g->add_option("--min-distance", gen.min_distance_m, "Distance floor, meters");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("-o,--out", gen_out, "Output file (default stdout)");

  // solve
  Common sc;
  std::string solve_scheme = "sparse";
  std::string patterns_prefix;
  auto* s = app.add_subcommand("solve", "Solve one scenario with one scheme; prints a result row");
  s->add_option("--scenario", sc.scenario, "Scenario JSON")->required();
  s->add_option("--scheme", solve_scheme, "p0, sparse, maxrsrp, full-opt or orthogonal");
  s->add_option("--load", sc.load, "Arrival rate scale");
  s->add_option("--patterns-out", patterns_prefix,
                "Write <prefix>_segments.csv and <prefix>_associations.csv");
  s->add_flag("--timing", sc.timing, "Fill the solve_ms column (not reproducible)");
  add_sparse_flags(s, sc);

  // sweep
  Common sw;
  std::string sweep_schemes = "p0,sparse,maxrsrp,full-opt,orthogonal";
  std::string sweep_loads = "0.1,0.2,0.3,0.4";
  std::string sweep_out;
  bool sweep_append = false;
  unsigned workers = 1;
  auto* w = app.add_subcommand("sweep", "Delay versus load for several schemes");
  w->add_option("--scenario", sw.scenario, "Scenario JSON")->required();
  w->add_option("--schemes", sweep_schemes, "Comma-separated schemes");
  w->add_option("--loads", sweep_loads, "Comma-separated load scales");
  w->add_option("--workers", workers, "Worker threads (0 = all cores)");
  w->add_option("-o,--out", sweep_out, "Results CSV (default stdout)");
  w->add_flag("--append", sweep_append, "Append to the results file");
  w->add_flag("--timing", sw.timing, "Fill the solve_ms column (not reproducible)");
  add_sparse_flags(w, sw);

  // max-throughput
  Common mt;
  std::string mt_schemes = "p0,sparse,maxrsrp,full-opt,orthogonal";
  double mt_tol = 1e-3;
  double reference = 0;
  std::string mt_out;
  bool mt_append = false;
  auto* m = app.add_subcommand("max-throughput", "Largest load scale each scheme supports");
  m->add_option("--scenario", mt.scenario, "Scenario JSON")->required();
  m->add_option("--schemes", mt_schemes, "Comma-separated schemes");
  m->add_option("--tol", mt_tol, "Bisection interval width");
  m->add_option("--reference", reference,
                "Load scale at which the sparse scheme picks its patterns (0 = half the P0 maximum)");
  m->add_option("-o,--out", mt_out, "Results CSV (default stdout)");
  m->add_flag("--append", mt_append, "Append to the results file");
  add_sparse_flags(m, mt);

  // validate-queue
  double q_lambda = 0.5;
  double q_rate = 1.0;
  double q_packets = 1e6;
  std::uint64_t q_seed = 0;
  auto* q = app.add_subcommand("validate-queue", "Simulate an M/M/1 queue against 1/(r - lambda)");
  q->add_option("--lambda", q_lambda, "Arrival rate, packets/s");
  q->add_option("--rate", q_rate, "Service rate, packets/s");
  q->add_option("--packets", q_packets, "Packets to simulate");
  q->add_option("--seed", q_seed, "Random seed");

  // compare
  Common cc;
  auto* c = app.add_subcommand("compare", "P0 against the sparse pipeline on one scenario");
  c->add_option("--scenario", cc.scenario, "Scenario JSON")->required();
  c->add_option("--load", cc.load, "Arrival rate scale");
  add_sparse_flags(c, cc);

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) {
      const Scenario scen = generate(gen);
      std::cerr << "cell-edge SNR " << format_number(cell_edge_snr_db(scen)) << " dB\n";
      if (gen_out.empty())
        std::cout << scenario_to_json(scen);
      else
        save_scenario(scen, gen_out);
    } else if (s->parsed()) {
      const Scenario scen = scale_load(load_scenario(sc.scenario), sc.load);
      const SchemeParams params = params_of(sc);
      const Neighborhoods nb = build_neighborhoods(scen, params.neighbors);
      const SchemeOutcome o = run_scheme(scen, nb, parse_scheme(solve_scheme), params);
      ResultRow row;
      row.scheme = to_string(o.scheme);
      row.seed = sc.seed;
      row.n = scen.num_aps();
      row.k = scen.num_ues();
      row.segments = o.segments;
      row.load_scale = sc.load;
      row.total_arrival_pps = scen.arrival_rates.sum();
      row.utility = o.utility;
      row.avg_delay_s = average_delay(scen.arrival_rates, o.utility);
      row.active_patterns = o.active_patterns;
      if (sc.timing) row.solve_ms = o.solve_ms;
      write_results(std::cout, {row});
      if (!patterns_prefix.empty()) {
        const PatternReport r = report_patterns(o.allocation);
        write_file(patterns_prefix + "_segments.csv", segments_csv(r));
        write_file(patterns_prefix + "_associations.csv", associations_csv(r));
      }
      if (o.status != SolveStatus::optimal) std::cerr << "status: " << to_string(o.status) << '\n';
    } else if (w->parsed()) {
      const Scenario scen = load_scenario(sw.scenario);
      std::vector<std::string> errors;
      const auto rows = sweep(scen, parse_schemes(sweep_schemes), parse_list(sweep_loads), params_of(sw), workers,
                              &errors, sw.timing);
      emit(rows, sweep_out, sweep_append);
      for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    } else if (m->parsed()) {
      const Scenario scen = load_scenario(mt.scenario);
      SchemeParams params = params_of(mt);
      const Neighborhoods nb = build_neighborhoods(scen, params.neighbors);
      const auto schemes = parse_schemes(mt_schemes);
      params.reference_scale = reference;
      std::optional<ThroughputResult> joint;
      if (!(reference > 0)) {
        // Half the joint optimum's maximum load; the joint maximum is the
        // same for P0 and the segmented relaxation.
        joint = max_throughput(scen, nb, Scheme::p0, params, mt_tol);
        params.reference_scale = 0.5 * joint->sigma;
      }
      std::vector<ResultRow> rows;
      for (Scheme sch : schemes) {
        const ThroughputResult t =
            sch == Scheme::p0 && joint ? *joint : max_throughput(scen, nb, sch, params, mt_tol);
        ResultRow row;
        row.scheme = to_string(sch);
        row.seed = mt.seed;
        row.n = scen.num_aps();
        row.k = scen.num_ues();
        row.segments = sch == Scheme::p0 ? 0 : static_cast<Index>(t.patterns.size());
        row.load_scale = t.sigma;
        row.total_arrival_pps = t.sigma * scen.arrival_rates.sum();
        row.utility = std::nan("");
        row.avg_delay_s = std::nan("");
        row.max_supported = t.sigma;
        std::vector<Pattern> distinct;
        for (const auto& p : t.patterns)
          if (!p.empty()) distinct.push_back(p);
        std::sort(distinct.begin(), distinct.end());
        row.active_patterns = std::unique(distinct.begin(), distinct.end()) - distinct.begin();
        rows.push_back(row);
      }
      emit(rows, mt_out, mt_append);
    } else if (q->parsed()) {
      const QueueEstimate e = simulate_mm1(q_lambda, q_rate, static_cast<Index>(std::llround(q_packets)), q_seed);
      const double expected = 1.0 / (q_rate - q_lambda);
      std::cout << "mean_sojourn_s,half_width_s,expected_s,relative_error\n"
                << format_number(e.mean_sojourn) << ',' << format_number(e.half_width) << ','
                << format_number(expected) << ',' << format_number(std::abs(e.mean_sojourn - expected) / expected)
                << '\n';
    } else if (c->parsed()) {
      const Scenario scen = scale_load(load_scenario(cc.scenario), cc.load);
      const SchemeParams params = params_of(cc);
      const Neighborhoods nb = build_neighborhoods(scen, params.neighbors);
      const SchemeOutcome joint = run_scheme(scen, nb, Scheme::p0, params);
      const SchemeOutcome sparse = run_scheme(scen, nb, Scheme::sparse, params);
      const double gap = (joint.utility - sparse.utility) / std::abs(joint.utility);
      std::cout << "p0_utility,sparse_utility,relative_gap,p0_patterns,sparse_patterns\n"
                << format_number(joint.utility) << ',' << format_number(sparse.utility) << ','
                << format_number(gap) << ',' << joint.active_patterns << ',' << sparse.active_patterns << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
