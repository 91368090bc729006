// lintab: run tabled queries and the path benchmark matrix.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lintab/bench.hpp"
#include "lintab/engine.hpp"

namespace {

using namespace lintab;

constexpr int kOk = 0;
constexpr int kEngineError = 1;
constexpr int kUsageError = 2;

struct Options {
  std::string program_path;
  std::string query;
  bool dre = false, dra = false, drs = false;
  std::string stats = "text";
  std::uint64_t max_steps = 1'000'000'000;
  bool trace = false;
  bool dump = false;

  std::string shape;
  int depth = 0;
  std::string variant = "first";
  bool with_slds = false;
  bool bound = false;
  bool all_configs = false;
};

void print_stats_text(const EvalStats& s, std::ostream& out) {
  out << "% alts_explored " << s.alts_explored << "\n"
      << "% nonleader_sols_consumed " << s.nonleader_sols_consumed << "\n"
      << "% rounds_started " << s.rounds_started << "\n"
      << "% followers_created " << s.followers_created << "\n"
      << "% generators_created " << s.generators_created << "\n"
      << "% consumers_created " << s.consumers_created << "\n"
      << "% answers_emitted " << s.answers_emitted << "\n"
      << "% steps " << s.steps << "\n";
  for (const auto& [k, v] : s.sld_calls) out << "% sld " << k << " " << v << "\n";
}

void print_stats_json(const EvalStats& s, std::ostream& out) {
  nlohmann::ordered_json j;
  j["alts"] = s.alts_explored;
  j["sols"] = s.nonleader_sols_consumed;
  j["rounds"] = s.rounds_started;
  j["followers"] = s.followers_created;
  j["generators"] = s.generators_created;
  j["consumers"] = s.consumers_created;
  j["answers_emitted"] = s.answers_emitted;
  j["steps"] = s.steps;
  j["sld"] = s.sld_calls;
  out << j.dump() << "\n";
}

int do_run(const Options& o) {
  std::ifstream in(o.program_path);
  if (!in) {
    std::cerr << "lintab: cannot read program file " << o.program_path << "\n";
    return kUsageError;
  }
  std::stringstream text;
  text << in.rdbuf();
  Program program;
  std::vector<Term> query;
  try {
    program = parse_program(text.str());
  } catch (const ParseError& e) {
    std::cerr << o.program_path << ": " << e.what() << "\n";
    return kUsageError;
  }
  try {
    query = parse_query(o.query);
  } catch (const ParseError& e) {
    std::cerr << "query: " << e.what() << "\n";
    return kUsageError;
  }
  EngineOptions eo;
  eo.step_budget = o.max_steps;
  eo.diagnostics = &std::cerr;
  if (o.trace) eo.on_event = [](const Event& e) { std::cerr << e.to_line() << "\n"; };
  try {
    SolveResult r = solve(program, query, StrategyConfig{o.dre, o.dra, o.drs}, eo);
    for (const Answer& a : r.answers) std::cout << a.to_string() << "\n";
    if (r.answers.empty()) std::cout << "no\n";
    if (o.dump) std::cout << r.table_dump;
    if (o.stats == "structured")
      print_stats_json(r.stats, std::cout);
    else
      print_stats_text(r.stats, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "lintab: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "lintab: " << e.what() << "\n";
    return kEngineError;
  }
  return kOk;
}

int do_bench(const Options& o) {
  bench::BenchSpec spec;
  try {
    spec.graph.shape = bench::parse_shape(o.shape);
    spec.graph.depth = o.depth;
    spec.variant = bench::parse_variant(o.variant);
    bench::gen_edges(spec.graph);  // validates depth
  } catch (const std::invalid_argument& e) {
    std::cerr << "lintab: " << e.what() << "\n";
    return kUsageError;
  }
  spec.with_slds = o.with_slds;
  spec.bound = o.bound;
  spec.step_budget = o.max_steps;
  if (o.all_configs) {
    auto all = StrategyConfig::all();
    spec.configs.assign(all.begin(), all.end());
  } else {
    spec.configs = {StrategyConfig{o.dre, o.dra, o.drs}};
  }
  bench::BenchReport r = bench::run_matrix(spec);
  std::cout << (o.stats == "structured" ? bench::render_jsonl(r) : bench::render_text(r));
  return r.all_ok() ? kOk : kEngineError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear tabling engine"};
  app.require_subcommand(1);
  Options o;

  auto strategy_flags = [&](CLI::App* sub) {
    sub->add_flag("--dre", o.dre, "followers steal untried clauses");
    sub->add_flag("--dra", o.dra, "re-evaluate looping alternatives only");
    sub->add_flag("--drs", o.drs, "re-propagate looping solutions only");
    sub->add_option("--stats", o.stats, "stats output mode")->check(CLI::IsMember({"text", "structured"}));
  };

  auto* run = app.add_subcommand("run", "evaluate a query against a program");
  run->add_option("--program", o.program_path, "program file")->required();
  run->add_option("--query", o.query, "query goals")->required();
  run->add_option("--max-steps", o.max_steps, "resolution step budget");
  run->add_flag("--trace", o.trace, "print evaluation events to stderr");
  run->add_flag("--dump", o.dump, "print the final table space");
  strategy_flags(run);

  auto* bench = app.add_subcommand("bench", "run the path benchmark");
  bench->add_option("--shape", o.shape, "pyramid | cycle | grid")->required();
  bench->add_option("--depth", o.depth, "graph depth")->required();
  bench->add_option("--variant", o.variant, "first | last");
  bench->add_flag("--with-slds", o.with_slds, "interleave sld1..sld4");
  bench->add_flag("--bound", o.bound, "query path(1,Z) instead of path(X,Z)");
  bench->add_flag("--all-configs", o.all_configs, "run all eight strategy combinations");
  bench->add_option("--max-steps", o.max_steps, "resolution step budget per cell")
      ->default_val(std::uint64_t{10'000'000'000ULL});
  strategy_flags(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }
  if (run->parsed()) return do_run(o);
  return do_bench(o);
}
