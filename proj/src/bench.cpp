#include "lintab/bench.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lintab::bench {

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::Pyramid: return "pyramid";
    case Shape::Cycle: return "cycle";
    case Shape::Grid: return "grid";
  }
  return "?";
}

std::string_view to_string(Variant v) { return v == Variant::RecursiveFirst ? "first" : "last"; }

Shape parse_shape(std::string_view s) {
  for (Shape x : {Shape::Pyramid, Shape::Cycle, Shape::Grid}) {
    if (to_string(x) == s) return x;
  }
  throw std::invalid_argument("unknown shape '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
  if (s == "first" || s == "recursive_first") return Variant::RecursiveFirst;
  if (s == "last" || s == "recursive_last") return Variant::RecursiveLast;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

std::size_t GraphConfig::node_count() const {
  auto d = static_cast<std::size_t>(depth);
  switch (shape) {
    case Shape::Pyramid: return d * (d + 1) / 2;
    case Shape::Cycle: return d;
    case Shape::Grid: return d * d;
  }
  return 0;
}

std::vector<Edge> gen_edges(const GraphConfig& g) {
  if (g.depth < 1 || g.depth > kMaxDepth) {
    throw std::invalid_argument("depth " + std::to_string(g.depth) + " outside [1, " + std::to_string(kMaxDepth) +
                                "]");
  }
  const std::int64_t d = g.depth;
  std::vector<Edge> edges;
  switch (g.shape) {
    case Shape::Pyramid: {
      // row i (1-based) starts at id i*(i-1)/2 + 1
      auto id = [](std::int64_t i, std::int64_t j) { return i * (i - 1) / 2 + j; };
      for (std::int64_t i = 1; i < d; ++i) {
        for (std::int64_t j = 1; j <= i; ++j) {
          edges.emplace_back(id(i, j), id(i + 1, j));
          edges.emplace_back(id(i, j), id(i + 1, j + 1));
        }
      }
      break;
    }
    case Shape::Cycle:
      if (d == 1) {
        edges.emplace_back(1, 1);
        break;
      }
      for (std::int64_t i = 1; i <= d; ++i) edges.emplace_back(i, i % d + 1);
      break;
    case Shape::Grid: {
      auto id = [d](std::int64_t r, std::int64_t c) { return r * d + c + 1; };
      // all horizontal pairs, then all vertical pairs
      for (std::int64_t r = 0; r < d; ++r) {
        for (std::int64_t c = 0; c + 1 < d; ++c) {
          edges.emplace_back(id(r, c), id(r, c + 1));
          edges.emplace_back(id(r, c + 1), id(r, c));
        }
      }
      for (std::int64_t r = 0; r + 1 < d; ++r) {
        for (std::int64_t c = 0; c < d; ++c) {
          edges.emplace_back(id(r, c), id(r + 1, c));
          edges.emplace_back(id(r + 1, c), id(r, c));
        }
      }
      break;
    }
  }
  return edges;
}

std::string path_predicate(Variant v) { return v == Variant::RecursiveFirst ? "path_first" : "path_last"; }

std::string make_path_program(Variant v, bool with_slds) {
  const std::string p = path_predicate(v);
  std::string rec = p + "(X,Z) :- ";
  std::string base = p + "(X,Z) :- ";
  if (with_slds) {
    rec += "sld1, edge(X,Y), " + p + "(Y,Z), sld2.\n";
    base += "sld3, edge(X,Z), sld4.\n";
  } else {
    rec += "edge(X,Y), " + p + "(Y,Z).\n";
    base += "edge(X,Z).\n";
  }
  std::string out = ":- table " + p + "/2.\n\n";
  out += v == Variant::RecursiveFirst ? rec + base : base + rec;
  if (with_slds) out += "\nsld1.\nsld2.\nsld3.\nsld4.\n";
  return out;
}

std::string edge_facts(const std::vector<Edge>& edges) {
  std::string out;
  for (const auto& [a, b] : edges) out += "edge(" + std::to_string(a) + "," + std::to_string(b) + ").\n";
  return out;
}

std::set<Edge> oracle_reachability(const std::vector<Edge>& edges) {
  std::map<std::int64_t, std::vector<std::int64_t>> adj;
  for (const auto& [a, b] : edges) adj[a].push_back(b);
  std::set<Edge> out;
  for (const auto& [src, _] : adj) {
    std::set<std::int64_t> seen;
    std::deque<std::int64_t> queue{src};
    while (!queue.empty()) {
      std::int64_t n = queue.front();
      queue.pop_front();
      auto it = adj.find(n);
      if (it == adj.end()) continue;
      for (std::int64_t m : it->second) {
        if (seen.insert(m).second) {
          out.emplace(src, m);
          queue.push_back(m);
        }
      }
    }
  }
  return out;
}

bool BenchReport::all_ok() const {
  for (const auto& c : cells) {
    if (!c.ok()) return false;
  }
  return true;
}

const CellResult* BenchReport::find(StrategyConfig c) const {
  for (const auto& cell : cells) {
    if (cell.config == c) return &cell;
  }
  return nullptr;
}

namespace {

Edge answer_pair(const Answer& a, bool bound) {
  std::int64_t x = 1;
  std::int64_t z = 0;
  for (const auto& [name, t] : a.bindings) {
    if (!t.is_integer()) throw std::runtime_error("non-integer answer " + a.to_string());
    if (name == "X") x = t.value();
    if (name == "Z") z = t.value();
  }
  if (bound && a.bindings.size() != 1) throw std::runtime_error("unexpected answer " + a.to_string());
  return {x, z};
}

}  // namespace

BenchReport run_matrix(const BenchSpec& spec) {
  const auto edges = gen_edges(spec.graph);
  std::set<Edge> expected = oracle_reachability(edges);
  if (spec.bound) {
    std::set<Edge> projected;
    for (const Edge& e : expected) {
      if (e.first == 1) projected.insert(e);
    }
    expected = std::move(projected);
  }
  const Program program = parse_program(make_path_program(spec.variant, spec.with_slds) + edge_facts(edges));
  const std::string p = path_predicate(spec.variant);
  const auto query = parse_query(spec.bound ? p + "(1,Z)." : p + "(X,Z).");

  BenchReport report;
  report.oracle_answers = expected.size();
  for (const StrategyConfig& config : spec.configs) {
    CellResult cell;
    cell.shape = spec.graph.shape;
    cell.depth = spec.graph.depth;
    cell.variant = spec.variant;
    cell.with_slds = spec.with_slds;
    cell.bound = spec.bound;
    cell.config = config;
    cell.oracle_answers = expected.size();
    EngineOptions options;
    options.step_budget = spec.step_budget;
    options.report_tables = false;
    // answers arrive deduplicated, so all-in-oracle plus equal count is set equality
    std::size_t outside = 0;
    options.on_answer = [&](const Answer& a) {
      ++cell.answers;
      if (!expected.count(answer_pair(a, spec.bound))) ++outside;
    };
    auto start = std::chrono::steady_clock::now();
    try {
      SolveResult r = solve(program, query, config, options);
      cell.stats = r.stats;
      cell.matches_oracle = outside == 0 && cell.answers == expected.size();
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.cells.push_back(std::move(cell));
  }
  return report;
}

std::string render_text(const BenchReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %5s %-5s %-4s %-8s %12s %14s %7s %10s %10s %10s %10s %9s %10s  %s\n", "shape",
                "depth", "var", "slds", "config", "alts", "sols", "rounds", "sld1", "sld2", "sld3", "sld4", "answers",
                "ms", "status");
  out += line;
  for (const auto& c : r.cells) {
    std::string status = !c.error.empty() ? "error: " + c.error : c.matches_oracle ? "ok" : "oracle mismatch";
    std::snprintf(line, sizeof line,
                  "%-8s %5d %-5s %-4s %-8s %12llu %14llu %7llu %10llu %10llu %10llu %10llu %9zu %10.1f  ",
                  std::string(to_string(c.shape)).c_str(), c.depth, std::string(to_string(c.variant)).c_str(),
                  c.with_slds ? "yes" : "no", c.config.name().c_str(),
                  static_cast<unsigned long long>(c.stats.alts_explored),
                  static_cast<unsigned long long>(c.stats.nonleader_sols_consumed),
                  static_cast<unsigned long long>(c.stats.rounds_started),
                  static_cast<unsigned long long>(c.stats.sld("sld1/0")),
                  static_cast<unsigned long long>(c.stats.sld("sld2/0")),
                  static_cast<unsigned long long>(c.stats.sld("sld3/0")),
                  static_cast<unsigned long long>(c.stats.sld("sld4/0")), c.answers, c.wall_ms);
    out += line;
    out += status;
    out += '\n';
  }
  out += "oracle answers: " + std::to_string(r.oracle_answers) + "\n";
  return out;
}

std::string render_jsonl(const BenchReport& r) {
  std::string out;
  for (const auto& c : r.cells) {
    nlohmann::ordered_json j;
    j["shape"] = to_string(c.shape);
    j["depth"] = c.depth;
    j["variant"] = to_string(c.variant);
    j["with_slds"] = c.with_slds;
    j["bound"] = c.bound;
    j["config"] = c.config.name();
    j["dre"] = c.config.dre;
    j["dra"] = c.config.dra;
    j["drs"] = c.config.drs;
    j["alts"] = c.stats.alts_explored;
    j["sols"] = c.stats.nonleader_sols_consumed;
    j["rounds"] = c.stats.rounds_started;
    j["followers"] = c.stats.followers_created;
    j["generators"] = c.stats.generators_created;
    j["consumers"] = c.stats.consumers_created;
    j["steps"] = c.stats.steps;
    j["answers_emitted"] = c.stats.answers_emitted;
    j["sld"] = c.stats.sld_calls;
    j["answers"] = c.answers;
    j["oracle_answers"] = c.oracle_answers;
    j["matches_oracle"] = c.matches_oracle;
    j["wall_ms"] = c.wall_ms;
    j["error"] = c.error;
    out += j.dump();
    out += '\n';
  }
  return out;
}

BenchReport parse_jsonl(std::string_view text) {
  BenchReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      CellResult c;
      c.shape = parse_shape(j.at("shape").get<std::string>());
      c.depth = j.at("depth").get<int>();
      c.variant = parse_variant(j.at("variant").get<std::string>());
      c.with_slds = j.at("with_slds").get<bool>();
      c.bound = j.at("bound").get<bool>();
      c.config = StrategyConfig{j.at("dre").get<bool>(), j.at("dra").get<bool>(), j.at("drs").get<bool>()};
      c.stats.alts_explored = j.at("alts").get<std::uint64_t>();
      c.stats.nonleader_sols_consumed = j.at("sols").get<std::uint64_t>();
      c.stats.rounds_started = j.at("rounds").get<std::uint64_t>();
      c.stats.followers_created = j.at("followers").get<std::uint64_t>();
      c.stats.generators_created = j.at("generators").get<std::uint64_t>();
      c.stats.consumers_created = j.at("consumers").get<std::uint64_t>();
      c.stats.steps = j.at("steps").get<std::uint64_t>();
      c.stats.answers_emitted = j.at("answers_emitted").get<std::uint64_t>();
      c.stats.sld_calls = j.at("sld").get<std::map<std::string, std::uint64_t>>();
      c.answers = j.at("answers").get<std::size_t>();
      c.oracle_answers = j.at("oracle_answers").get<std::size_t>();
      c.matches_oracle = j.at("matches_oracle").get<bool>();
      c.wall_ms = j.at("wall_ms").get<double>();
      c.error = j.at("error").get<std::string>();
      r.oracle_answers = c.oracle_answers;
      r.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad report record: ") + e.what());
  }
  return r;
}

}  // namespace lintab::bench
