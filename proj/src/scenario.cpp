#include "impact/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "impact/csv_io.hpp"
#include "impact/equilibrium.hpp"
#include "impact/errors.hpp"
#include "impact/numeric.hpp"
#include "impact/version.hpp"

namespace impact {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- strict parsing helpers -------------------------------------------------

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError(ctx + ": unknown key '" + key + "'");
  }
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(ctx + ": missing required key '" + key + "'");
  return *it;
}

double get_num(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw ConfigError(ctx + ": expected a number");
  return j.get<double>();
}

double get_num(const json& obj, const char* key, const std::string& ctx) {
  return get_num(require(obj, key, ctx), ctx + "." + key);
}

double get_num_or(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : get_num(*it, key);
}

std::int64_t get_int(const json& obj, const char* key, const std::string& ctx) {
  const json& j = require(obj, key, ctx);
  if (!j.is_number_integer())
    throw ConfigError(ctx + "." + key + ": expected an integer");
  return j.get<std::int64_t>();
}

// ---- grids, step functions, expressions -------------------------------------

TimeGrid parse_grid(const json* grid_json, double horizon, int intervals,
                    const std::string& ctx) {
  if (!grid_json) return TimeGrid::uniform(horizon, intervals);
  if (!grid_json->is_array())
    throw ConfigError(ctx + ".grid: expected an array of nodes");
  std::vector<double> nodes;
  for (const auto& v : *grid_json) nodes.push_back(get_num(v, ctx + ".grid"));
  if (static_cast<int>(nodes.size()) != intervals + 1)
    throw ConfigError(ctx + ".grid: need one more node than value blocks");
  return TimeGrid::from_nodes(std::move(nodes));
}

// vector-valued: scalar | [s0, s1, ...] (dim 1) | [[..d..], ...]
StepFunction parse_step_vector(const json& j, int dim, double horizon,
                               const std::string& ctx) {
  std::vector<std::vector<double>> blocks;
  const json* grid_json = nullptr;
  const json* values = &j;
  if (j.is_object()) {
    check_keys(j, ctx, {"values", "grid"});
    values = &require(j, "values", ctx);
    if (j.contains("grid")) grid_json = &j["grid"];
  }
  if (values->is_number()) {
    if (dim != 1) throw ConfigError(ctx + ": scalar given for dim > 1");
    blocks.push_back({values->get<double>()});
  } else if (values->is_array() && !values->empty() &&
             values->front().is_number()) {
    if (dim == 1) {
      for (const auto& v : *values) blocks.push_back({get_num(v, ctx)});
    } else {
      // one d-vector, constant in time
      std::vector<double> block;
      for (const auto& v : *values) block.push_back(get_num(v, ctx));
      if (static_cast<int>(block.size()) != dim)
        throw ConfigError(ctx + ": expected " + std::to_string(dim) + " entries");
      blocks.push_back(std::move(block));
    }
  } else if (values->is_array()) {
    for (const auto& row : *values) {
      std::vector<double> block;
      if (!row.is_array()) throw ConfigError(ctx + ": expected vector blocks");
      for (const auto& v : row) block.push_back(get_num(v, ctx));
      if (static_cast<int>(block.size()) != dim)
        throw ConfigError(ctx + ": expected " + std::to_string(dim) + " entries");
      blocks.push_back(std::move(block));
    }
  } else {
    throw ConfigError(ctx + ": cannot parse step function values");
  }
  const int n = static_cast<int>(blocks.size());
  std::vector<double> data;
  for (const auto& b : blocks) data.insert(data.end(), b.begin(), b.end());
  return StepFunction(parse_grid(grid_json, horizon, n, ctx), dim, 1,
                      std::move(data));
}

// matrix-valued: scalar (1x1) | [[..]..] one matrix | [[[..]..]..] per interval
StepFunction parse_step_matrix(const json& j, int dim, double horizon,
                               const std::string& ctx) {
  const json* grid_json = nullptr;
  const json* values = &j;
  if (j.is_object()) {
    check_keys(j, ctx, {"values", "grid"});
    values = &require(j, "values", ctx);
    if (j.contains("grid")) grid_json = &j["grid"];
  }
  auto parse_matrix = [&](const json& m) {
    std::vector<double> block;
    if (!m.is_array()) throw ConfigError(ctx + ": expected a matrix");
    for (const auto& row : m) {
      if (!row.is_array()) throw ConfigError(ctx + ": expected matrix rows");
      for (const auto& v : row) block.push_back(get_num(v, ctx));
    }
    if (static_cast<int>(block.size()) != dim * dim)
      throw ConfigError(ctx + ": expected a " + std::to_string(dim) + "x" +
                        std::to_string(dim) + " matrix");
    return block;
  };
  std::vector<std::vector<double>> blocks;
  if (values->is_number()) {
    if (dim != 1) throw ConfigError(ctx + ": scalar given for dim > 1");
    blocks.push_back({values->get<double>()});
  } else if (values->is_array() && !values->empty() &&
             values->front().is_array() && !values->front().empty() &&
             values->front().front().is_number()) {
    blocks.push_back(parse_matrix(*values));
  } else if (values->is_array()) {
    for (const auto& m : *values) blocks.push_back(parse_matrix(m));
  } else {
    throw ConfigError(ctx + ": cannot parse matrix step function");
  }
  const int n = static_cast<int>(blocks.size());
  std::vector<double> data;
  for (const auto& b : blocks) data.insert(data.end(), b.begin(), b.end());
  return StepFunction(parse_grid(grid_json, horizon, n, ctx), dim, dim,
                      std::move(data));
}

PayoffExpr parse_expr(const json& j, int dim, double horizon,
                      const std::string& ctx) {
  if (j.is_number()) return PayoffExpr::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError(ctx + ": expected an expression object");
  if (j.contains("const")) {
    check_keys(j, ctx, {"const"});
    return PayoffExpr::constant(get_num(j, "const", ctx));
  }
  if (j.contains("z")) {
    check_keys(j, ctx, {"z"});
    std::vector<double> coeffs;
    for (const auto& v : require(j, "z", ctx)) coeffs.push_back(get_num(v, ctx));
    return PayoffExpr::linear_z(std::move(coeffs));
  }
  if (j.contains("integral")) {
    check_keys(j, ctx, {"integral"});
    return PayoffExpr::stoch_integral(
        parse_step_vector(j["integral"], dim, horizon, ctx + ".integral"));
  }
  if (j.contains("indicator")) {
    check_keys(j, ctx, {"indicator"});
    const json& ind = j["indicator"];
    check_keys(ind, ctx + ".indicator", {"coord", "level", "space"});
    const int coord = static_cast<int>(get_int(ind, "coord", ctx));
    const double level = get_num_or(ind, "level", 0.0);
    const std::string space = ind.value("space", "terminal");
    if (space == "z") return PayoffExpr::indicator_z(coord, level);
    if (space == "terminal")
      return PayoffExpr::indicator_terminal(coord, level, horizon);
    throw ConfigError(ctx + ".indicator.space: expected 'z' or 'terminal'");
  }
  if (j.contains("sum")) {
    check_keys(j, ctx, {"sum"});
    PayoffExpr acc = PayoffExpr::constant(0.0);
    bool first = true;
    for (const auto& term : j["sum"]) {
      PayoffExpr e = parse_expr(term, dim, horizon, ctx + ".sum");
      acc = first ? e : acc + e;
      first = false;
    }
    return acc;
  }
  if (j.contains("scale")) {
    check_keys(j, ctx, {"scale"});
    const json& s = j["scale"];
    check_keys(s, ctx + ".scale", {"by", "of"});
    return get_num(s, "by", ctx) *
           parse_expr(require(s, "of", ctx), dim, horizon, ctx + ".scale.of");
  }
  if (j.contains("product")) {
    check_keys(j, ctx, {"product"});
    PayoffExpr acc = PayoffExpr::constant(1.0);
    bool first = true;
    for (const auto& term : j["product"]) {
      PayoffExpr e = parse_expr(term, dim, horizon, ctx + ".product");
      acc = first ? e : acc * e;
      first = false;
    }
    return acc;
  }
  throw ConfigError(ctx + ": unknown expression kind");
}

// ---- scenario ----------------------------------------------------------------

struct Scenario {
  json root;
  std::string model;
  double horizon = 1.0;
  int dim = 1;
  ExpectationEngine engine;
  std::uint64_t config_hash = 0;
};

ExpectationEngine parse_engine(const json& root, const CliOverrides& overrides) {
  ExpectationEngine engine;
  if (root.contains("engine")) {
    const json& e = root["engine"];
    check_keys(e, "engine",
               {"method", "nodes", "paths", "seed", "abs_tol", "max_quad_dim"});
    const std::string method = e.value("method", "quadrature");
    if (method == "quadrature")
      engine.method = Method::Quadrature;
    else if (method == "mc" || method == "monte-carlo")
      engine.method = Method::MonteCarlo;
    else
      throw ConfigError("engine.method: expected 'quadrature' or 'mc'");
    if (e.contains("nodes"))
      engine.quad_nodes = static_cast<int>(get_int(e, "nodes", "engine"));
    if (e.contains("paths")) engine.mc_paths = get_int(e, "paths", "engine");
    if (e.contains("seed"))
      engine.seed = static_cast<std::uint64_t>(get_int(e, "seed", "engine"));
    if (e.contains("abs_tol")) engine.abs_tol = get_num(e, "abs_tol", "engine");
    if (e.contains("max_quad_dim"))
      engine.max_quad_dim =
          static_cast<int>(get_int(e, "max_quad_dim", "engine"));
  }
  if (overrides.engine) {
    if (*overrides.engine == "quadrature")
      engine.method = Method::Quadrature;
    else if (*overrides.engine == "mc" || *overrides.engine == "monte-carlo")
      engine.method = Method::MonteCarlo;
    else
      throw ConfigError("--engine: expected 'quadrature' or 'mc'");
  }
  if (overrides.seed) engine.seed = *overrides.seed;
  if (overrides.paths) engine.mc_paths = *overrides.paths;
  if (overrides.nodes) engine.quad_nodes = *overrides.nodes;
  if (overrides.tol) engine.abs_tol = *overrides.tol;
  return engine;
}

Scenario load_scenario(const std::string& config_path,
                       const CliOverrides& overrides) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + config_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Scenario sc;
  sc.config_hash = fnv1a64(std::span<const char>(text.data(), text.size()));
  try {
    sc.root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(sc.root, "config",
             {"model", "horizon", "dim", "engine", "maker", "investor", "claim",
              "bachelier", "twod", "quote", "bounds", "schedule", "pepq",
              "region", "simulate", "asymptotics"});
  sc.model = sc.root.value("model", "generic");
  if (sc.model != "bachelier" && sc.model != "digital" && sc.model != "twod" &&
      sc.model != "generic")
    throw ConfigError("model: expected bachelier|digital|twod|generic");
  sc.horizon = get_num_or(sc.root, "horizon", 1.0);
  if (sc.horizon <= 0.0) throw ConfigError("horizon must be positive");
  sc.dim = sc.root.contains("dim")
               ? static_cast<int>(get_int(sc.root, "dim", "config"))
               : 1;
  sc.engine = parse_engine(sc.root, overrides);
  return sc;
}

BachelierSpec parse_bachelier(const Scenario& sc, const json& section,
                              const std::string& ctx) {
  check_keys(section, ctx, {"f", "g", "psi", "y"});
  StepFunction f = parse_step_vector(require(section, "f", ctx), sc.dim,
                                     sc.horizon, ctx + ".f");
  StepFunction g =
      section.contains("g")
          ? parse_step_vector(section["g"], sc.dim, sc.horizon, ctx + ".g")
          : StepFunction::constant(sc.horizon, std::vector<double>(sc.dim, 0.0));
  StepFunction psi = parse_step_matrix(require(section, "psi", ctx), sc.dim,
                                       sc.horizon, ctx + ".psi");
  std::optional<StepFunction> y;
  if (section.contains("y"))
    y = parse_step_vector(section["y"], sc.dim, sc.horizon, ctx + ".y");
  BachelierSpec spec{std::move(f), std::move(g), std::move(psi), std::move(y)};
  spec.validate();
  return spec;
}

double parse_gamma(const Scenario& sc) {
  if (!sc.root.contains("maker"))
    throw ConfigError("config: missing 'maker' section");
  const json& m = sc.root["maker"];
  return get_num(m, "gamma", "maker");
}

double parse_alpha(const Scenario& sc) {
  if (!sc.root.contains("investor"))
    throw ConfigError("config: missing 'investor' section");
  return get_num(sc.root["investor"], "alpha", "investor");
}

// maker/investor/claim assembled per model family
struct BuiltMarket {
  MakerSpec maker;
  InvestorSpec investor;
  std::optional<PayoffExpr> claim;
  std::optional<BachelierSpec> bachelier;
};

BuiltMarket build_market(const Scenario& sc) {
  BuiltMarket built;
  if (sc.model == "bachelier") {
    check_keys(require(sc.root, "maker", "config"), "maker", {"gamma"});
    check_keys(require(sc.root, "investor", "config"), "investor", {"alpha"});
    const BachelierSpec spec = parse_bachelier(
        sc, require(sc.root, "bachelier", "config"), "bachelier");
    built.maker = MakerSpec{parse_gamma(sc), spec.sigma0(), spec.assets()};
    built.investor = InvestorSpec{parse_alpha(sc), spec.sigma1()};
    if (spec.y) built.claim = spec.claim();
    built.bachelier = spec;
  } else if (sc.model == "digital") {
    check_keys(require(sc.root, "maker", "config"), "maker", {"gamma"});
    if (sc.root.contains("investor"))
      check_keys(sc.root["investor"], "investor", {"alpha"});
    const PayoffExpr digital = PayoffExpr::indicator_terminal(0, 0.0, sc.horizon);
    built.maker = MakerSpec{parse_gamma(sc), PayoffExpr::constant(0.0), {digital}};
    built.investor = InvestorSpec{
        sc.root.contains("investor") ? parse_alpha(sc) : 1.0,
        PayoffExpr::constant(0.0)};
    built.claim = digital;
  } else if (sc.model == "generic") {
    const json& m = require(sc.root, "maker", "config");
    check_keys(m, "maker", {"gamma", "endowment", "assets"});
    built.maker.gamma = get_num(m, "gamma", "maker");
    built.maker.endowment =
        m.contains("endowment")
            ? parse_expr(m["endowment"], sc.dim, sc.horizon, "maker.endowment")
            : PayoffExpr::constant(0.0);
    if (m.contains("assets"))
      for (const auto& a : m["assets"])
        built.maker.assets.push_back(
            parse_expr(a, sc.dim, sc.horizon, "maker.assets"));
    const json& inv = require(sc.root, "investor", "config");
    check_keys(inv, "investor", {"alpha", "endowment"});
    built.investor.alpha = get_num(inv, "alpha", "investor");
    built.investor.endowment =
        inv.contains("endowment")
            ? parse_expr(inv["endowment"], sc.dim, sc.horizon,
                         "investor.endowment")
            : PayoffExpr::constant(0.0);
    if (sc.root.contains("claim"))
      built.claim = parse_expr(sc.root["claim"], sc.dim, sc.horizon, "claim");
  } else {
    throw ConfigError("model '" + sc.model + "' has no maker/claim layer");
  }
  return built;
}

ClaimSetup build_claim_setup(const Scenario& sc, const BuiltMarket& built) {
  if (!built.claim)
    throw ConfigError("this command needs a claim (bachelier.y or top-level "
                      "'claim')");
  ClaimSetup setup{built.maker, built.investor, *built.claim, sc.engine};
  setup.check_integrability();
  return setup;
}

std::vector<double> parse_value_grid(const json& j, const std::string& ctx) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& v : j) grid.push_back(get_num(v, ctx));
  } else if (j.is_object()) {
    check_keys(j, ctx, {"from", "to", "count"});
    const double from = get_num(j, "from", ctx);
    const double to = get_num(j, "to", ctx);
    const int count = static_cast<int>(get_int(j, "count", ctx));
    if (count < 2) throw ConfigError(ctx + ".count: need >= 2");
    for (int i = 0; i < count; ++i)
      grid.push_back(from + (to - from) * i / (count - 1));
  } else {
    throw ConfigError(ctx + ": expected an array or {from,to,count}");
  }
  if (grid.empty()) throw ConfigError(ctx + ": empty grid");
  return grid;
}

// ---- manifest ----------------------------------------------------------------

struct RunOutput {
  std::vector<std::string> files;
  json extras;
};

void write_manifest(const Scenario& sc, const std::string& command,
                    const std::string& out_dir, const RunOutput& output,
                    double wall_ms) {
  json manifest;
  manifest["tool_version"] = kVersion;
  manifest["command"] = command;
  manifest["config_hash"] = sc.config_hash;
  manifest["seed"] = sc.engine.seed;
  manifest["engine"] = {
      {"method", sc.engine.method == Method::Quadrature ? "quadrature" : "mc"},
      {"nodes", sc.engine.quad_nodes},
      {"paths", sc.engine.mc_paths},
      {"abs_tol", sc.engine.abs_tol}};
  manifest["tolerances"] = {{"endpoint_classification", 1e-9},
                            {"solver_residual", 1e-10},
                            {"degeneracy_variance", 1e-12}};
  manifest["threads"] = max_threads();
  manifest["wall_clock_ms"] = wall_ms;
  manifest["outputs"] = output.files;
  if (!output.extras.is_null()) manifest["details"] = output.extras;
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

// ---- commands ----------------------------------------------------------------

RunOutput cmd_quote(const Scenario& sc, const std::string& out_dir) {
  const BuiltMarket built = build_market(sc);
  const json& section = require(sc.root, "quote", "config");
  check_keys(section, "quote", {"q"});
  const json& q_rows = require(section, "q", "quote");
  const int k = static_cast<int>(built.maker.assets.size());
  CsvWriter csv((fs::path(out_dir) / "quote.csv").string());
  std::vector<std::string> header;
  for (int i = 0; i < k; ++i) header.push_back("q_" + std::to_string(i + 1));
  header.push_back("quote");
  csv.header(header);
  for (const auto& row : q_rows) {
    std::vector<double> q;
    if (row.is_number())
      q.push_back(row.get<double>());
    else
      for (const auto& v : row) q.push_back(get_num(v, "quote.q"));
    if (static_cast<int>(q.size()) != k)
      throw ConfigError("quote.q: row size does not match asset count");
    const double x = static_quote(built.maker, sc.engine, q);
    std::vector<std::string> cells;
    for (double v : q) cells.push_back(format_double(v));
    cells.push_back(format_double(x));
    csv.row(cells);
  }
  return {{"quote.csv"}, {}};
}

RunOutput cmd_bounds(const Scenario& sc, const std::string& out_dir) {
  const BuiltMarket built = build_market(sc);
  const ClaimSetup setup = build_claim_setup(sc, built);
  const json& section = require(sc.root, "bounds", "config");
  check_keys(section, "bounds", {"u", "classify_p"});
  const std::vector<double> u_grid =
      parse_value_grid(require(section, "u", "bounds"), "bounds.u");
  const bool classify = section.contains("classify_p");
  const double p = classify ? get_num(section, "classify_p", "bounds") : 0.0;
  const auto rows = bounds_table(setup, u_grid);
  CsvWriter csv((fs::path(out_dir) / "bounds.csv").string());
  std::vector<std::string> header = {"u", "lower_bound", "q0_price",
                                     "upper_bound"};
  if (classify) {
    header.push_back("p");
    header.push_back("classification");
  }
  csv.header(header);
  for (const auto& row : rows) {
    std::vector<std::string> cells = {
        format_double(row.u), format_double(row.lower), format_double(row.q0),
        format_double(row.upper)};
    if (classify) {
      cells.push_back(format_double(p));
      if (row.u > 0.0) {
        cells.push_back(to_string(classify_price(setup, p, row.u)));
      } else {
        // u -> 0 limit: the interval collapses to the singleton E0[h]
        PriceClass c = PriceClass::ArbitrageFree;
        if (!strong_classify(setup, p))
          c = p > row.q0 ? PriceClass::SellArbitrage : PriceClass::BuyArbitrage;
        cells.push_back(to_string(c));
      }
    }
    csv.row(cells);
  }
  return {{"bounds.csv"}, {}};
}

RunOutput cmd_schedule(const Scenario& sc, const std::string& out_dir) {
  const BuiltMarket built = build_market(sc);
  const ClaimSetup setup = build_claim_setup(sc, built);
  const json& section = require(sc.root, "schedule", "config");
  check_keys(section, "schedule", {"p"});
  const std::vector<double> p_grid =
      parse_value_grid(require(section, "p", "schedule"), "schedule.p");
  const auto points = demand_schedule(setup, p_grid);
  CsvWriter csv((fs::path(out_dir) / "schedule.csv").string());
  const bool report_exact_arb = built.bachelier.has_value();
  std::vector<std::string> header = {"p", "u_hat", "residual"};
  if (report_exact_arb) header.push_back("exact_arbitrage_case");
  csv.header(header);
  for (const auto& point : points) {
    std::vector<std::string> cells = {format_double(point.p),
                                      format_double(point.u_hat),
                                      format_double(point.residual)};
    if (report_exact_arb)
      cells.push_back(bachelier_exact_arbitrage_case(
                          *built.bachelier, setup.maker.gamma,
                          setup.investor.alpha, point.u_hat)
                          ? "1"
                          : "0");
    csv.row(cells);
  }
  return {{"schedule.csv"}, {}};
}

struct ParsedSide {
  ClaimSetup setup;
  std::optional<BachelierSide> bachelier;
};

ParsedSide parse_pepq_side(const Scenario& sc, const json& side,
                           const std::optional<PayoffExpr>& shared_claim,
                           const std::optional<StepFunction>& shared_psi,
                           const std::optional<StepFunction>& shared_y,
                           const std::string& ctx) {
  ParsedSide parsed{ClaimSetup{MakerSpec{}, InvestorSpec{},
                               PayoffExpr::constant(0.0), sc.engine},
                    {}};
  if (sc.model == "bachelier") {
    check_keys(side, ctx, {"gamma", "alpha", "f", "g"});
    if (!shared_psi || !shared_y)
      throw ConfigError(ctx + ": bachelier pepq needs top-level psi and y");
    BachelierSpec spec{
        parse_step_vector(require(side, "f", ctx), sc.dim, sc.horizon,
                          ctx + ".f"),
        side.contains("g")
            ? parse_step_vector(side["g"], sc.dim, sc.horizon, ctx + ".g")
            : StepFunction::constant(sc.horizon,
                                     std::vector<double>(sc.dim, 0.0)),
        *shared_psi, shared_y};
    spec.validate();
    const double gamma = get_num(side, "gamma", ctx);
    const double alpha = get_num(side, "alpha", ctx);
    parsed.setup = ClaimSetup{MakerSpec{gamma, spec.sigma0(), spec.assets()},
                              InvestorSpec{alpha, spec.sigma1()},
                              *shared_claim, sc.engine};
    parsed.bachelier = BachelierSide{std::move(spec), gamma, alpha};
  } else {
    check_keys(side, ctx,
               {"gamma", "alpha", "maker_endowment", "investor_endowment",
                "assets"});
    MakerSpec maker;
    maker.gamma = get_num(side, "gamma", ctx);
    maker.endowment = side.contains("maker_endowment")
                          ? parse_expr(side["maker_endowment"], sc.dim,
                                       sc.horizon, ctx + ".maker_endowment")
                          : PayoffExpr::constant(0.0);
    if (side.contains("assets"))
      for (const auto& a : side["assets"])
        maker.assets.push_back(parse_expr(a, sc.dim, sc.horizon, ctx + ".assets"));
    InvestorSpec investor;
    investor.alpha = get_num(side, "alpha", ctx);
    investor.endowment =
        side.contains("investor_endowment")
            ? parse_expr(side["investor_endowment"], sc.dim, sc.horizon,
                         ctx + ".investor_endowment")
            : PayoffExpr::constant(0.0);
    if (!shared_claim) throw ConfigError(ctx + ": pepq needs a top-level claim");
    parsed.setup =
        ClaimSetup{std::move(maker), std::move(investor), *shared_claim,
                   sc.engine};
  }
  return parsed;
}

// classification of p* at level |u*| plus the bounded arbitrage gain
struct SideClassification {
  PriceClass cls = PriceClass::ArbitrageFree;
  double gain = 0.0;
};

SideClassification classify_equilibrium(const ClaimSetup& setup, double p_star,
                                        double u_star) {
  SideClassification out;
  const double level = std::abs(u_star);
  if (level < 1e-12) return out;
  out.cls = classify_price(setup, p_star, level);
  if (out.cls == PriceClass::SellArbitrage)
    out.gain = level * (p_star - upper_bound(setup, level));
  else if (out.cls == PriceClass::BuyArbitrage)
    out.gain = level * (lower_bound(setup, level) - p_star);
  return out;
}

RunOutput cmd_pepq(const Scenario& sc, const std::string& out_dir) {
  const json& section = require(sc.root, "pepq", "config");
  check_keys(section, "pepq", {"side_a", "side_b"});
  std::optional<PayoffExpr> shared_claim;
  std::optional<StepFunction> shared_psi, shared_y;
  if (sc.model == "bachelier") {
    const json& b = require(sc.root, "bachelier", "config");
    check_keys(b, "bachelier", {"psi", "y", "f", "g"});
    shared_psi = parse_step_matrix(require(b, "psi", "bachelier"), sc.dim,
                                   sc.horizon, "bachelier.psi");
    shared_y = parse_step_vector(require(b, "y", "bachelier"), sc.dim,
                                 sc.horizon, "bachelier.y");
    shared_claim = PayoffExpr::stoch_integral(*shared_y);
  } else if (sc.root.contains("claim")) {
    shared_claim = parse_expr(sc.root["claim"], sc.dim, sc.horizon, "claim");
  }
  const ParsedSide a =
      parse_pepq_side(sc, require(section, "side_a", "pepq"), shared_claim,
                      shared_psi, shared_y, "pepq.side_a");
  const ParsedSide b =
      parse_pepq_side(sc, require(section, "side_b", "pepq"), shared_claim,
                      shared_psi, shared_y, "pepq.side_b");
  const SegmentedMarket market{a.setup, b.setup};
  const PepqResult result = solve_pepq(market);

  const SideClassification ca =
      classify_equilibrium(market.side_a, result.p_star, result.u_star);
  const SideClassification cb =
      classify_equilibrium(market.side_b, result.p_star, result.u_star);

  CsvWriter csv((fs::path(out_dir) / "pepq.csv").string());
  const std::vector<std::string> header = {
      "u_star",     "p_star",     "residual_a", "residual_b",
      "class_a",    "class_b",    "arb_gain_a", "arb_gain_b"};
  csv.header(header);
  csv.row(std::vector<std::string>{
      format_double(result.u_star), format_double(result.p_star),
      format_double(result.residual_a), format_double(result.residual_b),
      to_string(ca.cls), to_string(cb.cls), format_double(ca.gain),
      format_double(cb.gain)});

  json extras;
  if (a.bachelier && b.bachelier) {
    const PepqResult closed = bachelier_pepq(*a.bachelier, *b.bachelier);
    extras["closed_form"] = {{"u_star", closed.u_star},
                             {"p_star", closed.p_star}};
  }
  extras["witness_variance"] = degeneracy_witness_variance(market);
  return {{"pepq.csv"}, extras};
}

RunOutput cmd_region(const Scenario& sc, const std::string& out_dir) {
  if (sc.model != "twod")
    throw ConfigError("region: requires model 'twod'");
  const json& t = require(sc.root, "twod", "config");
  check_keys(t, "twod", {"t", "b1", "b2"});
  TwoDDigitalSpec spec{sc.horizon, get_num_or(t, "t", 0.0),
                       get_num_or(t, "b1", 0.0), get_num_or(t, "b2", 0.0)};
  const json& section = require(sc.root, "region", "config");
  check_keys(section, "region", {"p1", "p2"});
  const std::vector<double> p1 =
      parse_value_grid(require(section, "p1", "region"), "region.p1");
  const std::vector<double> p2 =
      parse_value_grid(require(section, "p2", "region"), "region.p2");
  const Raster raster =
      region_raster(spec, p1.front(), p1.back(), p2.front(), p2.back(),
                    static_cast<int>(p1.size()), static_cast<int>(p2.size()));
  CsvWriter csv((fs::path(out_dir) / "region.csv").string());
  csv.header(std::vector<std::string>{"p1", "p2", "in_region"});
  for (std::size_t j = 0; j < raster.p2.size(); ++j)
    for (std::size_t i = 0; i < raster.p1.size(); ++i)
      csv.row(std::vector<std::string>{
          format_double(raster.p1[i]), format_double(raster.p2[j]),
          raster.at(static_cast<int>(j), static_cast<int>(i)) ? "1" : "0"});
  return {{"region.csv"}, {}};
}

std::unique_ptr<DemandRule> parse_demand(const json& j, const Scenario& sc,
                                         int k, const std::string& ctx) {
  check_keys(j, ctx, {"type", "value", "values", "grid"});
  const std::string type = j.value("type", "constant");
  if (type == "constant") {
    std::vector<double> q;
    const json& v = require(j, "value", ctx);
    if (v.is_number())
      q.push_back(v.get<double>());
    else
      for (const auto& x : v) q.push_back(get_num(x, ctx));
    if (static_cast<int>(q.size()) != k)
      throw ConfigError(ctx + ": demand dimension mismatch");
    return constant_demand(std::move(q));
  }
  if (type == "schedule") {
    StepFunction q = parse_step_vector(require(j, "values", ctx), k, sc.horizon,
                                       ctx + ".values");
    return schedule_demand(std::move(q));
  }
  throw ConfigError(ctx + ".type: expected 'constant' or 'schedule'");
}

RunOutput cmd_simulate(const Scenario& sc, const std::string& out_dir) {
  const BuiltMarket built = build_market(sc);
  std::unique_ptr<HProvider> provider;
  if (sc.model == "bachelier") {
    provider = std::make_unique<BachelierHProvider>(*built.bachelier,
                                                    built.maker.gamma);
  } else if (sc.model == "digital") {
    provider = std::make_unique<DigitalHProvider>(
        DigitalSpec{built.maker.gamma, sc.horizon});
  } else {
    throw ConfigError("simulate: requires model 'bachelier' or 'digital'");
  }
  const json& section = require(sc.root, "simulate", "config");
  check_keys(section, "simulate",
             {"n_steps", "paths", "demand", "identity_check", "budget_check"});
  const int n_steps = static_cast<int>(get_int(section, "n_steps", "simulate"));
  const std::int64_t paths = get_int(section, "paths", "simulate");
  const TimeGrid grid = TimeGrid::uniform(sc.horizon, n_steps);
  const auto rule = parse_demand(require(section, "demand", "simulate"), sc,
                                 provider->demand_dim(), "simulate.demand");
  SimConfig config{paths, sc.engine.seed, ExecMode::Parallel};
  const GainsSimResult sim =
      simulate_gains(built.maker.gamma, *provider, grid, *rule, config);

  CsvWriter csv((fs::path(out_dir) / "simulate.csv").string());
  csv.header(std::vector<std::string>{"t", "v_mean", "v_std"});
  for (int s = 0; s <= grid.n_steps(); ++s) {
    std::vector<double> column(sim.paths);
    for (std::int64_t p = 0; p < sim.paths; ++p) column[p] = sim.v_at(p, s);
    csv.row(std::vector<std::string>{
        format_double(grid.node(s)), format_double(mean(column)),
        format_double(std::sqrt(sample_variance(column)))});
  }

  std::vector<std::string> header = {"paths", "n_steps", "flagged"};
  std::vector<std::string> cells = {std::to_string(sim.paths),
                                    std::to_string(grid.n_steps()),
                                    std::to_string(sim.flagged)};
  if (section.value("identity_check", false)) {
    const IdentityCheckResult identity = wealth_identity_check(
        built.maker.gamma, *provider, grid, *rule, config);
    header.push_back("identity_max_gap");
    cells.push_back(format_double(identity.max_discrepancy));
  }
  if (section.value("budget_check", false)) {
    const BudgetCheckResult budget = budget_constraint_check(
        built.maker, *provider, grid, *rule, config);
    header.insert(header.end(),
                  {"budget_estimate", "budget_std_error", "budget_dt_bias",
                   "budget_ok"});
    cells.push_back(format_double(budget.estimate));
    cells.push_back(format_double(budget.std_error));
    cells.push_back(format_double(budget.dt_bias));
    cells.push_back(budget.estimate <=
                            1.0 + 5.0 * (budget.std_error + budget.dt_bias)
                        ? "1"
                        : "0");
  }
  CsvWriter summary((fs::path(out_dir) / "simulate_summary.csv").string());
  summary.header(header);
  summary.row(cells);
  return {{"simulate.csv", "simulate_summary.csv"}, {}};
}

RunOutput cmd_asymptotics(const Scenario& sc, const std::string& out_dir) {
  const json& section = require(sc.root, "asymptotics", "config");
  check_keys(section, "asymptotics",
             {"mode", "n_from", "n_to", "side_a", "side_b", "b_claim_rate"});
  const std::string mode = section.value("mode", "gamma_halving");
  const int n_from = static_cast<int>(get_int(section, "n_from", "asymptotics"));
  const int n_to = static_cast<int>(get_int(section, "n_to", "asymptotics"));
  if (n_from > n_to) throw ConfigError("asymptotics: n_from > n_to");
  std::optional<PayoffExpr> shared_claim;
  if (sc.root.contains("claim"))
    shared_claim = parse_expr(sc.root["claim"], sc.dim, sc.horizon, "claim");
  if (!shared_claim)
    throw ConfigError("asymptotics: needs a top-level claim expression");
  if (sc.model != "generic")
    throw ConfigError("asymptotics: requires model 'generic'");

  const ParsedSide base_a =
      parse_pepq_side(sc, require(section, "side_a", "asymptotics"),
                      shared_claim, {}, {}, "asymptotics.side_a");
  const ParsedSide base_b =
      parse_pepq_side(sc, require(section, "side_b", "asymptotics"),
                      shared_claim, {}, {}, "asymptotics.side_b");

  std::vector<double> params;
  std::vector<int> ns;
  for (int n = n_from; n <= n_to; ++n) {
    ns.push_back(n);
    params.push_back(mode == "gamma_halving" ? std::pow(2.0, -n)
                                             : static_cast<double>(n));
  }

  std::function<SegmentedMarket(double)> build;
  std::function<double(double, const PepqResult&)> scale;
  if (mode == "gamma_halving") {
    const double rate = get_num_or(section, "b_claim_rate", 0.0);
    build = [&, rate](double gamma_n) {
      SegmentedMarket market{base_a.setup, base_b.setup};
      market.side_a.maker.gamma = gamma_n;
      market.side_b.maker.gamma = gamma_n;
      if (rate != 0.0)
        market.side_b.investor.endowment =
            base_b.setup.investor.endowment + (rate / gamma_n) * (*shared_claim);
      return market;
    };
    scale = [](double gamma_n, const PepqResult& r) {
      return r.u_star * (gamma_n + gamma_n);
    };
  } else if (mode == "maker_count") {
    build = [&](double n) {
      SegmentedMarket market{base_a.setup, base_b.setup};
      market.side_a.maker.gamma = base_a.setup.maker.gamma / n;
      market.side_b.maker.gamma = base_b.setup.maker.gamma / n;
      market.side_a.maker.endowment = n * base_a.setup.maker.endowment;
      market.side_b.maker.endowment = n * base_b.setup.maker.endowment;
      return market;
    };
    scale = [](double n, const PepqResult& r) { return r.u_star / n; };
  } else {
    throw ConfigError("asymptotics.mode: expected gamma_halving|maker_count");
  }

  const AsymptoticSchedule schedule = pepq_asymptotics(params, build, scale);
  CsvWriter csv((fs::path(out_dir) / "asymptotics.csv").string());
  csv.header(std::vector<std::string>{"n", "param", "u_star", "p_star",
                                      "scaled_quantity", "residual_a",
                                      "residual_b"});
  for (std::size_t i = 0; i < schedule.points.size(); ++i) {
    const auto& point = schedule.points[i];
    csv.row(std::vector<std::string>{
        std::to_string(ns[i]), format_double(point.param),
        format_double(point.pepq.u_star), format_double(point.pepq.p_star),
        format_double(point.scaled), format_double(point.pepq.residual_a),
        format_double(point.pepq.residual_b)});
  }
  json extras;
  if (schedule.detected_limit) extras["detected_limit"] = *schedule.detected_limit;
  return {{"asymptotics.csv"}, extras};
}

}  // namespace

void run_scenario(const std::string& command, const std::string& config_path,
                  const std::string& out_dir, const CliOverrides& overrides) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario sc = load_scenario(config_path, overrides);
  fs::create_directories(out_dir);
  RunOutput output;
  if (command == "quote")
    output = cmd_quote(sc, out_dir);
  else if (command == "bounds")
    output = cmd_bounds(sc, out_dir);
  else if (command == "schedule")
    output = cmd_schedule(sc, out_dir);
  else if (command == "pepq")
    output = cmd_pepq(sc, out_dir);
  else if (command == "region")
    output = cmd_region(sc, out_dir);
  else if (command == "simulate")
    output = cmd_simulate(sc, out_dir);
  else if (command == "asymptotics")
    output = cmd_asymptotics(sc, out_dir);
  else
    throw ConfigError("unknown command '" + command + "'");
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                start)
          .count();
  write_manifest(sc, command, out_dir, output, wall_ms);
}

}  // namespace impact
