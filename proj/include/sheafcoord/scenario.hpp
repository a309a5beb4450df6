#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheafcoord/admm.hpp"
#include "sheafcoord/dynamics.hpp"
#include "sheafcoord/homprog.hpp"

// JSON scenario files.
//
//   {
//     "name": "...", "description": "...",
//     "graph":   {"vertices": N, "edges": [[tail, head], ...]},
//     "sheaf":   {"vertex_dims": [...], "edge_dims": [...],
//                 "restrictions": [{"edge": e, "side": "tail"|"head",
//                                   "rows": r, "cols": c, "data": [row-major]}, ...]}
//                | {"kind": "constant", "dim": d} | {"kind": "sign"},
//     "mode":    "hard" | "soft",
//     "objectives": [{"type": "zero"} | {"type": "quadratic", "reference": [...], "weight": w}
//                    | {"type": "fixed", "value": [...]} | {"type": "box", "lower": [...], "upper": [...]}],
//     "potentials": [{"type": "quadratic", "target": [...], "stiffness": k} | {"type": "zero_indicator"}
//                    | {"type": "huber", "target": [...], "stiffness": k, "threshold": t}],
//     "initial_state": [[...], ...],
//     "solver": {rho, max_iters, primal_tol, dual_tol, inner_diffusion_steps, inner_step, seed},
//     "flow":   {step_size, max_steps, converge_tol, record_every}
//   }
//
// Box bounds use null for an infinite bound.

namespace sheafcoord {

using json = nlohmann::json;

/// Scenario parse or validation failure. `where` is a line:column or a JSON pointer.
struct ScenarioError : std::runtime_error {
  ScenarioError(std::string where_, const std::string& what)
      : std::runtime_error(where_ + ": " + what), where(std::move(where_)) {}
  std::string where;
};

struct Scenario {
  std::string name;
  std::string description;
  HomologicalProgram program;
  std::optional<Cochain0> initial_state;
  AdmmConfig solver;
  FlowConfig flow;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace scenario_detail {

class Cursor {
 public:
  Cursor(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ScenarioError(path_.empty() ? "/" : path_, msg); }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Cursor at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) Cursor(j_, path_ + "/" + key).fail("missing required field");
    return Cursor(j_.at(key), path_ + "/" + key);
  }

  Cursor at(std::size_t i) const { return Cursor(j_.at(i), path_ + "/" + std::to_string(i)); }

  std::size_t size_of_array() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  std::size_t count() const {
    if (!j_.is_number_integer() && !j_.is_number_unsigned()) fail("expected a non-negative integer");
    const auto v = j_.get<long long>();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  Vector vector(std::optional<std::size_t> expected_len = std::nullopt) const {
    const std::size_t n = size_of_array();
    if (expected_len && n != *expected_len)
      fail("expected " + std::to_string(*expected_len) + " entries, got " + std::to_string(n));
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) v(static_cast<Eigen::Index>(k)) = at(k).number();
    return v;
  }

  // Array where null stands for `null_value` (used for infinite box bounds).
  Vector bound_vector(std::size_t expected_len, double null_value) const {
    const std::size_t n = size_of_array();
    if (n != expected_len) fail("expected " + std::to_string(expected_len) + " entries, got " + std::to_string(n));
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k)
      v(static_cast<Eigen::Index>(k)) = at(k).value().is_null() ? null_value : at(k).number();
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

inline CellularSheaf parse_sheaf(const Cursor& c, Graph graph) {
  if (c.has("kind")) {
    const std::string kind = c.at("kind").string();
    if (kind == "constant") {
      const std::size_t dim = c.has("dim") ? c.at("dim").count() : 1;
      if (dim == 0) c.at("dim").fail("stalk dimension must be >= 1");
      return CellularSheaf::constant(std::move(graph), dim);
    }
    if (kind == "sign") return CellularSheaf::sign(std::move(graph));
    c.at("kind").fail("unknown sheaf kind '" + kind + "' (expected constant or sign)");
  }
  const Cursor vd = c.at("vertex_dims");
  const Cursor ed = c.at("edge_dims");
  if (vd.size_of_array() != graph.vertex_count()) vd.fail("length must equal the vertex count");
  if (ed.size_of_array() != graph.edge_count()) ed.fail("length must equal the edge count");
  std::vector<std::size_t> vdims, edims;
  for (std::size_t i = 0; i < graph.vertex_count(); ++i) {
    vdims.push_back(vd.at(i).count());
    if (vdims.back() == 0) vd.at(i).fail("stalk dimension must be >= 1");
  }
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    edims.push_back(ed.at(i).count());
    if (edims.back() == 0) ed.at(i).fail("stalk dimension must be >= 1");
  }
  std::vector<std::array<std::optional<LinearMap>, 2>> maps(graph.edge_count());
  const Cursor rs = c.at("restrictions");
  for (std::size_t k = 0; k < rs.size_of_array(); ++k) {
    const Cursor r = rs.at(k);
    const std::size_t e = r.at("edge").count();
    if (e >= graph.edge_count()) r.at("edge").fail("edge id out of range");
    const std::string side = r.at("side").string();
    if (side != "tail" && side != "head") r.at("side").fail("side must be 'tail' or 'head'");
    const std::size_t rows = r.at("rows").count(), cols = r.at("cols").count();
    if (rows == 0 || cols == 0) r.fail("rows and cols must be positive");
    const Vector data = r.at("data").vector(rows * cols);
    auto& slot = maps[e][side == "tail" ? 0 : 1];
    if (slot) r.fail("duplicate restriction for edge " + std::to_string(e) + " " + side);
    slot = LinearMap(rows, cols, std::span<const double>(data.data(), static_cast<std::size_t>(data.size())));
  }
  std::vector<std::array<LinearMap, 2>> restrictions;
  for (std::size_t e = 0; e < maps.size(); ++e) {
    for (int s = 0; s < 2; ++s)
      if (!maps[e][s]) rs.fail("missing restriction for edge " + std::to_string(e) + (s == 0 ? " tail" : " head"));
    restrictions.push_back({*maps[e][0], *maps[e][1]});
  }
  CellularSheaf sheaf(std::move(graph), std::move(vdims), std::move(edims), std::move(restrictions));
  const auto report = validate_sheaf(sheaf);
  if (!report.ok()) rs.fail("restriction shape mismatch: " + report.violations.front().describe());
  return sheaf;
}

inline NodeObjective parse_objective(const Cursor& c, std::size_t dim) {
  const std::string type = c.at("type").string();
  if (type == "zero") return objective::Zero{};
  if (type == "quadratic") {
    const double w = c.has("weight") ? c.at("weight").number() : 1.0;
    if (w < 0) c.at("weight").fail("weight must be >= 0");
    return objective::Quadratic{c.at("reference").vector(dim), w};
  }
  if (type == "fixed") return objective::FixedValue{c.at("value").vector(dim)};
  if (type == "box") {
    objective::Box b{c.at("lower").bound_vector(dim, -kInf), c.at("upper").bound_vector(dim, kInf)};
    if ((b.lower.array() > b.upper.array()).any()) c.fail("box lower bound exceeds upper bound");
    return b;
  }
  c.at("type").fail("unknown objective type '" + type + "'");
}

inline EdgePotential parse_potential(const Cursor& c, std::size_t dim) {
  const std::string type = c.at("type").string();
  auto positive = [&](const char* key, double dflt) {
    const double v = c.has(key) ? c.at(key).number() : dflt;
    if (!(v > 0)) c.at(key).fail("must be > 0");
    return v;
  };
  if (type == "zero_indicator") return potential::ZeroIndicator{};
  if (type == "quadratic") return potential::Quadratic{c.at("target").vector(dim), positive("stiffness", 1.0)};
  if (type == "huber")
    return potential::Huber{c.at("target").vector(dim), positive("stiffness", 1.0), positive("threshold", 1.0)};
  c.at("type").fail("unknown potential type '" + type + "'");
}

inline AdmmConfig parse_solver(const Cursor& c) {
  AdmmConfig cfg;
  auto pos = [&](const char* key, double& slot) {
    if (!c.has(key)) return;
    slot = c.at(key).number();
    if (!(slot > 0)) c.at(key).fail("must be > 0");
  };
  pos("rho", cfg.rho);
  pos("primal_tol", cfg.primal_tol);
  pos("dual_tol", cfg.dual_tol);
  pos("inner_step", cfg.inner_step);
  if (c.has("max_iters")) {
    cfg.max_iters = c.at("max_iters").count();
    if (cfg.max_iters == 0) c.at("max_iters").fail("must be >= 1");
  }
  if (c.has("inner_diffusion_steps")) cfg.inner_diffusion_steps = c.at("inner_diffusion_steps").count();
  if (c.has("seed")) cfg.seed = c.at("seed").count();
  return cfg;
}

inline FlowConfig parse_flow(const Cursor& c) {
  FlowConfig cfg;
  if (c.has("step_size")) {
    cfg.step_size = c.at("step_size").number();
    if (cfg.step_size < 0) c.at("step_size").fail("must be >= 0");
  }
  if (c.has("max_steps")) {
    cfg.max_steps = c.at("max_steps").count();
    if (cfg.max_steps == 0) c.at("max_steps").fail("must be >= 1");
  }
  if (c.has("converge_tol")) {
    cfg.converge_tol = c.at("converge_tol").number();
    if (!(cfg.converge_tol > 0)) c.at("converge_tol").fail("must be > 0");
  }
  if (c.has("record_every")) {
    cfg.record_every = c.at("record_every").count();
    if (cfg.record_every == 0) c.at("record_every").fail("must be >= 1");
  }
  return cfg;
}

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace scenario_detail

inline Scenario scenario_from_json(const json& root) {
  using scenario_detail::Cursor;
  const Cursor c(root, "");
  if (!root.is_object()) c.fail("scenario must be a JSON object");

  const Cursor gc = c.at("graph");
  const std::size_t n = gc.at("vertices").count();
  if (n == 0) gc.at("vertices").fail("must be >= 1");
  std::vector<std::pair<VertexId, VertexId>> pairs;
  const Cursor ec = gc.at("edges");
  for (std::size_t k = 0; k < ec.size_of_array(); ++k) {
    const Cursor p = ec.at(k);
    if (p.size_of_array() != 2) p.fail("edge must be a [tail, head] pair");
    pairs.emplace_back(p.at(std::size_t{0}).count(), p.at(std::size_t{1}).count());
  }
  Graph graph = [&] {
    try {
      return Graph(n, pairs);
    } catch (const std::invalid_argument& e) {
      ec.fail(e.what());
    }
  }();

  CellularSheaf sheaf = scenario_detail::parse_sheaf(c.at("sheaf"), std::move(graph));

  std::vector<NodeObjective> objectives(sheaf.vertex_count(), objective::Zero{});
  if (c.has("objectives")) {
    const Cursor oc = c.at("objectives");
    if (oc.size_of_array() != sheaf.vertex_count()) oc.fail("need one objective per vertex");
    for (VertexId v = 0; v < sheaf.vertex_count(); ++v)
      objectives[v] = scenario_detail::parse_objective(oc.at(v), sheaf.vertex_dim(v));
  }

  std::optional<ProgramMode> mode;
  if (c.has("mode")) {
    const std::string m = c.at("mode").string();
    if (m == "hard") mode = ProgramMode::HardConstraint;
    else if (m == "soft") mode = ProgramMode::Soft;
    else c.at("mode").fail("mode must be 'hard' or 'soft'");
  }

  std::vector<EdgePotential> potentials(sheaf.edge_count(), potential::ZeroIndicator{});
  if (c.has("potentials")) {
    const Cursor pc = c.at("potentials");
    if (pc.size_of_array() != sheaf.edge_count()) pc.fail("need one potential per edge");
    for (EdgeId e = 0; e < sheaf.edge_count(); ++e)
      potentials[e] = scenario_detail::parse_potential(pc.at(e), sheaf.edge_dim(e));
  } else if (mode == ProgramMode::Soft && sheaf.edge_count() > 0) {
    c.at("potentials").fail("soft mode requires potentials");
  }
  bool all_indicator = true;
  for (const auto& p : potentials) all_indicator = all_indicator && !is_smooth(p);
  if (!mode) mode = all_indicator ? ProgramMode::HardConstraint : ProgramMode::Soft;
  if (*mode == ProgramMode::HardConstraint && !all_indicator)
    c.at("mode").fail("hard mode requires every potential to be zero_indicator");

  std::optional<Cochain0> x0;
  if (c.has("initial_state")) {
    const Cursor ic = c.at("initial_state");
    if (ic.size_of_array() != sheaf.vertex_count()) ic.fail("need one vector per vertex");
    Cochain0 x = sheaf.zero_cochain0();
    for (VertexId v = 0; v < sheaf.vertex_count(); ++v) x.block(v) = ic.at(v).vector(sheaf.vertex_dim(v));
    x0 = std::move(x);
  }

  Scenario s{
      root.contains("name") ? c.at("name").string() : std::string{},
      root.contains("description") ? c.at("description").string() : std::string{},
      HomologicalProgram(std::move(sheaf), std::move(objectives), std::move(potentials), *mode),
      std::move(x0),
      c.has("solver") ? scenario_detail::parse_solver(c.at("solver")) : AdmmConfig{},
      c.has("flow") ? scenario_detail::parse_flow(c.at("flow")) : FlowConfig{},
  };
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(scenario_detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  return scenario_from_json(root);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

namespace scenario_detail {

inline json vec_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline json bound_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

}  // namespace scenario_detail

/// Canonical form: explicit sheaf, objectives, potentials, solver and flow blocks.
inline json scenario_to_json(const Scenario& s) {
  using namespace scenario_detail;
  const auto& prog = s.program;
  const auto& sheaf = prog.sheaf();
  json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  json edges = json::array();
  for (const auto& e : sheaf.graph().edges()) edges.push_back({e.tail, e.head});
  j["graph"] = {{"vertices", sheaf.vertex_count()}, {"edges", edges}};
  json rs = json::array();
  for (const auto& e : sheaf.graph().edges()) {
    for (Side side : {Side::Tail, Side::Head}) {
      const auto& m = sheaf.restriction(e.id, side);
      rs.push_back({{"edge", e.id}, {"side", to_string(side)}, {"rows", m.rows()}, {"cols", m.cols()},
                    {"data", m.row_major()}});
    }
  }
  j["sheaf"] = {{"vertex_dims", sheaf.vertex_dims()}, {"edge_dims", sheaf.edge_dims()}, {"restrictions", rs}};
  j["mode"] = to_string(prog.mode());
  json objs = json::array();
  for (const auto& f : prog.objectives()) {
    objs.push_back(std::visit(
        overloaded{
            [](const objective::Zero&) { return json{{"type", "zero"}}; },
            [](const objective::Quadratic& q) {
              return json{{"type", "quadratic"}, {"reference", vec_json(q.reference)}, {"weight", q.weight}};
            },
            [](const objective::FixedValue& c) { return json{{"type", "fixed"}, {"value", vec_json(c.value)}}; },
            [](const objective::Box& b) {
              return json{{"type", "box"}, {"lower", bound_json(b.lower)}, {"upper", bound_json(b.upper)}};
            },
        },
        f));
  }
  j["objectives"] = objs;
  json pots = json::array();
  for (const auto& u : prog.potentials()) {
    pots.push_back(std::visit(
        overloaded{
            [](const potential::Quadratic& q) {
              return json{{"type", "quadratic"}, {"target", vec_json(q.target)}, {"stiffness", q.stiffness}};
            },
            [](const potential::ZeroIndicator&) { return json{{"type", "zero_indicator"}}; },
            [](const potential::Huber& h) {
              return json{{"type", "huber"},
                          {"target", vec_json(h.target)},
                          {"stiffness", h.stiffness},
                          {"threshold", h.threshold}};
            },
        },
        u));
  }
  j["potentials"] = pots;
  if (s.initial_state) {
    json x = json::array();
    for (VertexId v = 0; v < sheaf.vertex_count(); ++v) x.push_back(vec_json(s.initial_state->block(v)));
    j["initial_state"] = x;
  }
  const auto& a = s.solver;
  j["solver"] = {{"rho", a.rho},
                 {"max_iters", a.max_iters},
                 {"primal_tol", a.primal_tol},
                 {"dual_tol", a.dual_tol},
                 {"inner_diffusion_steps", a.inner_diffusion_steps},
                 {"inner_step", a.inner_step},
                 {"seed", a.seed}};
  const auto& f = s.flow;
  j["flow"] = {{"step_size", f.step_size},
               {"max_steps", f.max_steps},
               {"converge_tol", f.converge_tol},
               {"record_every", f.record_every}};
  return j;
}

}  // namespace sheafcoord
