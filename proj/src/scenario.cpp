#include "prstl/scenario.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"

namespace prstl {

namespace {

using jsonu::Json;
using jsonu::fail;
using jsonu::field;
using jsonu::opt_field;
using jsonu::reject_unknown;
using jsonu::get_int;
using jsonu::get_num;
using jsonu::get_str;
using jsonu::get_vector;
using jsonu::get_matrix;

// {H, c} encodes H x ≤ c.
Polytope get_polytope(const Json& j, const std::string& ptr, int dim) {
  reject_unknown(j, ptr, {"H", "c"});
  const Eigen::MatrixXd H = get_matrix(field(j, ptr, "H"), ptr + "/H");
  const Eigen::VectorXd c = get_vector(field(j, ptr, "c"), ptr + "/c");
  if (H.cols() != dim)
    fail(ptr + "/H", "expected " + std::to_string(dim) + " columns");
  if (c.size() != H.rows()) fail(ptr + "/c", "expected one entry per row of H");
  Polytope p;
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    p.halfspaces.push_back({H.row(i).transpose(), -c[i]});
  return p;
}

void check_psd(const Eigen::MatrixXd& m, const std::string& ptr) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    fail(ptr, "not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-9)
    fail(ptr, "not positive semidefinite");
}

Json dump_polytope(const Polytope& p) {
  Json H = Json::array();
  Json c = Json::array();
  for (const Halfspace& hs : p.halfspaces) {
    H.push_back(jsonu::dump_vector(hs.h));
    c.push_back(-hs.c);
  }
  return Json{{"H", std::move(H)}, {"c", std::move(c)}};
}

} // namespace

Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j, "",
                 {"n", "m", "p", "modes", "input_polytope", "workspace",
                  "initial_belief", "formula", "params", "lqr", "constants"});

  Scenario s;
  s.sys.n = get_int(field(j, "", "n"), "/n");
  s.sys.m = get_int(field(j, "", "m"), "/m");
  s.sys.p = get_int(field(j, "", "p"), "/p");
  if (s.sys.n < 1) fail("/n", "must be >= 1");
  if (s.sys.m < 1) fail("/m", "must be >= 1");
  if (s.sys.p < 1) fail("/p", "must be >= 1");

  if (const Json* c = opt_field(j, "constants")) {
    if (!c->is_object()) fail("/constants", "expected an object");
    for (const auto& item : c->items())
      s.constants[item.key()] =
          get_num(item.value(), "/constants/" + item.key());
  }

  const Json& modes = field(j, "", "modes");
  if (!modes.is_array() || modes.empty())
    fail("/modes", "expected a nonempty array");
  std::set<int> mode_ids;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::string ptr = "/modes/" + std::to_string(i);
    const Json& mj = modes[i];
    reject_unknown(mj, ptr, {"id", "A", "B", "W", "C", "noise"});
    Mode md;
    md.id = get_int(field(mj, ptr, "id"), ptr + "/id");
    if (!mode_ids.insert(md.id).second) fail(ptr + "/id", "duplicate mode id");
    md.A = get_matrix(field(mj, ptr, "A"), ptr + "/A", s.sys.n, s.sys.n);
    md.B = get_matrix(field(mj, ptr, "B"), ptr + "/B", s.sys.n, s.sys.m);
    md.W = get_matrix(field(mj, ptr, "W"), ptr + "/W");
    if (md.W.rows() != s.sys.n) fail(ptr + "/W", "expected n rows");
    md.C = get_matrix(field(mj, ptr, "C"), ptr + "/C", s.sys.p, s.sys.n);
    const Json& noise = field(mj, ptr, "noise");
    if (!noise.is_array() || static_cast<int>(noise.size()) != s.sys.p)
      fail(ptr + "/noise", "expected one expression per output row");
    for (std::size_t r = 0; r < noise.size(); ++r) {
      const std::string nptr = ptr + "/noise/" + std::to_string(r);
      try {
        md.noise.push_back(
            NoiseExpr::parse(get_str(noise[r], nptr), s.sys.n, s.constants));
      } catch (const std::invalid_argument& e) {
        fail(nptr, e.what());
      }
    }
    s.sys.modes.push_back(std::move(md));
  }

  s.sys.input_polytope =
      get_polytope(field(j, "", "input_polytope"), "/input_polytope", s.sys.m);
  s.sys.workspace_bounds =
      get_polytope(field(j, "", "workspace"), "/workspace", s.sys.n);

  {
    const Json& ib = field(j, "", "initial_belief");
    reject_unknown(ib, "/initial_belief", {"mean", "cov"});
    const Eigen::VectorXd mean = get_vector(
        field(ib, "/initial_belief", "mean"), "/initial_belief/mean");
    if (mean.size() != s.sys.n)
      fail("/initial_belief/mean", "expected n entries");
    const Eigen::MatrixXd cov =
        get_matrix(field(ib, "/initial_belief", "cov"), "/initial_belief/cov",
                   s.sys.n, s.sys.n);
    try {
      s.init = GaussianBelief(mean, cov);
    } catch (const std::exception& e) {
      fail("/initial_belief/cov", e.what());
    }
  }

  {
    const Json& pj = field(j, "", "params");
    reject_unknown(pj, "/params",
                   {"t_out_s", "iters", "d_near", "d_drain", "bias", "h_lb",
                    "h_ub", "delta", "eps_loop", "noise_at"});
    FeasibilityParams& p = s.params;
    p.t_out_s = get_num(field(pj, "/params", "t_out_s"), "/params/t_out_s");
    p.iters = get_int(field(pj, "/params", "iters"), "/params/iters");
    p.d_near = get_num(field(pj, "/params", "d_near"), "/params/d_near");
    p.d_drain = get_num(field(pj, "/params", "d_drain"), "/params/d_drain");
    p.bias = get_num(field(pj, "/params", "bias"), "/params/bias");
    p.h_lb = get_int(field(pj, "/params", "h_lb"), "/params/h_lb");
    p.h_ub = get_int(field(pj, "/params", "h_ub"), "/params/h_ub");
    if (const Json* d = opt_field(pj, "delta"))
      p.delta = get_num(*d, "/params/delta");
    if (const Json* e = opt_field(pj, "eps_loop"))
      p.eps_loop = get_num(*e, "/params/eps_loop");
    if (p.t_out_s <= 0) fail("/params/t_out_s", "must be > 0");
    if (p.iters < 1) fail("/params/iters", "must be >= 1");
    if (p.d_near <= 0) fail("/params/d_near", "must be > 0");
    if (p.d_drain < 0) fail("/params/d_drain", "must be >= 0");
    if (p.bias < 0 || p.bias > 1) fail("/params/bias", "must be in [0, 1]");
    if (p.h_lb < 1) fail("/params/h_lb", "must be >= 1");
    if (p.h_ub < p.h_lb) fail("/params/h_ub", "must be >= h_lb");
    if (p.delta <= 0) fail("/params/delta", "must be > 0");
    if (p.eps_loop <= 0) fail("/params/eps_loop", "must be > 0");
    if (const Json* na = opt_field(pj, "noise_at")) {
      const std::string v = get_str(*na, "/params/noise_at");
      if (v == "current")
        s.sys.noise_at = NoiseAt::Current;
      else if (v == "predicted")
        s.sys.noise_at = NoiseAt::Predicted;
      else
        fail("/params/noise_at", "expected \"current\" or \"predicted\"");
    }
  }

  {
    const Json& lj = field(j, "", "lqr");
    reject_unknown(lj, "/lqr", {"Q", "Q_by_mode", "R", "horizon"});
    s.lqr.Q = get_matrix(field(lj, "/lqr", "Q"), "/lqr/Q", s.sys.n, s.sys.n);
    check_psd(s.lqr.Q, "/lqr/Q");
    s.lqr.R = get_matrix(field(lj, "/lqr", "R"), "/lqr/R", s.sys.m, s.sys.m);
    {
      Eigen::LLT<Eigen::MatrixXd> llt(s.lqr.R);
      if (llt.info() != Eigen::Success) fail("/lqr/R", "not positive definite");
    }
    s.lqr.horizon = get_int(field(lj, "/lqr", "horizon"), "/lqr/horizon");
    if (s.lqr.horizon < 1) fail("/lqr/horizon", "must be >= 1");
    if (const Json* qb = opt_field(lj, "Q_by_mode")) {
      if (!qb->is_object()) fail("/lqr/Q_by_mode", "expected an object");
      for (const auto& item : qb->items()) {
        const std::string qptr = "/lqr/Q_by_mode/" + item.key();
        int id = 0;
        try {
          std::size_t used = 0;
          id = std::stoi(item.key(), &used);
          if (used != item.key().size()) throw std::invalid_argument("trail");
        } catch (const std::exception&) {
          fail(qptr, "key must be a mode id");
        }
        if (!mode_ids.count(id)) fail(qptr, "undeclared mode id");
        Eigen::MatrixXd q = get_matrix(item.value(), qptr, s.sys.n, s.sys.n);
        check_psd(q, qptr);
        s.lqr.Q_by_mode[id] = std::move(q);
      }
    }
  }

  s.formula_text = get_str(field(j, "", "formula"), "/formula");
  try {
    s.formula = parse_formula(s.formula_text, s.sys.n, mode_ids);
  } catch (const std::invalid_argument& e) {
    fail("/formula", e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const Scenario& s) {
  Json j;
  j["n"] = s.sys.n;
  j["m"] = s.sys.m;
  j["p"] = s.sys.p;
  Json modes = Json::array();
  for (const Mode& md : s.sys.modes) {
    Json mj;
    mj["id"] = md.id;
    mj["A"] = jsonu::dump_matrix(md.A);
    mj["B"] = jsonu::dump_matrix(md.B);
    mj["W"] = jsonu::dump_matrix(md.W);
    mj["C"] = jsonu::dump_matrix(md.C);
    Json noise = Json::array();
    for (const NoiseExpr& e : md.noise) noise.push_back(e.text());
    mj["noise"] = std::move(noise);
    modes.push_back(std::move(mj));
  }
  j["modes"] = std::move(modes);
  j["input_polytope"] = dump_polytope(s.sys.input_polytope);
  j["workspace"] = dump_polytope(s.sys.workspace_bounds);
  j["initial_belief"] = Json{{"mean", jsonu::dump_vector(s.init.mean)},
                             {"cov", jsonu::dump_matrix(s.init.cov)}};
  j["formula"] = s.formula_text;
  j["params"] = Json{{"t_out_s", s.params.t_out_s},
                     {"iters", s.params.iters},
                     {"d_near", s.params.d_near},
                     {"d_drain", s.params.d_drain},
                     {"bias", s.params.bias},
                     {"h_lb", s.params.h_lb},
                     {"h_ub", s.params.h_ub},
                     {"delta", s.params.delta},
                     {"eps_loop", s.params.eps_loop},
                     {"noise_at", s.sys.noise_at == NoiseAt::Current
                                      ? "current"
                                      : "predicted"}};
  Json lj;
  lj["Q"] = jsonu::dump_matrix(s.lqr.Q);
  if (!s.lqr.Q_by_mode.empty()) {
    Json qb;
    for (const auto& [id, q] : s.lqr.Q_by_mode)
      qb[std::to_string(id)] = jsonu::dump_matrix(q);
    lj["Q_by_mode"] = std::move(qb);
  }
  lj["R"] = jsonu::dump_matrix(s.lqr.R);
  lj["horizon"] = s.lqr.horizon;
  j["lqr"] = std::move(lj);
  if (!s.constants.empty()) {
    Json cj;
    for (const auto& [name, value] : s.constants) cj[name] = value;
    j["constants"] = std::move(cj);
  }
  return j.dump(2) + "\n";
}

} // namespace prstl
