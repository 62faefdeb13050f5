#include "parea/io.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace parea {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string encode_rle(const std::vector<bool>& bits) {
  std::string out;
  std::size_t k = 0;
  while (k < bits.size()) {
    std::size_t run = 1;
    while (k + run < bits.size() && bits[k + run] == bits[k]) ++run;
    out += std::to_string(run);
    out += bits[k] ? '#' : '.';
    k += run;
  }
  return out;
}

std::vector<bool> decode_rle(const std::string& rle, std::size_t expected_length) {
  std::vector<bool> out;
  std::size_t pos = 0;
  while (pos < rle.size()) {
    std::size_t start = pos;
    while (pos < rle.size() && std::isdigit(static_cast<unsigned char>(rle[pos]))) ++pos;
    if (pos == start || pos == rle.size())
      throw FormatError("mask RLE: expected <count><#|.> at offset " + std::to_string(start));
    const char sym = rle[pos];
    if (sym != '#' && sym != '.') throw FormatError(std::string("mask RLE: unknown symbol '") + sym + "'");
    std::size_t run = 0;
    std::from_chars(rle.data() + start, rle.data() + pos, run);
    if (run == 0) throw FormatError("mask RLE: zero-length run");
    if (out.size() + run > expected_length) break;
    out.insert(out.end(), run, sym == '#');
    ++pos;
  }
  if (out.size() != expected_length || pos != rle.size())
    throw FormatError("mask RLE length does not match nx*ny = " + std::to_string(expected_length));
  return out;
}

std::string field_csv(const ScalarField& u) {
  const GridSpec& g = *u.grid;
  std::string out = "x_index,y_index,value\n";
  for (Index c = 0; c < u.size(); ++c)
    out += std::to_string(g.cell_i(c)) + ',' + std::to_string(g.cell_j(c)) + ',' + format_real(u[c]) + '\n';
  return out;
}

std::string field_csv(const VectorField& b) {
  const GridSpec& g = *b.grid;
  std::string out = "x_index,y_index,value,value2\n";
  for (Index c = 0; c < b.size(); ++c)
    out += std::to_string(g.cell_i(c)) + ',' + std::to_string(g.cell_j(c)) + ',' + format_real(b.values(c, 0)) +
           ',' + format_real(b.values(c, 1)) + '\n';
  return out;
}

std::string trace_csv(const BoundaryTrace& t) {
  const GridSpec& g = *t.grid;
  std::string out = "edge,x_index,y_index,direction,value\n";
  const auto& edges = g.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    out += std::to_string(e) + ',' + std::to_string(g.cell_i(edges[e].cell)) + ',' +
           std::to_string(g.cell_j(edges[e].cell)) + ',' + to_string(edges[e].dir) + ',' +
           format_real(t.values[static_cast<Index>(e)]) + '\n';
  return out;
}

std::string solver_trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iter,primal,dual,gap,r_div,r_trace\n";
  for (const auto& p : trace)
    out += std::to_string(p.iter) + ',' + format_real(p.primal) + ',' + format_real(p.dual) + ',' +
           format_real(p.gap) + ',' + format_real(p.r_div) + ',' + format_real(p.r_trace) + '\n';
  return out;
}

ScalarField read_field_csv(const std::string& text, const GridPtr& grid) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x_index,y_index,value", 0) != 0)
    throw FormatError("field CSV: missing header x_index,y_index,value");
  ScalarField u(grid);
  std::vector<bool> seen(static_cast<std::size_t>(grid->cell_count()), false);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    int i = 0, j = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &i, &j, &v) != 3)
      throw FormatError("field CSV: cannot parse row " + std::to_string(row));
    const Index c = grid->index(i, j);
    if (c < 0) throw FormatError("field CSV: row " + std::to_string(row) + " names a cell outside the mask");
    u[c] = v;
    seen[static_cast<std::size_t>(c)] = true;
  }
  for (bool s : seen)
    if (!s) throw FormatError("field CSV does not cover every masked cell");
  return u;
}

Json grid_sidecar(const GridSpec& g, const std::vector<std::string>& roles) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["nx"] = g.nx();
  j["ny"] = g.ny();
  j["h"] = g.h();
  j["mask"] = encode_rle(g.mask());
  j["cells"] = g.cell_count();
  j["boundary_edges"] = g.edge_count();
  j["roles"] = roles;
  return j;
}

Json field_json(const ScalarField& u) {
  return Json{{"format_version", kFormatVersion},
              {"grid", grid_sidecar(*u.grid, {"scalar"})},
              {"values", std::vector<double>(u.values.data(), u.values.data() + u.size())}};
}

Json field_json(const VectorField& b) {
  Json j{{"format_version", kFormatVersion}, {"grid", grid_sidecar(*b.grid, {"vector"})}};
  j["x"] = std::vector<double>(b.values.col(0).data(), b.values.col(0).data() + b.size());
  j["y"] = std::vector<double>(b.values.col(1).data(), b.values.col(1).data() + b.size());
  return j;
}

Json field_json(const BoundaryTrace& t) {
  return Json{{"format_version", kFormatVersion},
              {"grid", grid_sidecar(*t.grid, {"boundary"})},
              {"values", std::vector<double>(t.values.data(), t.values.data() + t.size())}};
}

Json to_json(const TheoremReport& r) {
  Json m = Json::object();
  for (const auto& [k, v] : r.metrics) m[k] = v;
  return Json{{"name", to_string(r.name)}, {"pass", r.pass}, {"tolerance", r.tolerance}, {"metrics", m}};
}

Json to_json(const SolverConfig& cfg) {
  Json j{{"max_iters", cfg.max_iters},
         {"gap_tol", cfg.gap_tol},
         {"check_every", cfg.check_every},
         {"seed", cfg.seed},
         {"init", cfg.init == InitKind::Zero ? "zero" : cfg.init == InitKind::Random ? "random" : "warm"},
         {"divergence_floor", cfg.divergence_floor},
         {"overrelaxation", cfg.overrelaxation}};
  j["tau"] = cfg.tau ? Json(*cfg.tau) : Json("auto");
  j["sigma"] = cfg.sigma ? Json(*cfg.sigma) : Json("auto");
  return j;
}

Json to_json(const Certificate& c, const SolverConfig& cfg) {
  Json j{{"format_version", kFormatVersion},
         {"primal_value", c.primal_value},
         {"dual_value", c.dual_value},
         {"gap", c.gap},
         {"converged", c.converged},
         {"diverging", c.diverging},
         {"polished", c.polished},
         {"iterations", c.iterations},
         {"residuals", {{"r_norm", c.residuals.r_norm}, {"r_div", c.residuals.r_div}, {"r_trace", c.residuals.r_trace}}},
         {"tau", c.tau},
         {"sigma", c.sigma},
         {"step_norm", c.step_norm},
         {"config", to_json(cfg)}};
  return j;
}

Json to_json(const OracleReport& r, const OracleConfig& cfg) {
  Json steps = Json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"eps", s.eps},
                     {"value", s.value},
                     {"grad_norm", s.grad_norm},
                     {"iterations", s.iterations},
                     {"converged", s.converged},
                     {"bracket_lo", s.bracket_lo},
                     {"bracket_hi", s.bracket_hi}});
  return Json{{"format_version", kFormatVersion},
              {"value", r.value},
              {"fit_residual", r.fit_residual},
              {"bracket_width", r.bracket_width},
              {"monotone", r.monotone},
              {"steps", steps},
              {"config",
               {{"epsilons", cfg.epsilons},
                {"descent_tol", cfg.descent_tol},
                {"max_iters", cfg.max_iters},
                {"restart_every", cfg.restart_every}}}};
}

Json to_json(const MinimalityVerdict& v) {
  return Json{{"pass", v.pass},         {"value", v.value}, {"best_value", v.best_value}, {"margin", v.margin},
              {"tol", v.tol},           {"competitors", v.competitors},
              {"best_flip", std::vector<Index>(v.best_flip.begin(), v.best_flip.end())}};
}

Json to_json(const LscReport& r) {
  return Json{{"indicator_value", r.indicator_value}, {"eps", r.eps},       {"values", r.values},
              {"slack", r.slack},                     {"stabilized", r.stabilized}, {"pass", r.pass}};
}

Json to_json(const PsiReport& r) {
  return Json{{"perimeter_term", r.perimeter_term},
              {"drift_term", r.drift_term},
              {"curvature_term", r.curvature_term},
              {"total", r.total},
              {"region", r.region}};
}

Json to_json(const ThresholdReport& r) {
  return Json{{"c_omega", r.c_omega},
              {"h_norm", r.h_norm},
              {"threshold", r.threshold},
              {"safety", kPoincareSafety},
              {"verdict", to_string(r.verdict)}};
}

Json to_json(const ThresholdSearch& r) {
  return Json{{"bounded", r.bounded},
              {"unbounded", r.unbounded},
              {"estimate", r.estimate},
              {"steps", r.steps},
              {"resolved", r.resolved}};
}

Json to_json(const LevelSet& E) {
  Json j{{"format_version", kFormatVersion},
         {"grid", grid_sidecar(*E.grid, {"level_set"})},
         {"count", E.count()},
         {"member", encode_rle(E.member)}};
  j["lambda"] = E.lambda ? Json(*E.lambda) : Json(nullptr);
  return j;
}

Json to_json(const BarrierReport& r, const Eigen::Vector2d& x0, double eps) {
  return Json{{"format_version", kFormatVersion},
              {"x0", {x0.x(), x0.y()}},
              {"eps", eps},
              {"free_cells", r.free_cells},
              {"exhaustive", r.exhaustive},
              {"value", r.value},
              {"omega_value", r.omega_value},
              {"W", encode_rle(r.V)},
              {"density_boundary", encode_rle(r.density_boundary)},
              {"contact_edges", std::vector<Index>(r.contact_edges.begin(), r.contact_edges.end())},
              {"holds", r.holds}};
}

Json library_versions() {
  return Json{{"parea", PAREA_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"openssl", OpenSSL_version(OPENSSL_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace parea
