#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"  // nlohmann::json, vendored

#include "anolab/contact.hpp"
#include "anolab/liouville.hpp"
#include "anolab/splitting.hpp"
#include "anolab/zoo.hpp"

namespace anolab {

using json = nlohmann::json;

/// Malformed configuration or model document (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------------------------
// Expression grammar
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | primary
//   primary := number | 'pi' | x | y | z | t | fn '(' expr ')' | '(' expr ')'
//   fn      := sin | cos | exp | ln
//
// 't' is an alias for the third coordinate. The Unicode spellings '−' and 'π' are accepted.

/// A compiled expression in the coordinates; evaluates on jets so derivatives are exact.
class Expression {
 public:
  using Fn = std::function<Jet(const JetPoint&)>;

  Expression(Fn fn, bool constant, std::string source)
      : fn_(std::move(fn)), constant_(constant), source_(std::move(source)) {}

  [[nodiscard]] Jet operator()(const JetPoint& p) const { return fn_(p); }
  [[nodiscard]] double operator()(const Vec3& p) const { return fn_(JetPoint(p)).v; }
  [[nodiscard]] bool is_constant() const { return constant_; }
  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  Fn fn_;
  bool constant_;
  std::string source_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string src) : src_(normalize(std::move(src))) {}

  Expression parse() {
    auto [fn, c] = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    if (c) {
      const double v = fn(JetPoint(Vec3::Zero())).v;
      return {[v](const JetPoint&) { return Jet(v); }, true, src_};
    }
    return {std::move(fn), false, src_};
  }

 private:
  using Node = std::pair<Expression::Fn, bool>;  // (function, is constant)

  static std::string normalize(std::string s) {
    const auto replace = [&s](const std::string& from, const std::string& to) {
      for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
        s.replace(p, from.size(), to);
    };
    replace("\xE2\x88\x92", "-");  // U+2212 minus sign
    replace("\xCF\x80", "pi");     // U+03C0 pi
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + src_ + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (accept('+')) {
        Node rhs = term();
        lhs = {[a = lhs.first, b = rhs.first](const JetPoint& p) { return a(p) + b(p); }, lhs.second && rhs.second};
      } else if (accept('-')) {
        Node rhs = term();
        lhs = {[a = lhs.first, b = rhs.first](const JetPoint& p) { return a(p) - b(p); }, lhs.second && rhs.second};
      } else {
        return lhs;
      }
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (accept('*')) {
        Node rhs = unary();
        lhs = {[a = lhs.first, b = rhs.first](const JetPoint& p) { return a(p) * b(p); }, lhs.second && rhs.second};
      } else if (accept('/')) {
        Node rhs = unary();
        lhs = {[a = lhs.first, b = rhs.first](const JetPoint& p) { return a(p) / b(p); }, lhs.second && rhs.second};
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (accept('-')) {
      Node n = unary();
      return {[a = n.first](const JetPoint& p) { return -a(p); }, n.second};
    }
    if (accept('+')) return unary();
    return primary();
  }

  Node primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Node n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(src_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return {[v](const JetPoint&) { return Jet(v); }, true};
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string id = src_.substr(start, pos_ - start);
      if (id == "pi") return {[](const JetPoint&) { return Jet(std::numbers::pi); }, true};
      if (id == "x") return {[](const JetPoint& p) { return p.x; }, false};
      if (id == "y") return {[](const JetPoint& p) { return p.y; }, false};
      if (id == "z" || id == "t") return {[](const JetPoint& p) { return p.z; }, false};
      Jet (*f)(const Jet&) = nullptr;
      if (id == "sin") f = &anolab::sin;
      if (id == "cos") f = &anolab::cos;
      if (id == "exp") f = &anolab::exp;
      if (id == "ln") f = &anolab::log;
      if (!f) {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      if (!accept('(')) fail("expected '(' after " + id);
      Node arg = expr();
      if (!accept(')')) fail("expected ')'");
      return {[f, a = arg.first](const JetPoint& p) { return f(a(p)); }, arg.second};
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

[[nodiscard]] inline Expression parse_expression(const std::string& src) { return detail::ExprParser(src).parse(); }

// ---------------------------------------------------------------------------------------------
// FrameModel documents
//
// {
//   "name": "...", "kind": "coordinate-grid" | "homogeneous-frame",
//   "domain": {"lower": [..], "extent": [..],
//              "axes": ["periodic" | "open" | {"monodromy": [[a, b], [c, d]]}, x3]},
//   "resolution": [n1, n2, n3],
//   "frame": [[f1x, f1y, f1z], [f2x, ...], [f3x, ...]],         (optional; coordinate frame)
//   "structure_constants": [{"i": 2, "j": 0, "value": [..]}],  (optional; [f_i, f_j] in the frame)
//   "flow": [X1, X2, X3],                                       (frame coefficients)
//   "splitting": {"e_s": [..], "e_u": [..], "r_s": c, "r_u": c},  (optional ground truth)
//   "contact": {"alpha_plus": [..], "alpha_minus": [..]}          (optional)
// }
// Every entry of frame/flow/splitting/contact is a number or an expression string.

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline Expression expression_of(const json& j) {
  if (j.is_number()) return parse_expression(j.dump());
  if (j.is_string()) return parse_expression(j.get<std::string>());
  throw ConfigError("expected a number or expression string, got " + j.dump());
}

inline std::array<Expression, 3> triple_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an array of 3 entries");
  return {expression_of(j[0]), expression_of(j[1]), expression_of(j[2])};
}

inline Vec3 vec3_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw ConfigError(std::string(what) + " must contain numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

/// Scalar field from an expression; evaluated at the wrapped point on grid models so the
/// field is single-valued on the quotient.
inline ScalarField field_of(const Expression& e, const FrameModel* m) {
  if (e.is_constant()) return ScalarField::constant(e(Vec3::Zero()));
  if (m->is_grid()) return ScalarField::closed([e, m](const JetPoint& p) { return e(m->wrap(p)); }, m);
  return ScalarField::closed([e](const JetPoint& p) { return e(p); }, m);
}

template <class T>
T triple_field(const json& j, const char* what, const FrameModel* m) {
  const auto e = triple_of(j, what);
  T out;
  for (int k = 0; k < 3; ++k) out[k] = field_of(e[k], m);
  return out;
}

}  // namespace detail

/// Builds a model from a FrameModel document. Throws ConfigError for malformed documents and
/// ModelError for documents that describe an invalid model.
[[nodiscard]] inline ZooModel model_from_json(const json& doc) {
  using detail::require;
  if (!doc.is_object()) throw ConfigError("model document must be a JSON object");
  const std::string name = require(doc, "name").get<std::string>();
  const std::string kind_s = doc.value("kind", std::string("coordinate-grid"));
  ModelKind kind;
  if (kind_s == "coordinate-grid")
    kind = ModelKind::coordinate_grid;
  else if (kind_s == "homogeneous-frame")
    kind = ModelKind::homogeneous_frame;
  else
    throw ConfigError("unknown model kind '" + kind_s + "'");

  Domain dom;
  if (doc.contains("domain")) {
    const json& d = doc.at("domain");
    if (d.contains("lower")) dom.lower = detail::vec3_of(d.at("lower"), "domain.lower");
    if (d.contains("extent")) dom.extent = detail::vec3_of(d.at("extent"), "domain.extent");
    if (d.contains("axes")) {
      const json& axes = d.at("axes");
      if (!axes.is_array() || axes.size() != 3) throw ConfigError("domain.axes must have 3 entries");
      for (int a = 0; a < 3; ++a) {
        const json& r = axes[a];
        if (r == "periodic") {
          dom.rules[a] = AxisRule::make_periodic();
        } else if (r == "open") {
          dom.rules[a] = AxisRule::make_open();
        } else if (r.is_object() && r.contains("monodromy")) {
          const json& m = r.at("monodromy");
          if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2)
            throw ConfigError("monodromy must be a 2x2 array");
          Eigen::Matrix2d a2;
          a2 << m[0][0].get<double>(), m[0][1].get<double>(), m[1][0].get<double>(), m[1][1].get<double>();
          dom.rules[a] = AxisRule::make_monodromy(a2);
        } else {
          throw ConfigError("unknown axis rule " + r.dump());
        }
      }
    }
  }

  std::array<int, 3> res{1, 1, 1};
  if (doc.contains("resolution")) {
    const json& r = doc.at("resolution");
    if (r.is_number_integer()) {
      res.fill(r.get<int>());
    } else if (r.is_array() && r.size() == 3) {
      for (int a = 0; a < 3; ++a) res[a] = r[a].get<int>();
    } else {
      throw ConfigError("resolution must be an integer or an array of 3 integers");
    }
  } else if (kind == ModelKind::coordinate_grid) {
    res = {16, 16, 16};
  }

  FrameRealization frame = coordinate_frame();
  if (doc.contains("frame")) {
    const json& f = doc.at("frame");
    if (!f.is_array() || f.size() != 3) throw ConfigError("frame must list 3 vector fields");
    std::array<std::array<Expression, 3>, 3> legs{detail::triple_of(f[0], "frame[0]"),
                                                  detail::triple_of(f[1], "frame[1]"),
                                                  detail::triple_of(f[2], "frame[2]")};
    frame = [legs](const JetPoint& p) {
      FrameJets out;
      for (int k = 0; k < 3; ++k)
        for (int a = 0; a < 3; ++a) out[k].c[a] = legs[k][a](p);
      return out;
    };
  }

  std::optional<StructureTensor> constants;
  if (doc.contains("structure_constants")) {
    std::vector<std::tuple<int, int, Vec3>> brackets;
    for (const json& b : doc.at("structure_constants")) {
      const int i = require(b, "i").get<int>(), j = require(b, "j").get<int>();
      if (i < 0 || i > 2 || j < 0 || j > 2 || i == j) throw ConfigError("structure constant indices must be distinct in 0..2");
      brackets.emplace_back(i, j, detail::vec3_of(require(b, "value"), "structure_constants.value"));
    }
    constants = detail::structure_from_brackets(brackets);
  }

  ZooModel z;
  z.model = std::make_shared<FrameModel>(name, kind, dom, res, frame, constants);
  const FrameModel* m = z.model.get();
  z.x = detail::triple_field<VecField>(require(doc, "flow"), "flow", m);
  if (doc.contains("splitting")) {
    const json& s = doc.at("splitting");
    z.e_s = detail::triple_field<VecField>(require(s, "e_s"), "splitting.e_s", m);
    z.e_u = detail::triple_field<VecField>(require(s, "e_u"), "splitting.e_u", m);
    if (s.contains("r_s")) z.r_s = s.at("r_s").get<double>();
    if (s.contains("r_u")) z.r_u = s.at("r_u").get<double>();
  }
  if (doc.contains("contact")) {
    const json& c = doc.at("contact");
    z.alpha_plus = detail::triple_field<OneForm>(require(c, "alpha_plus"), "contact.alpha_plus", m);
    z.alpha_minus = detail::triple_field<OneForm>(require(c, "alpha_minus"), "contact.alpha_minus", m);
  }
  z.notes.push_back("loaded from a FrameModel document");
  return z;
}

[[nodiscard]] inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Report serialization

/// Non-finite numbers become null so reports stay valid JSON.
[[nodiscard]] inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

[[nodiscard]] inline json to_json(const Vec3& v) { return json::array({number(v[0]), number(v[1]), number(v[2])}); }

[[nodiscard]] inline json model_summary(const ZooModel& z) {
  const FrameModel& m = *z.model;
  json axes = json::array();
  for (const AxisRule& r : m.domain().rules) {
    if (r.kind == AxisRule::monodromy)
      axes.push_back({{"monodromy", {{r.matrix(0, 0), r.matrix(0, 1)}, {r.matrix(1, 0), r.matrix(1, 1)}}}});
    else
      axes.push_back(r.kind == AxisRule::open ? "open" : "periodic");
  }
  return {{"name", m.name()},
          {"kind", to_string(m.kind())},
          {"domain", {{"lower", to_json(m.domain().lower)}, {"extent", to_json(m.domain().extent)}, {"axes", axes}}},
          {"resolution", m.resolution()},
          {"constant_structure", m.has_constant_structure()},
          {"metric", m.base_metric.tag},
          {"default_tolerance", m.default_tolerance()},
          {"notes", z.notes}};
}

namespace detail {

inline json stats(const std::vector<double>& v) {
  if (v.empty()) return {{"min", nullptr}, {"max", nullptr}, {"mean", nullptr}};
  double lo = v[0], hi = v[0], s = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    s += x;
  }
  return {{"min", number(lo)}, {"max", number(hi)}, {"mean", number(s / static_cast<double>(v.size()))}};
}

}  // namespace detail

[[nodiscard]] inline json to_json(const Splitting& sp) {
  return {{"converged", sp.converged},
          {"horizon", number(sp.horizon)},
          {"doubling_change", sp.doubling_change},
          {"invariance_residual_u", number(sp.invariance_residual_u)},
          {"invariance_residual_s", number(sp.invariance_residual_s)},
          {"seed_disagreement", number(sp.seed_disagreement)},
          {"min_independence", number(sp.min_independence)},
          {"metric", sp.metric.tag},
          {"samples", sp.es_samples.size()},
          {"diagnostics", sp.diagnostics}};
}

[[nodiscard]] inline json to_json(const Rates& r) {
  return {{"method", to_string(r.method)},
          {"metric", r.metric_tag},
          {"step", number(r.step)},
          {"r_s", detail::stats(r.rs)},
          {"r_u", detail::stats(r.ru)},
          {"q_s", detail::stats(r.qs)},
          {"q_u", detail::stats(r.qu)},
          {"off_plane_residual", number(r.off_plane_residual)}};
}

[[nodiscard]] inline json to_json(const Verdict& v) {
  return {{"classification", to_string(v.classification)},
          {"projective_margin", number(v.projective_margin)},
          {"anosov_margin", number(v.anosov_margin)},
          {"tolerance", number(v.tolerance)}};
}

[[nodiscard]] inline json to_json(const BiContact& b) {
  return {{"provenance", b.provenance},
          {"contact", b.contact},
          {"margin_plus", number(b.margin_plus)},
          {"margin_minus", number(b.margin_minus)},
          {"transversality_margin", number(b.transversality_margin)},
          {"x_in_kernels", number(b.x_in_kernels)},
          {"diagnostics", b.diagnostics}};
}

[[nodiscard]] inline json to_json(const ApproxDiagnostics& d) {
  return {{"T", number(d.t)},
          {"angle_l1", number(d.angle_l1)},
          {"angle_l1_s", number(d.angle_l1_s)},
          {"max_abs_l2_u", number(d.max_abs_l2_u)},
          {"max_abs_l2_s", number(d.max_abs_l2_s)},
          {"max_l3_us", number(d.max_l3_us)},
          {"max_l3_su", number(d.max_l3_su)},
          {"normalizer_ratio_min", number(d.normalizer_ratio_min)},
          {"normalizer_ratio_max", number(d.normalizer_ratio_max)}};
}

[[nodiscard]] inline json to_json(const ApproxForms& a) {
  return {{"T", number(a.t)},
          {"cond1_margin", number(a.cond1_margin)},
          {"cond2_margin", number(a.cond2_margin)},
          {"claim1_residual_u", number(a.claim1_residual_u)},
          {"claim1_residual_s", number(a.claim1_residual_s)},
          {"claim3_residual_u", number(a.claim3_residual_u)},
          {"claim3_residual_s", number(a.claim3_residual_s)},
          {"diagnostics", to_json(a.diagnostics)}};
}

[[nodiscard]] inline json to_json(const LiouvilleReport& r) {
  return {{"pair", to_string(r.pair)},
          {"min_density", number(r.min_density)},
          {"argmin_point", to_json(r.argmin_point)},
          {"argmin_t", number(r.argmin_t)},
          {"profile_csv_path", r.profile_csv_path},
          {"agreement_residual", number(r.agreement_residual)},
          {"boundary_residual", number(r.boundary_residual)},
          {"tolerance", number(r.tolerance)},
          {"positive", r.positive}};
}

[[nodiscard]] inline json to_json(const ReebAnosovResult& r) {
  return {{"classification", to_string(r.classification)},
          {"anosov", r.anosov},
          {"certificate", r.anosov ? "Reeb field of alpha_+ is dynamically negative everywhere"
                                   : "not anosov: Reeb field of alpha_+ fails to be dynamically negative"},
          {"failure_measure", number(r.failure_measure)},
          {"failure_samples", r.failure_samples.size()},
          {"witness_angle", number(r.witness_angle)},
          {"reeb_plus_residual", number(std::max(r.reeb_plus.residual_normalization, r.reeb_plus.residual_kernel))},
          {"sign_plus", {{"positive", r.sign_plus.positive}, {"negative", r.sign_plus.negative}, {"tangent", r.sign_plus.tangent}}},
          {"sign_minus", {{"positive", r.sign_minus.positive}, {"negative", r.sign_minus.negative}, {"tangent", r.sign_minus.tangent}}},
          {"diagnostics", r.diagnostics}};
}

[[nodiscard]] inline json to_json(const Winding& w) {
  return {{"total_angle", number(w.total_angle)},
          {"half_turns", number(w.half_turns)},
          {"integrality_residual", number(w.integrality_residual)},
          {"full_turns", w.full_turns},
          {"giroux_torsion", w.giroux_torsion},
          {"threshold_case", w.threshold_case},
          {"pi_torsion", w.pi_torsion},
          {"note", w.note}};
}

[[nodiscard]] inline json to_json(const NegativeRegion& r) {
  json comps = json::array();
  for (const RegionComponent& c : r.components)
    comps.push_back({{"samples", c.samples},
                     {"z_min", number(c.z_min)},
                     {"z_max", number(c.z_max)},
                     {"z_band", c.z_band},
                     {"es_boundary", c.es_boundary},
                     {"eu_boundary", c.eu_boundary}});
  return {{"measure", number(r.measure)},
          {"components", comps},
          {"tangent_samples", r.tangent_samples},
          {"rotation_negative_on_closure", r.rotation_negative_on_closure},
          {"max_rotation_on_closure", number(r.max_rotation_on_closure)},
          {"degenerate", r.degenerate}};
}

[[nodiscard]] inline json to_json(const WeakFilling& w) {
  return {{"positive", w.positive},
          {"min_plus", number(w.min_plus)},
          {"min_minus", number(w.min_minus)},
          {"sup_eps", number(w.sup_eps)},
          {"sup_eps_bounded", w.sup_eps_bounded}};
}

[[nodiscard]] inline json to_json(const RateWitness& w) {
  return {{"min_ru", number(w.min_ru)},
          {"max_rs", number(w.max_rs)},
          {"strict", w.strict},
          {"ru", detail::stats(w.ru)},
          {"rs", detail::stats(w.rs)}};
}

// ---------------------------------------------------------------------------------------------
// CSV tables

namespace detail {

/// Shortest round-trip formatting, so tables are reproducible byte for byte.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  return json(v).dump();
}

}  // namespace detail

/// One row per sample: coordinates, e_s, e_u (coordinate components), r_s, r_u, q_s, q_u.
inline void write_splitting_csv(std::ostream& os, const Splitting& sp, const Rates& r) {
  using detail::fmt;
  os << "x,y,z,es_x,es_y,es_z,eu_x,eu_y,eu_z,r_s,r_u,q_s,q_u\n";
  const FrameModel& m = *sp.model;
  for (std::size_t i = 0; i < sample_count(m); ++i) {
    const Vec3 p = sample_point(m, i);
    const Mat3 f = m.frame_matrix(p);
    const Vec3 es = f * sp.e_s.at(p), eu = f * sp.e_u.at(p);
    os << fmt(p[0]) << ',' << fmt(p[1]) << ',' << fmt(p[2]);
    for (int k = 0; k < 3; ++k) os << ',' << fmt(es[k]);
    for (int k = 0; k < 3; ++k) os << ',' << fmt(eu[k]);
    os << ',' << fmt(r.rs[i]) << ',' << fmt(r.ru[i]) << ',' << fmt(r.qs[i]) << ',' << fmt(r.qu[i]) << '\n';
  }
}

struct SweepRow {
  double t = 0.0;
  ApproxDiagnostics d;
  double margin_plus = 0.0, margin_minus = 0.0;
};

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  using detail::fmt;
  os << "T,angle_l1,max_abs_l2_u,max_abs_l2_s,max_l3_us,max_l3_su,margin_plus,margin_minus\n";
  for (const SweepRow& r : rows)
    os << fmt(r.t) << ',' << fmt(r.d.angle_l1) << ',' << fmt(r.d.max_abs_l2_u) << ',' << fmt(r.d.max_abs_l2_s) << ','
       << fmt(r.d.max_l3_us) << ',' << fmt(r.d.max_l3_su) << ',' << fmt(r.margin_plus) << ',' << fmt(r.margin_minus)
       << '\n';
}

inline void write_profile_csv(std::ostream& os, const LiouvilleReport& r) {
  os << "t,min_density\n";
  for (const auto& [t, m] : r.profile) os << detail::fmt(t) << ',' << detail::fmt(m) << '\n';
}

}  // namespace anolab
