#include "niflab/symbol.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace niflab {

namespace {
constexpr double kLog2e = 1.4426950408889634074;
}

ScaledVec3 ScaledVec3::from_plain(const std::array<double, 3>& v) {
  double a = std::max({std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2])});
  ScaledVec3 out;
  if (a == 0.0) return out;
  int e;
  std::frexp(a, &e);
  out.exp2 = e;
  double f = std::exp2(static_cast<double>(-e));
  for (int i = 0; i < 3; ++i) out.mant[i] = v[i] * f;
  return out;
}

ScaledVec3 ScaledVec3::from_center_offset(const std::array<double, 3>& center,
                                          const std::array<double, 3>& offset) {
  double a = std::max({std::fabs(center[0]), std::fabs(center[1]), std::fabs(center[2]),
                       std::fabs(offset[0]), std::fabs(offset[1]), std::fabs(offset[2])});
  ScaledVec3 out;
  if (a == 0.0) return out;
  int e;
  std::frexp(a, &e);
  out.exp2 = e;
  double f = std::exp2(static_cast<double>(-e));
  for (int i = 0; i < 3; ++i) out.mant[i] = center[i] * f + offset[i] * f;
  return out;
}

Scaled ScaledVec3::radius() const {
  double r = std::sqrt(mant[0] * mant[0] + mant[1] * mant[1] + mant[2] * mant[2]);
  return Scaled(std::complex<double>(r, 0.0), exp2);
}

std::array<double, 3> ScaledVec3::to_plain() const {
  double f = std::exp2(static_cast<double>(exp2));
  return {mant[0] * f, mant[1] * f, mant[2] * f};
}

std::complex<double> MultiplierSymbol::eval(const std::array<double, 3>& xi, double t) const {
  std::complex<double> v = eval_tree(xi);
  if (heat_mu_ && t != 0.0) {
    double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    v *= std::exp(-(*heat_mu_) * t * r2);
  }
  return v;
}

Scaled MultiplierSymbol::eval_scaled(const ScaledVec3& xi, double t) const {
  Scaled v = eval_tree_scaled(xi);
  if (heat_mu_ && t != 0.0) {
    Scaled r = xi.radius();
    Scaled r2 = r * r;
    double e = ((*heat_mu_) * t) * r2.to_double();
    if (!std::isfinite(e)) return Scaled::zero();
    v *= Scaled::from_log2(-e * kLog2e);
  }
  return v;
}

std::complex<double> MultiplierSymbol::eval_tree(const std::array<double, 3>& xi) const {
  switch (kind_) {
    case Kind::Xi1: return xi[0];
    case Kind::Xi2: return xi[1];
    case Kind::Xi3: return xi[2];
    case Kind::AbsXi: return std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    case Kind::Const: return const_;
    case Kind::Add: return a_->eval_tree(xi) + b_->eval_tree(xi);
    case Kind::Sub: return a_->eval_tree(xi) - b_->eval_tree(xi);
    case Kind::Mul: return a_->eval_tree(xi) * b_->eval_tree(xi);
    case Kind::Div: return a_->eval_tree(xi) / b_->eval_tree(xi);
    case Kind::Pow: return std::pow(a_->eval_tree(xi), ipow_);
    case Kind::Profile: {
      double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
      return prof_->phi(std::exp2(static_cast<double>(-block_j_)) * r);
    }
  }
  return {0.0, 0.0};
}

Scaled MultiplierSymbol::eval_tree_scaled(const ScaledVec3& xi) const {
  switch (kind_) {
    case Kind::Xi1: return xi.component(0);
    case Kind::Xi2: return xi.component(1);
    case Kind::Xi3: return xi.component(2);
    case Kind::AbsXi: return xi.radius();
    case Kind::Const: return Scaled(const_, 0);
    case Kind::Add: return a_->eval_tree_scaled(xi) + b_->eval_tree_scaled(xi);
    case Kind::Sub: return a_->eval_tree_scaled(xi) - b_->eval_tree_scaled(xi);
    case Kind::Mul: return a_->eval_tree_scaled(xi) * b_->eval_tree_scaled(xi);
    case Kind::Div: return a_->eval_tree_scaled(xi) / b_->eval_tree_scaled(xi);
    case Kind::Pow: return a_->eval_tree_scaled(xi).pow_int(ipow_);
    case Kind::Profile: {
      Scaled r = xi.radius();
      if (r.is_zero()) return Scaled::zero();
      // bring mantissa into [0.5, 2) for the pinned-support evaluation
      double m = std::abs(r.mantissa());
      return Scaled(prof_->phi_at_scale(m, r.exponent2(), block_j_));
    }
  }
  return Scaled::zero();
}

std::optional<double> MultiplierSymbol::homogeneity_degree() const {
  const std::array<double, 3> pts[3] = {
      {0.7, -0.4, 0.5}, {-0.3, 0.9, 0.2}, {0.6, 0.5, -0.8}};
  std::optional<double> deg;
  for (const auto& p : pts) {
    auto v1 = eval(p);
    std::array<double, 3> p2{2 * p[0], 2 * p[1], 2 * p[2]};
    auto v2 = eval(p2);
    if (std::abs(v1) < 1e-14) continue;
    double d = std::log2(std::abs(v2) / std::abs(v1));
    if (!deg) deg = d;
    else if (std::fabs(*deg - d) > 1e-9) return std::nullopt;
  }
  return deg;
}

std::optional<int> MultiplierSymbol::parity() const {
  const std::array<double, 3> pts[4] = {
      {0.7, -0.4, 0.5}, {-0.3, 0.9, 0.2}, {0.6, 0.5, -0.8}, {1.1, 0.3, 0.4}};
  std::optional<int> par;
  for (const auto& p : pts) {
    auto v = eval(p);
    auto vm = eval({-p[0], -p[1], -p[2]});
    double scale = std::max(std::abs(v), std::abs(vm));
    if (scale < 1e-14) continue;
    int s;
    if (std::abs(vm - v) < 1e-10 * scale) s = 1;
    else if (std::abs(vm + v) < 1e-10 * scale) s = -1;
    else return std::nullopt;
    if (!par) par = s;
    else if (*par != s) return std::nullopt;
  }
  return par;
}

std::optional<std::complex<double>> MultiplierSymbol::as_constant(double tol) const {
  const std::array<double, 3> pts[4] = {
      {0.7, -0.4, 0.5}, {-0.3, 0.9, 0.2}, {0.6, 0.5, -0.8}, {0.05, 2.5, -1.7}};
  std::complex<double> v0 = eval(pts[0]);
  for (const auto& p : pts)
    if (std::abs(eval(p) - v0) > tol * std::max(1.0, std::abs(v0))) return std::nullopt;
  return v0;
}

std::string MultiplierSymbol::to_prefix() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Xi1: os << "xi1"; break;
    case Kind::Xi2: os << "xi2"; break;
    case Kind::Xi3: os << "xi3"; break;
    case Kind::AbsXi: os << "|xi|"; break;
    case Kind::Const:
      if (const_.imag() == 0.0) os << const_.real();
      else os << "(c " << const_.real() << " " << const_.imag() << ")";
      break;
    case Kind::Add: os << "(+ " << a_->to_prefix() << " " << b_->to_prefix() << ")"; break;
    case Kind::Sub: os << "(- " << a_->to_prefix() << " " << b_->to_prefix() << ")"; break;
    case Kind::Mul: os << "(* " << a_->to_prefix() << " " << b_->to_prefix() << ")"; break;
    case Kind::Div: os << "(/ " << a_->to_prefix() << " " << b_->to_prefix() << ")"; break;
    case Kind::Pow: os << "(pow " << a_->to_prefix() << " " << ipow_ << ")"; break;
    case Kind::Profile: os << "(blockphi " << block_j_ << ")"; break;
  }
  std::string s = os.str();
  if (heat_mu_) {
    std::ostringstream h;
    h.precision(17);
    h << "(heat " << *heat_mu_ << " " << s << ")";
    return h.str();
  }
  return s;
}

namespace {

struct Tok {
  std::string s;
};

void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

std::string read_atom(const std::string& s, std::size_t& i) {
  std::size_t start = i;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' &&
         s[i] != ')')
    ++i;
  return s.substr(start, i - start);
}

SymbolPtr parse_expr(const std::string& s, std::size_t& i, const DyadicProfile* prof);

SymbolPtr parse_list(const std::string& s, std::size_t& i, const DyadicProfile* prof) {
  // s[i] == '('
  ++i;
  skip_ws(s, i);
  std::string op = read_atom(s, i);
  skip_ws(s, i);
  auto close = [&](SymbolPtr r) {
    skip_ws(s, i);
    if (i >= s.size() || s[i] != ')') throw std::runtime_error("symbol parse: missing )");
    ++i;
    return r;
  };
  if (op == "+" || op == "-" || op == "*" || op == "/") {
    SymbolPtr a = parse_expr(s, i, prof);
    skip_ws(s, i);
    SymbolPtr b = parse_expr(s, i, prof);
    if (op == "+") return close(MultiplierSymbol::add(a, b));
    if (op == "-") return close(MultiplierSymbol::sub(a, b));
    if (op == "*") return close(MultiplierSymbol::mul(a, b));
    return close(MultiplierSymbol::div(a, b));
  }
  if (op == "pow") {
    SymbolPtr a = parse_expr(s, i, prof);
    skip_ws(s, i);
    int n = std::stoi(read_atom(s, i));
    return close(MultiplierSymbol::pow(a, n));
  }
  if (op == "c") {
    double re = std::stod(read_atom(s, i));
    skip_ws(s, i);
    double im = std::stod(read_atom(s, i));
    return close(MultiplierSymbol::constant({re, im}));
  }
  if (op == "blockphi") {
    if (!prof) throw std::runtime_error("symbol parse: blockphi needs a profile");
    int j = std::stoi(read_atom(s, i));
    return close(MultiplierSymbol::block_profile(*prof, j));
  }
  if (op == "heat") {
    double mu = std::stod(read_atom(s, i));
    skip_ws(s, i);
    SymbolPtr a = parse_expr(s, i, prof);
    return close(MultiplierSymbol::with_heat(a, mu));
  }
  throw std::runtime_error("symbol parse: unknown op " + op);
}

SymbolPtr parse_expr(const std::string& s, std::size_t& i, const DyadicProfile* prof) {
  skip_ws(s, i);
  if (i >= s.size()) throw std::runtime_error("symbol parse: unexpected end");
  if (s[i] == '(') return parse_list(s, i, prof);
  std::string a = read_atom(s, i);
  if (a == "xi1") return MultiplierSymbol::xi(1);
  if (a == "xi2") return MultiplierSymbol::xi(2);
  if (a == "xi3") return MultiplierSymbol::xi(3);
  if (a == "|xi|") return MultiplierSymbol::abs_xi();
  return MultiplierSymbol::constant(std::stod(a));
}

}  // namespace

SymbolPtr MultiplierSymbol::parse_prefix(const std::string& s, const DyadicProfile* prof) {
  std::size_t i = 0;
  SymbolPtr r = parse_expr(s, i, prof);
  skip_ws(s, i);
  if (i != s.size()) throw std::runtime_error("symbol parse: trailing input");
  return r;
}

SymbolPtr MultiplierSymbol::xi(int i) {
  Kind k = i == 1 ? Kind::Xi1 : i == 2 ? Kind::Xi2 : Kind::Xi3;
  return SymbolPtr(new MultiplierSymbol(k));
}
SymbolPtr MultiplierSymbol::abs_xi() { return SymbolPtr(new MultiplierSymbol(Kind::AbsXi)); }
SymbolPtr MultiplierSymbol::constant(std::complex<double> c) {
  auto p = new MultiplierSymbol(Kind::Const);
  p->const_ = c;
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::add(SymbolPtr a, SymbolPtr b) {
  auto p = new MultiplierSymbol(Kind::Add);
  p->a_ = std::move(a);
  p->b_ = std::move(b);
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::sub(SymbolPtr a, SymbolPtr b) {
  auto p = new MultiplierSymbol(Kind::Sub);
  p->a_ = std::move(a);
  p->b_ = std::move(b);
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::mul(SymbolPtr a, SymbolPtr b) {
  auto p = new MultiplierSymbol(Kind::Mul);
  p->a_ = std::move(a);
  p->b_ = std::move(b);
  // a heat factor on either side rides along on the product
  if (p->a_->heat_mu_ || p->b_->heat_mu_) {
    if (p->a_->heat_mu_ && p->b_->heat_mu_)
      throw std::invalid_argument("symbol: cannot multiply two heat-tagged symbols");
    p->heat_mu_ = p->a_->heat_mu_ ? p->a_->heat_mu_ : p->b_->heat_mu_;
  }
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::div(SymbolPtr a, SymbolPtr b) {
  auto p = new MultiplierSymbol(Kind::Div);
  p->a_ = std::move(a);
  p->b_ = std::move(b);
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::pow(SymbolPtr a, int n) {
  auto p = new MultiplierSymbol(Kind::Pow);
  p->a_ = std::move(a);
  p->ipow_ = n;
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::block_profile(const DyadicProfile& prof, int j) {
  auto p = new MultiplierSymbol(Kind::Profile);
  p->prof_keep_ = std::make_shared<DyadicProfile>(prof);
  p->prof_ = p->prof_keep_.get();
  p->block_j_ = j;
  return SymbolPtr(p);
}
SymbolPtr MultiplierSymbol::with_heat(SymbolPtr a, double mu) {
  auto p = new MultiplierSymbol(*a);
  p->heat_mu_ = mu;
  return SymbolPtr(p);
}

SymbolPtr MultiplierSymbol::riesz(int i) {
  return mul(constant({0.0, -1.0}), div(xi(i), abs_xi()));
}
SymbolPtr MultiplierSymbol::leray_entry(int i, int j) {
  return div(mul(xi(i), xi(j)), pow(abs_xi(), 2));
}
SymbolPtr MultiplierSymbol::laplacian() { return mul(constant(-1.0), pow(abs_xi(), 2)); }
SymbolPtr MultiplierSymbol::divergence_dot(const std::array<SymbolPtr, 3>& v) {
  SymbolPtr s = mul(xi(1), v[0]);
  s = add(s, mul(xi(2), v[1]));
  s = add(s, mul(xi(3), v[2]));
  return mul(constant({0.0, 1.0}), s);
}

}  // namespace niflab
