#include "fecond/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/LU>
#include <fmt/format.h>
#include <json.hpp>

#include "fecond/error.hpp"
#include "fecond/geometry.hpp"

namespace fecond {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<std::string_view, 10> kIds = {
    "new.lambda_min.A",   "new.lambda_min.SAS", "fried.lambda_min", "lambda_max.A.lower",
    "lambda_max.A.upper", "new.kappa.A",        "new.kappa.SAS",    "prior.kappa.A",
    "prior.kappa.SAS",    "conjectured.kappa.SAS"};

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Exponent of d_K in the p-forms.
double d_k_exponent(int d, double p) {
  return p / (p - 1.0) * (d - (d - 2) * p) / (d + 2 * p);
}

double p_prefactor(int d, double p) {
  return std::pow(static_cast<double>(d) / (d - 2) - p, static_cast<double>(d) / (d + 2 * p));
}

// (1/N) sum (|Kbar|/|K|)^(1/(p-1)) d_K^e
double volume_p_mean(const BoundInputs& in, double p) {
  const double e = d_k_exponent(in.dim, p);
  double s = 0.0;
  for (std::size_t k = 0; k < in.num_elements(); ++k)
    s += std::pow(in.k_avg / in.volume[k], 1.0 / (p - 1.0)) * std::pow(in.d_k[k], e);
  return s / static_cast<double>(in.num_elements());
}

// (1/N) sum ln^2(1 + (|Kbar|/|K_min|) d_K)
double log_mean(const BoundInputs& in) {
  const double r = in.k_avg / in.k_min;
  double s = 0.0;
  for (double dk : in.d_k) {
    const double l = std::log1p(r * dk);
    s += l * l;
  }
  return s / static_cast<double>(in.num_elements());
}

// N^(-2p/(d(p-1))) sum |K| beta^(p/(p-1)) d_K^e
double beta_p_sum(const BoundInputs& in, double p) {
  const int d = in.dim;
  const double n = static_cast<double>(in.num_elements());
  const double e = d_k_exponent(d, p);
  double s = 0.0;
  for (std::size_t k = 0; k < in.num_elements(); ++k)
    s += in.volume[k] * std::pow(in.beta[k], p / (p - 1.0)) * std::pow(in.d_k[k], e);
  return std::pow(n, -2.0 * p / (d * (p - 1.0))) * s;
}

// (1/N) sum |K| beta_K [1 + ln^2(1 + d_K gamma_h)]
double beta_log_mean(const BoundInputs& in) {
  double s = 0.0;
  for (std::size_t k = 0; k < in.num_elements(); ++k) {
    const double l = std::log1p(in.d_k[k] * in.gamma_h);
    s += in.volume[k] * in.beta[k] * (1.0 + l * l);
  }
  return s / static_cast<double>(in.num_elements());
}

// N^(2/d) N^((d-2)/d) max_j sum_{omega_j} |K| beta_K
double kappa_a_prefix(const BoundInputs& in) {
  const double n = static_cast<double>(in.num_elements());
  const int d = in.dim;
  return std::pow(n, 2.0 / d) * std::pow(n, (d - 2.0) / d) * in.max_patch_beta();
}

void require_dim(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument(fmt::format("dimension must be 1, 2 or 3, got {}", dim));
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt17(double x) { return std::isfinite(x) ? fmt::format("{:.17g}", x) : std::string("nan"); }

}  // namespace

double symmetric_norm2(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n != m.cols() || n < 1 || n > 3) throw std::invalid_argument("symmetric_norm2 expects order 1, 2 or 3");
  if (n == 1) return std::abs(m(0, 0));
  if (n == 2) {
    const double h = 0.5 * (m(0, 0) + m(1, 1));
    const double r = std::hypot(0.5 * (m(0, 0) - m(1, 1)), 0.5 * (m(0, 1) + m(1, 0)));
    return std::max(std::abs(h + r), std::abs(h - r));
  }
  const double a01 = 0.5 * (m(0, 1) + m(1, 0)), a02 = 0.5 * (m(0, 2) + m(2, 0)), a12 = 0.5 * (m(1, 2) + m(2, 1));
  const double off = a01 * a01 + a02 * a02 + a12 * a12;
  const double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
  if (off == 0.0) return std::max({std::abs(m(0, 0)), std::abs(m(1, 1)), std::abs(m(2, 2))});
  const double b00 = m(0, 0) - q, b11 = m(1, 1) - q, b22 = m(2, 2) - q;
  const double p = std::sqrt((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0);
  const double det = b00 * (b11 * b22 - a12 * a12) - a01 * (a01 * b22 - a12 * a02) + a02 * (a01 * a12 - b11 * a02);
  const double r = std::clamp(det / (2.0 * p * p * p), -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double top = q + 2.0 * p * std::cos(phi);
  const double bottom = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  return std::max(std::abs(top), std::abs(bottom));
}

AnisotropyMetrics compute_beta(const SimplicialMesh& mesh, const DiffusionField& field) {
  AnisotropyMetrics out;
  out.beta.resize(mesh.num_elements());
  double top = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Eigen::MatrixXd f = element_jacobian(mesh, k);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(f);
    if (!lu.isInvertible()) throw MeshError(fmt::format("element {} has a singular Jacobian", k));
    const Eigen::MatrixXd inv = lu.inverse();
    const Eigen::MatrixXd prod = inv * average_diffusion(mesh, field, k) * inv.transpose();
    out.beta[k] = symmetric_norm2(prod) / field.d_min();
    out.weighted_sum += element_volume(mesh, k) * out.beta[k];
    top = std::max(top, out.beta[k]);
  }
  out.gamma_h = top / out.weighted_sum;
  return out;
}

BoundInputs BoundInputs::from(const SimplicialMesh& mesh, const DiffusionField& field) {
  const MeshGeometry geo = compute_metrics(mesh);
  const AnisotropyMetrics an = compute_beta(mesh, field);
  BoundInputs in;
  in.dim = mesh.dim();
  in.d_min = field.d_min();
  in.beta = an.beta;
  in.beta_volume_sum = an.weighted_sum;
  in.gamma_h = an.gamma_h;
  in.patches.resize(mesh.num_interior());
  for (std::size_t k = 0; k < geo.elements.size(); ++k) {
    in.volume.push_back(geo.elements[k].volume);
    in.d_k.push_back(geo.elements[k].d_k);
    for (int row : geo.elements[k].patch_ids) in.patches[static_cast<std::size_t>(row)].push_back(static_cast<int>(k));
  }
  in.k_min = geo.metrics.k_min_volume;
  in.k_avg = geo.metrics.k_avg_volume;
  in.total_volume = geo.metrics.total_volume;
  in.h_domain = geo.metrics.h_domain;
  return in;
}

BoundInputs BoundInputs::with_distance(double distance) const {
  BoundInputs out = *this;
  std::fill(out.d_k.begin(), out.d_k.end(), distance);
  return out;
}

double BoundInputs::max_patch_beta() const {
  double best = 0.0;
  for (const auto& patch : patches) {
    double s = 0.0;
    for (int k : patch) s += volume[static_cast<std::size_t>(k)] * beta[static_cast<std::size_t>(k)];
    best = std::max(best, s);
  }
  return best;
}

double default_p(int dim) { return dim >= 3 ? 2.9 : 0.0; }

void check_p(int dim, double p) {
  require_dim(dim);
  if (dim == 3 && !(p > 1.0 && p < 3.0))
    throw std::invalid_argument(fmt::format("p must lie in (1, 3) in 3D, got {}", p));
}

double bound_lambda_min_B(const SimplicialMesh& mesh, const DensityFunction& rho) {
  if (rho.rho.size() != mesh.num_elements())
    throw std::invalid_argument(fmt::format("density has {} values for {} elements", rho.rho.size(), mesh.num_elements()));
  std::vector<double> patch(mesh.num_interior(), 0.0);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const double w = rho.rho[k] * element_volume(mesh, k);
    for (int v : mesh.element(k)) {
      const int row = mesh.interior_index(static_cast<std::size_t>(v));
      if (row >= 0) patch[static_cast<std::size_t>(row)] += w;
    }
  }
  if (patch.empty()) throw MeshError("mesh has no interior vertices");
  const int d = mesh.dim();
  return *std::min_element(patch.begin(), patch.end()) / ((d + 1) * (d + 2));
}

double bound_lambda_rho(const BoundInputs& in, const DensityFunction& rho, double p) {
  check_p(in.dim, p);
  if (rho.rho.size() != in.num_elements())
    throw std::invalid_argument(fmt::format("density has {} values for {} elements", rho.rho.size(), in.num_elements()));
  const int d = in.dim;
  double s = 0.0;
  if (d == 1) {
    for (std::size_t k = 0; k < in.num_elements(); ++k) s += rho.rho[k] * in.volume[k] * in.d_k[k];
    return 1.0 / s;
  }
  if (d == 2) {
    for (std::size_t k = 0; k < in.num_elements(); ++k) {
      const double l = std::log1p(in.d_k[k] * rho.rho_max);
      s += rho.rho[k] * in.volume[k] * l * l;
    }
    return 1.0 / std::sqrt(1.0 + s);
  }
  const double e = d_k_exponent(d, p);
  for (std::size_t k = 0; k < in.num_elements(); ++k)
    s += std::pow(rho.rho[k] * in.volume[k], p / (p - 1.0)) * std::pow(in.volume[k], -1.0 / (p - 1.0)) *
         std::pow(in.d_k[k], e);
  return p_prefactor(d, p) * std::pow(s, -(p - 1.0) / p);
}

double bound_lambda_min_A(const BoundInputs& in, double p) {
  check_p(in.dim, p);
  const double n = static_cast<double>(in.num_elements());
  const double lead = in.d_min / n;
  switch (in.dim) {
    case 1:
      return lead * n / sum(in.d_k);
    case 2:
      return lead / std::sqrt(1.0 + log_mean(in));
    default:
      return lead * p_prefactor(in.dim, p) * std::pow(volume_p_mean(in, p), -(p - 1.0) / p);
  }
}

double bound_lambda_min_SAS(const BoundInputs& in, double p) {
  check_p(in.dim, p);
  const int d = in.dim;
  const double n = static_cast<double>(in.num_elements());
  const double lead = std::pow(n, -2.0 / d);
  if (d == 1) {
    double s = 0.0;
    for (std::size_t k = 0; k < in.num_elements(); ++k) s += in.volume[k] * in.beta[k] * in.d_k[k];
    return lead * n * n / s;
  }
  if (d == 2) return lead / std::sqrt(in.beta_volume_sum / n) / std::sqrt(beta_log_mean(in));
  return lead * p_prefactor(d, p) * std::pow(beta_p_sum(in, p), -(p - 1.0) / p);
}

std::pair<double, double> bound_lambda_max(const SparseSymmetric& a, int dim) {
  require_dim(dim);
  if (a.order() == 0) throw std::invalid_argument("matrix is empty");
  const double top = a.diagonal().maxCoeff();
  if (!(top > 0.0)) throw std::invalid_argument("diagonal is not positive");
  return {top, (dim + 1) * top};
}

KappaBounds bound_kappa(const BoundInputs& in, double p) {
  check_p(in.dim, p);
  const int d = in.dim;
  const double n = static_cast<double>(in.num_elements());
  const double prefix = kappa_a_prefix(in);
  const double base = std::pow(n, 2.0 / d);
  KappaBounds out;
  if (d == 1) {
    double s = 0.0;
    for (std::size_t k = 0; k < in.num_elements(); ++k) s += in.volume[k] * in.beta[k] * in.d_k[k];
    out.a = prefix * sum(in.d_k) / n;
    out.sas = base * s / (n * n);
  } else if (d == 2) {
    out.a = prefix * std::sqrt(1.0 + log_mean(in));
    out.sas = base * std::sqrt(in.beta_volume_sum / n) * std::sqrt(beta_log_mean(in));
  } else {
    const double pre = p_prefactor(d, p);
    out.a = prefix / pre * std::pow(volume_p_mean(in, p), (p - 1.0) / p);
    out.sas = base / pre * std::pow(beta_p_sum(in, p), (p - 1.0) / p);
  }
  return out;
}

KappaBounds bound_kappa_prior(const BoundInputs& in) {
  require_dim(in.dim);
  const int d = in.dim;
  const double n = static_cast<double>(in.num_elements());
  const double prefix = kappa_a_prefix(in);
  const double base = std::pow(n, 2.0 / d);
  KappaBounds out;
  if (d == 1) {
    out.a = prefix;
    out.sas = base * in.beta_volume_sum / (n * n);
  } else if (d == 2) {
    out.a = prefix * (1.0 + std::log(in.k_avg / in.k_min));
    out.sas = base * (in.beta_volume_sum / n) * (1.0 + std::abs(std::log(in.gamma_h)));
  } else {
    double sv = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < in.num_elements(); ++k) {
      sv += std::pow(in.k_avg / in.volume[k], (d - 2.0) / 2.0);
      sb += in.volume[k] * std::pow(in.beta[k], d / 2.0);
    }
    out.a = prefix * std::pow(sv / n, 2.0 / d);
    out.sas = base * std::pow(sb / n, 2.0 / d);
  }
  return out;
}

double bound_lambda_min_fried(const BoundInputs& in) {
  require_dim(in.dim);
  const double lead = in.d_min / static_cast<double>(in.num_elements());
  const double ratio = in.k_avg / in.k_min;
  switch (in.dim) {
    case 1:
      return lead;
    case 2:
      return lead / (1.0 + std::log(ratio));
    default:
      return lead * std::pow(ratio, 2.0 / in.dim - 1.0);
  }
}

double bound_kappa_sas_conjectured(const BoundInputs& in) {
  if (in.dim != 2) throw std::invalid_argument(fmt::format("the conjectured bound is defined in 2D only, got {}D", in.dim));
  double s = 0.0;
  for (std::size_t k = 0; k < in.num_elements(); ++k)
    s += in.volume[k] * in.beta[k] * std::log1p(in.d_k[k] / in.volume[k]);
  return s;
}

std::span<const std::string_view> bound_ids() { return kIds; }

std::optional<double> Calibration::find(int dim, std::string_view id) const {
  const auto d = constants.find(dim);
  if (d == constants.end()) return std::nullopt;
  const auto c = d->second.find(std::string(id));
  if (c == d->second.end()) return std::nullopt;
  return c->second;
}

std::string Calibration::to_json() const {
  json doc;
  doc["version"] = 1;
  json dims = json::object();
  for (const auto& [dim, ids] : constants) {
    json row = json::object();
    for (const auto& [id, c] : ids) row[id] = c;
    dims[std::to_string(dim)] = row;
  }
  doc["constants"] = dims;
  return doc.dump(2) + "\n";
}

Calibration Calibration::from_json(std::string_view text, const std::string& name) {
  Calibration out;
  try {
    const json doc = json::parse(text);
    if (doc.value("version", 0) != 1) throw FormatError(name, "unsupported or missing \"version\" (expected 1)");
    for (const auto& [dim, ids] : doc.at("constants").items()) {
      const int d = std::stoi(dim);
      require_dim(d);
      for (const auto& [id, c] : ids.items()) {
        const double v = c.get<double>();
        if (!(v > 0.0) || !std::isfinite(v))
          throw FormatError(name, fmt::format("constant {} for {}D is not a positive number", id, d));
        out.constants[d][id] = v;
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(name, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(name, e.what());
  }
  return out;
}

const BoundEntry* BoundReport::find(std::string_view id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

const BoundEntry& BoundReport::at(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw std::out_of_range(fmt::format("no bound '{}' in this report", id));
}

void BoundReport::apply(const Calibration& cal) {
  for (auto& e : entries)
    if (!e.constant_free) e.constant = cal.find(dim, e.id);
}

std::string BoundReport::csv_header() {
  std::string h =
      "dim,n_elements,n_interior,p,max_aspect_ratio,"
      "exact.lambda_min.A,exact.lambda_max.A,exact.kappa.A,"
      "exact.lambda_min.SAS,exact.lambda_max.SAS,exact.kappa.SAS,converged";
  for (auto id : kIds) h += fmt::format(",{}.raw,{}", id, id);
  return h;
}

std::string BoundReport::csv_row() const {
  std::string r = fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", dim, n_elements, n_interior, fmt17(p),
                              fmt17(max_aspect_ratio), fmt17(exact.a.lambda_min), fmt17(exact.a.lambda_max),
                              fmt17(exact.a.kappa), fmt17(exact.scaled.lambda_min), fmt17(exact.scaled.lambda_max),
                              fmt17(exact.scaled.kappa), exact.a.converged && exact.scaled.converged ? 1 : 0);
  for (auto id : kIds) {
    const BoundEntry* e = find(id);
    r += e ? fmt::format(",{},{}", fmt17(e->raw), fmt17(e->value())) : std::string(",nan,nan");
  }
  return r;
}

std::string BoundReport::to_json() const {
  auto spectrum = [](const SpectralResult& s) {
    return json{{"lambda_min", number(s.lambda_min)}, {"lambda_max", number(s.lambda_max)},
                {"kappa", number(s.kappa)},           {"method", std::string(to_string(s.method))},
                {"residual", number(s.residual)},     {"converged", s.converged}};
  };
  json doc{{"dim", dim},
           {"n_elements", n_elements},
           {"n_interior", n_interior},
           {"p", number(p)},
           {"max_aspect_ratio", number(max_aspect_ratio)},
           {"exact", {{"A", spectrum(exact.a)}, {"SAS", spectrum(exact.scaled)}}}};
  json list = json::array();
  for (const auto& e : entries) {
    json item{{"id", e.id},
              {"target", e.target},
              {"kind", e.kind == BoundKind::lower ? "lower" : "upper"},
              {"constant_free", e.constant_free},
              {"raw", number(e.raw)},
              {"exact", number(e.exact)},
              {"value", number(e.value())},
              {"holds", e.holds()}};
    item["constant"] = e.constant ? number(*e.constant) : json(nullptr);
    list.push_back(item);
  }
  doc["bounds"] = list;
  doc["notes"] = notes;
  return doc.dump(2) + "\n";
}

BoundReport make_report(const SimplicialMesh& mesh, const DiffusionField& field, const ConditionReport& exact,
                        double p) {
  const int d = mesh.dim();
  check_p(d, p);
  const BoundInputs in = BoundInputs::from(mesh, field);
  BoundReport r;
  r.dim = d;
  r.n_elements = mesh.num_elements();
  r.n_interior = mesh.num_interior();
  r.p = d == 3 ? p : kNaN;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    r.max_aspect_ratio = std::max(r.max_aspect_ratio, element_aspect_ratio(mesh, k));
  r.exact = exact;

  auto add = [&](std::string_view id, std::string target, BoundKind kind, double raw, double ex, bool free = false) {
    r.entries.push_back(BoundEntry{std::string(id), std::move(target), kind, free, raw, ex, std::nullopt});
  };
  const auto lo = BoundKind::lower;
  const auto up = BoundKind::upper;
  const SparseSymmetric a = assemble_stiffness(mesh, field);
  const auto [lmax_lo, lmax_hi] = bound_lambda_max(a, d);
  const KappaBounds kn = bound_kappa(in, p);
  const KappaBounds kp = bound_kappa_prior(in);

  add(kIds[0], "lambda_min.A", lo, bound_lambda_min_A(in, p), exact.a.lambda_min);
  add(kIds[1], "lambda_min.SAS", lo, bound_lambda_min_SAS(in, p), exact.scaled.lambda_min);
  add(kIds[2], "lambda_min.A", lo, bound_lambda_min_fried(in), exact.a.lambda_min);
  add(kIds[3], "lambda_max.A", lo, lmax_lo, exact.a.lambda_max, true);
  add(kIds[4], "lambda_max.A", up, lmax_hi, exact.a.lambda_max, true);
  add(kIds[5], "kappa.A", up, kn.a, exact.a.kappa);
  add(kIds[6], "kappa.SAS", up, kn.sas, exact.scaled.kappa);
  add(kIds[7], "kappa.A", up, kp.a, exact.a.kappa);
  add(kIds[8], "kappa.SAS", up, kp.sas, exact.scaled.kappa);
  if (d == 2) add(kIds[9], "kappa.SAS", up, bound_kappa_sas_conjectured(in), exact.scaled.kappa);

  if (d == 2 && std::abs(in.total_volume - 1.0) > 1e-12)
    r.notes.push_back(fmt::format(
        "domain volume is {:.6g}, not 1: the 2D logarithmic factors are not scale invariant", in.total_volume));
  if (!exact.a.converged || !exact.scaled.converged)
    r.notes.push_back("eigensolver did not reach the requested tolerance; exact values are estimates");
  return r;
}

Calibration calibrate(std::span<const BoundReport> series) {
  if (series.empty()) throw std::invalid_argument("calibration series is empty");
  const int d = series.front().dim;
  Calibration out;
  auto& row = out.constants[d];
  for (const auto& rep : series) {
    if (rep.dim != d) throw std::invalid_argument("calibration series mixes dimensions");
    for (const auto& e : rep.entries) {
      if (e.constant_free || !(e.raw > 0.0) || !std::isfinite(e.raw)) continue;
      double ratio = e.exact / e.raw;
      // Round toward validity so C * raw stays on the correct side of exact.
      if (e.kind == BoundKind::lower)
        while (ratio * e.raw > e.exact) ratio = std::nextafter(ratio, 0.0);
      else
        while (ratio * e.raw < e.exact) ratio = std::nextafter(ratio, std::numeric_limits<double>::infinity());
      auto it = row.find(e.id);
      if (it == row.end())
        row.emplace(e.id, ratio);
      else
        it->second = e.kind == BoundKind::lower ? std::min(it->second, ratio) : std::max(it->second, ratio);
    }
  }
  return out;
}

}  // namespace fecond
