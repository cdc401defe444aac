#include "cpmp/projective.hpp"

#include <nlohmann/json.hpp>

namespace cpmp {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

// Index (1-based) of the largest-magnitude entry, smallest index on ties.
int argmax_abs(const Vec& v) {
  int best = 1;
  double mag = std::abs(v[0]);
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    if (m > mag) {
      mag = m;
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

}  // namespace

ProjectiveCostate ProjectiveCostate::normal(Vec lambda) {
  require_finite(lambda, "lambda");
  ProjectiveCostate pc;
  pc.chart_ = Chart::Normal;
  pc.coords_ = std::move(lambda);
  return pc;
}

ProjectiveCostate ProjectiveCostate::abnormal(int pivot, Vec alpha, double alpha0) {
  require_finite(alpha, "alpha");
  if (!std::isfinite(alpha0)) throw InvalidInput("alpha0 is not finite");
  if (pivot < 1 || pivot > alpha.size())
    throw InvalidInput("abnormal pivot out of range");
  if (alpha[pivot - 1] == 0.0)
    throw InvalidInput("abnormal pivot coordinate must be nonzero");
  if (alpha[pivot - 1] != 1.0) {
    const double s = alpha[pivot - 1];
    alpha /= s;
    alpha0 /= s;
  }
  alpha[pivot - 1] = 1.0;
  ProjectiveCostate pc;
  pc.chart_ = Chart::Abnormal;
  pc.pivot_ = pivot;
  pc.alpha0_ = alpha0;
  pc.coords_ = std::move(alpha);
  return pc;
}

std::string ProjectiveCostate::chart_name() const {
  if (chart_ == Chart::Normal) return "normal";
  return "abnormal:" + std::to_string(pivot_);
}

ProjectiveCostate from_vector(const Vec& nu_hat, double eps0) {
  if (nu_hat.size() < 2) throw InvalidInput("costate vector needs at least two entries");
  require_finite(nu_hat, "costate vector");
  const double nu0 = nu_hat[0];
  const Vec nu = nu_hat.tail(nu_hat.size() - 1);
  const double spatial_max = nu.cwiseAbs().maxCoeff();
  if (std::abs(nu0) == 0.0 && spatial_max == 0.0)
    throw ZeroCostate("all costate entries vanish");
  if (std::abs(nu0) > eps0 * spatial_max) {
    return ProjectiveCostate::normal(-nu / nu0);
  }
  const int pivot = argmax_abs(nu);
  // Classification snaps the point onto the abnormal locus: nu0 is treated as
  // exactly zero (the eps0 band only absorbs noise, it is not stored).
  return ProjectiveCostate::abnormal(pivot, nu / nu[pivot - 1], 0.0);
}

Vec representative(const ProjectiveCostate& pc) {
  const Eigen::Index n = pc.n();
  Vec rep(n + 1);
  if (pc.is_normal()) {
    rep[0] = -1.0;
    rep.tail(n) = pc.coords();
    return rep;
  }
  rep[0] = pc.alpha0();
  rep.tail(n) = pc.coords();
  if (rep[0] > 0.0) rep = -rep;  // orient so nu0 <= 0
  return rep;
}

double projective_distance(const Vec& rep_a, const Vec& rep_b) {
  if (rep_a.size() != rep_b.size())
    throw InvalidInput("representatives have different dimensions");
  const Vec u = rep_a.normalized();
  const Vec v = rep_b.normalized();
  return std::min((u - v).norm(), (u + v).norm());
}

double projective_distance(const ProjectiveCostate& p, const ProjectiveCostate& q) {
  return projective_distance(representative(p), representative(q));
}

bool projectively_equal(const ProjectiveCostate& p, const ProjectiveCostate& q, double tol) {
  return projective_distance(p, q) <= tol;
}

ProjectiveCostate switch_chart(const ProjectiveCostate& pc, const ChartTarget& target) {
  const Vec rep = representative(pc);
  const Eigen::Index n = pc.n();
  if (target.chart == Chart::Normal) {
    if (rep[0] == 0.0)
      throw ChartSingularity("point lies on the abnormal locus (nu0 = 0)");
    return ProjectiveCostate::normal(-rep.tail(n) / rep[0]);
  }
  if (target.pivot < 1 || target.pivot > n)
    throw InvalidInput("abnormal pivot out of range");
  const double piv = rep[target.pivot];
  if (piv == 0.0)
    throw ChartSingularity("pivot coordinate vanishes (nu_" +
                           std::to_string(target.pivot) + " = 0)");
  return ProjectiveCostate::abnormal(target.pivot, rep.tail(n) / piv, rep[0] / piv);
}

bool hyperplane_contains(const ProjectiveCostate& pc, const Vec& w, double tol) {
  const Vec rep = representative(pc);
  if (w.size() != rep.size())
    throw InvalidInput("tangent vector dimension mismatch");
  return std::abs(rep.dot(w)) <= tol * rep.norm() * w.norm();
}

nlohmann::json to_json(const ProjectiveCostate& pc) {
  nlohmann::json j;
  if (pc.is_normal()) {
    j["chart"] = "normal";
    j["lambda"] = std::vector<double>(pc.coords().begin(), pc.coords().end());
    return j;
  }
  j["chart"] = "abnormal";
  j["pivot"] = pc.pivot();
  j["alpha"] = std::vector<double>(pc.coords().begin(), pc.coords().end());
  if (pc.alpha0() != 0.0) j["alpha0"] = pc.alpha0();
  return j;
}

ProjectiveCostate costate_from_json(const nlohmann::json& j) {
  const std::string chart = j.at("chart").get<std::string>();
  if (chart == "normal") {
    const auto v = j.at("lambda").get<std::vector<double>>();
    return ProjectiveCostate::normal(Eigen::Map<const Vec>(v.data(), v.size()));
  }
  if (chart == "abnormal") {
    const auto v = j.at("alpha").get<std::vector<double>>();
    const int pivot = j.at("pivot").get<int>();
    const double alpha0 = j.value("alpha0", 0.0);
    return ProjectiveCostate::abnormal(pivot, Eigen::Map<const Vec>(v.data(), v.size()), alpha0);
  }
  throw InvalidInput("unknown chart tag '" + chart + "'");
}

}  // namespace cpmp
