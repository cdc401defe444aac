#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "cpmp/numeric.hpp"

namespace cpmp {

// Chart of projective costate space P(R^{n+1}).  Homogeneous coordinates are
// written (nu0, nu1, ..., nun); nu0 pairs with the cost coordinate.
//
//   Normal       covers { nu0 != 0 },   coordinates  lambda_i = -nu_i / nu0
//   Abnormal(a)  covers { nu_a != 0 },  coordinates  alpha = nu / nu_a  (alpha_a == 1)
//                plus the ratio alpha0 = nu0 / nu_a, which is exactly zero for
//                genuinely abnormal points (nu0 == 0) and is only nonzero for
//                values produced by switch_chart from a normal-chart point.
enum class Chart { Normal, Abnormal };

class ProjectiveCostate {
 public:
  static ProjectiveCostate normal(Vec lambda);
  // alpha is stored with alpha[pivot-1] forced to exactly 1.
  static ProjectiveCostate abnormal(int pivot, Vec alpha, double alpha0 = 0.0);

  Chart chart() const { return chart_; }
  bool is_normal() const { return chart_ == Chart::Normal; }
  int pivot() const { return pivot_; }          // 1-based; 0 when normal
  double alpha0() const { return alpha0_; }     // 0 when normal
  const Vec& coords() const { return coords_; } // lambda or alpha
  Eigen::Index n() const { return coords_.size(); }

  std::string chart_name() const;

 private:
  ProjectiveCostate() = default;
  Chart chart_ = Chart::Normal;
  int pivot_ = 0;
  double alpha0_ = 0.0;
  Vec coords_;
};

// Identifies the chart to convert into.
struct ChartTarget {
  Chart chart = Chart::Normal;
  int pivot = 0;  // required for Chart::Abnormal, 1-based
  static ChartTarget normal() { return {Chart::Normal, 0}; }
  static ChartTarget abnormal(int pivot) { return {Chart::Abnormal, pivot}; }
};

// Default relative threshold separating the normal chart from the abnormal
// locus: |nu0| <= eps0 * max_i |nu_i| classifies the costate as abnormal.
inline constexpr double kChartEps0 = 1e-9;

// Classify a homogeneous costate vector into a chart.  Throws ZeroCostate if
// every entry vanishes.  Classification as abnormal rounds nu0 to exactly
// zero; the threshold exists to absorb numerical noise around the locus.
ProjectiveCostate from_vector(const Vec& nu_hat, double eps0 = kChartEps0);

// Canonical homogeneous representative with nu0 <= 0.
//   Normal(lambda)            -> (-1, lambda)
//   Abnormal(a, alpha)        -> (0, alpha)
//   Abnormal(a, alpha, a0>0)  -> sign-flipped so the leading entry is negative
Vec representative(const ProjectiveCostate& pc);

// True when p and q denote the same projective point: the normalized
// representatives agree up to overall sign within tol.
bool projectively_equal(const ProjectiveCostate& p, const ProjectiveCostate& q, double tol);

// Distance between projective points as min over signs of the difference of
// unit representatives (the quantity projectively_equal compares with tol).
double projective_distance(const ProjectiveCostate& p, const ProjectiveCostate& q);
double projective_distance(const Vec& rep_a, const Vec& rep_b);

// Re-express the point in another chart.  Throws ChartSingularity when the
// target chart does not contain the point (nu0 == 0 for Normal, nu_pivot == 0
// for Abnormal).  Exact rational reparameterization: round trips reproduce
// coordinates to machine precision.
ProjectiveCostate switch_chart(const ProjectiveCostate& pc, const ChartTarget& target);

// Whether the hyperplane annihilated by the costate contains w:
// |<representative, w>| <= tol * |representative| * |w|.
bool hyperplane_contains(const ProjectiveCostate& pc, const Vec& w, double tol);

// JSON serialization.
//   {"chart":"normal","lambda":[...]}
//   {"chart":"abnormal","pivot":a,"alpha":[...]}        (alpha0 omitted when 0)
//   {"chart":"abnormal","pivot":a,"alpha":[...],"alpha0":v}
nlohmann::json to_json(const ProjectiveCostate& pc);
ProjectiveCostate costate_from_json(const nlohmann::json& j);

}  // namespace cpmp
