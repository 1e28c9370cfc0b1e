#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fklab/model.hpp"

namespace fklab {

enum class EnvelopeKind {
  prop31_lower,       // chain bound, needs the potential
  thm12_lower,        // -((1+e) theta / kappa) |x| log(1+|x|)
  thm12_upper,        // -((1-e) theta / kappa) |x| log(1+|x|)
  ex12_gamma_inf,     // -(1 -/+ e) theta |x| log(1+|x|)
  ex12_gamma_finite,  // -c0 theta^{(g-1)/g} |x| log^{(g-1)/g}(1+|x|)
  prop41_power,       // -c0 |x|^{1+theta6}
  prop41_exp,         // -c0 |x| (1 + |x|^{theta6})
};

EnvelopeKind envelope_kind_from_string(const std::string& s);
std::string to_string(EnvelopeKind k);

struct Envelope {
  EnvelopeKind kind = EnvelopeKind::ex12_gamma_inf;
  bool upper = false;  // side for ex12_* kinds
  double kappa = 1.0;
  double eps = 0.05;
  double theta = 2.0;
  double gamma = 2.0;
  double theta6 = 0.5;
  double c0 = 1.0;
  const PotentialSpec* potential = nullptr;  // prop31_lower only

  void validate() const;
};

// log of the envelope without its multiplicative constant
double eval_envelope(const Envelope& env, double x);

enum class DecayModel { b_free, b_fixed };

struct DecayFit {
  double a = 0, b = 1, c = 0;
  double residual = 0;  // rms over window nodes
  int nodes = 0;
  double lo = 0, hi = 0;
};

// least squares of -log phi = a |x| log^b(1+|x|) + c on lo <= |x| <= hi
DecayFit fit_decay(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, DecayModel model, double b_fixed, double lo,
                   double hi);
// window [R/4, 3R/4]
DecayFit fit_decay(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, double R, DecayModel model,
                   double b_fixed = 1.0);

struct SandwichReport {
  double lower_offset = 0, upper_offset = 0;
  int nodes = 0;
  int violations = 0;
  double violation_fraction = 0;
  double max_violation = 0;  // excess over the band, relative to the envelope increment
  double band = 0.2;
};

SandwichReport envelope_sandwich_report(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, const Envelope& lower,
                                        const Envelope& upper, double R, double band = 0.2);

}  // namespace fklab
